//! Conformal gluing functions `w` for the explicit cases: zero drift,
//! walks supported on the four axis steps, tandem-type walks, and the
//! unit-disc example.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{self, Approach, Kernel, Root};
use crate::poly::Poly;
use crate::walk::{ClassTag, StepDistribution, DRIFT_TOL};

type C = Complex64;

const AXIS_STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const TANDEM_STEPS: [(i32, i32); 3] = [(-1, 1), (1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GluingKind {
    ZeroDriftExplicit,
    Group4Rational,
    TandemRational,
    UnitDisc,
}

#[derive(Debug, Clone)]
pub struct GluingFunction {
    pub kind: GluingKind,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    ZeroDrift(ZeroDrift),
    Rational(Rational),
}

/// `w(t) = sin²(κ·arccos u)`, `u = g(t)^{-1/2}`, `κ = π/θ`, with
/// `g(t) = 1/3 − 2f(t)/d″(1)` kept in the factored form `k(1−t)/(t−x₄)`
/// (or `k(1−t)` when `x₄ = ∞`).
#[derive(Debug, Clone)]
struct ZeroDrift {
    kappa: f64,
    k: f64,
    x4: Root,
    #[cfg_attr(not(test), allow(dead_code))]
    d: Poly,
}

/// `w(t) = N(t) / D(t)` with `D(t) = (t − x₂)^m · D̃(t)`.
#[derive(Debug, Clone)]
struct Rational {
    num: Poly,
    den: Poly,
    den_rest: Poly,
    x2: f64,
    order: u32,
}

impl Rational {
    fn from_roots(num_roots: &[f64], den_roots: &[f64], x2: f64) -> Self {
        let lin = |r: f64| Poly::new(vec![-r, 1.0]);
        let prod = |rs: &[f64]| rs.iter().fold(Poly::new(vec![1.0]), |acc, &r| acc.mul(&lin(r)));
        let rest: Vec<f64> = den_roots.iter().copied().filter(|&r| r != x2).collect();
        let order = (den_roots.len() - rest.len()) as u32;
        Rational { num: prod(num_roots), den: prod(den_roots), den_rest: prod(&rest), x2, order }
    }
}

impl GluingFunction {
    /// Picks the construction for a walk: the zero-drift formula for any
    /// zero-drift walk, otherwise a rational form matched on the step support.
    pub fn build(k: &Kernel, class: ClassTag) -> Result<Self> {
        match class {
            ClassTag::ZeroZero => Self::zero_drift(k),
            ClassTag::NegNeg | ClassTag::NegZero => {
                if k.p.support_within(&AXIS_STEPS) {
                    Self::group4(k)
                } else if k.p.support_within(&TANDEM_STEPS) {
                    Self::tandem(k)
                } else {
                    Err(Error::NoExplicitGluing)
                }
            }
            _ => Err(Error::NoExplicitGluing),
        }
    }

    pub fn zero_drift(k: &Kernel) -> Result<Self> {
        let p = &k.p;
        let drift = p.drift();
        if drift.mx.abs() > DRIFT_TOL || drift.my.abs() > DRIFT_TOL {
            return Err(Error::WrongClass { expected: "ZeroZero", found: p.classify().tag });
        }
        let d = k.alg.d.clone();
        let d2 = d.derivative_at(2, 1.0);
        if d2 >= 0.0 {
            return Err(Error::Numerical(format!("d''(1) = {d2} is not negative")));
        }
        let x4 = k.bp.x[3];
        let kk = match x4 {
            Root::Finite(x4) => -2.0 * d.derivative_at(1, x4) / (d2 * (1.0 - x4)),
            Root::Infinite => d.derivative_at(3, 0.0) / (3.0 * d2),
        };
        let kappa = kernel::kappa(p)?;
        Ok(GluingFunction { kind: GluingKind::ZeroDriftExplicit, repr: Repr::ZeroDrift(ZeroDrift { kappa, k: kk, x4, d }) })
    }

    /// `w(t) = (t−x₁)(t−x₄) / ((t−x₂)(t−x₃))`.
    pub fn group4(k: &Kernel) -> Result<Self> {
        if !k.p.support_within(&AXIS_STEPS) {
            return Err(Error::Unsupported("group-4 form needs support on the axis steps".into()));
        }
        let bp = &k.bp;
        let mut num = vec![bp.x1()];
        if let Root::Finite(x4) = bp.x[3] {
            num.push(x4);
        }
        let r = Rational::from_roots(&num, &[bp.x2(), bp.x3()], bp.x2());
        Ok(GluingFunction { kind: GluingKind::Group4Rational, repr: Repr::Rational(r) })
    }

    /// `w(t) = t / ((t−x₂)(t−r)²)` with `r = √(p₋₁,₁ p₀,₋₁ / (p₁,₀² x₂))`.
    pub fn tandem(k: &Kernel) -> Result<Self> {
        if !k.p.support_within(&TANDEM_STEPS) {
            return Err(Error::Unsupported("tandem form needs support on (-1,1), (1,0), (0,-1)".into()));
        }
        let p = &k.p;
        let x2 = k.bp.x2();
        let r = tandem_r(p, x2);
        if !r.is_finite() || r == x2 {
            return Err(Error::Numerical(format!("degenerate tandem gluing, r = {r}")));
        }
        let rat = Rational::from_roots(&[0.0], &[x2, r, r], x2);
        Ok(GluingFunction { kind: GluingKind::TandemRational, repr: Repr::Rational(rat) })
    }

    /// `w(t) = t/(t−1)²`, the gluing function of the unit disc.
    pub fn unit_disc() -> Self {
        let rat = Rational::from_roots(&[0.0], &[1.0, 1.0], 1.0);
        GluingFunction { kind: GluingKind::UnitDisc, repr: Repr::Rational(rat) }
    }

    /// Location and order of the pole on the positive real axis, which for
    /// walk gluings sits at `x₂`.
    pub fn pole(&self) -> (f64, f64) {
        match &self.repr {
            Repr::ZeroDrift(z) => (1.0, z.kappa),
            Repr::Rational(r) => (r.x2, r.order as f64),
        }
    }

    /// `κ = π/θ` for the zero-drift construction.
    pub fn kappa(&self) -> Option<f64> {
        match &self.repr {
            Repr::ZeroDrift(z) => Some(z.kappa),
            Repr::Rational(_) => None,
        }
    }

    pub fn eval(&self, t: C) -> Result<C> {
        match &self.repr {
            Repr::ZeroDrift(z) => z.eval(t),
            Repr::Rational(r) => {
                let den = r.den.eval_c(t);
                if den.norm() == 0.0 {
                    return Err(Error::Pole("w"));
                }
                Ok(r.num.eval_c(t) / den)
            }
        }
    }

    pub fn eval_real(&self, t: f64) -> Result<f64> {
        Ok(self.eval(C::new(t, 0.0))?.re)
    }

    pub fn derivative(&self, t: C) -> Result<C> {
        match &self.repr {
            Repr::ZeroDrift(z) => z.derivative(t),
            Repr::Rational(r) => {
                let den = r.den.eval_c(t);
                if den.norm() == 0.0 {
                    return Err(Error::Pole("w'"));
                }
                let top = r.num.derivative().eval_c(t) * den - r.num.eval_c(t) * r.den.derivative().eval_c(t);
                Ok(top / (den * den))
            }
        }
    }

    /// `w′(t) / (w(t) − c)`.
    pub fn log_derivative(&self, t: C, c: C) -> Result<C> {
        match &self.repr {
            Repr::ZeroDrift(z) => z.log_derivative(t, c, false),
            Repr::Rational(r) => {
                let (n, dn) = (r.num.eval_c(t), r.num.derivative().eval_c(t));
                let (d, dd) = (r.den.eval_c(t), r.den.derivative().eval_c(t));
                let bottom = d * (n - c * d);
                if bottom.norm() == 0.0 {
                    return Err(Error::Pole("w'/(w-c)"));
                }
                Ok((dn * d - n * dd) / bottom)
            }
        }
    }

    /// `(x₂ − t)·w′(t)/(w(t) − c)`, bounded at the pole `x₂` where it equals
    /// the pole order.
    pub fn scaled_log_derivative(&self, t: C, c: C) -> Result<C> {
        match &self.repr {
            Repr::ZeroDrift(z) => z.log_derivative(t, c, true),
            Repr::Rational(r) => {
                let m = r.order as f64;
                let s = t - r.x2;
                let (n, dn) = (r.num.eval_c(t), r.num.derivative().eval_c(t));
                let (q, dq) = (r.den_rest.eval_c(t), r.den_rest.derivative().eval_c(t));
                let d = r.den.eval_c(t);
                let bottom = q * (n - c * d);
                if bottom.norm() == 0.0 {
                    return Err(Error::Pole("w'/(w-c)"));
                }
                Ok(-(dn * s * q - n * (q * m + s * dq)) / bottom)
            }
        }
    }

    /// `lim_{t→x₂} (t − x₂) w(t)` for a simple pole at `x₂`.
    pub fn pole_limit_at_x2(&self) -> Result<f64> {
        match &self.repr {
            Repr::Rational(r) if r.order == 1 && self.kind != GluingKind::UnitDisc => {
                Ok(r.num.eval(r.x2) / r.den_rest.eval(r.x2))
            }
            _ => Err(Error::Unsupported(format!("{:?} has no simple pole at x2", self.kind))),
        }
    }

    /// Pole order read off numerically: the slope of `ln|w|` against
    /// `ln(x₂ − t)` between `x₂ − 1e-6` and `x₂ − 1e-7`.
    pub fn pole_exponent_estimate(&self) -> Result<f64> {
        let (x2, _) = self.pole();
        let (h1, h2) = (1e-6, 1e-7);
        let w1 = self.eval(C::new(x2 - h1, 0.0))?.norm();
        let w2 = self.eval(C::new(x2 - h2, 0.0))?.norm();
        Ok(-(w2.ln() - w1.ln()) / (h2.ln() - h1.ln()))
    }

    /// Checks `w(X₀(y)) = w(X₁(y))` at `n` Chebyshev points of `[y₁, y₂]`.
    pub fn verify(&self, k: &Kernel, n: usize) -> Result<GluingReport> {
        let (y1, y2) = (k.bp.y1(), k.bp.y2());
        let mut rep = GluingReport { samples: n, max_mismatch: 0.0, max_abs_mismatch: 0.0, argmax_y: f64::NAN };
        for j in 0..n {
            let y = 0.5 * (y1 + y2) + 0.5 * (y2 - y1) * ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos();
            let (x0, x1) = k.x_pair(C::new(y, 0.0), Approach::FromAbove)?;
            let w0 = self.eval(x0)?;
            let w1 = self.eval(x1)?;
            let abs = (w0 - w1).norm();
            let rel = abs / (1.0 + w0.norm());
            rep.max_abs_mismatch = rep.max_abs_mismatch.max(abs);
            if rel > rep.max_mismatch || rep.argmax_y.is_nan() {
                rep.max_mismatch = rel;
                rep.argmax_y = y;
            }
        }
        Ok(rep)
    }
}

pub(crate) fn tandem_r(p: &StepDistribution, x2: f64) -> f64 {
    (p.p(-1, 1) * p.p(0, -1) / (p.p(1, 0).powi(2) * x2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GluingReport {
    pub samples: usize,
    /// `max |w(X₀) − w(X₁)| / (1 + |w(X₀)|)`.
    pub max_mismatch: f64,
    pub max_abs_mismatch: f64,
    pub argmax_y: f64,
}

impl ZeroDrift {
    fn g(&self, t: C) -> C {
        let one_minus = -t + 1.0;
        match self.x4 {
            Root::Finite(x4) => one_minus * self.k / (t - x4),
            Root::Infinite => one_minus * self.k,
        }
    }

    /// `(1 − t)·g′/g`.
    fn scaled_dlog_g(&self, t: C) -> C {
        match self.x4 {
            Root::Finite(x4) => -(-t + 1.0) / (t - x4) - 1.0,
            Root::Infinite => C::new(-1.0, 0.0),
        }
    }

    /// `u`, `s = ±√(u²−1)` with `|u + s| ≥ 1`, and `ℓ = ln(u + s)`, so
    /// `u = cosh ℓ`, `s = sinh ℓ` and `w = −sinh²(κℓ)`.
    fn angle(&self, t: C) -> Result<(C, C, C)> {
        let g = self.g(t);
        if g.norm() == 0.0 {
            return Err(Error::Pole("w"));
        }
        let u = g.sqrt().inv();
        let mut s = (u * u - 1.0).sqrt();
        let (p, m) = ((u + s).norm(), (u - s).norm());
        if m > p || (m == p && s.im < 0.0) {
            s = -s;
        }
        Ok((u, s, (u + s).ln()))
    }

    fn eval(&self, t: C) -> Result<C> {
        let (_, _, l) = self.angle(t)?;
        let sh = (l * self.kappa).sinh();
        Ok(-sh * sh)
    }

    /// `sinh(2κℓ)/sinh(ℓ)`, continuous at `ℓ = 0`.
    fn ratio(&self, l: C) -> C {
        let k = self.kappa;
        if l.norm() < 1e-4 {
            let l2 = l * l;
            (l2 * ((4.0 * k * k - 1.0) / 6.0) + 1.0) * (2.0 * k)
        } else {
            (l * (2.0 * k)).sinh() / l.sinh()
        }
    }

    fn derivative(&self, t: C) -> Result<C> {
        let (u, _, l) = self.angle(t)?;
        let one_minus = -t + 1.0;
        if one_minus.norm() == 0.0 {
            return Err(Error::Pole("w'"));
        }
        // u′ = −½ u g′/g
        let du = -u * 0.5 * self.scaled_dlog_g(t) / one_minus;
        Ok(-self.ratio(l) * du * self.kappa)
    }

    /// `w′/(w − c)`, optionally multiplied by `(1 − t)`.
    fn log_derivative(&self, t: C, c: C, scaled: bool) -> Result<C> {
        let one_minus = -t + 1.0;
        if one_minus.norm() == 0.0 {
            if scaled {
                return Ok(C::new(self.kappa, 0.0));
            }
            return Err(Error::Pole("w'/(w-c)"));
        }
        let (u, s, l) = self.angle(t)?;
        // (1 − t)u′
        let du_scaled = -u * 0.5 * self.scaled_dlog_g(t);
        let factor = if scaled { C::new(1.0, 0.0) } else { one_minus.inv() };
        let kl = l * self.kappa;
        if kl.re > 1.0 {
            // ratio form, stable for large |w|
            let e = (-kl * 2.0).exp();
            let coth = (e + 1.0) / (-e + 1.0);
            let c_over_w = -c * e * 4.0 / ((-e + 1.0) * (-e + 1.0));
            let dlogw = coth * (2.0 * self.kappa) * du_scaled / s;
            let den = -c_over_w + 1.0;
            if den.norm() == 0.0 {
                return Err(Error::Pole("w'/(w-c)"));
            }
            Ok(dlogw / den * factor)
        } else {
            let sh = kl.sinh();
            let w = -sh * sh;
            let dw = -self.ratio(l) * du_scaled * self.kappa;
            let den = w - c;
            if den.norm() == 0.0 {
                return Err(Error::Pole("w'/(w-c)"));
            }
            Ok(dw / den * factor)
        }
    }

    /// `g` assembled literally from `f(t)`, for cross-checking the factored form.
    #[cfg(test)]
    fn g_literal(&self, t: C) -> C {
        let d2 = self.d.derivative_at(2, 1.0);
        let f = match self.x4 {
            Root::Finite(x4) => {
                C::new(self.d.derivative_at(2, x4) / 6.0, 0.0) + self.d.derivative_at(1, x4) / (t - x4)
            }
            Root::Infinite => t * (self.d.derivative_at(3, 0.0) / 6.0) + self.d.derivative_at(2, 0.0) / 6.0,
        };
        -f * (2.0 / d2) + 1.0 / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::preset;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn kernel(name: &str, params: &[f64]) -> (Kernel, ClassTag) {
        let p = preset(name, params).unwrap();
        (Kernel::new(&p).unwrap(), p.classify().tag)
    }

    fn build(name: &str, params: &[f64]) -> (Kernel, GluingFunction) {
        let (k, tag) = kernel(name, params);
        let g = GluingFunction::build(&k, tag).unwrap();
        (k, g)
    }

    #[test]
    fn kind_selection() {
        assert_eq!(build("simple", &[]).1.kind, GluingKind::ZeroDriftExplicit);
        assert_eq!(build("voter", &[]).1.kind, GluingKind::ZeroDriftExplicit);
        assert_eq!(build("asym_simple", &[0.2, 0.3, 0.2, 0.3]).1.kind, GluingKind::Group4Rational);
        assert_eq!(build("tandem", &[0.2, 0.4]).1.kind, GluingKind::TandemRational);
        let p = StepDistribution::from_array([0.05, 0.1, 0.1, 0.2, 0.1, 0.2, 0.1, 0.15]).unwrap();
        assert_eq!(p.classify().tag, ClassTag::NegNeg);
        let k = Kernel::new(&p).unwrap();
        assert_eq!(GluingFunction::build(&k, ClassTag::NegNeg).unwrap_err(), Error::NoExplicitGluing);
    }

    #[test]
    fn pole_exponent_matches_kappa() {
        for name in ["voter", "simple"] {
            let (_, g) = build(name, &[]);
            let est = g.pole_exponent_estimate().unwrap();
            let kappa = g.kappa().unwrap();
            assert!((est / kappa - 1.0).abs() < 1e-3, "{name}: {est} vs {kappa}");
        }
        let (_, g) = build("tandem", &[0.2, 0.4]);
        assert!((g.pole_exponent_estimate().unwrap() - g.pole().1).abs() < 1e-3);
    }

    #[test]
    fn unit_disc_values() {
        let g = GluingFunction::unit_disc();
        let w = g.eval(c(0.0, 1.0)).unwrap();
        assert!((w - c(-0.5, 0.0)).norm() < 1e-16);
        // on the unit circle w(e^{iφ}) = −1/(4 sin²(φ/2))
        for &phi in &[0.3, 1.0, 2.5] {
            let w = g.eval(C::from_polar(1.0, phi)).unwrap();
            assert!((w.re + 1.0 / (4.0 * (phi / 2.0).sin().powi(2))).abs() < 1e-14 && w.im.abs() < 1e-14);
        }
        assert!(matches!(g.eval(c(1.0, 0.0)), Err(Error::Pole(_))));
        assert!(g.pole_limit_at_x2().is_err());
    }

    #[test]
    fn group4_values_and_pole_limit() {
        let (k, g) = build("asym_simple", &[0.2, 0.3, 0.2, 0.3]);
        let x: Vec<f64> = k.bp.x.iter().map(|r| r.finite().unwrap()).collect();
        let w0 = g.eval_real(0.0).unwrap();
        assert!((w0 - x[0] * x[3] / (x[1] * x[2])).abs() < 1e-15);
        let lim = g.pole_limit_at_x2().unwrap();
        assert!((lim - (x[1] - x[0]) * (x[1] - x[3]) / (x[1] - x[2])).abs() < 1e-13);
        assert!((lim - 6.3409).abs() < 1e-3);
        // finite w(0), w(1) for the negative-drift group-4 walk
        assert!(g.eval_real(1.0).unwrap().is_finite());
    }

    #[test]
    fn tandem_pole_limit() {
        let (k, g) = build("tandem", &[0.2, 0.4]);
        let x2 = k.bp.x2();
        let r = tandem_r(&k.p, x2);
        assert!((r - 2.0).abs() < 1e-14);
        assert!((g.pole_limit_at_x2().unwrap() - x2 / (x2 - r).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn zero_drift_literal_and_factored_agree() {
        for (name, params) in [("voter", vec![]), ("simple", vec![]), ("nucleosome", vec![1.0, 2.0])] {
            let (_, g) = build(name, &params);
            let Repr::ZeroDrift(z) = &g.repr else { panic!() };
            for &t in &[c(0.0, 0.0), c(0.3, 0.0), c(-0.2, 0.4), c(0.9, -0.1)] {
                let a = z.g(t);
                let b = z.g_literal(t);
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{name} {t}: {a} {b}");
            }
        }
    }

    #[test]
    fn zero_drift_known_values() {
        // w(0) = 1/2 for both symmetric presets
        for name in ["voter", "simple"] {
            let (_, g) = build(name, &[]);
            assert!((g.eval_real(0.0).unwrap() - 0.5).abs() < 1e-13, "{name}");
        }
    }

    #[test]
    fn zero_drift_real_on_segment() {
        for (name, params) in [("voter", vec![]), ("simple", vec![]), ("nucleosome", vec![2.0, 1.0])] {
            let (k, g) = build(name, &params);
            let x1 = k.bp.x1();
            for n in 1..200 {
                let t = x1 + (1.0 - x1) * n as f64 / 200.0;
                let w = g.eval(c(t, 0.0)).unwrap();
                assert!(w.im.abs() < 1e-10 * (1.0 + w.re.abs()), "{name} t={t} w={w}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let cases = [("voter", vec![]), ("simple", vec![]), ("asym_simple", vec![0.2, 0.3, 0.2, 0.3]), ("tandem", vec![0.2, 0.4])];
        for (name, params) in cases {
            let (_, g) = build(name, &params);
            for &t in &[c(0.1, 0.0), c(0.5, 0.2), c(-0.3, -0.1), c(0.8, 0.0), c(0.95, 0.01)] {
                let h = 1e-6;
                let fd = (g.eval(t + h).unwrap() - g.eval(t - h).unwrap()) / (2.0 * h);
                let an = g.derivative(t).unwrap();
                assert!((fd - an).norm() < 1e-6 * an.norm().max(1.0), "{name} {t}: {fd} {an}");
                let w = g.eval(t).unwrap();
                let w0 = g.eval(c(0.0, 0.0)).unwrap();
                let ld = g.log_derivative(t, w0).unwrap();
                assert!((ld - an / (w - w0)).norm() < 1e-9 * ld.norm().max(1.0), "{name} {t}");
                let (x2, _) = g.pole();
                let sld = g.scaled_log_derivative(t, w0).unwrap();
                assert!((sld - ld * (-t + x2)).norm() < 1e-9 * sld.norm().max(1.0), "{name} {t}");
            }
        }
    }

    #[test]
    fn scaled_log_derivative_tends_to_pole_order() {
        for (name, params) in [("voter", vec![]), ("nucleosome", vec![1.0, 2.0]), ("asym_simple", vec![0.2, 0.3, 0.2, 0.3]), ("tandem", vec![0.2, 0.4])] {
            let (_, g) = build(name, &params);
            let (x2, order) = g.pole();
            let w0 = g.eval(c(0.0, 0.0)).unwrap();
            for &eps in &[1e-6, 1e-9, 1e-12] {
                let v = g.scaled_log_derivative(c(x2 - eps, 0.0), w0).unwrap();
                assert!((v.re - order).abs() < 1e-3, "{name} eps={eps} {v}");
            }
            let v = g.scaled_log_derivative(c(x2, 0.0), w0).unwrap();
            assert!((v.re - order).abs() < 1e-12);
        }
    }

    #[test]
    fn gluing_condition_holds() {
        for (name, params) in [("voter", vec![]), ("simple", vec![]), ("asym_simple", vec![0.2, 0.3, 0.2, 0.3]), ("tandem", vec![0.2, 0.4])] {
            let (k, g) = build(name, &params);
            let rep = g.verify(&k, 64).unwrap();
            assert!(rep.max_mismatch < 1e-8, "{name}: {rep:?}");
        }
    }

    #[test]
    fn simple_walk_group4_form_also_glues() {
        let (k, _) = kernel("simple", &[]);
        let g = GluingFunction::group4(&k).unwrap();
        assert_eq!(g.pole(), (1.0, 2.0));
        assert!(g.verify(&k, 64).unwrap().max_mismatch < 1e-8);
    }
}
