//! Large-`i₀` laws for the hitting probability and the Brownian continuum limit.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gluing::GluingFunction;
use crate::kernel::{beta_ratio, theta, Kernel};
use crate::walk::{ClassTag, StepDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum J0Dependence {
    LinearInJ0,
    BakedIn(u32),
}

/// `P(i₀, j₀) ∼ constant · (j₀) · ρ^{i₀} / i₀^{power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLaw {
    pub regime: ClassTag,
    pub constant: f64,
    pub rho: f64,
    pub power: f64,
    pub j0_dependence: J0Dependence,
}

impl AsymptoticLaw {
    pub fn predict(&self, i0: u32, j0: u32) -> f64 {
        let j = match self.j0_dependence {
            J0Dependence::LinearInJ0 => j0 as f64,
            J0Dependence::BakedIn(_) => 1.0,
        };
        // ρ^{i₀} in log space
        let i = i0 as f64;
        self.constant * j * (i * self.rho.ln() - self.power * i.ln()).exp()
    }
}

fn require(p: &StepDistribution, expected: &'static str, ok: &[ClassTag]) -> Result<ClassTag> {
    let tag = p.classify().tag;
    if ok.contains(&tag) {
        Ok(tag)
    } else {
        Err(Error::WrongClass { expected, found: tag })
    }
}

/// `A = √(−d″(1)) / (2^{3/2} θ a(1))` for zero-drift walks.
pub fn constant_a(k: &Kernel) -> Result<f64> {
    require(&k.p, "ZeroZero", &[ClassTag::ZeroZero])?;
    let d2 = k.alg.d.derivative_at(2, 1.0);
    let a1 = k.alg.a.eval(1.0);
    let v = (-d2).sqrt() / (2f64.powf(1.5) * theta(&k.p)? * a1);
    positive("A", v)
}

/// `D = √(d′(1)) / (2√π a(1))` for walks with zero vertical drift only.
pub fn constant_d(k: &Kernel) -> Result<f64> {
    require(&k.p, "NegZero", &[ClassTag::NegZero])?;
    let d1 = k.alg.d.derivative_at(1, 1.0);
    let a1 = k.alg.a.eval(1.0);
    positive("D", d1.sqrt() / (2.0 * PI.sqrt() * a1))
}

/// The geometric rate `ρ = x₂`.
pub fn rho(k: &Kernel) -> Result<f64> {
    require(&k.p, "NegNeg", &[ClassTag::NegNeg, ClassTag::H2Prime])?;
    let r = k.bp.x2();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Numerical(format!("rho = {r} outside (0,1)")));
    }
    Ok(r)
}

/// `β₀ = (w(0) − w(1)) / lim_{t→x₂} (t − x₂)w(t)`.
pub fn beta0(g: &GluingFunction) -> Result<f64> {
    let lim = g.pole_limit_at_x2()?;
    let b = (g.eval_real(0.0)? - g.eval_real(1.0)?) / lim;
    if b == 0.0 || !b.is_finite() {
        return Err(Error::Numerical(format!("beta0 = {b}")));
    }
    Ok(b)
}

/// `B(j₀) = −μ_{j₀}(x₂)·√(d′(x₂))·β₀·x₂^{3/2} / (2√π)`.
///
/// `d′(x₂) > 0` since `d` changes sign from negative to positive at `x₂`,
/// and `β₀ < 0`; both are checked.
pub fn constant_b(k: &Kernel, g: &GluingFunction, j0: u32) -> Result<f64> {
    require(&k.p, "NegNeg", &[ClassTag::NegNeg])?;
    if j0 == 0 {
        return Err(Error::validation("j0", "must be at least 1"));
    }
    let x2 = k.bp.x2();
    let dd = k.alg.d.derivative_at(1, x2);
    if dd <= 0.0 {
        return Err(Error::Numerical(format!("d'(x2) = {dd} is not positive")));
    }
    let b0 = beta0(g)?;
    if b0 >= 0.0 {
        return Err(Error::Numerical(format!("beta0 = {b0} is not negative")));
    }
    let v = -k.mu_at_x2(j0) * dd.sqrt() * b0 * x2.powf(1.5) / (2.0 * PI.sqrt());
    positive("B", v)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("constant {name} = {v} is not positive")))
    }
}

/// The law for the walk's class. `g` is needed only for `NegNeg`.
pub fn law(k: &Kernel, g: Option<&GluingFunction>, j0: u32) -> Result<AsymptoticLaw> {
    let tag = k.p.classify().tag;
    let lin = J0Dependence::LinearInJ0;
    match tag {
        ClassTag::ZeroZero => {
            Ok(AsymptoticLaw { regime: tag, constant: constant_a(k)?, rho: 1.0, power: 1.0, j0_dependence: lin })
        }
        ClassTag::NegZero => {
            Ok(AsymptoticLaw { regime: tag, constant: constant_d(k)?, rho: 1.0, power: 0.5, j0_dependence: lin })
        }
        ClassTag::NegNeg => {
            let g = g.ok_or(Error::NoExplicitGluing)?;
            Ok(AsymptoticLaw {
                regime: tag,
                constant: constant_b(k, g, j0)?,
                rho: rho(k)?,
                power: 1.5,
                j0_dependence: J0Dependence::BakedIn(j0),
            })
        }
        _ => Err(Error::Unsupported(format!("no asymptotic law is implemented for class {tag}"))),
    }
}

pub fn asymptotic_probability(k: &Kernel, g: Option<&GluingFunction>, i0: u32, j0: u32) -> Result<f64> {
    if i0 == 0 || j0 == 0 {
        return Err(Error::validation("start", "i0, j0 >= 1 required"));
    }
    Ok(law(k, g, j0)?.predict(i0, j0))
}

/// Brownian limit `(1/θ)·arctan(sin θ·y / (βx + cos θ·y))`, taken as an
/// angle in `(0, θ)`.
pub fn continuum_probability(p: &StepDistribution, x: f64, y: f64) -> Result<f64> {
    require(p, "ZeroZero", &[ClassTag::ZeroZero])?;
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::validation("x, y", "must be positive and finite"));
    }
    let th = theta(p)?;
    let beta = beta_ratio(p)?;
    Ok((th.sin() * y).atan2(beta * x + th.cos() * y) / th)
}

/// `sin θ / (βθ)`.
pub fn continuum_constant(p: &StepDistribution) -> Result<f64> {
    require(p, "ZeroZero", &[ClassTag::ZeroZero])?;
    let th = theta(p)?;
    positive("A", th.sin() / (beta_ratio(p)? * th))
}

/// Random zero-drift walks: eight uniform weights, normalized, then averaged
/// with their reflection through the origin.
pub fn zero_drift_ensemble(n: usize, seed: u64) -> Vec<StepDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut w = [0.0; 8];
        for v in &mut w {
            *v = rng.random::<f64>();
        }
        let s: f64 = w.iter().sum();
        let Ok(p) = StepDistribution::from_array(w.map(|v| v / s)) else { continue };
        let rev = p.reversed();
        let sym: [f64; 8] = std::array::from_fn(|k| 0.5 * (p.as_array()[k] + rev.as_array()[k]));
        if let Ok(q) = StepDistribution::from_array(sym) {
            if q.classify().tag == ClassTag::ZeroZero {
                out.push(q);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::preset;

    fn kernel(name: &str, params: &[f64]) -> Kernel {
        Kernel::new(&preset(name, params).unwrap()).unwrap()
    }

    #[test]
    fn zero_drift_constants() {
        let a = constant_a(&kernel("voter", &[])).unwrap();
        assert!((a - 3.0 * 3f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
        assert!((constant_a(&kernel("simple", &[])).unwrap() - 2.0 / PI).abs() < 1e-12);
        for (l, n) in [(0.3, 0.2), (0.1, 0.3), (0.25, 0.25)] {
            let k = kernel("nucleosome", &[l, n]);
            let r: f64 = n / (n + l);
            let want = (1.0 - r * r).sqrt() / r.acos();
            assert!((constant_a(&k).unwrap() - want).abs() < 1e-12, "{l} {n}");
        }
    }

    #[test]
    fn tandem_d() {
        for (l, n) in [(0.2, 0.4), (0.1, 0.45), (0.3, 0.35)] {
            let d = constant_d(&kernel("tandem", &[l, n])).unwrap();
            assert!((d - ((n - l) / (PI * n)).sqrt()).abs() < 1e-12);
        }
        let d = constant_d(&kernel("tandem", &[0.2, 0.4])).unwrap();
        assert!((d - 0.39894).abs() < 1e-5);
        let near = constant_d(&kernel("tandem", &[1.0 / 3.0 - 1e-6, 1.0 / 3.0 + 5e-7])).unwrap();
        assert!(near < 1e-2);
    }

    #[test]
    fn wrong_class_rejected() {
        let k = kernel("voter", &[]);
        assert!(matches!(constant_d(&k), Err(Error::WrongClass { .. })));
        assert!(matches!(rho(&k), Err(Error::WrongClass { .. })));
        let t = kernel("tandem", &[0.2, 0.4]);
        assert!(constant_a(&t).unwrap_err().is_unsupported());
        assert!(continuum_probability(&t.p, 1.0, 1.0).is_err());
    }

    #[test]
    fn neg_neg_constants() {
        let k = kernel("asym_simple", &[0.2, 0.3, 0.2, 0.3]);
        let g = GluingFunction::build(&k, ClassTag::NegNeg).unwrap();
        let r = rho(&k).unwrap();
        assert!((r - 0.91990).abs() < 1e-5);
        let b1 = constant_b(&k, &g, 1).unwrap();
        let b2 = constant_b(&k, &g, 2).unwrap();
        let x2 = k.bp.x2();
        let ratio = 2.0 * (k.alg.c.eval(x2) / k.alg.a.eval(x2)).sqrt();
        assert!((b2 / b1 - ratio).abs() < 1e-12);
        let bp = &k.bp;
        let x4 = bp.x[3].finite().unwrap();
        let want = (g.eval_real(0.0).unwrap() - g.eval_real(1.0).unwrap()) * (bp.x2() - bp.x3())
            / ((bp.x2() - bp.x1()) * (bp.x2() - x4));
        assert!((beta0(&g).unwrap() - want).abs() < 1e-12 * want.abs());
        let p = asymptotic_probability(&k, Some(&g), 60, 1).unwrap();
        assert!((p - b1 * r.powi(60) / 60f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn predictions() {
        let k = kernel("voter", &[]);
        let v = asymptotic_probability(&k, None, 100, 1).unwrap();
        assert!((v - 3.0 * 3f64.sqrt() / (200.0 * PI)).abs() < 1e-15);
        let t = kernel("tandem", &[0.2, 0.4]);
        let v = asymptotic_probability(&t, None, 400, 1).unwrap();
        assert!((v - constant_d(&t).unwrap() / 20.0).abs() < 1e-15);
    }

    #[test]
    fn continuum() {
        let s = preset("simple", &[]).unwrap();
        let v = preset("voter", &[]).unwrap();
        assert!((continuum_probability(&s, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((continuum_probability(&v, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(continuum_probability(&v, 1.0, 1e-12).unwrap() < 1e-11);
        assert!((continuum_constant(&v).unwrap() - 3.0 * 3f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
        assert!((continuum_constant(&s).unwrap() - 2.0 / PI).abs() < 1e-12);
        let n = preset("nucleosome", &[0.25, 0.25]).unwrap();
        assert!((continuum_constant(&n).unwrap() - 3.0 * 3f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn ensemble_identities() {
        for p in zero_drift_ensemble(200, 7) {
            let k = Kernel::new(&p).unwrap();
            let a = constant_a(&k).unwrap();
            let c = continuum_constant(&p).unwrap();
            assert!((a - c).abs() < 1e-12, "{p}: {a} vs {c}");
            let alg = &k.alg;
            let sxy: f64 = p.entries().map(|((i, j), q)| (i * j) as f64 * q).sum();
            let lhs = -alg.d.derivative_at(2, 1.0) / 2.0;
            let rhs = 4.0 * alg.a.eval(1.0) * alg.at.eval(1.0) - sxy * sxy;
            assert!((lhs - rhs).abs() < 1e-12);
            assert!((alg.a.eval(1.0) - alg.c.eval(1.0)).abs() < 1e-15);
            assert!((alg.at.eval(1.0) - alg.ct.eval(1.0)).abs() < 1e-15);
            let (a1, b1, c1) = (alg.a.eval(1.0), alg.b.eval(1.0), alg.c.eval(1.0));
            assert!((-b1 - 2.0 * (a1 * c1).sqrt()).abs() < 1e-12);
        }
    }
}
