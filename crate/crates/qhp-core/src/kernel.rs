//! Algebra of the kernel `K(x,y) = xy[Σ p_ij x^i y^j − 1]`: section
//! polynomials, discriminants, branch points, branches, `μ_j` and the
//! angle/ratio of the continuum limit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{self, Poly};
use crate::walk::{StepDistribution, DRIFT_TOL};

type C = Complex64;

/// `K(x,y)` by direct summation over the steps.
pub fn kernel_eval(p: &StepDistribution, x: C, y: C) -> C {
    let mut s = -x * y;
    for ((di, dj), q) in p.entries() {
        if q != 0.0 {
            s += x.powi(di + 1) * y.powi(dj + 1) * q;
        }
    }
    s
}

/// `K(x,y) = a(x)y² + b(x)y + c(x) = ã(y)x² + b̃(y)x + c̃(y)`, with the discriminants
/// `d = b² − 4ac` and `d̃ = b̃² − 4ãc̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAlgebra {
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
    pub at: Poly,
    pub bt: Poly,
    pub ct: Poly,
    pub d: Poly,
    pub dt: Poly,
}

impl KernelAlgebra {
    pub fn new(p: &StepDistribution) -> Self {
        let q = |i, j| p.p(i, j);
        let a = Poly::new(vec![q(-1, 1), q(0, 1), q(1, 1)]);
        let b = Poly::new(vec![q(-1, 0), -1.0, q(1, 0)]);
        let c = Poly::new(vec![q(-1, -1), q(0, -1), q(1, -1)]);
        let at = Poly::new(vec![q(1, -1), q(1, 0), q(1, 1)]);
        let bt = Poly::new(vec![q(0, -1), -1.0, q(0, 1)]);
        let ct = Poly::new(vec![q(-1, -1), q(-1, 0), q(-1, 1)]);
        let d = b.mul(&b).sub(&a.mul(&c).scale(4.0));
        let dt = bt.mul(&bt).sub(&at.mul(&ct).scale(4.0));
        KernelAlgebra { a, b, c, at, bt, ct, d, dt }
    }
}

/// A branch point: a real root or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Root {
    Finite(f64),
    Infinite,
}

impl Root {
    pub fn finite(self) -> Option<f64> {
        match self {
            Root::Finite(v) => Some(v),
            Root::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Root::Infinite)
    }

    fn abs(self) -> f64 {
        self.finite().map_or(f64::INFINITY, f64::abs)
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Root::Finite(v) => write!(f, "{v:.16e}"),
            Root::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoints {
    pub x: [Root; 4],
    pub y: [Root; 4],
}

impl BranchPoints {
    pub fn x1(&self) -> f64 {
        self.x[0].finite().unwrap()
    }
    pub fn x2(&self) -> f64 {
        self.x[1].finite().unwrap()
    }
    pub fn x3(&self) -> f64 {
        self.x[2].finite().unwrap()
    }
    pub fn y1(&self) -> f64 {
        self.y[0].finite().unwrap()
    }
    pub fn y2(&self) -> f64 {
        self.y[1].finite().unwrap()
    }
}

/// A discriminant stored as `lead · Π (x − rᵢ)`, which keeps full relative
/// accuracy next to its (possibly double) roots.
#[derive(Debug, Clone, PartialEq)]
pub struct Factored {
    pub lead: f64,
    pub roots: Vec<f64>,
}

impl Factored {
    pub fn eval(&self, x: f64) -> f64 {
        self.roots.iter().fold(self.lead, |acc, r| acc * (x - r))
    }

    pub fn eval_c(&self, z: C) -> C {
        self.roots.iter().fold(C::new(self.lead, 0.0), |acc, r| acc * (z - r))
    }
}

/// Orders the roots of a discriminant as `r1, r2 ≤ 1 ≤ r3, r4`.
///
/// `ones` copies of the root 1 are deflated exactly before the numerical
/// solve, as is an exact root at 0.
fn ordered_roots(d: &Poly, ones: usize) -> Result<([Root; 4], Factored)> {
    let fail = |reason: String| Error::RootFinding { coeffs: d.coeffs.clone(), reason };
    let mut rest = d.clone();
    let mut found: Vec<f64> = Vec::with_capacity(4);
    for _ in 0..ones {
        rest = rest.deflate(1.0).0;
        found.push(1.0);
    }
    if rest.degree() >= 1 && rest.coeffs[0] == 0.0 {
        rest = Poly::new(rest.coeffs[1..].to_vec());
        found.push(0.0);
    }
    // A leading coefficient at roundoff level means the root there is at infinity.
    let scale = d.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    while rest.degree() > 0 && rest.coeffs[rest.degree()].abs() <= 1e-15 * scale {
        rest.coeffs.pop();
    }
    if rest.degree() > 0 {
        for z in poly::roots(&rest)? {
            if z.im.abs() > 1e-7 * (1.0 + z.re.abs()) {
                return Err(fail(format!("non-real root {z}")));
            }
            found.push(poly::polish_real(d, z.re));
        }
    }
    let finite = found.len();
    if !(3..=4).contains(&finite) {
        return Err(fail(format!("expected 3 or 4 finite roots, found {finite}")));
    }

    let factored = Factored { lead: d.coeff(finite), roots: found.clone() };
    let take = |v: &mut Vec<f64>, k: usize| v.remove(k);
    let mut pool = found;
    let i2 = (0..pool.len())
        .filter(|&k| pool[k] <= 1.0)
        .max_by(|&i, &j| pool[i].total_cmp(&pool[j]))
        .ok_or_else(|| fail("no root in (0,1]".into()))?;
    let r2 = take(&mut pool, i2);
    let i3 = (0..pool.len())
        .filter(|&k| pool[k] >= 1.0)
        .min_by(|&i, &j| pool[i].total_cmp(&pool[j]))
        .ok_or_else(|| fail("no root in [1,inf)".into()))?;
    let r3 = take(&mut pool, i3);
    pool.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let r1 = pool[0];
    let r4 = pool.get(1).map_or(Root::Infinite, |&v| Root::Finite(v));
    if !(r1 > -1.0 && r1 < 1.0 && r2 > 0.0 && r1 <= r2 && r4.abs() >= r3) {
        return Err(fail(format!("unexpected root layout {r1}, {r2}, {r3}, {r4}")));
    }
    Ok(([Root::Finite(r1), Root::Finite(r2), Root::Finite(r3), r4], factored))
}

/// Side from which a point on a cut is approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Approach {
    FromAbove,
    FromBelow,
    OffCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchValue {
    #[serde(skip)]
    pub value: C,
    pub branch: u8,
    pub approach: Approach,
}

/// Everything about a walk that only depends on the kernel.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub p: StepDistribution,
    pub alg: KernelAlgebra,
    pub bp: BranchPoints,
    /// `d` in factored form.
    pub dx: Factored,
    /// `d̃` in factored form.
    pub dy: Factored,
}

impl Kernel {
    pub fn new(p: &StepDistribution) -> Result<Self> {
        let alg = KernelAlgebra::new(p);
        let drift = p.drift();
        let zx = drift.mx.abs() <= DRIFT_TOL;
        let zy = drift.my.abs() <= DRIFT_TOL;
        // d(1) = my², d'(1) ∝ mx when my = 0; symmetrically for d̃.
        let x_ones = usize::from(zy) + usize::from(zy && zx);
        let y_ones = usize::from(zx) + usize::from(zx && zy);
        let (x, dx) = ordered_roots(&alg.d, x_ones)?;
        let (y, dy) = ordered_roots(&alg.dt, y_ones)?;
        Ok(Kernel { p: *p, alg, bp: BranchPoints { x, y }, dx, dy })
    }

    /// Both roots `Y₀, Y₁` of `a(x)Y² + b(x)Y + c(x)`, smaller modulus first.
    /// On the real cuts (`d(x) < 0`) a side must be chosen.
    pub fn y_pair(&self, x: C, approach: Approach) -> Result<(C, C)> {
        let a = &self.alg;
        pair(a.a.eval_c(x), a.b.eval_c(x), a.c.eval_c(x), x, &self.dx, approach)
    }

    /// Both roots `X₀, X₁` of `ã(y)X² + b̃(y)X + c̃(y)`, smaller modulus first.
    pub fn x_pair(&self, y: C, approach: Approach) -> Result<(C, C)> {
        let a = &self.alg;
        pair(a.at.eval_c(y), a.bt.eval_c(y), a.ct.eval_c(y), y, &self.dy, approach)
    }

    pub fn branch_y(&self, x: C, branch: u8, approach: Approach) -> Result<BranchValue> {
        let (y0, y1) = self.y_pair(x, approach)?;
        Ok(select(y0, y1, branch, on_cut(x, &self.dx), approach))
    }

    pub fn branch_x(&self, y: C, branch: u8, approach: Approach) -> Result<BranchValue> {
        let (x0, x1) = self.x_pair(y, approach)?;
        Ok(select(x0, x1, branch, on_cut(y, &self.dy), approach))
    }

    /// `μ_j(x) = (2a)^{-j} Σ_k C(j,2k+1) d^k (−b)^{j−2k−1}`, so that
    /// `Y₀^j − Y₁^j = −2i√(−d) μ_j` on `(x₁,x₂)` approached from above.
    pub fn mu(&self, j0: u32, x: f64) -> Result<f64> {
        let a = self.alg.a.eval(x);
        if a == 0.0 {
            return Err(Error::Domain(format!("a({x}) = 0 in mu")));
        }
        Ok(mu_from(j0, a, self.alg.b.eval(x), self.dx.eval(x)))
    }

    /// Closed form of `μ_j` at `x₂`, where `d` vanishes.
    pub fn mu_at_x2(&self, j0: u32) -> f64 {
        let x2 = self.bp.x2();
        let a = self.alg.a.eval(x2);
        let c = self.alg.c.eval(x2);
        j0 as f64 / (2.0 * a) * (c / a).powf((j0 as f64 - 1.0) / 2.0)
    }
}

pub(crate) fn mu_from(j0: u32, a: f64, b: f64, d: f64) -> f64 {
    let j = j0 as i32;
    let mut s = 0.0;
    let mut binom = j as f64; // C(j, 1)
    let mut k = 0;
    while 2 * k < j {
        s += binom * d.powi(k) * (-b).powi(j - 2 * k - 1);
        // C(j, 2k+3) from C(j, 2k+1)
        let m = 2 * k + 1;
        binom *= ((j - m) * (j - m - 1)) as f64 / ((m + 1) * (m + 2)) as f64;
        k += 1;
    }
    s / (2.0 * a).powi(j)
}

fn on_cut(z: C, d: &Factored) -> bool {
    z.im == 0.0 && d.eval(z.re) < 0.0
}

fn select(v0: C, v1: C, branch: u8, cut: bool, approach: Approach) -> BranchValue {
    let value = if branch == 0 { v0 } else { v1 };
    let approach = if cut { approach } else { Approach::OffCut };
    BranchValue { value, branch, approach }
}

fn pair(a: C, b: C, c: C, z: C, d: &Factored, approach: Approach) -> Result<(C, C)> {
    if on_cut(z, d) {
        let s = (-d.eval(z.re)).sqrt();
        let (a, b) = (a.re, b.re);
        if a == 0.0 {
            return Err(Error::Domain("a vanishes on a cut".into()));
        }
        let above = C::new(-b, -s) / (2.0 * a);
        return match approach {
            Approach::FromAbove => Ok((above, above.conj())),
            Approach::FromBelow => Ok((above.conj(), above)),
            Approach::OffCut => Err(Error::Domain(format!("{} lies on a cut; choose a side", z.re))),
        };
    }
    let disc = d.eval_c(z).sqrt();
    let (p, m) = (b + disc, b - disc);
    let q = if p.norm() >= m.norm() { p * -0.5 } else { m * -0.5 };
    if q.norm() == 0.0 {
        if a.norm() == 0.0 {
            return Err(Error::Domain("both branches are at infinity".into()));
        }
        return Ok((C::new(0.0, 0.0), C::new(0.0, 0.0)));
    }
    let r2 = c / q;
    if a.norm() == 0.0 {
        return Ok((r2, C::new(f64::INFINITY, 0.0)));
    }
    let r1 = q / a;
    Ok(if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) })
}

/// `θ = arccos(−Σ ij p / √(Σ i²p · Σ j²p))`.
pub fn theta(p: &StepDistribution) -> Result<f64> {
    let (sxx, sxy, syy) = p.second_moments();
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Domain("a second moment vanishes".into()));
    }
    Ok((-sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0).acos())
}

/// `β = √(Σ j²p / Σ i²p)`.
pub fn beta_ratio(p: &StepDistribution) -> Result<f64> {
    let (sxx, _, syy) = p.second_moments();
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Domain("a second moment vanishes".into()));
    }
    Ok((syy / sxx).sqrt())
}

/// `κ = π/θ`, the pole order of the zero-drift gluing function.
pub fn kappa(p: &StepDistribution) -> Result<f64> {
    Ok(PI / theta(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::preset;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn algebra_examples() {
        let s = KernelAlgebra::new(&preset("simple", &[]).unwrap());
        assert_eq!(s.a.coeffs, vec![0.0, 0.25]);
        assert_eq!(s.b.coeffs, vec![0.25, -1.0, 0.25]);
        assert_eq!(s.c.coeffs, vec![0.0, 0.25]);
        let t = KernelAlgebra::new(&preset("tandem", &[0.2, 0.4]).unwrap());
        assert_eq!(t.a.coeffs, vec![0.4]);
        assert_eq!(t.b.coeffs, vec![0.0, -1.0, 0.2]);
        assert_eq!(t.c.coeffs, vec![0.0, 0.4]);
        let v = KernelAlgebra::new(&preset("voter", &[]).unwrap());
        let s6 = 1.0 / 6.0;
        assert_eq!(v.a.coeffs, vec![s6, s6]);
        assert_eq!(v.c.coeffs, vec![0.0, s6, s6]);
        assert_eq!(v.b.coeffs, vec![s6, -1.0, s6]);
    }

    #[test]
    fn kernel_matches_sections() {
        let p = preset("voter", &[]).unwrap();
        let alg = KernelAlgebra::new(&p);
        for k in 0..50 {
            let x = c((k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.91).cos());
            let y = c((k as f64 * 1.3).cos(), (k as f64 * 0.23).sin() * 3.0);
            let direct = kernel_eval(&p, x, y);
            let sec = alg.a.eval_c(x) * y * y + alg.b.eval_c(x) * y + alg.c.eval_c(x);
            let sec_t = alg.at.eval_c(y) * x * x + alg.bt.eval_c(y) * x + alg.ct.eval_c(y);
            assert!((direct - sec).norm() < 1e-13 * (1.0 + direct.norm()));
            assert!((direct - sec_t).norm() < 1e-13 * (1.0 + direct.norm()));
        }
        assert!(kernel_eval(&p, c(1.0, 0.0), c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn simple_walk_spot_value() {
        let alg = KernelAlgebra::new(&preset("simple", &[]).unwrap());
        let y = 3.0 - 2.0 * 2f64.sqrt();
        let v = alg.a.eval(1.0) * y * y + alg.b.eval(1.0) * y + alg.c.eval(1.0);
        assert!((v - (y - 1.0).powi(2) / 4.0).abs() < 1e-16);
    }

    #[test]
    fn branch_points_of_presets() {
        let r2 = 2f64.sqrt();
        let k = Kernel::new(&preset("simple", &[]).unwrap()).unwrap();
        let want = [3.0 - 2.0 * r2, 1.0, 1.0, 3.0 + 2.0 * r2];
        for (got, w) in k.bp.x.iter().zip(want) {
            assert!((got.finite().unwrap() - w).abs() < 1e-13, "{got} {w}");
        }
        assert_eq!(k.bp.x[1], Root::Finite(1.0));
        assert_eq!(k.bp.x[2], Root::Finite(1.0));

        let k = Kernel::new(&preset("tandem", &[0.2, 0.4]).unwrap()).unwrap();
        let s = 0.0272f64.sqrt();
        let want = [0.0, 1.0, (0.36 - s) / 0.08, (0.36 + s) / 0.08];
        for (got, w) in k.bp.x.iter().zip(want) {
            assert!((got.finite().unwrap() - w).abs() < 1e-12, "{got} {w}");
        }

        let k = Kernel::new(&preset("asym_simple", &[0.2, 0.3, 0.2, 0.3]).unwrap()).unwrap();
        let want = [0.20711436787, 0.91990228582, 1.63060797190, 7.24237537533];
        for (got, w) in k.bp.x.iter().zip(want) {
            assert!((got.finite().unwrap() - w).abs() < 1e-9, "{got} {w}");
        }
    }

    #[test]
    fn factored_discriminants_match_expanded() {
        for (name, params) in [("voter", vec![]), ("tandem", vec![0.2, 0.4]), ("asym_simple", vec![0.2, 0.3, 0.2, 0.3])] {
            let k = Kernel::new(&preset(name, &params).unwrap()).unwrap();
            for n in 0..40 {
                let x = -2.0 + n as f64 * 0.21;
                assert!((k.dx.eval(x) - k.alg.d.eval(x)).abs() < 1e-13 * (1.0 + x.abs().powi(4)), "{name} {x}");
                assert!((k.dy.eval(x) - k.alg.dt.eval(x)).abs() < 1e-13 * (1.0 + x.abs().powi(4)), "{name} {x}");
            }
        }
    }

    #[test]
    fn asym_roots_closed_form() {
        // d = b² − 0.24x² = (b − √0.24 x)(b + √0.24 x), b = 0.2x² − x + 0.3
        let k = Kernel::new(&preset("asym_simple", &[0.2, 0.3, 0.2, 0.3]).unwrap()).unwrap();
        let s = 0.24f64.sqrt();
        let quad = |m: f64| {
            let (a, b, c) = (0.2, -1.0 - m, 0.3);
            let r = (b * b - 4.0 * a * c).sqrt();
            ((-b - r) / (2.0 * a), (-b + r) / (2.0 * a))
        };
        let (p1, p2) = quad(s);
        let (m1, m2) = quad(-s);
        let mut all = [p1, p2, m1, m2];
        all.sort_by(f64::total_cmp);
        for (got, w) in k.bp.x.iter().zip(all) {
            assert!((got.finite().unwrap() - w).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_discriminant_gives_infinite_root() {
        // no (1,0) step and no (1,±1) pair: leading coefficient of d vanishes
        let p = StepDistribution::new([((0, 1), 0.1), ((-1, 0), 0.3), ((0, -1), 0.4), ((1, 1), 0.1), ((-1, 1), 0.1)])
            .unwrap();
        let k = Kernel::new(&p).unwrap();
        assert_eq!(k.bp.x[3], Root::Infinite);
    }

    #[test]
    fn branches_at_one() {
        for (name, params) in [("voter", vec![]), ("tandem", vec![0.2, 0.4]), ("simple", vec![])] {
            let k = Kernel::new(&preset(name, &params).unwrap()).unwrap();
            let (y0, y1) = k.y_pair(c(1.0, 0.0), Approach::OffCut).unwrap();
            assert!((y0 - 1.0).norm() < 1e-7 && (y1 - 1.0).norm() < 1e-7, "{name}: {y0} {y1}");
        }
    }

    #[test]
    fn branches_on_cut_are_conjugate_and_mu_matches() {
        let k = Kernel::new(&preset("voter", &[]).unwrap()).unwrap();
        let (x1, x2) = (k.bp.x1(), k.bp.x2());
        for n in 1..20 {
            let x = x1 + (x2 - x1) * n as f64 / 20.0;
            let (y0, y1) = k.y_pair(c(x, 0.0), Approach::FromAbove).unwrap();
            assert!((y0 - y1.conj()).norm() < 1e-15);
            let sd = (-k.dx.eval(x)).sqrt();
            for j in 1..6u32 {
                let lhs = y0.powu(j) - y1.powu(j);
                let rhs = C::new(0.0, -2.0 * sd) * k.mu(j, x).unwrap();
                assert!((lhs - rhs).norm() < 1e-12, "j={j} x={x}");
            }
            assert!(k.y_pair(c(x, 0.0), Approach::OffCut).is_err());
        }
    }

    #[test]
    fn mu_small_orders() {
        let k = Kernel::new(&preset("asym_simple", &[0.2, 0.3, 0.2, 0.3]).unwrap()).unwrap();
        for &x in &[0.3, 0.5, 0.9] {
            let a = k.alg.a.eval(x);
            let b = k.alg.b.eval(x);
            assert!((k.mu(1, x).unwrap() - 1.0 / (2.0 * a)).abs() < 1e-15);
            assert!((k.mu(2, x).unwrap() + b / (2.0 * a * a)).abs() < 1e-14);
        }
        let x2 = k.bp.x2();
        for j in 1..8 {
            let direct = k.mu(j, x2).unwrap();
            assert!((direct - k.mu_at_x2(j)).abs() < 1e-6 * direct.abs(), "j={j}");
        }
    }

    #[test]
    fn real_branches_between_x2_and_x3() {
        let k = Kernel::new(&preset("asym_simple", &[0.2, 0.3, 0.2, 0.3]).unwrap()).unwrap();
        let (x2, x3) = (k.bp.x2(), k.bp.x3());
        for n in 1..10 {
            let x = x2 + (x3 - x2) * n as f64 / 10.0;
            let (y0, y1) = k.y_pair(c(x, 0.0), Approach::OffCut).unwrap();
            assert!(y0.im == 0.0 && y1.im == 0.0 && y0.re <= y1.re);
        }
    }

    #[test]
    fn theta_and_beta() {
        let v = preset("voter", &[]).unwrap();
        assert!((theta(&v).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((theta(&preset("simple", &[]).unwrap()).unwrap() - PI / 2.0).abs() < 1e-15);
        for (l, n) in [(1.0, 2.0), (2.0, 1.0), (0.3, 0.7)] {
            let t = theta(&preset("nucleosome", &[l, n]).unwrap()).unwrap();
            assert!((t - (n / (n + l)).acos()).abs() < 1e-14);
        }
        assert!((beta_ratio(&v).unwrap() - 1.0).abs() < 1e-15);
        let p = StepDistribution::new([((0, 1), 0.375), ((0, -1), 0.375), ((1, 0), 0.125), ((-1, 0), 0.125)]).unwrap();
        assert!((beta_ratio(&p).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let alg = KernelAlgebra::new(&p);
        let alt = ((alg.a.eval(1.0) + alg.c.eval(1.0)) / (alg.at.eval(1.0) + alg.ct.eval(1.0))).sqrt();
        assert!((alt - 3f64.sqrt()).abs() < 1e-14);
    }
}
