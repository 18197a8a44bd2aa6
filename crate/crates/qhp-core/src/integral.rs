//! Exact integral representation of the exit generating function
//! `h(x) = Σᵢ P[exit at (i,0)]·xⁱ` and of the hitting probability `1 − h(1)`.
//!
//! `h(x) = x^{i₀}Y₀(x)^{j₀} + (1/π)∫_{x₁}^{x₂} t^{i₀}μ_{j₀}(t)√(−d(t))·R(t) dt`
//! with `R = w′/(w − w(x)) − w′/(w − w(0))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gluing::GluingFunction;
use crate::kernel::{mu_from, Approach, Kernel, Root};
use crate::quadrature::{integrate_unit, Quad, QuadratureConfig, QuadratureRule};

type C = Complex64;

/// Relative closeness of `w(t)` to `w(x)` treated as a pole on the path.
pub const POLE_ON_PATH_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub nodes: usize,
    pub max_integrand: f64,
    pub rule: QuadratureRule,
    /// `x` lay on the cut `(x₁, x₂)` and the principal value was taken.
    pub principal_value: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingResult<T = f64> {
    pub value: T,
    pub err_estimate: f64,
    pub method: &'static str,
    pub diagnostics: Diagnostics,
}

/// What `w(x)` is for the requested `x`.
#[derive(Debug, Clone, Copy)]
enum Target {
    /// `w(x) = ∞`: only the `w(0)` term remains and it has a pole at `x₂`.
    Pole,
    Finite(C),
    /// `x` on `(x₁, x₂)`; `c` is a real value outside `w([x₁, x₂])`.
    Principal { x: f64, wx: f64, fx: f64, c: f64 },
}

/// `√(−d(t)) = √(t − x₁)·(x₂ − t)^{m/2}·√Q(t)` on `[x₁, x₂]`.
struct Split {
    x1: f64,
    x2: f64,
    /// Multiplicity of `x₂` as a root of `d`.
    m: i32,
    /// `Q(t) = q_lead · Π (t − r)` over the remaining roots.
    q_lead: f64,
    rest: Vec<f64>,
}

impl Split {
    fn new(k: &Kernel) -> Result<Self> {
        let (x1, x2) = (k.bp.x1(), k.bp.x2());
        let mut rest = k.dx.roots.clone();
        let i1 = rest
            .iter()
            .position(|&r| r == x1)
            .ok_or_else(|| Error::Numerical("x1 missing from factored d".into()))?;
        rest.remove(i1);
        let before = rest.len();
        rest.retain(|&r| r != x2);
        let m = (before - rest.len()) as i32;
        if m == 0 {
            return Err(Error::Numerical("x2 missing from factored d".into()));
        }
        let q_lead = -k.dx.lead * if m % 2 == 0 { 1.0 } else { -1.0 };
        Ok(Split { x1, x2, m, q_lead, rest })
    }

    fn sqrt_q(&self, t: f64) -> f64 {
        let q = self.rest.iter().fold(self.q_lead, |acc, r| acc * (t - r));
        q.max(0.0).sqrt()
    }
}

/// `tⁿ` through logarithms, so that huge `n` underflows gracefully.
fn pow_log(t: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if t == 0.0 {
        return 0.0;
    }
    let mag = (n as f64 * t.abs().ln()).exp();
    if t < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

struct Integrand<'a> {
    k: &'a Kernel,
    g: &'a GluingFunction,
    sp: Split,
    i0: u32,
    j0: u32,
    w0: C,
    target: Target,
    guard: f64,
}

impl Integrand<'_> {
    fn mu(&self, t: f64) -> f64 {
        let a = &self.k.alg;
        mu_from(self.j0, a.a.eval(t), a.b.eval(t), self.k.dx.eval(t))
    }

    fn check_path(&self, t: f64, wx: C) -> Result<C> {
        let wt = self.g.eval(C::new(t, 0.0))?;
        if (wt - wx).norm() < POLE_ON_PATH_TOL * wt.norm() {
            return Err(Error::PoleOnPath { t });
        }
        Ok(wt)
    }

    /// `t^{i₀}μ(t)√Q(t)·R̃(t)` where `R̃ = (x₂ − t)R` in the pole case.
    fn phi(&self, t: f64) -> Result<C> {
        let tc = C::new(t, 0.0);
        let r = match self.target {
            Target::Pole => -self.g.scaled_log_derivative(tc, self.w0)?,
            Target::Finite(wx) => {
                let wt = self.check_path(t, wx)?;
                if t == 0.0 {
                    // R has a simple pole at 0 cancelled by t^{i₀}
                    return Ok(C::new(0.0, 0.0));
                }
                self.g.log_derivative(tc, wx)? * (wx - self.w0) / (wt - self.w0)
            }
            Target::Principal { .. } => unreachable!(),
        };
        Ok(r * (pow_log(t, self.i0) * self.mu(t) * self.sp.sqrt_q(t)))
    }

    fn pole_order(&self) -> i32 {
        i32::from(matches!(self.target, Target::Pole))
    }

    /// Integrand in `s` on the piece next to `x₁`, `t = x₁ + L s²`.
    fn left(&self, s: f64, l: f64) -> Result<C> {
        if s == 0.0 {
            return Ok(C::new(0.0, 0.0));
        }
        let t = self.sp.x1 + l * s * s;
        let u = t - self.sp.x1;
        if let Target::Principal { .. } = self.target {
            return Ok(self.principal(t, u, self.sp.x2 - t)? * (2.0 * l * s));
        }
        let e = self.sp.m as f64 / 2.0 - self.pole_order() as f64;
        let v = u.sqrt() * (self.sp.x2 - t).powf(e);
        Ok(self.phi(t)? * (2.0 * l * s * v))
    }

    /// Integrand in `s` on the piece next to `x₂`, `t = x₂ − L s²`.
    fn right(&self, s: f64, l: f64) -> Result<C> {
        let power = 1 + self.sp.m - 2 * self.pole_order();
        let t = self.sp.x2 - l * s * s;
        let delta = self.sp.x2 - t;
        if delta <= self.guard * l {
            // endpoint limit; only the pole case with a simple root survives
            if power > 0 || matches!(self.target, Target::Principal { .. }) {
                return Ok(C::new(0.0, 0.0));
            }
            let x2 = self.sp.x2;
            let lim = self.phi(x2)? * ((x2 - self.sp.x1).sqrt() * 2.0 * l.powf(1.0 + self.sp.m as f64 / 2.0 - 1.0));
            return Ok(lim);
        }
        let u = t - self.sp.x1;
        if let Target::Principal { .. } = self.target {
            return Ok(self.principal(t, u, delta)? * (2.0 * l * s));
        }
        // (x₂ − t)^e · 2Ls = 2 L^{1+e} s^{power}
        let e = self.sp.m as f64 / 2.0 - self.pole_order() as f64;
        let v = 2.0 * l.powf(1.0 + e) * s.powi(power) * u.sqrt();
        Ok(self.phi(t)? * v)
    }

    /// `[F(t) − F(x)ψ(t)]·R(t)` with `ψ = (w − w₀)(w_x − c)/((w − c)(w_x − w₀))`,
    /// whose integral has no singularity at `t = x`.
    fn principal(&self, t: f64, u: f64, delta: f64) -> Result<C> {
        let Target::Principal { wx, fx, c, .. } = self.target else { unreachable!() };
        let wx = C::new(wx, 0.0);
        let wt = self.check_path(t, wx)?;
        let tc = C::new(t, 0.0);
        let ld = self.g.log_derivative(tc, wx)?;
        let psi_r = ld * (wx - c) / (wt - c);
        let f = pow_log(t, self.i0) * self.mu(t) * u.sqrt() * delta.powf(self.sp.m as f64 / 2.0) * self.sp.sqrt_q(t);
        let fr = if t == 0.0 { C::new(0.0, 0.0) } else { ld * (wx - self.w0) / (wt - self.w0) * f };
        Ok(fr - psi_r * fx)
    }

    fn f_real(&self, x: f64) -> f64 {
        let sp = &self.sp;
        pow_log(x, self.i0)
            * self.mu(x)
            * (x - sp.x1).sqrt()
            * (sp.x2 - x).powf(sp.m as f64 / 2.0)
            * sp.sqrt_q(x)
    }
}

fn check_start(i0: u32, j0: u32) -> Result<()> {
    if i0 == 0 || j0 == 0 {
        return Err(Error::validation("start", format!("({i0},{j0}) is not interior; i0, j0 >= 1 required")));
    }
    Ok(())
}

/// Rejects `x` on the closed cut `[x₃, x₄]` (through ∞ when `x₄ < 0`).
fn check_domain(k: &Kernel, x: C) -> Result<()> {
    // x₂ = x₃ = 1 for zero drift, and 1 belongs to the domain
    if x.im != 0.0 || x.re == k.bp.x2() {
        return Ok(());
    }
    let (x3, xr) = (k.bp.x3(), x.re);
    let bad = match k.bp.x[3] {
        Root::Infinite => xr >= x3,
        Root::Finite(x4) if x4 > 0.0 => xr >= x3 && xr <= x4,
        Root::Finite(x4) => xr >= x3 || xr <= x4,
    };
    if bad {
        return Err(Error::Domain(format!("x = {xr} lies on the cut [x3, x4]")));
    }
    Ok(())
}

/// `h^{i₀,j₀}(x)` for `x` off the cut `[x₃, x₄]`. On `(x₁, x₂)` the value is
/// the average of the two sides, i.e. the real part of the boundary value.
pub fn h_at_x(
    k: &Kernel,
    g: &GluingFunction,
    i0: u32,
    j0: u32,
    x: C,
    cfg: &QuadratureConfig,
) -> Result<HittingResult<C>> {
    check_start(i0, j0)?;
    cfg.validate()?;
    check_domain(k, x)?;
    let sp = Split::new(k)?;
    let (x1, x2) = (sp.x1, sp.x2);
    let on_cut = x.im == 0.0 && x.re > x1 && x.re < x2;

    let leading = if on_cut {
        let (y0, _) = k.y_pair(x, Approach::FromAbove)?;
        C::new((x.powu(i0) * y0.powu(j0)).re, 0.0)
    } else {
        let (y0, _) = k.y_pair(x, Approach::OffCut)?;
        x.powu(i0) * y0.powu(j0)
    };
    let empty = Diagnostics { nodes: 0, max_integrand: 0.0, rule: cfg.rule, principal_value: false };
    if x == C::new(0.0, 0.0) {
        // the two Cauchy terms coincide
        return Ok(HittingResult { value: leading, err_estimate: 0.0, method: "integral", diagnostics: empty });
    }
    if x.im == 0.0 && x.re == x1 {
        return Err(Error::PoleOnPath { t: x1 });
    }

    let w0 = g.eval(C::new(0.0, 0.0))?;
    let (pole_at, _) = g.pole();
    let mut ig = Integrand { k, g, sp, i0, j0, w0, target: Target::Pole, guard: cfg.endpoint_guard };
    let mut correction = 0.0;
    ig.target = if x.im == 0.0 && x.re == pole_at {
        Target::Pole
    } else if on_cut {
        let xr = x.re;
        let wx = g.eval_real(xr)?;
        let w1 = g.eval_real(x1)?;
        let dir = if wx > w1 { 1.0 } else { -1.0 };
        let c = w1 - dir * (1.0 + w1.abs() + wx.abs());
        let fx = ig.f_real(xr);
        correction = -fx * ((w1 - wx) / (w1 - c)).abs().ln();
        Target::Principal { x: xr, wx, fx, c }
    } else {
        Target::Finite(g.eval(x)?)
    };
    // split at the midpoint, unless a principal-value x sits next to it
    let half = 0.5 * (x2 - x1);
    let mut split = x1 + half;
    if let Target::Principal { x, .. } = ig.target {
        if (x - split).abs() < 0.2 * half {
            split = if x < split { x + 0.3 * half } else { x - 0.3 * half };
        }
    }
    let ql = integrate_unit(|s| ig.left(s, split - x1), cfg)?;
    let qr = integrate_unit(|s| ig.right(s, x2 - split), cfg)?;
    let integral = ql.value + qr.value + correction;
    let value = leading + integral / PI;
    let err_estimate = (ql.err + qr.err) / PI;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite h({x})")));
    }
    Ok(HittingResult {
        value,
        err_estimate,
        method: "integral",
        diagnostics: diagnostics(&ql, &qr, matches!(ig.target, Target::Principal { .. })),
    })
}

fn diagnostics(ql: &Quad, qr: &Quad, principal_value: bool) -> Diagnostics {
    let rule = if ql.rule == QuadratureRule::AdaptiveBisection || qr.rule == QuadratureRule::AdaptiveBisection {
        QuadratureRule::AdaptiveBisection
    } else {
        QuadratureRule::ChebyshevSubstitution
    };
    Diagnostics { nodes: ql.evals + qr.evals, max_integrand: ql.max_abs.max(qr.max_abs), rule, principal_value }
}

/// `h^{i₀,j₀}(1)`, real.
pub fn h_at_one(k: &Kernel, g: &GluingFunction, i0: u32, j0: u32, cfg: &QuadratureConfig) -> Result<HittingResult> {
    let r = h_at_x(k, g, i0, j0, C::new(1.0, 0.0), cfg)?;
    if r.value.im.abs() > 1e-12 {
        return Err(Error::Numerical(format!("h(1) has imaginary part {}", r.value.im)));
    }
    Ok(HittingResult { value: r.value.re, err_estimate: r.err_estimate, method: r.method, diagnostics: r.diagnostics })
}

/// Probability of reaching the vertical axis before the horizontal one,
/// `1 − h(1)`.
pub fn hit_probability(
    k: &Kernel,
    g: &GluingFunction,
    i0: u32,
    j0: u32,
    cfg: &QuadratureConfig,
) -> Result<HittingResult> {
    let h = h_at_one(k, g, i0, j0, cfg)?;
    let value = 1.0 - h.value;
    let slack = h.err_estimate + 1e-14;
    if !(value >= -slack && value <= 1.0 + slack) {
        return Err(Error::Numerical(format!("probability {value} outside [0, 1] (err {})", h.err_estimate)));
    }
    Ok(HittingResult { value, ..h })
}

/// `lim_{t→x₂} t^{i₀}μ(t)√(−d(t))·(−w′/(w − w(0)))`, the integrand of `h(1)`
/// at the pole end when `x₂` is a double root of `d`.
pub fn endpoint_limit(k: &Kernel, g: &GluingFunction, i0: u32, j0: u32) -> Result<f64> {
    check_start(i0, j0)?;
    let sp = Split::new(k)?;
    if sp.m != 2 {
        return Err(Error::Unsupported("x2 is a simple root of d; the integrand vanishes there".into()));
    }
    let x2 = sp.x2;
    let w0 = g.eval(C::new(0.0, 0.0))?;
    let ig = Integrand { k, g, sp, i0, j0, w0, target: Target::Pole, guard: 0.0 };
    Ok(ig.phi(x2)?.re * (x2 - ig.sp.x1).sqrt())
}
