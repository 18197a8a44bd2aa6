//! Quadrature on `[0, 1]`: nested Clenshaw–Curtis with node doubling, and
//! adaptive Gauss–Kronrod bisection as a fallback.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureRule {
    /// Square-root endpoint substitution followed by Clenshaw–Curtis in the
    /// Chebyshev angle, doubled until two levels agree.
    ChebyshevSubstitution,
    AdaptiveBisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Initial number of Clenshaw–Curtis intervals per half-range.
    pub nodes: usize,
    pub rule: QuadratureRule,
    pub rel_tol: f64,
    /// Nodes closer than this to the pole end of the range take the
    /// endpoint limit of the regularized integrand.
    pub endpoint_guard: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes: 64, rule: QuadratureRule::ChebyshevSubstitution, rel_tol: 1e-13, endpoint_guard: 1e-15 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::validation("nodes", "at least 16 nodes are required"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::validation("rel_tol", "must lie in (0, 1e-4]"));
        }
        if !(self.endpoint_guard >= 0.0) {
            return Err(Error::validation("endpoint_guard", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Largest Clenshaw–Curtis level tried before switching to bisection.
pub const MAX_CC_NODES: usize = 8192;
/// Absolute floor added to every relative tolerance.
pub const ABS_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quad {
    #[serde(skip)]
    pub value: Complex64,
    pub err: f64,
    pub evals: usize,
    pub max_abs: f64,
    pub rule: QuadratureRule,
}

/// Integrates `f` over `[0, 1]` to `cfg.rel_tol`.
pub fn integrate_unit<F>(f: F, cfg: &QuadratureConfig) -> Result<Quad>
where
    F: Fn(f64) -> Result<Complex64>,
{
    match cfg.rule {
        QuadratureRule::ChebyshevSubstitution => match clenshaw_curtis_doubling(&f, cfg)? {
            Some(q) => Ok(q),
            None => adaptive(&f, cfg),
        },
        QuadratureRule::AdaptiveBisection => adaptive(&f, cfg),
    }
}

fn cc_weights(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().unwrap().get(&n) {
        return w.clone();
    }
    // weights on [-1, 1] for x_k = cos(kπ/n), halved for [0, 1]
    let half = n / 2;
    let mut w = vec![0.0; n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 1..=half {
            let b = if 2 * j == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * (j * k) as f64 * PI / n as f64).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        *wk = 0.5 * c / n as f64 * (1.0 - s);
    }
    let w = Arc::new(w);
    cache.lock().unwrap().insert(n, w.clone());
    w
}

fn cc_node(k: usize, n: usize) -> f64 {
    // (1 − cos(kπ/n))/2 written with a sine to keep accuracy near 0
    let h = (k as f64 * PI / (2 * n) as f64).sin();
    h * h
}

fn clenshaw_curtis_doubling<F>(f: &F, cfg: &QuadratureConfig) -> Result<Option<Quad>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut n = cfg.nodes.max(16).next_power_of_two();
    let mut vals: Vec<Complex64> = (0..=n).map(|k| f(cc_node(k, n))).collect::<Result<_>>()?;
    let mut evals = n + 1;
    let sum = |vals: &[Complex64], n: usize| -> Complex64 { cc_weights(n).iter().zip(vals).map(|(w, v)| v * w).sum() };
    let mut prev = sum(&vals, n);
    while 2 * n <= MAX_CC_NODES {
        let m = 2 * n;
        let mut next = Vec::with_capacity(m + 1);
        for k in 0..=m {
            if k % 2 == 0 {
                next.push(vals[k / 2]);
            } else {
                next.push(f(cc_node(k, m))?);
                evals += 1;
            }
        }
        vals = next;
        n = m;
        let cur = sum(&vals, n);
        let err = (cur - prev).norm();
        if !cur.is_finite() {
            return Err(Error::Numerical("non-finite quadrature sum".into()));
        }
        if err <= cfg.rel_tol * cur.norm() + ABS_FLOOR {
            let max_abs = vals.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            return Ok(Some(Quad { value: cur, err, evals, max_abs, rule: QuadratureRule::ChebyshevSubstitution }));
        }
        prev = cur;
    }
    Ok(None)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Kronrod-15 and Gauss-7 estimates on `[a, b]`.
fn gk15<F>(f: &F, a: f64, b: f64, evals: &mut usize, max_abs: &mut f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    *max_abs = max_abs.max(fc.norm());
    for j in 0..7 {
        let f1 = f(c - h * XGK[j])?;
        let f2 = f(c + h * XGK[j])?;
        *max_abs = max_abs.max(f1.norm()).max(f2.norm());
        k += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    *evals += 15;
    Ok((k * h, (k - g).norm() * h))
}

fn adaptive<F>(f: &F, cfg: &QuadratureConfig) -> Result<Quad>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut evals = 0;
    let mut max_abs = 0.0;
    let (whole, whole_err) = gk15(f, 0.0, 1.0, &mut evals, &mut max_abs)?;
    // interval list, refined worst-first
    let mut parts = vec![(0.0, 1.0, whole, whole_err)];
    for _ in 0..5000 {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= cfg.rel_tol * total.norm() + ABS_FLOOR {
            return Ok(Quad { value: total, err, evals, max_abs, rule: QuadratureRule::AdaptiveBisection });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (a, b, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (l, le) = gk15(f, a, m, &mut evals, &mut max_abs)?;
        let (r, re) = gk15(f, m, b, &mut evals, &mut max_abs)?;
        parts.push((a, m, l, le));
        parts.push((m, b, r, re));
    }
    let err: f64 = parts.iter().map(|p| p.3).sum();
    Err(Error::NonConvergence { solver: "adaptive quadrature", iterations: evals, residual: err })
}
