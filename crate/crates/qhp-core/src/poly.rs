//! Real polynomials in ascending coefficient order and a polished
//! companion-matrix root finder.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    /// Degree after dropping exact trailing zeros; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// The `n`-th derivative evaluated at `x`.
    pub fn derivative_at(&self, n: usize, x: f64) -> f64 {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p.eval(x)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    /// Quotient of division by `(x - r)`; the remainder is returned separately.
    pub fn deflate(&self, r: f64) -> (Poly, f64) {
        let n = self.degree();
        if n == 0 {
            return (Poly::new(vec![0.0]), self.coeffs[0]);
        }
        let mut q = vec![0.0; n];
        let mut carry = 0.0;
        for k in (0..=n).rev() {
            let v = self.coeffs[k] + carry * r;
            if k == 0 {
                return (Poly::new(q), v);
            }
            q[k - 1] = v;
            carry = v;
        }
        unreachable!()
    }
}

/// All complex roots of `p` (degree ≥ 1) from the eigenvalues of the
/// companion matrix, each refined by Newton's method on `p` itself.
pub fn roots(p: &Poly) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let lead = p.coeffs[n];
    if n == 0 || lead == 0.0 {
        return Err(Error::RootFinding { coeffs: p.coeffs.clone(), reason: "constant polynomial".into() });
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        m[(0, k)] = -p.coeffs[n - 1 - k] / lead;
        if k + 1 < n {
            m[(k + 1, k)] = 1.0;
        }
    }
    let eig = m.complex_eigenvalues();
    let dp = p.derivative();
    let mut out = Vec::with_capacity(n);
    for z0 in eig.iter() {
        if !z0.re.is_finite() || !z0.im.is_finite() {
            return Err(Error::RootFinding { coeffs: p.coeffs.clone(), reason: "eigenvalue solver failed".into() });
        }
        out.push(polish(p, &dp, *z0));
    }
    Ok(out)
}

/// Newton refinement; keeps the best iterate by residual.
pub fn polish(p: &Poly, dp: &Poly, z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut best = z0;
    let mut best_res = p.eval_c(z0).norm();
    for _ in 0..50 {
        let f = p.eval_c(z);
        let g = dp.eval_c(z);
        if g.norm() == 0.0 {
            break;
        }
        let step = f / g;
        z -= step;
        let r = p.eval_c(z).norm();
        if r < best_res {
            best_res = r;
            best = z;
        }
        if step.norm() <= 1e-16 * z.norm().max(1e-300) {
            break;
        }
    }
    best
}

/// Real Newton refinement for a root known to be real.
pub fn polish_real(p: &Poly, x0: f64) -> f64 {
    let dp = p.derivative();
    let mut x = x0;
    let mut best = (x0, p.eval(x0).abs());
    for _ in 0..50 {
        let g = dp.eval(x);
        if g == 0.0 {
            break;
        }
        let step = p.eval(x) / g;
        x -= step;
        let r = p.eval(x).abs();
        if r < best.1 {
            best = (x, r);
        }
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    best.0
}
