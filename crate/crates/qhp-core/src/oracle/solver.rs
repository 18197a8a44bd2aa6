//! Linear solvers for the truncated Dirichlet problem, registered by name.

use rayon::prelude::*;
use serde::Serialize;

use super::stencil::{BandLu, Level};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Target max-norm residual `‖b − Au‖∞`.
    pub tol: f64,
    /// Cap on sweeps (SOR) or cycles (multigrid).
    pub max_iter: usize,
    /// Relaxation factor for SOR.
    pub omega: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-14, max_iter: 1_000_000, omega: 1.5 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-8) {
            return Err(Error::validation("tol", "must lie in (0, 1e-8]"));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::validation("omega", "must lie in (0, 2)"));
        }
        if self.max_iter == 0 {
            return Err(Error::validation("max_iter", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub(crate) trait GridSolver: Send + Sync {
    fn name(&self) -> &'static str;
    /// Solves `A x = b` for every right-hand side, starting from `x = 0`.
    fn solve_many(&self, op: &Level, rhs: &[Vec<f64>], cfg: &SolverConfig) -> Result<(Vec<Vec<f64>>, SolveStats)>;
}

pub const SOLVER_NAMES: [&str; 2] = ["multigrid", "sor"];

pub(crate) fn solver_by_name(name: &str) -> Result<Box<dyn GridSolver>> {
    match name {
        "multigrid" => Ok(Box::new(Multigrid)),
        "sor" => Ok(Box::new(Sor)),
        _ => Err(Error::validation("solver", format!("unknown solver `{name}` (expected one of {SOLVER_NAMES:?})"))),
    }
}

pub(crate) struct Sor;

impl GridSolver for Sor {
    fn name(&self) -> &'static str {
        "sor"
    }

    fn solve_many(&self, op: &Level, rhs: &[Vec<f64>], cfg: &SolverConfig) -> Result<(Vec<Vec<f64>>, SolveStats)> {
        let mut stats = SolveStats::default();
        let mut out = Vec::with_capacity(rhs.len());
        let mut r = vec![0.0; op.len()];
        for b in rhs {
            let mut x = vec![0.0; op.len()];
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                let upd = op.forward_gs(&mut x, b, cfg.omega);
                // the update bounds the residual up to the factor 1/omega
                if upd <= cfg.tol * cfg.omega.min(1.0) || sweeps % 64 == 0 {
                    let res = op.residual(&x, b, &mut r);
                    if res <= cfg.tol {
                        stats.residual = stats.residual.max(res);
                        break;
                    }
                }
                if sweeps >= cfg.max_iter {
                    let res = op.residual(&x, b, &mut r);
                    return Err(Error::NonConvergence { solver: "sor", iterations: sweeps, residual: res });
                }
            }
            stats.iterations = stats.iterations.max(sweeps);
            out.push(x);
        }
        Ok((out, stats))
    }
}

pub(crate) struct Multigrid;

/// Pre- and post-smoothing sweeps (each a forward plus a backward pass).
const SMOOTH: usize = 1;
/// Stop if the residual fails to halve over this many cycles.
const STALL_CYCLES: usize = 8;

/// Coarse operators below this diagonal dominance are discarded: with a
/// strong drift, Galerkin coarsening stops being an M-matrix and the
/// smoother diverges on it.
const MIN_DOMINANCE: f64 = 0.6;
/// Largest band (unknowns × bandwidth²) factored directly at the bottom.
const MAX_BAND_WORK: usize = 50_000_000;
/// Sweeps on a bottom level that is too large to factor.
const BOTTOM_SWEEPS: usize = 20;

struct Hierarchy {
    levels: Vec<Level>,
    coarse: Option<BandLu>,
}

impl Hierarchy {
    fn build(op: &Level) -> Result<Self> {
        let mut levels = vec![op.clone()];
        while levels.last().unwrap().can_coarsen() {
            let c = levels.last().unwrap().galerkin();
            if c.dominance() < MIN_DOMINANCE {
                break;
            }
            levels.push(c);
        }
        let last = levels.last().unwrap();
        let bw = last.mx.min(last.my) + 1;
        let coarse = if last.mx * last.my * bw * bw <= MAX_BAND_WORK {
            Some(BandLu::factor(last).ok_or_else(|| Error::Numerical("singular coarse operator".into()))?)
        } else {
            None
        };
        Ok(Hierarchy { levels, coarse })
    }

    fn vcycle(&self, l: usize, x: &mut [f64], b: &[f64]) {
        let op = &self.levels[l];
        if l + 1 == self.levels.len() {
            match &self.coarse {
                Some(lu) => lu.solve(b, x),
                None => {
                    for _ in 0..BOTTOM_SWEEPS {
                        op.symmetric_gs(x, b, 1.0);
                    }
                }
            }
            return;
        }
        for _ in 0..SMOOTH {
            op.symmetric_gs(x, b, 1.0);
        }
        let mut r = vec![0.0; op.len()];
        op.residual(x, b, &mut r);
        let c = &self.levels[l + 1];
        let mut rc = vec![0.0; c.len()];
        op.restrict(c, &r, &mut rc);
        let mut ec = vec![0.0; c.len()];
        self.vcycle(l + 1, &mut ec, &rc);
        op.prolong_add(c, &ec, x);
        for _ in 0..SMOOTH {
            op.symmetric_gs(x, b, 1.0);
        }
    }
}

impl Multigrid {
    fn solve_one(&self, h: &Hierarchy, op: &Level, b: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, SolveStats)> {
        let mut r = vec![0.0; op.len()];
        let mut x = vec![0.0; op.len()];
        let mut history = vec![op.residual(&x, b, &mut r)];
        let mut cycles = 0;
        while *history.last().unwrap() > cfg.tol {
            if cycles >= cfg.max_iter {
                return Err(Error::NonConvergence { solver: "multigrid", iterations: cycles, residual: *history.last().unwrap() });
            }
            h.vcycle(0, &mut x, b);
            cycles += 1;
            history.push(op.residual(&x, b, &mut r));
            let n = history.len();
            if n > STALL_CYCLES && history[n - 1] > 0.5 * history[n - 1 - STALL_CYCLES] {
                return Err(Error::NonConvergence { solver: "multigrid", iterations: cycles, residual: history[n - 1] });
            }
        }
        Ok((x, SolveStats { iterations: cycles, residual: *history.last().unwrap() }))
    }
}

impl GridSolver for Multigrid {
    fn name(&self) -> &'static str {
        "multigrid"
    }

    fn solve_many(&self, op: &Level, rhs: &[Vec<f64>], cfg: &SolverConfig) -> Result<(Vec<Vec<f64>>, SolveStats)> {
        let h = Hierarchy::build(op)?;
        // right-hand sides share the hierarchy and are solved in parallel
        let solved: Vec<(Vec<f64>, SolveStats)> =
            rhs.par_iter().map(|b| self.solve_one(&h, op, b, cfg)).collect::<Result<_>>()?;
        let mut stats = SolveStats::default();
        let mut out = Vec::with_capacity(rhs.len());
        for (x, s) in solved {
            stats.iterations = stats.iterations.max(s.iterations);
            stats.residual = stats.residual.max(s.residual);
            out.push(x);
        }
        Ok((out, stats))
    }
}
