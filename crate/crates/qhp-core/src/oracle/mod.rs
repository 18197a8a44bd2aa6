//! Ground truth from the discrete Dirichlet problem on a truncated quadrant.
//!
//! The walk is absorbed on `{i = 0}` (value 1, origin included), on
//! `{j = 0, i ≥ 1}` (value 0), and on the artificial far boundary
//! `{i = nx} ∪ {j = ny}`. Clamping the far boundary to 0 and to 1 brackets the
//! untruncated probability from below and above.

mod solver;
mod stencil;

use serde::Serialize;

pub use solver::{SolveStats, SolverConfig, SOLVER_NAMES};
use solver::solver_by_name;
use stencil::{Level, CENTER};

use crate::error::{Error, Result};
use crate::walk::StepDistribution;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Name of a registered solver, see [`SOLVER_NAMES`].
    pub solver: String,
    pub solve: SolverConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { solver: "multigrid".into(), solve: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Vertical,
    Horizontal,
    Far,
}

fn classify_node(i: i64, j: i64, nx: usize, ny: usize) -> Option<Boundary> {
    if i == 0 {
        Some(Boundary::Vertical)
    } else if j == 0 {
        Some(Boundary::Horizontal)
    } else if i >= nx as i64 || j >= ny as i64 {
        Some(Boundary::Far)
    } else {
        None
    }
}

fn check_sizes(nx: usize, ny: usize) -> Result<()> {
    if nx < 4 || ny < 4 {
        return Err(Error::validation("grid", format!("{nx}x{ny} is too small; both sizes must be at least 4")));
    }
    Ok(())
}

/// `I − P` restricted to the interior, and the boundary data split by kind.
struct Problem {
    op: Level,
    axis: Vec<f64>,
    far: Vec<f64>,
}

fn assemble(p: &StepDistribution, nx: usize, ny: usize) -> Problem {
    let mut op = Level::zeros(nx - 1, ny - 1);
    let mut axis = vec![0.0; op.len()];
    let mut far = vec![0.0; op.len()];
    for j in 1..ny {
        for i in 1..nx {
            let f = op.idx(i, j);
            let mut s = [0.0; 9];
            s[CENTER] = 1.0;
            for ((di, dj), q) in p.entries() {
                let (gi, gj) = (i as i64 + di as i64, j as i64 + dj as i64);
                match classify_node(gi, gj, nx, ny) {
                    None => s[((di + 1) + 3 * (dj + 1)) as usize] = -q,
                    Some(Boundary::Vertical) => axis[f] += q,
                    Some(Boundary::Horizontal) => {}
                    Some(Boundary::Far) => far[f] += q,
                }
            }
            op.a[f] = s;
        }
    }
    Problem { op, axis, far }
}

/// Values on the full grid `0 ≤ i ≤ nx`, `0 ≤ j ≤ ny`, boundary included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpGrid {
    pub nx: usize,
    pub ny: usize,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DpGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i + j * (self.nx + 1)]
    }
}

fn full_grid(op: &Level, x: &[f64], nx: usize, ny: usize, far_bc: f64) -> Vec<f64> {
    let mut v = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            v[i + j * (nx + 1)] = match classify_node(i as i64, j as i64, nx, ny) {
                Some(Boundary::Vertical) => 1.0,
                Some(Boundary::Horizontal) => 0.0,
                Some(Boundary::Far) => far_bc,
                None => x[op.idx(i, j)],
            };
        }
    }
    v
}

/// The hitting probability on the truncated grid with the far boundary held
/// at `far_bc`.
pub fn solve_dp(p: &StepDistribution, nx: usize, ny: usize, far_bc: f64, cfg: &OracleConfig) -> Result<DpGrid> {
    check_sizes(nx, ny)?;
    cfg.solve.validate()?;
    if far_bc != 0.0 && far_bc != 1.0 {
        return Err(Error::validation("far_bc", "must be 0 or 1"));
    }
    let solver = solver_by_name(&cfg.solver)?;
    let pr = assemble(p, nx, ny);
    let b: Vec<f64> = pr.axis.iter().zip(&pr.far).map(|(a, f)| a + far_bc * f).collect();
    let (mut xs, stats) = solver.solve_many(&pr.op, &[b], &cfg.solve)?;
    let x = xs.pop().unwrap();
    Ok(DpGrid { nx, ny, values: full_grid(&pr.op, &x, nx, ny, far_bc), iterations: stats.iterations, residual: stats.residual })
}

/// Both truncations at once. `upper − lower` is solved for directly, so
/// small widths keep their relative accuracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSolution {
    pub nx: usize,
    pub ny: usize,
    #[serde(skip)]
    pub lower: Vec<f64>,
    #[serde(skip)]
    pub width: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub solver: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lo - slack && v <= self.hi + slack
    }
}

impl GridSolution {
    fn at(&self, v: &[f64], i: usize, j: usize) -> f64 {
        v[i + j * (self.nx + 1)]
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.at(&self.lower, i, j)
    }

    pub fn upper(&self, i: usize, j: usize) -> f64 {
        (self.lower(i, j) + self.width(i, j)).min(1.0)
    }

    pub fn width(&self, i: usize, j: usize) -> f64 {
        self.at(&self.width, i, j)
    }

    pub fn bracket(&self, i0: u32, j0: u32) -> Result<Bracket> {
        let (i, j) = (i0 as usize, j0 as usize);
        if i0 == 0 || j0 == 0 || i >= self.nx || j >= self.ny {
            return Err(Error::validation("start", format!("({i0},{j0}) is not inside the {}x{} grid", self.nx, self.ny)));
        }
        Ok(Bracket { lo: self.lower(i, j), hi: self.upper(i, j) })
    }
}

pub fn solve_bracket(p: &StepDistribution, nx: usize, ny: usize, cfg: &OracleConfig) -> Result<GridSolution> {
    check_sizes(nx, ny)?;
    cfg.solve.validate()?;
    let solver = solver_by_name(&cfg.solver)?;
    let pr = assemble(p, nx, ny);
    let (xs, stats) = solver.solve_many(&pr.op, &[pr.axis, pr.far], &cfg.solve)?;
    let mut lower = full_grid(&pr.op, &xs[0], nx, ny, 0.0);
    let mut width = full_grid(&pr.op, &xs[1], nx, ny, 1.0);
    for j in 0..=ny {
        for i in 0..=nx {
            let k = i + j * (nx + 1);
            if i == 0 || j == 0 {
                width[k] = 0.0;
            }
            // iterates can stray past [0, 1] by the residual
            lower[k] = lower[k].clamp(0.0, 1.0);
            width[k] = width[k].clamp(0.0, 1.0 - lower[k]);
        }
    }
    Ok(GridSolution { nx, ny, lower, width, iterations: stats.iterations, residual: stats.residual, solver: solver.name() })
}

/// `lo ≤ P ≤ hi` for the start `(i0, j0)`.
pub fn bracket_probability(
    p: &StepDistribution,
    i0: u32,
    j0: u32,
    nx: usize,
    ny: usize,
    cfg: &OracleConfig,
) -> Result<Bracket> {
    if i0 as usize >= nx || j0 as usize >= ny {
        return Err(Error::validation("grid", format!("start ({i0},{j0}) must lie inside the {nx}x{ny} grid")));
    }
    solve_bracket(p, nx, ny, cfg)?.bracket(i0, j0)
}

/// Where a walk from `(i0, j0)` leaves the quadrant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitDistribution {
    /// `h[i] = P[exit at (i, 0)]`; `h[0]` is unused and zero.
    pub h: Vec<f64>,
    /// `htilde[j] = P[exit at (0, j)]`; `htilde[0]` is unused and zero.
    pub htilde: Vec<f64>,
    pub h00: f64,
    /// Mass absorbed on the artificial far boundary.
    pub far: f64,
    pub residual: f64,
}

impl ExitDistribution {
    pub fn total(&self) -> f64 {
        self.h.iter().sum::<f64>() + self.htilde.iter().sum::<f64>() + self.h00
    }

    /// `Σ h[i] xⁱ`.
    pub fn h_series(&self, x: num_complex::Complex64) -> num_complex::Complex64 {
        series(&self.h, x)
    }

    /// `Σ h̃[j] yʲ`.
    pub fn htilde_series(&self, y: num_complex::Complex64) -> num_complex::Complex64 {
        series(&self.htilde, y)
    }
}

fn series(c: &[f64], x: num_complex::Complex64) -> num_complex::Complex64 {
    c.iter().rev().fold(num_complex::Complex64::new(0.0, 0.0), |acc, &v| acc * x + v)
}

/// Exit masses from the expected visit counts `G = (I − P)^{-T} e_start`.
pub fn exit_distribution(
    p: &StepDistribution,
    i0: u32,
    j0: u32,
    nx: usize,
    ny: usize,
    cfg: &OracleConfig,
) -> Result<ExitDistribution> {
    check_sizes(nx, ny)?;
    cfg.solve.validate()?;
    let (i0, j0) = (i0 as usize, j0 as usize);
    if i0 == 0 || j0 == 0 || i0 >= nx || j0 >= ny {
        return Err(Error::validation("start", format!("({i0},{j0}) must lie inside the {nx}x{ny} grid")));
    }
    let solver = solver_by_name(&cfg.solver)?;
    let pr = assemble(p, nx, ny);
    let opt = pr.op.transpose();
    let mut e = vec![0.0; opt.len()];
    e[opt.idx(i0, j0)] = 1.0;
    let (xs, stats) = solver.solve_many(&opt, &[e], &cfg.solve)?;
    let g = &xs[0];
    let mut out = ExitDistribution { h: vec![0.0; nx + 1], htilde: vec![0.0; ny + 1], h00: 0.0, far: 0.0, residual: stats.residual };
    for j in 1..ny {
        for i in 1..nx {
            let gf = g[opt.idx(i, j)];
            for ((di, dj), q) in p.entries() {
                let (gi, gj) = (i as i64 + di as i64, j as i64 + dj as i64);
                let m = gf * q;
                match classify_node(gi, gj, nx, ny) {
                    None => {}
                    Some(Boundary::Vertical) if gj == 0 => out.h00 += m,
                    Some(Boundary::Vertical) => out.htilde[gj as usize] += m,
                    Some(Boundary::Horizontal) => out.h[gi as usize] += m,
                    Some(Boundary::Far) => out.far += m,
                }
            }
        }
    }
    Ok(out)
}
