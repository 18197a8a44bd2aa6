//! Hitting-probability methods behind one interface, looked up by name.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{asymptotic_probability, continuum_probability, law};
use crate::error::{Error, Result};
use crate::gluing::GluingFunction;
use crate::integral::hit_probability;
use crate::kernel::Kernel;
use crate::montecarlo::{simulate, SimulationConfig};
use crate::oracle::{solve_bracket, OracleConfig};
use crate::quadrature::QuadratureConfig;
use crate::walk::{ClassTag, StepDistribution, WalkClass};

/// A walk with everything the methods share, built once.
#[derive(Debug, Clone)]
pub struct Model {
    pub p: StepDistribution,
    pub class: WalkClass,
    pub kernel: Result<Kernel>,
    pub gluing: Result<GluingFunction>,
}

impl Model {
    pub fn new(p: &StepDistribution) -> Self {
        let class = p.classify();
        let kernel = if class.tag == ClassTag::Unsupported {
            Err(Error::Unsupported(format!("walk violates the standing assumptions: {}", class.report.messages.join("; "))))
        } else {
            Kernel::new(p)
        };
        let gluing = match &kernel {
            Ok(k) => GluingFunction::build(k, class.tag),
            Err(e) => Err(e.clone()),
        };
        Model { p: *p, class, kernel, gluing }
    }

    pub fn kernel(&self) -> Result<&Kernel> {
        self.kernel.as_ref().map_err(Clone::clone)
    }

    pub fn gluing(&self) -> Result<&GluingFunction> {
        self.gluing.as_ref().map_err(Clone::clone)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[derive(Default)]
pub struct MethodConfig {
    /// DP grid; chosen from the requested starts when absent.
    pub grid: Option<(usize, usize)>,
    pub oracle: OracleConfig,
    pub quadrature: QuadratureConfig,
    pub simulation: SimulationConfig,
}


/// `value` with an interval `[lo, hi]` that the method claims contains the
/// true probability. Methods without an error model report `lo = hi = value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub detail: Value,
}

impl Estimate {
    fn exact(value: f64, detail: Value) -> Self {
        Estimate { value, lo: value, hi: value, detail }
    }
}

pub trait HittingMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn estimate(&self, m: &Model, i0: u32, j0: u32, cfg: &MethodConfig) -> Result<Estimate>;

    /// One result per point, in order.
    fn estimate_many(&self, m: &Model, points: &[(u32, u32)], cfg: &MethodConfig) -> Vec<Result<Estimate>> {
        points.par_iter().map(|&(i, j)| self.estimate(m, i, j, cfg)).collect()
    }
}

fn check_start(i0: u32, j0: u32) -> Result<()> {
    if i0 == 0 || j0 == 0 {
        return Err(Error::validation("start", format!("({i0},{j0}): i0, j0 >= 1 required")));
    }
    Ok(())
}

/// Default DP grid covering every start with room to spare. Walks with a
/// zero vertical drift leave through the top slowly and get a taller grid.
pub fn default_grid(m: &Model, points: &[(u32, u32)]) -> (usize, usize) {
    let imax = points.iter().map(|p| p.0).max().unwrap_or(1) as usize;
    let jmax = points.iter().map(|p| p.1).max().unwrap_or(1) as usize;
    let nx = (4 * imax).max(400);
    let ny = (4 * jmax).max(400);
    match m.class.tag {
        ClassTag::NegZero => (nx, ny.max(2 * nx)),
        _ => (nx, ny),
    }
}

pub struct Dp;

impl HittingMethod for Dp {
    fn name(&self) -> &'static str {
        "dp"
    }

    fn estimate(&self, m: &Model, i0: u32, j0: u32, cfg: &MethodConfig) -> Result<Estimate> {
        self.estimate_many(m, &[(i0, j0)], cfg).pop().unwrap()
    }

    /// Solves the grid once for all points.
    fn estimate_many(&self, m: &Model, points: &[(u32, u32)], cfg: &MethodConfig) -> Vec<Result<Estimate>> {
        let (nx, ny) = cfg.grid.unwrap_or_else(|| default_grid(m, points));
        let sol = match solve_bracket(&m.p, nx, ny, &cfg.oracle) {
            Ok(s) => s,
            Err(e) => return points.iter().map(|_| Err(e.clone())).collect(),
        };
        points
            .iter()
            .map(|&(i0, j0)| {
                check_start(i0, j0)?;
                let b = sol.bracket(i0, j0)?;
                Ok(Estimate {
                    value: b.midpoint(),
                    lo: b.lo,
                    hi: b.hi,
                    detail: json!({
                        "nx": nx, "ny": ny, "solver": sol.solver,
                        "iterations": sol.iterations, "residual": sol.residual,
                    }),
                })
            })
            .collect()
    }
}

pub struct Integral;

impl HittingMethod for Integral {
    fn name(&self) -> &'static str {
        "integral"
    }

    fn estimate(&self, m: &Model, i0: u32, j0: u32, cfg: &MethodConfig) -> Result<Estimate> {
        check_start(i0, j0)?;
        let r = hit_probability(m.kernel()?, m.gluing()?, i0, j0, &cfg.quadrature)?;
        Ok(Estimate {
            value: r.value,
            lo: r.value - r.err_estimate,
            hi: r.value + r.err_estimate,
            detail: serde_json::to_value(r.diagnostics).unwrap_or(Value::Null),
        })
    }
}

pub struct Asymptotic;

impl HittingMethod for Asymptotic {
    fn name(&self) -> &'static str {
        "asymptotic"
    }

    fn estimate(&self, m: &Model, i0: u32, j0: u32, _cfg: &MethodConfig) -> Result<Estimate> {
        check_start(i0, j0)?;
        let k = m.kernel()?;
        let g = m.gluing().ok();
        let value = asymptotic_probability(k, g, i0, j0)?;
        let l = law(k, g, j0)?;
        Ok(Estimate::exact(value, serde_json::to_value(l).unwrap_or(Value::Null)))
    }
}

pub struct Continuum;

impl HittingMethod for Continuum {
    fn name(&self) -> &'static str {
        "continuum"
    }

    fn estimate(&self, m: &Model, i0: u32, j0: u32, _cfg: &MethodConfig) -> Result<Estimate> {
        check_start(i0, j0)?;
        let value = continuum_probability(&m.p, i0 as f64, j0 as f64)?;
        Ok(Estimate::exact(value, Value::Null))
    }
}

pub struct MonteCarlo;

impl HittingMethod for MonteCarlo {
    fn name(&self) -> &'static str {
        "mc"
    }

    fn estimate(&self, m: &Model, i0: u32, j0: u32, cfg: &MethodConfig) -> Result<Estimate> {
        let e = simulate(&m.p, i0, j0, &cfg.simulation)?;
        let (lo, hi) = e.widened_ci();
        Ok(Estimate { value: e.point, lo, hi, detail: serde_json::to_value(e).unwrap_or(Value::Null) })
    }

    /// Points run one after another; each simulation is already parallel.
    fn estimate_many(&self, m: &Model, points: &[(u32, u32)], cfg: &MethodConfig) -> Vec<Result<Estimate>> {
        points.iter().map(|&(i, j)| self.estimate(m, i, j, cfg)).collect()
    }
}

pub struct MethodRegistry {
    methods: Vec<Box<dyn HittingMethod>>,
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = MethodRegistry { methods: Vec::new() };
        r.register(Box::new(Dp));
        r.register(Box::new(Integral));
        r.register(Box::new(Asymptotic));
        r.register(Box::new(Continuum));
        r.register(Box::new(MonteCarlo));
        r
    }
}

impl MethodRegistry {
    /// Adds a method, replacing any with the same name.
    pub fn register(&mut self, m: Box<dyn HittingMethod>) {
        self.methods.retain(|x| x.name() != m.name());
        self.methods.push(m);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn HittingMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::validation("method", format!("unknown method `{name}` (expected one of {:?})", self.names())))
    }
}
