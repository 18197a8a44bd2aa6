//! Command-line grammar and conversion into run requests.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qhp_core::method::MethodConfig;
use qhp_core::montecarlo::SimulationConfig;
use qhp_core::oracle::{OracleConfig, SolverConfig};
use qhp_core::quadrature::QuadratureConfig;
use qhp_core::walk::{preset, StepDistribution};

#[derive(Parser, Debug)]
#[command(name = "qhp", version, about = "Probability that a quarter-plane walk hits the vertical axis first")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assumptions, class, branch points and gluing for a walk.
    Check(CheckArgs),
    /// Hitting probabilities, one row per start and method.
    Prob(ProbArgs),
    /// Same as `prob`; reads naturally with ranges such as `--i0 40:160:40`.
    Sweep(ProbArgs),
    /// Largest pairwise disagreement between methods at each start.
    Compare(CompareArgs),
    /// Asymptotic constants of the walk's class.
    Constants(ConstantsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Named walk: voter, simple, tandem, nucleosome, asym_simple.
    #[arg(long, conflicts_with = "model")]
    pub preset: Option<String>,
    /// Comma-separated preset parameters, in order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "preset")]
    pub params: Vec<f64>,
    /// JSON model file `{"steps":[{"di":1,"dj":0,"p":0.25},...]}`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

impl ModelArgs {
    pub fn load(&self) -> Result<StepDistribution> {
        match (&self.preset, &self.model) {
            (Some(name), None) => Ok(preset(name, &self.params)?),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                StepDistribution::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
            }
            (Some(_), Some(_)) => bail!("give either --preset or --model, not both"),
            (None, None) => bail!("a walk is required: --preset NAME or --model FILE"),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    /// Chebyshev samples for the gluing check.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Start height used by constants that depend on it.
    #[arg(long, default_value_t = 1)]
    pub j0: u32,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Args, Debug, Clone)]
pub struct ProbArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Start abscissa: `N`, `A:B`, `A:B:STEP`, or a comma list of these.
    #[arg(long)]
    pub i0: String,
    /// Start ordinate, same syntax as `--i0`.
    #[arg(long)]
    pub j0: String,
    /// Methods: dp, integral, asymptotic, continuum, mc.
    #[arg(long, value_delimiter = ',', default_value = "dp")]
    pub method: Vec<String>,
    #[command(flatten)]
    pub knobs: Knobs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report runtime_ms as 0 so that output is byte-stable.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Knobs {
    /// DP grid `NXxNY`; sized from the starts when omitted.
    #[arg(long)]
    pub grid: Option<String>,
    /// DP solver: multigrid or sor.
    #[arg(long, default_value = "multigrid")]
    pub solver: String,
    /// DP residual tolerance.
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    pub solver_tol: f64,
    /// Initial quadrature nodes per half-range.
    #[arg(long, default_value_t = QuadratureConfig::default().nodes)]
    pub nodes: usize,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = SimulationConfig::default().n_paths)]
    pub paths: u64,
    #[arg(long, default_value_t = SimulationConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = SimulationConfig::default().max_steps)]
    pub max_steps: u64,
    /// Monte Carlo substreams; part of the reproducibility contract.
    #[arg(long, default_value_t = SimulationConfig::default().workers)]
    pub workers: u32,
}

impl Knobs {
    pub fn config(&self) -> Result<MethodConfig> {
        let grid = self.grid.as_deref().map(parse_grid).transpose()?;
        let solve = SolverConfig { tol: self.solver_tol, ..SolverConfig::default() };
        solve.validate()?;
        let quadrature = QuadratureConfig { nodes: self.nodes, ..QuadratureConfig::default() };
        quadrature.validate()?;
        let simulation =
            SimulationConfig { n_paths: self.paths, seed: self.seed, max_steps: self.max_steps, workers: self.workers };
        if self.paths == 0 || self.max_steps == 0 || self.workers == 0 {
            bail!("--paths, --max-steps and --workers must be positive");
        }
        Ok(MethodConfig { grid, oracle: OracleConfig { solver: self.solver.clone(), solve }, quadrature, simulation })
    }
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: ProbArgs,
    /// Largest allowed discrepancy.
    #[arg(long)]
    pub tol: f64,
    /// Divide each difference by the larger magnitude of the pair.
    #[arg(long)]
    pub relative: bool,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| anyhow!("grid `{s}`: expected NXxNY"))?;
    let nx = a.trim().parse().with_context(|| format!("grid `{s}`"))?;
    let ny = b.trim().parse().with_context(|| format!("grid `{s}`"))?;
    Ok((nx, ny))
}

/// `N`, `A:B` (step 1), `A:B:STEP`, or a comma list of these; inclusive.
pub fn parse_range(s: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let nums: Vec<u32> = part
            .split(':')
            .map(|t| t.trim().parse::<u32>().with_context(|| format!("range `{s}`: `{t}` is not a count")))
            .collect::<Result<_>>()?;
        match nums[..] {
            [n] => out.push(n),
            [a, b] | [a, b, _] => {
                let step = nums.get(2).copied().unwrap_or(1);
                if step == 0 {
                    bail!("range `{s}`: step must be positive");
                }
                if b < a {
                    bail!("range `{s}` is empty");
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => bail!("range `{s}`: expected N, A:B or A:B:STEP"),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("40:160:40").unwrap(), [40, 80, 120, 160]);
        assert_eq!(parse_range("3").unwrap(), [3]);
        assert_eq!(parse_range("1:3,7,2").unwrap(), [1, 2, 3, 7]);
        assert!(parse_range("5:1").is_err());
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("a").is_err());
        assert!(parse_range("1:2:3:4").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("600x800").unwrap(), (600, 800));
        assert!(parse_grid("600").is_err());
    }
}
