//! Direct simulation of the walk until it reaches an axis.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::StepDistribution;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub max_steps: u64,
    /// Paths are split into this many fixed chunks, each with its own
    /// stream; results depend on it but not on the thread pool.
    pub workers: u32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { n_paths: 100_000, seed: 20_240_601, max_steps: 1_000_000, workers: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationEstimate {
    pub n_paths: u64,
    pub hits_v: u64,
    pub hits_h: u64,
    pub censored: u64,
    /// `hits_v / (hits_v + hits_h)`.
    pub point: f64,
    /// Wilson score interval for `point` on the uncensored paths.
    pub ci95: (f64, f64),
    /// Censored paths counted as H-hits (low end) or V-hits (high end).
    pub bracket: (f64, f64),
    pub seed: u64,
    pub max_steps: u64,
    pub workers: u32,
}

impl SimulationEstimate {
    /// Wilson interval of the low censoring count joined with that of the
    /// high count: `[W₋(hits_v, n), W₊(hits_v + censored, n)]`.
    pub fn widened_ci(&self) -> (f64, f64) {
        let lo = wilson(self.hits_v, self.n_paths).0;
        let hi = wilson(self.hits_v + self.censored, self.n_paths).1;
        (lo, hi)
    }
}

/// Wilson score interval at 95%.
pub fn wilson(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the endpoints are exact at the extremes, rounding aside
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    v: u64,
    h: u64,
    censored: u64,
}

struct Sampler {
    cum: Vec<f64>,
    steps: Vec<(i64, i64)>,
}

impl Sampler {
    fn new(p: &StepDistribution) -> Self {
        let mut cum = Vec::new();
        let mut steps = Vec::new();
        let mut acc = 0.0;
        for ((di, dj), q) in p.entries() {
            acc += q;
            cum.push(acc);
            steps.push((di as i64, dj as i64));
        }
        // guard against the total falling short of 1 by rounding
        *cum.last_mut().unwrap() = f64::INFINITY;
        Sampler { cum, steps }
    }

    #[inline]
    fn draw(&self, u: f64) -> (i64, i64) {
        let k = self.cum.iter().position(|&c| u < c).unwrap();
        self.steps[k]
    }
}

fn run_chunk(s: &Sampler, i0: u32, j0: u32, n: u64, seed: u64, stream: u64, max_steps: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut t = Tally::default();
    for _ in 0..n {
        let (mut i, mut j) = (i0 as i64, j0 as i64);
        let mut steps = 0;
        loop {
            if i == 0 {
                t.v += 1;
                break;
            }
            if j == 0 {
                t.h += 1;
                break;
            }
            if steps == max_steps {
                t.censored += 1;
                break;
            }
            let (di, dj) = s.draw(rng.random::<f64>());
            i += di;
            j += dj;
            steps += 1;
        }
    }
    t
}

/// Simulates `cfg.n_paths` walks from `(i0, j0)`.
pub fn simulate(p: &StepDistribution, i0: u32, j0: u32, cfg: &SimulationConfig) -> Result<SimulationEstimate> {
    if i0 == 0 || j0 == 0 {
        return Err(Error::validation("start", "i0, j0 >= 1 required"));
    }
    if cfg.n_paths == 0 || cfg.max_steps == 0 || cfg.workers == 0 {
        return Err(Error::validation("simulation", "paths, max_steps and workers must be positive"));
    }
    let s = Sampler::new(p);
    let w = cfg.workers as u64;
    let tallies: Vec<Tally> = (0..w)
        .into_par_iter()
        .map(|k| {
            let n = cfg.n_paths / w + u64::from(k < cfg.n_paths % w);
            run_chunk(&s, i0, j0, n, cfg.seed, k, cfg.max_steps)
        })
        .collect();
    let t = tallies.iter().fold(Tally::default(), |a, b| Tally { v: a.v + b.v, h: a.h + b.h, censored: a.censored + b.censored });
    let n = cfg.n_paths;
    let done = t.v + t.h;
    let point = if done == 0 { 0.5 } else { t.v as f64 / done as f64 };
    Ok(SimulationEstimate {
        n_paths: n,
        hits_v: t.v,
        hits_h: t.h,
        censored: t.censored,
        point,
        ci95: wilson(t.v, done),
        bracket: (t.v as f64 / n as f64, (t.v + t.censored) as f64 / n as f64),
        seed: cfg.seed,
        max_steps: cfg.max_steps,
        workers: cfg.workers,
    })
}
