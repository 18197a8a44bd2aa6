//! Step distributions, hypothesis checks, drift classification and presets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a step distribution.
pub const SUM_TOL: f64 = 1e-12;
/// Absolute tolerance below which a drift component counts as zero.
pub const DRIFT_TOL: f64 = 1e-12;

/// The eight admissible steps, in the fixed storage order used by [`StepDistribution`].
pub const STEPS: [(i32, i32); 8] =
    [(1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1)];

fn slot(di: i32, dj: i32) -> Option<usize> {
    STEPS.iter().position(|&s| s == (di, dj))
}

/// Transition probabilities of a homogeneous nearest-neighbour walk.
///
/// Storage follows [`STEPS`], which is also the cyclic order used by the
/// "three consecutive zeros" check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDistribution {
    probs: [f64; 8],
}

impl StepDistribution {
    /// Builds and validates a distribution from `((di, dj), p)` entries.
    /// Missing steps have probability zero.
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((i32, i32), f64)>,
    {
        let mut probs = [0.0; 8];
        let mut seen = [false; 8];
        for ((di, dj), p) in entries {
            let entry = format!("p({di},{dj})");
            if (di, dj) == (0, 0) {
                return Err(Error::validation(entry, "self-loops are not allowed"));
            }
            let k = slot(di, dj)
                .ok_or_else(|| Error::validation(&entry, "steps must lie in {-1,0,1}^2"))?;
            if seen[k] {
                return Err(Error::validation(entry, "duplicate step"));
            }
            seen[k] = true;
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(entry, format!("probability {p} outside [0,1]")));
            }
            probs[k] = p;
        }
        Self::from_array(probs)
    }

    /// Builds from an array in [`STEPS`] order.
    pub fn from_array(probs: [f64; 8]) -> Result<Self> {
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                let (di, dj) = STEPS[k];
                return Err(Error::validation(
                    format!("p({di},{dj})"),
                    format!("probability {p} outside [0,1]"),
                ));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::validation("sum", format!("probabilities sum to {total}, not 1")));
        }
        Ok(StepDistribution { probs })
    }

    /// Parses the JSON model format `{"steps":[{"di":1,"dj":0,"p":0.2}, ...]}`.
    /// Probabilities may be numbers or decimal strings.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::validation("model file", e.to_string()))?;
        let mut entries = Vec::with_capacity(file.steps.len());
        for (n, s) in file.steps.into_iter().enumerate() {
            let p = match s.p {
                Prob::Number(v) => v,
                Prob::Text(t) => t.trim().parse::<f64>().map_err(|e| {
                    Error::validation(format!("steps[{n}].p"), format!("`{t}`: {e}"))
                })?,
            };
            entries.push(((s.di, s.dj), p));
        }
        Self::new(entries)
    }

    pub fn to_json(&self) -> String {
        let steps = self
            .entries()
            .filter(|&(_, p)| p > 0.0)
            .map(|((di, dj), p)| StepEntry { di, dj, p: Prob::Number(p) })
            .collect();
        serde_json::to_string(&ModelFile { steps }).expect("model serialization cannot fail")
    }

    #[inline]
    pub fn p(&self, di: i32, dj: i32) -> f64 {
        slot(di, dj).map_or(0.0, |k| self.probs[k])
    }

    /// Probabilities in [`STEPS`] order.
    pub fn as_array(&self) -> &[f64; 8] {
        &self.probs
    }

    pub fn entries(&self) -> impl Iterator<Item = ((i32, i32), f64)> + '_ {
        STEPS.iter().copied().zip(self.probs.iter().copied())
    }

    /// Steps with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.entries().filter(|&(_, p)| p > 0.0).map(|(s, _)| s)
    }

    /// Whether every step with positive probability belongs to `allowed`.
    pub fn support_within(&self, allowed: &[(i32, i32)]) -> bool {
        self.support().all(|s| allowed.contains(&s))
    }

    /// The walk with every step negated.
    pub fn reversed(&self) -> StepDistribution {
        let mut probs = [0.0; 8];
        for ((di, dj), p) in self.entries() {
            probs[slot(-di, -dj).unwrap()] = p;
        }
        StepDistribution { probs }
    }

    pub fn drift(&self) -> DriftVector {
        let mut mx = 0.0;
        let mut my = 0.0;
        for ((di, dj), p) in self.entries() {
            mx += di as f64 * p;
            my += dj as f64 * p;
        }
        DriftVector { mx, my }
    }

    /// Second moments `(Σ i² p, Σ i j p, Σ j² p)`.
    pub fn second_moments(&self) -> (f64, f64, f64) {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for ((di, dj), p) in self.entries() {
            sxx += (di * di) as f64 * p;
            sxy += (di * dj) as f64 * p;
            syy += (dj * dj) as f64 * p;
        }
        (sxx, sxy, syy)
    }

    pub fn validate(&self) -> AssumptionReport {
        AssumptionReport::of(self)
    }

    pub fn classify(&self) -> WalkClass {
        let report = self.validate();
        let drift = self.drift();
        let tag = if report.h1 && report.h2 && report.h3 && report.h4 {
            let zx = drift.mx.abs() <= DRIFT_TOL;
            let zy = drift.my.abs() <= DRIFT_TOL;
            match (zx, zy) {
                (true, true) => ClassTag::ZeroZero,
                (false, true) => ClassTag::NegZero,
                _ => ClassTag::NegNeg,
            }
        } else if report.h2prime {
            ClassTag::H2Prime
        } else {
            ClassTag::Unsupported
        };
        WalkClass { tag, report }
    }
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.entries().filter(|&(_, p)| p > 0.0).map(|((i, j), p)| format!("({i},{j}):{p}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    steps: Vec<StepEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepEntry {
    di: i32,
    dj: i32,
    p: Prob,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Prob {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftVector {
    pub mx: f64,
    pub my: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
    pub h2prime: bool,
    pub messages: Vec<String>,
}

impl AssumptionReport {
    fn of(p: &StepDistribution) -> Self {
        let mut messages = Vec::new();
        // Any value of the type is already a homogeneous nearest-neighbour walk.
        let h1 = true;

        let zeros: Vec<bool> = p.probs.iter().map(|&v| v == 0.0).collect();
        let h2 = !(0..8).any(|k| zeros[k] && zeros[(k + 1) % 8] && zeros[(k + 2) % 8]);
        if !h2 {
            messages.push("H2: three consecutive zero probabilities in the cyclic step list".into());
        }

        let diag = p.p(1, 1) + p.p(-1, 1) + p.p(-1, -1) + p.p(1, -1);
        let h3 = diag < 1.0 - SUM_TOL;
        if !h3 {
            messages.push(format!("H3: diagonal mass {diag} is not below 1"));
        }

        let d = p.drift();
        let h4 = d.mx <= DRIFT_TOL && d.my <= DRIFT_TOL;
        if !h4 {
            messages.push(format!("H4: positive drift ({}, {})", d.mx, d.my));
        }

        let west_south = p.p(-1, 1) + p.p(-1, 0) + p.p(-1, -1) + p.p(0, -1) + p.p(1, -1);
        let h2prime = (west_south - 1.0).abs() <= SUM_TOL
            && p.p(-1, 1) != 0.0
            && p.p(1, -1) != 0.0
            && (p.p(-1, 1) + p.p(1, -1) - 1.0).abs() > SUM_TOL;

        AssumptionReport { h1, h2, h3, h4, h2prime, messages }
    }

    pub fn all_main(&self) -> bool {
        self.h1 && self.h2 && self.h3 && self.h4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ClassTag {
    ZeroZero,
    NegNeg,
    NegZero,
    H2Prime,
    Unsupported,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkClass {
    pub tag: ClassTag,
    pub report: AssumptionReport,
}

/// Named walks. Parameters are positional.
pub fn preset(name: &str, params: &[f64]) -> Result<StepDistribution> {
    let bad = |reason: &str| Error::PresetParams { name: name.to_string(), reason: reason.to_string() };
    let want = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(bad(&format!("expected {n} parameters, got {}", params.len())));
        }
        if params.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(bad("parameters must be finite and nonnegative"));
        }
        Ok(())
    };
    match name {
        "voter" => {
            want(0)?;
            let s = 1.0 / 6.0;
            StepDistribution::new([(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)].map(|st| (st, s)))
        }
        "simple" => {
            want(0)?;
            StepDistribution::new([(1, 0), (0, 1), (-1, 0), (0, -1)].map(|st| (st, 0.25)))
        }
        "tandem" => {
            want(2)?;
            let (lambda, nu) = (params[0], params[1]);
            if (lambda + 2.0 * nu - 1.0).abs() > SUM_TOL {
                return Err(bad("lambda + 2 nu must equal 1"));
            }
            StepDistribution::new([((1, 0), lambda), ((0, -1), nu), ((-1, 1), nu)])
        }
        "nucleosome" => {
            want(2)?;
            let (lambda, nu) = (params[0], params[1]);
            if lambda <= 0.0 || nu <= 0.0 {
                return Err(bad("lambda and nu must be positive"));
            }
            let z = 2.0 * (2.0 * lambda + nu);
            let (s, t) = (lambda / z, nu / z);
            StepDistribution::new([
                ((1, 0), s),
                ((-1, 0), s),
                ((0, 1), s),
                ((0, -1), s),
                ((1, -1), t),
                ((-1, 1), t),
            ])
        }
        "asym_simple" => {
            want(4)?;
            if (params.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
                return Err(bad("p + q + r + s must equal 1"));
            }
            StepDistribution::new([
                ((1, 0), params[0]),
                ((-1, 0), params[1]),
                ((0, 1), params[2]),
                ((0, -1), params[3]),
            ])
        }
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

pub const PRESET_NAMES: [&str; 5] = ["voter", "simple", "tandem", "nucleosome", "asym_simple"];
