use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::amplify::DEFAULT_MAX_CALLS;
use crate::error::{invalid, Result};
use crate::noise::Channel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    BaselineScaling,
    AmplifiedScaling,
    BoostedDetection,
    EstimationScaling,
    NoiseSweep,
    VerifyFormulas,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::BaselineScaling,
        ExperimentKind::AmplifiedScaling,
        ExperimentKind::BoostedDetection,
        ExperimentKind::EstimationScaling,
        ExperimentKind::NoiseSweep,
        ExperimentKind::VerifyFormulas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::BaselineScaling => "baseline-scaling",
            ExperimentKind::AmplifiedScaling => "amplified-scaling",
            ExperimentKind::BoostedDetection => "boosted-detection",
            ExperimentKind::EstimationScaling => "estimation-scaling",
            ExperimentKind::NoiseSweep => "noise-sweep",
            ExperimentKind::VerifyFormulas => "verify-formulas",
        }
    }

    pub(crate) fn stream_tag(&self) -> u64 {
        *self as u64 + 1
    }

    fn default_c_grid(&self) -> Vec<f64> {
        match self {
            ExperimentKind::EstimationScaling => vec![0.1, 0.25, 0.5],
            ExperimentKind::NoiseSweep => vec![0.01, 0.04, 0.16],
            _ => (2..=10).map(|e| 2f64.powi(-e)).collect(),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Settings for one experiment. Optional fields fall back to per-experiment
/// defaults in the accessor methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub c_grid: Option<Vec<f64>>,
    pub delta: f64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub p_err_grid: Vec<f64>,
    pub channel: Channel,
    /// Phase-estimation repetitions; defaults from `delta`.
    pub repetitions: Option<u32>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            d: 4,
            c_grid: None,
            delta: 0.05,
            epsilon: 0.05,
            trials: 1000,
            seed: 1,
            budget: None,
            out: None,
            p_err_grid: vec![0.0, 1e-3, 1e-2, 1e-1],
            channel: Channel::Depolarizing,
            repetitions: None,
        }
    }

    pub fn c_grid(&self) -> Vec<f64> {
        self.c_grid
            .clone()
            .unwrap_or_else(|| self.experiment.default_c_grid())
    }

    /// Explicit budget, else the sweep rule for noise runs, else the
    /// detector default.
    pub fn budget(&self) -> u64 {
        match (self.budget, self.experiment) {
            (Some(b), _) => b,
            (None, ExperimentKind::NoiseSweep) => {
                let c_min = self.c_grid().into_iter().fold(f64::INFINITY, f64::min);
                (crate::noise::SWEEP_BUDGET_FACTOR / c_min.sqrt()).ceil() as u64
            }
            (None, _) => DEFAULT_MAX_CALLS,
        }
    }

    /// Sets one field from its textual form. Accepts both `c_grid` and
    /// `c-grid` spellings; lists are comma-separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "experiment" => self.experiment = value.parse().map_err(|e| invalid("experiment", e))?,
            "d" => self.d = parse_num("d", value)?,
            "c-grid" => self.c_grid = Some(parse_list("c-grid", value)?),
            "delta" => self.delta = parse_num("delta", value)?,
            "epsilon" => self.epsilon = parse_num("epsilon", value)?,
            "trials" => self.trials = parse_num("trials", value)?,
            "seed" => self.seed = parse_num("seed", value)?,
            "budget" => self.budget = Some(parse_num("budget", value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "p-err-grid" => self.p_err_grid = parse_list("p-err-grid", value)?,
            "channel" => self.channel = value.parse().map_err(|e| invalid("channel", e))?,
            "repetitions" => self.repetitions = Some(parse_num("repetitions", value)?),
            _ => return Err(invalid("config", format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a plain-text `key = value` file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid("config", format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Checks every numeric range. Errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(2..=64).contains(&self.d) {
            return Err(invalid("d", format!("{} not in 2..=64", self.d)));
        }
        let c_max = 1.0 - 1.0 / self.d as f64;
        let grid = self.c_grid();
        if grid.is_empty() && self.experiment != ExperimentKind::VerifyFormulas {
            return Err(invalid("c-grid", "empty"));
        }
        let allow_zero = self.experiment == ExperimentKind::EstimationScaling;
        for &c in &grid {
            let low_ok = if allow_zero { c >= 0.0 } else { c > 0.0 };
            if !(low_ok && c <= c_max) {
                return Err(invalid("c-grid", format!("{c} outside (0, {c_max}] for d = {}", self.d)));
            }
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(invalid("delta", format!("{} not in (0, 1/2)", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(invalid("budget", "must be at least 1"));
        }
        if let Some(&p) = self.p_err_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid("p-err-grid", format!("{p} not in [0, 1]")));
        }
        if self.experiment == ExperimentKind::NoiseSweep && self.p_err_grid.is_empty() {
            return Err(invalid("p-err-grid", "empty"));
        }
        if let Some(r) = self.repetitions {
            if r % 2 == 0 {
                return Err(invalid("repetitions", format!("{r} must be odd")));
            }
        }
        if self.experiment == ExperimentKind::EstimationScaling {
            let grid = crate::estimate::calls_for_accuracy(self.epsilon)?;
            if grid * self.d > crate::estimate::JOINT_DIM_LIMIT {
                return Err(invalid(
                    "epsilon",
                    format!("grid {grid} x d {} exceeds the simulation envelope", self.d),
                ));
            }
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(name: &'static str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| invalid(name, format!("cannot parse `{v}`")))
}

fn parse_list(name: &'static str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(name, s.trim()))
        .collect()
}
