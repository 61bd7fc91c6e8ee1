//! Per-call stochastic noise as pure-state trajectories, and the
//! detection-under-noise sweep.
//!
//! After each oracle call the system is left alone with probability
//! `1 - p_err`; otherwise one sampled realization of the chosen channel is
//! applied. Averaging trajectories recovers the mixed-state channel
//! `(1 - p_err) id + p_err N`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::detect::{detect_amplified, DetectConfig};
use crate::error::{invalid, Result};
use crate::oracle::{CountedOracle, PostCallChannel};
use crate::qcore::{random_pure_state, state_with_coherence, PureState, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Replace the state with a Haar-random pure state.
    Depolarizing,
    /// Multiply every amplitude by an independent uniform phase.
    Dephasing,
    /// Collapse onto a basis state drawn by the Born rule.
    BasisReset,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Depolarizing => "depolarizing",
            Channel::Dephasing => "dephasing",
            Channel::BasisReset => "basis-reset",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "depolarizing" => Ok(Channel::Depolarizing),
            "dephasing" => Ok(Channel::Dephasing),
            "basis-reset" => Ok(Channel::BasisReset),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub p_err: f64,
    pub channel: Channel,
}

impl NoiseConfig {
    pub fn new(p_err: f64, channel: Channel) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_err) {
            return Err(invalid("p_err", format!("{p_err} not in [0, 1]")));
        }
        Ok(Self { p_err, channel })
    }

    pub fn depolarizing(p_err: f64) -> Result<Self> {
        Self::new(p_err, Channel::Depolarizing)
    }

    /// Samples one trajectory step in place. Returns whether noise struck.
    pub fn apply_in_place(&self, s: &mut PureState, rng: &mut RngStream) -> bool {
        if self.p_err <= 0.0 || rng.uniform() >= self.p_err {
            return false;
        }
        match self.channel {
            Channel::Depolarizing => {
                *s = random_pure_state(s.dim(), rng).expect("dim >= 2");
            }
            Channel::Dephasing => {
                for a in s.amps_mut() {
                    *a *= Complex64::from_polar(1.0, std::f64::consts::TAU * rng.uniform());
                }
            }
            Channel::BasisReset => {
                let k = s.measure_basis(rng);
                *s = PureState::basis(s.dim(), k).expect("index in range");
            }
        }
        s.renormalize();
        true
    }
}

/// Noisy copy of `s` after one trajectory step.
pub fn apply_noise_trajectory(s: &PureState, cfg: &NoiseConfig, rng: &mut RngStream) -> PureState {
    let mut out = s.clone();
    cfg.apply_in_place(&mut out, rng);
    out
}

/// [`PostCallChannel`] that injects trajectory noise after every oracle
/// call and counts how often it struck.
#[derive(Debug)]
pub struct TrajectoryNoise {
    cfg: NoiseConfig,
    rng: RngStream,
    events: Arc<AtomicU64>,
}

impl TrajectoryNoise {
    pub fn new(cfg: NoiseConfig, rng: RngStream) -> Self {
        Self {
            cfg,
            rng,
            events: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Shared handle to the noise-event counter.
    pub fn events(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.events)
    }
}

impl PostCallChannel for TrajectoryNoise {
    fn after_call(&mut self, state: &mut PureState) {
        if self.cfg.apply_in_place(state, &mut self.rng) {
            self.events.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// Oracle for `target` with trajectory noise after every call.
pub fn noisy_oracle(target: &PureState, cfg: NoiseConfig, rng: RngStream) -> (CountedOracle, Arc<AtomicU64>) {
    let noise = TrajectoryNoise::new(cfg, rng);
    let events = noise.events();
    (CountedOracle::synthesize(target).with_channel(Box::new(noise)), events)
}

/// Oracle-call budget per detector run, as a multiple of `1/sqrt(c)`.
pub const SWEEP_BUDGET_FACTOR: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub dim: usize,
    pub channel: Channel,
    /// Detector settings; `max_total_calls` is the cap for every run,
    /// coherent targets and incoherent controls alike.
    pub detect: DetectConfig,
}

impl SweepOptions {
    /// Budget `ceil(SWEEP_BUDGET_FACTOR / sqrt(c_min))`: a fixed multiple of
    /// the noiseless expected cost at the least coherent grid point.
    pub fn for_coherence(dim: usize, channel: Channel, c_min: f64) -> Result<Self> {
        if c_min.is_nan() || c_min <= 0.0 {
            return Err(invalid("c_min", format!("{c_min} must be positive")));
        }
        let budget = (SWEEP_BUDGET_FACTOR / c_min.sqrt()).ceil() as u64;
        Ok(Self {
            dim,
            channel,
            detect: DetectConfig::default().with_budget(budget),
        })
    }
}

/// One trial of the noisy detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyTrial {
    pub coherent_verdict: bool,
    pub calls: crate::oracle::CallTally,
    pub noise_events: u64,
}

/// Runs [`detect_amplified`] on `target` with noise after every call.
pub fn noisy_detect_trial(
    target: &PureState,
    noise: NoiseConfig,
    detect: &DetectConfig,
    rng: &mut RngStream,
) -> Result<NoisyTrial> {
    let (mut oracle, events) = noisy_oracle(target, noise, rng.derive(NOISE_STREAM_TAG));
    let out = detect_amplified(&mut oracle, detect, rng)?;
    Ok(NoisyTrial {
        coherent_verdict: out.is_coherent(),
        calls: out.calls,
        noise_events: events.load(Ordering::Relaxed),
    })
}

const NOISE_STREAM_TAG: u64 = 0x006e_6f69_7365;

/// Per-`(c, p_err)` statistics of the noisy detector.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub c: f64,
    pub p_err: f64,
    pub trials: u64,
    /// Fraction of coherent verdicts on states with coherence `c`.
    pub detection_rate: f64,
    /// Fraction of coherent verdicts on incoherent controls at this `p_err`.
    pub false_positive_rate: f64,
    /// `detection_rate - false_positive_rate`: how much better than its own
    /// false alarms the detector separates coherent from incoherent inputs.
    /// Equals `detection_rate` when noise is off (no false positives).
    pub success_rate: f64,
    /// Fraction of coherent verdicts reached without any noise event.
    pub clean_detection_rate: f64,
    pub mean_calls: f64,
    /// Fraction of coherent-target trials in which noise never struck.
    pub clean_fraction: f64,
}

/// Trial outcome for the coherent target or the incoherent control of a
/// sweep cell. Trial `t` of cell `(c, p_err)` depends only on the `rng`
/// stream, `c`, `p_err`, `t` and the options.
pub fn sweep_trial(
    c: f64,
    p_err: f64,
    trial: u64,
    control: bool,
    opts: &SweepOptions,
    rng: &RngStream,
) -> Result<NoisyTrial> {
    let c_eff = if control { 0.0 } else { c };
    let tag = crate::qcore::splitmix64(
        c_eff.to_bits() ^ crate::qcore::splitmix64(p_err.to_bits() ^ crate::qcore::splitmix64(trial)),
    );
    let mut trng = rng.derive(tag);
    let target = state_with_coherence(opts.dim, c_eff, &mut trng)?;
    noisy_detect_trial(&target, NoiseConfig::new(p_err, opts.channel)?, &opts.detect, &mut trng)
}

/// Success rates of the noisy detector on a `(c, p_err)` grid, with
/// `trials` coherent targets per cell and `trials` incoherent controls per
/// `p_err`.
pub fn noisy_detect_sweep(
    c_values: &[f64],
    p_err_values: &[f64],
    trials: u64,
    opts: &SweepOptions,
    rng: &RngStream,
) -> Result<Vec<SweepCell>> {
    use rayon::prelude::*;

    opts.detect.validate()?;
    for &p in p_err_values {
        NoiseConfig::new(p, opts.channel)?;
    }
    let fp_rates: Vec<f64> = p_err_values
        .iter()
        .map(|&p| {
            let flagged = (0..trials)
                .into_par_iter()
                .map(|t| sweep_trial(0.0, p, t, true, opts, rng).map(|r| r.coherent_verdict as u64))
                .sum::<Result<u64>>()?;
            Ok(flagged as f64 / trials.max(1) as f64)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for &c in c_values {
        for (&p, &fpr) in p_err_values.iter().zip(&fp_rates) {
            let results: Vec<NoisyTrial> = (0..trials)
                .into_par_iter()
                .map(|t| sweep_trial(c, p, t, false, opts, rng))
                .collect::<Result<_>>()?;
            cells.push(summarize_cell(c, p, &results, fpr));
        }
    }
    Ok(cells)
}

pub(crate) fn summarize_cell(c: f64, p_err: f64, results: &[NoisyTrial], fpr: f64) -> SweepCell {
    let n = results.len().max(1) as f64;
    let frac = |f: &dyn Fn(&NoisyTrial) -> bool| results.iter().filter(|r| f(r)).count() as f64 / n;
    let detection_rate = frac(&|r| r.coherent_verdict);
    SweepCell {
        c,
        p_err,
        trials: results.len() as u64,
        detection_rate,
        false_positive_rate: fpr,
        success_rate: detection_rate - fpr,
        clean_detection_rate: frac(&|r| r.coherent_verdict && r.noise_events == 0),
        mean_calls: results.iter().map(|r| r.calls.total() as f64).sum::<f64>() / n,
        clean_fraction: frac(&|r| r.noise_events == 0),
    }
}
