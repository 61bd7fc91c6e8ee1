//! Coherence detectors: the repeated-measurement baseline on state copies,
//! the amplitude-amplified two-step detector, and its parallel boost.

use crate::amplify::{CohSearchMachine, CohSearchRound, GroverOp, DEFAULT_MAX_CALLS};
use crate::error::{invalid, Error, Result};
use crate::oracle::{CallTally, CountedOracle};
use crate::qcore::{PureState, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Coherent,
    Undecided,
}

/// Where a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Initial incoherent-basis measurements.
    Step1,
    /// Coh-Search on the observed label.
    Step2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    /// Number of step-1 measurements (`C`).
    pub c_samples: u32,
    pub delta: f64,
    /// Parallel replicas for [`detect_boosted`].
    pub replicas: u32,
    pub max_total_calls: u64,
}

impl DetectConfig {
    /// `C = 1` and `r = max(1, ceil(log2(1/delta)))`.
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = Self {
            c_samples: 1,
            delta,
            replicas: replicas_for(delta)?,
            max_total_calls: DEFAULT_MAX_CALLS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_budget(mut self, max_total_calls: u64) -> Self {
        self.max_total_calls = max_total_calls;
        self
    }

    pub fn with_c_samples(mut self, c: u32) -> Self {
        self.c_samples = c;
        self
    }

    pub fn with_replicas(mut self, r: u32) -> Self {
        self.replicas = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(invalid("delta", format!("{} not in (0, 1/2)", self.delta)));
        }
        if self.c_samples == 0 {
            return Err(invalid("c_samples", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self::new(0.05).expect("valid default")
    }
}

pub fn replicas_for(delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid("delta", format!("{delta} not in (0, 1/2)")));
    }
    Ok(((1.0 / delta).log2().ceil() as u32).max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub verdict: Verdict,
    pub stage: Stage,
    /// Replica that produced the verdict (boosted runs only).
    pub replica: Option<u32>,
    pub calls: CallTally,
    /// State copies measured directly in the incoherent basis.
    pub copies_consumed: u64,
    /// Label used to build `Q_k`; absent if step 1 decided.
    pub k_observed: Option<usize>,
    /// Coh-Search rounds of the deciding (or, if undecided, first) replica.
    pub rounds: Vec<CohSearchRound>,
}

impl DetectionOutcome {
    pub fn is_coherent(&self) -> bool {
        self.verdict == Verdict::Coherent
    }
}

/// Measures `m_copies` copies in the incoherent basis and reports coherent
/// iff at least two distinct outcomes appear. Copies are charged as forward
/// calls so the cost is comparable with the oracle-based detectors.
pub fn baseline_detect(s: &PureState, m_copies: u64, rng: &mut RngStream) -> Result<DetectionOutcome> {
    if m_copies < 2 {
        return Err(invalid("m_copies", "need at least two copies"));
    }
    let first = s.measure_basis(rng);
    let mut distinct = false;
    for _ in 1..m_copies {
        distinct |= s.measure_basis(rng) != first;
    }
    Ok(baseline_outcome(distinct, m_copies))
}

/// Measures copies one at a time until a second distinct outcome appears or
/// `max_copies` are used; `copies_consumed` is the copies-to-detect count.
pub fn baseline_until_detect(s: &PureState, max_copies: u64, rng: &mut RngStream) -> DetectionOutcome {
    let first = s.measure_basis(rng);
    let mut used = 1;
    while used < max_copies {
        used += 1;
        if s.measure_basis(rng) != first {
            return baseline_outcome(true, used);
        }
    }
    baseline_outcome(false, used)
}

fn baseline_outcome(coherent: bool, copies: u64) -> DetectionOutcome {
    DetectionOutcome {
        verdict: if coherent {
            Verdict::Coherent
        } else {
            Verdict::Undecided
        },
        stage: Stage::Step1,
        replica: None,
        calls: CallTally {
            forward: copies,
            inverse: 0,
            controlled: 0,
        },
        copies_consumed: copies,
        k_observed: None,
        rounds: Vec::new(),
    }
}

/// One execution of the two-step detector, unrolled to one oracle call per
/// [`Replica::step`].
#[derive(Debug)]
struct Replica {
    c_samples: u32,
    measured: u32,
    first: Option<usize>,
    search: Option<CohSearchMachine>,
}

impl Replica {
    fn new(c_samples: u32) -> Self {
        Self {
            c_samples,
            measured: 0,
            first: None,
            search: None,
        }
    }

    fn step(&mut self, oracle: &mut CountedOracle, rng: &mut RngStream) -> Result<Option<Stage>> {
        if let Some(search) = self.search.as_mut() {
            return Ok(search.step(oracle, rng)?.then_some(Stage::Step2));
        }
        let outcome = oracle.prepare()?.measure_basis(rng);
        self.measured += 1;
        match self.first {
            Some(k) if k != outcome => return Ok(Some(Stage::Step1)),
            None => self.first = Some(outcome),
            _ => {}
        }
        if self.measured == self.c_samples {
            let k = self.first.expect("at least one sample");
            // noiseless runs only ever see labels with p_k > 0; with noise the
            // label may lie outside the support, and the search still runs
            self.search = Some(CohSearchMachine::new(GroverOp::new(oracle, k)?));
        }
        Ok(None)
    }

    fn k_observed(&self) -> Option<usize> {
        self.search.as_ref().and(self.first)
    }

    fn stage(&self) -> Stage {
        if self.search.is_some() {
            Stage::Step2
        } else {
            Stage::Step1
        }
    }

    fn rounds(&self) -> Vec<CohSearchRound> {
        self.search
            .as_ref()
            .map(|s| s.rounds().to_vec())
            .unwrap_or_default()
    }
}

/// Amplitude-amplified detection: `C` basis measurements, then Coh-Search on
/// the observed label. Never reports coherent for an incoherent state;
/// running out of budget gives [`Verdict::Undecided`].
pub fn detect_amplified(
    oracle: &mut CountedOracle,
    cfg: &DetectConfig,
    rng: &mut RngStream,
) -> Result<DetectionOutcome> {
    run_replicas(oracle, cfg, 1, rng)
}

/// Runs `cfg.replicas` executions in lockstep, one oracle call per replica
/// per scheduling round, and stops at the first coherent verdict. Replica 0
/// draws from `rng`; the others from streams derived from it.
pub fn detect_boosted(
    oracle: &mut CountedOracle,
    cfg: &DetectConfig,
    rng: &mut RngStream,
) -> Result<DetectionOutcome> {
    run_replicas(oracle, cfg, cfg.replicas, rng)
}

fn run_replicas(
    oracle: &mut CountedOracle,
    cfg: &DetectConfig,
    r: u32,
    rng: &mut RngStream,
) -> Result<DetectionOutcome> {
    cfg.validate()?;
    let start = oracle.tally();
    let mut replicas: Vec<Replica> = (0..r).map(|_| Replica::new(cfg.c_samples)).collect();
    let mut extra_rngs: Vec<RngStream> = (1..r).map(|i| rng.derive(i as u64)).collect();
    let boosted = r > 1;

    let finish = |oracle: &CountedOracle, verdict, rep: &Replica, id: u32, stage| {
        let calls = oracle.tally().since(&start);
        DetectionOutcome {
            verdict,
            stage,
            replica: boosted.then_some(id),
            calls,
            copies_consumed: 0,
            k_observed: rep.k_observed(),
            rounds: rep.rounds(),
        }
    };

    loop {
        for i in 0..replicas.len() {
            let spent = oracle.tally().since(&start).total();
            if spent >= cfg.max_total_calls {
                let stage = replicas[0].stage();
                return Ok(finish(oracle, Verdict::Undecided, &replicas[0], 0, stage));
            }
            let stream = if i == 0 {
                &mut *rng
            } else {
                &mut extra_rngs[i - 1]
            };
            match replicas[i].step(oracle, stream) {
                Ok(Some(stage)) => {
                    return Ok(finish(oracle, Verdict::Coherent, &replicas[i], i as u32, stage));
                }
                Ok(None) => {}
                Err(Error::BudgetExceeded(_)) => {
                    let stage = replicas[0].stage();
                    return Ok(finish(oracle, Verdict::Undecided, &replicas[0], 0, stage));
                }
                Err(e) => return Err(e),
            }
        }
    }
}
