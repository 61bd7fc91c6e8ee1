//! Reflections, the Grover operator `Q_k = V_psi V_k`, and the
//! exponential-schedule search Coh-Search(k).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::{CallTally, CountedOracle, Direction};
use crate::qcore::{PureState, RngStream, UnitaryMatrix};

/// Growth factor of the Coh-Search schedule, `M = ceil(SCHEDULE_BASE^ell)`.
pub const SCHEDULE_BASE: f64 = 1.5;

/// Default cap on oracle calls for one Coh-Search / Algorithm 1 run.
pub const DEFAULT_MAX_CALLS: u64 = 100_000;

/// `V_k = I - 2|k><k|`.
pub fn reflect_about_basis(state: &mut PureState, k: usize) {
    let a = &mut state.amps_mut()[k];
    *a = -*a;
}

/// Grover operator `Q_k = V_psi V_k` with `V_psi = U (I - 2|0><0|) U†`.
///
/// Each application costs one inverse and one forward oracle call; the basis
/// reflections are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroverOp {
    k: usize,
}

impl GroverOp {
    pub fn new(oracle: &CountedOracle, k: usize) -> Result<Self> {
        if k >= oracle.dim() {
            return Err(Error::IndexOutOfRange {
                k,
                dim: oracle.dim(),
            });
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn apply(&self, oracle: &mut CountedOracle, state: &mut PureState) -> Result<()> {
        reflect_about_basis(state, self.k);
        oracle.call(Direction::Inverse, state)?;
        reflect_about_basis(state, 0);
        oracle.call(Direction::Forward, state)
    }

    /// Dense `Q_k` built from the oracle's matrix without charging calls.
    pub fn dense_matrix(&self, oracle: &CountedOracle) -> UnitaryMatrix {
        let u = oracle.unitary();
        let d = u.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        // (V_psi)_{ij} = delta_ij - 2 psi_i conj(psi_j), psi = U|0>
        let psi = u.column(0);
        for i in 0..d {
            for j in 0..d {
                let mut v = -psi[i] * psi[j].conj() * 2.0;
                if i == j {
                    v += 1.0;
                }
                // right-multiply by V_k: negate column k
                entries[i * d + j] = if j == self.k { -v } else { v };
            }
        }
        UnitaryMatrix::new_unchecked(d, entries)
    }
}

/// `Q_k^m U_psi |0>`, costing `m + 1` forward and `m` inverse calls.
pub fn grover_state(oracle: &mut CountedOracle, k: usize, m: u64) -> Result<PureState> {
    let q = GroverOp::new(oracle, k)?;
    if oracle.promise_probability(k)? <= 0.0 {
        return Err(Error::ZeroOverlap { k });
    }
    let mut s = oracle.prepare()?;
    for _ in 0..m {
        q.apply(oracle, &mut s)?;
    }
    Ok(s)
}

/// Probability that measuring `Q_k^m |psi>` gives an outcome other than `k`:
/// `sin^2((2m + 1) theta_k)`.
pub fn detection_probability(theta_k: f64, m: u64) -> f64 {
    ((2 * m + 1) as f64 * theta_k).sin().powi(2)
}

/// Mean of `sin^2((2j + 1) theta)` over `j` uniform in `{0, ..., M - 1}`,
/// evaluated as `1/2 - sin(4 M theta) / (4 M sin(2 theta))`.
///
/// Falls back to the explicit sum where `sin(2 theta)` is too small for the
/// closed form to hold 1e-12 accuracy (including `theta` in `{0, pi/2}`).
pub fn averaged_success(theta_k: f64, m: u64) -> f64 {
    assert!(m >= 1, "schedule size must be positive");
    let s2 = (2.0 * theta_k).sin();
    if s2.abs() < 1e-3 {
        return (0..m).map(|j| detection_probability(theta_k, j)).sum::<f64>() / m as f64;
    }
    let mf = m as f64;
    0.5 - (4.0 * mf * theta_k).sin() / (4.0 * mf * s2)
}

/// Schedule size for round `ell` (1-based).
pub fn schedule_size(ell: u32) -> u64 {
    SCHEDULE_BASE.powi(ell as i32).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchVerdict {
    Coherent,
    BudgetExhausted,
}

/// One pass of the Coh-Search repeat loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohSearchRound {
    pub ell: u32,
    pub m: u64,
    /// Grover power drawn from `{1, ..., M}`; absent if the bare preparation
    /// already detected coherence or the budget ran out first.
    pub j_sampled: Option<u64>,
    pub first_outcome: Option<usize>,
    pub second_outcome: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohSearchTrace {
    pub k: usize,
    pub rounds: Vec<CohSearchRound>,
    pub verdict: SearchVerdict,
    pub calls: CallTally,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    StartRound,
    GroverPrep { j: u64 },
    GroverInverse { left: u64 },
    GroverForward { left: u64 },
}

/// Coh-Search(k) unrolled so that every [`CohSearchMachine::step`] performs
/// exactly one oracle call. Parallel replicas interleave at this
/// granularity.
#[derive(Debug, Clone)]
pub(crate) struct CohSearchMachine {
    q: GroverOp,
    ell: u32,
    phase: Phase,
    state: Option<PureState>,
    rounds: Vec<CohSearchRound>,
}

impl CohSearchMachine {
    pub(crate) fn new(q: GroverOp) -> Self {
        Self {
            q,
            ell: 0,
            phase: Phase::StartRound,
            state: None,
            rounds: Vec::new(),
        }
    }

    pub(crate) fn rounds(&self) -> &[CohSearchRound] {
        &self.rounds
    }

    pub(crate) fn into_rounds(self) -> Vec<CohSearchRound> {
        self.rounds
    }

    /// Performs one oracle call. Returns `Ok(true)` once an outcome other
    /// than `k` has been observed.
    pub(crate) fn step(&mut self, oracle: &mut CountedOracle, rng: &mut RngStream) -> Result<bool> {
        let k = self.q.k();
        match self.phase {
            Phase::StartRound => {
                let m = schedule_size(self.ell + 1);
                let s = oracle.prepare()?;
                self.ell += 1;
                let outcome = s.measure_basis(rng);
                let mut round = CohSearchRound {
                    ell: self.ell,
                    m,
                    j_sampled: None,
                    first_outcome: Some(outcome),
                    second_outcome: None,
                };
                if outcome != k {
                    self.rounds.push(round);
                    return Ok(true);
                }
                let j = rng.uniform_inclusive(1, m);
                round.j_sampled = Some(j);
                self.rounds.push(round);
                self.phase = Phase::GroverPrep { j };
            }
            Phase::GroverPrep { j } => {
                self.state = Some(oracle.prepare()?);
                self.phase = Phase::GroverInverse { left: j };
            }
            Phase::GroverInverse { left } => {
                let s = self.state.as_mut().expect("prepared");
                reflect_about_basis(s, k);
                oracle.call(Direction::Inverse, s)?;
                self.phase = Phase::GroverForward { left };
            }
            Phase::GroverForward { left } => {
                let s = self.state.as_mut().expect("prepared");
                reflect_about_basis(s, 0);
                oracle.call(Direction::Forward, s)?;
                if left > 1 {
                    self.phase = Phase::GroverInverse { left: left - 1 };
                } else {
                    let outcome = s.measure_basis(rng);
                    self.rounds.last_mut().expect("round open").second_outcome = Some(outcome);
                    self.state = None;
                    self.phase = Phase::StartRound;
                    if outcome != k {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}

/// Runs Coh-Search(k) until it observes an outcome other than `k` or has
/// spent `max_total_calls` oracle calls. On an incoherent input the
/// second case is the only way out.
pub fn coh_search(
    oracle: &mut CountedOracle,
    k: usize,
    rng: &mut RngStream,
    max_total_calls: u64,
) -> Result<CohSearchTrace> {
    let q = GroverOp::new(oracle, k)?;
    if oracle.promise_probability(k)? <= 0.0 {
        return Err(Error::ZeroOverlap { k });
    }
    let start = oracle.tally();
    let mut machine = CohSearchMachine::new(q);
    let verdict = loop {
        if oracle.tally().since(&start).total() >= max_total_calls {
            break SearchVerdict::BudgetExhausted;
        }
        match machine.step(oracle, rng) {
            Ok(true) => break SearchVerdict::Coherent,
            Ok(false) => {}
            Err(Error::BudgetExceeded(_)) => break SearchVerdict::BudgetExhausted,
            Err(e) => return Err(e),
        }
    };
    Ok(CohSearchTrace {
        k,
        rounds: machine.into_rounds(),
        verdict,
        calls: oracle.tally().since(&start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::geometric_coherence;
    use crate::qcore::{random_pure_state, state_with_coherence};
    use std::f64::consts::PI;

    /// `(1/M) sum_{j<M} sin^2((2j+1) theta)` term by term.
    fn brute_average(theta: f64, m: u64) -> f64 {
        (0..m)
            .map(|j| (((2 * j + 1) as f64) * theta).sin().powi(2))
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn zero_power_is_the_target() {
        let mut rng = RngStream::new(0, 0);
        let t = random_pure_state(4, &mut rng).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let s = grover_state(&mut o, 1, 0).unwrap();
        assert!(s.amps().iter().zip(t.amps()).all(|(a, b)| (a - b).norm() < 1e-12));
        assert_eq!(o.tally().forward, 1);
    }

    #[test]
    fn one_step_at_pi_over_six_detects_with_certainty() {
        let t = PureState::from_probabilities(&[0.75, 0.25]).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let s = grover_state(&mut o, 0, 1).unwrap();
        assert!(s.amps()[0].norm_sqr() < 1e-12);
        assert!((detection_probability(PI / 6.0, 1) - 1.0).abs() < 1e-12);
        let tally = o.tally();
        assert_eq!((tally.forward, tally.inverse), (2, 1));
    }

    #[test]
    fn one_step_at_quarter_turn() {
        let t = PureState::from_probabilities(&[0.5, 0.5]).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let s = grover_state(&mut o, 0, 1).unwrap();
        assert!((1.0 - s.amps()[0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((detection_probability(PI / 4.0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_overlap_is_rejected() {
        let t = PureState::basis(3, 1).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        assert_eq!(grover_state(&mut o, 0, 2), Err(Error::ZeroOverlap { k: 0 }));
        let mut rng = RngStream::new(0, 0);
        assert!(coh_search(&mut o, 2, &mut rng, 100).is_err());
        assert_eq!(o.total_calls(), 0);
    }

    #[test]
    fn detection_probability_at_zero_angle() {
        for m in 0..20 {
            assert_eq!(detection_probability(0.0, m), 0.0);
        }
    }

    #[test]
    fn statevector_matches_closed_form() {
        let mut rng = RngStream::new(77, 0);
        for i in 0..100 {
            let d = 2 + i % 7;
            let t = random_pure_state(d, &mut rng).unwrap();
            let prof = geometric_coherence(&t);
            let k = rng.uniform_inclusive(0, d as u64 - 1) as usize;
            let m = rng.uniform_inclusive(0, 50);
            let mut o = CountedOracle::synthesize(&t);
            let s = grover_state(&mut o, k, m).unwrap();
            let sim = 1.0 - s.amps()[k].norm_sqr();
            assert!((sim - detection_probability(prof.theta[k], m)).abs() < 1e-10);
            assert_eq!(o.tally().forward, m + 1);
            assert_eq!(o.tally().inverse, m);
        }
    }

    #[test]
    fn dense_grover_is_unitary_and_matches_counted_path() {
        let mut rng = RngStream::new(12, 0);
        let t = random_pure_state(6, &mut rng).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let q = GroverOp::new(&o, 3).unwrap();
        let dense = q.dense_matrix(&o);
        assert!(dense.unitarity_defect() < 1e-10);
        let x = random_pure_state(6, &mut rng).unwrap();
        let expected = dense.apply(&x).unwrap();
        let mut y = x.clone();
        q.apply(&mut o, &mut y).unwrap();
        assert!(y.amps().iter().zip(expected.amps()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn averaged_success_single_term() {
        for &th in &[0.1, 0.4, 1.0, 1.5] {
            assert!((averaged_success(th, 1) - th.sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_success_eighth_turn() {
        let th = PI / 8.0;
        assert!((averaged_success(th, 4) - brute_average(th, 4)).abs() < 1e-12);
    }

    #[test]
    fn averaged_success_degenerate_angles() {
        assert_eq!(averaged_success(0.0, 10), 0.0);
        assert!((averaged_success(PI / 2.0, 10) - 1.0).abs() < 1e-12);
        assert!((averaged_success(1e-5, 100) - brute_average(1e-5, 100)).abs() < 1e-12);
    }

    #[test]
    fn averaged_success_at_least_quarter_past_threshold() {
        for i in 1..200 {
            let th = i as f64 / 200.0 * PI / 2.0;
            let m = (1.0 / (2.0 * th).sin()).ceil() as u64;
            for mm in [m, m + 1, 2 * m, 10 * m] {
                assert!(averaged_success(th, mm) >= 0.25 - 1e-12, "theta {th} M {mm}");
            }
        }
    }

    #[test]
    fn schedule_sizes() {
        let ms: Vec<u64> = (1..=6).map(schedule_size).collect();
        assert_eq!(ms, vec![2, 3, 4, 6, 8, 12]);
    }

    #[test]
    fn coh_search_exhausts_budget_on_incoherent_target() {
        let t = PureState::basis(3, 2).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let mut rng = RngStream::new(4, 4);
        let trace = coh_search(&mut o, 2, &mut rng, 5_000).unwrap();
        assert_eq!(trace.verdict, SearchVerdict::BudgetExhausted);
        assert_eq!(trace.calls.total(), 5_000);
        assert_eq!(o.total_calls(), 5_000);
        assert!(trace.rounds.iter().all(|r| r.first_outcome == Some(2)));
    }

    #[test]
    fn coh_search_trace_is_consistent() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..200 {
            let t = state_with_coherence(3, 0.05, &mut rng).unwrap();
            let k = geometric_coherence(&t).k_max;
            let mut o = CountedOracle::synthesize(&t);
            let trace = coh_search(&mut o, k, &mut rng, DEFAULT_MAX_CALLS).unwrap();
            assert_eq!(trace.verdict, SearchVerdict::Coherent);
            let mut expected = 0;
            for (i, r) in trace.rounds.iter().enumerate() {
                assert_eq!(r.ell as usize, i + 1);
                assert_eq!(r.m, schedule_size(r.ell));
                expected += 1;
                if let Some(j) = r.j_sampled {
                    assert!((1..=r.m).contains(&j));
                    expected += 2 * j + 1;
                }
            }
            assert_eq!(trace.calls.total(), expected);
            let last = trace.rounds.last().unwrap();
            let stop = last.second_outcome.or(last.first_outcome).unwrap();
            assert_ne!(stop, k);
        }
    }
}
