//! Amplitude estimation of `c_k = 1 - p_k` by phase estimation on the
//! Grover operator, with median boosting.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::amplify::GroverOp;
use crate::error::{invalid, Error, Result};
use crate::oracle::{CallTally, CountedOracle, Direction};
use crate::qcore::{sample_index, JointState, RngStream};

/// Largest joint (ancilla x system) register the simulator accepts.
pub const JOINT_DIM_LIMIT: usize = 1 << 16;

/// Per-run success probability guaranteed for a single phase-estimation
/// run.
pub const SINGLE_RUN_SUCCESS: f64 = 8.0 / (PI * PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpeConfig {
    /// Ancilla qubits `t`; the phase grid has `M = 2^t` points.
    pub ancilla_qubits: u32,
    /// Odd number of repetitions whose median is reported.
    pub repetitions: u32,
    /// Step-1 basis measurements used to pick the label `k`.
    pub c_samples: u32,
}

impl QpeConfig {
    pub fn new(ancilla_qubits: u32, repetitions: u32) -> Result<Self> {
        let cfg = Self {
            ancilla_qubits,
            repetitions,
            c_samples: 5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid from [`calls_for_accuracy`] and repetitions from
    /// [`default_repetitions`].
    pub fn for_accuracy(epsilon: f64, delta: f64) -> Result<Self> {
        let m = calls_for_accuracy(epsilon)?;
        Self::new(m.trailing_zeros(), default_repetitions(delta)?)
    }

    pub fn with_c_samples(mut self, c: u32) -> Self {
        self.c_samples = c;
        self
    }

    pub fn grid_size(&self) -> usize {
        1usize << self.ancilla_qubits
    }

    pub fn validate(&self) -> Result<()> {
        if self.ancilla_qubits == 0 || self.ancilla_qubits > 24 {
            return Err(invalid("ancilla_qubits", "need 1..=24 ancilla qubits"));
        }
        if self.repetitions.is_multiple_of(2) {
            return Err(invalid("repetitions", "must be odd"));
        }
        if self.c_samples == 0 {
            return Err(invalid("c_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// `2 * ceil(ln(1/delta) / (2 (8/pi^2 - 1/2)^2)) + 1`, from Hoeffding's bound
/// on the median of independent runs.
pub fn default_repetitions(delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    let gap = SINGLE_RUN_SUCCESS - 0.5;
    let half = ((1.0 / delta).ln() / (2.0 * gap * gap)).ceil() as u32;
    Ok(2 * half + 1)
}

/// Smallest power of two `M >= 2` with `pi / M + pi^2 / M^2 <= epsilon`,
/// the worst case (`c (1 - c) = 1/4`) of the single-run error bound.
pub fn calls_for_accuracy(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 1)")));
    }
    let mut m = 2usize;
    loop {
        let mf = m as f64;
        if PI / mf + PI * PI / (mf * mf) <= epsilon {
            return Ok(m);
        }
        m *= 2;
    }
}

/// Single-run additive error bound `2 pi sqrt(c (1 - c)) / M + pi^2 / M^2`.
pub fn error_bound(c: f64, grid: usize) -> f64 {
    let m = grid as f64;
    2.0 * PI * (c * (1.0 - c)).max(0.0).sqrt() / m + PI * PI / (m * m)
}

/// Maps a grid reading to `c_hat = sin^2(pi y / M)`. Readings `y` and
/// `M - y` (the two Grover eigenphase branches) give the same value.
pub fn fold_estimate(y: usize, grid: usize) -> f64 {
    let folded = y.min(grid - y);
    (PI * folded as f64 / grid as f64).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpeSample {
    pub y: usize,
    /// `pi y / M`.
    pub theta_hat: f64,
    pub c_hat: f64,
}

/// Runs the phase-estimation circuit on `Q_k` and returns the exact
/// distribution of the ancilla reading `y`.
///
/// Costs one forward call to prepare `|psi>` and `2 (M - 1)` controlled calls
/// for the controlled powers `Q_k^{2^j}`.
pub fn qpe_distribution(oracle: &mut CountedOracle, k: usize, ancilla_qubits: u32) -> Result<Vec<f64>> {
    let q = GroverOp::new(oracle, k)?;
    if oracle.promise_probability(k)? <= 0.0 {
        return Err(Error::ZeroOverlap { k });
    }
    let grid = 1usize << ancilla_qubits;
    let d = oracle.dim();
    if grid.saturating_mul(d) > JOINT_DIM_LIMIT {
        return Err(Error::EnvelopeExceeded {
            ancilla: grid,
            system: d,
            limit: JOINT_DIM_LIMIT,
        });
    }

    let psi = oracle.prepare()?;
    let h = Complex64::new(1.0 / (grid as f64).sqrt(), 0.0);
    let mut joint = JointState::product(&vec![h; grid], &psi);

    for bit in 0..ancilla_qubits {
        let mask = 1usize << bit;
        for _ in 0..(1u64 << bit) {
            controlled_flip(&mut joint, mask, q.k());
            oracle.call_controlled(Direction::Inverse, bit, &mut joint)?;
            controlled_flip(&mut joint, mask, 0);
            oracle.call_controlled(Direction::Forward, bit, &mut joint)?;
        }
    }

    inverse_qft_ancilla(&mut joint);
    Ok(joint.ancilla_distribution())
}

/// Controlled basis reflection: negates amplitude `idx` of every row with
/// the control bit set.
fn controlled_flip(joint: &mut JointState, mask: usize, idx: usize) {
    for a in (0..joint.ancilla_dim()).filter(|a| a & mask != 0) {
        let z = &mut joint.row_mut(a)[idx];
        *z = -*z;
    }
}

/// `|a> -> M^{-1/2} sum_y exp(-2 pi i a y / M) |y>` on the ancilla.
fn inverse_qft_ancilla(joint: &mut JointState) {
    let grid = joint.ancilla_dim();
    let d = joint.system_dim();
    let twiddle: Vec<Complex64> = (0..grid)
        .map(|n| Complex64::from_polar(1.0, -2.0 * PI * n as f64 / grid as f64))
        .collect();
    let norm = 1.0 / (grid as f64).sqrt();
    let input = joint.amps().to_vec();
    let out = joint.amps_mut();
    for y in 0..grid {
        for s in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..grid {
                acc += input[a * d + s] * twiddle[(a * y) % grid];
            }
            out[y * d + s] = acc * norm;
        }
    }
}

/// One phase-estimation run on `Q_k`, measuring the ancilla.
pub fn qpe_estimate_theta(
    oracle: &mut CountedOracle,
    k: usize,
    cfg: &QpeConfig,
    rng: &mut RngStream,
) -> Result<QpeSample> {
    cfg.validate()?;
    let dist = qpe_distribution(oracle, k, cfg.ancilla_qubits)?;
    let total: f64 = dist.iter().sum();
    let y = sample_index(dist.iter().cloned(), total, rng);
    let grid = cfg.grid_size();
    Ok(QpeSample {
        y,
        theta_hat: PI * y as f64 / grid as f64,
        c_hat: fold_estimate(y, grid),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Median of the per-run estimates of `c_k`.
    pub c_hat: f64,
    pub k: usize,
    pub grid_size: usize,
    /// Ancilla readings `y`, one per repetition, in run order.
    pub raw_phases: Vec<usize>,
    pub calls: CallTally,
    /// [`error_bound`] evaluated at `c_hat`.
    pub error_bound: f64,
}

impl EstimationResult {
    pub fn per_run_estimates(&self) -> Vec<f64> {
        self.raw_phases
            .iter()
            .map(|&y| fold_estimate(y, self.grid_size))
            .collect()
    }
}

/// Measures `C` copies, picks the most frequent label `k` (ties to the lowest
/// index), and reports the median of `repetitions` phase-estimation
/// estimates of `c_k`. Since `c_k >= c` for every label, the result
/// estimates an upper bound on the geometric coherence.
pub fn estimate_coherence(
    oracle: &mut CountedOracle,
    cfg: &QpeConfig,
    rng: &mut RngStream,
) -> Result<EstimationResult> {
    cfg.validate()?;
    let start = oracle.tally();
    let mut counts = vec![0u32; oracle.dim()];
    for _ in 0..cfg.c_samples {
        counts[oracle.prepare()?.measure_basis(rng)] += 1;
    }
    let mut k = 0;
    for (i, &n) in counts.iter().enumerate() {
        if n > counts[k] {
            k = i;
        }
    }

    let grid = cfg.grid_size();
    let mut raw_phases = Vec::with_capacity(cfg.repetitions as usize);
    for _ in 0..cfg.repetitions {
        raw_phases.push(qpe_estimate_theta(oracle, k, cfg, rng)?.y);
    }
    let mut estimates: Vec<f64> = raw_phases.iter().map(|&y| fold_estimate(y, grid)).collect();
    estimates.sort_by(f64::total_cmp);
    let c_hat = estimates[estimates.len() / 2];

    Ok(EstimationResult {
        c_hat,
        k,
        grid_size: grid,
        raw_phases,
        calls: oracle.tally().since(&start),
        error_bound: error_bound(c_hat, grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PureState;

    /// Phase-estimation kernel for an equal mixture of eigenphases `phi` and
    /// `1 - phi`: `P(y) = (F(phi - y/M) + F(1 - phi - y/M)) / 2` with
    /// `F(x) = |M^{-1} sum_a e^{2 pi i a x}|^2`.
    fn kernel(phi: f64, grid: usize) -> Vec<f64> {
        let f = |x: f64| {
            let s: Complex64 = (0..grid)
                .map(|a| Complex64::from_polar(1.0, 2.0 * PI * a as f64 * x))
                .sum();
            (s / grid as f64).norm_sqr()
        };
        (0..grid)
            .map(|y| {
                let yf = y as f64 / grid as f64;
                0.5 * f(phi - yf) + 0.5 * f(1.0 - phi - yf)
            })
            .collect()
    }

    #[test]
    fn calls_for_accuracy_scan() {
        assert_eq!(calls_for_accuracy(0.5).unwrap(), 16);
        // brute-force scan over all integers, rounded up to a power of two
        let eps = 0.05;
        let first = (2..).find(|&m| PI / m as f64 + PI * PI / (m * m) as f64 <= eps).unwrap();
        assert_eq!(calls_for_accuracy(eps).unwrap(), (first as usize).next_power_of_two());
        assert_eq!(calls_for_accuracy(eps).unwrap(), 128);
        assert!(calls_for_accuracy(0.0).is_err());
        assert!(calls_for_accuracy(1.0).is_err());
    }

    #[test]
    fn repetitions_are_odd_and_grow() {
        let a = default_repetitions(0.1).unwrap();
        let b = default_repetitions(0.001).unwrap();
        assert_eq!(a % 2, 1);
        assert!(b > a);
        assert_eq!(default_repetitions(0.01).unwrap(), 49);
    }

    #[test]
    fn config_validation() {
        assert!(QpeConfig::new(4, 4).is_err());
        assert!(QpeConfig::new(0, 3).is_err());
        assert!(QpeConfig::new(6, 11).is_ok());
    }

    #[test]
    fn on_grid_quarter_turn() {
        let t = PureState::from_probabilities(&[0.5, 0.5]).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let dist = qpe_distribution(&mut o, 0, 4).unwrap();
        assert!((dist[4] + dist[12] - 1.0).abs() < 1e-12);
        assert_eq!(o.tally().controlled, 2 * 15);
        assert_eq!(o.tally().forward, 1);
    }

    #[test]
    fn incoherent_reads_zero() {
        let t = PureState::basis(3, 1).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let cfg = QpeConfig::new(5, 3).unwrap();
        let mut rng = RngStream::new(0, 0);
        let r = estimate_coherence(&mut o, &cfg, &mut rng).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.c_hat, 0.0);
        assert!(r.raw_phases.iter().all(|&y| y == 0));
    }

    #[test]
    fn distribution_matches_kernel() {
        for &(p, t) in &[(0.5, 3u32), (0.8, 4), (0.3, 6), (0.97, 5), (0.75, 6)] {
            for d in [2usize, 4, 8] {
                let mut probs = vec![(1.0 - p) / (d - 1) as f64; d];
                probs[0] = p;
                let s = PureState::from_probabilities(&probs).unwrap();
                let mut o = CountedOracle::synthesize(&s);
                let dist = qpe_distribution(&mut o, 0, t).unwrap();
                let phi = p.sqrt().acos() / PI;
                let reference = kernel(phi, 1 << t);
                let tv: f64 = dist.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
                assert!(tv < 1e-6, "p={p} t={t} d={d} tv={tv}");
            }
        }
    }

    #[test]
    fn envelope_is_enforced() {
        let t = PureState::uniform(64).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        assert!(matches!(
            qpe_distribution(&mut o, 0, 11),
            Err(Error::EnvelopeExceeded { .. })
        ));
        assert_eq!(o.total_calls(), 0);
    }

    #[test]
    fn folding_is_symmetric() {
        for y in 0..64 {
            assert!((fold_estimate(y, 64) - fold_estimate((64 - y) % 64, 64)).abs() < 1e-15);
        }
        assert!((fold_estimate(16, 64) - 0.5).abs() < 1e-15);
    }
}
