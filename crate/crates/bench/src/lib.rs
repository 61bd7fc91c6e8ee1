//! Fixed-seed inputs shared by the benchmarks, so that every bench run
//! times the same states.

use coherence::qcore::state_with_coherence;
use coherence::{geometric_coherence, CountedOracle, PureState, RngStream};

pub const FIXTURE_SEED: u64 = 0xbe9c;

/// A `d`-dimensional state with geometric coherence exactly `c`.
pub fn target(d: usize, c: f64) -> PureState {
    let mut rng = RngStream::new(FIXTURE_SEED, d as u64);
    state_with_coherence(d, c, &mut rng).expect("fixture parameters are in range")
}

/// Fresh counted oracle for [`target`] together with its dominant label.
pub fn oracle(d: usize, c: f64) -> (CountedOracle, usize) {
    let s = target(d, c);
    let k = geometric_coherence(&s).k_max;
    (CountedOracle::synthesize(&s), k)
}

pub fn rng(stream: u64) -> RngStream {
    RngStream::new(FIXTURE_SEED, stream)
}
