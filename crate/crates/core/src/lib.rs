//! Simulation of coherence detection and estimation for unknown pure
//! states.
//!
//! A state `|psi>` is available either as copies, or through a black-box
//! preparation unitary `U_psi` (with its inverse and controlled forms) whose
//! calls are counted. The crate provides:
//!
//! - [`qcore`]: dense statevector engine and seeded random streams.
//! - [`measures`]: geometric coherence, distances, and closed-form bounds.
//! - [`oracle`]: the counted black box.
//! - [`amplify`]: Grover operator and the Coh-Search routine.
//! - [`detect`]: copy-based and amplitude-amplified detectors.
//! - [`estimate`]: phase-estimation-based coherence estimation.
//! - [`noise`]: per-call trajectory noise.
//! - [`harness`]: experiment runner, CSV output and log-log fits.

pub mod amplify;
pub mod detect;
mod error;
pub mod estimate;
pub mod harness;
pub mod measures;
pub mod noise;
pub mod oracle;
pub mod qcore;

pub use error::{Error, Result};

pub use amplify::{coh_search, CohSearchTrace, GroverOp, SearchVerdict};
pub use detect::{DetectConfig, DetectionOutcome, Verdict};
pub use estimate::{EstimationResult, QpeConfig};
pub use measures::{geometric_coherence, CoherenceProfile};
pub use noise::{Channel, NoiseConfig};
pub use oracle::{CallTally, CountedOracle};
pub use qcore::{PureState, RngStream, UnitaryMatrix};
