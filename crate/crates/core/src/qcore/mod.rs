//! Dense statevector engine: pure states, unitaries, a joint
//! ancilla-system register, and reproducible random streams.

mod joint;
mod rng;
mod state;
mod unitary;

pub use joint::JointState;
pub use rng::RngStream;
pub use state::{
    random_pure_state, state_with_coherence, state_with_coherence_spread, PureState,
    ResidualSpread, NORM_TOL,
};
pub use unitary::{random_unitary, UnitaryMatrix, UNITARY_TOL};

pub(crate) use rng::splitmix64;
pub(crate) use state::sample_index;

/// `apply(U, s) = U s`.
pub fn apply(u: &UnitaryMatrix, s: &PureState) -> crate::Result<PureState> {
    u.apply(s)
}

/// Born-rule measurement in the incoherent basis.
pub fn measure_basis(s: &PureState, rng: &mut RngStream) -> usize {
    s.measure_basis(rng)
}
