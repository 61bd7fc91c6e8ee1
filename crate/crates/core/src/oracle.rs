//! Black-box preparation unitary `U_psi` with per-mode call tallies.
//!
//! Algorithms never see the matrix behind the oracle: every application of
//! `U_psi`, `U_psi†` or their controlled forms goes through
//! [`CountedOracle::call`] or [`CountedOracle::call_controlled`], and the
//! complexities the crate reports are read straight off these tallies.

use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::qcore::{JointState, PureState, UnitaryMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallTally {
    pub forward: u64,
    pub inverse: u64,
    pub controlled: u64,
}

impl CallTally {
    pub fn total(&self) -> u64 {
        self.forward + self.inverse + self.controlled
    }

    /// Forward plus inverse calls, the uncontrolled cost.
    pub fn uncontrolled(&self) -> u64 {
        self.forward + self.inverse
    }

    pub fn since(&self, earlier: &CallTally) -> CallTally {
        CallTally {
            forward: self.forward - earlier.forward,
            inverse: self.inverse - earlier.inverse,
            controlled: self.controlled - earlier.controlled,
        }
    }
}

/// Hook run on the system state after every uncontrolled oracle call.
pub trait PostCallChannel: Send {
    fn after_call(&mut self, state: &mut PureState);
}

pub struct CountedOracle {
    u: UnitaryMatrix,
    target: PureState,
    tally: CallTally,
    budget: Option<u64>,
    channel: Option<Box<dyn PostCallChannel>>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for CountedOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CountedOracle")
            .field("dim", &self.u.dim())
            .field("tally", &self.tally)
            .field("budget", &self.budget)
            .field("noisy", &self.channel.is_some())
            .finish()
    }
}

impl CountedOracle {
    /// Oracle whose unitary maps `|0>` to `target`.
    ///
    /// Writing `<0|target> = r e^{i a}`, the unitary is `e^{i a} H` where `H`
    /// is the Householder reflection sending `|0>` to `e^{-i a}|target>`
    /// (a vector with real first component). When that vector is already
    /// `|0>` the reflection is the identity, so `|0>` itself gives `U = I`.
    pub fn synthesize(target: &PureState) -> Self {
        Self {
            u: householder_preparation(target),
            target: target.clone(),
            tally: CallTally::default(),
            budget: None,
            channel: None,
            scratch: vec![ZERO; target.dim()],
        }
    }

    /// Caps the total number of calls (all modes combined).
    pub fn with_budget(mut self, max_total_calls: u64) -> Self {
        self.budget = Some(max_total_calls);
        self
    }

    pub fn with_channel(mut self, channel: Box<dyn PostCallChannel>) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn tally(&self) -> CallTally {
        self.tally
    }

    pub fn total_calls(&self) -> u64 {
        self.tally.total()
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// The matrix behind the black box. Uncounted; for inspection only.
    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    /// `|<k|psi>|^2`, uncounted. Used only to validate an algorithm's
    /// stated promise, never to steer it.
    pub fn promise_probability(&self, k: usize) -> Result<f64> {
        self.target
            .amps()
            .get(k)
            .map(|a| a.norm_sqr())
            .ok_or(Error::IndexOutOfRange { k, dim: self.dim() })
    }

    fn charge(&mut self) -> Result<()> {
        if let Some(b) = self.budget {
            if self.tally.total() >= b {
                return Err(Error::BudgetExceeded(b));
            }
        }
        Ok(())
    }

    /// Applies `U_psi` or `U_psi†` to `state` in place.
    pub fn call(&mut self, dir: Direction, state: &mut PureState) -> Result<()> {
        self.u.check_dim(state.dim())?;
        self.charge()?;
        match dir {
            Direction::Forward => {
                self.u.apply_into(state.amps(), &mut self.scratch);
                self.tally.forward += 1;
            }
            Direction::Inverse => {
                self.u.apply_adjoint_into(state.amps(), &mut self.scratch);
                self.tally.inverse += 1;
            }
        }
        state.amps_mut().copy_from_slice(&self.scratch);
        if let Some(ch) = self.channel.as_mut() {
            ch.after_call(state);
        }
        Ok(())
    }

    /// One forward call on `|0>`: returns `U_psi|0> = |psi>`.
    pub fn prepare(&mut self) -> Result<PureState> {
        let mut s = PureState::basis(self.dim(), 0)?;
        self.call(Direction::Forward, &mut s)?;
        Ok(s)
    }

    /// Applies `U_psi` or `U_psi†` to the system register of every ancilla
    /// row whose bit `control_bit` is set.
    pub fn call_controlled(
        &mut self,
        dir: Direction,
        control_bit: u32,
        joint: &mut JointState,
    ) -> Result<()> {
        self.u.check_dim(joint.system_dim())?;
        if control_bit >= usize::BITS || (1usize << control_bit) >= joint.ancilla_dim() {
            return Err(invalid(
                "control_bit",
                format!("bit {control_bit} outside ancilla of size {}", joint.ancilla_dim()),
            ));
        }
        self.charge()?;
        let mask = 1usize << control_bit;
        for a in (0..joint.ancilla_dim()).filter(|a| a & mask != 0) {
            let row = joint.row_mut(a);
            match dir {
                Direction::Forward => self.u.apply_into(row, &mut self.scratch),
                Direction::Inverse => self.u.apply_adjoint_into(row, &mut self.scratch),
            }
            row.copy_from_slice(&self.scratch);
        }
        self.tally.controlled += 1;
        Ok(())
    }
}

fn householder_preparation(target: &PureState) -> UnitaryMatrix {
    let d = target.dim();
    let t0 = target.amps()[0];
    let phase = if t0.norm() > 0.0 {
        t0 / t0.norm()
    } else {
        ONE
    };
    // v = e^{-i a} t has real, nonnegative first component
    let v: Vec<Complex64> = target.amps().iter().map(|a| a * phase.conj()).collect();
    let mut w = v.iter().map(|x| -x).collect::<Vec<_>>();
    w[0] += ONE;
    let w_norm2: f64 = w.iter().map(|x| x.norm_sqr()).sum();

    let mut entries = vec![ZERO; d * d];
    for i in 0..d {
        entries[i * d + i] = phase;
    }
    if w_norm2 > 1e-28 {
        let scale = 2.0 / w_norm2;
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] -= phase * w[i] * w[j].conj() * scale;
            }
        }
    }
    UnitaryMatrix::new_unchecked(d, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_pure_state, RngStream};

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_target_gives_identity() {
        let o = CountedOracle::synthesize(&PureState::basis(4, 0).unwrap());
        assert_eq!(o.unitary(), &UnitaryMatrix::identity(4));
    }

    #[test]
    fn prepares_plus_and_random_targets() {
        let plus = PureState::uniform(2).unwrap();
        let mut o = CountedOracle::synthesize(&plus);
        assert!(o.unitary().unitarity_defect() < 1e-12);
        let s = o.prepare().unwrap();
        assert!(max_diff(s.amps(), plus.amps()) < 1e-12);

        let mut rng = RngStream::new(16, 0);
        for _ in 0..50 {
            let t = random_pure_state(16, &mut rng).unwrap();
            let mut o = CountedOracle::synthesize(&t);
            assert!(o.unitary().unitarity_defect() < 1e-12);
            assert!(max_diff(o.prepare().unwrap().amps(), t.amps()) < 1e-12);
        }
    }

    #[test]
    fn minus_zero_and_orthogonal_targets() {
        let minus0 = PureState::new(vec![-ONE, ZERO, ZERO]).unwrap();
        let mut o = CountedOracle::synthesize(&minus0);
        assert!(max_diff(o.prepare().unwrap().amps(), minus0.amps()) < 1e-15);

        let e2 = PureState::basis(3, 2).unwrap();
        let mut o = CountedOracle::synthesize(&e2);
        // basis targets are reproduced exactly, with no leakage
        assert_eq!(o.prepare().unwrap(), e2);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let mut rng = RngStream::new(3, 3);
        let t = random_pure_state(7, &mut rng).unwrap();
        assert_eq!(
            CountedOracle::synthesize(&t).unitary(),
            CountedOracle::synthesize(&t).unitary()
        );
    }

    #[test]
    fn forward_then_inverse_roundtrips() {
        let mut rng = RngStream::new(5, 0);
        let t = random_pure_state(5, &mut rng).unwrap();
        let s = random_pure_state(5, &mut rng).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let mut x = s.clone();
        o.call(Direction::Forward, &mut x).unwrap();
        o.call(Direction::Inverse, &mut x).unwrap();
        assert!(max_diff(x.amps(), s.amps()) < 1e-10);
        assert_eq!(
            o.tally(),
            CallTally {
                forward: 1,
                inverse: 1,
                controlled: 0
            }
        );
    }

    #[test]
    fn controlled_calls() {
        let t = PureState::uniform(2).unwrap();
        let mut o = CountedOracle::synthesize(&t);
        let mut rng = RngStream::new(1, 0);
        let s = random_pure_state(2, &mut rng).unwrap();

        let mut off = JointState::product(&[ONE, ZERO], &s);
        o.call_controlled(Direction::Forward, 0, &mut off).unwrap();
        assert_eq!(off.row(1), &[ZERO, ZERO]);
        assert!(max_diff(off.row(0), s.amps()) < 1e-15);

        let mut on = JointState::product(&[ZERO, ONE], &PureState::basis(2, 0).unwrap());
        o.call_controlled(Direction::Forward, 0, &mut on).unwrap();
        assert!(max_diff(on.row(1), t.amps()) < 1e-12);
        assert_eq!(o.tally().controlled, 2);

        assert!(o.call_controlled(Direction::Forward, 1, &mut on).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let t = PureState::uniform(3).unwrap();
        let mut o = CountedOracle::synthesize(&t).with_budget(2);
        o.prepare().unwrap();
        o.prepare().unwrap();
        assert_eq!(o.prepare(), Err(Error::BudgetExceeded(2)));
        assert_eq!(o.total_calls(), 2);
    }

    #[test]
    fn dimension_checked() {
        let mut o = CountedOracle::synthesize(&PureState::uniform(3).unwrap());
        let mut s = PureState::uniform(2).unwrap();
        assert!(o.call(Direction::Forward, &mut s).is_err());
        assert_eq!(o.total_calls(), 0);
    }
}
