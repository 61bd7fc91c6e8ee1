use num_complex::Complex64;

use super::PureState;

/// Ancilla ⊗ system register stored row-major: amplitude of `|a>|s>` lives at
/// `a * system_dim + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    ancilla_dim: usize,
    system_dim: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    pub fn product(ancilla: &[Complex64], system: &PureState) -> Self {
        let sd = system.dim();
        let mut amps = Vec::with_capacity(ancilla.len() * sd);
        for a in ancilla {
            amps.extend(system.amps().iter().map(|s| a * s));
        }
        Self {
            ancilla_dim: ancilla.len(),
            system_dim: sd,
            amps,
        }
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn row(&self, a: usize) -> &[Complex64] {
        &self.amps[a * self.system_dim..(a + 1) * self.system_dim]
    }

    pub(crate) fn row_mut(&mut self, a: usize) -> &mut [Complex64] {
        let sd = self.system_dim;
        &mut self.amps[a * sd..(a + 1) * sd]
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Marginal distribution of the ancilla register.
    pub fn ancilla_distribution(&self) -> Vec<f64> {
        (0..self.ancilla_dim)
            .map(|a| self.row(a).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }
}
