use num_complex::Complex64;

use super::state::gaussian_complex;
use super::{PureState, RngStream};
use crate::error::{Error, Result};

pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense `d x d` unitary, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Validates `U†U = I` entrywise within 1e-10.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let u = Self { dim, entries };
        let defect = u.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(u)
    }

    pub(crate) fn new_unchecked(dim: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { dim, entries }
    }

    /// Builds the matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let dim = columns.len();
        let mut entries = vec![ZERO; dim * dim];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                entries[i * dim + j] = v;
            }
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.entry(r, col)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j].conj();
            }
        }
        Self { dim: d, entries }
    }

    pub fn matmul(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for i in 0..d {
            for l in 0..d {
                let a = self.entries[i * d + l];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * other.entries[l * d + j];
                }
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for l in 0..d {
                    acc += self.entries[l * d + i].conj() * self.entries[l * d + j];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        self.check_dim(s.dim())?;
        let mut out = vec![ZERO; self.dim];
        self.apply_into(s.amps(), &mut out);
        Ok(PureState::normalized(out).expect("unitary image of a unit vector"))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: dim,
            });
        }
        Ok(())
    }

    /// `out = U x`.
    pub(crate) fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.entries[i * d..(i + 1) * d];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = U† x`.
    pub(crate) fn apply_adjoint_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        out.iter_mut().for_each(|o| *o = ZERO);
        for (l, &xl) in x.iter().enumerate() {
            if xl == ZERO {
                continue;
            }
            let row = &self.entries[l * d..(l + 1) * d];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * xl;
            }
        }
    }
}

/// Haar-random unitary from Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, a)| *x -= proj * a);
            }
        }
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
    }
    UnitaryMatrix::from_columns(&cols)
}
