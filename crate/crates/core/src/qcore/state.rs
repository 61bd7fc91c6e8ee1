use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::RngStream;
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;

/// Normalized amplitude vector over the incoherent basis `{|0>, ..., |d-1>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Wraps `amps`, rejecting vectors that are not unit-norm within 1e-12.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let n2 = norm_sqr(&amps);
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let n2 = norm_sqr(&amps);
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::NotNormalized(n2));
        }
        let inv = 1.0 / n2.sqrt();
        amps.iter_mut().for_each(|a| *a *= inv);
        Ok(Self { amps })
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if k >= dim {
            return Err(Error::IndexOutOfRange { k, dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Equal superposition; `|+>` for `dim = 2`.
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            amps: vec![a; dim],
        })
    }

    /// Real nonnegative amplitudes `sqrt(p_k)`.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| Complex64::new(p.max(0.0).sqrt(), 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Born-rule sample of a basis index. The state itself is untouched.
    pub fn measure_basis(&self, rng: &mut RngStream) -> usize {
        sample_index(self.amps.iter().map(|a| a.norm_sqr()), self.norm_sqr(), rng)
    }

    pub(crate) fn renormalize(&mut self) {
        let n2 = norm_sqr(&self.amps);
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Draws an index with probability `w_i / total`. Zero-weight entries are
/// never returned.
pub(crate) fn sample_index(
    weights: impl Iterator<Item = f64> + Clone,
    total: f64,
    rng: &mut RngStream,
) -> usize {
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last_nonzero = i;
            if target < acc {
                return i;
            }
        }
    }
    // rounding left `target` past the final partial sum
    last_nonzero
}

/// Haar-random pure state: a normalized vector of i.i.d. standard complex
/// Gaussians.
pub fn random_pure_state(dim: usize, rng: &mut RngStream) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        if norm_sqr(&amps) > 1e-300 {
            return PureState::normalized(amps);
        }
    }
}

pub(crate) fn gaussian_complex(rng: &mut RngStream) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

fn random_phase(rng: &mut RngStream) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * rng.uniform())
}

/// How [`state_with_coherence_spread`] distributes the weight left over after
/// the dominant basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualSpread {
    /// Equal weight `c / (d - 1)` on every other index.
    Uniform,
    /// Random (flat Dirichlet) weights, water-filled so none exceeds `1 - c`.
    Random,
}

/// State with geometric coherence exactly `c_target`, dominant index chosen
/// uniformly at random and residual weight randomly spread.
pub fn state_with_coherence(dim: usize, c_target: f64, rng: &mut RngStream) -> Result<PureState> {
    state_with_coherence_spread(dim, c_target, ResidualSpread::Random, rng)
}

pub fn state_with_coherence_spread(
    dim: usize,
    c_target: f64,
    spread: ResidualSpread,
    rng: &mut RngStream,
) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let c_max = 1.0 - 1.0 / dim as f64;
    if !(0.0..=c_max + 1e-15).contains(&c_target) {
        return Err(Error::CoherenceOutOfRange {
            c: c_target,
            max: c_max,
        });
    }
    let c = c_target.min(c_max);
    let dominant = rng.uniform_inclusive(0, dim as u64 - 1) as usize;
    let cap = 1.0 - c;

    let residual = match spread {
        ResidualSpread::Uniform => vec![c / (dim - 1) as f64; dim - 1],
        ResidualSpread::Random => {
            let raw: Vec<f64> = (0..dim - 1).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            water_fill(&raw, c, cap)
        }
    };

    let mut probs = Vec::with_capacity(dim);
    let mut rest = residual.into_iter();
    for i in 0..dim {
        probs.push(if i == dominant {
            cap
        } else {
            rest.next().unwrap_or(0.0)
        });
    }
    let amps: Vec<Complex64> = probs
        .iter()
        .map(|&p| random_phase(rng) * p.sqrt())
        .collect();
    // fixes the last-ulp norm; coherence moves by O(1e-16)
    PureState::normalized(amps)
}

/// Scales `raw` to sum to `total` with every entry at most `cap`, clipping
/// and redistributing until no entry exceeds the cap.
fn water_fill(raw: &[f64], total: f64, cap: f64) -> Vec<f64> {
    if raw.is_empty() || total <= 0.0 {
        return vec![0.0; raw.len()];
    }
    if total >= cap * raw.len() as f64 {
        return vec![total / raw.len() as f64; raw.len()];
    }
    let mut out = vec![0.0; raw.len()];
    let mut capped = vec![false; raw.len()];
    loop {
        let free_weight: f64 = raw
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| *w)
            .sum();
        let n_capped = capped.iter().filter(|&&c| c).count();
        let remaining = total - cap * n_capped as f64;
        let mut changed = false;
        for i in 0..raw.len() {
            if capped[i] {
                out[i] = cap;
            } else {
                out[i] = if free_weight > 0.0 {
                    raw[i] / free_weight * remaining
                } else {
                    remaining / (raw.len() - n_capped) as f64
                };
                if out[i] > cap {
                    capped[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}
