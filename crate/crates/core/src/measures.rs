//! Geometric coherence, pure-state distances, and the closed-form error
//! and sample-count expressions of the copy-based detector.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::qcore::{PureState, UnitaryMatrix};

/// Basis probabilities of a state together with its closest incoherent
/// state `|k_max>` and geometric coherence `c = 1 - p[k_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceProfile {
    pub probs: Vec<f64>,
    pub k_max: usize,
    pub c: f64,
    /// `theta[k] = arccos(sqrt(p[k]))`, in radians.
    pub theta: Vec<f64>,
}

impl CoherenceProfile {
    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn p_kmax(&self) -> f64 {
        self.probs[self.k_max]
    }

    /// `c_k = 1 - p_k`, which upper-bounds `c` for every `k`.
    pub fn c_k(&self, k: usize) -> f64 {
        1.0 - self.probs[k]
    }

    /// True when exactly one basis probability exceeds 1e-12.
    pub fn is_incoherent(&self) -> bool {
        self.probs.iter().filter(|&&p| p > 1e-12).count() == 1
    }
}

/// Ties in the maximum resolve to the lowest index.
pub fn geometric_coherence(s: &PureState) -> CoherenceProfile {
    let probs = s.probabilities();
    let mut k_max = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[k_max] {
            k_max = k;
        }
    }
    let c = (1.0 - probs[k_max]).max(0.0);
    let theta = probs.iter().map(|&p| p.clamp(0.0, 1.0).sqrt().acos()).collect();
    CoherenceProfile {
        probs,
        k_max,
        c,
        theta,
    }
}

/// Trace distance between pure states, `sqrt(1 - |<a|b>|^2)`.
pub fn pure_trace_distance(a: &PureState, b: &PureState) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok((1.0 - overlap).max(0.0).sqrt())
}

/// Optimal error for telling `|psi>^{⊗m}` from `|k_max>^{⊗m}` with equal
/// priors: `(1 - sqrt(1 - p_kmax^m)) / 2`.
pub fn helstrom_error(p_kmax: f64, m: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_kmax) {
        return Err(invalid("p_kmax", format!("{p_kmax} not in [0, 1]")));
    }
    if m == 0 {
        return Err(invalid("m", "need at least one copy"));
    }
    Ok(0.5 * (1.0 - (1.0 - p_kmax.powi(m as i32)).max(0.0).sqrt()))
}

/// Failure probability of the repeated-measurement detector on `m` copies,
/// `p_kmax^m` (every copy returns the dominant outcome).
pub fn baseline_failure_bound(p_kmax: f64, m: u32) -> f64 {
    p_kmax.powi(m as i32)
}

/// Copies sufficient for the repeated-measurement detector to fail with
/// probability at most `delta`: `ceil(ln(1/delta) / c)`.
pub fn baseline_copy_budget(c: f64, delta: f64) -> Result<u64> {
    if c == 0.0 {
        return Err(Error::Incoherent);
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid("c", format!("{c} not in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid("delta", format!("{delta} not in (0, 1/2)")));
    }
    let raw = (1.0 / delta).ln() / c;
    // round away float noise so that e.g. c = 1, delta = 1/e gives exactly 1
    let snapped = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    Ok(snapped.max(1.0) as u64)
}

/// Outcome of comparing `||U_kmax - U_psi||` against its closed form and
/// upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationDistanceReport {
    /// Largest singular value of `U_kmax - U_psi`.
    pub lhs_opnorm: f64,
    /// `2 |sin(theta / 2)|` with `cos(theta) = sqrt(p_kmax)`.
    pub closed_form: f64,
    /// `sqrt(2) * sqrt(1 - p_kmax)`.
    pub upper_bound: f64,
    pub pass: bool,
}

pub const PREPARATION_DISTANCE_TOL: f64 = 1e-9;
const COMPLETION_TOL: f64 = 1e-10;

/// Builds the pair of preparation unitaries `U_psi |0> = |psi>` and
/// `U_kmax |0> = |k_max>` that agree off `span{|k_max>, |perp>}` and checks
/// that their spectral-norm distance equals `2|sin(theta/2)|`.
pub fn verify_preparation_distance(s: &PureState) -> Result<PreparationDistanceReport> {
    let (u_psi, u_kmax, theta, p) = paired_preparations(s)?;
    let d = s.dim();
    let diff: Vec<Complex64> = u_kmax
        .entries()
        .iter()
        .zip(u_psi.entries())
        .map(|(a, b)| a - b)
        .collect();
    let lhs_opnorm = spectral_norm(d, &diff);
    let closed_form = 2.0 * (theta / 2.0).sin().abs();
    let upper_bound = 2f64.sqrt() * (1.0 - p).max(0.0).sqrt();
    let pass = (lhs_opnorm - closed_form).abs() <= PREPARATION_DISTANCE_TOL
        && lhs_opnorm <= upper_bound + PREPARATION_DISTANCE_TOL;
    Ok(PreparationDistanceReport {
        lhs_opnorm,
        closed_form,
        upper_bound,
        pass,
    })
}

/// Returns `(U_psi, U_kmax, theta, p_kmax)`.
pub(crate) fn paired_preparations(
    s: &PureState,
) -> Result<(UnitaryMatrix, UnitaryMatrix, f64, f64)> {
    let d = s.dim();
    let prof = geometric_coherence(s);
    let km = prof.k_max;
    let p = prof.p_kmax();
    let theta = prof.theta[km];
    let (cos_t, sin_t) = (theta.cos(), theta.sin());

    // strip the global phase so <k_max|psi> is real and positive
    let phase = Complex64::from_polar(1.0, -s.amps()[km].arg());
    let psi: Vec<Complex64> = s.amps().iter().map(|a| a * phase).collect();

    let e_k = unit(d, km);
    let perp: Vec<Complex64> = if sin_t > 1e-12 {
        let mut v: Vec<Complex64> = psi
            .iter()
            .zip(&e_k)
            .map(|(a, e)| (a - e * cos_t) / sin_t)
            .collect();
        normalize(&mut v);
        v
    } else {
        unit(d, if km == 0 { 1 } else { 0 })
    };
    let psi_perp: Vec<Complex64> = e_k
        .iter()
        .zip(&perp)
        .map(|(e, q)| -e * sin_t + q * cos_t)
        .collect();

    let completion = gram_schmidt_completion(&[e_k.clone(), perp.clone()], d);

    let mut cols_psi = vec![psi, psi_perp];
    let mut cols_kmax = vec![e_k, perp];
    cols_psi.extend(completion.iter().cloned());
    cols_kmax.extend(completion);
    Ok((
        UnitaryMatrix::from_columns(&cols_psi)?,
        UnitaryMatrix::from_columns(&cols_kmax)?,
        theta,
        p,
    ))
}

/// Extends the orthonormal `seed` vectors to a basis of `C^d` by
/// Gram-Schmidt over the canonical vectors, skipping any whose residual
/// norm falls below 1e-10.
pub(crate) fn gram_schmidt_completion(seed: &[Vec<Complex64>], d: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = seed.to_vec();
    let mut extra = Vec::new();
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = unit(d, i);
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n < COMPLETION_TOL {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v.clone());
        extra.push(v);
    }
    extra
}

pub(crate) fn spectral_norm(d: usize, row_major: &[Complex64]) -> f64 {
    let m = DMatrix::from_row_slice(d, d, row_major);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn unit(d: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_pure_state, RngStream};
    use std::f64::consts::PI;

    #[test]
    fn coherence_of_simple_states() {
        let zero = PureState::basis(3, 0).unwrap();
        let p = geometric_coherence(&zero);
        assert_eq!(p.c, 0.0);
        assert!(p.is_incoherent());

        let plus = PureState::uniform(2).unwrap();
        let p = geometric_coherence(&plus);
        assert!((p.c - 0.5).abs() < 1e-15);
        assert_eq!(p.k_max, 0, "tie goes to the lowest index");

        let s = PureState::from_probabilities(&[0.75, 0.25]).unwrap();
        let p = geometric_coherence(&s);
        assert!((p.c - 0.25).abs() < 1e-15);
        assert!((p.theta[0] - PI / 6.0).abs() < 1e-12);
        for (th, pk) in p.theta.iter().zip(&p.probs) {
            assert!((th.cos().powi(2) - pk).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distances() {
        let zero = PureState::basis(2, 0).unwrap();
        let one = PureState::basis(2, 1).unwrap();
        let plus = PureState::uniform(2).unwrap();
        assert!(pure_trace_distance(&plus, &plus).unwrap() < 1e-7);
        assert!((pure_trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        assert!((pure_trace_distance(&zero, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(pure_trace_distance(&zero, &PureState::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn helstrom_values() {
        assert_eq!(helstrom_error(0.0, 7).unwrap(), 0.0);
        let v = helstrom_error(0.5, 1).unwrap();
        assert!((v - 0.5 * (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.14645).abs() < 1e-5);
        let v = helstrom_error(0.81, 2).unwrap();
        assert!((v - 0.5 * (1.0 - 0.3439f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.2068).abs() < 1e-4);
        assert!(helstrom_error(1.5, 1).is_err());
    }

    #[test]
    fn copy_budgets() {
        assert_eq!(baseline_copy_budget(1.0, (-1.0f64).exp()).unwrap(), 1);
        assert_eq!(baseline_copy_budget(0.1, 0.05).unwrap(), 30);
        assert_eq!(baseline_copy_budget(0.001, 1.0 / 3.0).unwrap(), 1099);
        assert_eq!(baseline_copy_budget(0.0, 0.1), Err(Error::Incoherent));
        assert!(baseline_copy_budget(0.5, 0.5).is_err());
    }

    #[test]
    fn preparation_distance_basis_state_is_zero() {
        let r = verify_preparation_distance(&PureState::basis(4, 2).unwrap()).unwrap();
        assert!(r.lhs_opnorm < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn preparation_distance_at_quarter_turn() {
        let s = PureState::from_probabilities(&[0.5, 0.5]).unwrap();
        let r = verify_preparation_distance(&s).unwrap();
        assert!((r.lhs_opnorm - 2.0 * (PI / 8.0).sin()).abs() < 1e-9);
        assert!((r.lhs_opnorm - 0.76537).abs() < 1e-5);
        assert!((r.upper_bound - 1.0).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn preparation_distance_haar_d8() {
        let mut rng = RngStream::new(8, 8);
        for _ in 0..100 {
            let s = random_pure_state(8, &mut rng).unwrap();
            let r = verify_preparation_distance(&s).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn paired_preparations_prepare_expected_states() {
        let mut rng = RngStream::new(81, 0);
        let s = random_pure_state(5, &mut rng).unwrap();
        let (u_psi, u_k, _, _) = paired_preparations(&s).unwrap();
        let prof = geometric_coherence(&s);
        let col0 = u_psi.column(0);
        // equal to |psi> up to global phase
        let overlap: Complex64 = col0.iter().zip(s.amps()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        assert!((u_k.entry(prof.k_max, 0).re - 1.0).abs() < 1e-15);
        // agree on the completion
        for j in 2..5 {
            assert_eq!(u_psi.column(j), u_k.column(j));
        }
    }
}
