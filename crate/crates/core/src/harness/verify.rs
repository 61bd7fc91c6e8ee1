//! Closed-form identity checks behind the `verify` subcommand.

use std::f64::consts::FRAC_PI_2;

use crate::amplify::{averaged_success, grover_state};
use crate::error::Result;
use crate::measures::{
    baseline_copy_budget, baseline_failure_bound, geometric_coherence, helstrom_error,
    verify_preparation_distance,
};
use crate::oracle::CountedOracle;
use crate::qcore::{random_pure_state, PureState, RngStream};

/// Outcome of one identity suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed deviation, or a count of failing cases.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {:<22} {}\n", c.name, c.detail));
        }
        out
    }
}

pub const GROVER_TOL: f64 = 1e-10;
pub const AVERAGED_TOL: f64 = 1e-12;

/// Runs all suites with randomness drawn from `seed`.
pub fn verify_formulas(seed: u64) -> Result<VerifyReport> {
    let rng = RngStream::new(seed, 0x7665_7269_6679);
    Ok(VerifyReport {
        checks: vec![
            grover_fidelity(100, &mut rng.derive(1))?,
            averaged_success_grid(100),
            helstrom_suite(&mut rng.derive(2))?,
            preparation_distance(1000, &mut rng.derive(3))?,
            copy_budget_examples()?,
        ],
    })
}

/// `|<k| Q_k^m U|0>|^2` from the statevector against `cos^2((2m+1) theta_k)`
/// for random states of dimension up to 16, labels with `p_k > 0`, and
/// `m <= 50`.
pub fn grover_fidelity(cases: usize, rng: &mut RngStream) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let d = rng.uniform_inclusive(2, 16) as usize;
        let s = random_pure_state(d, rng)?;
        let k = rng.uniform_inclusive(0, d as u64 - 1) as usize;
        let m = rng.uniform_inclusive(0, 50);
        let p_k = s.probabilities()[k];
        let mut oracle = CountedOracle::synthesize(&s);
        let out = grover_state(&mut oracle, k, m)?;
        let theta = p_k.sqrt().acos();
        let expect = ((2 * m + 1) as f64 * theta).cos().powi(2);
        worst = worst.max((out.probabilities()[k] - expect).abs());
    }
    Ok(Check {
        name: "grover-fidelity",
        pass: worst <= GROVER_TOL,
        detail: format!("{cases} cases, max dev {worst:.3e}"),
    })
}

/// Closed-form averaged success against the brute-force mean over
/// `j in 0..M` on a `n x n` grid of `theta in (0, pi/2)`, `M in 1..=n`, and
/// the quarter lower bound once `M >= 1 / sin(2 theta)`.
pub fn averaged_success_grid(n: u64) -> Check {
    let mut worst = 0.0f64;
    let mut below_quarter = 0;
    for i in 1..=n {
        let theta = FRAC_PI_2 * i as f64 / (n + 1) as f64;
        for m in 1..=n {
            let brute = (0..m)
                .map(|j| ((2 * j + 1) as f64 * theta).sin().powi(2))
                .sum::<f64>()
                / m as f64;
            let closed = averaged_success(theta, m);
            worst = worst.max((closed - brute).abs());
            if m as f64 >= 1.0 / (2.0 * theta).sin() && closed < 0.25 {
                below_quarter += 1;
            }
        }
    }
    Check {
        name: "averaged-success",
        pass: worst <= AVERAGED_TOL && below_quarter == 0,
        detail: format!("max dev {worst:.3e}, {below_quarter} cells below 1/4"),
    }
}

/// Helstrom error against the overlap of explicitly built `m`-fold tensor
/// powers, plus its monotonicity and the baseline failure comparison.
pub fn helstrom_suite(rng: &mut RngStream) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut order_violations = 0;
    for _ in 0..50 {
        let s = random_pure_state(2, rng)?;
        let prof = geometric_coherence(&s);
        let basis = PureState::basis(2, prof.k_max)?;
        let mut prev = f64::INFINITY;
        for m in 1..=6u32 {
            let overlap = tensor_power(&s, m).inner(&tensor_power(&basis, m))?.norm_sqr();
            let direct = 0.5 * (1.0 - (1.0 - overlap).max(0.0).sqrt());
            let h = helstrom_error(prof.p_kmax(), m)?;
            worst = worst.max((h - direct).abs());
            if h > prev + 1e-15 || h > baseline_failure_bound(prof.p_kmax(), m) + 1e-15 {
                order_violations += 1;
            }
            prev = h;
        }
    }
    // nondecreasing in p_kmax at fixed m
    for m in [1u32, 3, 10] {
        let mut prev = 0.0;
        for i in 0..=100 {
            let h = helstrom_error(i as f64 / 100.0, m)?;
            if h + 1e-15 < prev {
                order_violations += 1;
            }
            prev = h;
        }
    }
    Ok(Check {
        name: "helstrom",
        pass: worst <= 1e-12 && order_violations == 0,
        detail: format!("max dev {worst:.3e}, {order_violations} order violations"),
    })
}

fn tensor_power(s: &PureState, m: u32) -> PureState {
    let mut amps = vec![num_complex::Complex64::new(1.0, 0.0)];
    for _ in 0..m {
        amps = amps
            .iter()
            .flat_map(|a| s.amps().iter().map(move |b| a * b))
            .collect();
    }
    PureState::normalized(amps).expect("tensor power of a unit vector")
}

pub fn preparation_distance(states: usize, rng: &mut RngStream) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..states {
        let d = rng.uniform_inclusive(2, 8) as usize;
        let r = verify_preparation_distance(&random_pure_state(d, rng)?)?;
        worst = worst.max((r.lhs_opnorm - r.closed_form).abs());
        failures += !r.pass as usize;
    }
    Ok(Check {
        name: "preparation-distance",
        pass: failures == 0,
        detail: format!("{states} states, max dev {worst:.3e}, {failures} failures"),
    })
}

pub fn copy_budget_examples() -> Result<Check> {
    let cases = [(0.1, 0.05, 30u64), (0.001, 1.0 / 3.0, 1099), (1.0, (-1.0f64).exp(), 1)];
    let mut bad = Vec::new();
    for (c, delta, want) in cases {
        let got = baseline_copy_budget(c, delta)?;
        if got != want {
            bad.push(format!("c={c}: {got} != {want}"));
        }
    }
    Ok(Check {
        name: "copy-budget",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{} examples", cases.len())
        } else {
            bad.join("; ")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let report = verify_formulas(3).unwrap();
        assert!(report.all_pass(), "{}", report.render());
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn tensor_power_dims() {
        let s = PureState::uniform(2).unwrap();
        assert_eq!(tensor_power(&s, 3).dim(), 8);
    }
}
