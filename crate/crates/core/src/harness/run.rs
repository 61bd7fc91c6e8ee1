use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::{fit_loglog, LogLogFit};
use super::record::{write_csv, TrialRecord};
use crate::detect::{baseline_until_detect, detect_amplified, detect_boosted, DetectConfig};
use crate::error::{invalid, Result};
use crate::estimate::{calls_for_accuracy, error_bound, estimate_coherence, QpeConfig};
use crate::measures::baseline_copy_budget;
use crate::noise::{summarize_cell, sweep_trial, NoisyTrial, SweepCell, SweepOptions};
use crate::oracle::{CallTally, CountedOracle};
use crate::qcore::{splitmix64, state_with_coherence, RngStream};

/// Aggregate statistics for one `c_true` (and `p_err`, for noise sweeps).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub c_true: f64,
    pub p_err: Option<f64>,
    pub trials: u64,
    /// Copies for the baseline, total oracle calls otherwise.
    pub mean_cost: f64,
    pub stderr_cost: f64,
    /// Baseline: detected within `ceil(ln(1/delta)/c)` copies. Detectors:
    /// coherent verdict. Estimation: median within the error bound. Noise:
    /// detection rate minus the false-positive rate of matched controls.
    pub success_rate: f64,
    pub mean_abs_error: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub clean_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    /// Sorted by `(c_true, trial_id)`.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    /// Mean cost against `c` across the grid. For estimation runs this is
    /// the required grid size against `epsilon` instead.
    pub fit: Option<LogLogFit>,
    pub fit_label: &'static str,
}

impl RunReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write_csv(w, &self.records)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let cfg = &self.config;
        let _ = writeln!(
            s,
            "{} d={} trials={} seed={} budget={}",
            cfg.experiment,
            cfg.d,
            cfg.trials,
            cfg.seed,
            cfg.budget()
        );
        for c in &self.cells {
            let _ = write!(
                s,
                "  c={:<12.6e} mean_cost={:<12.4} se={:<10.3} success={:.4}",
                c.c_true, c.mean_cost, c.stderr_cost, c.success_rate
            );
            if let Some(p) = c.p_err {
                let _ = write!(s, " p_err={p:.1e}");
            }
            if let Some(e) = c.mean_abs_error {
                let _ = write!(s, " mean_abs_err={e:.3e}");
            }
            if let Some(f) = c.false_positive_rate {
                let _ = write!(s, " fpr={f:.4}");
            }
            if let Some(f) = c.clean_fraction {
                let _ = write!(s, " clean={f:.4}");
            }
            s.push('\n');
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(
                s,
                "  fit {}: slope={:.4} +/- {:.4} intercept={:.4}",
                self.fit_label, f.slope, f.stderr, f.intercept
            );
        }
        s
    }
}

/// Runs `cfg`, writing the CSV to `cfg.out` when set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let report = execute(cfg)?;
    if let Some(path) = &cfg.out {
        let io_err = |e: io::Error| invalid("out", format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        report.write_csv(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    Ok(report)
}

/// Runs `cfg` without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::BaselineScaling
        | ExperimentKind::AmplifiedScaling
        | ExperimentKind::BoostedDetection => detection_run(cfg),
        ExperimentKind::EstimationScaling => estimation_run(cfg),
        ExperimentKind::NoiseSweep => noise_run(cfg),
        ExperimentKind::VerifyFormulas => Err(invalid(
            "experiment",
            "verify-formulas has no trials; use verify_formulas",
        )),
    }
}

fn trial_stream(cfg: &ExperimentConfig, c: f64, trial: u64) -> RngStream {
    let tag = cfg.experiment.stream_tag();
    RngStream::new(cfg.seed, splitmix64(tag ^ splitmix64(c.to_bits() ^ splitmix64(trial))))
}

fn verdict_str(coherent: bool) -> &'static str {
    if coherent {
        "coherent"
    } else {
        "undecided"
    }
}

fn base_record(cfg: &ExperimentConfig, c: f64, trial: u64, calls: CallTally) -> TrialRecord {
    TrialRecord {
        experiment: cfg.experiment.name(),
        d: cfg.d,
        c_true: c,
        seed: cfg.seed,
        trial_id: trial,
        verdict: "undecided",
        calls_forward: calls.forward,
        calls_inverse: calls.inverse,
        calls_controlled: calls.controlled,
        copies_consumed: 0,
        c_hat: None,
        abs_error: None,
        p_err: None,
    }
}

/// Runs `f` for every `(c, trial)` on the worker pool and returns results
/// in `(c, trial)` order.
fn par_grid<T: Send>(
    grid: &[f64],
    trials: u64,
    f: impl Fn(f64, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let jobs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&c| (0..trials).map(move |t| (c, t)))
        .collect();
    jobs.into_par_iter().map(|(c, t)| f(c, t)).collect()
}

fn sorted_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut g = cfg.c_grid();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn detection_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = sorted_grid(cfg);
    let kind = cfg.experiment;
    let dcfg = DetectConfig::new(cfg.delta)?.with_budget(cfg.budget());
    let records = par_grid(&grid, cfg.trials, |c, t| {
        let mut rng = trial_stream(cfg, c, t);
        let s = state_with_coherence(cfg.d, c, &mut rng)?;
        if kind == ExperimentKind::BaselineScaling {
            let out = baseline_until_detect(&s, cfg.budget(), &mut rng);
            let mut r = base_record(cfg, c, t, out.calls);
            r.verdict = verdict_str(out.is_coherent());
            r.copies_consumed = out.copies_consumed;
            return Ok(r);
        }
        let mut oracle = CountedOracle::synthesize(&s);
        let out = if kind == ExperimentKind::BoostedDetection {
            detect_boosted(&mut oracle, &dcfg, &mut rng)?
        } else {
            detect_amplified(&mut oracle, &dcfg, &mut rng)?
        };
        debug_assert_eq!(out.calls, oracle.tally());
        let mut r = base_record(cfg, c, t, oracle.tally());
        r.verdict = verdict_str(out.is_coherent());
        Ok(r)
    })?;

    let mut cells = Vec::new();
    for (&c, rows) in grid.iter().zip(records.chunks(cfg.trials as usize)) {
        let (cost, success) = if kind == ExperimentKind::BaselineScaling {
            let m = baseline_copy_budget(c, cfg.delta)?;
            let ok = rows.iter().filter(|r| r.is_coherent() && r.copies_consumed <= m).count();
            (mean_se(rows.iter().map(|r| r.copies_consumed as f64)), ok)
        } else {
            let ok = rows.iter().filter(|r| r.is_coherent()).count();
            (mean_se(rows.iter().map(|r| r.total_calls() as f64)), ok)
        };
        cells.push(CellSummary {
            c_true: c,
            p_err: None,
            trials: cfg.trials,
            mean_cost: cost.0,
            stderr_cost: cost.1,
            success_rate: success as f64 / cfg.trials as f64,
            mean_abs_error: None,
            false_positive_rate: None,
            clean_fraction: None,
        });
    }
    let points: Vec<(f64, f64)> = cells.iter().map(|c| (c.c_true, c.mean_cost)).collect();
    let fit = (points.len() >= 3).then(|| fit_loglog(&points)).transpose()?;
    let fit_label = if kind == ExperimentKind::BaselineScaling {
        "copies vs c"
    } else {
        "calls vs c"
    };
    Ok(RunReport {
        config: cfg.clone(),
        records,
        cells,
        fit,
        fit_label,
    })
}

/// Phase-estimation settings implied by `cfg`.
pub fn qpe_config(cfg: &ExperimentConfig) -> Result<QpeConfig> {
    let base = QpeConfig::for_accuracy(cfg.epsilon, cfg.delta)?;
    match cfg.repetitions {
        Some(reps) => QpeConfig::new(base.ancilla_qubits, reps),
        None => Ok(base),
    }
}

/// Required grid size `M(epsilon)` for `epsilon = 2^-2 .. 2^-8`, fitted on
/// log-log axes.
pub fn accuracy_scaling_fit() -> Result<LogLogFit> {
    let points = (2..=8)
        .map(|e| {
            let eps = 2f64.powi(-e);
            calls_for_accuracy(eps).map(|m| (eps, m as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_loglog(&points)
}

fn estimation_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = sorted_grid(cfg);
    let qcfg = qpe_config(cfg)?;
    let rows = par_grid(&grid, cfg.trials, |c, t| {
        let mut rng = trial_stream(cfg, c, t);
        let s = state_with_coherence(cfg.d, c, &mut rng)?;
        let mut oracle = CountedOracle::synthesize(&s);
        let out = estimate_coherence(&mut oracle, &qcfg, &mut rng)?;
        // the estimator targets c_k for the label it selected
        let c_k = 1.0 - s.probabilities()[out.k];
        let abs_error = (out.c_hat - c_k).abs();
        let mut r = base_record(cfg, c, t, oracle.tally());
        r.verdict = "estimated";
        r.c_hat = Some(out.c_hat);
        r.abs_error = Some(abs_error);
        Ok((r, abs_error <= error_bound(c_k, qcfg.grid_size())))
    })?;
    let (records, within): (Vec<TrialRecord>, Vec<bool>) = rows.into_iter().unzip();

    let n = cfg.trials as usize;
    let cells = grid
        .iter()
        .zip(records.chunks(n).zip(within.chunks(n)))
        .map(|(&c, (rows, ok))| {
            let (mean_cost, stderr_cost) = mean_se(rows.iter().map(|r| r.total_calls() as f64));
            CellSummary {
                c_true: c,
                p_err: None,
                trials: cfg.trials,
                mean_cost,
                stderr_cost,
                success_rate: ok.iter().filter(|&&b| b).count() as f64 / n as f64,
                mean_abs_error: Some(rows.iter().filter_map(|r| r.abs_error).sum::<f64>() / n as f64),
                false_positive_rate: None,
                clean_fraction: None,
            }
        })
        .collect();
    Ok(RunReport {
        config: cfg.clone(),
        records,
        cells,
        fit: Some(accuracy_scaling_fit()?),
        fit_label: "grid size vs epsilon",
    })
}

fn noise_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let grid = sorted_grid(cfg);
    let opts = SweepOptions {
        dim: cfg.d,
        channel: cfg.channel,
        detect: DetectConfig::new(cfg.delta)?.with_budget(cfg.budget()),
    };
    let base = RngStream::new(cfg.seed, cfg.experiment.stream_tag());
    let ps = &cfg.p_err_grid;
    let n = cfg.trials;

    // controls first (c_true = 0), then each coherent cell; within a c the
    // trial id enumerates (p_err index, trial)
    let mut targets = vec![(0.0, true)];
    targets.extend(grid.iter().map(|&c| (c, false)));
    let jobs: Vec<(f64, bool, usize, u64)> = targets
        .iter()
        .flat_map(|&(c, ctl)| (0..ps.len()).flat_map(move |pi| (0..n).map(move |t| (c, ctl, pi, t))))
        .collect();
    let results: Vec<(TrialRecord, NoisyTrial)> = jobs
        .into_par_iter()
        .map(|(c, ctl, pi, t)| {
            let p = ps[pi];
            let tr = sweep_trial(c, p, t, ctl, &opts, &base)?;
            let mut r = base_record(cfg, if ctl { 0.0 } else { c }, pi as u64 * n + t, tr.calls);
            r.verdict = verdict_str(tr.coherent_verdict);
            r.p_err = Some(p);
            Ok((r, tr))
        })
        .collect::<Result<_>>()?;

    let block = |ti: usize, pi: usize| {
        let start = (ti * ps.len() + pi) * n as usize;
        &results[start..start + n as usize]
    };
    let mut cells = Vec::new();
    for (ti, &(c, ctl)) in targets.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            let trials: Vec<NoisyTrial> = block(ti, pi).iter().map(|(_, t)| *t).collect();
            let fpr = block(0, pi).iter().filter(|(_, t)| t.coherent_verdict).count() as f64 / n as f64;
            let cell: SweepCell = summarize_cell(c, p, &trials, fpr);
            let (_, se) = mean_se(trials.iter().map(|t| t.calls.total() as f64));
            cells.push(CellSummary {
                c_true: c,
                p_err: Some(p),
                trials: n,
                mean_cost: cell.mean_calls,
                stderr_cost: se,
                success_rate: if ctl { 1.0 - fpr } else { cell.success_rate },
                mean_abs_error: None,
                false_positive_rate: Some(fpr),
                clean_fraction: Some(cell.clean_fraction),
            });
        }
    }
    Ok(RunReport {
        config: cfg.clone(),
        records: results.into_iter().map(|(r, _)| r).collect(),
        cells,
        fit: None,
        fit_label: "",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        c.trials = 20;
        c.c_grid = Some(vec![0.25, 0.0625, 0.015625]);
        c
    }

    #[test]
    fn rows_are_sorted_and_complete() {
        for kind in [
            ExperimentKind::BaselineScaling,
            ExperimentKind::AmplifiedScaling,
            ExperimentKind::BoostedDetection,
        ] {
            let r = execute(&small(kind)).unwrap();
            assert_eq!(r.records.len(), 60);
            assert!(r
                .records
                .windows(2)
                .all(|w| (w[0].c_true, w[0].trial_id) < (w[1].c_true, w[1].trial_id)));
            assert_eq!(r.cells.len(), 3);
            assert!(r.fit.is_some());
            assert!(r.records.iter().all(|x| x.experiment == kind.name()));
        }
    }

    #[test]
    fn baseline_rows_charge_copies_as_forward_calls() {
        let r = execute(&small(ExperimentKind::BaselineScaling)).unwrap();
        for row in &r.records {
            assert_eq!(row.calls_forward, row.copies_consumed);
            assert_eq!(row.calls_inverse + row.calls_controlled, 0);
            assert!(row.is_coherent());
        }
    }

    #[test]
    fn estimation_rows_carry_estimates() {
        let mut cfg = small(ExperimentKind::EstimationScaling);
        cfg.c_grid = Some(vec![0.25]);
        cfg.epsilon = 0.1;
        cfg.repetitions = Some(3);
        let r = execute(&cfg).unwrap();
        assert_eq!(r.records.len(), 20);
        for row in &r.records {
            assert!(row.c_hat.is_some() && row.abs_error.is_some());
            assert!(row.calls_controlled > 0);
        }
        let f = r.fit.unwrap();
        assert!((f.slope + 1.0).abs() < 0.1, "{f:?}");
    }

    #[test]
    fn noise_rows_include_controls() {
        let mut cfg = small(ExperimentKind::NoiseSweep);
        cfg.c_grid = Some(vec![0.04]);
        cfg.p_err_grid = vec![0.0, 0.1];
        let r = execute(&cfg).unwrap();
        assert_eq!(r.records.len(), 80);
        assert_eq!(r.records.iter().filter(|x| x.c_true == 0.0).count(), 40);
        assert!(r.records.iter().all(|x| x.p_err.is_some()));
        assert!(r
            .records
            .windows(2)
            .all(|w| (w[0].c_true, w[0].trial_id) < (w[1].c_true, w[1].trial_id)));
        // noiseless controls never fire
        assert_eq!(r.cells[0].false_positive_rate, Some(0.0));
    }

    #[test]
    fn verify_kind_is_not_a_trial_run() {
        assert!(execute(&ExperimentConfig::new(ExperimentKind::VerifyFormulas)).is_err());
    }
}
