use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coherence::harness::{run, verify_formulas, write_csv, ExperimentConfig, ExperimentKind, RunReport};

const EXIT_CONFIG: u8 = 1;
const EXIT_VERIFY: u8 = 2;

/// Simulated coherence detection and estimation experiments.
#[derive(Parser, Debug)]
#[command(name = "coherence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boosted amplitude-amplified detection over a coherence grid.
    Detect(Common),
    /// Phase-estimation coherence estimation.
    Estimate(Common),
    /// Cost scaling of the copy-based and/or amplified detectors.
    Scaling {
        #[arg(long, value_enum, default_value_t = ScalingKind::Both)]
        kind: ScalingKind,
        #[command(flatten)]
        common: Common,
    },
    /// Detection under per-call noise.
    NoiseSweep(Common),
    /// Check the closed-form identity suites; exits 2 on failure.
    Verify(Common),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScalingKind {
    Baseline,
    Amplified,
    Both,
}

/// Flags shared by every subcommand. Values stay textual until they reach
/// the config so that parse errors name the field and exit with status 1.
#[derive(Args, Debug, Default)]
struct Common {
    /// key=value file applied before the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<String>,
    /// comma-separated coherence values
    #[arg(long)]
    c_grid: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// oracle-call (or copy) cap per trial
    #[arg(long)]
    budget: Option<String>,
    /// CSV output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// comma-separated per-call error probabilities (noise-sweep)
    #[arg(long)]
    p_err_grid: Option<String>,
    /// depolarizing, dephasing or basis-reset (noise-sweep)
    #[arg(long)]
    channel: Option<String>,
    /// odd number of phase-estimation runs per estimate (estimate)
    #[arg(long)]
    repetitions: Option<String>,
}

impl Common {
    fn build(&self, kind: ExperimentKind) -> Result<ExperimentConfig, String> {
        let mut cfg = ExperimentConfig::new(kind);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("config: cannot read {}: {e}", path.display()))?;
            cfg.apply_file_contents(&text).map_err(|e| e.to_string())?;
            // the subcommand decides the experiment
            cfg.experiment = kind;
        }
        let flags = [
            ("d", &self.d),
            ("c-grid", &self.c_grid),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("budget", &self.budget),
            ("p-err-grid", &self.p_err_grid),
            ("channel", &self.channel),
            ("repetitions", &self.repetitions),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| e.to_string())?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, String> {
    let kinds: Vec<ExperimentKind>;
    let common = match &cmd {
        Command::Detect(c) => {
            kinds = vec![ExperimentKind::BoostedDetection];
            c
        }
        Command::Estimate(c) => {
            kinds = vec![ExperimentKind::EstimationScaling];
            c
        }
        Command::NoiseSweep(c) => {
            kinds = vec![ExperimentKind::NoiseSweep];
            c
        }
        Command::Scaling { kind, common } => {
            kinds = match kind {
                ScalingKind::Baseline => vec![ExperimentKind::BaselineScaling],
                ScalingKind::Amplified => vec![ExperimentKind::AmplifiedScaling],
                ScalingKind::Both => vec![ExperimentKind::BaselineScaling, ExperimentKind::AmplifiedScaling],
            };
            common
        }
        Command::Verify(c) => return verify(c),
    };

    let configs = kinds
        .into_iter()
        .map(|k| common.build(k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    for mut cfg in configs {
        // a combined run writes one file once every experiment has finished
        cfg.out = None;
        reports.push(run(&cfg).map_err(|e| e.to_string())?);
    }
    emit(&reports, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn emit(reports: &[RunReport], out: Option<&PathBuf>) -> Result<(), String> {
    let records: Vec<_> = reports.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let summary: String = reports.iter().map(|r| r.summary()).collect();
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| format!("out: {}: {e}", path.display()))?;
            let mut w = io::BufWriter::new(file);
            write_csv(&mut w, &records)
                .and_then(|_| w.flush())
                .map_err(|e| format!("out: {}: {e}", path.display()))?;
            print!("{summary}");
            println!("wrote {} rows to {}", records.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &records).map_err(|e| e.to_string())?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn verify(common: &Common) -> Result<ExitCode, String> {
    let cfg = common.build(ExperimentKind::VerifyFormulas)?;
    let report = verify_formulas(cfg.seed).map_err(|e| e.to_string())?;
    print!("{}", report.render());
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    })
}
