use std::io::{self, Write};

/// Bumped whenever the column set or its meaning changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 13] = [
    "experiment",
    "d",
    "c_true",
    "seed",
    "trial_id",
    "verdict",
    "calls_forward",
    "calls_inverse",
    "calls_controlled",
    "copies_consumed",
    "c_hat",
    "abs_error",
    "p_err",
];

/// One benchmark row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: &'static str,
    pub d: usize,
    pub c_true: f64,
    pub seed: u64,
    pub trial_id: u64,
    pub verdict: &'static str,
    pub calls_forward: u64,
    pub calls_inverse: u64,
    pub calls_controlled: u64,
    pub copies_consumed: u64,
    pub c_hat: Option<f64>,
    pub abs_error: Option<f64>,
    pub p_err: Option<f64>,
}

impl TrialRecord {
    pub fn uncontrolled_calls(&self) -> u64 {
        self.calls_forward + self.calls_inverse
    }

    pub fn total_calls(&self) -> u64 {
        self.calls_forward + self.calls_inverse + self.calls_controlled
    }

    pub fn is_coherent(&self) -> bool {
        self.verdict == "coherent"
    }

    fn write_row<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.d,
            format_float(self.c_true),
            self.seed,
            self.trial_id,
            self.verdict,
            self.calls_forward,
            self.calls_inverse,
            self.calls_controlled,
            self.copies_consumed,
            opt(self.c_hat),
            opt(self.abs_error),
            opt(self.p_err),
        )
    }
}

pub fn write_csv<W: Write>(w: &mut W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        r.write_row(w)?;
    }
    Ok(())
}

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-5, 1e12)`. Locale-independent.
pub fn format_float(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
