//! Versioned CSV rows and JSON documents.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::selection::Scheme;
use crate::sim::SimReport;
use crate::{Error, Result};

/// Bumped whenever the CSV columns or the JSON document layout change.
pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "n",
    "lb",
    "ne",
    "snr_db",
    "rate",
    "value_kind",
    "value",
    "stderr",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    OutageAnalytic,
    OutageSim,
    PBrsAnalytic,
    PBrsSim,
    DelaySim,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::OutageAnalytic => "outage_analytic",
            ValueKind::OutageSim => "outage_sim",
            ValueKind::PBrsAnalytic => "p_brs_analytic",
            ValueKind::PBrsSim => "p_brs_sim",
            ValueKind::DelaySim => "delay_sim",
        }
    }

    fn is_sim(self) -> bool {
        matches!(
            self,
            ValueKind::OutageSim | ValueKind::PBrsSim | ValueKind::DelaySim
        )
    }
}

/// One CSV line. Empty optional fields are left blank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scheme: Scheme,
    pub n: usize,
    pub lb: Option<u32>,
    pub ne: Option<u64>,
    pub snr_db: Option<f64>,
    pub rate: f64,
    pub value_kind: ValueKind,
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl Row {
    pub fn analytic(scheme: Scheme, n: usize, kind: ValueKind, value: f64, rate: f64) -> Self {
        Self {
            scheme,
            n,
            lb: None,
            ne: None,
            snr_db: None,
            rate,
            value_kind: kind,
            value,
            stderr: None,
            trials: None,
            seed: None,
        }
    }

    pub fn at_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }

    pub fn with_buffers(mut self, lb: u32, ne: u64) -> Self {
        self.lb = Some(lb);
        self.ne = Some(ne);
        self
    }

    pub fn simulated(mut self, stderr: Option<f64>, trials: u64, seed: u64) -> Self {
        debug_assert!(self.value_kind.is_sim());
        self.stderr = stderr;
        self.trials = Some(trials);
        self.seed = Some(seed);
        self
    }

    fn record(&self) -> [String; 11] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.scheme.to_string(),
            self.n.to_string(),
            opt(self.lb.map(|v| v.to_string())),
            opt(self.ne.map(|v| v.to_string())),
            opt(self.snr_db.map(format_number)),
            format_number(self.rate),
            self.value_kind.as_str().to_string(),
            format_number(self.value),
            opt(self.stderr.map(format_number)),
            opt(self.trials.map(|v| v.to_string())),
            opt(self.seed.map(|v| v.to_string())),
        ]
    }
}

/// `%.10g`: ten significant digits, trailing zeros dropped, scientific
/// notation outside `[1e-5, 1e10)`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.write_record(row.record()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Self-describing JSON output: the resolved config travels with the data.
#[derive(Debug, Serialize)]
pub struct Document<'a, C: Serialize> {
    pub format_version: u32,
    pub command: &'a str,
    pub config: &'a C,
    pub rows: &'a [Row],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub reports: &'a [SimReport],
}

impl<C: Serialize> Document<'_, C> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }
}

/// Path of the JSON sidecar carrying the resolved config next to a CSV file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}
