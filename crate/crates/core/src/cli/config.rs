//! Experiment configuration documents and their resolution to concrete runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::snr_threshold;
use crate::markov::max_total_full;
use crate::selection::Scheme;
use crate::sim::{default_burn_in, BufferMode};
use crate::{Error, Result};

/// The published JSON schema for [`ExperimentConfig`].
pub const SCHEMA: &str = include_str!("../../schema/experiment_config.schema.json");

pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "BUFRELAY_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A JSON experiment document. Every field is optional; command-line flags
/// override fields present in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<Scheme>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lb: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_mode: Option<BufferMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config does not match the schema: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` replace fields in `self`.
    pub fn overridden_by(self, other: ExperimentConfig) -> Self {
        Self {
            schemes: other.schemes.or(self.schemes),
            n: other.n.or(self.n),
            lb: other.lb.or(self.lb),
            ne: other.ne.or(self.ne),
            snr_db: other.snr_db.or(self.snr_db),
            rate: other.rate.or(self.rate),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            workers: other.workers.or(self.workers),
            buffer_mode: other.buffer_mode.or(self.buffer_mode),
            burn_in: other.burn_in.or(self.burn_in),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
        }
    }

    pub fn resolve(&self, default_schemes: &[Scheme]) -> Result<ResolvedConfig> {
        let schemes = self
            .schemes
            .clone()
            .unwrap_or_else(|| default_schemes.to_vec());
        if schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        let n = self
            .n
            .ok_or_else(|| Error::Config("the number of relays `n` is required".into()))?;
        if n == 0 {
            return Err(Error::Config("`n` must be at least 1".into()));
        }
        let rate = self.rate.unwrap_or(DEFAULT_RATE);
        let threshold = snr_threshold(rate).map_err(|e| Error::Config(e.to_string()))?;
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(Error::Config("`trials` must be at least 1".into()));
        }
        if self
            .snr_db
            .as_ref()
            .is_some_and(|g| g.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("`workers` must be at least 1".into()));
            }
        }

        let mut buffers = Vec::new();
        if schemes.contains(&Scheme::Hrs) {
            let lbs = self
                .lb
                .as_ref()
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::Config("HRS needs a buffer size `lb`".into()))?;
            for &lb in lbs {
                if lb == 0 {
                    return Err(Error::Config("`lb` must be at least 1".into()));
                }
                match &self.ne {
                    Some(nes) if !nes.is_empty() => {
                        for &ne in nes {
                            let max = max_total_full(n, lb);
                            if ne > max {
                                return Err(Error::Infeasible { n, lb, ne, max });
                            }
                            buffers.push(BufferPoint { lb, ne });
                        }
                    }
                    Some(_) => return Err(Error::Config("`ne` must not be empty".into())),
                    None => buffers.push(BufferPoint {
                        lb,
                        ne: half_full(n, lb),
                    }),
                }
            }
        }

        Ok(ResolvedConfig {
            schemes,
            n,
            buffers,
            snr_db: self.snr_db.clone().unwrap_or_default(),
            rate,
            threshold,
            trials,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            buffer_mode: self.buffer_mode.unwrap_or_default(),
            burn_in: self.burn_in,
        })
    }
}

/// `ceil(N L_b / 2)`, capped at the largest feasible fill `N (L_b - 1)`.
pub fn half_full(n: usize, lb: u32) -> u64 {
    (n as u64 * u64::from(lb))
        .div_ceil(2)
        .min(max_total_full(n, lb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferPoint {
    pub lb: u32,
    pub ne: u64,
}

/// Fully resolved experiment; embedded in every output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub schemes: Vec<Scheme>,
    pub n: usize,
    /// `(L_b, N_e)` pairs evaluated for HRS.
    pub buffers: Vec<BufferPoint>,
    pub snr_db: Vec<f64>,
    pub rate: f64,
    pub threshold: f64,
    pub trials: u64,
    pub seed: u64,
    pub buffer_mode: BufferMode,
    pub burn_in: Option<u64>,
}

impl ResolvedConfig {
    pub fn require_snr_grid(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("the SNR grid `snr_db` is empty".into()));
        }
        Ok(())
    }

    pub fn burn_in_for(&self, lb: u32) -> u64 {
        self.burn_in.unwrap_or_else(|| default_burn_in(self.n, lb))
    }
}

/// Worker count: explicit value, then the environment, then the machine.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
