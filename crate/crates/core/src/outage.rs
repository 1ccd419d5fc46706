//! Closed-form outage probabilities of BRS, MMRS, and HRS.
//!
//! Products of `1 - exp(-x)` factors are accumulated in log space so the
//! deep tail (down to 1e-300) stays representable.

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, LinkBudget};
use crate::markov::{p_brs_total, ratio_to_f64};
use crate::selection::Scheme;
use crate::{Error, Result};

/// `ln(1 - exp(-x))` for `x > 0`, accurate at both ends.
pub fn log1mexp(x: f64) -> f64 {
    if x <= std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `Π (1 - exp(-γ/m))` over the given means.
fn prod_outage(means: impl Iterator<Item = f64>, threshold: f64) -> f64 {
    means.map(|m| log1mexp(threshold / m)).sum::<f64>().exp()
}

/// `1 - (1-a)(1-b)` without cancellation for small `a`, `b`.
fn union(a: f64, b: f64) -> f64 {
    a + b - a * b
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SNR threshold must be positive, got {threshold}"
        )));
    }
    Ok(())
}

fn check_mean(mean: f64) -> Result<()> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean SNR must be positive, got {mean}"
        )));
    }
    Ok(())
}

/// BRS outage: each relay's bottleneck is exponential with mean
/// `(1/γ̄_g + 1/γ̄_h)^-1`, and the best of `N` independent bottlenecks is in
/// outage only if all are.
pub fn outage_brs(budget: &LinkBudget, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    let means = budget
        .mean_snr_sr()
        .iter()
        .zip(budget.mean_snr_rd())
        .map(|(g, h)| 1.0 / (1.0 / g + 1.0 / h));
    Ok(prod_outage(means, threshold))
}

/// High-SNR i.i.d. BRS approximation `(2γ/γ̄)^N`.
pub fn outage_brs_asymptotic(n: usize, mean_snr: f64, threshold: f64) -> f64 {
    (2.0 * threshold / mean_snr).powi(n as i32)
}

/// MMRS outage: either hop maximum falls at or below the threshold.
pub fn outage_mmrs(budget: &LinkBudget, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    let sr = prod_outage(budget.mean_snr_sr().iter().copied(), threshold);
    let rd = prod_outage(budget.mean_snr_rd().iter().copied(), threshold);
    Ok(union(sr, rd))
}

/// MMRS outage with all `2N` links sharing mean `mean_snr`:
/// `1 - [1 - (1 - e^{-γ/γ̄})^N]^2`.
pub fn outage_mmrs_iid(n: usize, mean_snr: f64, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    check_mean(mean_snr)?;
    let hop = (n as f64 * log1mexp(threshold / mean_snr)).exp();
    Ok(union(hop, hop))
}

/// MMRS outage written in terms of `u = 1 - e^{-γ/γ̄}` directly.
pub fn outage_mmrs_from_u(n: usize, u: f64) -> f64 {
    let hop = u.powi(n as i32);
    union(hop, hop)
}

/// High-SNR i.i.d. MMRS approximation `(2^{1/N} γ/γ̄)^N`.
pub fn outage_mmrs_asymptotic(n: usize, mean_snr: f64, threshold: f64) -> f64 {
    let n_f = n as f64;
    (2f64.powf(1.0 / n_f) * threshold / mean_snr).powi(n as i32)
}

/// HRS outage for an i.i.d. budget: the mode mixture
/// `P_BRS · P_out^BRS + P_MMRS · P_out^MMRS` with the exact stationary `P_BRS`.
pub fn outage_hrs(budget: &LinkBudget, lb: u32, ne: u64, threshold: f64) -> Result<f64> {
    let mean = budget.iid_mean().ok_or_else(|| {
        Error::Unsupported(
            "the HRS closed form needs i.i.d. links; use the simulator for unequal means".into(),
        )
    })?;
    outage_hrs_iid(budget.n_relays(), lb, ne, mean, threshold)
}

pub fn outage_hrs_iid(n: usize, lb: u32, ne: u64, mean_snr: f64, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    check_mean(mean_snr)?;
    let p_brs = p_brs_total(n, lb, ne)?.p_brs;
    let budget = LinkBudget::iid(n, mean_snr)?;
    Ok(mix(
        ratio_to_f64(p_brs),
        outage_brs(&budget, threshold)?,
        outage_mmrs_iid(n, mean_snr, threshold)?,
    ))
}

/// Convex combination of the two mode outages.
pub fn mix(p_brs: f64, brs: f64, mmrs: f64) -> f64 {
    if p_brs == 1.0 {
        brs
    } else if p_brs == 0.0 {
        mmrs
    } else {
        p_brs * brs + (1.0 - p_brs) * mmrs
    }
}

/// HRS coding-gain base `2 P_MMRS + 2^N P_BRS`.
fn hrs_asymptotic_base(n: usize, p_brs: f64) -> f64 {
    2.0 * (1.0 - p_brs) + 2f64.powi(n as i32) * p_brs
}

/// High-SNR HRS approximation `((2 P_MMRS + 2^N P_BRS)^{1/N} γ/γ̄)^N`.
pub fn outage_hrs_asymptotic(n: usize, p_brs: f64, mean_snr: f64, threshold: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_brs) {
        return Err(Error::InvalidParameter(format!(
            "P_BRS must lie in [0, 1], got {p_brs}"
        )));
    }
    let n_f = n as f64;
    Ok((hrs_asymptotic_base(n, p_brs).powf(1.0 / n_f) * threshold / mean_snr).powi(n as i32))
}

/// Diversity order, coding gain, and SNR advantage over BRS of an
/// asymptote `P_out ≈ (G_c γ̄/γ)^{-G_d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    pub diversity_gain: u32,
    pub coding_gain: f64,
    pub snr_gain_db_vs_brs: f64,
}

impl GainSummary {
    fn new(n: usize, coding_gain: f64) -> Self {
        Self {
            diversity_gain: n as u32,
            coding_gain,
            snr_gain_db_vs_brs: 10.0 * (coding_gain / 0.5).log10(),
        }
    }
}

pub fn gains_brs(n: usize) -> GainSummary {
    GainSummary::new(n, 0.5)
}

pub fn gains_mmrs(n: usize) -> GainSummary {
    GainSummary::new(n, 2f64.powf(-1.0 / n as f64))
}

pub fn gains_hrs(n: usize, p_brs: f64) -> GainSummary {
    GainSummary::new(n, hrs_asymptotic_base(n, p_brs).powf(-1.0 / n as f64))
}

/// Large-`N` limit of the MMRS advantage over BRS: `10 log10 2` dB.
pub fn mmrs_gain_limit_db() -> f64 {
    10.0 * 2f64.log10()
}

/// One analytic outage value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub scheme: Scheme,
    pub mean_snr_db: f64,
    pub threshold: f64,
    pub probability: f64,
}

/// Analytic outage versus mean SNR for an i.i.d. setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub scheme: Scheme,
    pub n_relays: usize,
    pub lb: Option<u32>,
    pub ne: Option<u64>,
    pub threshold: f64,
    pub points: Vec<OutagePoint>,
}

/// Evaluate one scheme on an i.i.d. budget at each SNR (in dB). `buffers`
/// is `(L_b, N_e)` and is required for HRS.
pub fn iid_curve(
    scheme: Scheme,
    n: usize,
    buffers: Option<(u32, u64)>,
    snr_db: &[f64],
    threshold: f64,
) -> Result<OutageCurve> {
    if snr_db.is_empty() {
        return Err(Error::Config("the SNR grid is empty".into()));
    }
    let p_brs = match (scheme, buffers) {
        (Scheme::Hrs, Some((lb, ne))) => Some(p_brs_total(n, lb, ne)?.p_brs_f64()),
        (Scheme::Hrs, None) => return Err(Error::Config("HRS needs a buffer size".into())),
        _ => None,
    };
    let points = snr_db
        .iter()
        .map(|&db| {
            let mean = db_to_linear(db);
            let budget = LinkBudget::iid(n, mean)?;
            let probability = match scheme {
                Scheme::Brs => outage_brs(&budget, threshold)?,
                Scheme::Mmrs => outage_mmrs_iid(n, mean, threshold)?,
                Scheme::Hrs => mix(
                    p_brs.unwrap_or(1.0),
                    outage_brs(&budget, threshold)?,
                    outage_mmrs_iid(n, mean, threshold)?,
                ),
            };
            Ok(OutagePoint {
                scheme,
                mean_snr_db: db,
                threshold,
                probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lb, ne) = match scheme {
        Scheme::Hrs => (buffers.map(|b| b.0), buffers.map(|b| b.1)),
        _ => (None, None),
    };
    Ok(OutageCurve {
        scheme,
        n_relays: n,
        lb,
        ne,
        threshold,
        points,
    })
}
