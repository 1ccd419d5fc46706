//! Rayleigh block-fading two-hop channel model.
//!
//! All SNRs are linear-scale. Under Rayleigh fading the instantaneous SNR of
//! every link is exponential with the link's mean SNR, and block fading makes
//! successive transmission intervals independent.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-relay mean SNRs of the source-relay and relay-destination hops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinkBudget")]
pub struct LinkBudget {
    mean_snr_sr: Vec<f64>,
    mean_snr_rd: Vec<f64>,
}

#[derive(Deserialize)]
struct RawLinkBudget {
    mean_snr_sr: Vec<f64>,
    mean_snr_rd: Vec<f64>,
}

impl TryFrom<RawLinkBudget> for LinkBudget {
    type Error = Error;

    fn try_from(raw: RawLinkBudget) -> Result<Self> {
        LinkBudget::new(raw.mean_snr_sr, raw.mean_snr_rd)
    }
}

impl LinkBudget {
    pub fn new(mean_snr_sr: Vec<f64>, mean_snr_rd: Vec<f64>) -> Result<Self> {
        if mean_snr_sr.is_empty() {
            return Err(Error::InvalidParameter(
                "a link budget needs at least one relay".into(),
            ));
        }
        if mean_snr_sr.len() != mean_snr_rd.len() {
            return Err(Error::DimensionMismatch {
                expected: mean_snr_sr.len(),
                actual: mean_snr_rd.len(),
            });
        }
        if let Some(bad) = mean_snr_sr
            .iter()
            .chain(&mean_snr_rd)
            .find(|v| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "mean SNRs must be positive and finite, got {bad}"
            )));
        }
        Ok(Self {
            mean_snr_sr,
            mean_snr_rd,
        })
    }

    /// All `2N` links share the same mean SNR.
    pub fn iid(n_relays: usize, mean_snr: f64) -> Result<Self> {
        Self::new(vec![mean_snr; n_relays], vec![mean_snr; n_relays])
    }

    pub fn n_relays(&self) -> usize {
        self.mean_snr_sr.len()
    }

    pub fn mean_snr_sr(&self) -> &[f64] {
        &self.mean_snr_sr
    }

    pub fn mean_snr_rd(&self) -> &[f64] {
        &self.mean_snr_rd
    }

    pub fn is_iid(&self) -> bool {
        let first = self.mean_snr_sr[0];
        self.mean_snr_sr
            .iter()
            .chain(&self.mean_snr_rd)
            .all(|&v| v == first)
    }

    /// The common mean SNR if the budget is i.i.d.
    pub fn iid_mean(&self) -> Option<f64> {
        self.is_iid().then(|| self.mean_snr_sr[0])
    }
}

/// One block-fading draw of the instantaneous SNRs of both hops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub snr_sr: Vec<f64>,
    pub snr_rd: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(snr_sr: Vec<f64>, snr_rd: Vec<f64>) -> Result<Self> {
        if snr_sr.is_empty() {
            return Err(Error::InvalidParameter("empty channel realization".into()));
        }
        if snr_sr.len() != snr_rd.len() {
            return Err(Error::DimensionMismatch {
                expected: snr_sr.len(),
                actual: snr_rd.len(),
            });
        }
        if let Some(bad) = snr_sr
            .iter()
            .chain(&snr_rd)
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "instantaneous SNRs must be non-negative and finite, got {bad}"
            )));
        }
        Ok(Self { snr_sr, snr_rd })
    }

    pub fn n_relays(&self) -> usize {
        self.snr_sr.len()
    }

    /// Same-shape placeholder used as a reusable sampling buffer.
    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            snr_sr: vec![0.0; n],
            snr_rd: vec![0.0; n],
        }
    }
}

/// Target rate `R` in bit/s/Hz and the matching outage threshold `2^(2R) - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRate")]
pub struct RateConfig {
    rate: f64,
    threshold: f64,
}

#[derive(Deserialize)]
struct RawRate {
    rate: f64,
}

impl TryFrom<RawRate> for RateConfig {
    type Error = Error;

    fn try_from(raw: RawRate) -> Result<Self> {
        RateConfig::new(raw.rate)
    }
}

impl RateConfig {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate,
            threshold: snr_threshold(rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// SNR threshold for error-free transmission at `rate` over two hops.
pub fn snr_threshold(rate: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate must be positive, got {rate}"
        )));
    }
    Ok((2.0 * rate).exp2() - 1.0)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cannot take dB of non-positive value {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

/// Counter-addressable random stream.
///
/// Every draw is fixed-width (one `u64`, two ChaCha words), so the `k`-th
/// draw of stream `s` under seed `seed` is a pure function of
/// `(seed, s, k)`. A channel realization for `N` relays consumes exactly
/// `2N` draws, which lets interval `t` be addressed directly with
/// [`RandomStream::seek_interval`].
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Position the stream at draw `index` (counted in `u64` draws).
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(u128::from(index) * 2);
    }

    /// Position the stream at the first draw of interval `interval`.
    pub fn seek_interval(&mut self, interval: u64, n_relays: usize) {
        self.seek(interval * 2 * n_relays as u64);
    }

    /// Uniform on `(0, 1]` with 53 bits of resolution.
    pub fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with the given mean, by inversion.
    pub fn next_exp(&mut self, mean: f64) -> f64 {
        -mean * self.next_open01().ln()
    }
}

/// Draw one independent block-fading realization.
pub fn sample_realization(budget: &LinkBudget, rng: &mut RandomStream) -> ChannelRealization {
    let mut out = ChannelRealization::zeros(budget.n_relays());
    sample_into(budget, rng, &mut out);
    out
}

/// Draw into an existing realization of matching size. Source-relay draws
/// come first, then relay-destination draws.
pub(crate) fn sample_into(
    budget: &LinkBudget,
    rng: &mut RandomStream,
    out: &mut ChannelRealization,
) {
    for (slot, &mean) in out.snr_sr.iter_mut().zip(&budget.mean_snr_sr) {
        *slot = rng.next_exp(mean);
    }
    for (slot, &mean) in out.snr_rd.iter_mut().zip(&budget.mean_snr_rd) {
        *slot = rng.next_exp(mean);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_values() {
        assert_eq!(snr_threshold(1.0).unwrap(), 3.0);
        assert_eq!(snr_threshold(0.5).unwrap(), 1.0);
        assert_eq!(snr_threshold(2.0).unwrap(), 15.0);
        assert!(snr_threshold(0.0).is_err());
        assert!(snr_threshold(-1.0).is_err());
        assert!(snr_threshold(f64::NAN).is_err());
    }

    #[test]
    fn threshold_is_increasing() {
        let mut prev = 0.0;
        for k in 1..200 {
            let t = snr_threshold(k as f64 * 0.05).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((linear_to_db(db_to_linear(15.0)).unwrap() - 15.0).abs() < 1e-12);
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-3.0).is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(LinkBudget::new(vec![], vec![]).is_err());
        assert!(LinkBudget::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(LinkBudget::new(vec![0.0], vec![1.0]).is_err());
        assert!(LinkBudget::new(vec![f64::INFINITY], vec![1.0]).is_err());
        let b = LinkBudget::new(vec![2.0, 2.0], vec![2.0, 2.0]).unwrap();
        assert!(b.is_iid());
        assert_eq!(b.iid_mean(), Some(2.0));
        let b = LinkBudget::new(vec![2.0, 2.0], vec![2.0, 3.0]).unwrap();
        assert!(!b.is_iid());
        assert_eq!(b.iid_mean(), None);
    }

    #[test]
    fn budget_deserialization_validates() {
        let ok: LinkBudget =
            serde_json::from_str(r#"{"mean_snr_sr":[1.0],"mean_snr_rd":[2.0]}"#).unwrap();
        assert_eq!(ok.n_relays(), 1);
        assert!(serde_json::from_str::<LinkBudget>(
            r#"{"mean_snr_sr":[-1.0],"mean_snr_rd":[2.0]}"#
        )
        .is_err());
    }

    #[test]
    fn realization_validation() {
        assert!(ChannelRealization::new(vec![], vec![]).is_err());
        assert!(ChannelRealization::new(vec![1.0], vec![-1.0]).is_err());
        assert!(ChannelRealization::new(vec![0.0], vec![0.0]).is_ok());
    }

    #[test]
    fn single_relay_draws_are_nonnegative() {
        let budget = LinkBudget::new(vec![0.3], vec![40.0]).unwrap();
        let mut rng = RandomStream::new(11, 0);
        for _ in 0..10_000 {
            let r = sample_realization(&budget, &mut rng);
            assert!(r.snr_sr[0] >= 0.0 && r.snr_rd[0] >= 0.0);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let budget = LinkBudget::iid(3, 5.0).unwrap();
        let mut a = RandomStream::new(99, 4);
        let mut b = RandomStream::new(99, 4);
        for _ in 0..100 {
            assert_eq!(
                sample_realization(&budget, &mut a),
                sample_realization(&budget, &mut b)
            );
        }
        let mut c = RandomStream::new(99, 5);
        let mut a = RandomStream::new(99, 4);
        assert_ne!(
            sample_realization(&budget, &mut a),
            sample_realization(&budget, &mut c)
        );
    }

    #[test]
    fn seek_matches_sequential_draws() {
        let budget = LinkBudget::iid(2, 1.0).unwrap();
        let mut seq = RandomStream::new(5, 0);
        let draws: Vec<_> = (0..50)
            .map(|_| sample_realization(&budget, &mut seq))
            .collect();
        for t in [0u64, 1, 17, 49] {
            let mut direct = RandomStream::new(5, 0);
            direct.seek_interval(t, 2);
            assert_eq!(sample_realization(&budget, &mut direct), draws[t as usize]);
        }
    }

    #[test]
    fn unit_mean_law_of_large_numbers() {
        let budget = LinkBudget::iid(2, 1.0).unwrap();
        let mut rng = RandomStream::new(2024, 0);
        let trials = 1_000_000;
        let mut sums = [0.0; 4];
        for _ in 0..trials {
            let r = sample_realization(&budget, &mut rng);
            sums[0] += r.snr_sr[0];
            sums[1] += r.snr_sr[1];
            sums[2] += r.snr_rd[0];
            sums[3] += r.snr_rd[1];
        }
        // exponential(1) has unit standard deviation
        let tol = 3.0 / (trials as f64).sqrt();
        for s in sums {
            assert!(
                (s / trials as f64 - 1.0).abs() < tol,
                "mean {}",
                s / trials as f64
            );
        }
    }

    #[test]
    fn heterogeneous_means_and_independence() {
        let means_sr = [0.5, 3.0, 20.0];
        let means_rd = [7.0, 1.0, 0.1];
        let budget = LinkBudget::new(means_sr.to_vec(), means_rd.to_vec()).unwrap();
        let mut rng = RandomStream::new(7, 3);
        let trials = 1_000_000usize;
        let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(trials)).collect();
        for _ in 0..trials {
            let r = sample_realization(&budget, &mut rng);
            for (k, v) in r.snr_sr.iter().chain(&r.snr_rd).enumerate() {
                cols[k].push(*v);
            }
        }
        let all_means: Vec<f64> = means_sr.iter().chain(&means_rd).copied().collect();
        let stats: Vec<(f64, f64)> = cols
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / trials as f64;
                let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / trials as f64;
                (m, v.sqrt())
            })
            .collect();
        for (k, &(m, _)) in stats.iter().enumerate() {
            let se = all_means[k] / (trials as f64).sqrt();
            assert!(
                (m - all_means[k]).abs() < 4.0 * se,
                "link {k}: {m} vs {}",
                all_means[k]
            );
        }
        for i in 0..6 {
            for j in (i + 1)..6 {
                let cov = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| (a - stats[i].0) * (b - stats[j].0))
                    .sum::<f64>()
                    / trials as f64;
                let corr = cov / (stats[i].1 * stats[j].1);
                assert!(corr.abs() < 0.01, "corr({i},{j}) = {corr}");
            }
        }
    }
}
