//! Seeded Monte Carlo engine.
//!
//! Randomness is addressed by position: measured interval `t` of a run with
//! seed `seed` and stream `s` always reads the draws at
//! [`RandomStream::seek_interval`]`(t)` of ChaCha stream `2s`, and burn-in
//! intervals read stream `2s + 1`. Memoryless policies (BRS and MMRS outage)
//! split the interval range across workers; results do not depend on the
//! worker count. HRS buffer chains are path-dependent and run sequentially.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::channel::{sample_into, ChannelRealization, LinkBudget, RandomStream, RateConfig};
use crate::markov::{max_total_full, StateSpace};
use crate::selection::{
    is_outage, select_brs, select_hrs_unchecked, select_mmrs, BufferState, Decision, Mode, Scheme,
};
use crate::{Error, Result};

/// How relay buffers react to failed hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferMode {
    /// Every interval enqueues at the receiving relay and dequeues at the
    /// transmitting relay. This is the dynamics of the exact Markov analysis.
    #[default]
    AnalysisMatched,
    /// Enqueue only if the source-relay hop is above threshold, dequeue only
    /// if the relay-destination hop is. Exploratory; no closed form exists.
    OutageAware,
}

/// Number of contiguous batches used for batch-means standard errors.
pub const BATCHES: u64 = 100;

/// Mixing allowance before measurement and histogram thinning stride:
/// `10 N L_b` intervals.
pub fn default_burn_in(n: usize, lb: u32) -> u64 {
    10 * n as u64 * u64::from(lb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub policy: Scheme,
    pub budget: LinkBudget,
    pub rate: RateConfig,
    /// Buffer size `L_b` (HRS only).
    pub lb: Option<u32>,
    /// Total full elements `N_e` (HRS only).
    pub ne: Option<u64>,
    /// Measured transmission intervals.
    pub trials: u64,
    pub seed: u64,
    /// Stream identifier; distinct values give independent runs under one seed.
    #[serde(default)]
    pub stream: u64,
    /// Worker threads for memoryless runs. Never changes results, so it is
    /// left out of serialized reports.
    #[serde(skip, default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub buffer_mode: BufferMode,
    /// Defaults to [`default_burn_in`] for HRS.
    #[serde(default)]
    pub burn_in: Option<u64>,
    /// Record the visited-state histogram (HRS, analysis-matched).
    #[serde(default)]
    pub record_states: bool,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(
        policy: Scheme,
        budget: LinkBudget,
        rate: RateConfig,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            policy,
            budget,
            rate,
            lb: None,
            ne: None,
            trials,
            seed,
            stream: 0,
            workers: 1,
            buffer_mode: BufferMode::AnalysisMatched,
            burn_in: None,
            record_states: false,
        }
    }

    pub fn with_buffers(mut self, lb: u32, ne: u64) -> Self {
        self.lb = Some(lb);
        self.ne = Some(ne);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_buffer_mode(mut self, mode: BufferMode) -> Self {
        self.buffer_mode = mode;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn recording_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    pub fn n_relays(&self) -> usize {
        self.budget.n_relays()
    }

    /// `(L_b, N_e)` for HRS, validated for feasibility.
    fn hrs_buffers(&self) -> Result<(u32, u64)> {
        let n = self.n_relays();
        let lb = self
            .lb
            .ok_or_else(|| Error::Config("HRS needs a buffer size L_b".into()))?;
        if lb == 0 {
            return Err(Error::InvalidParameter(
                "buffer size L_b must be at least 1".into(),
            ));
        }
        let ne = self
            .ne
            .ok_or_else(|| Error::Config("HRS needs a total fill N_e".into()))?;
        let max = max_total_full(n, lb);
        if ne > max {
            return Err(Error::Infeasible { n, lb, ne, max });
        }
        Ok((lb, ne))
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter(
                "at least one trial is required".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter(
                "at least one worker is required".into(),
            ));
        }
        if self.policy == Scheme::Hrs {
            self.hrs_buffers()?;
        }
        Ok(())
    }

    fn resolved_burn_in(&self, lb: u32) -> u64 {
        self.burn_in
            .unwrap_or_else(|| default_burn_in(self.n_relays(), lb))
    }
}

/// FIFO packet queue of one relay. Each record is the interval in which the
/// packet was received.
#[derive(Debug, Clone, Default)]
pub struct FifoBuffer {
    packets: VecDeque<u64>,
}

impl FifoBuffer {
    pub fn with_packets(count: u32, interval: u64) -> Self {
        Self {
            packets: std::iter::repeat_n(interval, count as usize).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn enqueue(&mut self, interval: u64) {
        self.packets.push_back(interval);
    }

    /// Remove the oldest packet and return how many intervals it was stored.
    pub fn dequeue(&mut self, interval: u64) -> Option<u64> {
        self.packets.pop_front().map(|received| interval - received)
    }
}

/// Spread `N_e` packets as evenly as possible, larger shares first.
pub fn initial_buffer_fill(n: usize, lb: u32, ne: u64) -> Result<BufferState> {
    if n == 0 || lb == 0 {
        return Err(Error::InvalidParameter(
            "need at least one relay and one buffer element".into(),
        ));
    }
    let max = max_total_full(n, lb);
    if ne > max {
        return Err(Error::Infeasible { n, lb, ne, max });
    }
    let q = ne / n as u64;
    let r = (ne % n as u64) as usize;
    let occupancy = (0..n).map(|i| (q + u64::from(i < r)) as u32).collect();
    BufferState::new(occupancy, lb)
}

/// Visits per state of the HRS chain, in lexicographic state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHistogram {
    pub states: Vec<Vec<u32>>,
    /// State at the start of every measured interval.
    pub counts: Vec<u64>,
    /// State at the start of every `stride`-th measured interval; close to
    /// independent samples for chi-square tests.
    pub thinned_counts: Vec<u64>,
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub intervals: u64,
    pub outage_count: u64,
    pub outage_estimate: f64,
    /// Binomial standard error `sqrt(p(1-p)/T)`.
    pub stderr: f64,
    /// Batch-means standard error, accounting for buffer-state correlation.
    pub stderr_batch: Option<f64>,
    pub brs_count: Option<u64>,
    pub empirical_p_brs: Option<f64>,
    pub p_brs_stderr_batch: Option<f64>,
    pub state_histogram: Option<StateHistogram>,
    pub delivered_packets: Option<u64>,
    pub average_delay: Option<f64>,
}

impl SimReport {
    fn base(config: &SimConfig, outage_count: u64) -> Self {
        let t = config.trials;
        let p = outage_count as f64 / t as f64;
        Self {
            config: config.clone(),
            intervals: t,
            outage_count,
            outage_estimate: p,
            stderr: (p * (1.0 - p) / t as f64).sqrt(),
            stderr_batch: None,
            brs_count: None,
            empirical_p_brs: None,
            p_brs_stderr_batch: None,
            state_histogram: None,
            delivered_packets: None,
            average_delay: None,
        }
    }

    /// Whether `value` lies within `k` binomial standard errors of the estimate.
    pub fn brackets(&self, value: f64, k: f64) -> bool {
        (self.outage_estimate - value).abs() <= k * self.stderr
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

fn measurement_stream(config: &SimConfig) -> RandomStream {
    RandomStream::new(config.seed, config.stream.wrapping_mul(2))
}

fn burn_in_stream(config: &SimConfig) -> RandomStream {
    RandomStream::new(config.seed, config.stream.wrapping_mul(2).wrapping_add(1))
}

/// Monte Carlo outage probability of the configured policy.
pub fn run_outage_sim(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    match config.policy {
        Scheme::Brs | Scheme::Mmrs => Ok(run_memoryless(config)),
        Scheme::Hrs => {
            let (lb, ne) = config.hrs_buffers()?;
            run_chain(config, lb, ne, false)
        }
    }
}

/// Long-run fraction of HRS intervals spent in BRS mode, with the state
/// histogram.
pub fn empirical_p_brs(config: &SimConfig) -> Result<SimReport> {
    if config.policy != Scheme::Hrs {
        return Err(Error::Unsupported(format!(
            "mode frequencies are only defined for HRS, not {}",
            config.policy
        )));
    }
    if config.buffer_mode != BufferMode::AnalysisMatched {
        return Err(Error::Unsupported(
            "the state histogram needs analysis-matched buffers (fixed N_e)".into(),
        ));
    }
    let mut config = config.clone();
    config.record_states = true;
    run_outage_sim(&config)
}

/// Mean number of intervals a delivered packet spent in a relay buffer.
pub fn run_delay_sim(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    match config.policy {
        Scheme::Mmrs => Err(Error::Unsupported(
            "MMRS assumes unbounded buffers, so its delay is undefined".into(),
        )),
        // BRS is HRS with single-element buffers: every packet passes through
        Scheme::Brs => run_chain(config, 1, 0, true),
        Scheme::Hrs => {
            let (lb, ne) = config.hrs_buffers()?;
            run_chain(config, lb, ne, true)
        }
    }
}

fn count_outages(budget: &LinkBudget, config: &SimConfig, start: u64, end: u64) -> u64 {
    let n = budget.n_relays();
    let threshold = config.rate.threshold();
    let mut rng = measurement_stream(config);
    rng.seek_interval(start, n);
    let mut real = ChannelRealization::zeros(n);
    let mut count = 0;
    for _ in start..end {
        sample_into(budget, &mut rng, &mut real);
        let snr = match config.policy {
            Scheme::Mmrs => {
                let (rx, tx) = select_mmrs(&real);
                real.snr_sr[rx].min(real.snr_rd[tx])
            }
            _ => {
                let b = select_brs(&real);
                real.snr_sr[b].min(real.snr_rd[b])
            }
        };
        count += u64::from(is_outage(snr, threshold));
    }
    count
}

fn run_memoryless(config: &SimConfig) -> SimReport {
    let t = config.trials;
    let workers = (config.workers as u64).clamp(1, t);
    let chunk = t.div_ceil(workers);
    let count = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let start = (w * chunk).min(t);
                let end = ((w + 1) * chunk).min(t);
                scope.spawn(move || count_outages(&config.budget, config, start, end))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .sum()
    });
    SimReport::base(config, count)
}

/// Mean of per-batch ratios and the batch-means standard error.
fn batch_stderr(hits: &[u64], batch_len: u64) -> Option<f64> {
    let b = hits.len();
    if b < 2 || batch_len == 0 {
        return None;
    }
    let means: Vec<f64> = hits.iter().map(|&h| h as f64 / batch_len as f64).collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Some((var / b as f64).sqrt())
}

struct Chain<'a> {
    config: &'a SimConfig,
    lb: u32,
    occupancy: Vec<u32>,
    queues: Vec<FifoBuffer>,
    real: ChannelRealization,
}

struct Step {
    decision: Decision,
    outage: bool,
    delay: Option<u64>,
}

impl<'a> Chain<'a> {
    fn new(config: &'a SimConfig, lb: u32, ne: u64) -> Result<Self> {
        let n = config.n_relays();
        let fill = initial_buffer_fill(n, lb, ne)?;
        let occupancy = fill.occupancy().to_vec();
        let queues = occupancy
            .iter()
            .map(|&x| FifoBuffer::with_packets(x, 0))
            .collect();
        Ok(Self {
            config,
            lb,
            occupancy,
            queues,
            real: ChannelRealization::zeros(n),
        })
    }

    fn step(&mut self, rng: &mut RandomStream, interval: u64) -> Step {
        sample_into(&self.config.budget, rng, &mut self.real);
        let decision = match self.config.policy {
            Scheme::Hrs => select_hrs_unchecked(&self.real, &self.occupancy, self.lb),
            _ => Decision::brs(select_brs(&self.real)),
        };
        let (rx, tx) = (decision.receive, decision.transmit);
        let threshold = self.config.rate.threshold();
        let outage = is_outage(self.real.snr_sr[rx].min(self.real.snr_rd[tx]), threshold);

        let (receive, send) = match self.config.buffer_mode {
            BufferMode::AnalysisMatched => (true, true),
            BufferMode::OutageAware => {
                let send_ok = self.real.snr_rd[tx] > threshold;
                let recv_ok = self.real.snr_sr[rx] > threshold;
                // a full relay may only take a packet it forwards in the same interval
                let room = self.occupancy[rx] < self.lb - 1 || (rx == tx && send_ok);
                (recv_ok && room, send_ok)
            }
        };
        if receive {
            self.queues[rx].enqueue(interval);
            self.occupancy[rx] += 1;
        }
        let mut delay = None;
        if send && self.occupancy[tx] > 0 {
            delay = self.queues[tx].dequeue(interval);
            self.occupancy[tx] -= 1;
        }
        debug_assert!(self.occupancy.iter().all(|&x| x < self.lb));
        Step {
            decision,
            outage,
            delay,
        }
    }
}

fn run_chain(config: &SimConfig, lb: u32, ne: u64, track_delay: bool) -> Result<SimReport> {
    let n = config.n_relays();
    let mut chain = Chain::new(config, lb, ne)?;
    let burn_in = if config.policy == Scheme::Hrs {
        config.resolved_burn_in(lb)
    } else {
        0
    };
    let mut rng = burn_in_stream(config);
    for t in 0..burn_in {
        chain.step(&mut rng, t);
    }

    let track_states = config.record_states
        && config.policy == Scheme::Hrs
        && config.buffer_mode == BufferMode::AnalysisMatched;
    let space = if track_states {
        Some(crate::markov::enumerate_states(n, lb, ne)?)
    } else {
        None
    };
    let lookup = |space: &StateSpace, occ: &[u32]| {
        space.index_of(occ).ok_or_else(|| {
            Error::Internal(format!(
                "visited state {occ:?} outside the enumerated space"
            ))
        })
    };
    let stride = default_burn_in(n, lb).max(1);
    let mut counts = vec![0u64; space.as_ref().map_or(0, |s| s.len())];
    let mut thinned = counts.clone();
    let mut current = match &space {
        Some(s) => Some(lookup(s, &chain.occupancy)?),
        None => None,
    };

    let t_total = config.trials;
    let batches = BATCHES.min(t_total);
    let batch_len = t_total / batches;
    let mut outage_batches = vec![0u64; batches as usize];
    let mut brs_batches = vec![0u64; batches as usize];
    let (mut outages, mut brs, mut delivered, mut delay_sum) = (0u64, 0u64, 0u64, 0u128);

    let mut rng = measurement_stream(config);
    for t in 0..t_total {
        if let Some(idx) = current {
            counts[idx] += 1;
            if t % stride == 0 {
                thinned[idx] += 1;
            }
        }
        let step = chain.step(&mut rng, burn_in + t);
        let batch = (t / batch_len.max(1)).min(batches - 1) as usize;
        if step.outage {
            outages += 1;
            if t < batches * batch_len {
                outage_batches[batch] += 1;
            }
        }
        if step.decision.mode == Mode::Brs {
            brs += 1;
            if t < batches * batch_len {
                brs_batches[batch] += 1;
            }
        }
        if let Some(d) = step.delay {
            delivered += 1;
            delay_sum += u128::from(d);
        }
        if let Some(s) = &space {
            // only a move between two distinct relays changes the state
            if step.decision.receive != step.decision.transmit {
                current = Some(lookup(s, &chain.occupancy)?);
            }
        }
    }

    let mut report = SimReport::base(config, outages);
    report.stderr_batch = batch_stderr(&outage_batches, batch_len);
    if config.policy == Scheme::Hrs {
        report.brs_count = Some(brs);
        report.empirical_p_brs = Some(brs as f64 / t_total as f64);
        report.p_brs_stderr_batch = batch_stderr(&brs_batches, batch_len);
    }
    if let Some(s) = space {
        report.state_histogram = Some(StateHistogram {
            states: s.states().to_vec(),
            counts,
            thinned_counts: thinned,
            stride,
        });
    }
    if track_delay {
        report.delivered_packets = Some(delivered);
        report.average_delay = Some(if delivered == 0 {
            0.0
        } else {
            delay_sum as f64 / delivered as f64
        });
    }
    Ok(report)
}
