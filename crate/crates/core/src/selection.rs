//! Relay selection rules.
//!
//! Relay indices are zero-based throughout the API. Ties are broken toward
//! the lowest index, which makes every selector a total function.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::{Error, Result};

/// A relay selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Brs,
    Mmrs,
    Hrs,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Brs, Scheme::Mmrs, Scheme::Hrs];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Brs => "brs",
            Scheme::Mmrs => "mmrs",
            Scheme::Hrs => "hrs",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brs" => Ok(Scheme::Brs),
            "mmrs" => Ok(Scheme::Mmrs),
            "hrs" => Ok(Scheme::Hrs),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Which rule produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Brs,
    Mmrs,
}

/// Relays selected for one transmission interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub receive: usize,
    pub transmit: usize,
    pub mode: Mode,
}

impl Decision {
    pub fn brs(relay: usize) -> Self {
        Self {
            receive: relay,
            transmit: relay,
            mode: Mode::Brs,
        }
    }

    pub fn mmrs(receive: usize, transmit: usize) -> Self {
        Self {
            receive,
            transmit,
            mode: Mode::Mmrs,
        }
    }
}

/// Occupancy of every relay buffer, counted in full elements.
///
/// A buffer of `capacity` elements holds at most `capacity - 1` packets
/// between intervals; the last element stays free so the relay can always
/// accept a packet when chosen by BRS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BufferState {
    occupancy: Vec<u32>,
    capacity: u32,
}

impl BufferState {
    pub fn new(occupancy: Vec<u32>, capacity: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter(
                "buffer capacity must be at least 1".into(),
            ));
        }
        if occupancy.is_empty() {
            return Err(Error::InvalidParameter(
                "buffer state needs at least one relay".into(),
            ));
        }
        if let Some(&x) = occupancy.iter().find(|&&x| x > capacity - 1) {
            return Err(Error::InvalidParameter(format!(
                "occupancy {x} exceeds usable capacity {}",
                capacity - 1
            )));
        }
        Ok(Self {
            occupancy,
            capacity,
        })
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn n_relays(&self) -> usize {
        self.occupancy.len()
    }

    pub fn total(&self) -> u64 {
        self.occupancy.iter().map(|&x| u64::from(x)).sum()
    }

    pub fn is_full(&self, relay: usize) -> bool {
        self.occupancy[relay] == self.capacity - 1
    }

    pub fn is_empty(&self, relay: usize) -> bool {
        self.occupancy[relay] == 0
    }
}

/// The HRS fallback condition for a receive/transmit pair: the receiving
/// buffer is full or the transmitting buffer is empty.
pub fn brs_trigger(occupancy: &[u32], capacity: u32, receive: usize, transmit: usize) -> bool {
    occupancy[receive] == capacity - 1 || occupancy[transmit] == 0
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Relay with the best bottleneck `min(γ_g, γ_h)`.
pub fn select_brs(real: &ChannelRealization) -> usize {
    argmax(real.snr_sr.iter().zip(&real.snr_rd).map(|(g, h)| g.min(*h)))
}

/// `(receive, transmit)`: best source-relay link and best relay-destination link.
pub fn select_mmrs(real: &ChannelRealization) -> (usize, usize) {
    (
        argmax(real.snr_sr.iter().copied()),
        argmax(real.snr_rd.iter().copied()),
    )
}

/// Hybrid rule: MMRS unless its receiving buffer is full or its transmitting
/// buffer is empty, in which case BRS.
pub fn select_hrs(real: &ChannelRealization, buffers: &BufferState) -> Result<Decision> {
    if real.n_relays() != buffers.n_relays() {
        return Err(Error::DimensionMismatch {
            expected: buffers.n_relays(),
            actual: real.n_relays(),
        });
    }
    Ok(select_hrs_unchecked(
        real,
        buffers.occupancy(),
        buffers.capacity(),
    ))
}

pub(crate) fn select_hrs_unchecked(
    real: &ChannelRealization,
    occupancy: &[u32],
    capacity: u32,
) -> Decision {
    let (rx, tx) = select_mmrs(real);
    if brs_trigger(occupancy, capacity, rx, tx) {
        Decision::brs(select_brs(real))
    } else {
        Decision::mmrs(rx, tx)
    }
}

/// End-to-end SNR of a decode-and-forward decision.
pub fn end_to_end_snr(real: &ChannelRealization, d: &Decision) -> Result<f64> {
    let n = real.n_relays();
    for idx in [d.receive, d.transmit] {
        if idx >= n {
            return Err(Error::InvalidParameter(format!(
                "relay index {idx} out of range for {n} relays"
            )));
        }
    }
    Ok(real.snr_sr[d.receive].min(real.snr_rd[d.transmit]))
}

/// Outage iff the end-to-end SNR does not exceed the threshold.
pub fn is_outage(snr: f64, threshold: f64) -> bool {
    snr <= threshold
}
