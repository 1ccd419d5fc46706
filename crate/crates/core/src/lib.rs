//! Buffer-aided relay selection for two-hop decode-and-forward networks.
//!
//! The crate covers three relay selection policies:
//!
//! * **BRS**, best relay selection: one relay maximizing the bottleneck
//!   `min(γ_g, γ_h)` receives and forwards.
//! * **MMRS**, max-max relay selection: the best source-relay link receives,
//!   the best relay-destination link transmits (idealized infinite buffers).
//! * **HRS**, hybrid relay selection: MMRS unless the receiving buffer is full
//!   or the transmitting buffer is empty, in which case BRS.
//!
//! Modules:
//!
//! * [`channel`]: Rayleigh block-fading link budgets, realizations, the
//!   counter-addressable random stream, and rate/threshold/dB conversions.
//! * [`selection`]: pure decision functions for the three policies.
//! * [`markov`]: exact buffer-state Markov chain analysis under HRS.
//! * [`outage`]: closed-form and asymptotic outage probabilities and gains.
//! * [`sim`]: the seeded Monte Carlo engine.
//! * [`cli`]: the `bufrelay` command-line front end.

pub mod channel;
pub mod cli;
mod error;
pub mod markov;
pub mod outage;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
