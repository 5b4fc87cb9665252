//! Sum capacity of interference and multiple-access channels built from
//! non-local games.
//!
//! The crate is organized bottom-up:
//!
//! - [`games`]: K-party games with dense winning tensors (CHSH, magic square,
//!   K-party parity, user-defined).
//! - [`correlations`]: cooperation boxes `P(a|q)`, no-signaling checks,
//!   winning probabilities and the exact classical optimum.
//! - [`quantum`]: density matrices, POVMs, the Born rule and the standard
//!   winning quantum strategies.
//! - [`channels`]: game channels, weak symmetry and the closed-form sum
//!   capacity achievable with a winning cooperation box.
//! - [`capacity`]: Blahut-Arimoto and its multi-user product-input variant,
//!   cooperation gaps and `eta` sweeps.
//! - [`simulate`]: Monte Carlo runs of the cooperative coding scheme.
//! - [`cli`]: the `gamecap` command-line front end.

pub mod capacity;
pub mod channels;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod games;
pub mod index;
pub mod info;
pub mod quantum;
pub mod rng;
pub mod simulate;

pub use error::{Error, GameChannelClause, Result};
