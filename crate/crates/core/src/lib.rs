//! Anytime-valid sequential inference for Poisson arrival streams.
//!
//! `ratewatch` watches one or two streams of event timestamps and answers, at
//! any moment and as often as you like, two questions:
//!
//! * What is the cumulative arrival rate `Λ(t) = ∫₀ᵗ λ(s) ds` of each stream,
//!   and of their difference? ([`confidence`] produces interval estimates that
//!   are simultaneously valid over all of continuous time with probability
//!   `1 − α`.)
//! * Do the two streams have the same rate? ([`monitor`] maintains an
//!   e-process for the equality hypothesis; rejecting when it first exceeds
//!   `1/α` keeps the time-uniform Type-I error at `α` no matter when or how
//!   often you look.)
//!
//! The statistical engine is a conjugate mixture of proportional-hazards
//! likelihood ratios with the closed form
//!
//! ```text
//! M(n, L; φ) = φ^φ / (φ + L)^(φ+n) · Γ(φ+n) / Γ(φ) · e^L
//! ```
//!
//! evaluated entirely in log space ([`stats`]). Confidence sets are sublevel
//! sets of convex functions built from `M`, so every interval endpoint reduces
//! to univariate root-finding ([`confidence`]). [`simulate`] generates
//! inhomogeneous Poisson realizations by thinning so that every statistical
//! guarantee can be verified empirically; the `ratewatch` binary ([`cli`])
//! ties the pieces together over NDJSON/CSV streams.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub mod cli;
pub mod confidence;
pub mod monitor;
pub mod root;
pub mod simulate;
pub mod stats;

pub use confidence::{Interval, JointQuery};
pub use monitor::{Monitor, MonitorReport, SingleArmMonitor};
pub use simulate::{IntensitySpec, Realization};
pub use stats::MixtureParams;

/// Which of the two arrival streams an event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::A => write!(f, "A"),
            Arm::B => write!(f, "B"),
        }
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Arm::A),
            "B" | "b" => Ok(Arm::B),
            other => Err(format!("expected arm \"A\" or \"B\", got {other:?}")),
        }
    }
}
