//! Inhomogeneous Poisson generation and intensity evaluation.
//!
//! Sampling uses Lewis–Shedler thinning: draw a homogeneous stream at a
//! dominating rate `λ_max` and keep each candidate time `s` independently
//! with probability `λ(s)/λ_max`. It needs nothing beyond a pointwise
//! intensity and a bound, and it is exact.
//!
//! Randomness comes from `ChaCha8`, a counter-based generator seeded from a
//! single `u64`, so realizations are bit-reproducible and replications can be
//! given independent streams by deriving per-replication seeds (the CLI uses
//! `seed ⊕ stream-index`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("{what} must be nonnegative and finite, got {value}")]
    NegativeValue { what: &'static str, value: f64 },
    #[error("{what} must be positive and finite, got {value}")]
    NonPositiveValue { what: &'static str, value: f64 },
    #[error("breakpoints must be strictly increasing, positive and finite")]
    BadBreakpoints,
    #[error("piecewise spec needs exactly one more rate than breakpoints: {rates} rates, {breakpoints} breakpoints")]
    PiecewiseShape { rates: usize, breakpoints: usize },
    #[error("time must be nonnegative and finite, got {0}")]
    BadTime(f64),
    #[error("quadrature did not converge to tolerance {tol} (worst panel error {err})")]
    Quadrature { tol: f64, err: f64 },
}

/// Symbolic description of an intensity function `λ(t)`, with evaluable
/// `λ(t)`, `Λ(t) = ∫₀ᵗ λ` and a finite bound `λ_max` on any bounded window.
///
/// Serialized as `{"kind": ..., ...}`, e.g.
/// `{"kind":"log_sinusoid","amplitude":3.0,"period":20.0}` for
/// `λ(t) = exp(3 sin(2πt/20))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensitySpec {
    Constant {
        rate: f64,
    },
    /// `λ(t) = exp(amplitude · sin(2π t / period))`.
    LogSinusoid {
        amplitude: f64,
        period: f64,
    },
    /// `rates[0]` on `[0, breakpoints[0])`, `rates[i]` on
    /// `[breakpoints[i-1], breakpoints[i])`, and the last rate beyond the
    /// final breakpoint.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        rates: Vec<f64>,
    },
    Scaled {
        base: Box<IntensitySpec>,
        factor: f64,
    },
}

/// Absolute tolerance for the adaptive quadrature behind [`IntensitySpec::cumulative`].
const QUADRATURE_TOL: f64 = 1e-10;

impl IntensitySpec {
    /// Check the structural invariants. Deserialized specs must pass here
    /// before being evaluated or sampled.
    pub fn validate(&self) -> Result<(), SimulateError> {
        match self {
            IntensitySpec::Constant { rate } => {
                nonnegative("rate", *rate)?;
            }
            IntensitySpec::LogSinusoid { amplitude, period } => {
                if !amplitude.is_finite() {
                    return Err(SimulateError::NegativeValue {
                        what: "amplitude",
                        value: *amplitude,
                    });
                }
                positive("period", *period)?;
            }
            IntensitySpec::PiecewiseConstant { breakpoints, rates } => {
                if rates.len() != breakpoints.len() + 1 {
                    return Err(SimulateError::PiecewiseShape {
                        rates: rates.len(),
                        breakpoints: breakpoints.len(),
                    });
                }
                let increasing = breakpoints
                    .windows(2)
                    .all(|w| w[0] < w[1]);
                let positive_finite = breakpoints.iter().all(|b| b.is_finite() && *b > 0.0);
                if !increasing || !positive_finite {
                    return Err(SimulateError::BadBreakpoints);
                }
                for r in rates {
                    nonnegative("rate", *r)?;
                }
            }
            IntensitySpec::Scaled { base, factor } => {
                nonnegative("factor", *factor)?;
                base.validate()?;
            }
        }
        Ok(())
    }

    /// `λ(t)`.
    pub fn intensity_at(&self, t: f64) -> Result<f64, SimulateError> {
        check_time(t)?;
        Ok(self.intensity_unchecked(t))
    }

    fn intensity_unchecked(&self, t: f64) -> f64 {
        match self {
            IntensitySpec::Constant { rate } => *rate,
            IntensitySpec::LogSinusoid { amplitude, period } => {
                (amplitude * (2.0 * std::f64::consts::PI * t / period).sin()).exp()
            }
            IntensitySpec::PiecewiseConstant { breakpoints, rates } => {
                let idx = breakpoints.partition_point(|b| *b <= t);
                rates[idx]
            }
            IntensitySpec::Scaled { base, factor } => factor * base.intensity_unchecked(t),
        }
    }

    /// `Λ(t) = ∫₀ᵗ λ(s) ds`, exact for the piecewise-closed-form variants and
    /// by adaptive quadrature (absolute tolerance `1e-10`) for the sinusoid.
    pub fn cumulative(&self, t: f64) -> Result<f64, SimulateError> {
        check_time(t)?;
        match self {
            IntensitySpec::Constant { rate } => Ok(rate * t),
            IntensitySpec::LogSinusoid { amplitude, period } => {
                let lambda = |s: f64| {
                    (amplitude * (2.0 * std::f64::consts::PI * s / period).sin()).exp()
                };
                // One period at a time keeps the adaptive panels well scaled
                // and makes Λ over whole periods exactly periodic.
                let full_periods = (t / period).floor();
                let remainder = t - full_periods * period;
                let mut total = 0.0;
                if full_periods > 0.0 {
                    total += full_periods * adaptive_simpson(&lambda, 0.0, *period, QUADRATURE_TOL)?;
                }
                if remainder > 0.0 {
                    total += adaptive_simpson(&lambda, 0.0, remainder, QUADRATURE_TOL)?;
                }
                Ok(total)
            }
            IntensitySpec::PiecewiseConstant { breakpoints, rates } => {
                let mut total = 0.0;
                let mut prev = 0.0;
                for (b, r) in breakpoints.iter().zip(rates.iter()) {
                    if t <= *b {
                        return Ok(total + r * (t - prev));
                    }
                    total += r * (b - prev);
                    prev = *b;
                }
                Ok(total + rates[rates.len() - 1] * (t - prev))
            }
            IntensitySpec::Scaled { base, factor } => Ok(factor * base.cumulative(t)?),
        }
    }

    /// A bound on `λ` over any bounded window: exact for constants, `e^|c|`
    /// for the log-sinusoid, the largest rate for piecewise specs.
    pub fn max_intensity(&self) -> f64 {
        match self {
            IntensitySpec::Constant { rate } => *rate,
            IntensitySpec::LogSinusoid { amplitude, .. } => amplitude.abs().exp(),
            IntensitySpec::PiecewiseConstant { rates, .. } => {
                rates.iter().cloned().fold(0.0, f64::max)
            }
            IntensitySpec::Scaled { base, factor } => factor * base.max_intensity(),
        }
    }

    /// Draw one realization on `[0, horizon]` by thinning a homogeneous
    /// Poisson(`λ_max`) candidate stream. Deterministic given `seed`.
    pub fn sample(&self, horizon: f64, seed: u64) -> Result<Realization, SimulateError> {
        self.validate()?;
        positive("horizon", horizon)?;
        let lambda_max = self.max_intensity();
        let mut timestamps = Vec::new();
        if lambda_max > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = 0.0;
            loop {
                // Exponential(λ_max) gap; 1 − U keeps the argument in (0, 1].
                let u: f64 = rng.random();
                t -= (1.0 - u).ln() / lambda_max;
                if t > horizon {
                    break;
                }
                let accept: f64 = rng.random();
                if accept * lambda_max <= self.intensity_unchecked(t) {
                    timestamps.push(t);
                }
            }
        }
        Ok(Realization {
            timestamps,
            horizon,
        })
    }
}

fn nonnegative(what: &'static str, value: f64) -> Result<(), SimulateError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SimulateError::NegativeValue { what, value })
    }
}

fn positive(what: &'static str, value: f64) -> Result<(), SimulateError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SimulateError::NonPositiveValue { what, value })
    }
}

fn check_time(t: f64) -> Result<(), SimulateError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(SimulateError::BadTime(t))
    }
}

/// One arm's observed event times on `[0, horizon]`, sorted nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    timestamps: Vec<f64>,
    horizon: f64,
}

impl Realization {
    pub fn new(timestamps: Vec<f64>, horizon: f64) -> Result<Self, SimulateError> {
        positive("horizon", horizon)?;
        let sorted = timestamps.windows(2).all(|w| w[0] <= w[1]);
        let in_range = timestamps
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0 && *t <= horizon);
        if !sorted || !in_range {
            return Err(SimulateError::BadTime(
                timestamps
                    .iter()
                    .cloned()
                    .find(|t| !t.is_finite() || *t < 0.0 || *t > horizon)
                    .unwrap_or(f64::NAN),
            ));
        }
        Ok(Self {
            timestamps,
            horizon,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// The counting process `N(t)`: events with timestamp `≤ t`.
    pub fn count_at(&self, t: f64) -> u64 {
        self.timestamps.partition_point(|x| *x <= t) as u64
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. Errors out instead of silently returning a stale panel if the
/// recursion depth budget is exhausted.
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, SimulateError> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, SimulateError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err(SimulateError::Quadrature {
                tol,
                err: err.abs() / 15.0,
            });
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
