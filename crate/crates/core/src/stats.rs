//! Log-space evaluation of the likelihood-ratio, martingale, e-process and
//! growth-rate statistics.
//!
//! The raw statistics contain factors like `e^Λ(t)` and `Γ(φ + n)` that leave
//! the range of `f64` after a few hundred events, so everything here is
//! computed and returned on the natural-log scale. Exponentiate only at
//! presentation boundaries (p-values, report rows).
//!
//! All functions are pure and free of shared state; they may be called from
//! any number of threads concurrently.

use thiserror::Error;

/// An argument left the domain of a statistic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("at least one of the two rates must be positive")]
    BothRatesZero,
    #[error("log-scale value must not be NaN")]
    NaNLogValue,
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, StatsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(StatsError::NotPositive { name, value })
    }
}

fn require_nonnegative(name: &'static str, value: f64) -> Result<f64, StatsError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(StatsError::Negative { name, value })
    }
}

/// Precision `φ` of the log-gamma mixing distribution placed over the
/// proportional-hazards exponent.
///
/// The mixture has mean 1 and variance `1/φ`, so it is centered on the null
/// and larger `φ` concentrates the test on alternatives close to it. The
/// default is `φ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    phi: f64,
}

impl MixtureParams {
    pub fn new(phi: f64) -> Result<Self, StatsError> {
        Ok(Self {
            phi: require_positive("phi", phi)?,
        })
    }

    pub fn phi(self) -> f64 {
        self.phi
    }
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self { phi: 1.0 }
    }
}

/// Long-run average rates of the two arms, events per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    lambda_a: f64,
    lambda_b: f64,
}

impl RatePair {
    pub fn new(lambda_a: f64, lambda_b: f64) -> Result<Self, StatsError> {
        Ok(Self {
            lambda_a: require_nonnegative("lambda_a", lambda_a)?,
            lambda_b: require_nonnegative("lambda_b", lambda_b)?,
        })
    }

    pub fn lambda_a(self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_b(self) -> f64 {
        self.lambda_b
    }

    /// The midpoint rate, which is the null rate both arms share under the
    /// equality hypothesis.
    pub fn mean(self) -> f64 {
        0.5 * (self.lambda_a + self.lambda_b)
    }
}

/// A nonnegative statistic carried on the natural-log scale.
///
/// `NEG_INFINITY` encodes an exact zero. Construction rejects NaN, so
/// comparisons between `LogValue`s are total in practice.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    /// The statistic 0 (log scale `-inf`).
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    /// The statistic 1 (log scale `0`).
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_log(log_v: f64) -> Result<Self, StatsError> {
        if log_v.is_nan() {
            Err(StatsError::NaNLogValue)
        } else {
            Ok(Self(log_v))
        }
    }

    pub fn from_value(v: f64) -> Result<Self, StatsError> {
        require_nonnegative("value", v)?;
        Ok(Self(v.ln()))
    }

    /// Natural log of the represented value.
    pub fn log(self) -> f64 {
        self.0
    }

    /// The represented value, `exp(log)`. May overflow to `+inf`.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn max(self, other: LogValue) -> LogValue {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

// Lanczos approximation with g = 7 and 9 coefficients (Godfrey's set), which
// is accurate to a few ulps in double precision over the whole positive axis.
// Coefficients are kept at published precision.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
#[allow(clippy::excessive_precision)]
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// `ln Γ(x)` for validated `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    // Push small arguments into the well-conditioned region with
    // ln Γ(x) = ln Γ(x + 1) − ln x.
    let mut shift = 0.0;
    let mut x = x;
    while x < 0.5 {
        shift -= x.ln();
        x += 1.0;
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    shift + LN_SQRT_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// Natural log of the gamma function.
///
/// Accurate to better than `1e-12` absolutely for moderate arguments and to a
/// few ulps relatively over `[1e-6, 1e8]`.
pub fn log_gamma_fn(x: f64) -> Result<f64, StatsError> {
    require_positive("x", x)?;
    Ok(ln_gamma(x))
}

/// Log likelihood ratio of the proportional-hazards alternative
/// `λ₁ = e^θ λ₀` against the null `λ₀`: `θ·n − (e^θ − 1)·Λ₀`.
///
/// The data enter only through the event count `n` and the null only through
/// its cumulative rate `Λ₀` at the current time.
pub fn log_simple_lr(n: u64, big_lambda0: f64, theta: f64) -> Result<f64, StatsError> {
    let big_lambda0 = require_nonnegative("big_lambda0", big_lambda0)?;
    if !theta.is_finite() {
        return Err(StatsError::NotFinite {
            name: "theta",
            value: theta,
        });
    }
    Ok(theta * n as f64 - theta.exp_m1() * big_lambda0)
}

/// Unchecked log-space mixture martingale; callers guarantee `n ≥ 0`,
/// `big_l ≥ 0` and `phi > 0`. This is the hot path shared by the confidence
/// and monitor machinery.
pub(crate) fn log_mixture_m_raw(n: f64, big_l: f64, phi: f64) -> f64 {
    debug_assert!(n >= 0.0 && big_l >= 0.0 && phi > 0.0);
    phi * phi.ln() - (phi + n) * (phi + big_l).ln() + ln_gamma(phi + n) - ln_gamma(phi) + big_l
}

/// `ln M(n, L; φ)` where `M(n, L; φ) = φ^φ Γ(φ+n) e^L / ((φ+L)^(φ+n) Γ(φ))`
/// is the log-gamma mixture of proportional-hazards likelihood ratios.
///
/// Against a null measure with `Λ₀(t) = L` and `N(t) = n` observed events,
/// `M` is a nonnegative supermartingale with initial value 1; it stays finite
/// here in log space for counts and measures up to `1e7` and beyond.
/// As a function of `L` it is convex with its minimum at `L = n`.
pub fn log_mixture_m(n: u64, big_l: f64, params: MixtureParams) -> Result<f64, StatsError> {
    let big_l = require_nonnegative("big_l", big_l)?;
    Ok(log_mixture_m_raw(n as f64, big_l, params.phi()))
}

/// Log e-process for equality of the two arms' rates:
/// `ln E = ln M(n_a, Λ̂; φ) + ln M(n_b, Λ̂; φ)` with `Λ̂ = (n_a + n_b)/2`.
///
/// `Λ̂` is where the product `M(n_a, L; φ)·M(n_b, L; φ)` attains its minimum
/// over `L ≥ 0`, so `E` is the infimum of the joint statistic along the
/// diagonal of equal cumulative rates: the last point of the diagonal to
/// leave the shrinking confidence set.
pub fn log_e_process(n_a: u64, n_b: u64, params: MixtureParams) -> f64 {
    let phi = params.phi();
    let lambda_hat = 0.5 * (n_a + n_b) as f64;
    log_mixture_m_raw(n_a as f64, lambda_hat, phi) + log_mixture_m_raw(n_b as f64, lambda_hat, phi)
}

/// Log of the beta-binomial e-process for rate equality,
/// `Ẽ = B(n_a + b, n_b + a) / B(a, b) · 2^(n_a + n_b)`,
/// built from the observation that under equality each successive event comes
/// from arm B with probability 1/2.
///
/// `a` and `b` are the parameters of the conjugate beta mixture (they are not
/// an error level). The value is symmetric under swapping `(n_a, b)` with
/// `(n_b, a)`.
pub fn log_bernoulli_e(n_a: u64, n_b: u64, a: f64, b: f64) -> Result<f64, StatsError> {
    let a = require_positive("a", a)?;
    let b = require_positive("b", b)?;
    let ln_beta = |x: f64, y: f64| ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y);
    Ok(ln_beta(n_a as f64 + b, n_b as f64 + a) - ln_beta(a, b)
        + (n_a + n_b) as f64 * std::f64::consts::LN_2)
}

/// Log of the Gaussian-mixture e-process applied to the difference in counts:
/// `½ ln(φ/(φ+t)) + ½ · t/(t+φ) · Z²` with `Z = (n_b − n_a)/√(n_b + n_a)`.
///
/// `Z` is defined as 0 when no events have arrived (the 0/0 limit).
pub fn log_asymptotic_e(n_a: u64, n_b: u64, t: f64, params: MixtureParams) -> Result<f64, StatsError> {
    let t = require_positive("t", t)?;
    let phi = params.phi();
    let total = (n_a + n_b) as f64;
    let z_sq = if total == 0.0 {
        0.0
    } else {
        let diff = n_b as f64 - n_a as f64;
        diff * diff / total
    };
    Ok(0.5 * (phi / (phi + t)).ln() + 0.5 * t / (t + phi) * z_sq)
}

/// Kullback-Leibler divergence of Poisson(`lambda1`) from Poisson(`lambda0`):
/// `λ̄ ln(λ̄/λ̄₀) − (λ̄ − λ̄₀)`, with the `λ̄ ln λ̄ → 0` limit at `λ̄ = 0`.
///
/// Nonnegative, and zero only at `lambda1 == lambda0`.
pub fn poisson_kl(lambda1: f64, lambda0: f64) -> Result<f64, StatsError> {
    let lambda1 = require_nonnegative("lambda1", lambda1)?;
    let lambda0 = require_positive("lambda0", lambda0)?;
    if lambda1 == 0.0 {
        return Ok(lambda0);
    }
    Ok(lambda1 * (lambda1 / lambda0).ln() - (lambda1 - lambda0))
}

/// Almost-sure growth rate of `ln E(t)/t` under arms with average rates
/// `(λ̄^A, λ̄^B)`: the sum of the Poisson KL divergences of each arm's rate
/// from the midpoint rate `λ̄^M = (λ̄^A + λ̄^B)/2`.
///
/// Zero exactly when the rates are equal and positive otherwise, which is why
/// the equality test has power one whenever the average rates differ.
pub fn growth_rate_equality(rates: RatePair) -> Result<f64, StatsError> {
    let mid = rates.mean();
    if mid == 0.0 {
        return Err(StatsError::BothRatesZero);
    }
    // Single point of truth: both terms go through poisson_kl, which owns the
    // λ̄ ln λ̄ → 0 limit.
    Ok(poisson_kl(rates.lambda_b(), mid)? + poisson_kl(rates.lambda_a(), mid)?)
}

/// Growth rate of the Gaussian-mixture e-process,
/// `½ (λ̄^B − λ̄^A)² / (λ̄^B + λ̄^A)`.
///
/// Never exceeds [`growth_rate_equality`]: collapsing two streams to the
/// single difference sequence costs detection speed.
pub fn growth_rate_gaussian(rates: RatePair) -> Result<f64, StatsError> {
    let sum = rates.lambda_a() + rates.lambda_b();
    if sum == 0.0 {
        return Err(StatsError::BothRatesZero);
    }
    let diff = rates.lambda_b() - rates.lambda_a();
    Ok(0.5 * diff * diff / sum)
}
