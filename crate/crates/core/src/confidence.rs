//! Confidence processes for cumulative arrival rates.
//!
//! Three kinds of sets, all derived from the log mixture martingale
//! `ln M(n, L; φ)` of [`crate::stats`]:
//!
//! * the single-arm set `{L ≥ 0 : M(N(t), L; φ) ≤ 1/α}`,
//! * its two-arm analogue, the joint set
//!   `{(L^A, L^B) : M(N^A, L^A; φ)·M(N^B, L^B; φ) ≤ 1/α}`, projected onto
//!   either coordinate, and
//! * the projection of the joint set onto the difference `L^B − L^A`.
//!
//! Each statistic is convex with a known minimizer, so every set is an
//! interval and every endpoint is a root of a univariate convex function:
//! bracket by doubling away from the minimizer, then polish with Brent's
//! method. Projections fix the free coordinate at its own profile optimum —
//! the other arm's count for the per-arm intervals, and for the difference a
//! closed-form stationary point `h(w)` of the joint statistic along lines of
//! constant difference (clamped to the admissible quadrant).

use crate::root::{self, RootError};
use crate::stats::{log_mixture_m_raw, MixtureParams};
use crate::Arm;
use thiserror::Error;

/// Residual tolerance, in log space, for every interval endpoint.
pub const ENDPOINT_LOG_TOL: f64 = 1e-9;
/// Iteration budget for bracketing and for Brent polishing.
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("confidence set is empty: statistic minimum {min} exceeds threshold {threshold}")]
    EmptyInterval { min: f64, threshold: f64 },
    #[error("endpoint residual {residual} exceeds {ENDPOINT_LOG_TOL} at x = {x}")]
    ResidualTooLarge { x: f64, residual: f64 },
    #[error("failed to bracket an endpoint after {MAX_ITER} doublings")]
    BracketFailure,
    #[error(transparent)]
    Root(#[from] RootError),
}

/// A closed interval `[lower, upper]`.
///
/// Per-arm intervals live in `[0, ∞)`; difference intervals may extend below
/// zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(
            lower <= upper,
            "interval endpoints out of order: [{lower}, {upper}]"
        );
        Self { lower, upper }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

/// Inputs of a two-arm confidence query: the counts observed so far, the
/// mixture precision and the error level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointQuery {
    n_a: u64,
    n_b: u64,
    params: MixtureParams,
    alpha: f64,
}

impl JointQuery {
    pub fn new(
        n_a: u64,
        n_b: u64,
        params: MixtureParams,
        alpha: f64,
    ) -> Result<Self, ConfidenceError> {
        check_alpha(alpha)?;
        Ok(Self {
            n_a,
            n_b,
            params,
            alpha,
        })
    }

    pub fn n_a(&self) -> u64 {
        self.n_a
    }

    pub fn n_b(&self) -> u64 {
        self.n_b
    }

    pub fn params(&self) -> MixtureParams {
        self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ln(1/α)`, the log-space threshold all member points stay below.
    fn log_threshold(&self) -> f64 {
        -self.alpha.ln()
    }
}

fn check_alpha(alpha: f64) -> Result<(), ConfidenceError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ConfidenceError::AlphaOutOfRange(alpha))
    }
}

/// The single-arm confidence set `{L ≥ 0 : ln M(n, L; φ) ≤ ln(1/α)}`.
///
/// The statistic is convex in `L` with minimum at `L = n`, so the set is an
/// interval around the count. The lower endpoint is exactly 0 whenever `L = 0`
/// already satisfies the inequality; each root endpoint satisfies its defining
/// equation to within [`ENDPOINT_LOG_TOL`] in log space.
pub fn univariate_interval(
    n: u64,
    params: MixtureParams,
    alpha: f64,
) -> Result<Interval, ConfidenceError> {
    check_alpha(alpha)?;
    let phi = params.phi();
    let n_f = n as f64;
    let stat = move |l: f64| log_mixture_m_raw(n_f, l, phi);
    convex_sublevel_interval(stat, n_f, -alpha.ln(), Domain::Nonnegative, step_hint(phi, n_f))
}

/// Membership test for the joint set:
/// `ln M(n_a, l_a; φ) + ln M(n_b, l_b; φ) ≤ ln(1/α)`.
///
/// Points outside the nonnegative quadrant are never members.
pub fn joint_membership(q: &JointQuery, l_a: f64, l_b: f64) -> bool {
    if l_a < 0.0 || l_b < 0.0 || !l_a.is_finite() || !l_b.is_finite() {
        return false;
    }
    let phi = q.params.phi();
    log_mixture_m_raw(q.n_a as f64, l_a, phi) + log_mixture_m_raw(q.n_b as f64, l_b, phi)
        <= q.log_threshold()
}

/// Projection of the joint set onto one arm's coordinate:
/// `{y : (x, y) in the joint set for some x ≥ 0}`.
///
/// The free coordinate contributes least at its own count, where its factor
/// attains the global minimum, so the projection is the single-arm problem
/// with the threshold raised by that minimum. Intervals for both arms (and
/// the difference) computed from one query are simultaneously valid.
pub fn arm_interval(q: &JointQuery, arm: Arm) -> Result<Interval, ConfidenceError> {
    let phi = q.params.phi();
    let (n_self, n_other) = match arm {
        Arm::A => (q.n_a, q.n_b),
        Arm::B => (q.n_b, q.n_a),
    };
    let n_f = n_self as f64;
    let other_min = log_mixture_m_raw(n_other as f64, n_other as f64, phi);
    let threshold = q.log_threshold() - other_min;
    let stat = move |l: f64| log_mixture_m_raw(n_f, l, phi);
    convex_sublevel_interval(stat, n_f, threshold, Domain::Nonnegative, step_hint(phi, n_f))
}

/// Projection of the joint set onto the difference `w = L^B − L^A`:
/// `{w : (x, y) in the joint set with y − x = w for some admissible (x, y)}`.
///
/// Along a line of constant difference the joint statistic, written in the
/// rotated coordinates `(w, v) = (y − x, y + x)`, is convex in `v` with the
/// closed-form stationary point
///
/// ```text
/// h(w) = (n_a + n_b)/2 − φ + sqrt(a + b)
/// a = n_a²/4 + n_a n_b/2 + n_a φ + n_a w
/// b = n_b²/4 + n_b φ − n_b w + φ² + w²
/// ```
///
/// The admissible region requires `v ≥ |w|` (both coordinates nonnegative),
/// so the profile minimum is taken at `max(h(w), |w|)`. The endpoints are the
/// two roots of that profile minus `ln(1/α)`; the interval may extend below
/// zero.
pub fn difference_interval(q: &JointQuery) -> Result<Interval, ConfidenceError> {
    let phi = q.params.phi();
    let n_a = q.n_a as f64;
    let n_b = q.n_b as f64;
    let stat = move |w: f64| reduced_difference_stat(n_a, n_b, phi, w);
    // The profile minimum sits at w = n_b − n_a, where v = n_a + n_b and both
    // factors are at their global minima.
    convex_sublevel_interval(
        stat,
        n_b - n_a,
        q.log_threshold(),
        Domain::Unbounded,
        step_hint(phi, n_a + n_b),
    )
}

/// Smallest error level at which the equality test rejects by now:
/// `min(1, 1/E)` for the equality e-process `E`.
pub fn sequential_p(n_a: u64, n_b: u64, params: MixtureParams) -> f64 {
    (-crate::stats::log_e_process(n_a, n_b, params)).exp().min(1.0)
}

/// Joint statistic along the constant-difference line at offset `w`,
/// minimized over the admissible `v`.
fn reduced_difference_stat(n_a: f64, n_b: f64, phi: f64, w: f64) -> f64 {
    let s = n_a + n_b;
    // Radicand of h(w); algebraically positive for φ > 0, the clamp only
    // guards rounding.
    let radicand =
        (0.25 * s * s + phi * s + phi * phi + w * w + w * (n_a - n_b)).max(0.0);
    let h = 0.5 * s - phi + radicand.sqrt();
    let v = h.max(w.abs());
    let x = 0.5 * (v - w);
    let y = 0.5 * (v + w);
    log_mixture_m_raw(n_a, x.max(0.0), phi) + log_mixture_m_raw(n_b, y.max(0.0), phi)
}

enum Domain {
    /// The variable lives on `[0, ∞)`; a satisfying origin clamps the lower
    /// endpoint to exactly 0.
    Nonnegative,
    /// The variable ranges over all reals.
    Unbounded,
}

fn step_hint(phi: f64, n: f64) -> f64 {
    1.0 + (phi + n).sqrt()
}

/// Interval `{x : f(x) ≤ threshold}` for a convex `f` growing without bound
/// on both sides, whose minimum sits at `minimizer`.
fn convex_sublevel_interval<F>(
    f: F,
    minimizer: f64,
    threshold: f64,
    domain: Domain,
    step: f64,
) -> Result<Interval, ConfidenceError>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| f(x) - threshold;
    let at_min = g(minimizer);
    if at_min > 0.0 {
        return Err(ConfidenceError::EmptyInterval {
            min: f(minimizer),
            threshold,
        });
    }

    let upper = {
        let b = bracket_outward(&g, minimizer, step)?;
        polish(&g, minimizer, b)?
    };

    let lower = match domain {
        Domain::Nonnegative => {
            let floor = 0.0;
            if minimizer <= floor {
                floor
            } else if g(floor) <= 0.0 {
                // The origin already satisfies the inequality: the parameter
                // space is ℝ≥0, so the endpoint is exactly 0.
                floor
            } else {
                polish(&g, floor, minimizer)?
            }
        }
        Domain::Unbounded => {
            let a = bracket_outward(&|x| g(2.0 * minimizer - x), minimizer, step)?;
            polish(&g, 2.0 * minimizer - a, minimizer)?
        }
    };

    Ok(Interval::new(lower, upper))
}

/// Walk right from `start` in doubling steps until `g` turns positive.
fn bracket_outward<G: Fn(f64) -> f64>(
    g: &G,
    start: f64,
    step: f64,
) -> Result<f64, ConfidenceError> {
    let mut step = step;
    let mut x = start + step;
    for _ in 0..MAX_ITER {
        if g(x) > 0.0 {
            return Ok(x);
        }
        step *= 2.0;
        x = start + step;
    }
    Err(ConfidenceError::BracketFailure)
}

/// Brent between a nonpositive and a positive end, then verify the residual.
fn polish<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> Result<f64, ConfidenceError> {
    let (mut a, mut b) = (lo, hi);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let xtol = 1e-13 * (1.0 + a.abs().max(b.abs()));
    let x = root::brent(g, a, b, xtol, MAX_ITER)?;
    let residual = g(x).abs();
    if residual > ENDPOINT_LOG_TOL {
        return Err(ConfidenceError::ResidualTooLarge { x, residual });
    }
    Ok(x)
}
