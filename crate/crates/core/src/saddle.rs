//! The saddle-point equation
//!
//! ```text
//! t = log u / (2√(2u)) − ρ/√(2u) + 1/(4u)
//! ```
//!
//! its largest root `u₀(t)`, the bootstrap expansion of that root, and the
//! curvature `M` of the exponent along the vertical contour through `u₀`.
//!
//! The right-hand side is strictly decreasing on `u > e^{2+2ρ}` (where the
//! curvature is positive) and tends to 0 as `u → ∞`, so on that branch there is
//! exactly one root for every `t` below `rhs(e^{2+2ρ})`. Any root to the left
//! of `e^{2+2ρ}` is smaller and has non-positive curvature. The solver therefore
//! brackets to the right of `e^{2+2ρ}` and reports [`HwError::NoSaddle`] when
//! `t` is at or above the branch maximum.
//!
//! Root finding is done in `s = log u` so that `t = 10⁻⁵⁰` (with `u₀ ≈ 10¹⁰⁴`)
//! stays well inside the f64 range.

use std::f64::consts::{LN_2, SQRT_2};

use crate::error::{HwError, Result};
use crate::specfun::HwParams;

const MAX_ITERATIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;
const BOOTSTRAP_BELOW: f64 = 0.05;

/// A root of the saddle-point equation together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub t: f64,
    pub u0: f64,
    /// `saddle_rhs(u0) − t`.
    pub residual: f64,
    pub iterations: usize,
    pub m_exact: f64,
}

/// `log u / (2√(2u)) − ρ/√(2u) + 1/(4u)`.
pub fn saddle_rhs(u: f64, params: &HwParams) -> f64 {
    let root = (2.0 * u).sqrt();
    u.ln() / (2.0 * root) - params.rho() / root + 0.25 / u
}

// The same function of s = log u.
fn rhs_log(s: f64, rho: f64) -> f64 {
    (s - 2.0 * rho) * (-0.5 * s).exp() / (2.0 * SQRT_2) + 0.25 * (-s).exp()
}

fn rhs_log_slope(s: f64, rho: f64) -> f64 {
    (2.0 + 2.0 * rho - s) * (-0.5 * s).exp() / (4.0 * SQRT_2) - 0.25 * (-s).exp()
}

/// `log` of the left end of the positive-curvature branch, `2 + 2ρ`.
pub fn branch_log_start(params: &HwParams) -> f64 {
    2.0 + 2.0 * params.rho()
}

/// Largest `t` for which [`solve_saddle`] has a root: the value of the
/// right-hand side at `u = e^{2+2ρ}`.
pub fn saddle_threshold(params: &HwParams) -> f64 {
    rhs_log(branch_log_start(params), params.rho())
}

/// Largest root of `saddle_rhs(u) = t`.
pub fn solve_saddle(t: f64, params: &HwParams) -> Result<SaddleSolution> {
    if !(t.is_finite() && t > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    let rho = params.rho();
    let s_start = branch_log_start(params);
    let t_max = rhs_log(s_start, rho);
    if t >= t_max {
        return Err(HwError::NoSaddle { t, t_max });
    }

    let guess = if t < BOOTSTRAP_BELOW {
        log_u0_bootstrap(t, params).ok().filter(|s| *s > s_start)
    } else {
        None
    };

    // Bracket [lo, hi] with g(lo) > 0 > g(hi), g(s) = rhs(e^s) − t. The upper
    // end is doubled in u (s += ln 2) until it crosses.
    let g = |s: f64| rhs_log(s, rho) - t;
    let mut lo = s_start;
    let mut hi = guess.unwrap_or(s_start).max(s_start + LN_2);
    let mut doublings = 0;
    while g(hi) >= 0.0 {
        lo = hi;
        hi += LN_2;
        doublings += 1;
        if doublings > 5000 || !hi.is_finite() {
            return Err(HwError::NonConvergence {
                what: "saddle bracket expansion",
                iterations: doublings,
            });
        }
    }

    let mut s = match guess {
        Some(s) if s > lo && s < hi => s,
        _ => 0.5 * (lo + hi),
    };
    for iteration in 1..=MAX_ITERATIONS {
        let value = g(s);
        if value.abs() <= RESIDUAL_TOL * t {
            return finish(t, polish(s, value, &g, rho), iteration, params);
        }
        if value > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let slope = rhs_log_slope(s, rho);
        let newton = s - value / slope;
        let next = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == s {
            // No representable move left; accept if the residual is as good as
            // f64 allows at this scale.
            if value.abs() <= 8.0 * f64::EPSILON * t {
                return finish(t, s, iteration, params);
            }
            break;
        }
        s = next;
    }
    Err(HwError::NonConvergence {
        what: "saddle Newton iteration",
        iterations: MAX_ITERATIONS,
    })
}

// A few more Newton steps, kept only while the residual shrinks, so the root
// is as exact as f64 allows and not merely within tolerance.
fn polish<G: Fn(f64) -> f64>(mut s: f64, mut value: f64, g: &G, rho: f64) -> f64 {
    for _ in 0..4 {
        let next = s - value / rhs_log_slope(s, rho);
        let next_value = g(next);
        if next_value.is_nan() || next_value.abs() >= value.abs() {
            break;
        }
        s = next;
        value = next_value;
    }
    s
}

fn finish(t: f64, s: f64, iterations: usize, params: &HwParams) -> Result<SaddleSolution> {
    let u0 = s.exp();
    let m_exact = curvature_m(u0, params)?;
    Ok(SaddleSolution {
        t,
        u0,
        residual: saddle_rhs(u0, params) - t,
        iterations,
        m_exact,
    })
}

/// `log` of the bootstrap approximation to `u₀(t)`:
///
/// ```text
/// u₀ ≈ log(1/t)²/(2t²) · (1 + 2 loglog(1/t)/log(1/t) − (2ρ + log 2)/log(1/t))
/// ```
///
/// For `log(1/t) <= 1` only the leading factor is used.
pub fn log_u0_bootstrap(t: f64, params: &HwParams) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(HwError::Domain(format!(
            "bootstrap expansion needs 0 < t < 1, got {t}"
        )));
    }
    let l = -t.ln();
    let lead = 2.0 * l.ln() - LN_2 - 2.0 * t.ln();
    if l <= 1.0 {
        return Ok(lead);
    }
    let factor = 1.0 + 2.0 * l.ln() / l - (2.0 * params.rho() + LN_2) / l;
    if factor <= 0.0 {
        return Err(HwError::Domain(format!(
            "bootstrap correction factor is non-positive ({factor}) at t = {t}"
        )));
    }
    Ok(lead + factor.ln())
}

/// Bootstrap approximation to `u₀(t)`; see [`log_u0_bootstrap`].
pub fn u0_bootstrap(t: f64, params: &HwParams) -> Result<f64> {
    log_u0_bootstrap(t, params).map(f64::exp)
}

/// Curvature of the exponent at the saddle:
/// `M = √2 log u₀ / (16 u₀^{3/2}) − √2 (1 + ρ) / (8 u₀^{3/2})`.
pub fn curvature_m(u0: f64, params: &HwParams) -> Result<f64> {
    if !(u0.is_finite() && u0 > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "u0 must be positive and finite, got {u0}"
        )));
    }
    let log_u0 = u0.ln();
    let threshold = branch_log_start(params);
    if log_u0 <= threshold {
        return Err(HwError::NegativeCurvature { log_u0, threshold });
    }
    let u32 = u0 * u0.sqrt();
    Ok(SQRT_2 * log_u0 / (16.0 * u32) - SQRT_2 * (1.0 + params.rho()) / (8.0 * u32))
}

/// `LHS − RHS` of `−½√(2u₀) log u₀ = −2u₀t − ρ√(2u₀) + ½`, which holds
/// exactly at a root. Non-roots give a difference of `2u₀ (t − rhs(u₀))`.
pub fn from_sp_identity(sol: &SaddleSolution, params: &HwParams) -> f64 {
    let u0 = sol.u0;
    let root = (2.0 * u0).sqrt();
    let lhs = -0.5 * root * u0.ln();
    let rhs = -2.0 * u0 * sol.t - params.rho() * root + 0.5;
    lhs - rhs
}
