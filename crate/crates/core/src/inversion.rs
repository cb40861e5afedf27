//! Numerical Laplace inversion of `I_{√(2u)}(r) / I₀(r)` along a vertical
//! Bromwich contour, used as the reference ("oracle") for the asymptotic
//! formulas.
//!
//! On the line `u = R + iy` the density is
//!
//! ```text
//! f_r(t) = (1/π) ∫₀^∞ Re[e^{ut} F(u)] dy
//! ```
//!
//! by conjugate symmetry. The integrand is factored as
//! `exp(L(0)) · exp(L(y) − L(0))` with `L` the complex log of `e^{ut} F(u)`;
//! only the bounded second factor is integrated. For a Laplace transform of a
//! positive density, `|F(R + iy)| <= F(R)`, so `y = 0` is the peak modulus.
//! The contour is cut at the first point of a doubling ladder where the
//! log-modulus has dropped by 40 below the peak (twice in a row).
//!
//! The default abscissa is the saddle `u₀(t)`. Away from it the integral still
//! has the same value, but the peak `e^{L(0)}` grows and the result is obtained
//! by cancellation; the quadrature's round-off floor then shows up as
//! [`HwError::ToleranceNotMet`].

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::asymptotics::{DensityMethod, LogDensity};
use crate::error::{HwError, Result};
use crate::quadrature::{integrate, integrate_breakpoints, QuadOptions, QuadResult};
use crate::saddle::solve_saddle;
use crate::specfun::{ln_bessel_i, HwParams, LogComplex};

const TRUNCATION_DROP: f64 = 40.0;
const MAX_DOUBLINGS: usize = 400;

/// Where and how to integrate along the Bromwich line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    /// `Re(u)` of the contour; `None` selects the saddle (or `1/t` when there
    /// is none).
    pub abscissa: Option<f64>,
    /// Truncation `Y` of `|Im(u)|`; `None` selects the peak − 40 rule.
    pub half_width: Option<f64>,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            abscissa: None,
            half_width: None,
            rel_tol: 1e-10,
            max_nodes: 200_000,
        }
    }
}

impl ContourSpec {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        ContourSpec { rel_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.abscissa {
            if !(a.is_finite() && a > 0.0) {
                return Err(HwError::InvalidArgument(format!(
                    "contour abscissa must be positive, got {a}"
                )));
            }
        }
        if let Some(h) = self.half_width {
            if !(h.is_finite() && h > 0.0) {
                return Err(HwError::InvalidArgument(format!(
                    "contour half width must be positive, got {h}"
                )));
            }
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(HwError::InvalidArgument(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_nodes == 0 {
            return Err(HwError::InvalidArgument("max_nodes must be positive".into()));
        }
        Ok(())
    }
}

/// The path the inversion integral was taken along.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contour {
    /// `Re(u) = abscissa`, `|Im(u)| <= half_width`.
    Vertical { abscissa: f64, half_width: f64 },
    /// Both sides of the cut `u < 0`, with `u = −μ²/2`, `0 <= μ <= mu_max`.
    BranchCut { mu_max: f64 },
}

/// Everything the oracle learned on one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub density: LogDensity,
    pub contour: Contour,
    /// Estimated relative quadrature error.
    pub rel_error: f64,
    pub nodes: usize,
}

fn ln_hw_transform(u: Complex64, params: &HwParams) -> Result<Complex64> {
    let nu = (2.0 * u).sqrt();
    Ok(ln_bessel_i(nu, params.r())? - params.log_i0())
}

/// `log(e^{ut} I_{√(2u)}(r) / I₀(r))` for `Re(u) > 0`, principal `√`.
pub fn transform_integrand(u: Complex64, t: f64, params: &HwParams) -> Result<LogComplex> {
    if !(u.re > 0.0 && u.im.is_finite()) {
        return Err(HwError::Domain(format!("integrand needs Re(u) > 0, got {u}")));
    }
    Ok(LogComplex::from_log(u * t + ln_hw_transform(u, params)?))
}

/// Inverts `exp(ln_transform(u))` at time `t` along `Re(u) = abscissa`.
pub fn bromwich<F>(t: f64, abscissa: f64, spec: &ContourSpec, ln_transform: F) -> Result<OracleOutcome>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    spec.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    if !(abscissa.is_finite() && abscissa > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "contour abscissa must be positive, got {abscissa}"
        )));
    }
    let log_integrand = |y: f64| -> Result<Complex64> {
        let u = Complex64::new(abscissa, y);
        Ok(u * t + ln_transform(u)?)
    };
    let peak = log_integrand(0.0)?.re;
    if !peak.is_finite() {
        return Err(HwError::Domain(format!(
            "integrand is not finite at the real axis (u = {abscissa})"
        )));
    }

    let breakpoints = ladder(abscissa, spec.half_width, |y| {
        Ok(log_integrand(y)?.re - peak)
    })?;
    let half_width = *breakpoints.last().expect("ladder is never empty");

    let opts = QuadOptions {
        rel_tol: spec.rel_tol,
        abs_tol: 0.0,
        max_nodes: spec.max_nodes,
        parallel: false,
    };
    let unit_log = (1.0 / PI).ln();
    let result = integrate_breakpoints(
        |y| {
            let shifted = log_integrand(y)? - peak;
            Ok(shifted.re.exp() * shifted.im.cos())
        },
        &breakpoints,
        &opts,
    )
    .map_err(|e| shift_bound(e, peak + unit_log))?;

    if result.value <= 0.0 {
        return Err(HwError::ToleranceNotMet {
            estimate: result.value,
            error: result.abs_error,
            rel_error: f64::INFINITY,
            rel_tol: spec.rel_tol,
            nodes: result.nodes,
            log_bound: peak + unit_log + (result.value.abs() + result.abs_error).ln(),
        });
    }
    let rel_error = result.rel_error();
    let density = LogDensity::new(peak + unit_log + result.value.ln(), DensityMethod::Oracle)
        .with_rel_error(rel_error);
    Ok(OracleOutcome {
        density,
        contour: Contour::Vertical {
            abscissa,
            half_width,
        },
        rel_error,
        nodes: result.nodes,
    })
}

// Re-expresses a quadrature failure's bound in the units of the density.
fn shift_bound(err: HwError, log_scale: f64) -> HwError {
    match err {
        HwError::ToleranceNotMet {
            estimate,
            error,
            rel_error,
            rel_tol,
            nodes,
            log_bound,
        } => HwError::ToleranceNotMet {
            estimate,
            error,
            rel_error,
            rel_tol,
            nodes,
            log_bound: log_bound + log_scale,
        },
        other => other,
    }
}

// Geometric breakpoints 0, y₁, 2y₁, 4y₁, ... up to the truncation point.
fn ladder<G>(abscissa: f64, fixed: Option<f64>, drop_at: G) -> Result<Vec<f64>>
where
    G: Fn(f64) -> Result<f64>,
{
    let first = 1e-3 * abscissa.max(1.0);
    let mut points = vec![0.0];
    let mut y = first;
    if let Some(limit) = fixed {
        while y < limit {
            points.push(y);
            y *= 2.0;
        }
        points.push(limit);
        return Ok(points);
    }
    let mut below = 0;
    for _ in 0..MAX_DOUBLINGS {
        points.push(y);
        if drop_at(y)? < -TRUNCATION_DROP {
            below += 1;
            if below == 2 {
                return Ok(points);
            }
        } else {
            below = 0;
        }
        y *= 2.0;
    }
    Err(HwError::NonConvergence {
        what: "contour truncation search",
        iterations: MAX_DOUBLINGS,
    })
}

/// Hartman-Watson density by numerical inversion, with run diagnostics.
///
/// With an explicit abscissa the vertical line is used as given. Otherwise
/// the line goes through the saddle `u₀(t)`. When there is none, `t` lies in
/// the right tail, where a vertical line only sees cancellation; the contour
/// is then folded onto the branch cut (see [`branch_cut_outcome`]), with the
/// line `Re(u) = 1/t` as fallback.
pub fn oracle_outcome(t: f64, params: &HwParams, spec: &ContourSpec) -> Result<OracleOutcome> {
    spec.validate()?;
    let vertical = |abscissa: f64| bromwich(t, abscissa, spec, |u| ln_hw_transform(u, params));
    if let Some(a) = spec.abscissa {
        return vertical(a);
    }
    match solve_saddle(t, params) {
        Ok(sol) => vertical(sol.u0),
        Err(HwError::NoSaddle { .. }) => match branch_cut_outcome(t, params, spec) {
            Ok(outcome) => Ok(outcome),
            Err(HwError::ToleranceNotMet { .. }) => vertical(1.0 / t),
            Err(e) => Err(e),
        },
        Err(e) => Err(e),
    }
}

/// `e^r K_{iμ}(r) = ∫₀^∞ e^{−r(cosh s − 1)} cos(μs) ds` and an estimate of
/// its absolute error. For `μ > r` the value is exponentially smaller than the
/// integrand, so accuracy is absolute (`abs_tol`), not relative; a run that
/// stalls at the round-off floor still returns its estimate.
pub fn scaled_bessel_k_imaginary(mu: f64, r: f64, abs_tol: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r.is_finite() && mu.is_finite()) {
        return Err(HwError::InvalidArgument(format!(
            "need r > 0 and finite mu, got r = {r}, mu = {mu}"
        )));
    }
    // beyond this the weight is below e^{-745}
    let end = (1.0 + 745.0 / r).acosh();
    let pieces = ((mu.abs() * end / PI).ceil() as usize).clamp(4, 4096);
    let breakpoints: Vec<f64> = (0..=pieces).map(|k| end * k as f64 / pieces as f64).collect();
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol,
        max_nodes: 400_000,
        parallel: false,
    };
    match integrate_breakpoints(
        |s| Ok((-r * (s.cosh() - 1.0)).exp() * (mu * s).cos()),
        &breakpoints,
        &opts,
    ) {
        Ok(q) => Ok((q.value, q.abs_error)),
        Err(HwError::ToleranceNotMet { estimate, error, .. }) => Ok((estimate, error)),
        Err(e) => Err(e),
    }
}

// log ∫₀^∞ μ sinh(πμ) e^{−μ²t/2} dμ
fn ln_cut_weight_mass(t: f64) -> f64 {
    (0.5 * (PI / t) * (2.0 * PI / t).sqrt()).ln() + PI * PI / (2.0 * t)
}

/// Upper bound on `log(I₀(r) f_r(t))`, from `|K_{iμ}(r)| <= K₀(r) <= √(π/2r) e^{−r}`
/// in the branch-cut representation.
pub fn log_scaled_density_bound(t: f64, r: f64) -> f64 {
    -r - 2.0 * PI.ln() + ln_cut_weight_mass(t) + 0.5 * (PI / (2.0 * r)).ln()
}

/// Hartman-Watson density from the branch-cut representation
///
/// ```text
/// f_r(t) = 1/(π² I₀(r)) ∫₀^∞ μ sinh(πμ) e^{−μ²t/2} K_{iμ}(r) dμ,
/// ```
///
/// the Bromwich integral with the contour wrapped around `u < 0`. For
/// `μ < r` the integrand is positive, so the right tail (large `t`, large `r`)
/// comes out without cancellation. For small `t` the weight peaks at
/// `e^{π²/(2t)}` and the round-off in `K` is amplified by that much; the
/// propagated error is included in the estimate.
pub fn branch_cut_outcome(t: f64, params: &HwParams, spec: &ContourSpec) -> Result<OracleOutcome> {
    spec.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    let r = params.r();
    let inner_tol = 2e-14 * scaled_bessel_k_imaginary(0.0, r, 0.0)?.0;
    let mu_max = (PI + (2.0 * PI * PI + 100.0 * t).sqrt()) / t;
    let breakpoints: Vec<f64> = (0..=8).map(|k| mu_max * k as f64 / 8.0).collect();
    let opts = QuadOptions {
        rel_tol: spec.rel_tol,
        abs_tol: 0.0,
        max_nodes: spec.max_nodes,
        parallel: true,
    };
    let weight = |mu: f64| {
        let x = PI * mu;
        (mu.ln() + x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2 - 0.5 * mu * mu * t).exp()
    };
    let scale = -r - 2.0 * PI.ln() - params.log_i0();
    let result = integrate_breakpoints(
        |mu| {
            if mu == 0.0 {
                return Ok(0.0);
            }
            Ok(weight(mu) * scaled_bessel_k_imaginary(mu, r, inner_tol)?.0)
        },
        &breakpoints,
        &opts,
    )
    .map_err(|e| shift_bound(e, scale))?;

    // error carried in from the inner integrals: the a priori bound when it is
    // already small enough, else one Kronrod pass per piece
    let crude = ln_cut_weight_mass(t).exp() * inner_tol;
    let carried = if crude <= 0.1 * spec.rel_tol * result.value.abs() {
        crude
    } else {
        match integrate_breakpoints(
            |mu| {
                if mu == 0.0 {
                    return Ok(0.0);
                }
                Ok(weight(mu) * scaled_bessel_k_imaginary(mu, r, inner_tol)?.1)
            },
            &breakpoints,
            &QuadOptions {
                rel_tol: 1.0,
                ..opts
            },
        ) {
            Ok(q) => q.value,
            Err(HwError::ToleranceNotMet { estimate, .. }) => estimate,
            Err(e) => return Err(e),
        }
    };
    let error = result.abs_error + carried.abs();
    let rel_error = error / result.value.abs();
    if !(result.value > 0.0 && rel_error <= spec.rel_tol) {
        return Err(HwError::ToleranceNotMet {
            estimate: result.value,
            error,
            rel_error,
            rel_tol: spec.rel_tol,
            nodes: result.nodes,
            log_bound: scale + (result.value.abs() + error).ln(),
        });
    }
    Ok(OracleOutcome {
        density: LogDensity::new(scale + result.value.ln(), DensityMethod::Oracle)
            .with_rel_error(rel_error),
        contour: Contour::BranchCut { mu_max },
        rel_error,
        nodes: result.nodes,
    })
}

/// Hartman-Watson density `f_r(t)` by Bromwich inversion.
pub fn oracle_density(t: f64, params: &HwParams, spec: &ContourSpec) -> Result<LogDensity> {
    oracle_outcome(t, params, spec).map(|o| o.density)
}

/// Inverts the Lévy transform `e^{−√(2u)}` with the same engine. The default
/// abscissa is its saddle `1/(2t²)`.
pub fn levy_oracle(t: f64, spec: &ContourSpec) -> Result<LogDensity> {
    levy_outcome(t, spec).map(|o| o.density)
}

pub fn levy_outcome(t: f64, spec: &ContourSpec) -> Result<OracleOutcome> {
    let abscissa = spec.abscissa.unwrap_or(0.5 / (t * t));
    bromwich(t, abscissa, spec, |u| Ok(-(2.0 * u).sqrt()))
}

/// `∫_{−h}^{h} e^{−M y²} dy` by the same quadrature engine.
pub fn gaussian_window_integral(m: f64, h: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(m > 0.0 && h > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "need M > 0 and h > 0, got M = {m}, h = {h}"
        )));
    }
    let opts = QuadOptions {
        rel_tol,
        ..QuadOptions::default()
    };
    let half = integrate(|y| Ok((-m * y * y).exp()), 0.0, h, &opts)?;
    Ok(QuadResult {
        value: 2.0 * half.value,
        abs_error: 2.0 * half.abs_error,
        ..half
    })
}

/// Whether [`check_tail_monotonicity`] rejects grid points outside the
/// regime `log|u| + B + 2 >= 12` or only flags them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimePolicy {
    Enforce,
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub modulus: f64,
    pub arg: f64,
    pub u: Complex64,
    /// Centered finite difference of `−Re(√u log u + B√u)` in `Im(u)` at fixed
    /// `Re(u)`: the slope of the integrand's log-modulus contribution.
    pub exponent_slope: f64,
    /// The same derivative in closed form,
    /// `−((log|u| + B + 2) sin(θ/2) − θ cos(θ/2)) / (2√|u|)`.
    pub exponent_slope_exact: f64,
    /// `y((log|u|+B+2)(cos(θ/2) − (x/y) sin(θ/2)) − θ((x/y) cos(θ/2) + sin(θ/2)))`,
    /// positive exactly when the slope is negative.
    pub inner_expression: f64,
    pub in_asymptotic_regime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub b: f64,
    pub points: Vec<TailPoint>,
}

impl TailReport {
    pub fn all_decreasing(&self) -> bool {
        self.points.iter().all(|p| p.exponent_slope < 0.0)
    }
}

fn tail_exponent(u: Complex64, b: f64) -> f64 {
    let root = u.sqrt();
    -(root * u.ln() + b * root).re
}

/// Centered finite difference of `−Re(√u log u + B√u)` with respect to
/// `Im(u)`, step `1e-3·|Im(u)|` (or `1e-6·|u|` on the real axis).
pub fn tail_exponent_slope(u: Complex64, b: f64) -> f64 {
    let step = if u.im != 0.0 { 1e-3 * u.im.abs() } else { 1e-6 * u.norm() };
    let up = tail_exponent(u + Complex64::new(0.0, step), b);
    let down = tail_exponent(u - Complex64::new(0.0, step), b);
    (up - down) / (2.0 * step)
}

/// Checks numerically that `|exp(−(√u log u + B√u))|` decreases as `|Im(u)|`
/// grows, on the grid `u = |u| e^{iθ}`.
pub fn check_tail_monotonicity(
    b: f64,
    moduli: &[f64],
    args: &[f64],
    policy: RegimePolicy,
) -> Result<TailReport> {
    if moduli.is_empty() || args.is_empty() {
        return Err(HwError::InvalidArgument("tail check needs non-empty grids".into()));
    }
    if let Some(m) = moduli.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(HwError::InvalidArgument(format!("moduli must be positive, got {m}")));
    }
    if let Some(a) = args.iter().find(|a| !(**a > 0.0 && **a <= FRAC_PI_2)) {
        return Err(HwError::InvalidArgument(format!(
            "arguments must lie in (0, pi/2], got {a}"
        )));
    }

    let mut points = Vec::with_capacity(moduli.len() * args.len());
    let mut offending = Vec::new();
    for &modulus in moduli {
        let a = modulus.ln() + b + 2.0;
        let in_regime = a >= 12.0;
        for &theta in args {
            if !in_regime {
                offending.push((modulus, theta));
            }
            let u = Complex64::from_polar(modulus, theta);
            let (x, y) = (u.re, u.im);
            let (s, c) = (0.5 * theta).sin_cos();
            points.push(TailPoint {
                modulus,
                arg: theta,
                u,
                exponent_slope: tail_exponent_slope(u, b),
                exponent_slope_exact: -(a * s - theta * c) / (2.0 * modulus.sqrt()),
                inner_expression: y * (a * (c - x / y * s) - theta * (x / y * c + s)),
                in_asymptotic_regime: in_regime,
            });
        }
    }
    if policy == RegimePolicy::Enforce && !offending.is_empty() {
        return Err(HwError::PreconditionViolation { points: offending });
    }
    Ok(TailReport { b, points })
}
