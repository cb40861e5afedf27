//! Density of the integral `A_t = ∫₀ᵗ exp(2(W_h + νh)) dh` of geometric
//! Brownian motion, conditional on `W_t + νt = x`:
//!
//! ```text
//! √(2πt)/u · exp(x²/(2t) − (1 + e^{2x})/(2u)) · I₀(e^x/u) · f_{e^x/u}(t),
//! ```
//!
//! and its mixture over the Gaussian law of the endpoint.

use std::f64::consts::PI;
use std::sync::Mutex;

use crate::asymptotics::{density_main, density_rough, DensityMethod, LogDensity};
use crate::error::{HwError, Result};
use crate::inversion::{log_scaled_density_bound, oracle_density, ContourSpec};
use crate::quadrature::{integrate_breakpoints, QuadOptions};
use crate::specfun::HwParams;

/// How the Hartman-Watson factor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsianMethod {
    Oracle,
    Main,
    Rough,
    /// Oracle for `t >= auto_threshold`, main asymptotic formula below.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsianConfig {
    pub auto_threshold: f64,
    /// Largest `r = e^x/u` accepted for the Hartman-Watson factor.
    pub r_max: f64,
    pub contour: ContourSpec,
}

impl Default for AsianConfig {
    fn default() -> Self {
        AsianConfig {
            auto_threshold: 0.05,
            r_max: 1e3,
            contour: ContourSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmIntegralQuery {
    pub t: f64,
    pub nu: f64,
    /// Conditioning value of `W_t + νt`.
    pub x: f64,
    /// Evaluation point for `A_t`.
    pub u: f64,
    pub method: AsianMethod,
}

impl GbmIntegralQuery {
    pub fn validate(&self) -> Result<()> {
        validate_common(self.t, self.nu, self.u)?;
        if !self.x.is_finite() {
            return Err(HwError::InvalidArgument(format!("x must be finite, got {}", self.x)));
        }
        Ok(())
    }
}

fn validate_common(t: f64, nu: f64, u: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(HwError::InvalidArgument(format!("u must be positive, got {u}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(HwError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if !nu.is_finite() {
        return Err(HwError::InvalidArgument(format!("nu must be finite, got {nu}")));
    }
    Ok(())
}

pub fn resolve_method(method: AsianMethod, t: f64, cfg: &AsianConfig) -> DensityMethod {
    match method {
        AsianMethod::Oracle => DensityMethod::Oracle,
        AsianMethod::Main => DensityMethod::Main,
        AsianMethod::Rough => DensityMethod::Rough,
        AsianMethod::Auto if t >= cfg.auto_threshold => DensityMethod::Oracle,
        AsianMethod::Auto => DensityMethod::Main,
    }
}

/// `f_r(t)` by the given method.
pub fn hw_log_density(
    t: f64,
    params: &HwParams,
    method: DensityMethod,
    contour: &ContourSpec,
) -> Result<LogDensity> {
    match method {
        DensityMethod::Oracle => oracle_density(t, params, contour),
        DensityMethod::Main => density_main(t, params),
        DensityMethod::Rough => density_rough(t, params),
        DensityMethod::Crude | DensityMethod::ClosedForm => Err(HwError::InvalidArgument(
            format!("method {} does not evaluate f_r(t)", method.as_str()),
        )),
    }
}

// log of √(2πt)/u · exp(x²/(2t) − (1 + e^{2x})/(2u))
fn log_prefactor(t: f64, x: f64, u: f64) -> f64 {
    let softplus = if 2.0 * x > 0.0 {
        2.0 * x + (-2.0 * x).exp().ln_1p()
    } else {
        (2.0 * x).exp().ln_1p()
    };
    0.5 * (2.0 * PI * t).ln() - u.ln() + x * x / (2.0 * t) - (softplus - (2.0 * u).ln()).exp()
}

/// A conditional density value, or an upper bound where it could not be
/// resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionalValue {
    Resolved(LogDensity),
    Bounded { log_bound: f64 },
}

impl ConditionalValue {
    /// Log of the value or of the bound.
    pub fn log_magnitude(&self) -> f64 {
        match self {
            ConditionalValue::Resolved(d) => d.log_value,
            ConditionalValue::Bounded { log_bound } => *log_bound,
        }
    }
}

/// Density of `A_t` at `u` given `W_t + νt = x`.
pub fn conditional_density(q: &GbmIntegralQuery, cfg: &AsianConfig) -> Result<LogDensity> {
    q.validate()?;
    let log_r = q.x - q.u.ln();
    if log_r > cfg.r_max.ln() {
        return Err(HwError::Domain(format!(
            "r = e^x/u = {:e} exceeds the supported maximum {:e}",
            log_r.exp(),
            cfg.r_max
        )));
    }
    let params = HwParams::new(log_r.exp())?;
    let method = resolve_method(q.method, q.t, cfg);
    let f = hw_log_density(q.t, &params, method, &cfg.contour)
        .map_err(|e| shift_bound(e, log_prefactor(q.t, q.x, q.u) + params.log_i0()))?;
    let log_value = log_prefactor(q.t, q.x, q.u) + params.log_i0() + f.log_value;
    let d = LogDensity::new(log_value, method);
    Ok(match f.rel_error {
        Some(e) => d.with_rel_error(e),
        None => d,
    })
}

fn shift_bound(err: HwError, by: f64) -> HwError {
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
            log_bound: log_bound + by,
        },
        other => other,
    }
}

/// Like [`conditional_density`], but where `r` exceeds `r_max` or the oracle
/// cannot resolve the value, returns an upper bound instead of an error.
pub fn conditional_density_or_bound(
    q: &GbmIntegralQuery,
    cfg: &AsianConfig,
) -> Result<ConditionalValue> {
    q.validate()?;
    let log_r = q.x - q.u.ln();
    if log_r > cfg.r_max.ln() {
        let bound = log_prefactor(q.t, q.x, q.u) + log_scaled_density_bound(q.t, log_r.exp());
        return Ok(ConditionalValue::Bounded { log_bound: bound });
    }
    match conditional_density(q, cfg) {
        Ok(d) => Ok(ConditionalValue::Resolved(d)),
        Err(HwError::ToleranceNotMet { log_bound, .. })
            if resolve_method(q.method, q.t, cfg) == DensityMethod::Oracle =>
        {
            Ok(ConditionalValue::Bounded { log_bound })
        }
        Err(e) => Err(e),
    }
}

/// Quadrature settings for the endpoint mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalOptions {
    /// Half width of the `x` range in standard deviations `√t`.
    pub half_width_sd: f64,
    pub rel_tol: f64,
    pub max_nodes: usize,
    pub parallel: bool,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        MarginalOptions {
            half_width_sd: 8.0,
            rel_tol: 1e-6,
            max_nodes: 20_000,
            parallel: true,
        }
    }
}

/// Unconditional density of `A_t` at `u`: the conditional density mixed
/// over `x ~ N(νt, t)`.
///
/// The integrand is scaled by its largest value on a coarse grid before
/// integration. Points where the conditional density can only be bounded
/// contribute zero; the largest such bound times the range width is added to
/// the error estimate.
pub fn marginal_density(
    t: f64,
    nu: f64,
    u: f64,
    method: AsianMethod,
    cfg: &AsianConfig,
    opts: &MarginalOptions,
) -> Result<LogDensity> {
    validate_common(t, nu, u)?;
    if !(opts.half_width_sd > 0.0 && opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
        return Err(HwError::InvalidArgument(
            "marginal options need a positive width and 0 < rel_tol < 1".into(),
        ));
    }
    let mean = nu * t;
    let sd = t.sqrt();
    let lo = mean - opts.half_width_sd * sd;
    let hi = mean + opts.half_width_sd * sd;
    let log_gauss = |x: f64| -0.5 * (2.0 * PI * t).ln() - (x - mean).powi(2) / (2.0 * t);
    let term = |x: f64| -> Result<ConditionalValue> {
        let q = GbmIntegralQuery { t, nu, x, u, method };
        conditional_density_or_bound(&q, cfg)
    };

    const COARSE: usize = 8;
    let grid: Vec<f64> = (0..=COARSE)
        .map(|k| lo + (hi - lo) * k as f64 / COARSE as f64)
        .collect();
    let coarse: Vec<Result<ConditionalValue>> = if opts.parallel {
        use rayon::prelude::*;
        grid.par_iter().map(|&x| term(x)).collect()
    } else {
        grid.iter().map(|&x| term(x)).collect()
    };
    let mut shift = f64::NEG_INFINITY;
    let mut max_bound = f64::NEG_INFINITY;
    for (x, v) in grid.iter().zip(coarse) {
        match v? {
            ConditionalValue::Resolved(d) => shift = shift.max(d.log_value + log_gauss(*x)),
            ConditionalValue::Bounded { log_bound } => {
                max_bound = max_bound.max(log_bound + log_gauss(*x))
            }
        }
    }
    if !shift.is_finite() {
        // nothing resolved on the grid; fall back to the bound as the scale
        shift = max_bound;
    }
    if !shift.is_finite() {
        return Err(HwError::Domain("marginal integrand is not finite".into()));
    }

    let bound_seen = Mutex::new(max_bound);
    let breakpoints: Vec<f64> = grid.iter().step_by(2).copied().collect();
    let qopts = QuadOptions {
        rel_tol: opts.rel_tol,
        abs_tol: 0.0,
        max_nodes: opts.max_nodes,
        parallel: opts.parallel,
    };
    let result = integrate_breakpoints(
        |x| match term(x)? {
            ConditionalValue::Resolved(d) => Ok((d.log_value + log_gauss(x) - shift).exp()),
            ConditionalValue::Bounded { log_bound } => {
                let mut seen = bound_seen.lock().expect("bound lock");
                *seen = seen.max(log_bound + log_gauss(x));
                Ok(0.0)
            }
        },
        &breakpoints,
        &qopts,
    )
    .map_err(|e| shift_bound(e, shift))?;

    let max_bound = bound_seen.into_inner().expect("bound lock");
    let missed = (max_bound - shift).exp() * (hi - lo);
    let error = result.abs_error + missed;
    let method = resolve_method(method, t, cfg);
    if !(result.value > 0.0 && error <= opts.rel_tol * result.value) {
        return Err(HwError::ToleranceNotMet {
            estimate: result.value,
            error,
            rel_error: error / result.value.abs(),
            rel_tol: opts.rel_tol,
            nodes: result.nodes,
            log_bound: shift + (result.value.abs() + error).ln(),
        });
    }
    Ok(LogDensity::new(shift + result.value.ln(), method).with_rel_error(error / result.value))
}
