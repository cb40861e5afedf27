//! Small-time formulas for the Hartman-Watson density `f_r(t)` and the Lévy
//! density used as a reference tail.
//!
//! All densities are produced in log-space; the linear value is attached only
//! when it is a normal f64.

use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{HwError, Result};
use crate::saddle::{solve_saddle, SaddleSolution};
use crate::specfun::HwParams;

/// Which formula or algorithm produced a [`LogDensity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityMethod {
    /// Leading term with the exact saddle and exact curvature.
    Main,
    /// Leading term with `√(u₀/(log u₀ − 2 − 2ρ))` replaced by its expansion.
    Rough,
    /// `exp(−log(1/t)²/(2t))`.
    Crude,
    /// Numerical Bromwich inversion.
    Oracle,
    /// An exact closed form (the Lévy reference density).
    ClosedForm,
}

impl DensityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DensityMethod::Main => "main",
            DensityMethod::Rough => "rough",
            DensityMethod::Crude => "crude",
            DensityMethod::Oracle => "oracle",
            DensityMethod::ClosedForm => "closed-form",
        }
    }
}

/// A strictly positive density value carried as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub log_value: f64,
    /// `exp(log_value)` when that is a normal f64.
    pub value: Option<f64>,
    pub method: DensityMethod,
    /// Estimated relative error, reported by numerical methods.
    pub rel_error: Option<f64>,
}

impl LogDensity {
    pub fn new(log_value: f64, method: DensityMethod) -> Self {
        let linear = log_value.exp();
        LogDensity {
            log_value,
            value: linear.is_normal().then_some(linear),
            method,
            rel_error: None,
        }
    }

    pub fn with_rel_error(mut self, rel_error: f64) -> Self {
        self.rel_error = Some(rel_error);
        self
    }
}

fn check_finite(log_value: f64, what: &str) -> Result<f64> {
    if log_value.is_finite() {
        Ok(log_value)
    } else {
        Err(HwError::Domain(format!("{what} is not finite ({log_value})")))
    }
}

/// `log` of the leading term
/// `√e / (π I₀(r)) · √(u₀ / (log u₀ − 2 − 2ρ)) · exp(−t u₀ + √(2u₀))`
/// evaluated at an already solved saddle.
pub fn log_main_at(sol: &SaddleSolution, params: &HwParams) -> Result<f64> {
    let u0 = sol.u0;
    let log_u0 = u0.ln();
    let gap = log_u0 - 2.0 - 2.0 * params.rho();
    if gap <= 0.0 {
        return Err(HwError::NegativeCurvature {
            log_u0,
            threshold: 2.0 + 2.0 * params.rho(),
        });
    }
    let log_value = 0.5 - PI.ln() - params.log_i0() + 0.5 * (log_u0 - gap.ln()) - sol.t * u0
        + (2.0 * u0).sqrt();
    check_finite(log_value, "main density")
}

/// The same leading term written through the curvature `M`, before the
/// saddle equation is used to eliminate `√u₀ log u₀`:
///
/// ```text
/// 2^{−7/4} π⁻¹ I₀(r)⁻¹ M^{−1/2} u₀^{−1/4} exp(u₀t − ½√(2u₀) log u₀ + √2(1+ρ)√u₀)
/// ```
///
/// Equal to [`log_main_at`] exactly when `u₀` solves the saddle equation.
pub fn log_central_at(sol: &SaddleSolution, params: &HwParams) -> Result<f64> {
    let u0 = sol.u0;
    let log_u0 = u0.ln();
    let prefactor =
        -1.75 * LN_2 - PI.ln() - params.log_i0() - 0.5 * sol.m_exact.ln() - 0.25 * log_u0;
    let exponent = u0 * sol.t - 0.5 * (2.0 * u0).sqrt() * log_u0
        + SQRT_2 * (1.0 + params.rho()) * u0.sqrt();
    check_finite(prefactor + exponent, "central density form")
}

/// Main small-time approximation of `f_r(t)`.
pub fn density_main(t: f64, params: &HwParams) -> Result<LogDensity> {
    let sol = solve_saddle(t, params)?;
    Ok(LogDensity::new(log_main_at(&sol, params)?, DensityMethod::Main))
}

/// `log` of `√e/(2π I₀(r)) · log(1/t)^{1/2}/t · exp(−t u₀ + √(2u₀))` at a
/// solved saddle.
pub fn log_rough_at(sol: &SaddleSolution, params: &HwParams) -> Result<f64> {
    let t = sol.t;
    if t >= 1.0 {
        return Err(HwError::Domain(format!("rough formula needs t < 1, got {t}")));
    }
    let l = -t.ln();
    let log_value = 0.5 - (2.0 * PI).ln() - params.log_i0() + 0.5 * l.ln() - t.ln() - t * sol.u0
        + (2.0 * sol.u0).sqrt();
    check_finite(log_value, "rough density")
}

/// Cruder small-time approximation with the prefactor expanded in `t`.
pub fn density_rough(t: f64, params: &HwParams) -> Result<LogDensity> {
    if !(t > 0.0 && t < 1.0) {
        return Err(HwError::Domain(format!("rough formula needs 0 < t < 1, got {t}")));
    }
    let sol = solve_saddle(t, params)?;
    // The rough formula shares the main formula's domain.
    log_main_at(&sol, params)?;
    Ok(LogDensity::new(log_rough_at(&sol, params)?, DensityMethod::Rough))
}

/// Three-term expansion of the exponent `−t u₀ + √(2u₀)`:
///
/// ```text
/// −L²/(2t) − L·log L/t + (1 + ρ + ½ log 2)·L/t,   L = log(1/t)
/// ```
pub fn exponent_expansion(t: f64, params: &HwParams) -> Result<f64> {
    if !(t > 0.0 && t < (-1.0f64).exp()) {
        return Err(HwError::Domain(format!(
            "exponent expansion needs 0 < t < 1/e, got {t}"
        )));
    }
    let l = -t.ln();
    Ok(-l * l / (2.0 * t) - l * l.ln() / t + (1.0 + params.rho() + 0.5 * LN_2) * l / t)
}

/// The exponent `−t u₀ + √(2u₀)` with the exact saddle.
pub fn exact_exponent(sol: &SaddleSolution) -> f64 {
    -sol.t * sol.u0 + (2.0 * sol.u0).sqrt()
}

/// `−log(1/t)² / (2t)`, the r-independent leading behaviour of `log f_r(t)`.
pub fn log_density_crude(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(HwError::Domain(format!("crude formula needs 0 < t < 1, got {t}")));
    }
    let l = -t.ln();
    Ok(-l * l / (2.0 * t))
}

/// Lévy (stable, index ½) density `(2πt³)^{−1/2} e^{−1/(2t)}`; its Laplace
/// transform is `e^{−√(2u)}`.
pub fn levy_density(t: f64) -> Result<LogDensity> {
    if !(t.is_finite() && t > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    let log_value = -0.5 * (2.0 * PI).ln() - 1.5 * t.ln() - 0.5 / t;
    Ok(LogDensity::new(log_value, DensityMethod::ClosedForm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn params(r: f64) -> HwParams {
        HwParams::new(r).unwrap()
    }

    #[test]
    fn log_density_value_presence() {
        assert_eq!(LogDensity::new(0.0, DensityMethod::Main).value, Some(1.0));
        assert_eq!(LogDensity::new(-1e4, DensityMethod::Main).value, None);
        assert_eq!(LogDensity::new(800.0, DensityMethod::Main).value, None);
        let d = LogDensity::new(-3.25, DensityMethod::Main);
        let v = d.value.unwrap();
        assert!((v - (-3.25f64).exp()).abs() <= 1e-12 * v);
    }

    #[test]
    fn main_and_central_forms_agree() {
        let p = params(1.0);
        let sol = solve_saddle(0.01, &p).unwrap();
        let main = log_main_at(&sol, &p).unwrap();
        let central = log_central_at(&sol, &p).unwrap();
        assert!((main - central).abs() < 1e-12 * main.abs(), "{main} vs {central}");
    }

    #[test]
    fn main_at_extreme_t_is_finite() {
        let p = params(1.0);
        let d = density_main(1e-50, &p).unwrap();
        assert!(d.log_value.is_finite());
        assert!(d.value.is_none());
        let crude = log_density_crude(1e-50).unwrap();
        assert!(d.log_value < 0.0 && (d.log_value / crude - 1.0).abs() < 0.1);
    }

    #[test]
    fn rough_closed_form_at_zero_rho() {
        let p = params(2.0 * SQRT_2);
        let t = 1e-6;
        let sol = solve_saddle(t, &p).unwrap();
        let l: f64 = -t.ln();
        let expected = 0.5 - (2.0 * PI * p.log_i0().exp()).ln() + 0.5 * l.ln() - t.ln() - t * sol.u0
            + (2.0 * sol.u0).sqrt();
        let got = density_rough(t, &p).unwrap().log_value;
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn rough_to_main_ratio_tends_to_one() {
        let p = params(1.0);
        let gaps: Vec<f64> = [1e-3, 1e-4, 1e-6]
            .iter()
            .map(|&t| {
                let m = density_main(t, &p).unwrap().log_value;
                let r = density_rough(t, &p).unwrap().log_value;
                (r - m).abs()
            })
            .collect();
        assert!(gaps.iter().all(|g| *g < 2f64.ln()), "{gaps:?}");
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn expansion_with_vanishing_third_term() {
        let rho = -1.0 - 0.5 * LN_2;
        let r = 2.0 * SQRT_2 * rho.exp();
        let p = params(r);
        let t: f64 = 1e-3;
        let l: f64 = -t.ln();
        let expected = -l * l / (2.0 * t) - l * l.ln() / t;
        let got = exponent_expansion(t, &p).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn expansion_substitution_at_e_to_minus_e() {
        let p = params(2.0 * SQRT_2);
        let t = (-E).exp();
        let ee = E.exp();
        let expected = -E * E * ee / 2.0 - E * ee + (1.0 + 0.5 * LN_2) * E * ee;
        let got = exponent_expansion(t, &p).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
        assert!(exponent_expansion(0.5, &p).is_err());
    }

    #[test]
    fn expansion_increases_with_rho() {
        let t = 1e-4;
        let lo = exponent_expansion(t, &params(0.5)).unwrap();
        let hi = exponent_expansion(t, &params(5.0)).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn crude_closed_forms() {
        let t = (-1.0f64).exp();
        assert!((log_density_crude(t).unwrap() + E / 2.0).abs() < 1e-14);
        assert!(log_density_crude(1.0).is_err());
        let tiny = log_density_crude(1e-50).unwrap();
        let l = 50.0 * 10f64.ln();
        assert!((tiny / (-l * l / 2e-50) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn levy_closed_forms() {
        let one = levy_density(1.0).unwrap().value.unwrap();
        assert!((one - (-0.5f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-15);
        let half = levy_density(0.5).unwrap().log_value;
        let expected = -0.5 * (2.0 * PI).ln() - 1.5 * 0.5f64.ln() - 1.0;
        assert!((half - expected).abs() < 1e-15);
        // mode at t = 1/3
        let at = |t: f64| levy_density(t).unwrap().log_value;
        let third = 1.0 / 3.0;
        assert!(at(third) > at(third * 1.01) && at(third) > at(third * 0.99));
    }
}
