//! Special functions in log-space: complex log-gamma, the modified Bessel
//! function `I_ν(r)` for complex order and real argument, and its one-term
//! large-order asymptotic form.
//!
//! `I_ν(r)` and `Γ(z)` overflow or underflow long before the orders that show
//! up on the inversion contour (|ν| in the thousands), so every routine here
//! returns the complex logarithm. Internally logs are carried as `Complex64`
//! with an unreduced imaginary part; the principal branch is taken only when a
//! [`LogComplex`] is handed back to the caller.

use std::f64::consts::{LN_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{HwError, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// A complex number stored as `exp(log_modulus) * exp(i * phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_modulus: f64,
    /// Principal value in (−π, π].
    pub phase: f64,
}

impl LogComplex {
    /// Builds from a complex logarithm, reducing the imaginary part to the
    /// principal branch.
    pub fn from_log(log: Complex64) -> Self {
        LogComplex {
            log_modulus: log.re,
            phase: principal_phase(log.im),
        }
    }

    pub fn to_log(self) -> Complex64 {
        Complex64::new(self.log_modulus, self.phase)
    }

    /// Linear value; overflows to infinity or underflows to zero outside the
    /// f64 range.
    pub fn exp(self) -> Complex64 {
        Complex64::from_polar(self.log_modulus.exp(), self.phase)
    }

    pub fn conj(self) -> Self {
        LogComplex::from_log(Complex64::new(self.log_modulus, -self.phase))
    }

    pub fn is_finite(self) -> bool {
        self.log_modulus.is_finite() && self.phase.is_finite()
    }
}

/// Reduces an angle to (−π, π].
pub fn principal_phase(phase: f64) -> f64 {
    if phase > -PI && phase <= PI {
        return phase;
    }
    let reduced = phase.rem_euclid(2.0 * PI);
    if reduced > PI {
        reduced - 2.0 * PI
    } else {
        reduced
    }
}

/// Parameters of the Hartman-Watson law: the Bessel argument `r` and
/// `ρ = log(r / (2√2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwParams {
    r: f64,
    rho: f64,
    log_i0: f64,
}

impl HwParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(HwError::InvalidArgument(format!(
                "r must be positive and finite, got {r}"
            )));
        }
        let rho = rho_of(r);
        let log_i0 = log_bessel_i_real(0.0, r)?;
        Ok(HwParams { r, rho, log_i0 })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `log I₀(r)`, evaluated once by the ascending series.
    pub fn log_i0(&self) -> f64 {
        self.log_i0
    }
}

/// `log(r / (2√2))`.
pub fn rho_of(r: f64) -> f64 {
    let ratio = r / (2.0 * SQRT_2);
    if ratio.is_normal() {
        ratio.ln()
    } else {
        r.ln() - 1.5 * LN_2
    }
}

// Stirling coefficients B_{2k} / (2k (2k − 1)), k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// Complex log-gamma on the principal branch (cut along the negative real
/// axis), with an unreduced imaginary part.
///
/// Shifts `z` upward with `log Γ(z) = log Γ(z + n) − Σ log(z + k)` until the
/// Stirling series with ten Bernoulli terms is accurate to machine precision.
pub(crate) fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(HwError::InvalidArgument(format!("log-gamma of non-finite {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        // Non-positive reals are either poles or on the branch cut.
        if (z.re - z.re.round()).abs() < 1e-14 * z.re.abs().max(1.0) {
            return Err(HwError::Pole { re: z.re, im: z.im });
        }
        return Err(HwError::Domain(format!(
            "log-gamma is not supported on the negative real axis (z = {})",
            z.re
        )));
    }
    if z.re < -1e4 {
        return Err(HwError::Domain(format!(
            "log-gamma needs Re(z) >= -1e4, got {}",
            z.re
        )));
    }

    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < 0.0 || w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }

    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv;
    for c in STIRLING {
        series += power * c;
        power *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + HALF_LN_2PI + series - shift)
}

/// `log Γ(z)` with principal phase.
///
/// Accepts `Re(z) > 0` or non-real `z`; non-positive integers are poles.
pub fn log_gamma_complex(z: Complex64) -> Result<LogComplex> {
    ln_gamma(z).map(LogComplex::from_log)
}

const SERIES_MAX_TERMS: usize = 10_000;
const SERIES_REL_TOL: f64 = 1e-18;
// Rescaling threshold for the running term, well inside the f64 range.
const RESCALE_AT: f64 = 1e150;

/// Complex log of `I_ν(r)` by the ascending series, unreduced phase.
///
/// The series `Σ_k (r/2)^{2k+ν} / (k! Γ(k+ν+1))` is summed relative to its
/// `k = 0` term. Terms follow the recurrence
/// `τ_{k+1} = τ_k · (r²/4) / ((k+1)(k+1+ν))`; when they grow large (big `r`,
/// small `|ν|`) the partial sum is rescaled and the scale carried in log form.
pub(crate) fn ln_bessel_i(nu: Complex64, r: f64) -> Result<Complex64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "Bessel argument must be positive and finite, got {r}"
        )));
    }
    if !(nu.re.is_finite() && nu.im.is_finite()) || nu.re < 0.0 {
        return Err(HwError::Domain(format!(
            "Bessel order must satisfy Re(nu) >= 0, got {nu}"
        )));
    }

    let half_r = 0.5 * r;
    let lead = nu * half_r.ln() - ln_gamma(nu + 1.0)?;

    let q = half_r * half_r;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut log_scale = 0.0;
    for k in 0..SERIES_MAX_TERMS {
        let kp1 = (k + 1) as f64;
        let ratio = q / (kp1 * (nu + kp1));
        term *= ratio;
        sum += term;
        if term.norm() > RESCALE_AT {
            term /= RESCALE_AT;
            sum /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
        if ratio.norm() < 0.5 && term.norm() <= SERIES_REL_TOL * sum.norm() {
            return Ok(lead + sum.ln() + log_scale);
        }
    }
    Err(HwError::NonConvergence {
        what: "Bessel I series",
        iterations: SERIES_MAX_TERMS,
    })
}

/// `log I_ν(r)` for `Re(ν) >= 0`, `r > 0`.
pub fn log_bessel_i(nu: Complex64, r: f64) -> Result<LogComplex> {
    ln_bessel_i(nu, r).map(LogComplex::from_log)
}

/// Real-order convenience wrapper: `log I_ν(r)` as a real number.
pub fn log_bessel_i_real(nu: f64, r: f64) -> Result<f64> {
    ln_bessel_i(Complex64::new(nu, 0.0), r).map(|z| z.re)
}

/// Complex log of `(r/2)^ν e^ν ν^{−ν−1/2} / √(2π)`, unreduced phase.
pub(crate) fn ln_bessel_i_asymptotic(nu: Complex64, r: f64) -> Result<Complex64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(HwError::InvalidArgument(format!(
            "Bessel argument must be positive and finite, got {r}"
        )));
    }
    if nu.norm() < 10.0 {
        return Err(HwError::Domain(format!(
            "large-order form needs |nu| >= 10, got |nu| = {}",
            nu.norm()
        )));
    }
    if PI - nu.arg().abs() < 0.1 {
        return Err(HwError::Domain(format!(
            "large-order form needs arg(nu) away from ±pi, got {}",
            nu.arg()
        )));
    }
    Ok(nu * (0.5 * r).ln() + nu - (nu + 0.5) * nu.ln() - HALF_LN_2PI)
}

/// One-term large-order asymptotic form of `log I_ν(r)` (leading constant
/// `1/√(2π)`).
pub fn log_bessel_i_asymptotic(nu: Complex64, r: f64) -> Result<LogComplex> {
    ln_bessel_i_asymptotic(nu, r).map(LogComplex::from_log)
}
