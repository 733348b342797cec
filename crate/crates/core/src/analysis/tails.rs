//! Standard normal density, upper tail and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Scaled complementary error function `exp(x²)·erfc(x)`, finite for all
/// `x ≥ −26`.
pub fn erfcx(x: f64) -> f64 {
    if x < 26.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // Continued fraction erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))),
        // evaluated bottom-up; at x ≥ 26 forty terms are far past convergence.
        let mut tail = x;
        for n in (1..=40).rev() {
            tail = x + (n as f64 / 2.0) / tail;
        }
        1.0 / (PI.sqrt() * tail)
    }
}

/// Upper tail `Pr[X ≥ η]` of the standard normal distribution.
pub fn phi_c(eta: f64) -> f64 {
    0.5 * libm::erfc(eta * FRAC_1_SQRT_2)
}

/// `ln Φ_c(η)`, accurate far beyond the underflow point of [`phi_c`].
pub fn ln_phi_c(eta: f64) -> f64 {
    if eta > 0.0 {
        (0.5 * erfcx(eta * FRAC_1_SQRT_2)).ln() - 0.5 * eta * eta
    } else {
        (-phi_c(-eta)).ln_1p()
    }
}

/// Hazard rate `φ(η)/Φ_c(η)`.
pub fn normal_hazard(eta: f64) -> f64 {
    if eta > 0.0 {
        (2.0 / PI).sqrt() / erfcx(eta * FRAC_1_SQRT_2)
    } else {
        phi(eta) / phi_c(eta)
    }
}

/// The `η` with `Φ_c(η) = μ`.
///
/// Newton's method on `ln Φ_c`, which is concave, so iterates started at 0
/// converge monotonically after the first step.
pub fn phi_c_inv(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::invalid(format!("tail probability {mu} must lie in (0, 1)")));
    }
    if mu > 0.5 {
        return Ok(-phi_c_inv(1.0 - mu)?);
    }
    let target = mu.ln();
    let mut eta: f64 = 0.0;
    for _ in 0..200 {
        let f = ln_phi_c(eta) - target;
        let step = f / normal_hazard(eta);
        eta += step;
        if step.abs() <= 1e-15 * (1.0 + eta.abs()) {
            break;
        }
    }
    Ok(eta)
}
