//! Collision probabilities of pairs at distance `τ` on the sphere, in the
//! Gaussian limit.
//!
//! A pair at distance `τ` rotates to `(X, αX + βY)` with `X, Y` independent
//! standard Gaussian vectors, `α = 1 − τ²/2` and `β = √(τ² − τ⁴/4)`.

use std::f64::consts::PI;

use super::quadrature::{integrate, Tolerance};
use super::tails::{normal_hazard, phi, phi_c};
use crate::error::{Error, Result};

/// `(α, β)` for a pair at distance `τ`: `α` is their inner product.
pub fn alpha_beta(tau: f64) -> (f64, f64) {
    let t2 = tau * tau;
    (1.0 - t2 / 2.0, (t2 - t2 * t2 / 4.0).max(0.0).sqrt())
}

fn check_tau_open(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("distance τ = {tau} must lie in (0, 2)")))
    }
}

/// `Pr[X ≥ η ∧ αX + βY ≥ η] / Φ_c(η)` for independent standard normals.
pub fn lambda(tau: f64, eta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::SQRT_2).contains(&tau) {
        return Err(Error::invalid(format!("distance τ = {tau} must lie in [0, √2]")));
    }
    if !eta.is_finite() {
        return Err(Error::invalid("threshold η must be finite"));
    }
    let (alpha, beta) = alpha_beta(tau);
    if beta == 0.0 {
        return Ok(1.0);
    }
    // x = η + t; the conditional density φ(x)/Φ_c(η) is written in a form
    // that stays finite for large η.
    let (weight, t_max): (Box<dyn Fn(f64) -> f64>, f64) = if eta > 0.0 {
        let h = normal_hazard(eta);
        (
            Box::new(move |t: f64| h * (-eta * t - 0.5 * t * t).exp()),
            -eta + (eta * eta + 90.0).sqrt(),
        )
    } else {
        let tail = phi_c(eta);
        (Box::new(move |t: f64| phi(eta + t) / tail), 10.0 - eta)
    };
    let v = integrate(
        |t| weight(t) * phi_c((eta - alpha * (eta + t)) / beta),
        0.0,
        t_max,
        Tolerance::new(1e-13, 1e-12).pieces(4),
    )?;
    Ok(v.clamp(0.0, 1.0))
}

/// `Δ(u, v) = min(u, αu + βv)`.
pub fn delta(u: f64, v: f64, tau: f64) -> f64 {
    let (alpha, beta) = alpha_beta(tau);
    u.min(alpha * u + beta * v)
}

/// `1 − Pr[|X| ≤ u ∧ |αX + βY| ≤ w]`, computed directly so that small
/// complements keep full relative precision.
fn slab_complement(u: f64, w: f64, alpha: f64, beta: f64) -> Result<f64> {
    if u <= 0.0 || w <= 0.0 {
        return Ok(1.0);
    }
    match (u.is_infinite(), w.is_infinite()) {
        (true, true) => return Ok(0.0),
        (true, false) => return Ok(2.0 * phi_c(w)),
        (false, true) => return Ok(2.0 * phi_c(u)),
        _ => {}
    }
    let inner = integrate(
        |x| phi(x) * (phi_c((w - alpha * x) / beta) + phi_c((w + alpha * x) / beta)),
        0.0,
        u.min(40.0),
        Tolerance::new(1e-300, 1e-11),
    )?;
    Ok((2.0 * phi_c(u) + 2.0 * inner).min(1.0))
}

/// `σ(u, v) = Pr[|X₂| ≤ u ∧ |αX₂ + βY₂| ≤ αu + βv]`: the probability that one
/// further coordinate pair stays inside the slab set by `(u, v)`.
pub fn sigma(u: f64, v: f64, tau: f64) -> Result<f64> {
    check_tau_open(tau)?;
    let (alpha, beta) = alpha_beta(tau);
    let w = if alpha == 0.0 { beta * v } else { alpha * u + beta * v };
    if w.is_nan() || u.is_nan() {
        return Err(Error::invalid(format!("σ undefined at u = {u}, v = {v}")));
    }
    Ok(1.0 - slab_complement(u, w, alpha, beta)?)
}

/// `1 − σ(u, v)`.
pub fn sigma_complement(u: f64, v: f64, tau: f64) -> Result<f64> {
    check_tau_open(tau)?;
    let (alpha, beta) = alpha_beta(tau);
    slab_complement(u, alpha * u + beta * v, alpha, beta)
}

/// Probability that a cross-polytope hash of dimension `d` maps two points at
/// distance `τ` to the same bucket under a uniformly random rotation:
/// `2d·E[1{X₁ ≥ 0, αX₁ + βY₁ ≥ 0}·σ(X₁, Y₁)^{d−1}]`.
///
/// For `d = 1` this is the hyperplane probability `1 − arccos(α)/π`.
pub fn cp_collision_probability(d: u64, tau: f64) -> Result<f64> {
    check_tau_open(tau)?;
    if d == 0 {
        return Err(Error::invalid("cross-polytope dimension must be positive"));
    }
    let (alpha, beta) = alpha_beta(tau);
    if d == 1 {
        return Ok(1.0 - alpha.acos() / PI);
    }
    let power = (d - 1) as f64;
    let scale = 2.0 * d as f64;
    // Beyond this radius 2d·φ is negligible.
    let reach = (2.0 * scale.ln()).sqrt() + 7.0;
    let mut failure = None;
    let outer = integrate(
        |a| {
            // w = αa + βb ≥ 0
            let b_lo = (-alpha * a / beta).max(-reach);
            if b_lo >= reach {
                return 0.0;
            }
            let inner = integrate(
                |b| {
                    let w = alpha * a + beta * b;
                    match slab_complement(a, w, alpha, beta) {
                        Ok(c) => phi(b) * (power * (-c).ln_1p()).exp(),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                b_lo,
                reach,
                Tolerance::new(1e-300, 1e-9).pieces(8),
            );
            match inner {
                Ok(v) => phi(a) * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        reach,
        Tolerance::new(1e-300, 1e-8).pieces(8),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let p = scale * outer?;
    if !(p > 0.0 && p <= 1.0 + 1e-9) {
        return Err(Error::Quadrature(format!(
            "collision probability for d = {d}, τ = {tau} evaluated to {p}"
        )));
    }
    Ok(p.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn lambda_special_cases() {
        for eta in [-2.0, -0.5, 0.0, 0.7, 3.0, 8.0] {
            assert_eq!(lambda(0.0, eta).unwrap(), 1.0);
            assert!((lambda(SQRT_2, eta).unwrap() - phi_c(eta)).abs() < 1e-8, "{eta}");
        }
        let orthant = (PI - 0.75f64.acos()) / PI;
        assert!((lambda(SQRT_2 / 2.0, 0.0).unwrap() - orthant).abs() < 1e-10);
        assert!((orthant - 0.76996).abs() < 1e-4);
        assert!(lambda(1.5, 0.0).is_err());
        assert!(lambda(-0.1, 0.0).is_err());
    }

    #[test]
    fn lambda_decreases_in_eta_and_tau() {
        let mut prev = 1.0;
        for i in 0..40 {
            let v = lambda(0.8, -2.0 + 0.25 * i as f64).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        let mut prev = 1.0;
        for i in 1..=14 {
            let v = lambda(0.1 * i as f64, 1.5).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sigma_limits() {
        assert_eq!(sigma(0.0, 1.0, 0.7).unwrap(), 0.0);
        assert_eq!(sigma(1.0, -5.0, 0.7).unwrap(), 0.0);
        assert_eq!(sigma(f64::INFINITY, f64::INFINITY, 0.7).unwrap(), 1.0);
        assert!((sigma(40.0, 40.0, 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert!(sigma(1.0, 1.0, 0.0).is_err());
        assert!(sigma(1.0, 1.0, 2.0).is_err());
        assert_eq!(sigma(f64::INFINITY, 0.0, 1.0).unwrap(), 1.0);
        let s = sigma(1.0, f64::INFINITY, 1.0).unwrap();
        assert!((s - (1.0 - 2.0 * phi_c(1.0))).abs() < 1e-15);
    }

    #[test]
    fn sigma_complement_consistent() {
        for &(u, v) in &[(0.5, 0.5), (1.0, 2.0), (3.0, -1.0), (2.0, 2.0)] {
            let s = sigma(u, v, 0.9).unwrap();
            let c = sigma_complement(u, v, 0.9).unwrap();
            assert!((s + c - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_formula() {
        let (alpha, beta) = alpha_beta(SQRT_2 / 2.0);
        assert_eq!(delta(1.0, 1.0, SQRT_2 / 2.0), 1f64.min(alpha + beta));
        // β·v ≥ (1 − α)·u ⇒ Δ = u
        for &(u, v) in &[(1.0, 1.0), (2.0, 0.6), (0.3, 5.0)] {
            if beta * v >= (1.0 - alpha) * u {
                assert_eq!(delta(u, v, SQRT_2 / 2.0), u);
            }
        }
    }

    #[test]
    fn sandwich_lower_side() {
        for i in 1..=15 {
            for j in 1..=15 {
                let (u, v) = (0.2 * i as f64, 0.2 * j as f64);
                let d = delta(u, v, SQRT_2 / 2.0);
                let s = sigma(u, v, SQRT_2 / 2.0).unwrap();
                assert!(1.0 - (-d * d / 2.0).exp() <= s + 1e-9, "{u} {v}");
                assert!(s < 1.0);
            }
        }
    }

    #[test]
    fn hyperplane_case() {
        let p = cp_collision_probability(1, SQRT_2 / 2.0).unwrap();
        assert!((p - (1.0 - 0.75f64.acos() / PI)).abs() < 1e-15);
        assert!(cp_collision_probability(0, 1.0).is_err());
        assert!(cp_collision_probability(4, 2.0).is_err());
    }

    #[test]
    fn small_polytope_matches_simulation() {
        use crate::analysis::monte_carlo::{mc_collision_probability, CollisionFamily, PairGeometry, RotationModel};
        let family = CollisionFamily::CrossPolytope {
            cp_dim: 2,
            rotation: RotationModel::Gaussian,
            collapse_signs: false,
        };
        for tau in [0.3, 1.0] {
            let p = cp_collision_probability(2, tau).unwrap();
            let e = mc_collision_probability(&family, PairGeometry::AtDistance(tau), 400_000, 4).unwrap();
            assert!(e.agrees_with(p, 4.0), "{tau}: {p} vs {e:?}");
        }
    }

    #[test]
    fn decreasing_in_tau() {
        let mut prev = 1.0;
        for i in 1..10 {
            let p = cp_collision_probability(16, 0.2 * i as f64).unwrap();
            assert!(p < prev && p > 0.0);
            prev = p;
        }
    }
}
