//! `ρ` exponents: the closed form for good families, the lower bound in terms
//! of the number of parts, and the cross-polytope curve.

use std::f64::consts::SQRT_2;

use super::collision::{cp_collision_probability, lambda};
use super::tails::phi_c_inv;
use crate::error::{Error, Result};

/// One point of a `ρ`-versus-parts curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub num_parts: f64,
    pub rho: f64,
}

/// `ρ = (1/c²)·(4 − c²r²)/(4 − r²)` for approximation `c` at radius `r`.
pub fn rho_corollary(c: f64, r: f64) -> Result<f64> {
    if !(c >= 1.0) || !(r > 0.0) || c * r >= 2.0 {
        return Err(Error::invalid(format!("need c ≥ 1, r > 0 and cr < 2 (got c = {c}, r = {r})")));
    }
    Ok((4.0 - c * c * r * r) / (c * c * (4.0 - r * r)))
}

/// Smallest `ρ` any family with `num_parts` parts can reach at distance `r1`
/// against nearly orthogonal far points.
pub fn lower_bound_rho(num_parts: f64, r1: f64) -> Result<f64> {
    if !(num_parts >= 2.0) || num_parts.is_infinite() {
        return Err(Error::invalid(format!("need T ≥ 2 parts, got {num_parts}")));
    }
    if !(r1 > 0.0 && r1 < SQRT_2) {
        return Err(Error::invalid(format!("near distance {r1} must lie in (0, √2)")));
    }
    let eta = phi_c_inv(1.0 / num_parts)?;
    let p1 = lambda(r1, eta)?;
    Ok(-p1.ln() / num_parts.ln())
}

/// The cross-polytope family of dimension `cp_dim`: `T = 2d′` parts, far
/// collision probability `1/(2d′)`.
pub fn cp_tradeoff_rho(cp_dim: u64, r1: f64) -> Result<TradeoffPoint> {
    if cp_dim == 0 {
        return Err(Error::invalid("cross-polytope dimension must be positive"));
    }
    let num_parts = 2.0 * cp_dim as f64;
    let p1 = cp_collision_probability(cp_dim, r1)?;
    Ok(TradeoffPoint {
        num_parts,
        rho: -p1.ln() / num_parts.ln(),
    })
}

/// `T ∈ {2, 4, …, 2⁵³} ∪ {10, 100, …, 10¹⁶}`, ascending.
pub fn default_parts_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=53).map(|j| 2f64.powi(j)).collect();
    grid.extend((1..=16).map(|k| 10f64.powi(k)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `d′ ∈ {1, 2, 4, …, 2⁵²}`, so that `T = 2d′` spans `2 … 2⁵³`.
pub fn default_cp_dims() -> Vec<u64> {
    (0..=52).map(|j| 1u64 << j).collect()
}

/// Outcome of [`lambda_concavity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Largest second difference seen; concavity allows at most `1e-6`.
    pub max_second_difference: f64,
    /// Whether every value lies in `(0, 1]`.
    pub values_in_range: bool,
    pub values: Vec<f64>,
}

/// Slack allowed on second differences.
pub const CONCAVITY_SLACK: f64 = 1e-6;

/// `n` evenly spaced points `μ_i = i/(2(n + 1))` strictly inside `(0, 1/2)`.
pub fn uniform_mu_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (2.0 * (n + 1) as f64)).collect()
}

/// Checks that `μ ↦ Λ(τ, Φ_c⁻¹(μ))` has non-positive second differences on
/// an evenly spaced grid of at least 50 points inside `(0, 1/2)`.
pub fn lambda_concavity_check(tau: f64, grid: &[f64]) -> Result<ConcavityReport> {
    if grid.len() < 50 {
        return Err(Error::invalid(format!("need at least 50 grid points, got {}", grid.len())));
    }
    if grid.iter().any(|&m| !(m > 0.0 && m < 0.5)) {
        return Err(Error::invalid("grid points must lie in (0, 1/2)"));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) + 1e-15) {
        return Err(Error::invalid("grid must be increasing and evenly spaced"));
    }
    let values = grid
        .iter()
        .map(|&mu| lambda(tau, phi_c_inv(mu)?))
        .collect::<Result<Vec<_>>>()?;
    let max_second_difference = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConcavityReport {
        concave: max_second_difference <= CONCAVITY_SLACK,
        max_second_difference,
        values_in_range: values.iter().all(|&v| v > 0.0 && v <= 1.0),
        values,
    })
}
