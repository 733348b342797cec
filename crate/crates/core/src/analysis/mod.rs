//! Numerics of collision probabilities and `ρ` trade-offs.
//!
//! Quadratures are cross-checked against seeded Monte Carlo estimators in
//! [`monte_carlo`].

pub mod collision;
pub mod monte_carlo;
pub mod quadrature;
pub mod tails;
pub mod tradeoff;

pub use collision::{alpha_beta, cp_collision_probability, delta, lambda, sigma, sigma_complement};
pub use monte_carlo::{
    delta_tail_bound, delta_tail_mc, gaussian_measure_mc, mc_collision_probability, CollisionFamily,
    GaussianSetProbe, HalfPlane, McEstimate, PairGeometry, RotationModel,
};
pub use tails::{erfcx, ln_phi_c, phi, phi_c, phi_c_inv};
pub use tradeoff::{
    cp_tradeoff_rho, default_cp_dims, default_parts_grid, lambda_concavity_check, lower_bound_rho,
    rho_corollary, uniform_mu_grid, ConcavityReport, TradeoffPoint,
};
