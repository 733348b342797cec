//! Seeded Monte Carlo estimates used to cross-check the quadratures.
//!
//! Trials are split into fixed-size chunks, each with its own stream, so an
//! estimate depends only on `(seed, trials)` and not on the thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::collision::alpha_beta;
use crate::error::{Error, Result};
use crate::hash_families::{closest_signed_axis, encode_axis};
use crate::rotations::{hd_chain, random_signs};
use crate::seeds::{stream_rng, Domain, StreamRng};

const CHUNK: u64 = 1 << 14;

/// Smallest number of trials accepted by the collision estimator.
pub const MIN_COLLISION_TRIALS: u64 = 10_000;

/// Empirical rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_std_error(&self, other: &McEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// Whether `value` lies within `k` standard errors. A zero standard
    /// error (all hits or all misses) is widened to one trial's worth.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        let se = self.std_error.max(1.0 / self.trials as f64);
        (self.estimate - value).abs() <= k * se
    }
}

/// Counts hits over `trials` chunked trials; `trial` returns whether one
/// trial is a hit.
fn run_chunks<F>(trials: u64, seed: u64, tag: u64, trial: F) -> McEstimate
where
    F: Fn(&mut StreamRng) -> bool + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, Domain::MonteCarlo, tag, c, 0);
            let n = CHUNK.min(trials - c * CHUNK);
            (0..n).filter(|_| trial(&mut rng)).count() as u64
        })
        .sum();
    McEstimate::from_counts(hits, trials)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// How hash functions are drawn in a collision experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationModel {
    /// Dense Gaussian matrix (a uniformly random rotation, up to scaling).
    Gaussian,
    /// `stages` rounds of `H D` in dimension `dim` (a power of two).
    Pseudo { dim: usize, stages: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionFamily {
    CrossPolytope {
        cp_dim: usize,
        rotation: RotationModel,
        collapse_signs: bool,
    },
    /// A single random hyperplane.
    Hyperplane,
}

/// Which pairs of points are hashed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairGeometry {
    /// `p = e₁`, `q = αe₁ + βe₂` at distance `τ`.
    AtDistance(f64),
    /// Two independent uniform points of the sphere in `ambient_dim`
    /// dimensions.
    IndependentUniform { ambient_dim: usize },
}

/// Inner product of two independent uniform points in `d` dimensions: the
/// first coordinate of one uniform point.
fn uniform_inner_product<R: Rng>(rng: &mut R, d: usize) -> f64 {
    let mut first = 0.0;
    let mut sq = 0.0;
    for i in 0..d {
        let g = gaussian(rng);
        if i == 0 {
            first = g;
        }
        sq += g * g;
    }
    first / sq.sqrt()
}

/// Collision rate of `trials` fresh hash functions on a pair.
pub fn mc_collision_probability(
    family: &CollisionFamily,
    pair: PairGeometry,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials < MIN_COLLISION_TRIALS {
        return Err(Error::invalid(format!(
            "need at least {MIN_COLLISION_TRIALS} trials, got {trials}"
        )));
    }
    let fixed = match pair {
        PairGeometry::AtDistance(tau) => {
            if !(0.0..2.0).contains(&tau) {
                return Err(Error::invalid(format!("distance τ = {tau} must lie in [0, 2)")));
            }
            Some(alpha_beta(tau))
        }
        PairGeometry::IndependentUniform { ambient_dim } => {
            if ambient_dim < 2 {
                return Err(Error::invalid("ambient dimension must be at least 2"));
            }
            None
        }
    };
    // (α, β) of the trial's pair
    let coefficients = move |rng: &mut StreamRng| match (fixed, pair) {
        (Some(ab), _) => ab,
        (None, PairGeometry::IndependentUniform { ambient_dim }) => {
            let c = uniform_inner_product(rng, ambient_dim);
            (c, (1.0 - c * c).max(0.0).sqrt())
        }
        (None, PairGeometry::AtDistance(_)) => unreachable!(),
    };

    match *family {
        CollisionFamily::Hyperplane => Ok(run_chunks(trials, seed, 0, |rng| {
            let (a, b) = coefficients(rng);
            let g1 = gaussian(rng);
            let g2 = gaussian(rng);
            (g1 >= 0.0) == (a * g1 + b * g2 >= 0.0)
        })),
        CollisionFamily::CrossPolytope {
            cp_dim,
            rotation: RotationModel::Gaussian,
            collapse_signs,
        } => {
            if cp_dim == 0 {
                return Err(Error::invalid("cross-polytope dimension must be positive"));
            }
            // Only the first cp_dim rows of the matrix matter; column j of a
            // Gaussian matrix is the image of e_j.
            Ok(run_chunks(trials, seed, 0, |rng| {
                let (a, b) = coefficients(rng);
                let mut yp = Vec::with_capacity(cp_dim);
                let mut yq = Vec::with_capacity(cp_dim);
                for _ in 0..cp_dim {
                    let g1 = gaussian(rng);
                    let g2 = gaussian(rng);
                    yp.push(g1);
                    yq.push(a * g1 + b * g2);
                }
                hash_f64(&yp, cp_dim, collapse_signs) == hash_f64(&yq, cp_dim, collapse_signs)
            }))
        }
        CollisionFamily::CrossPolytope {
            cp_dim,
            rotation: RotationModel::Pseudo { dim, stages },
            collapse_signs,
        } => {
            if dim < 2 || !dim.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(dim));
            }
            if cp_dim == 0 || cp_dim > dim || stages == 0 {
                return Err(Error::invalid(format!(
                    "need 1 ≤ d′ ≤ {dim} and at least one stage (got d′ = {cp_dim}, {stages} stages)"
                )));
            }
            Ok(run_chunks(trials, seed, 0, |rng| {
                let (p, q) = match pair {
                    PairGeometry::AtDistance(_) => {
                        let (a, b) = fixed.expect("fixed pair");
                        let mut p = vec![0.0f64; dim];
                        let mut q = vec![0.0f64; dim];
                        p[0] = 1.0;
                        q[0] = a;
                        q[1] = b;
                        (p, q)
                    }
                    PairGeometry::IndependentUniform { .. } => {
                        (uniform_point(rng, dim), uniform_point(rng, dim))
                    }
                };
                let diagonals: Vec<Vec<f32>> = (0..stages).map(|_| random_signs(rng, dim)).collect();
                let (mut p, mut q) = (p, q);
                hd_chain(&diagonals, &mut p).expect("power of two");
                hd_chain(&diagonals, &mut q).expect("power of two");
                hash_f64(&p, cp_dim, collapse_signs) == hash_f64(&q, cp_dim, collapse_signs)
            }))
        }
    }
}

fn uniform_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    g.into_iter().map(|x| x / n).collect()
}

fn hash_f64(y: &[f64], cp_dim: usize, collapse: bool) -> u64 {
    let (i, neg) = closest_signed_axis(y, cp_dim);
    encode_axis(i, neg, collapse)
}

/// `{x : ⟨normal, x⟩ ≥ offset}` in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.normal[0] * x[0] + self.normal[1] * x[1] >= self.offset
    }

    fn norm(&self) -> f64 {
        self.normal[0].hypot(self.normal[1])
    }
}

/// A closed planar set whose standard Gaussian measure is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianSetProbe {
    HalfPlane(HalfPlane),
    /// Intersection of two half-planes with non-parallel boundaries.
    Wedge([HalfPlane; 2]),
    /// Complement of the symmetric parallelogram
    /// `{x : |⟨n_i, x⟩| ≤ c_i, i = 1, 2}`.
    ConvexComplement { normals: [[f64; 2]; 2], bounds: [f64; 2] },
}

impl GaussianSetProbe {
    /// Wedge of opening `angle ∈ (0, π)` with its corner at `apex`, opening
    /// along the direction `bisector`. When it opens away from the origin
    /// its corner is the point closest to the origin.
    pub fn wedge(apex: [f64; 2], bisector: f64, angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < std::f64::consts::PI) {
            return Err(Error::invalid(format!("wedge angle {angle} must lie in (0, π)")));
        }
        let direction = bisector;
        let half = |theta: f64| {
            let normal = [theta.cos(), theta.sin()];
            HalfPlane {
                normal,
                offset: normal[0] * apex[0] + normal[1] * apex[1],
            }
        };
        let right_angle = std::f64::consts::FRAC_PI_2;
        Ok(GaussianSetProbe::Wedge([
            half(direction + angle / 2.0 - right_angle),
            half(direction - angle / 2.0 + right_angle),
        ]))
    }

    /// Parallelogram complement whose Gaussian measure is `1 − σ(u, v)`.
    pub fn slab_complement(u: f64, v: f64, tau: f64) -> Self {
        let (alpha, beta) = alpha_beta(tau);
        GaussianSetProbe::ConvexComplement {
            normals: [[1.0, 0.0], [alpha, beta]],
            bounds: [u, alpha * u + beta * v],
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            GaussianSetProbe::HalfPlane(h) => h.contains(x),
            GaussianSetProbe::Wedge([a, b]) => a.contains(x) && b.contains(x),
            GaussianSetProbe::ConvexComplement { normals, bounds } => normals
                .iter()
                .zip(bounds)
                .any(|(n, &c)| (n[0] * x[0] + n[1] * x[1]).abs() > c),
        }
    }

    /// Distance `Δ` from the origin to the set.
    pub fn delta(&self) -> f64 {
        match self {
            GaussianSetProbe::HalfPlane(h) => (h.offset / h.norm()).max(0.0),
            GaussianSetProbe::Wedge(planes) => wedge_closest(planes).0,
            GaussianSetProbe::ConvexComplement { normals, bounds } => normals
                .iter()
                .zip(bounds)
                .map(|(n, &c)| (c / n[0].hypot(n[1])).max(0.0))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Whether the wedge's corner is its closest point to the origin.
    pub fn corner_closest(&self) -> Option<bool> {
        match self {
            GaussianSetProbe::Wedge(planes) => Some(wedge_closest(planes).1),
            _ => None,
        }
    }

    /// Opening angle of a wedge.
    pub fn angle(&self) -> Option<f64> {
        match self {
            GaussianSetProbe::Wedge([a, b]) => {
                let cos = (a.normal[0] * b.normal[0] + a.normal[1] * b.normal[1]) / (a.norm() * b.norm());
                Some(std::f64::consts::PI - cos.clamp(-1.0, 1.0).acos())
            }
            _ => None,
        }
    }
}

/// `(Δ, corner is closest)` for the intersection of two half-planes.
fn wedge_closest(planes: &[HalfPlane; 2]) -> (f64, bool) {
    let [a, b] = planes;
    if a.contains([0.0, 0.0]) && b.contains([0.0, 0.0]) {
        return (0.0, false);
    }
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    let corner = [
        (a.offset * b.normal[1] - b.offset * a.normal[1]) / det,
        (a.normal[0] * b.offset - b.normal[0] * a.offset) / det,
    ];
    let corner_dist = corner[0].hypot(corner[1]);
    let mut best = corner_dist;
    for (p, other) in [(a, b), (b, a)] {
        // foot of the perpendicular from the origin onto p's boundary
        let s = p.offset / (p.norm() * p.norm());
        let foot = [s * p.normal[0], s * p.normal[1]];
        if other.normal[0] * foot[0] + other.normal[1] * foot[1] >= other.offset - 1e-15 {
            best = best.min(foot[0].hypot(foot[1]));
        }
    }
    (best, best >= corner_dist * (1.0 - 1e-12))
}

/// Standard Gaussian measure of `set` by Monte Carlo.
pub fn gaussian_measure_mc(set: &GaussianSetProbe, trials: u64, seed: u64) -> McEstimate {
    run_chunks(trials, seed, 1, |rng| set.contains([gaussian(rng), gaussian(rng)]))
}

/// `Pr[Δ(X₁, Y₁) ≥ t]` for independent standard normals, by Monte Carlo.
pub fn delta_tail_mc(tau: f64, t: f64, trials: u64, seed: u64) -> McEstimate {
    let (alpha, beta) = alpha_beta(tau);
    run_chunks(trials, seed, 2, |rng| {
        let (x, y) = (gaussian(rng), gaussian(rng));
        x.min(alpha * x + beta * y) >= t
    })
}

/// Upper bound `exp(−(4/(4 − τ²))·t²/2)` on [`delta_tail_mc`]'s probability.
pub fn delta_tail_bound(tau: f64, t: f64) -> f64 {
    (-(4.0 / (4.0 - tau * tau)) * t * t / 2.0).exp()
}
