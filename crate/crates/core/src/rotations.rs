//! Random rotations applied before cross-polytope hashing.
//!
//! * [`fht`]: in-place orthonormal Walsh–Hadamard transform.
//! * [`PseudoRotation`]: `x ↦ H D₃ H D₂ H D₁ x` with random ±1 diagonals.
//! * [`GaussianRotation`]: dense i.i.d. standard-normal matrix.
//! * [`FeatureHashMap`]: sparse ±1 projection, one nonzero per input column.
//!
//! Inputs shorter than the rotation dimension are zero-padded.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeds::{stream_rng, Domain};
use crate::vectors::SparseVector;

/// Number of `H D` stages in a pseudo-random rotation.
pub const ROTATION_STAGES: usize = 3;

/// Scalar types the rotations operate on.
pub trait Real:
    Copy
    + Default
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::fmt::Debug
    + Send
    + Sync
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Unnormalized butterfly: leaves `√n · H x` in `x`.
fn fht_unnormalized<T: Real>(x: &mut [T]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// In-place orthonormal fast Hadamard transform (Sylvester ordering, scaled by
/// `1/√n`), `O(n log n)`.
pub fn fht<T: Real>(x: &mut [T]) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    fht_unnormalized(x);
    let scale = T::from_f64(1.0 / (n as f64).sqrt());
    for v in x.iter_mut() {
        *v = *v * scale;
    }
    Ok(())
}

/// Applies `H D_s ⋯ H D_1` for an arbitrary number of sign diagonals.
///
/// Production rotations always use [`ROTATION_STAGES`]; other stage counts
/// exist so tests can show that fewer stages are not equivalent to a random
/// rotation.
#[doc(hidden)]
pub fn hd_chain<T: Real>(diagonals: &[Vec<f32>], x: &mut [T]) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    // One combined scale at the end: each unnormalized stage multiplies by √n.
    for diag in diagonals {
        if diag.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: diag.len(),
            });
        }
        for (v, &s) in x.iter_mut().zip(diag) {
            *v = *v * T::from_f64(s as f64);
        }
        fht_unnormalized(x);
    }
    let scale = T::from_f64((n as f64).powf(-0.5 * diagonals.len() as f64));
    for v in x.iter_mut() {
        *v = *v * scale;
    }
    Ok(())
}

pub(crate) fn random_signs<R: Rng>(rng: &mut R, n: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut word: u64 = rng.random();
        for _ in 0..64.min(n - out.len()) {
            out.push(if word & 1 == 1 { -1.0 } else { 1.0 });
            word >>= 1;
        }
    }
    out
}

/// `H D₃ H D₂ H D₁` on a power-of-two dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRotation {
    dim: usize,
    diagonals: [Vec<f32>; ROTATION_STAGES],
}

impl PseudoRotation {
    /// Draws the three diagonals from the `(table, hash)` streams of `master`.
    pub fn from_seed(dim: usize, master: u64, table: u64, hash: u64) -> Result<Self> {
        check_pow2(dim)?;
        let diagonals = std::array::from_fn(|stage| {
            let mut rng = stream_rng(master, Domain::RotationSigns, table, hash, stage as u64);
            random_signs(&mut rng, dim)
        });
        Ok(Self { dim, diagonals })
    }

    pub fn from_rng<R: Rng>(dim: usize, rng: &mut R) -> Result<Self> {
        check_pow2(dim)?;
        let diagonals = std::array::from_fn(|_| random_signs(rng, dim));
        Ok(Self { dim, diagonals })
    }

    pub fn from_diagonals(diagonals: [Vec<f32>; ROTATION_STAGES]) -> Result<Self> {
        let dim = diagonals[0].len();
        check_pow2(dim)?;
        for d in &diagonals {
            if d.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: d.len(),
                });
            }
            if d.iter().any(|&s| s != 1.0 && s != -1.0) {
                return Err(Error::invalid("diagonal entries must be ±1"));
            }
        }
        Ok(Self { dim, diagonals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonals(&self) -> &[Vec<f32>; ROTATION_STAGES] {
        &self.diagonals
    }

    /// Rotates a buffer of exactly `dim` entries in place.
    pub fn apply_in_place<T: Real>(&self, x: &mut [T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        hd_chain(&self.diagonals, x)
    }

    /// Zero-pads `x` to `dim` into `out` and rotates it.
    pub fn apply<T: Real>(&self, x: &[T], out: &mut [T]) -> Result<()> {
        pad_into(x, out, self.dim)?;
        self.apply_in_place(out)
    }
}

/// Dense `dim × dim` matrix with i.i.d. `N(0, 1)` entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRotation {
    dim: usize,
    matrix: Vec<f32>,
}

impl GaussianRotation {
    pub fn from_seed(dim: usize, master: u64, table: u64, hash: u64) -> Result<Self> {
        let mut rng = stream_rng(master, Domain::GaussianMatrix, table, hash, 0);
        Self::from_rng(dim, &mut rng)
    }

    pub fn from_rng<R: Rng>(dim: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("rotation dimension must be positive"));
        }
        let matrix = (0..dim * dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                g as f32
            })
            .collect();
        Ok(Self { dim, matrix })
    }

    /// Test hook: the identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Self { dim, matrix }
    }

    pub fn from_matrix(dim: usize, matrix: Vec<f32>) -> Result<Self> {
        if matrix.len() != dim * dim || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: matrix.len(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    /// `out = A x`, `O(dim²)`.
    pub fn apply(&self, x: &[f32], out: &mut [f32]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: out.len(),
            });
        }
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(self.dim)) {
            *o = row
                .iter()
                .zip(x)
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum::<f64>() as f32;
        }
        Ok(())
    }
}

/// Either kind of rotation, as configured for an index.
#[derive(Debug, Clone, PartialEq)]
pub enum Rotation {
    Pseudo(PseudoRotation),
    Gaussian(GaussianRotation),
}

impl Rotation {
    pub fn dim(&self) -> usize {
        match self {
            Rotation::Pseudo(r) => r.dim(),
            Rotation::Gaussian(g) => g.dim(),
        }
    }

    /// Rotates `x` (zero-padded to `dim`) into `out`.
    pub fn rotate(&self, x: &[f32], out: &mut [f32]) -> Result<()> {
        match self {
            Rotation::Pseudo(r) => r.apply(x, out),
            Rotation::Gaussian(g) => {
                if x.len() == g.dim() {
                    g.apply(x, out)
                } else {
                    let mut padded = vec![0.0; g.dim()];
                    pad_into(x, &mut padded, g.dim())?;
                    g.apply(&padded, out)
                }
            }
        }
    }
}

/// Sparse `out_dim × in_dim` matrix with exactly one ±1 per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHashMap {
    in_dim: usize,
    out_dim: usize,
    rows: Vec<u32>,
    signs: Vec<f32>,
}

impl FeatureHashMap {
    pub fn from_seed(in_dim: usize, out_dim: usize, master: u64, stream: u64) -> Result<Self> {
        let mut rng = stream_rng(master, Domain::FeatureHash, stream, 0, 0);
        Self::from_rng(in_dim, out_dim, &mut rng)
    }

    pub fn from_rng<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::invalid("feature hash dimensions must be positive"));
        }
        let rows = (0..in_dim)
            .map(|_| rng.random_range(0..out_dim as u32))
            .collect();
        let signs = random_signs(rng, in_dim);
        Ok(Self {
            in_dim,
            out_dim,
            rows,
            signs,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Target row and sign of input column `j`.
    pub fn column(&self, j: usize) -> (usize, f32) {
        (self.rows[j] as usize, self.signs[j])
    }

    /// Accumulates `S x` into `out` (length `out_dim`, overwritten), `O(nnz)`.
    pub fn apply_into(&self, x: &SparseVector, out: &mut [f32]) -> Result<()> {
        if x.ambient_dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                actual: x.ambient_dim(),
            });
        }
        if out.len() < self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                actual: out.len(),
            });
        }
        out.fill(0.0);
        for (j, v) in x.iter() {
            if j >= self.in_dim {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    dim: self.in_dim,
                });
            }
            out[self.rows[j] as usize] += self.signs[j] * v;
        }
        Ok(())
    }

    pub fn apply(&self, x: &SparseVector) -> Result<Vec<f32>> {
        let mut out = vec![0.0; self.out_dim];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }
}

fn check_pow2(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() {
        Err(Error::NotPowerOfTwo(dim))
    } else {
        Ok(())
    }
}

fn pad_into<T: Real>(x: &[T], out: &mut [T], dim: usize) -> Result<()> {
    if x.len() > dim || out.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len().max(out.len()),
        });
    }
    out[..x.len()].copy_from_slice(x);
    out[x.len()..].fill(T::default());
    Ok(())
}

/// Smallest power of two that is at least `d`.
pub fn padded_dim(d: usize) -> usize {
    d.max(1).next_power_of_two()
}
