//! Cross-polytope and hyperplane hash families, and concatenation of `k`
//! hash values into one bucket key.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rotations::{Real, Rotation};
use crate::seeds::{stream_rng, Domain};
use crate::vectors::PointRef;

/// Closest signed basis vector among the first `cp_dim` coordinates of `y`.
///
/// Returns `(index, negative)`. Ties on `|y_j|` go to the lowest index, and a
/// zero coordinate counts as positive.
#[inline]
pub fn closest_signed_axis<T: Real>(y: &[T], cp_dim: usize) -> (usize, bool) {
    let mut best = 0;
    let mut best_abs = y[0].abs();
    for (j, &v) in y[..cp_dim].iter().enumerate().skip(1) {
        let a = v.abs();
        if a > best_abs {
            best_abs = a;
            best = j;
        }
    }
    (best, y[best] < T::default())
}

/// Encodes a signed axis as a hash value: `2·index + negative` in the full
/// variant, `index` when signs are collapsed.
#[inline]
pub fn encode_axis(index: usize, negative: bool, collapse_signs: bool) -> u64 {
    if collapse_signs {
        index as u64
    } else {
        2 * index as u64 + negative as u64
    }
}

/// Inverse of [`encode_axis`] for the full variant.
pub fn decode_axis(value: u64) -> (usize, bool) {
    ((value / 2) as usize, value % 2 == 1)
}

/// Cross-polytope hash of an already rotated vector.
#[inline]
pub fn cp_hash_rotated<T: Real>(y: &[T], cp_dim: usize, collapse_signs: bool) -> u64 {
    let (i, neg) = closest_signed_axis(y, cp_dim);
    encode_axis(i, neg, collapse_signs)
}

/// One cross-polytope hash function: a rotation followed by the nearest point
/// of `{±e_i}` restricted to the first `cp_dim` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPolytopeParams {
    rotation: Rotation,
    cp_dim: usize,
    collapse_signs: bool,
}

impl CrossPolytopeParams {
    pub fn new(rotation: Rotation, cp_dim: usize, collapse_signs: bool) -> Result<Self> {
        if cp_dim == 0 || cp_dim > rotation.dim() {
            return Err(Error::invalid(format!(
                "cross-polytope dimension {cp_dim} must be in [1, {}]",
                rotation.dim()
            )));
        }
        Ok(Self {
            rotation,
            cp_dim,
            collapse_signs,
        })
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn cp_dim(&self) -> usize {
        self.cp_dim
    }

    pub fn collapse_signs(&self) -> bool {
        self.collapse_signs
    }

    /// Number of distinct hash values.
    pub fn range(&self) -> u64 {
        cp_range(self.cp_dim, self.collapse_signs)
    }

    /// Rotates `x` into `scratch` (length `rotation.dim()`) and hashes it.
    pub fn hash(&self, x: &[f32], scratch: &mut [f32]) -> Result<u64> {
        self.rotation.rotate(x, scratch)?;
        Ok(cp_hash_rotated(scratch, self.cp_dim, self.collapse_signs))
    }
}

pub fn cp_range(cp_dim: usize, collapse_signs: bool) -> u64 {
    if collapse_signs {
        cp_dim as u64
    } else {
        2 * cp_dim as u64
    }
}

/// `k` random hyperplanes through the origin with standard-normal normals.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneParams {
    dim: usize,
    normals: Vec<f32>,
}

impl HyperplaneParams {
    pub fn from_seed(dim: usize, k: usize, master: u64, table: u64) -> Result<Self> {
        if dim == 0 || k == 0 || k > 64 {
            return Err(Error::invalid("hyperplane hash needs dim ≥ 1 and 1 ≤ k ≤ 64"));
        }
        let mut normals = Vec::with_capacity(dim * k);
        for bit in 0..k {
            let mut rng = stream_rng(master, Domain::Hyperplane, table, bit as u64, 0);
            normals.extend((0..dim).map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g as f32
            }));
        }
        Ok(Self { dim, normals })
    }

    pub fn from_normals(dim: usize, normals: Vec<f32>) -> Result<Self> {
        if dim == 0 || normals.is_empty() || normals.len() % dim != 0 || normals.len() / dim > 64 {
            return Err(Error::invalid("normals must be k·dim values with 1 ≤ k ≤ 64"));
        }
        Ok(Self { dim, normals })
    }

    pub fn k(&self) -> usize {
        self.normals.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normal(&self, i: usize) -> &[f32] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    /// Writes `⟨normal_i, x⟩` for every bit into `out`; `O(k·nnz)` for sparse `x`.
    pub fn projections(&self, x: PointRef<'_>, out: &mut [f64]) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        for (i, o) in out.iter_mut().enumerate().take(self.k()) {
            let n = self.normal(i);
            *o = match x {
                PointRef::Dense(v) => crate::vectors::dot(n, v),
                PointRef::Sparse(s) => s.iter().map(|(j, v)| n[j] as f64 * v as f64).sum(),
            };
        }
        Ok(())
    }

    /// `k`-bit hash: bit `i` (least significant first) is set iff
    /// `⟨normal_i, x⟩ ≥ 0`.
    pub fn hash(&self, x: PointRef<'_>) -> Result<u64> {
        let mut proj = vec![0.0; self.k()];
        self.projections(x, &mut proj)?;
        Ok(proj
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &p)| acc | (((p >= 0.0) as u64) << i)))
    }
}

/// Mixed-radix combination of `k` hash values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashKey(pub u64);

/// Checks that the product of `ranges` fits in a 64-bit key.
pub fn check_key_width(ranges: &[u64]) -> Result<()> {
    let mut total: u128 = 1;
    for &r in ranges {
        if r == 0 {
            return Err(Error::invalid("hash range must be positive"));
        }
        total *= r as u128;
        if total > u64::MAX as u128 + 1 {
            return Err(Error::KeyOverflow);
        }
    }
    Ok(())
}

/// Encodes `values` with the first value most significant:
/// `((v₀·r₁ + v₁)·r₂ + v₂)⋯`.
pub fn concat_key(values: &[u64], ranges: &[u64]) -> Result<HashKey> {
    if values.len() != ranges.len() {
        return Err(Error::DimensionMismatch {
            expected: ranges.len(),
            actual: values.len(),
        });
    }
    check_key_width(ranges)?;
    let mut key: u64 = 0;
    for (&v, &r) in values.iter().zip(ranges) {
        if v >= r {
            return Err(Error::ValueOutOfRange { value: v, range: r });
        }
        key = key.wrapping_mul(r).wrapping_add(v);
    }
    Ok(HashKey(key))
}

/// Unchecked variant used on the hot path once ranges have been validated.
#[inline]
pub(crate) fn concat_key_unchecked(values: impl Iterator<Item = u64>, ranges: &[u64]) -> HashKey {
    let mut key: u64 = 0;
    for (v, &r) in values.zip(ranges) {
        key = key.wrapping_mul(r).wrapping_add(v);
    }
    HashKey(key)
}

pub fn decode_key(key: HashKey, ranges: &[u64]) -> Vec<u64> {
    let mut out = vec![0; ranges.len()];
    let mut rest = key.0 as u128;
    for (slot, &r) in out.iter_mut().zip(ranges).rev() {
        *slot = (rest % r as u128) as u64;
        rest /= r as u128;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotations::{GaussianRotation, PseudoRotation};
    use proptest::prelude::*;

    fn identity_cp(dim: usize, cp_dim: usize, collapse: bool) -> CrossPolytopeParams {
        CrossPolytopeParams::new(Rotation::Gaussian(GaussianRotation::identity(dim)), cp_dim, collapse).unwrap()
    }

    #[test]
    fn identity_rotation_examples() {
        let mut scratch = vec![0.0; 4];
        let cp = identity_cp(4, 4, false);
        assert_eq!(cp.hash(&[1.0, 0.0, 0.0, 0.0], &mut scratch).unwrap(), encode_axis(0, false, false));
        let neg_e3 = [0.0, 0.0, -1.0, 0.0];
        assert_eq!(decode_axis(cp.hash(&neg_e3, &mut scratch).unwrap()), (2, true));
        let collapsed = identity_cp(4, 4, true);
        assert_eq!(collapsed.hash(&neg_e3, &mut scratch).unwrap(), 2);
        assert_eq!(cp.range(), 8);
        assert_eq!(collapsed.range(), 4);
    }

    #[test]
    fn partial_argmax_example() {
        let y = [0.5, -0.9, 0.1, 0.0];
        assert_eq!(closest_signed_axis(&y, 3), (1, true));
        // the restriction hides larger later coordinates
        assert_eq!(closest_signed_axis(&[0.1, -0.2, 5.0], 2), (1, true));
    }

    #[test]
    fn ties_prefer_lowest_index_and_plus() {
        assert_eq!(closest_signed_axis(&[0.5, -0.5, 0.5], 3), (0, false));
        assert_eq!(closest_signed_axis(&[-0.5, 0.5], 2), (0, true));
        assert_eq!(closest_signed_axis(&[0.0, 0.0], 2), (0, false));
    }

    #[test]
    fn cp_dim_bounds() {
        let r = Rotation::Pseudo(PseudoRotation::from_seed(8, 0, 0, 0).unwrap());
        assert!(CrossPolytopeParams::new(r.clone(), 0, false).is_err());
        assert!(CrossPolytopeParams::new(r.clone(), 9, false).is_err());
        assert!(CrossPolytopeParams::new(r, 8, false).is_ok());
    }

    #[test]
    fn hyperplane_examples() {
        let hp = HyperplaneParams::from_seed(6, 5, 3, 0).unwrap();
        let n0: Vec<f32> = hp.normal(0).to_vec();
        assert_eq!(hp.hash(PointRef::Dense(&n0)).unwrap() & 1, 1);
        let x = [0.3f32, -0.1, 0.5, 0.2, -0.7, 0.1];
        let neg: Vec<f32> = x.iter().map(|v| -v).collect();
        let a = hp.hash(PointRef::Dense(&x)).unwrap();
        let b = hp.hash(PointRef::Dense(&neg)).unwrap();
        assert_eq!(a ^ b, 0b11111);
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat_key(&[5], &[256]).unwrap(), HashKey(5));
        assert_eq!(concat_key(&[1, 2], &[4, 8]).unwrap(), HashKey(10));
        assert!(matches!(concat_key(&[4], &[4]), Err(Error::ValueOutOfRange { .. })));
        assert!(matches!(check_key_width(&[1 << 32, 1 << 32, 2]), Err(Error::KeyOverflow)));
        assert!(check_key_width(&[1 << 32, 1 << 32]).is_ok());
    }

    proptest! {
        #[test]
        fn concat_round_trips(pairs in proptest::collection::vec((1u64..1000, any::<u64>()), 1..6)) {
            let ranges: Vec<u64> = pairs.iter().map(|p| p.0).collect();
            let values: Vec<u64> = pairs.iter().map(|p| p.1 % p.0).collect();
            let key = concat_key(&values, &ranges).unwrap();
            prop_assert_eq!(decode_key(key, &ranges), values);
        }

        #[test]
        fn cp_hash_scale_invariant_and_antisymmetric(y in proptest::collection::vec(-1.0f32..1.0, 1..32), s in 0.01f32..100.0) {
            let d = y.len();
            let scaled: Vec<f32> = y.iter().map(|v| v * s).collect();
            let (i, neg) = closest_signed_axis(&y, d);
            prop_assume!(y[i] != 0.0);
            prop_assert_eq!(closest_signed_axis(&scaled, d).0, i);
            let flipped: Vec<f32> = y.iter().map(|v| -v).collect();
            prop_assert_eq!(closest_signed_axis(&flipped, d), (i, !neg));
        }
    }
}
