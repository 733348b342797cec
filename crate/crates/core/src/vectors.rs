//! Dense and sparse points on the unit sphere.
//!
//! Coordinates are stored as `f32`; every reduction (norms, inner products,
//! distances) accumulates in `f64`.

use crate::error::{Error, Result};

/// Norm tolerance below which a vector is accepted as unit length without
/// rescaling.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// A dense point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f32>,
}

impl UnitVector {
    /// Accepts `coords` as-is when its norm is within [`UNIT_TOLERANCE`] of one,
    /// rescales it otherwise.
    pub fn new(coords: Vec<f32>) -> Result<Self> {
        let norm = norm(&coords);
        if (norm - 1.0).abs() <= UNIT_TOLERANCE {
            if coords.is_empty() {
                return Err(Error::ZeroVector);
            }
            Ok(Self { coords })
        } else {
            normalize(&coords)
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f32] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f32> {
        self.coords
    }

    /// The `i`th standard basis vector of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Ok(Self { coords })
    }
}

impl AsRef<[f32]> for UnitVector {
    fn as_ref(&self) -> &[f32] {
        &self.coords
    }
}

/// Euclidean norm with `f64` accumulation.
pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum()
}

/// Scales `v` to unit length.
pub fn normalize(v: &[f32]) -> Result<UnitVector> {
    let n = norm(v);
    if v.is_empty() || n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(UnitVector {
        coords: v.iter().map(|&x| (x as f64 / n) as f32).collect(),
    })
}

/// Euclidean distance between two unit vectors, in `[0, 2]`.
///
/// Computed as `‖p − q‖` directly rather than `sqrt(2 − 2⟨p, q⟩)`: the two
/// agree on exact unit vectors but the latter loses all precision near zero
/// once coordinates have been rounded to `f32`.
pub fn unit_distance(p: &[f32], q: &[f32]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(squared_distance(p, q).sqrt().min(2.0))
}

#[inline]
pub(crate) fn squared_distance(p: &[f32], q: &[f32]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// A sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    ambient_dim: usize,
    indices: Vec<u32>,
    values: Vec<f32>,
}

impl SparseVector {
    /// Builds a sparse vector from `(index, value)` entries in ascending index
    /// order. Explicit zeros are dropped.
    pub fn new(ambient_dim: usize, entries: impl IntoIterator<Item = (u32, f32)>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<u32> = None;
        for (position, (idx, val)) in entries.into_iter().enumerate() {
            if idx as usize >= ambient_dim {
                return Err(Error::IndexOutOfRange {
                    index: idx as usize,
                    dim: ambient_dim,
                });
            }
            if last.is_some_and(|l| idx <= l) {
                return Err(Error::UnsortedIndices { position });
            }
            last = Some(idx);
            if val != 0.0 {
                indices.push(idx);
                values.push(val);
            }
        }
        Ok(Self {
            ambient_dim,
            indices,
            values,
        })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f32)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Returns a copy scaled to unit length.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            ambient_dim: self.ambient_dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| (v as f64 / n) as f32).collect(),
        })
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.ambient_dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Sparse inner product by merging the two sorted index lists.
pub fn dot_sparse(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim,
            actual: b.ambient_dim,
        });
    }
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0f64;
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a.values[i] as f64 * b.values[j] as f64;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc)
}

/// `‖a − b‖` for sparse vectors, merging sorted supports.
pub fn sparse_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim,
            actual: b.ambient_dim,
        });
    }
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0f64;
    let sq = |x: f64| x * x;
    while i < a.indices.len() || j < b.indices.len() {
        let ai = a.indices.get(i).copied().unwrap_or(u32::MAX);
        let bj = b.indices.get(j).copied().unwrap_or(u32::MAX);
        match ai.cmp(&bj) {
            std::cmp::Ordering::Less => {
                acc += sq(a.values[i] as f64);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                acc += sq(b.values[j] as f64);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                acc += sq(a.values[i] as f64 - b.values[j] as f64);
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc.sqrt().min(2.0))
}

/// A borrowed point to hash or query with.
#[derive(Debug, Clone, Copy)]
pub enum PointRef<'a> {
    Dense(&'a [f32]),
    Sparse(&'a SparseVector),
}

impl PointRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            PointRef::Dense(v) => v.len(),
            PointRef::Sparse(s) => s.ambient_dim(),
        }
    }
}

impl<'a> From<&'a UnitVector> for PointRef<'a> {
    fn from(v: &'a UnitVector) -> Self {
        PointRef::Dense(v.coords())
    }
}

impl<'a> From<&'a SparseVector> for PointRef<'a> {
    fn from(v: &'a SparseVector) -> Self {
        PointRef::Sparse(v)
    }
}

/// Dense unit vectors stored row-major in one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDataset {
    dim: usize,
    data: Vec<f32>,
}

impl DenseDataset {
    pub fn from_unit_vectors(vectors: &[UnitVector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            data.extend_from_slice(v.coords());
        }
        Ok(Self { dim, data })
    }

    /// A dataset with no rows.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            data: Vec::new(),
        }
    }

    /// Normalizes each row of `rows` on ingest.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let units = rows
            .iter()
            .map(|r| UnitVector::new(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_unit_vectors(&units)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn to_unit_vectors(&self) -> Vec<UnitVector> {
        self.rows()
            .map(|r| UnitVector { coords: r.to_vec() })
            .collect()
    }
}

/// The point set an index is built over.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Dense(DenseDataset),
    Sparse(Vec<SparseVector>),
}

impl Dataset {
    pub fn sparse(vectors: Vec<SparseVector>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyDataset)?;
        let dim = first.ambient_dim();
        if let Some(bad) = vectors.iter().find(|v| v.ambient_dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.ambient_dim(),
            });
        }
        Ok(Dataset::Sparse(vectors))
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Dense(d) => d.len(),
            Dataset::Sparse(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Dataset::Dense(d) => d.dim(),
            Dataset::Sparse(s) => s.first().map_or(0, |v| v.ambient_dim()),
        }
    }

    pub fn point(&self, i: usize) -> PointRef<'_> {
        match self {
            Dataset::Dense(d) => PointRef::Dense(d.row(i)),
            Dataset::Sparse(s) => PointRef::Sparse(&s[i]),
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = PointRef<'_>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Inner product of point `i` with `q`.
    pub fn inner_product(&self, i: usize, q: PointRef<'_>) -> Result<f64> {
        match (self, q) {
            (Dataset::Dense(d), PointRef::Dense(q)) => {
                if q.len() != d.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: d.dim(),
                        actual: q.len(),
                    });
                }
                Ok(dot(d.row(i), q))
            }
            (Dataset::Sparse(s), PointRef::Sparse(q)) => dot_sparse(&s[i], q),
            _ => Err(Error::invalid("query representation does not match dataset")),
        }
    }

    /// Bytes needed to store the coordinates (entries for sparse data).
    pub fn storage_bytes(&self) -> usize {
        match self {
            Dataset::Dense(d) => d.data.len() * std::mem::size_of::<f32>(),
            Dataset::Sparse(s) => s
                .iter()
                .map(|v| v.nnz() * (std::mem::size_of::<u32>() + std::mem::size_of::<f32>()))
                .sum(),
        }
    }

    /// Distance from point `i` to `q`.
    pub fn distance(&self, i: usize, q: PointRef<'_>) -> Result<f64> {
        match (self, q) {
            (Dataset::Dense(d), PointRef::Dense(q)) => unit_distance(d.row(i), q),
            (Dataset::Sparse(s), PointRef::Sparse(q)) => sparse_distance(&s[i], q),
            _ => Err(Error::invalid("query representation does not match dataset")),
        }
    }
}
