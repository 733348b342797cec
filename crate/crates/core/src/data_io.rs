//! Synthetic instances, dataset file formats and exact ground truth.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Neighbor;
use crate::seeds::{stream_rng, Domain};
use crate::vectors::{Dataset, DenseDataset, PointRef, SparseVector, UnitVector};

/// Point set, queries and their exact nearest neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub points: Dataset,
    pub queries: Dataset,
    pub ground_truth: Vec<Neighbor>,
    /// Data point each query was planted next to, when generated.
    pub planted: Vec<usize>,
    pub seed: u64,
    pub radius: f64,
}

fn gaussian_unit<R: Rng>(rng: &mut R, d: usize) -> UnitVector {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return UnitVector::new(g.iter().map(|x| (x / n) as f32).collect()).expect("nonzero");
        }
    }
}

/// Point at distance exactly `r` from `p` along a uniform tangent direction.
fn displace<R: Rng>(rng: &mut R, p: &[f32], r: f64) -> UnitVector {
    let alpha = 1.0 - r * r / 2.0;
    let beta = (r * r - r.powi(4) / 4.0).max(0.0).sqrt();
    loop {
        let mut t: Vec<f64> = (0..p.len()).map(|_| rng.sample(StandardNormal)).collect();
        let proj: f64 = t.iter().zip(p).map(|(a, &b)| a * b as f64).sum();
        for (a, &b) in t.iter_mut().zip(p) {
            *a -= proj * b as f64;
        }
        let n = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let q = p
                .iter()
                .zip(&t)
                .map(|(&a, &b)| (alpha * a as f64 + beta * b / n) as f32)
                .collect();
            return UnitVector::new(q).expect("nonzero");
        }
    }
}

/// `n` uniform points on the sphere and `num_queries` queries, each at
/// distance `r` from a random data point. Ground truth is recomputed by a
/// linear scan.
pub fn generate_random_instance(n: usize, d: usize, r: f64, num_queries: usize, seed: u64) -> Result<Instance> {
    if !(r > 0.0 && r < 2.0) {
        return Err(Error::invalid(format!("distance R = {r} must lie in (0, 2)")));
    }
    if n == 0 || d == 0 {
        return Err(Error::invalid("need n ≥ 1 and d ≥ 1"));
    }
    let mut rng = stream_rng(seed, Domain::Instance, 0, 0, 0);
    let points: Vec<UnitVector> = (0..n).map(|_| gaussian_unit(&mut rng, d)).collect();
    let points = DenseDataset::from_unit_vectors(&points)?;

    let mut rng = stream_rng(seed, Domain::Instance, 1, 0, 0);
    let mut planted = Vec::with_capacity(num_queries);
    let mut queries = Vec::with_capacity(num_queries);
    for _ in 0..num_queries {
        let i = rng.random_range(0..n);
        planted.push(i);
        queries.push(displace(&mut rng, points.row(i), r));
    }
    let points = Dataset::Dense(points);
    let queries = if queries.is_empty() {
        Dataset::Dense(DenseDataset::empty(d))
    } else {
        Dataset::Dense(DenseDataset::from_unit_vectors(&queries)?)
    };
    let ground_truth = brute_force_ground_truth(&points, &queries)?;
    Ok(Instance {
        points,
        queries,
        ground_truth,
        planted,
        seed,
        radius: r,
    })
}

/// Exact nearest neighbor of every query; ties go to the lowest id.
pub fn brute_force_ground_truth(points: &Dataset, queries: &Dataset) -> Result<Vec<Neighbor>> {
    (0..queries.len())
        .into_par_iter()
        .map(|j| nearest(points, queries.point(j)))
        .collect()
}

fn nearest(points: &Dataset, q: PointRef<'_>) -> Result<Neighbor> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut best = Neighbor {
        id: 0,
        distance: f64::INFINITY,
    };
    for i in 0..points.len() {
        let distance = points.distance(i, q)?;
        if distance < best.distance {
            best = Neighbor { id: i, distance };
        }
    }
    Ok(best)
}

/// Indices of the queries whose nearest-neighbor inner product lies in
/// `[lo, hi]`.
pub fn select_queries_by_ip_range(points: &Dataset, queries: &Dataset, lo: f64, hi: f64) -> Result<Vec<usize>> {
    if lo >= hi {
        return Err(Error::invalid(format!("empty inner-product range [{lo}, {hi}]")));
    }
    let best: Vec<f64> = (0..queries.len())
        .into_par_iter()
        .map(|j| {
            let q = queries.point(j);
            (0..points.len()).try_fold(f64::NEG_INFINITY, |m, i| Ok(m.max(points.inner_product(i, q)?)))
        })
        .collect::<Result<_>>()?;
    Ok(best
        .into_iter()
        .enumerate()
        .filter(|&(_, ip)| ip >= lo && ip <= hi)
        .map(|(j, _)| j)
        .collect())
}

fn malformed(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Reads a dense binary file: per record a little-endian `i32` dimension
/// followed by that many little-endian `f32`. Values are returned unchanged.
pub fn load_dense(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_dense(&bytes, path)
}

fn parse_dense(bytes: &[u8], path: &Path) -> Result<Vec<Vec<f32>>> {
    let mut out = Vec::new();
    let mut pos = 0;
    let mut dim = None;
    while pos < bytes.len() {
        let header: [u8; 4] = bytes
            .get(pos..pos + 4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| malformed(path, pos, "truncated record header"))?;
        let d = i32::from_le_bytes(header);
        if d <= 0 {
            return Err(malformed(path, pos, format!("invalid dimension {d}")));
        }
        let d = d as usize;
        if dim.is_some_and(|prev| prev != d) {
            return Err(malformed(path, pos, format!("dimension {d} differs from {}", dim.unwrap())));
        }
        dim = Some(d);
        let body = bytes
            .get(pos + 4..pos + 4 + 4 * d)
            .ok_or_else(|| malformed(path, pos, format!("truncated record of dimension {d}")))?;
        out.push(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        );
        pos += 4 + 4 * d;
    }
    Ok(out)
}

/// Reads a dense file and normalizes every record.
pub fn load_dense_dataset(path: impl AsRef<Path>) -> Result<DenseDataset> {
    DenseDataset::from_rows(&load_dense(path)?)
}

pub fn write_dense<'a>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = &'a [f32]>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    for row in rows {
        let d = i32::try_from(row.len()).map_err(|_| Error::invalid("record dimension exceeds i32"))?;
        bytes.extend_from_slice(&d.to_le_bytes());
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses one document per line of `index:value` pairs (0-based, strictly
/// increasing). With `raw_counts` the values are term counts and are
/// reweighted as `tf · ln(n_docs / df)`. Every document is L2-normalized.
///
/// The ambient dimension is one past the largest index seen, or
/// `ambient_dim` when given.
pub fn parse_sparse_tfidf(
    text: &str,
    raw_counts: bool,
    ambient_dim: Option<usize>,
    path: &Path,
) -> Result<Vec<SparseVector>> {
    let mut docs: Vec<(usize, Vec<(u32, f32)>)> = Vec::new();
    let mut max_index: Option<u32> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let mut entries = Vec::new();
        for token in line.split_whitespace() {
            let tok_off = start + (token.as_ptr() as usize - line.as_ptr() as usize);
            let (i, v) = token
                .split_once(':')
                .ok_or_else(|| malformed(path, tok_off, format!("expected index:value, got {token:?}")))?;
            let i: u32 = i
                .parse()
                .map_err(|_| malformed(path, tok_off, format!("bad index {i:?}")))?;
            let v: f32 = if raw_counts {
                v.parse::<u32>()
                    .map_err(|_| malformed(path, tok_off, format!("bad term count {v:?}")))? as f32
            } else {
                v.parse()
                    .ok()
                    .filter(|x: &f32| x.is_finite())
                    .ok_or_else(|| malformed(path, tok_off, format!("bad value {v:?}")))?
            };
            if entries.last().is_some_and(|&(prev, _)| prev >= i) {
                return Err(malformed(path, tok_off, "indices must be strictly increasing"));
            }
            max_index = max_index.max(Some(i));
            entries.push((i, v));
        }
        docs.push((start, entries));
    }
    let dim = match (ambient_dim, max_index) {
        (Some(d), Some(m)) if (m as usize) >= d => {
            return Err(Error::IndexOutOfRange {
                index: m as usize,
                dim: d,
            })
        }
        (Some(d), _) => d,
        (None, Some(m)) => m as usize + 1,
        (None, None) => return Ok(Vec::new()),
    };

    if raw_counts {
        let n_docs = docs.len() as f64;
        let mut df: HashMap<u32, u32> = HashMap::new();
        for (_, entries) in &docs {
            for &(i, c) in entries {
                if c > 0.0 {
                    *df.entry(i).or_default() += 1;
                }
            }
        }
        for (_, entries) in &mut docs {
            for (i, v) in entries.iter_mut() {
                if *v > 0.0 {
                    *v = (*v as f64 * (n_docs / df[i] as f64).ln()) as f32;
                }
            }
        }
    }

    docs.into_iter()
        .map(|(off, entries)| {
            SparseVector::new(dim, entries)?
                .normalized()
                .map_err(|_| malformed(path, off, "document has no nonzero weight"))
        })
        .collect()
}

pub fn load_sparse_tfidf(path: impl AsRef<Path>, raw_counts: bool) -> Result<Vec<SparseVector>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sparse_tfidf(&text, raw_counts, None, path)
}

pub fn write_sparse(path: impl AsRef<Path>, docs: &[SparseVector]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for doc in docs {
        let line: Vec<String> = doc.iter().map(|(i, v)| format!("{i}:{v}")).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Ground-truth file: per query a little-endian `u32` id and `f32` distance.
pub fn write_ground_truth(path: impl AsRef<Path>, truth: &[Neighbor]) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(8 * truth.len());
    for t in truth {
        let id = u32::try_from(t.id).map_err(|_| Error::invalid("id exceeds u32"))?;
        bytes.extend_from_slice(&id.to_le_bytes());
        bytes.extend_from_slice(&(t.distance as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<Neighbor>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(malformed(path, bytes.len() - bytes.len() % 8, "truncated ground-truth record"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| Neighbor {
            id: u32::from_le_bytes(c[..4].try_into().expect("4 bytes")) as usize,
            distance: f32::from_le_bytes(c[4..].try_into().expect("4 bytes")) as f64,
        })
        .collect())
}

/// Text manifest tying the files of an instance together. Paths are relative
/// to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub data: PathBuf,
    pub queries: PathBuf,
    pub ground_truth: PathBuf,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Writes data, queries, ground truth and a manifest into `dir`; returns the
/// manifest path.
pub fn write_instance(dir: impl AsRef<Path>, instance: &Instance) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (Dataset::Dense(points), Dataset::Dense(queries)) = (&instance.points, &instance.queries) else {
        return Err(Error::invalid("only dense instances can be written"));
    };
    let manifest = InstanceManifest {
        data: "data.fvecs".into(),
        queries: "queries.fvecs".into(),
        ground_truth: "ground_truth.bin".into(),
        seed: instance.seed,
        n: points.len(),
        d: points.dim(),
        r: instance.radius,
    };
    write_dense(dir.join(&manifest.data), points.rows())?;
    write_dense(dir.join(&manifest.queries), queries.rows())?;
    write_ground_truth(dir.join(&manifest.ground_truth), &instance.ground_truth)?;
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).expect("manifest is serializable");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<InstanceManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| malformed(path, e.span().map_or(0, |s| s.start), e.message()))
}

/// Loads an instance from its manifest. Stored vectors are used as is.
pub fn load_instance(manifest_path: impl AsRef<Path>) -> Result<Instance> {
    let manifest_path = manifest_path.as_ref();
    let m = load_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let points = DenseDataset::from_rows(&load_dense(dir.join(&m.data))?)?;
    let queries = load_dense(dir.join(&m.queries))?;
    let queries = if queries.is_empty() {
        DenseDataset::empty(m.d)
    } else {
        DenseDataset::from_rows(&queries)?
    };
    let ground_truth = load_ground_truth(dir.join(&m.ground_truth))?;
    if points.len() != m.n || points.dim() != m.d {
        return Err(malformed(manifest_path, 0, "n or d disagrees with the data file"));
    }
    if ground_truth.len() != queries.len() {
        return Err(malformed(manifest_path, 0, "ground truth and query counts differ"));
    }
    Ok(Instance {
        points: Dataset::Dense(points),
        queries: Dataset::Dense(queries),
        ground_truth,
        planted: Vec::new(),
        seed: m.seed,
        radius: m.r,
    })
}
