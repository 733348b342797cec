//! `L` hash tables of `k` concatenated hash functions over a point set.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash_families::{
    check_key_width, concat_key_unchecked, cp_hash_rotated, cp_range, CrossPolytopeParams, HashKey,
    HyperplaneParams,
};
use crate::multiprobe::{hyperplane_bit_scores, probe_scores, ProbeCandidate, ProbeScoreList, ProbeSequence};
use crate::rotations::{padded_dim, FeatureHashMap, GaussianRotation, PseudoRotation, Rotation};
use crate::vectors::{Dataset, PointRef};

/// Tables used for random-data experiments unless configured otherwise.
pub const DEFAULT_NUM_TABLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    CrossPolytope,
    Hyperplane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationKind {
    Pseudo,
    Gaussian,
}

/// Parameters of an [`LshIndex`].
///
/// For the hyperplane family `hashes_per_table` is the number of bits per
/// table and the cross-polytope fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub num_tables: usize,
    pub hashes_per_table: usize,
    /// Cross-polytope dimension of every hash but the last; defaults to the
    /// full working dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp_dim: Option<usize>,
    /// Cross-polytope dimension of the last hash ("partial" polytope).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_cp_dim: Option<usize>,
    pub family: Family,
    pub rotation: RotationKind,
    pub collapse_signs: bool,
    /// Sparse inputs are feature-hashed to this dimension before rotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_hash_dim: Option<usize>,
    pub seed: u64,
}

impl IndexConfig {
    pub fn cross_polytope(num_tables: usize, hashes_per_table: usize, seed: u64) -> Self {
        Self {
            num_tables,
            hashes_per_table,
            cp_dim: None,
            last_cp_dim: None,
            family: Family::CrossPolytope,
            rotation: RotationKind::Pseudo,
            collapse_signs: false,
            feature_hash_dim: None,
            seed,
        }
    }

    pub fn hyperplane(num_tables: usize, bits: usize, seed: u64) -> Self {
        Self {
            family: Family::Hyperplane,
            ..Self::cross_polytope(num_tables, bits, seed)
        }
    }

    pub fn with_last_cp_dim(mut self, d: usize) -> Self {
        self.last_cp_dim = Some(d);
        self
    }

    pub fn with_collapse_signs(mut self, collapse: bool) -> Self {
        self.collapse_signs = collapse;
        self
    }

    pub fn with_rotation(mut self, rotation: RotationKind) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_feature_hash_dim(mut self, d: usize) -> Self {
        self.feature_hash_dim = Some(d);
        self
    }

    /// Serializes the configuration (including the seed) as a TOML manifest.
    /// Buckets are not stored; they are rebuilt deterministically.
    pub fn to_manifest(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("bad index manifest: {e}")))
    }

    /// Dimension rotations operate in for a dataset of dimension `data_dim`.
    pub fn working_dim(&self, data_dim: usize, sparse: bool) -> usize {
        match (sparse, self.feature_hash_dim) {
            (true, Some(fh)) => padded_dim(fh),
            _ => padded_dim(data_dim),
        }
    }

    /// Per-hash cross-polytope dimensions for a given working dimension.
    pub fn cp_dims(&self, working_dim: usize) -> Vec<usize> {
        let full = self.cp_dim.unwrap_or(working_dim);
        let mut dims = vec![full; self.hashes_per_table];
        if let (Some(last), Some(slot)) = (self.last_cp_dim, dims.last_mut()) {
            *slot = last;
        }
        dims
    }

    /// Hash ranges of one table.
    pub fn ranges(&self, working_dim: usize) -> Vec<u64> {
        match self.family {
            Family::Hyperplane => vec![2; self.hashes_per_table],
            Family::CrossPolytope => self
                .cp_dims(working_dim)
                .into_iter()
                .map(|d| cp_range(d, self.collapse_signs))
                .collect(),
        }
    }

    pub fn validate(&self, data_dim: usize, sparse: bool) -> Result<()> {
        if self.num_tables == 0 {
            return Err(Error::invalid("need at least one table"));
        }
        if self.hashes_per_table == 0 {
            return Err(Error::invalid("need at least one hash per table"));
        }
        if self.feature_hash_dim == Some(0) {
            return Err(Error::invalid("feature hash dimension must be positive"));
        }
        let wd = self.working_dim(data_dim, sparse);
        if self.family == Family::CrossPolytope {
            for d in self.cp_dims(wd) {
                if d == 0 || d > wd {
                    return Err(Error::invalid(format!(
                        "cross-polytope dimension {d} must be in [1, {wd}]"
                    )));
                }
            }
        } else if self.hashes_per_table > 64 {
            return Err(Error::KeyOverflow);
        }
        check_key_width(&self.ranges(wd))
    }
}

/// Hash functions of one table.
#[derive(Debug, Clone)]
enum TableHasher {
    CrossPolytope(Vec<CrossPolytopeParams>),
    Hyperplane(HyperplaneParams),
}

#[derive(Debug, Clone, Default)]
struct Table {
    buckets: HashMap<u64, (u32, u32)>,
    ids: Vec<u32>,
}

impl Table {
    fn bucket(&self, key: u64) -> &[u32] {
        match self.buckets.get(&key) {
            Some(&(start, len)) => &self.ids[start as usize..(start + len) as usize],
            None => &[],
        }
    }
}

/// Per-query statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueryStats {
    /// Distinct candidate ids whose distance was computed.
    pub candidates_examined: usize,
    pub probes_used: usize,
    pub hash_time: Duration,
    pub distance_time: Duration,
    pub total_time: Duration,
}

/// Reusable per-thread buffers. Queries running concurrently each need their
/// own.
#[derive(Debug, Clone, Default)]
pub struct QueryScratch {
    pre: Vec<f32>,
    rotated: Vec<f32>,
    projections: Vec<f64>,
    values: Vec<u64>,
    marks: Vec<u32>,
    stamp: u32,
}

/// Nearest candidate found by a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Locality-sensitive hashing index over an immutable dataset.
#[derive(Debug, Clone)]
pub struct LshIndex {
    config: IndexConfig,
    data: Arc<Dataset>,
    working_dim: usize,
    ranges: Vec<u64>,
    feature_hash: Option<FeatureHashMap>,
    hashers: Vec<TableHasher>,
    tables: Vec<Table>,
}

impl LshIndex {
    /// Builds every table; deterministic given `(data, config)`.
    pub fn build(data: Arc<Dataset>, config: IndexConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.len() > u32::MAX as usize {
            return Err(Error::invalid("at most 2^32 − 1 points are supported"));
        }
        let sparse = matches!(*data, Dataset::Sparse(_));
        let dim = data.dim();
        config.validate(dim, sparse)?;
        let working_dim = config.working_dim(dim, sparse);
        let ranges = config.ranges(working_dim);
        let feature_hash = match (sparse, config.feature_hash_dim, config.family) {
            (true, Some(fh), Family::CrossPolytope) => {
                Some(FeatureHashMap::from_seed(dim, fh, config.seed, 0)?)
            }
            _ => None,
        };
        let hashers = (0..config.num_tables)
            .map(|t| make_hasher(&config, t, dim, working_dim))
            .collect::<Result<Vec<_>>>()?;
        let mut index = Self {
            config,
            data,
            working_dim,
            ranges,
            feature_hash,
            hashers,
            tables: Vec::new(),
        };
        index.tables = index.fill_tables()?;
        Ok(index)
    }

    fn fill_tables(&self) -> Result<Vec<Table>> {
        let n = self.data.len();
        let l = self.config.num_tables;
        // keys[i * L + t]
        let keys: Vec<u64> = (0..n)
            .into_par_iter()
            .map_init(QueryScratch::default, |scratch, i| {
                self.prepare(self.data.point(i), scratch)?;
                (0..l)
                    .map(|t| self.base_key(t, scratch).map(|k| k.0))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        let tables = (0..l)
            .into_par_iter()
            .map(|t| {
                let mut pairs: Vec<(u64, u32)> = (0..n).map(|i| (keys[i * l + t], i as u32)).collect();
                pairs.sort_unstable();
                let mut table = Table {
                    buckets: HashMap::new(),
                    ids: Vec::with_capacity(n),
                };
                for (pos, &(key, id)) in pairs.iter().enumerate() {
                    table.ids.push(id);
                    table
                        .buckets
                        .entry(key)
                        .and_modify(|e| e.1 += 1)
                        .or_insert((pos as u32, 1));
                }
                table
            })
            .collect();
        Ok(tables)
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn working_dim(&self) -> usize {
        self.working_dim
    }

    /// Hash ranges of each table's `k` hash functions.
    pub fn ranges(&self) -> &[u64] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_buckets(&self, table: usize) -> usize {
        self.tables[table].buckets.len()
    }

    /// Ids stored under `key` in `table`, ascending.
    pub fn bucket(&self, table: usize, key: HashKey) -> &[u32] {
        self.tables[table].bucket(key.0)
    }

    /// Every `(key, ids)` pair of one table.
    pub fn buckets(&self, table: usize) -> impl Iterator<Item = (HashKey, &[u32])> + '_ {
        let t = &self.tables[table];
        t.buckets
            .iter()
            .map(move |(&k, &(s, l))| (HashKey(k), &t.ids[s as usize..(s + l) as usize]))
    }

    /// Bytes used by bucket ids and bucket directory entries.
    pub fn index_bytes(&self) -> usize {
        self.tables
            .iter()
            .map(|t| {
                t.ids.len() * std::mem::size_of::<u32>()
                    + t.buckets.len() * (std::mem::size_of::<u64>() + 2 * std::mem::size_of::<u32>())
            })
            .sum()
    }

    /// Total probe space of one query: `L · Π ranges`.
    pub fn probe_space_size(&self) -> u128 {
        self.ranges.iter().map(|&r| r as u128).product::<u128>() * self.config.num_tables as u128
    }

    /// Maps a point into the working space (padding or feature hashing).
    fn prepare(&self, point: PointRef<'_>, scratch: &mut QueryScratch) -> Result<()> {
        let expected = self.data.dim();
        if point.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: point.dim(),
            });
        }
        match self.config.family {
            Family::Hyperplane => {
                let k = self.config.hashes_per_table;
                scratch.projections.resize(k * self.config.num_tables, 0.0);
                for (t, h) in self.hashers.iter().enumerate() {
                    if let TableHasher::Hyperplane(hp) = h {
                        hp.projections(point, &mut scratch.projections[t * k..(t + 1) * k])?;
                    }
                }
            }
            Family::CrossPolytope => {
                let wd = self.working_dim;
                scratch.pre.resize(wd, 0.0);
                scratch.rotated.resize(wd, 0.0);
                match (point, &self.feature_hash) {
                    (PointRef::Dense(v), _) => {
                        scratch.pre[..v.len()].copy_from_slice(v);
                        scratch.pre[v.len()..].fill(0.0);
                    }
                    (PointRef::Sparse(s), Some(fh)) => {
                        scratch.pre.fill(0.0);
                        fh.apply_into(s, &mut scratch.pre[..fh.out_dim()])?;
                    }
                    (PointRef::Sparse(s), None) => {
                        scratch.pre.fill(0.0);
                        for (j, v) in s.iter() {
                            scratch.pre[j] = v;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn base_key(&self, table: usize, scratch: &mut QueryScratch) -> Result<HashKey> {
        let k = self.config.hashes_per_table;
        match &self.hashers[table] {
            TableHasher::Hyperplane(_) => {
                let proj = &scratch.projections[table * k..(table + 1) * k];
                Ok(concat_key_unchecked(proj.iter().map(|&p| (p >= 0.0) as u64), &self.ranges))
            }
            TableHasher::CrossPolytope(hashes) => {
                scratch.values.clear();
                for h in hashes {
                    h.rotation().rotate(&scratch.pre, &mut scratch.rotated)?;
                    scratch
                        .values
                        .push(cp_hash_rotated(&scratch.rotated, h.cp_dim(), h.collapse_signs()));
                }
                Ok(concat_key_unchecked(scratch.values.iter().copied(), &self.ranges))
            }
        }
    }

    /// Bucket keys of `point` in every table.
    pub fn hash_point(&self, point: PointRef<'_>) -> Result<Vec<HashKey>> {
        let mut scratch = QueryScratch::default();
        self.prepare(point, &mut scratch)?;
        (0..self.config.num_tables)
            .map(|t| self.base_key(t, &mut scratch))
            .collect()
    }

    /// Per-table, per-hash probe score lists of `point`.
    pub fn probe_lists(&self, point: PointRef<'_>) -> Result<Vec<Vec<ProbeScoreList>>> {
        let mut scratch = QueryScratch::default();
        self.prepare(point, &mut scratch)?;
        self.probe_lists_prepared(&mut scratch)
    }

    fn probe_lists_prepared(&self, scratch: &mut QueryScratch) -> Result<Vec<Vec<ProbeScoreList>>> {
        let k = self.config.hashes_per_table;
        self.hashers
            .iter()
            .enumerate()
            .map(|(t, h)| match h {
                TableHasher::Hyperplane(_) => Ok(scratch.projections[t * k..(t + 1) * k]
                    .iter()
                    .map(|&p| hyperplane_bit_scores(p))
                    .collect()),
                TableHasher::CrossPolytope(hashes) => hashes
                    .iter()
                    .map(|h| {
                        h.rotation().rotate(&scratch.pre, &mut scratch.rotated)?;
                        probe_scores(&scratch.rotated, h.cp_dim(), h.collapse_signs())
                    })
                    .collect(),
            })
            .collect()
    }

    /// The first `m` probes of the query's global probing sequence.
    pub fn probe_trace(&self, point: PointRef<'_>, m: usize) -> Result<Vec<ProbeCandidate>> {
        crate::multiprobe::probe_sequence(self.probe_lists(point)?, m)
    }

    /// Key of a probe candidate in its table.
    pub fn probe_key(&self, candidate: &ProbeCandidate) -> HashKey {
        concat_key_unchecked(candidate.probe_values.iter().copied(), &self.ranges)
    }

    /// Distinct ids from the first `m` probes, in first-seen order.
    ///
    /// `m = L` probes exactly the query's own bucket in each table.
    pub fn candidates(&self, q: PointRef<'_>, m: usize) -> Result<Vec<usize>> {
        let mut scratch = QueryScratch::default();
        let mut out = Vec::new();
        self.collect_candidates(q, m, &mut scratch, &mut out)?;
        Ok(out)
    }

    fn collect_candidates(
        &self,
        q: PointRef<'_>,
        m: usize,
        scratch: &mut QueryScratch,
        out: &mut Vec<usize>,
    ) -> Result<usize> {
        let l = self.config.num_tables;
        if m < l {
            return Err(Error::invalid(format!(
                "number of probes {m} must be at least the number of tables {l}"
            )));
        }
        self.prepare(q, scratch)?;
        let n = self.data.len();
        if scratch.marks.len() != n {
            scratch.marks = vec![0; n];
            scratch.stamp = 0;
        }
        scratch.stamp = scratch.stamp.wrapping_add(1);
        if scratch.stamp == 0 {
            scratch.marks.fill(0);
            scratch.stamp = 1;
        }
        let stamp = scratch.stamp;
        let mut push_bucket = |ids: &[u32], marks: &mut [u32]| {
            for &id in ids {
                let slot = &mut marks[id as usize];
                if *slot != stamp {
                    *slot = stamp;
                    out.push(id as usize);
                }
            }
        };
        if m == l {
            for t in 0..l {
                let key = self.base_key(t, scratch)?;
                push_bucket(self.tables[t].bucket(key.0), &mut scratch.marks);
            }
            return Ok(l);
        }
        let lists = self.probe_lists_prepared(scratch)?;
        let mut used = 0;
        for cand in ProbeSequence::new(lists)?.take(m) {
            let key = self.probe_key(&cand);
            push_bucket(self.tables[cand.table].bucket(key.0), &mut scratch.marks);
            used += 1;
        }
        Ok(used)
    }

    /// Nearest point among the candidates of the first `m` probes, by exact
    /// distance. Returns `None` when no probed bucket is occupied.
    pub fn query(&self, q: PointRef<'_>, m: usize) -> Result<(Option<Neighbor>, QueryStats)> {
        let mut scratch = QueryScratch::default();
        self.query_with(q, m, &mut scratch)
    }

    pub fn query_with(
        &self,
        q: PointRef<'_>,
        m: usize,
        scratch: &mut QueryScratch,
    ) -> Result<(Option<Neighbor>, QueryStats)> {
        let start = Instant::now();
        let mut cands = Vec::new();
        let probes_used = self.collect_candidates(q, m, scratch, &mut cands)?;
        let hashed = Instant::now();
        let mut best: Option<Neighbor> = None;
        for &id in &cands {
            let distance = self.data.distance(id, q)?;
            let better = match best {
                None => true,
                Some(b) => distance < b.distance || (distance == b.distance && id < b.id),
            };
            if better {
                best = Some(Neighbor { id, distance });
            }
        }
        let end = Instant::now();
        Ok((
            best,
            QueryStats {
                candidates_examined: cands.len(),
                probes_used,
                hash_time: hashed - start,
                distance_time: end - hashed,
                total_time: end - start,
            },
        ))
    }
}

fn make_hasher(config: &IndexConfig, table: usize, data_dim: usize, working_dim: usize) -> Result<TableHasher> {
    let t = table as u64;
    match config.family {
        Family::Hyperplane => Ok(TableHasher::Hyperplane(HyperplaneParams::from_seed(
            data_dim,
            config.hashes_per_table,
            config.seed,
            t,
        )?)),
        Family::CrossPolytope => config
            .cp_dims(working_dim)
            .into_iter()
            .enumerate()
            .map(|(i, cp_dim)| {
                let rotation = match config.rotation {
                    RotationKind::Pseudo => {
                        Rotation::Pseudo(PseudoRotation::from_seed(working_dim, config.seed, t, i as u64)?)
                    }
                    RotationKind::Gaussian => {
                        Rotation::Gaussian(GaussianRotation::from_seed(working_dim, config.seed, t, i as u64)?)
                    }
                };
                CrossPolytopeParams::new(rotation, cp_dim, config.collapse_signs)
            })
            .collect::<Result<Vec<_>>>()
            .map(TableHasher::CrossPolytope),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::generate_random_instance;
    use crate::vectors::{DenseDataset, SparseVector, UnitVector};

    fn small_data(n: usize, d: usize, seed: u64) -> Arc<Dataset> {
        let inst = generate_random_instance(n, d, 0.5, 1, seed).unwrap();
        Arc::new(inst.points)
    }

    #[test]
    fn single_point_index() {
        let data = Arc::new(Dataset::Dense(
            DenseDataset::from_unit_vectors(&[UnitVector::basis(8, 3).unwrap()]).unwrap(),
        ));
        let idx = LshIndex::build(data, IndexConfig::cross_polytope(3, 2, 1)).unwrap();
        for t in 0..3 {
            assert_eq!(idx.num_buckets(t), 1);
            assert_eq!(idx.buckets(t).next().unwrap().1, &[0]);
        }
    }

    #[test]
    fn every_id_once_per_table_and_deterministic() {
        let data = small_data(500, 20, 1);
        let cfg = IndexConfig::cross_polytope(4, 2, 9).with_last_cp_dim(4);
        let a = LshIndex::build(data.clone(), cfg.clone()).unwrap();
        let b = LshIndex::build(data, cfg).unwrap();
        for t in 0..4 {
            let mut ids: Vec<u32> = a.buckets(t).flat_map(|(_, ids)| ids.iter().copied()).collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..500).collect::<Vec<u32>>());
            let mut ba: Vec<_> = a.buckets(t).map(|(k, v)| (k, v.to_vec())).collect();
            let mut bb: Vec<_> = b.buckets(t).map(|(k, v)| (k, v.to_vec())).collect();
            ba.sort();
            bb.sort();
            assert_eq!(ba, bb);
        }
    }

    #[test]
    fn key_overflow_rejected() {
        let data = small_data(10, 128, 2);
        let err = LshIndex::build(data.clone(), IndexConfig::cross_polytope(1, 9, 0)).unwrap_err();
        assert!(matches!(err, Error::KeyOverflow));
        assert!(LshIndex::build(data, IndexConfig::hyperplane(1, 65, 0)).is_err());
    }

    #[test]
    fn inconsistent_query_dimension() {
        let idx = LshIndex::build(small_data(10, 16, 3), IndexConfig::cross_polytope(2, 1, 0)).unwrap();
        assert!(idx.query(PointRef::Dense(&[1.0; 15]), 2).is_err());
        assert!(idx.query(PointRef::Dense(&[0.25; 16]), 1).is_err());
    }

    #[test]
    fn self_query_finds_point() {
        let data = small_data(300, 32, 4);
        for cfg in [
            IndexConfig::cross_polytope(3, 2, 5),
            IndexConfig::cross_polytope(3, 2, 5).with_rotation(RotationKind::Gaussian),
            IndexConfig::hyperplane(3, 8, 5),
        ] {
            let idx = LshIndex::build(data.clone(), cfg).unwrap();
            for i in [0, 17, 299] {
                let (best, stats) = idx.query(data.point(i), 3).unwrap();
                let best = best.unwrap();
                assert_eq!(best.distance, 0.0);
                assert_eq!(best.id, i);
                assert!(stats.candidates_examined >= 1 && stats.candidates_examined <= 300);
                assert_eq!(stats.probes_used, 3);
            }
        }
    }

    #[test]
    fn candidates_grow_with_probes() {
        let data = small_data(400, 16, 6);
        let idx = LshIndex::build(data.clone(), IndexConfig::cross_polytope(2, 2, 7).with_collapse_signs(true)).unwrap();
        let q = vec![0.25f32; 16];
        let mut prev: Vec<usize> = Vec::new();
        for m in 2..60 {
            let c = idx.candidates(PointRef::Dense(&q), m).unwrap();
            assert!(prev.iter().all(|id| c.contains(id)));
            prev = c;
        }
        // exhaustive probing reaches every point
        let all = idx.candidates(PointRef::Dense(&q), usize::MAX).unwrap();
        assert_eq!(all.len(), 400);
    }

    #[test]
    fn returned_point_is_nearest_candidate() {
        let data = small_data(800, 24, 8);
        let idx = LshIndex::build(data.clone(), IndexConfig::cross_polytope(4, 1, 3)).unwrap();
        let inst = generate_random_instance(1, 24, 0.3, 30, 99).unwrap();
        for q in inst.queries.points() {
            let (best, _) = idx.query(q, 20).unwrap();
            let cands = idx.candidates(q, 20).unwrap();
            let scan = cands
                .iter()
                .map(|&i| (data.distance(i, q).unwrap(), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(best.map(|b| (b.distance, b.id)), scan);
        }
    }

    #[test]
    fn sparse_index_with_feature_hashing() {
        let docs: Vec<SparseVector> = (0..50u32)
            .map(|i| {
                SparseVector::new(1000, [(i, 1.0), (i + 100, 0.5), (999, 0.1)]).unwrap().normalized().unwrap()
            })
            .collect();
        let data = Arc::new(Dataset::sparse(docs.clone()).unwrap());
        for cfg in [
            IndexConfig::cross_polytope(3, 1, 1).with_feature_hash_dim(64),
            IndexConfig::hyperplane(3, 6, 1),
        ] {
            let idx = LshIndex::build(data.clone(), cfg).unwrap();
            let (best, _) = idx.query(PointRef::Sparse(&docs[7]), 3).unwrap();
            assert_eq!(best.unwrap().id, 7);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let cfg = IndexConfig::cross_polytope(10, 3, 77)
            .with_last_cp_dim(16)
            .with_collapse_signs(true)
            .with_feature_hash_dim(512);
        let text = cfg.to_manifest();
        assert_eq!(IndexConfig::from_manifest(&text).unwrap(), cfg);
        assert!(IndexConfig::from_manifest("num_tables = 'x'").is_err());
    }
}
