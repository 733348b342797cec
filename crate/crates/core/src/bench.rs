//! Grid search over index parameters at a recall target, curve emission and
//! probe traces.

use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{cp_tradeoff_rho, lower_bound_rho, TradeoffPoint};
use crate::error::{Error, Result};
use crate::index::{Family, IndexConfig, LshIndex, Neighbor, QueryScratch, RotationKind};
use crate::rotations::padded_dim;
use crate::vectors::{Dataset, PointRef};

/// Success probability the grid search tunes for.
pub const DEFAULT_RECALL_TARGET: f64 = 0.9;

/// Bytes per stored id and per bucket directory entry, used to derive `L`
/// from the memory budget.
const ENTRY_BYTES: usize = 4;
const DIRECTORY_BYTES: usize = 16;

/// Number of tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TablesRule {
    Fixed(usize),
    /// As many tables as fit when index entries may use at most as many bytes
    /// as the dataset itself.
    MemoryDerived,
}

impl TablesRule {
    pub fn resolve(&self, data: &Dataset) -> Result<usize> {
        match *self {
            TablesRule::Fixed(0) => Err(Error::invalid("need at least one table")),
            TablesRule::Fixed(l) => Ok(l),
            TablesRule::MemoryDerived => {
                let per_table = data.len() * (ENTRY_BYTES + DIRECTORY_BYTES);
                let l = data.storage_bytes() / per_table.max(1);
                if l == 0 {
                    Err(Error::invalid("dataset too small to afford a single table"))
                } else {
                    Ok(l)
                }
            }
        }
    }
}

/// Probe counts tried for each `(k, d′)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSchedule {
    /// Exactly these values of `m`.
    Fixed(Vec<usize>),
    /// `m = L, 2L, 4L, …`, stopping at the first `m` that reaches the recall
    /// target, once mean candidates exceed `max_candidate_fraction · n`, or
    /// at `max_probes`.
    Doubling {
        max_candidate_fraction: f64,
        max_probes: usize,
    },
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        ProbeSchedule::Doubling {
            max_candidate_fraction: 0.25,
            max_probes: 1 << 16,
        }
    }
}

/// Parameter space of one grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub family: Family,
    pub rotation: RotationKind,
    /// Hashes (hyperplane: bits) per table.
    pub k_values: Vec<usize>,
    /// Dimensions of the last cross-polytope; `None` keeps it full.
    pub last_cp_dims: Vec<Option<usize>>,
    pub probes: ProbeSchedule,
    pub tables: TablesRule,
    pub collapse_signs: bool,
    pub feature_hash_dim: Option<usize>,
    pub seed: u64,
}

impl GridSpec {
    /// `k ∈ {1, …, 6}`, last `d′ ∈ {1, 2, 4, …, padded d}`, doubling probes.
    pub fn default_cross_polytope(dim: usize, tables: TablesRule, seed: u64) -> Self {
        let top = padded_dim(dim);
        let last_cp_dims = std::iter::successors(Some(1usize), |d| Some(d * 2))
            .take_while(|&d| d <= top)
            .map(Some)
            .collect();
        Self {
            family: Family::CrossPolytope,
            rotation: RotationKind::Pseudo,
            k_values: (1..=6).collect(),
            last_cp_dims,
            probes: ProbeSchedule::default(),
            tables,
            collapse_signs: false,
            feature_hash_dim: None,
            seed,
        }
    }

    /// `k ∈ {2, 4, …, 24}` bits, doubling probes.
    pub fn default_hyperplane(tables: TablesRule, seed: u64) -> Self {
        Self {
            family: Family::Hyperplane,
            rotation: RotationKind::Pseudo,
            k_values: (1..=12).map(|i| 2 * i).collect(),
            last_cp_dims: vec![None],
            probes: ProbeSchedule::default(),
            tables,
            collapse_signs: false,
            feature_hash_dim: None,
            seed,
        }
    }

    /// Every index configuration of the grid (probe counts excluded).
    pub fn configs(&self, data: &Dataset) -> Result<Vec<IndexConfig>> {
        if self.k_values.is_empty() {
            return Err(Error::invalid("grid has no values of k"));
        }
        let l = self.tables.resolve(data)?;
        let last_dims: &[Option<usize>] = match self.family {
            Family::Hyperplane => &[None],
            Family::CrossPolytope if self.last_cp_dims.is_empty() => &[None],
            Family::CrossPolytope => &self.last_cp_dims,
        };
        let sparse = matches!(data, Dataset::Sparse(_));
        let mut out = Vec::new();
        for &k in &self.k_values {
            for &last in last_dims {
                let config = IndexConfig {
                    num_tables: l,
                    hashes_per_table: k,
                    cp_dim: None,
                    last_cp_dim: last,
                    family: self.family,
                    rotation: self.rotation,
                    collapse_signs: self.collapse_signs,
                    feature_hash_dim: self.feature_hash_dim,
                    seed: self.seed,
                };
                // configurations over the key width are skipped, not fatal
                if config.validate(data.dim(), sparse).is_ok() {
                    out.push(config);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::invalid("no grid configuration satisfies the key-width limit"));
        }
        Ok(out)
    }
}

/// What the best configuration minimizes among those reaching the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    QueryTime,
    /// Mean number of candidates; deterministic, so used when timings are
    /// unavailable or must not influence the choice.
    Candidates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub recall_target: f64,
    pub objective: Objective,
    /// Measured passes after one warm-up pass; `0` disables timing.
    pub timing_passes: usize,
    /// Evaluate configurations concurrently. Timings are suppressed.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            recall_target: DEFAULT_RECALL_TARGET,
            objective: Objective::QueryTime,
            timing_passes: 3,
            parallel: false,
        }
    }
}

/// Mean per-query timings of one configuration (medians over passes).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub query: Duration,
    pub hash: Duration,
    pub distance: Duration,
}

/// Results of one `(config, m)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub config: IndexConfig,
    pub probes: usize,
    pub recall: f64,
    pub mean_candidates: f64,
    pub timings: Option<Timings>,
    pub index_bytes: usize,
    pub data_bytes: usize,
}

impl BenchRow {
    pub fn within_memory(&self) -> bool {
        self.index_bytes <= self.data_bytes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Index into `rows`; `None` when nothing reached the target.
    pub best: Option<usize>,
    pub recall_target: f64,
    pub tables_rule: TablesRule,
}

/// Speed-up of a report's best configuration relative to a baseline's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Baseline mean query time over this mean query time, when timed.
    pub speedup: Option<f64>,
    /// Baseline mean candidates over these mean candidates.
    pub candidates_ratio: f64,
}

impl BenchReport {
    pub fn best_row(&self) -> Option<&BenchRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn compare(&self, baseline: &BenchReport) -> Option<Comparison> {
        let (a, b) = (self.best_row()?, baseline.best_row()?);
        let speedup = match (a.timings, b.timings) {
            (Some(ta), Some(tb)) if !ta.query.is_zero() => Some(tb.query.as_secs_f64() / ta.query.as_secs_f64()),
            _ => None,
        };
        Some(Comparison {
            speedup,
            candidates_ratio: b.mean_candidates / a.mean_candidates,
        })
    }

    /// Whether every row with a derived `L` respects the memory budget.
    pub fn memory_rule_holds(&self) -> bool {
        self.tables_rule != TablesRule::MemoryDerived || self.rows.iter().all(BenchRow::within_memory)
    }

    /// Writes one CSV row per configuration; see [`CsvRow`] for columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_reports_csv(&[self], out)
    }
}

/// Writes the rows of several reports into one CSV, each with its own `best`
/// marker.
pub fn write_reports_csv<W: Write>(reports: &[&BenchReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for report in reports {
        for (i, row) in report.rows.iter().enumerate() {
            w.serialize(CsvRow::new(row, report.best == Some(i)))
                .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Stable CSV schema of bench reports. Timing columns are empty when timing
/// is disabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub family: String,
    pub rotation: String,
    pub k: usize,
    pub last_cp_dim: Option<usize>,
    pub num_tables: usize,
    pub probes: usize,
    pub recall: f64,
    pub mean_candidates: f64,
    pub mean_query_us: Option<f64>,
    pub mean_hash_us: Option<f64>,
    pub mean_distance_us: Option<f64>,
    pub index_bytes: usize,
    pub data_bytes: usize,
    pub best: bool,
}

impl CsvRow {
    fn new(row: &BenchRow, best: bool) -> Self {
        let us = |d: Duration| d.as_secs_f64() * 1e6;
        let c = &row.config;
        Self {
            family: match c.family {
                Family::CrossPolytope => "cross-polytope".into(),
                Family::Hyperplane => "hyperplane".into(),
            },
            rotation: match c.rotation {
                RotationKind::Pseudo => "pseudo".into(),
                RotationKind::Gaussian => "gaussian".into(),
            },
            k: c.hashes_per_table,
            last_cp_dim: c.last_cp_dim,
            num_tables: c.num_tables,
            probes: row.probes,
            recall: row.recall,
            mean_candidates: row.mean_candidates,
            mean_query_us: row.timings.map(|t| us(t.query)),
            mean_hash_us: row.timings.map(|t| us(t.hash)),
            mean_distance_us: row.timings.map(|t| us(t.distance)),
            index_bytes: row.index_bytes,
            data_bytes: row.data_bytes,
            best,
        }
    }
}

/// A query set with its exact nearest neighbors.
#[derive(Debug, Clone, Copy)]
pub struct Workload<'a> {
    pub queries: &'a Dataset,
    pub ground_truth: &'a [Neighbor],
}

fn is_hit(found: Option<Neighbor>, truth: &Neighbor) -> bool {
    found.is_some_and(|f| f.id == truth.id || f.distance <= truth.distance + 1e-7)
}

struct Pass {
    hits: usize,
    candidates: usize,
    query: Duration,
    hash: Duration,
    distance: Duration,
}

fn run_pass(index: &LshIndex, work: &Workload<'_>, m: usize) -> Result<Pass> {
    let mut scratch = QueryScratch::default();
    let mut pass = Pass {
        hits: 0,
        candidates: 0,
        query: Duration::ZERO,
        hash: Duration::ZERO,
        distance: Duration::ZERO,
    };
    for (q, truth) in work.queries.points().zip(work.ground_truth) {
        let (found, stats) = index.query_with(q, m, &mut scratch)?;
        pass.hits += is_hit(found, truth) as usize;
        pass.candidates += stats.candidates_examined;
        pass.query += stats.total_time;
        pass.hash += stats.hash_time;
        pass.distance += stats.distance_time;
    }
    Ok(pass)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

/// Evaluates one built index at probe count `m`.
pub fn evaluate(index: &LshIndex, work: &Workload<'_>, m: usize, timing_passes: usize) -> Result<BenchRow> {
    let nq = work.queries.len();
    if nq == 0 || nq != work.ground_truth.len() {
        return Err(Error::invalid("need a nonempty query set with matching ground truth"));
    }
    let first = run_pass(index, work, m)?;
    let timings = if timing_passes > 0 {
        // `first` doubles as the warm-up pass
        let passes = (0..timing_passes)
            .map(|_| run_pass(index, work, m))
            .collect::<Result<Vec<_>>>()?;
        let per_query = |f: fn(&Pass) -> Duration| median(passes.iter().map(f).collect()) / nq as u32;
        Some(Timings {
            query: per_query(|p| p.query),
            hash: per_query(|p| p.hash),
            distance: per_query(|p| p.distance),
        })
    } else {
        None
    };
    Ok(BenchRow {
        config: index.config().clone(),
        probes: m,
        recall: first.hits as f64 / nq as f64,
        mean_candidates: first.candidates as f64 / nq as f64,
        timings,
        index_bytes: index.index_bytes(),
        data_bytes: index.dataset().storage_bytes(),
    })
}

fn sweep(
    config: IndexConfig,
    points: &Arc<Dataset>,
    work: &Workload<'_>,
    probes: &ProbeSchedule,
    opts: &BenchOptions,
    timing_passes: usize,
) -> Result<Vec<BenchRow>> {
    let index = LshIndex::build(points.clone(), config)?;
    let l = index.config().num_tables;
    let mut rows = Vec::new();
    match probes {
        ProbeSchedule::Fixed(ms) => {
            for &m in ms {
                if m >= l {
                    rows.push(evaluate(&index, work, m, timing_passes)?);
                }
            }
        }
        &ProbeSchedule::Doubling {
            max_candidate_fraction,
            max_probes,
        } => {
            let space = index.probe_space_size();
            let mut m = l;
            loop {
                let row = evaluate(&index, work, m, timing_passes)?;
                let done = row.recall >= opts.recall_target
                    || row.mean_candidates > max_candidate_fraction * points.len() as f64
                    || m as u128 >= space
                    || m.saturating_mul(2) > max_probes;
                rows.push(row);
                if done {
                    break;
                }
                m *= 2;
            }
        }
    }
    Ok(rows)
}

/// Builds one index per grid configuration, evaluates it at the scheduled
/// probe counts and picks the best configuration reaching the target.
pub fn run_grid(points: Arc<Dataset>, work: &Workload<'_>, grid: &GridSpec, opts: &BenchOptions) -> Result<BenchReport> {
    let configs = grid.configs(&points)?;
    let timing_passes = if opts.parallel { 0 } else { opts.timing_passes };
    let per_config: Vec<Vec<BenchRow>> = if opts.parallel {
        configs
            .into_par_iter()
            .map(|c| sweep(c, &points, work, &grid.probes, opts, 0))
            .collect::<Result<_>>()?
    } else {
        configs
            .into_iter()
            .map(|c| sweep(c, &points, work, &grid.probes, opts, timing_passes))
            .collect::<Result<_>>()?
    };
    let rows: Vec<BenchRow> = per_config.into_iter().flatten().collect();
    let best = select_best(&rows, opts);
    Ok(BenchReport {
        rows,
        best,
        recall_target: opts.recall_target,
        tables_rule: grid.tables,
    })
}

fn select_best(rows: &[BenchRow], opts: &BenchOptions) -> Option<usize> {
    let key = |r: &BenchRow| match (opts.objective, r.timings) {
        (Objective::QueryTime, Some(t)) => t.query.as_secs_f64(),
        _ => r.mean_candidates,
    };
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.recall >= opts.recall_target)
        .min_by(|(_, a), (_, b)| key(a).total_cmp(&key(b)))
        .map(|(i, _)| i)
}

/// One curve evaluation; `rho` is `NaN` when the numerics failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub num_parts: f64,
    pub rho: f64,
}

/// Lower-bound curve over `parts`, with failures reported as messages.
pub fn lower_bound_curve(r1: f64, parts: &[f64]) -> (Vec<CurveRow>, Vec<String>) {
    let mut errors = Vec::new();
    let rows = parts
        .iter()
        .map(|&t| CurveRow {
            num_parts: t,
            rho: lower_bound_rho(t, r1).unwrap_or_else(|e| {
                errors.push(format!("T = {t}: {e}"));
                f64::NAN
            }),
        })
        .collect();
    (rows, errors)
}

/// Cross-polytope curve over dimensions `cp_dims`, evaluated in parallel.
pub fn cross_polytope_curve(r1: f64, cp_dims: &[u64]) -> (Vec<CurveRow>, Vec<String>) {
    let results: Vec<(u64, Result<TradeoffPoint>)> =
        cp_dims.par_iter().map(|&d| (d, cp_tradeoff_rho(d, r1))).collect();
    let mut errors = Vec::new();
    let rows = results
        .into_iter()
        .map(|(d, r)| match r {
            Ok(p) => CurveRow {
                num_parts: p.num_parts,
                rho: p.rho,
            },
            Err(e) => {
                errors.push(format!("d′ = {d}: {e}"));
                CurveRow {
                    num_parts: 2.0 * d as f64,
                    rho: f64::NAN,
                }
            }
        })
        .collect();
    (rows, errors)
}

/// Writes `num_parts,rho` rows.
pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_curve_csv<R: std::io::Read>(input: R) -> Result<Vec<CurveRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("csv: {e}")))
}

/// Text dump of the first `m` probes for `query`: one line per probe with
/// rank, table, score, hash values and bucket size.
pub fn probe_trace_text(index: &LshIndex, query: PointRef<'_>, m: usize) -> Result<String> {
    let mut out = String::from("rank\ttable\tscore\tvalues\tbucket_size\n");
    for (rank, cand) in index.probe_trace(query, m)?.iter().enumerate() {
        let key = index.probe_key(cand);
        let values: Vec<String> = cand.probe_values.iter().map(u64::to_string).collect();
        out.push_str(&format!(
            "{rank}\t{}\t{:.9e}\t{}\t{}\n",
            cand.table,
            cand.total_score,
            values.join(","),
            index.bucket(cand.table, key).len()
        ));
    }
    Ok(out)
}
