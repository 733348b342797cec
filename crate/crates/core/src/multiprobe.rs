//! Multiprobe querying for cross-polytope tables.
//!
//! For a rotated query `y` the probability that a near neighbor lands on
//! codebook point `v` is modeled as `exp(−c·‖y_{x,v}‖²)`, where `y_{x,v}` is
//! the shortest single-coordinate perturbation that makes `v` the argmax.
//! That gives a score of `(M − |y_v|)²` with `M = max_j |y_j|`; probes are
//! visited in ascending total score, which is descending modeled probability.
//!
//! The full (signed) variant also ranks the opposite-sign point `−sign(y_v)·e_v`,
//! reachable only by moving `y_v` through zero to `∓M`, so it scores
//! `(M + |y_v|)²`. In general `score(v, s) = (M − s·y_v)²`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::hash_families::encode_axis;

/// Total order on `(score, value)` used inside one score list.
#[derive(Debug, Clone, Copy)]
struct ScoredValue {
    score: f64,
    value: u64,
}

impl PartialEq for ScoredValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ScoredValue {}
impl PartialOrd for ScoredValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ScoredValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.value.cmp(&other.value))
    }
}

/// Probe values of one hash function, sorted on demand.
///
/// Construction heapifies the `d′` candidates in `O(d′)`; each further rank
/// costs `O(log d′)`, so only the prefix a query actually visits gets sorted.
#[derive(Debug, Clone)]
pub struct ProbeScoreList {
    sorted: Vec<ScoredValue>,
    pending: BinaryHeap<Reverse<ScoredValue>>,
}

impl ProbeScoreList {
    /// Builds a list from arbitrary `(value, score)` pairs. The smallest pair
    /// under `(score, value)` becomes the base probe.
    pub fn from_scores(scores: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let pending: BinaryHeap<_> = scores
            .into_iter()
            .map(|(value, score)| Reverse(ScoredValue { score, value }))
            .collect();
        if pending.is_empty() {
            return Err(Error::invalid("probe score list must not be empty"));
        }
        if pending.iter().any(|Reverse(s)| !(s.score >= 0.0)) {
            return Err(Error::invalid("probe scores must be non-negative"));
        }
        Ok(Self {
            sorted: Vec::new(),
            pending,
        })
    }

    /// Number of probe values in the list.
    pub fn len(&self) -> usize {
        self.sorted.len() + self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(value, score)` at `rank`, sorting further only if needed.
    pub fn get(&mut self, rank: usize) -> Option<(u64, f64)> {
        while self.sorted.len() <= rank {
            let Reverse(next) = self.pending.pop()?;
            self.sorted.push(next);
        }
        let s = self.sorted[rank];
        Some((s.value, s.score))
    }

    /// The base hash value (rank 0).
    pub fn base(&mut self) -> u64 {
        self.get(0).expect("list is non-empty").0
    }

    /// Forces a full sort and returns every entry in rank order.
    pub fn to_sorted_vec(&mut self) -> Vec<(u64, f64)> {
        let n = self.len();
        (0..n).filter_map(|r| self.get(r)).collect()
    }

    /// Number of entries sorted so far.
    pub fn sorted_prefix_len(&self) -> usize {
        self.sorted.len()
    }
}

/// Per-hash probe scores of a rotated vector `y` restricted to its first
/// `cp_dim` coordinates.
pub fn probe_scores(y: &[f32], cp_dim: usize, collapse_signs: bool) -> Result<ProbeScoreList> {
    if cp_dim == 0 {
        return Err(Error::invalid("cross-polytope dimension must be positive"));
    }
    if y.len() < cp_dim {
        return Err(Error::DimensionMismatch {
            expected: cp_dim,
            actual: y.len(),
        });
    }
    let y = &y[..cp_dim];
    let max_abs = y.iter().fold(0.0f64, |m, &v| m.max((v as f64).abs()));
    let scores: Vec<(u64, f64)> = if collapse_signs {
        y.iter()
            .enumerate()
            .map(|(j, &v)| {
                let gap = max_abs - (v as f64).abs();
                (j as u64, gap * gap)
            })
            .collect()
    } else {
        y.iter()
            .enumerate()
            .flat_map(|(j, &v)| {
                let v = v as f64;
                let plus = max_abs - v;
                let minus = max_abs + v;
                [
                    (encode_axis(j, false, false), plus * plus),
                    (encode_axis(j, true, false), minus * minus),
                ]
            })
            .collect()
    };
    ProbeScoreList::from_scores(scores)
}

/// Two-entry list for one hyperplane bit: the base bit at score 0 and the
/// flipped bit at the squared projection.
///
/// A projection of exactly zero would tie the two bits; the flipped bit then
/// gets the smallest positive score so the base bit stays first.
pub fn hyperplane_bit_scores(projection: f64) -> ProbeScoreList {
    let bit = (projection >= 0.0) as u64;
    let flip = (projection * projection).max(f64::MIN_POSITIVE);
    ProbeScoreList::from_scores([(bit, 0.0), (1 - bit, flip)]).expect("two entries")
}

/// One element of the probing sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCandidate {
    pub table: usize,
    pub probe_values: Vec<u64>,
    pub total_score: f64,
}

#[derive(Debug)]
struct HeapEntry {
    total_score: f64,
    table: usize,
    values: Vec<u64>,
    ranks: Vec<u32>,
    last: usize,
}

impl HeapEntry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.total_score
            .total_cmp(&other.total_score)
            .then(self.table.cmp(&other.table))
            .then_with(|| self.values.cmp(&other.values))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Lazy generator of the global probing sequence over `L` tables of `k`
/// hash functions each.
///
/// Candidates come out in non-decreasing total score, ties broken by table id
/// and then lexicographically by probe values. Each popped rank vector pushes
/// the successors that increment one position at or after the position that
/// was last incremented, so every rank vector has exactly one parent and is
/// generated once. Within a list, equal scores are ordered by value, which
/// keeps every successor at or after its parent in the output order.
#[derive(Debug)]
pub struct ProbeSequence {
    lists: Vec<Vec<ProbeScoreList>>,
    heap: BinaryHeap<HeapEntry>,
    emitted: usize,
}

impl ProbeSequence {
    pub fn new(mut lists: Vec<Vec<ProbeScoreList>>) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::invalid("need at least one table"));
        }
        let k = lists[0].len();
        if k == 0 || lists.iter().any(|t| t.len() != k) {
            return Err(Error::invalid("every table needs the same number k ≥ 1 of score lists"));
        }
        let mut heap = BinaryHeap::with_capacity(lists.len() * 4);
        for (table, table_lists) in lists.iter_mut().enumerate() {
            let ranks = vec![0u32; k];
            let (values, total_score) = evaluate(table_lists, &ranks).expect("rank 0 exists");
            heap.push(HeapEntry {
                total_score,
                table,
                values,
                ranks,
                last: 0,
            });
        }
        Ok(Self {
            lists,
            heap,
            emitted: 0,
        })
    }

    pub fn num_tables(&self) -> usize {
        self.lists.len()
    }

    /// Size of the whole probe space, saturating at `usize::MAX`.
    pub fn probe_space_size(&self) -> usize {
        self.lists
            .iter()
            .map(|t| t.iter().fold(1usize, |acc, l| acc.saturating_mul(l.len())))
            .fold(0usize, |acc, n| acc.saturating_add(n))
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Entries sorted so far in each list, for checking that sorting stays
    /// incremental.
    pub fn sorted_prefix_lens(&self) -> Vec<Vec<usize>> {
        self.lists
            .iter()
            .map(|t| t.iter().map(|l| l.sorted_prefix_len()).collect())
            .collect()
    }
}

fn evaluate(lists: &mut [ProbeScoreList], ranks: &[u32]) -> Option<(Vec<u64>, f64)> {
    let mut values = Vec::with_capacity(ranks.len());
    let mut total = 0.0;
    for (list, &r) in lists.iter_mut().zip(ranks) {
        let (v, s) = list.get(r as usize)?;
        values.push(v);
        total += s;
    }
    Some((values, total))
}

impl Iterator for ProbeSequence {
    type Item = ProbeCandidate;

    fn next(&mut self) -> Option<ProbeCandidate> {
        let entry = self.heap.pop()?;
        let table_lists = &mut self.lists[entry.table];
        for pos in entry.last..entry.ranks.len() {
            let mut ranks = entry.ranks.clone();
            ranks[pos] += 1;
            if let Some((values, total_score)) = evaluate(table_lists, &ranks) {
                self.heap.push(HeapEntry {
                    total_score,
                    table: entry.table,
                    values,
                    ranks,
                    last: pos,
                });
            }
        }
        self.emitted += 1;
        Some(ProbeCandidate {
            table: entry.table,
            probe_values: entry.values,
            total_score: entry.total_score,
        })
    }
}

/// First `m` probes of the global sequence; `m` beyond the probe space is
/// truncated to the full space.
pub fn probe_sequence(lists: Vec<Vec<ProbeScoreList>>, m: usize) -> Result<Vec<ProbeCandidate>> {
    if m < lists.len() {
        return Err(Error::invalid(format!(
            "sequence length {m} is shorter than the number of tables {}",
            lists.len()
        )));
    }
    let seq = ProbeSequence::new(lists)?;
    Ok(seq.take(m).collect())
}
