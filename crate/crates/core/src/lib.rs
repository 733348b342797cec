//! Cross-polytope locality-sensitive hashing for angular distance.
//!
//! Points live on the unit sphere. An [`index::LshIndex`] hashes every point
//! into `L` tables with `k` concatenated hash functions per table, and
//! answers nearest-neighbor queries by probing buckets in order of a
//! perturbation score ([`multiprobe`]) and ranking the candidates by exact
//! distance.
//!
//! [`analysis`] evaluates the collision probabilities and `ρ` exponents of
//! the hash families, and [`bench`] runs parameter grid searches over
//! synthetic or loaded instances ([`data_io`]).

pub mod analysis;
pub mod bench;
pub mod data_io;
pub mod error;
pub mod hash_families;
pub mod index;
pub mod multiprobe;
pub mod rotations;
pub mod seeds;
pub mod vectors;

pub use error::{Error, Result};
pub use hash_families::{CrossPolytopeParams, HashKey, HyperplaneParams};
pub use index::{Family, IndexConfig, LshIndex, Neighbor, QueryStats, RotationKind};
pub use multiprobe::{probe_sequence, ProbeCandidate, ProbeScoreList};
pub use rotations::{FeatureHashMap, GaussianRotation, PseudoRotation, Rotation};
pub use vectors::{Dataset, DenseDataset, PointRef, SparseVector, UnitVector};
