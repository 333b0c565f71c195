//! Similarity group-by over multi-dimensional tuples.
//!
//! Tuples are grouped into maximal *All-ε-connected* groups: every pair of
//! members is within a distance threshold of each other. Tuples that fall
//! into more than one such group are resolved by one of three overlap
//! policies (duplicate, eliminate, new-group). The grouping result does not
//! depend on the order the input is presented in.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File formats
//! and the command line live in the companion `sgb-cli` crate.
//!
//! Layout:
//!
//! * [`types`]: tuples, datasets, the similarity predicate, group sets.
//! * [`bounds`]: ε-rectangle and ε-convex-hull group bounds.
//! * [`index`]: an R-tree over group bounds and per-group point indexes.
//! * [`engine`]: the incremental grouping operator and overlap policies.
//! * [`oracle`]: brute-force reference semantics and the permutation harness.
//! * [`query`]: the `GROUP BY ... DISTANCE-TO-ALL` query dialect.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod engine;
pub mod error;
pub mod index;
pub mod oracle;
pub mod query;
pub mod types;

pub use bounds::{EpsHull, EpsRectangle};
pub use engine::{overlap_report, run, run_with_config, Engine, EngineConfig, OverlapReport};
pub use error::{Error, Result};
pub use types::{
    canonicalize, distance, gpact, is_all_eps_connected, is_similar, Dataset, GroupSet, Metric,
    Policy, SimilaritySpec, Tuple, TupleId,
};
