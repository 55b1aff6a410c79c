//! Ranking-based analysis of regression-tree splitting and symbolic feature
//! selection.
//!
//! The crate is organized by concern:
//!
//! * [`dataset`], [`types`], [`expr`], [`rng`]: shared domain types.
//! * [`stats`]: the concordant divergence statistic, classical rank
//!   correlations, Chatterjee's xi and the ranking metric over conditional means.
//! * [`partition`]: oracle two-way partitions of a response vector.
//! * [`tree`]: CART split search, log decision ratios, tree growth and a
//!   bootstrap split-frequency importance.
//! * [`monotonic`]: comparison of piecewise-monotone transforms.
//! * [`symgen`]: layered symbolic feature generation.
//! * [`evalsel`]: feature scoring, selection metrics and experiment drivers.

pub mod dataset;
pub mod error;
pub mod evalsel;
pub mod expr;
pub mod monotonic;
pub mod partition;
pub mod rng;
pub mod stats;
pub mod symgen;
pub mod tree;
pub mod types;

pub use dataset::{read_csv, Dataset, FeatureMatrix};
pub use error::{Error, Result};
pub use expr::{BinaryOp, Expression, UnaryOp};
pub use types::{Interval, Partition2, RankPermutation};
