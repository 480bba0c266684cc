//! Neighborhood-similarity graphs.
//!
//! Builds an exact directed kNN graph over a point set, scores every edge by
//! how alike the two endpoint neighborhoods are, filters weak edges, and
//! reads structure out of the sparse graph that remains:
//!
//! * [`knn`]: exact kNN construction under a chosen metric
//! * [`similarity`]: K-S count `sK`, shared-neighbor count `sJ`, combined `sA`
//! * [`filter`]: threshold predicates and strongly connected components
//! * [`sweep`]: threshold sweep that sorts nodes into nested blocks
//! * [`ncut`]: recursive two-way normalized-cut partitioning
//! * [`postprocess`]: cluster merging, small-cluster reassignment, F-measure
//! * [`pipeline`] and [`server`]: the batch driver and the exploration service

pub mod dataset;
pub mod edgelist;
mod eigen;
pub mod error;
pub mod filter;
pub mod knn;
pub mod ncut;
pub mod partition;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod server;
pub mod similarity;
pub mod sweep;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use filter::{ComponentLabeling, EdgeMask, FilterPredicate};
pub use knn::{KnnGraph, Metric};
pub use ncut::{NcutParams, UGraph};
pub use partition::Partition;
pub use similarity::EdgeScores;
pub use sweep::SweepResult;
