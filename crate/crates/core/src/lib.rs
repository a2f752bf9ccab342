//! Symbolic approximation of manifold-valued time series.
//!
//! Sequences of points on a Riemannian manifold (hypersphere, Grassmann,
//! products of SE(3), or plain Euclidean space) are windowed, averaged with
//! intrinsic means and quantized against a learned codebook. Matching, kNN
//! search and motif discovery then run on short symbol strings using a
//! precomputed symbol-to-symbol distance table instead of geodesic distances.
//!
//! Module map:
//!
//! - [`geometry`]: manifold descriptors, points, exp/log maps, distances
//! - [`stats`]: Karcher and extrinsic means, piecewise aggregation
//! - [`codebook`]: geodesic K-means, conscience learning, hybrid training
//! - [`encode`]: sequence to symbols and back, storage budgets
//! - [`matching`]: symbol distance, DTW, kNN and nearest-neighbour labels
//! - [`discover`]: brute-force motif discovery
//! - [`features`]: HOOF histograms and landmark subspaces
//! - [`io`], [`synth`], [`harness`]: artifacts, synthetic data, benchmarks

// `!(x >= 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codebook;
pub mod discover;
pub mod encode;
pub mod error;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod matching;
pub mod par;
pub mod stats;
pub mod synth;

pub use codebook::{Codebook, Lut};
pub use encode::SymbolSequence;
pub use error::{Error, ErrorClass, Result};
pub use geometry::{Manifold, ManifoldPoint, TangentVector};
pub use par::Execution;
pub use stats::ManifoldSequence;
