//! Hierarchical clustering by continuous optimization of leaf embeddings in
//! the Poincaré disk.
//!
//! Leaves are points of the disk; the depth of the hyperbolic lowest common
//! ancestor of two leaves plays the role of the depth of their LCA in a tree.
//! A softmax relaxation of Dasgupta's cost is minimized with Riemannian Adam
//! and the embedding is decoded back into a binary tree.
//!
//! Modules:
//! - [`geometry`]: disk points, distances, hyperbolic LCA and its gradient
//! - [`trees`]: dendrograms, similarity matrices, Dasgupta cost and bounds
//! - [`loss`]: embeddings, triplet sampling, the relaxed cost and gradient
//! - [`optim`]: Riemannian Adam with a learned common radius
//! - [`codec`]: exact and greedy decoding, Sarkar-style tree layouts
//! - [`baselines`]: agglomerative linkage and bisecting k-means
//! - [`pipeline`]: data loading, end-to-end runs and run artifacts
//!
//! Continuous code is generic over [`scalar::Real`]; [`wide::Wide`] gives 256
//! bits of mantissa for layouts too deep for `f64`.

pub mod baselines;
pub mod codec;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod optim;
pub mod pipeline;
pub mod scalar;
pub mod trees;
pub mod wide;

pub use error::{Error, Result};
pub use trees::{Dendrogram, SimilarityMatrix};
pub use wide::Wide;

pub type Point = geometry::DiskPoint<f64>;
pub type Point32 = geometry::DiskPoint<f32>;
pub type WidePoint = geometry::DiskPoint<Wide>;
pub type Embedding = loss::Embedding<f64>;
pub type WideEmbedding = loss::Embedding<Wide>;
pub type Similarities = trees::SimilarityMatrix<f64>;
