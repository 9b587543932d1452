//! Path-occurrence tensors of graphs and the graph-convolution layers that
//! consume them.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`graph`]: parse an edge list, build adjacency matrices and exact powers.
//! 2. [`tensor`]: occurrence tensors `B^L` under simple-path or walk semantics and
//!    their normalization `T^L = B^L / (L + 1)`; [`identities`] checks that summing
//!    fibers recovers path counts.
//! 3. [`reduce`]: compress every depth fiber to `d` values (sum, PCA, random
//!    projection); [`format`] stores tensors in the `THOP` binary layout.
//! 4. [`layers`] and [`model`]: MixHop and T-Hop layers with analytic gradients.
//! 5. [`experiments`]: stochastic block model datasets and training runs.

pub mod error;
pub mod experiments;
pub mod format;
pub mod graph;
pub mod identities;
pub mod layers;
pub mod matrix;
pub mod model;
pub mod paths;
pub mod reduce;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};
pub use graph::Graph;
pub use matrix::{IntMatrix, RealMatrix};
pub use tensor::{NormalizedTensor, PathTensor, Semantics};
