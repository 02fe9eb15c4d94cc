//! Node embeddings for large undirected graphs learned from a small
//! degree-representative subgraph.
//!
//! The pipeline picks the `k` highest-degree nodes, sparsifies the walk
//! polynomial of the induced subgraph, factorizes the truncated-log
//! information matrix of that subgraph with a randomized SVD, and projects
//! every node through the subgraph's right singular vectors.
//!
//! ```no_run
//! use nes_core::{graph::Graph, pipeline::{embed, EmbedConfig}};
//!
//! let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
//! let out = embed(&g, &EmbedConfig { dim: 2, ..EmbedConfig::with_k(4) }).unwrap();
//! assert_eq!(out.embedding.rows(), 4);
//! ```

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod factorization;
pub mod format;
pub mod graph;
pub mod par;
pub mod pipeline;
pub mod sampling;
pub mod sparse;
pub mod sparsifier;
pub mod synth;

pub use error::{NesError, Result};
