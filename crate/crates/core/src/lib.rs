//! Neighborhood graphs over embedding vectors, including an incremental
//! k-NN construction that is connected by construction, plus the spectral
//! clustering and evaluation pipeline built on top of them.

pub mod construction;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod sparse;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod union_find;
pub mod vectorstore;

pub use construction::{
    augment_mst, build_epsilon, build_knn_incremental, build_knn_standard, derive_seed, extend_incremental,
    find_epsilon0, minimum_spanning_tree, NodeOrdering,
};
pub use error::{Error, ErrorKind, Result};
pub use graph::{connected_components, distance, ComponentReport, Construction, Edge, Metric, NeighborGraph, Provenance};
pub use metrics::{scores, v_measure, ClusterScores};
pub use vectorstore::{read_embeddings, read_labels, write_embeddings, write_labels, Labels, VectorDataset};
