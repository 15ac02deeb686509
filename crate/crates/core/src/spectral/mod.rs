//! Affinity matrices, Laplacian eigenmaps and cluster assignment.

mod affinity;
pub mod eigen;
mod embedding;
pub mod kmeans;
pub mod qr;

pub use affinity::{
    affinity_connection, affinity_gaussian, affinity_gaussian_with, AffinityKind, AffinityMatrix, KernelDistance,
};
pub use embedding::{
    component_blocked_embedding, generalized_spectrum_dense, laplacian_eigenmaps, laplacian_eigenmaps_with,
    normalized_laplacian_dense, SpectralEmbedding, DENSE_LIMIT,
};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assigner {
    Kmeans,
    Qr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    /// Input coordinates were all identical and could not be split.
    pub degenerate: bool,
}

/// k-means on the embedding coordinates.
pub fn kmeans_assign(embedding: &SpectralEmbedding, clusters: usize, seed: u64) -> Result<Assignment> {
    let r = kmeans(embedding.coords(), embedding.dim(), clusters, seed, KMeansConfig::default())?;
    if r.degenerate {
        log::warn!("embedding coordinates are all identical; returning a single cluster");
    }
    Ok(Assignment {
        labels: r.labels,
        degenerate: r.degenerate,
    })
}

/// Deterministic column-pivoted QR assignment. The embedding must already
/// exclude the constant eigenvector.
pub fn qr_assign(embedding: &SpectralEmbedding, clusters: usize) -> Result<Assignment> {
    Ok(Assignment {
        labels: qr::qr_labels(embedding.coords(), embedding.dim(), clusters)?,
        degenerate: false,
    })
}
