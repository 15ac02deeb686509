use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{symmetrize, NeighborGraph};
use crate::sparse::CsrMatrix;
use crate::vectorstore::VectorDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AffinityKind {
    Connection,
    Gaussian { t: f64 },
}

/// How distances are measured inside the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelDistance {
    Euclidean,
    /// Euclidean distance between unit-normalised vectors.
    #[default]
    NormalizedEuclidean,
}

/// Symmetric, non-negative affinity weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    weights: CsrMatrix,
    kind: AffinityKind,
}

impl AffinityMatrix {
    pub fn from_weights(weights: CsrMatrix, kind: AffinityKind) -> Result<Self> {
        if !weights.is_symmetric() {
            return Err(Error::Validation("affinity matrix must be symmetric".into()));
        }
        for i in 0..weights.n() {
            for (j, v) in weights.row(i) {
                if i == j && v != 0.0 {
                    return Err(Error::Validation(format!("non-zero diagonal at {i}")));
                }
                if !(v >= 0.0) {
                    return Err(Error::Validation(format!("negative affinity at ({i},{j})")));
                }
            }
        }
        Ok(AffinityMatrix { weights, kind })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn kind(&self) -> AffinityKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_sums()
    }
}

/// 1 for connected pairs, averaged with the transpose: mutual pairs get 1,
/// one-way pairs 0.5.
pub fn affinity_connection(graph: &NeighborGraph) -> AffinityMatrix {
    AffinityMatrix {
        weights: symmetrize(graph),
        kind: AffinityKind::Connection,
    }
}

/// Heat-kernel weights `exp(-|x_i - x_j|^2 / (4t))` on the symmetrised
/// support, with the default kernel distance.
pub fn affinity_gaussian(graph: &NeighborGraph, data: &VectorDataset, t: f64) -> Result<AffinityMatrix> {
    affinity_gaussian_with(graph, data, t, KernelDistance::default())
}

pub fn affinity_gaussian_with(
    graph: &NeighborGraph,
    data: &VectorDataset,
    t: f64,
    kernel: KernelDistance,
) -> Result<AffinityMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param(format!("kernel width t must be positive, got {t}")));
    }
    if graph.n() != data.len() {
        return Err(Error::param(format!(
            "graph has {} nodes but dataset has {} rows",
            graph.n(),
            data.len()
        )));
    }
    let rows: Vec<Vec<f64>> = data
        .rows()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|&x| x as f64).collect();
            match kernel {
                KernelDistance::Euclidean => v,
                KernelDistance::NormalizedEuclidean => {
                    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if nrm > 0.0 {
                        v.iter().map(|x| x / nrm).collect()
                    } else {
                        v
                    }
                }
            }
        })
        .collect();
    let triplets: Vec<(usize, usize, f64)> = graph
        .undirected_pairs()
        .into_iter()
        .flat_map(|(i, j)| {
            let sq: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            // Underflow would silently drop the edge from the support.
            let w = (-sq / (4.0 * t)).exp().max(f64::MIN_POSITIVE);
            [(i, j, w), (j, i, w)]
        })
        .collect();
    Ok(AffinityMatrix {
        weights: CsrMatrix::from_triplets(graph.n(), triplets),
        kind: AffinityKind::Gaussian { t },
    })
}
