use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::affinity::AffinityMatrix;
use super::eigen::{dense_symmetric, lanczos_largest, LanczosSettings};
use crate::error::{Error, Result};
use crate::union_find::UnionFind;
use crate::vectorstore::{write_embeddings, VectorDataset};

/// Problems up to this size are solved densely.
pub const DENSE_LIMIT: usize = 512;
const CONSTANT_TOL: f64 = 1e-6;

/// Eigenvector coordinates of every node, one row per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEmbedding {
    n: usize,
    m: usize,
    coords: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// The trivial eigenvector (eigenvalue zero) was computed and dropped.
    pub dropped_constant: bool,
}

impl SpectralEmbedding {
    /// Builds from eigenvector columns.
    pub fn from_columns(columns: &[Vec<f64>], eigenvalues: Vec<f64>, dropped_constant: bool) -> Self {
        let m = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        let mut coords = vec![0.0; n * m];
        for (c, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                coords[i * m + c] = v;
            }
        }
        SpectralEmbedding {
            n,
            m,
            coords,
            eigenvalues,
            dropped_constant,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.coords[i * self.m + c]).collect()
    }

    pub fn to_dataset(&self) -> Result<VectorDataset> {
        VectorDataset::new(self.coords.iter().map(|&v| v as f32).collect(), self.n, self.m)
    }

    /// Writes the coordinates as EMB1 and the eigenvalues, one per line, to
    /// `<path>.eigenvalues.txt`.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_embeddings(&self.to_dataset()?, path)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".eigenvalues.txt");
        let mut f = fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
        for v in &self.eigenvalues {
            writeln!(f, "{v}").map_err(|e| Error::io(&side, e))?;
        }
        Ok(())
    }
}

fn support_components(affinity: &AffinityMatrix) -> UnionFind {
    let w = affinity.weights();
    let mut uf = UnionFind::new(w.n());
    for i in 0..w.n() {
        for (j, v) in w.row(i) {
            if v > 0.0 {
                uf.union(i, j);
            }
        }
    }
    uf
}

/// Dense `I - D^{-1/2} W D^{-1/2}`; rows of isolated nodes are zero.
pub fn normalized_laplacian_dense(affinity: &AffinityMatrix) -> DMatrix<f64> {
    let n = affinity.n();
    let deg = affinity.degrees();
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        if deg[i] > 0.0 {
            l[(i, i)] = 1.0;
        }
        for (j, v) in affinity.weights().row(i) {
            l[(i, j)] -= v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    l
}

/// All eigenvalues of `L f = lambda D f`, ascending, via the dense
/// normalised Laplacian.
pub fn generalized_spectrum_dense(affinity: &AffinityMatrix) -> Vec<f64> {
    dense_symmetric(&normalized_laplacian_dense(affinity)).values
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Laplacian eigenmap of a connected affinity graph.
///
/// Solves `L f = lambda D f` with `L = D - W`, discards the constant
/// eigenvector at eigenvalue zero and returns the next `m` eigenvectors,
/// D-orthonormal, sign-normalised so the largest-magnitude entry is positive.
pub fn laplacian_eigenmaps(affinity: &AffinityMatrix, m: usize) -> Result<SpectralEmbedding> {
    laplacian_eigenmaps_with(affinity, m, LanczosSettings::default())
}

pub fn laplacian_eigenmaps_with(
    affinity: &AffinityMatrix,
    m: usize,
    settings: LanczosSettings,
) -> Result<SpectralEmbedding> {
    let n = affinity.n();
    if m == 0 || m + 1 > n {
        return Err(Error::param(format!(
            "embedding dimension must satisfy 1 <= m <= n-1 (m={m}, n={n})"
        )));
    }
    let components = support_components(affinity).num_sets();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let deg = affinity.degrees();
    let sqrt_deg: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    let inv_sqrt: Vec<f64> = sqrt_deg.iter().map(|s| 1.0 / s).collect();

    let (values, vectors) = if n <= DENSE_LIMIT {
        let pairs = dense_symmetric(&normalized_laplacian_dense(affinity));
        let trivial: Vec<f64> = pairs.vectors[0].iter().zip(&inv_sqrt).map(|(g, s)| g * s).collect();
        check_constant(&trivial, pairs.values[0])?;
        (pairs.values[1..=m].to_vec(), pairs.vectors[1..=m].to_vec())
    } else {
        // The trivial eigenvector of the normalised problem is D^{1/2} 1.
        let total = sqrt_deg.iter().map(|s| s * s).sum::<f64>().sqrt();
        let trivial: Vec<f64> = sqrt_deg.iter().map(|s| s / total).collect();
        let w = affinity.weights();
        let mut scratch = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let scaled: Vec<f64> = trivial.iter().zip(&inv_sqrt).map(|(g, s)| g * s).collect();
        w.matvec(&scaled, &mut scratch);
        for i in 0..n {
            lap[i] = trivial[i] - inv_sqrt[i] * scratch[i];
        }
        let res = lap.iter().map(|x| x * x).sum::<f64>().sqrt();
        check_constant(&scaled, res)?;

        // Largest eigenvalues of 2I - L_sym = I + D^{-1/2} W D^{-1/2}.
        let apply = |x: &[f64], y: &mut [f64]| {
            let scaled: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(a, s)| a * s).collect();
            w.matvec(&scaled, y);
            for i in 0..n {
                y[i] = x[i] + inv_sqrt[i] * y[i];
            }
        };
        let top = lanczos_largest(apply, n, m, std::slice::from_ref(&trivial), settings)?;
        (top.values.iter().map(|mu| 2.0 - mu).collect(), top.vectors)
    };

    let columns: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|g| {
            let mut f: Vec<f64> = g.iter().zip(&inv_sqrt).map(|(a, s)| a * s).collect();
            fix_sign(&mut f);
            f
        })
        .collect();
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    Ok(SpectralEmbedding::from_columns(&columns, values, true))
}

fn check_constant(v: &[f64], eigenvalue_or_residual: f64) -> Result<()> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let spread = v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if mean == 0.0 || spread > CONSTANT_TOL * mean.abs() || eigenvalue_or_residual.abs() > CONSTANT_TOL {
        return Err(Error::Numerical {
            message: "trivial eigenvector is not constant".into(),
            iterations: 0,
            residual: spread.max(eigenvalue_or_residual.abs()),
        });
    }
    Ok(())
}

/// Embedding of a possibly disconnected graph from its block-diagonal
/// Laplacian. Each component contributes a zero eigenvalue with its
/// indicator vector (components ordered by decreasing size) plus its own
/// non-trivial eigenpairs; the globally smallest `m + 1` are kept and the
/// first is dropped.
pub fn component_blocked_embedding(affinity: &AffinityMatrix, m: usize) -> Result<SpectralEmbedding> {
    let n = affinity.n();
    if m == 0 || m + 1 > n {
        return Err(Error::param(format!(
            "embedding dimension must satisfy 1 <= m <= n-1 (m={m}, n={n})"
        )));
    }
    let labels = support_components(affinity).labels();
    let count = labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    // Largest first; ties keep smallest-member order.
    members.sort_by_key(|m| std::cmp::Reverse(m.len()));

    let deg = affinity.degrees();
    let mut pairs: Vec<(f64, Vec<f64>)> = members
        .iter()
        .take(m + 1)
        .map(|nodes| {
            let vol: f64 = nodes.iter().map(|&i| deg[i]).sum();
            let scale = if vol > 0.0 { 1.0 / vol.sqrt() } else { 1.0 };
            let mut v = vec![0.0; n];
            for &i in nodes {
                v[i] = scale;
            }
            (0.0, v)
        })
        .collect();
    let missing = (m + 1).saturating_sub(count);
    if missing > 0 {
        for nodes in &members {
            let want = missing.min(nodes.len() - 1);
            if want == 0 {
                continue;
            }
            let local = AffinityMatrix::from_weights(affinity.weights().submatrix(nodes), affinity.kind())?;
            let sub = laplacian_eigenmaps(&local, want)?;
            for c in 0..sub.dim() {
                let mut v = vec![0.0; n];
                for (li, &g) in nodes.iter().enumerate() {
                    v[g] = sub.row(li)[c];
                }
                pairs.push((sub.eigenvalues[c], v));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let kept: Vec<(f64, Vec<f64>)> = pairs.into_iter().skip(1).take(m).collect();
    if kept.len() < m {
        return Err(Error::param(format!("graph supports only {} embedding dimensions", kept.len())));
    }
    let values = kept.iter().map(|p| p.0).collect();
    let columns: Vec<Vec<f64>> = kept.into_iter().map(|p| p.1).collect();
    Ok(SpectralEmbedding::from_columns(&columns, values, true))
}
