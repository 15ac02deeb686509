//! Compressed sparse row storage for symmetric weight matrices.

use std::collections::BTreeMap;

/// Square CSR matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (j, v) in row {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Sub-matrix restricted to `nodes` (in the given order).
    pub fn submatrix(&self, nodes: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (li, &g) in nodes.iter().enumerate() {
            local[g] = li;
        }
        let triplets = nodes.iter().enumerate().flat_map(|(li, &g)| {
            let local = &local;
            self.row(g)
                .filter(move |&(j, _)| local[j] != usize::MAX)
                .map(move |(j, v)| (li, local[j], v))
        });
        CsrMatrix::from_triplets(nodes.len(), triplets.collect::<Vec<_>>())
    }
}
