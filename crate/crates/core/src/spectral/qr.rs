//! Seedless cluster assignment by column-pivoted QR.
//!
//! Pivoting on the transposed embedding picks `C` representative nodes; the
//! orthogonal polar factor of their coordinate block rotates the embedding
//! and each node goes to the axis it aligns with most strongly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const RANK_TOL: f64 = 1e-8;

/// Pivot columns of a column-pivoted Householder QR of `a` (rows x cols),
/// plus the absolute diagonal of `R`.
pub fn pivoted_qr_columns(a: &DMatrix<f64>, count: usize) -> (Vec<usize>, Vec<f64>) {
    let mut a = a.clone();
    let (rows, cols) = a.shape();
    let steps = count.min(rows).min(cols);
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm_squared()).collect();
    let mut diag = Vec::with_capacity(steps);
    for s in 0..steps {
        let mut p = s;
        for j in s + 1..cols {
            if norms[j] > norms[p] {
                p = j;
            }
        }
        a.swap_columns(s, p);
        perm.swap(s, p);
        norms.swap(s, p);

        let x: Vec<f64> = (s..rows).map(|r| a[(r, s)]).collect();
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        diag.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.clone();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        for j in s..cols {
            let proj: f64 = (s..rows).map(|r| v[r - s] * a[(r, j)]).sum::<f64>() * 2.0 / vnorm2;
            for r in s..rows {
                a[(r, j)] -= proj * v[r - s];
            }
        }
        for (j, nrm) in norms.iter_mut().enumerate().skip(s + 1) {
            *nrm -= a[(s, j)] * a[(s, j)];
            if *nrm < 0.0 {
                *nrm = (s + 1..rows).map(|r| a[(r, j)] * a[(r, j)]).sum();
            }
        }
    }
    (perm[..steps].to_vec(), diag)
}

/// Assigns `n` row-major points of dimension `dim` to `c` clusters using the
/// first `c` coordinates.
pub fn qr_labels(coords: &[f64], dim: usize, c: usize) -> Result<Vec<usize>> {
    if c == 0 || dim < c {
        return Err(Error::param(format!(
            "QR assignment needs at least C={c} usable dimensions, embedding has {dim}"
        )));
    }
    let n = coords.len() / dim;
    if n < c {
        return Err(Error::param(format!("cannot form {c} clusters from {n} points")));
    }
    let emb = DMatrix::from_fn(n, c, |i, j| coords[i * dim + j]);
    let (piv, diag) = pivoted_qr_columns(&emb.transpose(), c);
    let lead = diag.first().copied().unwrap_or(0.0);
    let rank = diag.iter().filter(|&&d| d > RANK_TOL * lead).count();
    if lead == 0.0 || rank < c {
        return Err(Error::Numerical {
            message: format!("embedding has numerical rank {rank} < {c}"),
            iterations: 0,
            residual: diag.last().copied().unwrap_or(0.0),
        });
    }
    let block = DMatrix::from_fn(c, c, |i, j| emb[(piv[j], i)]);
    let svd = block.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let rotated = &emb * (u * v_t);
    Ok((0..n)
        .map(|i| {
            let mut arg = 0;
            for j in 1..c {
                if rotated[(i, j)].abs() > rotated[(i, arg)].abs() {
                    arg = j;
                }
            }
            arg
        })
        .collect())
}
