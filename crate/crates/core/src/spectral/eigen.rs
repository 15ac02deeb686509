//! Symmetric eigensolvers: a dense path backed by nalgebra and a
//! thick-restart Lanczos iteration with full reorthogonalisation for
//! larger sparse operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Eigenpairs sorted by ascending eigenvalue; `vectors[i]` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Full eigendecomposition of a dense symmetric matrix, ascending.
pub fn dense_symmetric(matrix: &DMatrix<f64>) -> EigenPairs {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    EigenPairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosSettings {
    /// Residual norm `|A x - theta x|` required for every wanted pair.
    pub tol: f64,
    /// Cap on operator applications.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosSettings {
    fn default() -> Self {
        LanczosSettings {
            tol: 1e-8,
            max_iter: 5000,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(w: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(b, w);
        axpy(-c, b, w);
    }
}

/// The `nev` largest eigenpairs of a symmetric operator restricted to the
/// orthogonal complement of `deflate` (which must be orthonormal and
/// invariant under the operator). Returned in descending order.
pub fn lanczos_largest<F>(
    apply: F,
    n: usize,
    nev: usize,
    deflate: &[Vec<f64>],
    settings: LanczosSettings,
) -> Result<EigenPairs>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n_eff = n.saturating_sub(deflate.len());
    if nev == 0 || nev > n_eff {
        return Err(Error::param(format!(
            "cannot compute {nev} eigenpairs in a space of dimension {n_eff}"
        )));
    }
    let ncv = n_eff.min((3 * nev).max(nev + 96));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut fresh_vector = |basis: &[Vec<f64>]| -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..2 {
                project_out(&mut v, deflate);
                project_out(&mut v, basis);
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return v;
            }
        }
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(ncv + 1);
    basis.push(fresh_vector(&[]));
    let mut proj = DMatrix::<f64>::zeros(ncv, ncv);
    let mut w = vec![0.0; n];
    let mut matvecs = 0usize;

    loop {
        // Expand the basis to `ncv` vectors; `beta` couples the last one to
        // the residual direction.
        let mut beta = 0.0;
        let mut residual: Option<Vec<f64>> = None;
        let mut j = basis.len() - 1;
        loop {
            apply(&basis[j], &mut w);
            matvecs += 1;
            project_out(&mut w, deflate);
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = dot(b, &w);
                    axpy(-c, b, &mut w);
                    proj[(i, j)] += c;
                }
            }
            for i in 0..j {
                proj[(j, i)] = proj[(i, j)];
            }
            let bnorm = norm(&w);
            if basis.len() == n_eff {
                // Krylov space exhausted: the projection is exact.
                break;
            }
            if basis.len() == ncv {
                beta = bnorm;
                residual = Some(w.iter().map(|x| x / bnorm).collect());
                break;
            }
            if bnorm < 1e-12 {
                let v = fresh_vector(&basis);
                basis.push(v);
            } else {
                basis.push(w.iter().map(|x| x / bnorm).collect());
            }
            j += 1;
        }

        let size = basis.len();
        let small = proj.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let res: Vec<f64> = order
            .iter()
            .map(|&c| (beta * eig.eigenvectors[(size - 1, c)]).abs())
            .collect();
        let worst = res[..nev].iter().copied().fold(0.0, f64::max);
        let done = residual.is_none() || worst <= settings.tol;

        let keep = if done { nev } else { (nev + (size - nev) / 2).min(size - 1) };
        let ritz: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&c| {
                let mut x = vec![0.0; n];
                for (r, b) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(r, c)], b, &mut x);
                }
                x
            })
            .collect();
        let thetas: Vec<f64> = order[..keep].iter().map(|&c| eig.eigenvalues[c]).collect();

        if done {
            return Ok(EigenPairs {
                values: thetas,
                vectors: ritz,
            });
        }
        if matvecs >= settings.max_iter {
            return Err(Error::Numerical {
                message: format!("Lanczos did not converge for {nev} eigenpairs"),
                iterations: matvecs,
                residual: worst,
            });
        }
        log::trace!("lanczos restart: matvecs={matvecs} worst residual={worst:e}");

        proj.fill(0.0);
        for (i, &t) in thetas.iter().enumerate() {
            proj[(i, i)] = t;
        }
        basis = ritz;
        basis.push(residual.expect("restart requires a residual"));
    }
}
