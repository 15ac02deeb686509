//! Labeled synthetic corpora: isotropic Gaussian blobs plus uniform outliers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorstore::{Labels, VectorDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub n: usize,
    pub dim: usize,
    pub centers: usize,
    /// Distance between any two centers, in units of the blob standard deviation.
    pub separation: f64,
    /// Share of points drawn uniformly from the box around the centers.
    pub outlier_fraction: f64,
    /// Each blob varies only inside its own random subspace of this
    /// dimension; `None` gives isotropic blobs.
    #[serde(default)]
    pub intrinsic_dim: Option<usize>,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            n: 600,
            dim: 16,
            centers: 3,
            separation: 6.0,
            outlier_fraction: 0.0,
            intrinsic_dim: None,
            seed: 0,
        }
    }
}

/// Margin, in standard deviations, added around the centers' bounding box
/// when drawing outliers.
const OUTLIER_MARGIN: f64 = 3.0;

/// Generates `n` rows in random order. Center `i` sits on axis `i` so every
/// pair of centers is `separation` apart. Outliers take the label of their
/// nearest center.
pub fn gaussian_blobs(config: &BlobConfig) -> Result<VectorDataset> {
    let BlobConfig {
        n,
        dim,
        centers,
        separation,
        outlier_fraction,
        intrinsic_dim,
        seed,
    } = *config;
    if centers == 0 || centers > dim {
        return Err(Error::param(format!("need 1 <= centers <= dim, got {centers} centers in {dim} dims")));
    }
    if n < centers {
        return Err(Error::param(format!("n={n} is smaller than the number of centers")));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::param(format!("invalid separation {separation}")));
    }
    if !(0.0..1.0).contains(&outlier_fraction) {
        return Err(Error::param(format!("outlier fraction must be in [0,1), got {outlier_fraction}")));
    }
    if intrinsic_dim.is_some_and(|r| r == 0 || r > dim) {
        return Err(Error::param(format!("intrinsic dimension must be in 1..={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Option<Vec<Vec<Vec<f64>>>> =
        intrinsic_dim.map(|r| (0..centers).map(|_| random_frame(&mut rng, r, dim)).collect());
    let offset = separation / std::f64::consts::SQRT_2;
    let center = |c: usize, j: usize| if j == c { offset } else { 0.0 };

    let outliers = (n as f64 * outlier_fraction).round() as usize;
    let inliers = n - outliers;
    let mut rows: Vec<(Vec<f32>, usize)> = Vec::with_capacity(n);
    for i in 0..inliers {
        let c = i % centers;
        let noise: Vec<f64> = match &frames {
            None => (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
            Some(f) => {
                let mut v = vec![0.0; dim];
                for axis in &f[c] {
                    let z: f64 = rng.sample(StandardNormal);
                    v.iter_mut().zip(axis).for_each(|(x, a)| *x += z * a);
                }
                v
            }
        };
        let row = (0..dim).map(|j| (center(c, j) + noise[j]) as f32).collect();
        rows.push((row, c));
    }
    let (lo, hi) = (-OUTLIER_MARGIN, offset + OUTLIER_MARGIN);
    for _ in 0..outliers {
        let row: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
        let nearest = (0..centers)
            .map(|c| {
                let d: f64 = row.iter().enumerate().map(|(j, x)| (x - center(c, j)).powi(2)).sum();
                (d, c)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, c)| c)
            .unwrap_or(0);
        rows.push((row.into_iter().map(|x| x as f32).collect(), nearest));
    }
    rows.shuffle(&mut rng);

    let labels = Labels::from_strings(&rows.iter().map(|(_, c)| format!("blob{c}")).collect::<Vec<_>>());
    let values = rows.into_iter().flat_map(|(r, _)| r).collect();
    Ok(VectorDataset::new(values, n, dim)?
        .with_labels(labels)?
        .with_name(format!("blobs(n={n},d={dim},c={centers},sep={separation},out={outlier_fraction},seed={seed})")))
}

/// `r` orthonormal vectors in `dim` dimensions (Gram-Schmidt on Gaussians).
fn random_frame(rng: &mut ChaCha8Rng, r: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(r);
    while frame.len() < r {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for u in &frame {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            frame.push(v);
        }
    }
    frame
}
