//! Lloyd's k-means with k-means++ seeding and restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::construction::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the objective improves by less than this fraction.
    pub rel_tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    /// Objective after each assignment step of the winning restart.
    pub history: Vec<f64>,
    /// All points were identical, so everything went to cluster 0.
    pub degenerate: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters `n` row-major points of dimension `dim` into `c` groups.
pub fn kmeans(points: &[f64], dim: usize, c: usize, seed: u64, config: KMeansConfig) -> Result<KMeansResult> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::param("point buffer does not match the dimension"));
    }
    let n = points.len() / dim;
    if c == 0 || c > n {
        return Err(Error::param(format!("cluster count must satisfy 1 <= C <= N (C={c}, N={n})")));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let all_same = (1..n).all(|i| row(i) == row(0));
    if c == 1 || all_same {
        let centroid = mean_of(points, dim, (0..n).collect::<Vec<_>>().as_slice());
        let objective = (0..n).map(|i| sq_dist(row(i), &centroid)).sum();
        return Ok(KMeansResult {
            labels: vec![0; n],
            centroids: vec![centroid],
            objective,
            history: vec![objective],
            degenerate: all_same && c > 1,
        });
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..config.restarts.max(1) {
        let run = lloyd(points, dim, c, derive_seed(seed, r as u64), config);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn mean_of(points: &[f64], dim: usize, members: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for &i in members {
        for (a, b) in m.iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
            *a += b;
        }
    }
    let len = members.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= len);
    m
}

/// Greedy k-means++: each new center is the best of `2 + ln c` candidates
/// drawn with probability proportional to squared distance.
fn plus_plus(points: &[f64], dim: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let trials = 2 + (c as f64).ln().floor() as usize;
    let mut centers = vec![row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let pick = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if target < w {
                        chosen = i;
                        break;
                    }
                    target -= w;
                }
                chosen
            } else {
                rng.random_range(0..n)
            };
            let next: Vec<f64> = (0..n).map(|i| d2[i].min(sq_dist(row(i), row(pick)))).collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, pick, next));
            }
        }
        let (_, pick, next) = best.expect("at least one trial");
        d2 = next;
        centers.push(row(pick).to_vec());
    }
    centers
}

fn lloyd(points: &[f64], dim: usize, c: usize, seed: u64, config: KMeansConfig) -> KMeansResult {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(points, dim, c, &mut rng);
    let mut labels = vec![0usize; n];
    let mut point_cost = vec![0.0; n];
    let mut history = Vec::new();

    for _ in 0..config.max_iter {
        for i in 0..n {
            let (mut arg, mut best) = (0, f64::INFINITY);
            for (k, ctr) in centroids.iter().enumerate() {
                let d = sq_dist(row(i), ctr);
                if d < best {
                    best = d;
                    arg = k;
                }
            }
            labels[i] = arg;
            point_cost[i] = best;
        }
        // Reseed empty clusters with the point farthest from its centroid.
        let mut sizes = vec![0usize; c];
        labels.iter().for_each(|&l| sizes[l] += 1);
        for k in 0..c {
            if sizes[k] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| point_cost[a].total_cmp(&point_cost[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                sizes[labels[i]] -= 1;
                labels[i] = k;
                sizes[k] = 1;
                point_cost[i] = 0.0;
                centroids[k] = row(i).to_vec();
            }
        }
        let objective: f64 = point_cost.iter().sum();
        let prev = history.last().copied();
        history.push(objective);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        for (k, mem) in members.iter().enumerate() {
            if !mem.is_empty() {
                centroids[k] = mean_of(points, dim, mem);
            }
        }
        if let Some(p) = prev {
            if p - objective <= config.rel_tol * p {
                break;
            }
        }
    }
    let objective = (0..n).map(|i| sq_dist(row(i), &centroids[labels[i]])).sum();
    KMeansResult {
        labels,
        centroids,
        objective,
        history,
        degenerate: false,
    }
}
