//! Brute-force reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::HashMap;

use incgraph::NeighborGraph;

/// Brute-force k nearest neighbours of every node, ties to the smaller index.
pub fn knn_oracle(d: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut out = Vec::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
        for &j in &others[..k] {
            out.push((i, j, d[i][j]));
        }
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    out
}

pub fn incremental_oracle(d: &[Vec<f64>], k: usize, order: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for t in k..order.len() {
        let v = order[t];
        let mut prev: Vec<usize> = order[..t].to_vec();
        prev.sort_by(|&a, &b| d[v][a].total_cmp(&d[v][b]).then(a.cmp(&b)));
        for &q in &prev[..k] {
            out.push((v, q, d[v][q]));
        }
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    out
}

/// Kruskal on the complete graph; returns the total weight.
pub fn kruskal_weight(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (0.0, i, j))).collect();
    for p in &mut pairs {
        p.0 = d[p.1][p.2];
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut comp: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for (w, a, b) in pairs {
        let (ca, cb) = (comp[a], comp[b]);
        if ca != cb {
            total += w;
            comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
        }
    }
    total
}

/// Cyclic Jacobi eigenvalues of a dense symmetric matrix, ascending, with
/// eigenvectors as columns.
pub fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| a[x][x].total_cmp(&a[y][y]));
    let values = idx.iter().map(|&i| a[i][i]).collect();
    let vectors = idx.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Dense weights of the symmetrised connection affinity.
pub fn dense_weights(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; n]; n];
    for &(a, b) in edges {
        w[a][b] += 0.5;
        w[b][a] += 0.5;
    }
    w
}

/// Generalised spectrum of `(D - W) f = lambda D f` via `D^{-1/2} (D - W) D^{-1/2}`.
pub fn oracle_spectrum(w: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let m = (0..n)
        .map(|i| (0..n).map(|j| ((if i == j { d[i] } else { 0.0 }) - w[i][j]) / (d[i] * d[j]).sqrt()).collect())
        .collect();
    let (values, vectors) = jacobi(m);
    let f = vectors.into_iter().map(|g: Vec<f64>| g.iter().zip(&d).map(|(x, di)| x / di.sqrt()).collect()).collect();
    (values, f)
}

pub fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts.filter(|&c| c > 0).map(|c| c as f64 / n).map(|p| -p * p.ln()).sum()
}

/// h and c straight from the definitions, via joint and marginal entropies.
pub fn oracle_hc(truth: &[usize], pred: &[usize]) -> (f64, f64) {
    let n = truth.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tc: HashMap<usize, usize> = HashMap::new();
    let mut pc: HashMap<usize, usize> = HashMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *joint.entry((t, p)).or_default() += 1;
        *tc.entry(t).or_default() += 1;
        *pc.entry(p).or_default() += 1;
    }
    let h_c = entropy(tc.values().copied(), n);
    let h_k = entropy(pc.values().copied(), n);
    let h_ck = entropy(joint.values().copied(), n);
    let (c_given_k, k_given_c) = (h_ck - h_k, h_ck - h_c);
    let h = if h_c == 0.0 { 1.0 } else { 1.0 - c_given_k / h_c };
    let c = if h_k == 0.0 { 1.0 } else { 1.0 - k_given_c / h_k };
    (h, c)
}

pub fn adjacency(g: &NeighborGraph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut a = vec![vec![false; n]; n];
    for e in g.edges() {
        a[e.src][e.dst] = true;
        a[e.dst][e.src] = true;
    }
    a
}

pub fn degrees(a: &[Vec<bool>]) -> Vec<f64> {
    a.iter().map(|r| r.iter().filter(|&&x| x).count() as f64).collect()
}

pub fn oracle_density(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let e = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| a[i][j]).count();
    e as f64 / (n * (n - 1) / 2) as f64
}

/// Pearson correlation over both orientations of every edge.
pub fn oracle_assortativity(a: &[Vec<bool>]) -> Option<f64> {
    let n = a.len();
    let d = degrees(a);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[i][j] {
                xs.push(d[i]);
                ys.push(d[j]);
            }
        }
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (vx > 1e-12 && vy > 1e-12).then(|| cov / (vx * vy).sqrt())
}

pub fn oracle_transitivity(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let (mut closed, mut triples) = (0usize, 0usize);
    for v in 0..n {
        for u in 0..n {
            for w in u + 1..n {
                if u != v && w != v && a[v][u] && a[v][w] {
                    triples += 1;
                    if a[u][w] {
                        closed += 1;
                    }
                }
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

pub fn oracle_local_clustering(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let total: f64 = (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| a[v][u]).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let links = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).filter(|&(i, j)| a[nb[i]][nb[j]]).count();
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .sum();
    total / n as f64
}

/// Solves `(I - d P^T) x = (1 - d)/N 1` with dangling rows of P uniform.
pub fn oracle_pagerank(g: &NeighborGraph, d: f64) -> Vec<f64> {
    let n = g.n();
    let out = g.out_degrees();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        if out[i] == 0 {
            p[i].iter_mut().for_each(|x| *x = 1.0 / n as f64);
        }
    }
    for e in g.edges() {
        p[e.src][e.dst] = 1.0 / out[e.src] as f64;
    }
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| (if i == j { 1.0 } else { 0.0 }) - d * p[j][i]).collect();
            row.push((1.0 - d) / n as f64);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

pub fn oracle_homophily(a: &[Vec<bool>], labels: &[usize]) -> f64 {
    let n = a.len();
    let (mut same, mut all) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if a[i][j] {
                all += 1;
                if labels[i] == labels[j] {
                    same += 1;
                }
            }
        }
    }
    same as f64 / all as f64
}

/// Edges of the epsilon relation in both directions, inclusive threshold.
pub fn epsilon_oracle(d: &[Vec<f64>], eps: f64) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j] <= eps {
                out.push((i, j, d[i][j]));
            }
        }
    }
    out
}

/// Kruskal minimum spanning tree on the complete graph, as sorted
/// `(min, max, weight)` triples.
pub fn kruskal_edges(d: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| d[a.0][a.1].total_cmp(&d[b.0][b.1]));
    let mut comp: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for (a, b) in pairs {
        let (ca, cb) = (comp[a], comp[b]);
        if ca != cb {
            out.push((a, b, d[a][b]));
            comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
        }
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    out
}
