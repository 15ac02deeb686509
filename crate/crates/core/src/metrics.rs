//! Homogeneity, completeness and V-measure.
//!
//! Entropies are in nats with `0 log 0 = 0`. When a marginal has zero
//! entropy the corresponding score is defined as 1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint counts of true classes (rows) and predicted clusters (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub class_totals: Vec<usize>,
    pub cluster_totals: Vec<usize>,
    pub total: usize,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::param(format!(
                "label length mismatch: truth={}, predicted={}",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::param("label vectors are empty"));
        }
        let (t, nc) = dense_ids(truth);
        let (p, nk) = dense_ids(pred);
        let mut counts = vec![vec![0; nk]; nc];
        for (&a, &b) in t.iter().zip(&p) {
            counts[a][b] += 1;
        }
        let class_totals = counts.iter().map(|r| r.iter().sum()).collect();
        let cluster_totals = (0..nk).map(|k| counts.iter().map(|r| r[k]).sum()).collect();
        Ok(ContingencyTable {
            counts,
            class_totals,
            cluster_totals,
            total: truth.len(),
        })
    }

    fn entropy(totals: &[usize], n: f64) -> f64 {
        totals
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    /// `H(C | K)` when `by_cluster`, else `H(K | C)`.
    fn conditional_entropy(&self, by_cluster: bool) -> f64 {
        let n = self.total as f64;
        let mut h = 0.0;
        for (c, row) in self.counts.iter().enumerate() {
            for (k, &nck) in row.iter().enumerate() {
                if nck == 0 {
                    continue;
                }
                let cond = if by_cluster { self.cluster_totals[k] } else { self.class_totals[c] };
                h -= nck as f64 / n * (nck as f64 / cond as f64).ln();
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

pub fn homogeneity_completeness(truth: &[usize], pred: &[usize]) -> Result<(f64, f64)> {
    let table = ContingencyTable::new(truth, pred)?;
    let n = table.total as f64;
    let h_c = ContingencyTable::entropy(&table.class_totals, n);
    let h_k = ContingencyTable::entropy(&table.cluster_totals, n);
    let h = if h_c == 0.0 { 1.0 } else { 1.0 - table.conditional_entropy(true) / h_c };
    let c = if h_k == 0.0 { 1.0 } else { 1.0 - table.conditional_entropy(false) / h_k };
    Ok((h.clamp(0.0, 1.0), c.clamp(0.0, 1.0)))
}

/// `V_beta = (1 + beta) h c / (beta h + c)`; zero when both scores are zero.
pub fn v_measure_from(h: f64, c: f64, beta: f64) -> f64 {
    let denom = beta * h + c;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + beta) * h * c / denom
    }
}

pub fn v_measure(truth: &[usize], pred: &[usize], beta: f64) -> Result<f64> {
    Ok(scores(truth, pred, beta)?.v_measure)
}

pub fn scores(truth: &[usize], pred: &[usize], beta: f64) -> Result<ClusterScores> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::param(format!("beta must be non-negative, got {beta}")));
    }
    let (h, c) = homogeneity_completeness(truth, pred)?;
    Ok(ClusterScores {
        homogeneity: h,
        completeness: c,
        v_measure: v_measure_from(h, c, beta),
    })
}
