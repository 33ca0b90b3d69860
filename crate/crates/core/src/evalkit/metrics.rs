//! NMI (arithmetic-mean normalization), Hungarian-mapped accuracy and
//! pairwise F1. All three are invariant under relabeling of `pred`.

use std::collections::BTreeMap;

use crate::clusterkit::hungarian_max;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

fn check(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Invalid(format!(
            "label length mismatch: pred={}, truth={}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Dense contingency table with compacted label ids.
struct Contingency {
    table: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    n: usize,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

fn contingency(pred: &[usize], truth: &[usize]) -> Contingency {
    let (p, kp) = compact(pred);
    let (t, kt) = compact(truth);
    let mut table = vec![vec![0usize; kt]; kp];
    for (&a, &b) in p.iter().zip(&t) {
        table[a][b] += 1;
    }
    let row_sums = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    Contingency {
        table,
        row_sums,
        col_sums,
        n: pred.len(),
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the mean of the two entropies. Two single-label
/// partitions score 1; one single-label partition against a split scores 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::Invalid("nmi of empty labelings".into()));
    }
    let c = contingency(pred, truth);
    let n = c.n as f64;
    let hp = entropy(&c.row_sums, c.n);
    let ht = entropy(&c.col_sums, c.n);
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (nij * n / (c.row_sums[i] as f64 * c.col_sums[j] as f64)).ln();
            }
        }
    }
    let denom = 0.5 * (hp + ht);
    if denom == 0.0 {
        // both partitions are a single block, hence identical
        return Ok(1.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Fraction of samples correct under the best one-to-one cluster-to-class map.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::Invalid("acc of empty labelings".into()));
    }
    let c = contingency(pred, truth);
    let size = c.table.len().max(c.col_sums.len());
    let w = Matrix::from_fn(size, size, |i, j| {
        c.table
            .get(i)
            .and_then(|r| r.get(j))
            .map_or(0.0, |&x| x as f64)
    });
    let m = hungarian_max(&w)?;
    Ok(m.weight(&w) / c.n as f64)
}

fn pairs(x: usize) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// F-measure over unordered same-cluster pairs. No predicted or no true
/// pairs gives 0.
pub fn pairwise_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    if pred.len() < 2 {
        return Err(Error::Invalid("pairwise F1 needs at least 2 samples".into()));
    }
    let c = contingency(pred, truth);
    let tp: f64 = c.table.iter().flatten().map(|&x| pairs(x)).sum();
    let pred_pairs: f64 = c.row_sums.iter().map(|&x| pairs(x)).sum();
    let true_pairs: f64 = c.col_sums.iter().map(|&x| pairs(x)).sum();
    if pred_pairs == 0.0 || true_pairs == 0.0 || tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / pred_pairs;
    let recall = tp / true_pairs;
    Ok(2.0 * precision * recall / (precision + recall))
}
