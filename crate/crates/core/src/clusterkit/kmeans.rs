//! Seeded K-means: k-means++ seeding, Lloyd iterations, empty-cluster repair.

use rand::Rng as _;

use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rng;

/// Hard cluster labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: f64,
}

impl Assignment {
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// k x D centroid matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Centroids(pub Matrix);

impl Centroids {
    pub fn k(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the largest centroid displacement falls below this.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            max_iter: 100,
            tol: 1e-6,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub assignment: Assignment,
    pub centroids: Centroids,
    pub iterations: usize,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(z: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    kmeans_with(
        Exec::default(),
        z,
        &KMeansParams {
            k,
            max_iter,
            tol,
            seed,
        },
    )
}

pub fn kmeans_with(exec: Exec, z: &Matrix, p: &KMeansParams) -> Result<KMeansFit> {
    check(z, p.k)?;
    let init = plus_plus(z, p.k, p.seed);
    lloyd(exec, z, init, p.max_iter, p.tol)
}

/// Lloyd iterations starting from given centroids.
pub fn kmeans_warm(z: &Matrix, init: &Centroids, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    check(z, init.k())?;
    if init.0.cols() != z.cols() {
        return Err(Error::shape("kmeans_warm", "centroid width"));
    }
    lloyd(Exec::default(), z, init.0.clone(), max_iter, tol)
}

/// Best (lowest inertia) of `restarts` seeded runs; earlier restarts win ties.
pub fn kmeans_best_of(z: &Matrix, p: &KMeansParams, restarts: usize) -> Result<KMeansFit> {
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let fit = kmeans_with(
            Exec::default(),
            z,
            &KMeansParams {
                seed: rng::derive(p.seed, &[r as u64]),
                ..*p
            },
        )?;
        if best
            .as_ref()
            .is_none_or(|b| fit.assignment.inertia < b.assignment.inertia)
        {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn check(z: &Matrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Invalid("kmeans: k must be >= 1".into()));
    }
    if z.rows() < k {
        return Err(Error::Invalid(format!(
            "kmeans: {} rows for k = {k}",
            z.rows()
        )));
    }
    z.ensure_finite(|| "kmeans input".into())
}

fn sample_weighted(r: &mut rng::Rng, d2: &[f64], total: f64) -> usize {
    let n = d2.len();
    let mut target = r.random_range(0.0..total);
    let mut pick = n - 1;
    for (i, &d) in d2.iter().enumerate() {
        if d > 0.0 && target < d {
            pick = i;
            break;
        }
        target -= d;
    }
    // rounding can walk past the end onto a zero-weight point
    if d2[pick] == 0.0 {
        pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
    }
    pick
}

/// Greedy k-means++: each new center is the best of `2 + ln k` candidates
/// drawn by squared distance, judged by the resulting potential.
fn plus_plus(z: &Matrix, k: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, &[]);
    let n = z.rows();
    let trials = 2 + (k as f64).ln() as usize;
    let mut chosen = vec![r.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            chosen.push(r.random_range(0..n));
            continue;
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = sample_weighted(&mut r, &d2, total);
            let nd: Vec<f64> = d2
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(sq_dist(z.row(i), z.row(cand))))
                .collect();
            let pot: f64 = nd.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, cand, nd));
            }
        }
        let (_, next, nd) = best.expect("at least one trial");
        chosen.push(next);
        d2 = nd;
    }
    z.select_rows(&chosen)
}

fn assign(exec: Exec, z: &Matrix, c: &Matrix) -> (Vec<usize>, Vec<f64>) {
    let pairs = par::map_indices(exec, z.rows(), |i| {
        let row = z.row(i);
        let mut best = (0, f64::INFINITY);
        for j in 0..c.rows() {
            let d = sq_dist(row, c.row(j));
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    });
    pairs.into_iter().unzip()
}

/// Gives every empty cluster the point farthest from its own centroid
/// (taken only from clusters that keep at least one member).
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..labels.len() {
            if counts[labels[i]] > 1 && pick.is_none_or(|p| dists[i] > dists[p]) {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            counts[labels[i]] -= 1;
            labels[i] = c;
            dists[i] = 0.0;
            counts[c] = 1;
        }
    }
}

fn means(z: &Matrix, labels: &[usize], old: &Matrix) -> Matrix {
    let (k, d) = old.shape();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums.row_mut(l).iter_mut().zip(z.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            sums.row_mut(c).copy_from_slice(old.row(c));
        } else {
            let inv = 1.0 / counts[c] as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
        }
    }
    sums
}

fn lloyd(exec: Exec, z: &Matrix, mut centroids: Matrix, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    let k = centroids.rows();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut labels;
    loop {
        let (l, mut d) = assign(exec, z, &centroids);
        labels = l;
        history.push(d.iter().sum());
        if iterations >= max_iter {
            break;
        }
        repair_empty(&mut labels, &mut d, k);
        let updated = means(z, &labels, &centroids);
        let shift = (0..k)
            .map(|c| sq_dist(updated.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        iterations += 1;
        if shift < tol {
            let (l, d) = assign(exec, z, &centroids);
            labels = l;
            history.push(d.iter().sum());
            break;
        }
    }
    let mut dists: Vec<f64> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(z.row(i), centroids.row(l)))
        .collect();
    repair_empty(&mut labels, &mut dists, k);
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(z.row(i), centroids.row(l)))
        .sum();
    Ok(KMeansFit {
        assignment: Assignment { labels, k, inertia },
        centroids: Centroids(centroids),
        iterations,
        inertia_history: history,
    })
}
