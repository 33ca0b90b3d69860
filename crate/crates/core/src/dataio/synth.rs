use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{MultiViewDataset, ViewData};
use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::rng;

/// Gaussian blobs in a shared K-dimensional space, one linear distortion
/// per view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k: usize,
    /// d^v per view; the view count is its length.
    pub dims: Vec<usize>,
    pub samples_per_cluster: usize,
    /// Smallest distance between two class centers.
    pub separation: f64,
    pub std: f64,
    #[serde(default)]
    pub distortion_seed: u64,
    #[serde(default = "default_name")]
    pub name: String,
}

fn default_name() -> String {
    "synthetic".into()
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("synthetic spec: {m}")));
        if self.k == 0 {
            return bad("k must be >= 1");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be non-empty and >= 1");
        }
        if self.samples_per_cluster == 0 {
            return bad("samples_per_cluster must be >= 1");
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad("separation must be > 0");
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return bad("std must be > 0");
        }
        Ok(())
    }
}

/// Class centers shared by every view: Gaussian points in K dimensions,
/// rescaled so the closest pair sits exactly `separation` apart.
///
/// An equidistant layout would make classes interchangeable between views,
/// leaving nothing to tell which cluster of one view matches which of
/// another once samples are unpaired.
pub fn class_centers(spec: &SyntheticSpec) -> Matrix {
    let k = spec.k;
    let mut r = rng::stream(spec.distortion_seed, &[u64::MAX]);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let raw = Matrix::from_fn(k, k, |_, _| unit.sample(&mut r));
    let mut closest = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let d: f64 = raw.row(a).iter().zip(raw.row(b)).map(|(x, y)| (x - y).powi(2)).sum();
            closest = closest.min(d.sqrt());
        }
    }
    if closest.is_finite() && closest > 0.0 {
        raw.map(|x| x * spec.separation / closest)
    } else {
        raw
    }
}

/// Each view draws its own samples around the shared [`class_centers`] and
/// maps them through a random K x d^v Gaussian matrix. Global ids are
/// consecutive across views.
pub fn synthesize(spec: &SyntheticSpec, seed: u64) -> Result<MultiViewDataset> {
    spec.validate()?;
    let k = spec.k;
    let noise = Normal::new(0.0, spec.std).map_err(|e| Error::Invalid(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0 / (k as f64).sqrt()).expect("valid normal");
    let centers = class_centers(spec);
    let mut next_id = 0u64;
    let mut views = Vec::with_capacity(spec.dims.len());
    for (v, &d) in spec.dims.iter().enumerate() {
        let mut mr = rng::stream(spec.distortion_seed, &[v as u64]);
        let map = Matrix::from_fn(k, d, |_, _| unit.sample(&mut mr));
        let mut sr = rng::stream(seed, &[v as u64]);
        let n = k * spec.samples_per_cluster;
        let mut labels = Vec::with_capacity(n);
        let latent = Matrix::from_fn(n, k, |i, j| {
            centers.get(i / spec.samples_per_cluster, j) + noise.sample(&mut sr)
        });
        for i in 0..n {
            labels.push(i / spec.samples_per_cluster);
        }
        // interleave classes so files are not sorted by label
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, sr.random_range(0..=i));
        }
        let features = latent.matmul(&map)?.select_rows(&order);
        let labels = order.iter().map(|&i| labels[i]).collect();
        let ids = (0..n as u64).map(|i| next_id + i).collect();
        next_id += n as u64;
        views.push(ViewData {
            id: v,
            features,
            ids,
            labels,
        });
    }
    MultiViewDataset::new(spec.name.clone(), k, views)
}
