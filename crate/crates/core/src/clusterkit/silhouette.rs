//! Silhouette coefficients with Euclidean distance.

use super::kmeans::Assignment;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Per-sample silhouette values. Singleton clusters score 0, as does any
/// sample with `max(a, b) == 0`.
pub fn silhouette_samples(exec: Exec, z: &Matrix, a: &Assignment) -> Result<Vec<f64>> {
    if a.k < 2 {
        return Err(Error::Invalid("silhouette needs k >= 2".into()));
    }
    if a.labels.len() != z.rows() {
        return Err(Error::shape("silhouette", "label count"));
    }
    let counts = a.counts();
    Ok(par::map_indices(exec, z.rows(), |i| {
        let own = a.labels[i];
        if counts[own] <= 1 {
            return 0.0;
        }
        let mut sums = vec![0.0; a.k];
        let zi = z.row(i);
        for j in 0..z.rows() {
            if j != i {
                let d: f64 = zi
                    .iter()
                    .zip(z.row(j))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                sums[a.labels[j]] += d;
            }
        }
        let intra = sums[own] / (counts[own] - 1) as f64;
        let nearest = (0..a.k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !nearest.is_finite() {
            return 0.0;
        }
        let denom = intra.max(nearest);
        if denom == 0.0 {
            0.0
        } else {
            (nearest - intra) / denom
        }
    }))
}

pub fn silhouette_view_with(exec: Exec, z: &Matrix, a: &Assignment) -> Result<f64> {
    let s = silhouette_samples(exec, z, a)?;
    if s.is_empty() {
        return Ok(0.0);
    }
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Mean silhouette of a view's representation.
pub fn silhouette_view(z: &Matrix, a: &Assignment) -> Result<f64> {
    silhouette_view_with(Exec::default(), z, a)
}
