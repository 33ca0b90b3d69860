use serde::{Deserialize, Serialize};

use super::dataset::{MultiViewDataset, PairedDataset};
use crate::diffnet::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMethod {
    /// Each column to [0, 1]; constant columns become 0.
    #[default]
    Minmax,
    /// Each column to mean 0, population std 1; constant columns become 0.
    Zscore,
    None,
}

fn scale_matrix(m: &Matrix, method: ScaleMethod) -> Matrix {
    let (n, d) = m.shape();
    if n == 0 || method == ScaleMethod::None {
        return m.clone();
    }
    let mut shift = vec![0.0; d];
    let mut factor = vec![0.0; d];
    for j in 0..d {
        let col = (0..n).map(|i| m.get(i, j));
        match method {
            ScaleMethod::Minmax => {
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
                shift[j] = lo;
                factor[j] = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
            }
            ScaleMethod::Zscore => {
                let mean = col.clone().sum::<f64>() / n as f64;
                let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                shift[j] = mean;
                factor[j] = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
            }
            ScaleMethod::None => unreachable!(),
        }
    }
    Matrix::from_fn(n, d, |i, j| (m.get(i, j) - shift[j]) * factor[j])
}

/// Per view, per column scaling.
pub fn scale(ds: &MultiViewDataset, method: ScaleMethod) -> MultiViewDataset {
    let mut out = ds.clone();
    for v in &mut out.views {
        v.features = scale_matrix(&v.features, method);
    }
    out
}

pub fn scale_paired(ds: &PairedDataset, method: ScaleMethod) -> PairedDataset {
    let mut out = ds.clone();
    for (_, m) in &mut out.views {
        *m = scale_matrix(m, method);
    }
    out
}
