use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// Cosine similarity. A zero vector has similarity 0 with everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = na.sqrt() * nb.sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).clamp(-1.0, 1.0)
    }
}

/// Row-pairwise cosine: `out[i][j] = cosine(a_i, b_j)`.
pub fn cosine_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape(
            "cosine_matrix",
            format!("{} vs {} cols", a.cols(), b.cols()),
        ));
    }
    Ok(Matrix::from_fn(a.rows(), b.rows(), |i, j| {
        cosine(a.row(i), b.row(j))
    }))
}
