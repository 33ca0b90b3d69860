use crate::diffnet::{Matrix, Tape, Var};
use crate::error::{Error, Result};

/// One view's input batch, latent batch and reconstruction, all on the tape.
pub type ViewBatch = (Var, Var, Var);

/// `sum_v ||Xhat - X||^2 / b + lambda1 * ||Z Z^T - I||^2 / b^2`
pub fn recon_orth_loss(tape: &mut Tape<'_>, views: &[ViewBatch], lambda1: f64) -> Result<Var> {
    let mut terms = Vec::with_capacity(2 * views.len());
    for &(x, z, xhat) in views {
        let b = tape.value(x).rows();
        if b == 0 {
            return Err(Error::Invalid("reconstruction loss on an empty batch".into()));
        }
        let diff = tape.sub(xhat, x)?;
        let rec = tape.sum_squares(diff);
        terms.push((rec, 1.0 / b as f64));
        if lambda1 != 0.0 {
            let gram = tape.matmul_nt(z, z)?;
            let eye = tape.constant(Matrix::identity(b));
            let off = tape.sub(gram, eye)?;
            let orth = tape.sum_squares(off);
            terms.push((orth, lambda1 / (b * b) as f64));
        }
    }
    tape.weighted_sum(&terms)
}
