use super::pairs::PairSets;
use super::xent::{masked_nt_xent, AnchorPairs};
use crate::diffnet::{Tape, Var};
use crate::error::{Error, Result};

/// Cosine similarity matrix of the rows of `z`.
pub(crate) fn cosine_sim(tape: &mut Tape<'_>, z: Var) -> Result<Var> {
    let zn = tape.row_normalize(z);
    tape.matmul_nt(zn, zn)
}

/// Within-view contrastive term over true-positive and true-negative pairs,
/// each anchor weighted by `1 / (b * m_i)` and views averaged.
pub fn inner_contrastive_loss(
    tape: &mut Tape<'_>,
    latents: &[Var],
    pairs: &[PairSets],
    temperature: f64,
) -> Result<Var> {
    if latents.len() != pairs.len() {
        return Err(Error::shape("inner_contrastive_loss", "one pair set per view"));
    }
    let v_count = latents.len() as f64;
    let mut terms = Vec::with_capacity(latents.len());
    for (&z, p) in latents.iter().zip(pairs) {
        let b = tape.value(z).rows();
        if p.tp.len() != b {
            return Err(Error::shape("inner_contrastive_loss", "pair set size differs from batch"));
        }
        let sim = cosine_sim(tape, z)?;
        let anchors = (0..b)
            .map(|i| AnchorPairs {
                pos: p.tp[i].clone(),
                neg: p.tn[i].clone(),
                weight: if p.m(i) == 0 { 0.0 } else { 1.0 / (b * p.m(i)) as f64 },
            })
            .collect();
        terms.push((masked_nt_xent(tape, sim, anchors, temperature), 1.0 / v_count));
    }
    tape.weighted_sum(&terms)
}
