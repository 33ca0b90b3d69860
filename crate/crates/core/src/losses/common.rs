use super::inner::cosine_sim;
use super::xent::{masked_nt_xent, AnchorPairs};
use crate::clusterkit::{cosine_matrix, hungarian_max, MatchMatrix};
use crate::diffnet::{Matrix, Tape, Var};
use crate::error::{Error, Result};

/// Matching of common-view clusters (rows) to the clusters of one view
/// (columns) by maximum total centroid cosine.
pub fn match_common(common: &Matrix, view: &Matrix) -> Result<MatchMatrix> {
    if common.rows() != view.rows() {
        return Err(Error::shape(
            "match_common",
            format!("{} common centroids vs {} view centroids", common.rows(), view.rows()),
        ));
    }
    hungarian_max(&cosine_matrix(common, view)?)
}

/// Labels of the stacked batch rows at one level.
#[derive(Clone, Debug)]
pub struct CommonLevel {
    /// Common-view cluster of each stacked row.
    pub common: Vec<usize>,
    /// Own-view cluster of each stacked row.
    pub view: Vec<usize>,
    /// View each stacked row came from.
    pub view_of: Vec<usize>,
    /// Common-to-view matching per view.
    pub matchings: Vec<MatchMatrix>,
}

impl CommonLevel {
    fn anchors(&self) -> Result<Vec<AnchorPairs>> {
        let n = self.common.len();
        if self.view.len() != n || self.view_of.len() != n {
            return Err(Error::shape("common_contrastive_loss", "label vectors differ in length"));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut a = AnchorPairs::default();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let m = self
                    .matchings
                    .get(self.view_of[j])
                    .ok_or_else(|| Error::Invalid(format!("no matching for view {}", self.view_of[j])))?;
                if m.linked(self.common[i], self.view[j]) {
                    a.pos.push(j);
                } else {
                    a.neg.push(j);
                }
            }
            a.weight = if a.pos.is_empty() {
                0.0
            } else {
                1.0 / (n * a.pos.len()) as f64
            };
            out.push(a);
        }
        Ok(out)
    }
}

/// Contrastive term between the stacked batch (the common view) and every
/// view batch, averaged over `levels`.
pub fn common_contrastive_loss(
    tape: &mut Tape<'_>,
    latents: &[Var],
    levels: &[CommonLevel],
    temperature: f64,
) -> Result<Var> {
    if levels.is_empty() {
        return Err(Error::Invalid("common contrastive loss needs a level".into()));
    }
    let stacked = tape.vstack(latents)?;
    let sim = cosine_sim(tape, stacked)?;
    let rows = tape.value(sim).rows();
    let w = 1.0 / levels.len() as f64;
    let mut terms = Vec::with_capacity(levels.len());
    for level in levels {
        if level.common.len() != rows {
            return Err(Error::shape("common_contrastive_loss", "labels do not cover the batch"));
        }
        let anchors = level.anchors()?;
        terms.push((masked_nt_xent(tape, sim, anchors, temperature), w));
    }
    tape.weighted_sum(&terms)
}
