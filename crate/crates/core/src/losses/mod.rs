//! The four terms of the training objective.
//!
//! All clustering state (assignments, centroids, matchings, reliable-view
//! sets) enters as constants; gradients reach the latent batches only
//! through cosine similarities and soft assignments.

mod common;
mod cross;
mod inner;
mod pairs;
mod recon;
mod xent;

use serde::{Deserialize, Serialize};

use crate::diffnet::{Tape, Var};
use crate::error::{Error, Result};

pub use common::{common_contrastive_loss, match_common, CommonLevel};
pub use cross::{cross_view_kl, select_reliable, view_distribution, DIST_FLOOR};
pub use inner::inner_contrastive_loss;
pub use pairs::{build_inner_pairs, PairSets};
pub use recon::{recon_orth_loss, ViewBatch};
pub use xent::{masked_nt_xent, AnchorPairs};

/// Ordered cluster counts from coarse to fine; the last one is K.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    levels: Vec<usize>,
}

impl ClusterSet {
    /// `{2, ceil(K/2), K}` without repeats or single-cluster levels, so
    /// K <= 3 gets fewer than three levels.
    pub fn default_for(k: usize) -> Self {
        let mut levels: Vec<usize> = [2, k.div_ceil(2), k]
            .into_iter()
            .filter(|&c| c <= k && (c >= 2 || c == k))
            .collect();
        levels.sort_unstable();
        levels.dedup();
        ClusterSet { levels }
    }

    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() || levels.contains(&0) {
            return Err(Error::Invalid("cluster set needs positive counts".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!(
                "cluster set must be strictly increasing: {levels:?}"
            )));
        }
        Ok(ClusterSet { levels })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn finest(&self) -> usize {
        *self.levels.last().expect("non-empty")
    }

    /// The first `len` levels (clamped to what exists).
    pub fn active(&self, len: usize) -> &[usize] {
        &self.levels[..len.clamp(1, self.levels.len())]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub temperature: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 1.0,
            lambda2: 0.01,
            lambda3: 0.01,
            lambda4: 1e3,
            temperature: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let ls = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if ls.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Invalid(format!("loss weights must be >= 0: {ls:?}")));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Invalid("temperature must be > 0".into()));
        }
        Ok(())
    }
}

/// Scalar terms of one step's objective.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms {
    pub ae: Var,
    pub inner: Var,
    pub common: Var,
    pub cross: Var,
}

/// Plain values of the terms and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ae: f64,
    pub inner: f64,
    pub common: f64,
    pub cross: f64,
    pub total: f64,
}

/// `ae + lambda2 * inner + lambda3 * common + lambda4 * cross`
pub fn total_loss(tape: &mut Tape<'_>, terms: LossTerms, w: &LossWeights) -> Result<(Var, LossBreakdown)> {
    let total = tape.weighted_sum(&[
        (terms.ae, 1.0),
        (terms.inner, w.lambda2),
        (terms.common, w.lambda3),
        (terms.cross, w.lambda4),
    ])?;
    let b = LossBreakdown {
        ae: tape.value(terms.ae).item(),
        inner: tape.value(terms.inner).item(),
        common: tape.value(terms.common).item(),
        cross: tape.value(terms.cross).item(),
        total: tape.value(total).item(),
    };
    Ok((total, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::Matrix;

    #[test]
    fn default_cluster_sets() {
        assert_eq!(ClusterSet::default_for(10).levels(), &[2, 5, 10]);
        assert_eq!(ClusterSet::default_for(5).levels(), &[2, 3, 5]);
        assert_eq!(ClusterSet::default_for(3).levels(), &[2, 3]);
        assert_eq!(ClusterSet::default_for(2).levels(), &[2]);
        assert_eq!(ClusterSet::default_for(1).levels(), &[1]);
        assert_eq!(ClusterSet::default_for(10).active(2), &[2, 5]);
        assert!(ClusterSet::new(vec![3, 3]).is_err());
    }

    #[test]
    fn total_is_weighted_sum() {
        let mut t = Tape::new();
        let one = |t: &mut Tape| t.constant(Matrix::scalar(1.0));
        let terms = LossTerms {
            ae: one(&mut t),
            inner: one(&mut t),
            common: one(&mut t),
            cross: one(&mut t),
        };
        let w = LossWeights {
            lambda1: 0.0,
            lambda2: 2.0,
            lambda3: 3.0,
            lambda4: 4.0,
            temperature: 0.1,
        };
        let (_, b) = total_loss(&mut t, terms, &w).unwrap();
        assert_eq!(b.total, 10.0);
        let zero = LossWeights {
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            ..w
        };
        assert_eq!(total_loss(&mut t, terms, &zero).unwrap().1.total, b.ae);
    }
}
