use std::collections::HashSet;

use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// Samples observed in one view.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewData {
    pub id: usize,
    /// n^v x d^v
    pub features: Matrix,
    /// Global sample id per row.
    pub ids: Vec<u64>,
    /// Class per row, only ever used for evaluation.
    pub labels: Vec<usize>,
}

impl ViewData {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Unpaired multi-view data: every global id lives in exactly one view.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    pub k: usize,
    pub views: Vec<ViewData>,
}

impl MultiViewDataset {
    /// Checks shapes, label ranges and the one-view-per-sample condition.
    pub fn new(name: impl Into<String>, k: usize, views: Vec<ViewData>) -> Result<Self> {
        let ds = MultiViewDataset {
            name: name.into(),
            k,
            views,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Dataset("K must be >= 1".into()));
        }
        let mut seen = HashSet::new();
        for v in &self.views {
            if v.ids.len() != v.len() || v.labels.len() != v.len() {
                return Err(Error::Dataset(format!(
                    "view {}: {} rows, {} ids, {} labels",
                    v.id,
                    v.len(),
                    v.ids.len(),
                    v.labels.len()
                )));
            }
            if let Some(&l) = v.labels.iter().find(|&&l| l >= self.k) {
                return Err(Error::Dataset(format!(
                    "view {}: label {l} out of range for K = {}",
                    v.id, self.k
                )));
            }
            for &id in &v.ids {
                if !seen.insert(id) {
                    return Err(Error::Dataset(format!(
                        "sample {id} appears in more than one view: violates unpaired condition"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    /// N = sum of n^v.
    pub fn total_samples(&self) -> usize {
        self.views.iter().map(ViewData::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.views.iter().map(ViewData::len).collect()
    }

    /// Row offset of each view inside the row-concatenated common view.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.views.len());
        let mut acc = 0;
        for v in &self.views {
            off.push(acc);
            acc += v.len();
        }
        off
    }

    /// Labels in common-view row order.
    pub fn all_labels(&self) -> Vec<usize> {
        self.views
            .iter()
            .flat_map(|v| v.labels.iter().copied())
            .collect()
    }
}

/// Fully paired source data: every view holds every sample, rows aligned.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDataset {
    pub name: String,
    pub k: usize,
    pub ids: Vec<u64>,
    pub labels: Vec<usize>,
    /// (view id, n x d^v)
    pub views: Vec<(usize, Matrix)>,
}

impl PairedDataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if self.labels.len() != n {
            return Err(Error::Dataset("paired: label count".into()));
        }
        if let Some((id, m)) = self.views.iter().find(|(_, m)| m.rows() != n) {
            return Err(Error::Dataset(format!(
                "paired view {id}: {} rows, expected {n}",
                m.rows()
            )));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.k) {
            return Err(Error::Dataset(format!("label {l} out of range for K = {}", self.k)));
        }
        let distinct: HashSet<_> = self.ids.iter().collect();
        if distinct.len() != n {
            return Err(Error::Dataset("paired: duplicate sample id".into()));
        }
        Ok(())
    }
}
