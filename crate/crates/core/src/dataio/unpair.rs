use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::{MultiViewDataset, PairedDataset, ViewData};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnpairStrategy {
    /// Class by class, shuffled, dealt to views in turn with one running
    /// counter, so per-class and per-view counts stay within one sample.
    #[default]
    StratifiedRoundRobin,
    /// Each sample goes to a uniformly drawn view.
    UniformRandom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnpairRecipe {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strategy: UnpairStrategy,
}

/// Keeps each sample of a paired dataset in exactly one view.
pub fn unpair(src: &PairedDataset, recipe: &UnpairRecipe) -> Result<MultiViewDataset> {
    src.validate()?;
    let v_count = src.views.len();
    if v_count < 2 {
        return Err(Error::Dataset(format!(
            "unpairing needs at least 2 views, got {v_count}"
        )));
    }
    let n = src.ids.len();
    let mut owner = vec![0usize; n];
    match recipe.strategy {
        UnpairStrategy::StratifiedRoundRobin => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); src.k];
            for (i, &c) in src.labels.iter().enumerate() {
                by_class[c].push(i);
            }
            if let Some(c) = by_class.iter().position(Vec::is_empty) {
                return Err(Error::Dataset(format!(
                    "class {c} has no samples; cannot stratify"
                )));
            }
            let mut counter = 0usize;
            for (c, members) in by_class.iter_mut().enumerate() {
                members.sort_by_key(|&i| src.ids[i]);
                members.shuffle(&mut rng::stream(recipe.seed, &[c as u64]));
                for &i in members.iter() {
                    owner[i] = counter % v_count;
                    counter += 1;
                }
            }
        }
        UnpairStrategy::UniformRandom => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| src.ids[i]);
            let mut r = rng::stream(recipe.seed, &[]);
            for i in order {
                owner[i] = r.random_range(0..v_count);
            }
        }
    }
    let views = src
        .views
        .iter()
        .enumerate()
        .map(|(v, (id, m))| {
            let rows: Vec<usize> = (0..n).filter(|&i| owner[i] == v).collect();
            ViewData {
                id: *id,
                features: m.select_rows(&rows),
                ids: rows.iter().map(|&i| src.ids[i]).collect(),
                labels: rows.iter().map(|&i| src.labels[i]).collect(),
            }
        })
        .collect();
    MultiViewDataset::new(src.name.clone(), src.k, views)
}
