use std::collections::BTreeMap;

use crate::clusterkit::{kmeans_warm, kmeans_with, silhouette_view, Centroids, KMeansFit, KMeansParams, MatchMatrix};
use crate::diffnet::{AutoencoderBundle, Matrix};
use crate::error::{Error, Result};
use crate::losses::{match_common, select_reliable, ClusterSet};
use crate::par::{self, Exec};
use crate::rng;

/// Labels and centroids of one K-means fit.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFit {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
}

impl From<KMeansFit> for LevelFit {
    fn from(f: KMeansFit) -> Self {
        LevelFit {
            labels: f.assignment.labels,
            centroids: f.centroids.0,
        }
    }
}

/// Clusterings of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFits {
    pub k: usize,
    /// One per view, on that view's representation.
    pub views: Vec<LevelFit>,
    /// On the row-stacked representation of all views.
    pub common: LevelFit,
    /// Common-to-view cluster matching per view.
    pub matchings: Vec<MatchMatrix>,
}

/// Clustering state held fixed during one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelState {
    /// Length of the active level prefix.
    pub active: usize,
    /// Fits keyed by level index. The active levels and the finest level
    /// are always present.
    pub fits: BTreeMap<usize, LevelFits>,
    /// Per-view silhouette of the finest-level clustering.
    pub silhouettes: Vec<f64>,
    pub reliable: Vec<Vec<usize>>,
    pub reliability_coeff: f64,
    /// Row offset of each view in the stacked representation.
    pub offsets: Vec<usize>,
}

impl LevelState {
    pub fn finest(&self) -> &LevelFits {
        self.fits.values().next_back().expect("finest level present")
    }

    /// Fits of the active levels, coarse to fine.
    pub fn active_fits(&self) -> impl Iterator<Item = &LevelFits> {
        (0..self.active).map(|i| &self.fits[&i])
    }
}

/// Centroids from the previous refresh, by level index: per view, then the
/// common view.
pub type WarmStart = BTreeMap<usize, (Vec<Matrix>, Matrix)>;

#[derive(Clone, Copy, Debug)]
pub struct RefreshParams {
    pub active: usize,
    pub reliability_coeff: f64,
    pub seed: u64,
    pub epoch: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub exec: Exec,
}

fn fit(z: &Matrix, k: usize, warm: Option<&Matrix>, seed: u64, p: &RefreshParams) -> Result<LevelFit> {
    let f = match warm {
        Some(c) if c.rows() == k && c.cols() == z.cols() => {
            kmeans_warm(z, &Centroids(c.clone()), p.max_iter, p.tol)?
        }
        _ => kmeans_with(
            p.exec,
            z,
            &KMeansParams {
                k,
                max_iter: p.max_iter,
                tol: p.tol,
                seed,
            },
        )?,
    };
    Ok(f.into())
}

/// Eval-mode representation of every view.
pub fn encode_views(bundle: &AutoencoderBundle, features: &[&Matrix]) -> Result<Vec<Matrix>> {
    features
        .iter()
        .enumerate()
        .map(|(v, x)| bundle.encode_eval(v, x))
        .collect()
}

/// Clusters every view and the stacked common view at the active levels
/// and the finest level, matches common clusters to view clusters, and
/// ranks views by finest-level silhouette.
pub fn refresh_level_state(
    latents: &[Matrix],
    set: &ClusterSet,
    warm: &WarmStart,
    p: &RefreshParams,
) -> Result<LevelState> {
    let v_count = latents.len();
    let finest = set.levels().len() - 1;
    let k_max = set.finest();
    if let Some((v, z)) = latents.iter().enumerate().find(|(_, z)| z.rows() < k_max) {
        return Err(Error::Dataset(format!(
            "view {v} has {} samples, fewer than K = {k_max}",
            z.rows()
        )));
    }
    let active = p.active.clamp(1, set.levels().len());
    let mut level_idx: Vec<usize> = (0..active).collect();
    if !level_idx.contains(&finest) {
        level_idx.push(finest);
    }
    let refs: Vec<&Matrix> = latents.iter().collect();
    let stacked = Matrix::vstack(&refs)?;

    // one job per (level, view) plus one per level for the common view
    let jobs: Vec<(usize, Option<usize>)> = level_idx
        .iter()
        .flat_map(|&l| (0..v_count).map(move |v| (l, Some(v))).chain([(l, None)]))
        .collect();
    let results = par::map_indices(p.exec, jobs.len(), |j| {
        let (l, v) = jobs[j];
        let k = set.levels()[l];
        let prev = warm.get(&l);
        let tag = v.map_or(u64::MAX, |v| v as u64);
        let seed = rng::derive(p.seed, &[p.epoch as u64, l as u64, tag]);
        match v {
            Some(v) => fit(&latents[v], k, prev.map(|w| &w.0[v]), seed, p),
            None => fit(&stacked, k, prev.map(|w| &w.1), seed, p),
        }
    });
    let mut results = results.into_iter();
    let mut fits = BTreeMap::new();
    for &l in &level_idx {
        let views: Vec<LevelFit> = (0..v_count)
            .map(|_| results.next().expect("job result"))
            .collect::<Result<_>>()?;
        let common = results.next().expect("job result")?;
        let matchings = views
            .iter()
            .map(|f| match_common(&common.centroids, &f.centroids))
            .collect::<Result<_>>()?;
        fits.insert(
            l,
            LevelFits {
                k: set.levels()[l],
                views,
                common,
                matchings,
            },
        );
    }
    let fine = &fits[&finest];
    let silhouettes = par::map_indices(p.exec, v_count, |v| {
        let a = crate::clusterkit::Assignment {
            labels: fine.views[v].labels.clone(),
            k: fine.k,
            inertia: 0.0,
        };
        if fine.k < 2 {
            Ok(0.0)
        } else {
            silhouette_view(&latents[v], &a)
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let reliable = select_reliable(&silhouettes, p.reliability_coeff);
    let mut offsets = Vec::with_capacity(v_count);
    let mut acc = 0;
    for z in latents {
        offsets.push(acc);
        acc += z.rows();
    }
    Ok(LevelState {
        active,
        fits,
        silhouettes,
        reliable,
        reliability_coeff: p.reliability_coeff,
        offsets,
    })
}

/// Centroids to warm-start the next refresh from.
pub fn warm_from(state: &LevelState) -> WarmStart {
    state
        .fits
        .iter()
        .map(|(&l, f)| {
            (
                l,
                (
                    f.views.iter().map(|v| v.centroids.clone()).collect(),
                    f.common.centroids.clone(),
                ),
            )
        })
        .collect()
}
