use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{acc, nmi, pairwise_f1};
use crate::clusterkit::{kmeans_best_of, KMeansParams};
use crate::dataio::MultiViewDataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::trainer::RunArtifacts;

/// Metrics of one scope, as percentages rounded to two decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScopeMetrics {
    /// `all` or `view<id>`
    pub scope: String,
    pub samples: usize,
    pub nmi: f64,
    pub acc: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_hash: String,
    /// Per view first, then the all-view scope.
    pub scopes: Vec<ScopeMetrics>,
    /// Wall-clock training time. Kept out of the serialized report so
    /// identical runs produce identical files.
    #[serde(skip)]
    pub runtime_secs: f64,
}

fn pct(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

fn scope(name: String, pred: &[usize], truth: &[usize]) -> Result<ScopeMetrics> {
    Ok(ScopeMetrics {
        scope: name,
        samples: truth.len(),
        nmi: pct(nmi(pred, truth)?),
        acc: pct(acc(pred, truth)?),
        f1: pct(pairwise_f1(pred, truth)?),
    })
}

/// Scores the final all-view assignment and a per-view K-means on each
/// view's latent representation.
pub fn report(run: &RunArtifacts, ds: &MultiViewDataset) -> Result<MetricsReport> {
    if run.latents.len() != ds.view_count() {
        return Err(Error::Invalid("report: missing representations".into()));
    }
    let mut scopes = Vec::with_capacity(ds.view_count() + 1);
    for (v, (z, view)) in run.latents.iter().zip(&ds.views).enumerate() {
        if z.rows() != view.len() {
            return Err(Error::Invalid(format!("report: view {v} row count")));
        }
        let params = KMeansParams {
            max_iter: run.kmeans.max_iter,
            tol: run.kmeans.tol,
            ..KMeansParams::new(ds.k, rng::derive(run.kmeans.seed, &[0xE7A1, v as u64]))
        };
        let fit = kmeans_best_of(z, &params, run.kmeans.restarts)?;
        scopes.push(scope(
            format!("view{}", view.id),
            &fit.assignment.labels,
            &view.labels,
        )?);
    }
    scopes.push(scope(
        "all".into(),
        &run.final_assignment.labels,
        &ds.all_labels(),
    )?);
    Ok(MetricsReport {
        config_hash: run.config_hash.clone(),
        scopes,
        runtime_secs: run.runtime_secs,
    })
}

impl MetricsReport {
    pub fn all_view(&self) -> &ScopeMetrics {
        self.scopes.last().expect("report has an all-view scope")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `scope,samples,nmi,acc,f1` with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scope,samples,nmi,acc,f1\n");
        for m in &self.scopes {
            let _ = writeln!(s, "{},{},{:.2},{:.2},{:.2}", m.scope, m.samples, m.nmi, m.acc, m.f1);
        }
        s
    }
}
