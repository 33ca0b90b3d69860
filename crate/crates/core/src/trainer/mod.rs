//! The training loop: a staged cluster-level schedule, a once-per-epoch
//! refresh of clustering state, mini-batch optimization of the combined
//! objective, checkpointing, and the final partition.

mod level;
mod schedule;
mod state;
mod step;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clusterkit::{kmeans_best_of, Assignment, KMeansParams};
use crate::config::TrainConfig;
use crate::dataio::{BatchPlan, MultiViewDataset};
use crate::diffnet::{AdamConfig, AutoencoderBundle, GradientSet, Matrix, OptimizerState, Tape};
use crate::error::{Error, Result};
use crate::losses::{ClusterSet, LossBreakdown};
use crate::par::Exec;
use crate::rng;

pub use level::{
    encode_views, refresh_level_state, warm_from, LevelFit, LevelFits, LevelState, RefreshParams,
    WarmStart,
};
pub use schedule::active_prefix;
pub use step::{step_loss, StepLoss};

/// Summary of one finished epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub active_levels: usize,
    pub reliability_coeff: f64,
    /// Means over the epoch's steps.
    pub losses: LossBreakdown,
    /// Finest-level silhouette per view at the start of the epoch.
    pub silhouettes: Vec<f64>,
    pub reliable: Vec<Vec<usize>>,
}

impl EpochRecord {
    pub fn log_line(&self) -> String {
        let l = &self.losses;
        let mut s = format!(
            "epoch={} total={:.6} l_ae={:.6} l_in={:.6} l_co={:.6} l_cr={:.6} levels={} coeff={:.6}",
            self.epoch, l.total, l.ae, l.inner, l.common, l.cross, self.active_levels, self.reliability_coeff
        );
        for (v, x) in self.silhouettes.iter().enumerate() {
            let _ = write!(s, " sil{v}={x:.4}");
        }
        s
    }
}

/// Settings of the final and per-view K-means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinalKMeans {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

/// Outputs of a finished run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    /// Eval-mode representation of every view.
    pub latents: Vec<Matrix>,
    /// K-means on the row-stacked latents, in view order.
    pub final_assignment: Assignment,
    pub history: Vec<EpochRecord>,
    pub config_hash: String,
    pub kmeans: FinalKMeans,
    pub runtime_secs: f64,
}

impl RunArtifacts {
    /// `epoch,l_ae,l_in,l_co,l_cr,total,reliability_coeff,sil_<v>...`
    pub fn loss_table(&self) -> String {
        loss_table(&self.history)
    }

    pub fn reliability_trace(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.reliability_coeff).collect()
    }

    pub fn schedule_trace(&self) -> Vec<usize> {
        self.history.iter().map(|r| r.active_levels).collect()
    }
}

pub fn loss_table(history: &[EpochRecord]) -> String {
    let views = history.first().map_or(0, |r| r.silhouettes.len());
    let mut s = String::from("epoch,l_ae,l_in,l_co,l_cr,total,reliability_coeff");
    for v in 0..views {
        let _ = write!(s, ",sil_{v}");
    }
    s.push('\n');
    for r in history {
        let l = &r.losses;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            r.epoch, l.ae, l.inner, l.common, l.cross, l.total, r.reliability_coeff
        );
        for x in &r.silhouettes {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

const FINAL_TAG: u64 = 0xF1A1;

/// A run in progress.
pub struct Trainer<'d> {
    cfg: TrainConfig,
    ds: &'d MultiViewDataset,
    set: ClusterSet,
    bundle: AutoencoderBundle,
    opt: OptimizerState,
    plan: BatchPlan,
    warm: WarmStart,
    history: Vec<EpochRecord>,
    config_hash: String,
    exec: Exec,
    started: Instant,
}

impl<'d> Trainer<'d> {
    /// Fresh parameters. `config_hash` identifies the run in reports and
    /// guards checkpoints.
    pub fn new(cfg: &TrainConfig, ds: &'d MultiViewDataset, config_hash: &str) -> Result<Self> {
        cfg.validate()?;
        ds.validate()?;
        let set = cfg.cluster_set(ds.k)?;
        if let Some(v) = ds.views.iter().find(|v| v.len() < ds.k) {
            return Err(Error::Dataset(format!(
                "view {} has {} samples, fewer than K = {}",
                v.id,
                v.len(),
                ds.k
            )));
        }
        let bundle = AutoencoderBundle::init(&cfg.encoder_specs(ds), cfg.seeds.init)?;
        let opt = OptimizerState::new(
            AdamConfig {
                lr: cfg.learning_rate,
                ..AdamConfig::default()
            },
            &bundle,
        );
        Ok(Trainer {
            cfg: cfg.clone(),
            ds,
            set,
            bundle,
            opt,
            plan: BatchPlan::new(cfg.batch_size, cfg.seeds.shuffle),
            warm: WarmStart::new(),
            history: Vec::new(),
            config_hash: config_hash.to_string(),
            exec: Exec::default(),
            started: Instant::now(),
        })
    }

    /// Continues from a checkpoint written by [`Trainer::save`] under the
    /// same configuration.
    pub fn restore(cfg: &TrainConfig, ds: &'d MultiViewDataset, config_hash: &str, path: &Path) -> Result<Self> {
        let mut t = Trainer::new(cfg, ds, config_hash)?;
        let snap = state::load(path, config_hash, &mut t.bundle, &mut t.opt)?;
        if snap.history.len() != snap.epoch || snap.epoch > cfg.epochs {
            return Err(Error::Checkpoint("inconsistent epoch count".into()));
        }
        t.history = snap.history;
        t.warm = snap.warm;
        Ok(t)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        state::save(
            path,
            &self.bundle,
            &self.opt,
            &state::Snapshot {
                config_hash: self.config_hash.clone(),
                epoch: self.epoch(),
                history: self.history.clone(),
                warm: self.warm.clone(),
            },
        )
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    pub fn is_done(&self) -> bool {
        self.epoch() >= self.cfg.epochs
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn bundle(&self) -> &AutoencoderBundle {
        &self.bundle
    }

    pub fn cluster_set(&self) -> &ClusterSet {
        &self.set
    }

    fn features(&self) -> Vec<&'d Matrix> {
        self.ds.views.iter().map(|v| &v.features).collect()
    }

    /// Clustering state for 1-based epoch `t` from the current parameters.
    pub fn level_state(&self, t: usize) -> Result<LevelState> {
        let latents = encode_views(&self.bundle, &self.features())?;
        refresh_level_state(
            &latents,
            &self.set,
            &self.warm,
            &RefreshParams {
                active: active_prefix(t, self.cfg.epochs, self.set.levels().len()),
                reliability_coeff: self.cfg.reliability.at(t),
                seed: self.cfg.seeds.kmeans,
                epoch: t,
                max_iter: self.cfg.kmeans_max_iter,
                tol: self.cfg.kmeans_tol,
                exec: self.exec,
            },
        )
    }

    /// Runs the next epoch.
    pub fn run_epoch(&mut self) -> Result<&EpochRecord> {
        if self.is_done() {
            return Err(Error::Invalid("all epochs already run".into()));
        }
        let t = self.epoch() + 1;
        let state = self.level_state(t)?;
        let features = self.features();
        let steps = self.plan.steps(&self.ds.sizes(), t);
        let mut sum = LossBreakdown::default();
        for (s, batches) in steps.iter().enumerate() {
            let (b, grads, stats) = {
                let mut tape = Tape::new();
                let out = step_loss(
                    &mut tape,
                    &self.bundle,
                    &features,
                    batches,
                    &state,
                    &self.cfg.weights,
                )?;
                if !out.breakdown.total.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("loss at epoch {t} step {}: {:?}", s + 1, out.breakdown),
                    });
                }
                let grads = GradientSet::from_tape(&self.bundle, tape.backward(out.total)?)?;
                (out.breakdown, grads, out.stats)
            };
            self.opt.step(&mut self.bundle, &grads).map_err(|e| match e {
                Error::NonFinite { context } => Error::NonFinite {
                    context: format!("{context} (epoch {t} step {})", s + 1),
                },
                e => e,
            })?;
            for (v, (enc, dec)) in stats.iter().enumerate() {
                self.bundle.apply_stats(v, enc, dec);
            }
            sum.ae += b.ae;
            sum.inner += b.inner;
            sum.common += b.common;
            sum.cross += b.cross;
            sum.total += b.total;
        }
        let n = steps.len().max(1) as f64;
        let losses = LossBreakdown {
            ae: sum.ae / n,
            inner: sum.inner / n,
            common: sum.common / n,
            cross: sum.cross / n,
            total: sum.total / n,
        };
        self.warm = warm_from(&state);
        self.history.push(EpochRecord {
            epoch: t,
            active_levels: state.active,
            reliability_coeff: state.reliability_coeff,
            losses,
            silhouettes: state.silhouettes,
            reliable: state.reliable,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Eval-mode representations and the final K-means on their row
    /// concatenation.
    pub fn finish(&self) -> Result<RunArtifacts> {
        let latents = encode_views(&self.bundle, &self.features())?;
        let refs: Vec<&Matrix> = latents.iter().collect();
        let stacked = Matrix::vstack(&refs)?;
        stacked.ensure_finite(|| "final representations".into())?;
        let kmeans = FinalKMeans {
            max_iter: self.cfg.kmeans_max_iter,
            tol: self.cfg.kmeans_tol,
            seed: rng::derive(self.cfg.seeds.kmeans, &[FINAL_TAG]),
            restarts: self.cfg.final_restarts,
        };
        let fit = kmeans_best_of(
            &stacked,
            &KMeansParams {
                max_iter: kmeans.max_iter,
                tol: kmeans.tol,
                ..KMeansParams::new(self.ds.k, kmeans.seed)
            },
            kmeans.restarts,
        )?;
        Ok(RunArtifacts {
            latents,
            final_assignment: fit.assignment,
            history: self.history.clone(),
            config_hash: self.config_hash.clone(),
            kmeans,
            runtime_secs: self.started.elapsed().as_secs_f64(),
        })
    }
}

/// Trains for all configured epochs and returns the final artifacts.
pub fn train(cfg: &TrainConfig, ds: &MultiViewDataset, config_hash: &str) -> Result<RunArtifacts> {
    let mut t = Trainer::new(cfg, ds, config_hash)?;
    while !t.is_done() {
        t.run_epoch()?;
    }
    t.finish()
}
