//! Run directories: training with checkpoints, and the files a finished
//! run leaves behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::dataio::MultiViewDataset;
use crate::error::{Error, Result};
use crate::evalkit::{export_embeddings, report, MetricsReport};
use crate::par::Exec;
use crate::trainer::{EpochRecord, RunArtifacts, Trainer};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Continue from the run directory's checkpoint if there is one.
    pub resume: bool,
    /// Stop (after checkpointing) once this many epochs are done.
    pub stop_after: Option<usize>,
    pub exec: Option<Exec>,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    version: &'a str,
    config_hash: &'a str,
    dataset: &'a str,
    epochs: usize,
    samples: usize,
    runtime_secs: f64,
}

/// Creates `dir`, refusing a non-empty one unless `force`.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "{} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Outcome of [`train_in_dir`].
pub enum RunOutcome {
    Finished(Box<RunArtifacts>, MetricsReport),
    /// Stopped early at the given epoch; the checkpoint is on disk.
    Stopped(usize),
}

/// Trains `cfg` into `dir`: resolved config, periodic and final
/// checkpoints, loss curve, metrics, embeddings and run info.
pub fn train_in_dir(
    cfg: &RunConfig,
    ds: &MultiViewDataset,
    dir: &Path,
    opts: &RunOptions,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<RunOutcome> {
    let hash = cfg.hash();
    let ckpt = dir.join(CHECKPOINT_FILE);
    write(dir.join(CONFIG_FILE), &cfg.resolved())?;
    let mut trainer = if opts.resume && ckpt.exists() {
        Trainer::restore(&cfg.train, ds, &hash, &ckpt)?
    } else {
        Trainer::new(&cfg.train, ds, &hash)?
    };
    if let Some(exec) = opts.exec {
        trainer = trainer.with_exec(exec);
    }
    let every = cfg.train.checkpoint_every;
    while !trainer.is_done() {
        if opts.stop_after.is_some_and(|s| trainer.epoch() >= s) {
            trainer.save(&ckpt)?;
            return Ok(RunOutcome::Stopped(trainer.epoch()));
        }
        on_epoch(trainer.run_epoch()?);
        write(dir.join("loss_curve.csv"), &crate::trainer::loss_table(trainer.history()))?;
        if every > 0 && trainer.epoch() % every == 0 {
            trainer.save(&ckpt)?;
        }
    }
    trainer.save(&ckpt)?;
    let run = trainer.finish()?;
    let rep = write_outputs(&run, ds, dir)?;
    Ok(RunOutcome::Finished(Box::new(run), rep))
}

/// Metrics, embeddings and run info of a finished run.
pub fn write_outputs(run: &RunArtifacts, ds: &MultiViewDataset, dir: &Path) -> Result<MetricsReport> {
    let rep = report(run, ds)?;
    write(dir.join("loss_curve.csv"), &run.loss_table())?;
    write(dir.join("metrics.json"), &rep.to_json())?;
    write(dir.join("metrics.csv"), &rep.to_csv())?;
    export_embeddings(run, ds, &dir.join("embeddings.csv"))?;
    let info = RunInfo {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &run.config_hash,
        dataset: &ds.name,
        epochs: run.history.len(),
        samples: ds.total_samples(),
        runtime_secs: run.runtime_secs,
    };
    write(
        dir.join("run_info.json"),
        &(serde_json::to_string_pretty(&info).expect("serializes") + "\n"),
    )?;
    Ok(rep)
}

/// Rebuilds the final artifacts of a finished run from its directory.
pub fn eval_dir(dir: &Path) -> Result<(RunConfig, MetricsReport)> {
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let ds = cfg.dataset()?;
    let t = Trainer::restore(&cfg.train, &ds, &cfg.hash(), &dir.join(CHECKPOINT_FILE))?;
    if !t.is_done() {
        return Err(Error::Checkpoint(format!(
            "run stopped at epoch {} of {}",
            t.epoch(),
            cfg.train.epochs
        )));
    }
    let run = t.finish()?;
    let rep = write_outputs(&run, &ds, dir)?;
    Ok((cfg, rep))
}
