use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use umc::config::{RunConfig, Seeds};
use umc::dataio::{self, PairedDataset};
use umc::runner::{self, RunOptions, RunOutcome};
use umc::Error;

#[derive(Parser)]
#[command(name = "umc", version, about = "Clustering for unpaired multi-view data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the [synthetic] dataset of a config to disk.
    Generate(Common),
    /// Split a paired manifest into an unpaired one using [unpair].
    Unpair(Common),
    /// Train one model and write a run directory.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the run directory's checkpoint.
        #[arg(long)]
        resume: bool,
        /// Checkpoint and stop after this many epochs.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Recompute the final clustering and metrics of a finished run.
    Eval {
        /// Run directory written by `train`.
        run: PathBuf,
    },
    /// Train every point of the [sweep] grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory. Defaults to $UMC_OUT/<config name>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "UMC_OUT", default_value = "runs", hide_env_values = true)]
    out_root: PathBuf,
    /// Replaces every training seed (or the synthetic sampling seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let stem = self.config.file_stem().unwrap_or_default();
            self.out_root.join(stem)
        })
    }

    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.train.seeds = Seeds::from_master(s);
            cfg.dataset.seed = s;
        }
        Ok(cfg)
    }

    fn init_threads(&self) {
        #[cfg(feature = "parallel")]
        if let Some(n) = self.jobs {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn generate(c: &Common) -> Result<(), Error> {
    let cfg = c.load()?;
    let spec = cfg.synthetic()?;
    let ds = dataio::synthesize(spec, cfg.dataset.seed)?;
    let dir = c.out_dir();
    runner::prepare_dir(&dir, c.force)?;
    let manifest = dataio::save(&ds, &dir)?;
    say(c.quiet, format!("wrote {}", manifest.display()));
    Ok(())
}

fn unpair(c: &Common) -> Result<(), Error> {
    let cfg = c.load()?;
    let path = cfg
        .dataset
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("missing dataset.manifest".into()))?;
    let paired: PairedDataset = dataio::load_paired(path)?;
    let ds = dataio::unpair(&paired, &cfg.unpair)?;
    let dir = c.out_dir();
    runner::prepare_dir(&dir, c.force)?;
    let manifest = dataio::save(&ds, &dir)?;
    say(c.quiet, format!("wrote {} ({:?} samples per view)", manifest.display(), ds.sizes()));
    Ok(())
}

fn print_report(rep: &umc::evalkit::MetricsReport) {
    print!("{}", rep.to_csv());
}

fn train(c: &Common, resume: bool, stop_after: Option<usize>) -> Result<(), Error> {
    c.init_threads();
    let cfg = c.load()?;
    let ds = cfg.dataset()?;
    let dir = c.out_dir();
    if !(resume && dir.join(runner::CHECKPOINT_FILE).exists()) {
        runner::prepare_dir(&dir, c.force)?;
    }
    let opts = RunOptions {
        resume,
        stop_after,
        exec: None,
    };
    match runner::train_in_dir(&cfg, &ds, &dir, &opts, |r| say(c.quiet, r.log_line()))? {
        RunOutcome::Finished(_, rep) => {
            print_report(&rep);
            say(c.quiet, format!("run written to {}", dir.display()));
        }
        RunOutcome::Stopped(e) => say(c.quiet, format!("stopped after epoch {e}; resume with --resume")),
    }
    Ok(())
}

fn eval(run: &Path) -> Result<(), Error> {
    let (_, rep) = runner::eval_dir(run)?;
    print_report(&rep);
    Ok(())
}

fn sweep(c: &Common) -> Result<(), Error> {
    c.init_threads();
    let cfg = c.load()?;
    let axes = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let ds = cfg.dataset()?;
    let root = c.out_dir();
    runner::prepare_dir(&root, c.force)?;
    let grid = axes.grid(&cfg.train.weights);
    let results = umc::par::map_indices(umc::par::Exec::default(), grid.len(), |i| {
        let mut point = cfg.clone();
        point.sweep = None;
        point.train.weights = grid[i].clone();
        let dir = root.join(format!("point_{i:03}"));
        let res = runner::prepare_dir(&dir, c.force).and_then(|_| {
            runner::train_in_dir(&point, &ds, &dir, &RunOptions::default(), |r| {
                say(c.quiet, format!("point={i} {}", r.log_line()))
            })
        });
        match res {
            Ok(RunOutcome::Finished(_, rep)) => {
                let a = rep.all_view();
                format!("ok,{},{},{}", a.nmi, a.acc, a.f1)
            }
            Ok(RunOutcome::Stopped(_)) => "stopped,,,".into(),
            Err(e) => {
                say(c.quiet, format!("point {i} failed: {e}"));
                let kind = if e.is_numerical() { "numerical" } else { "error" };
                format!("{kind},,,")
            }
        }
    });
    let mut summary = String::from("point,lambda1,lambda2,lambda3,lambda4,status,nmi,acc,f1\n");
    for (i, (w, r)) in grid.iter().zip(&results).enumerate() {
        summary.push_str(&format!(
            "{i},{},{},{},{},{r}\n",
            w.lambda1, w.lambda2, w.lambda3, w.lambda4
        ));
    }
    let path = root.join("summary.csv");
    std::fs::write(&path, &summary).map_err(|e| Error::Io { path, source: e })?;
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Unpair(c) => unpair(c),
        Command::Train {
            common,
            resume,
            stop_after,
        } => train(common, *resume, *stop_after),
        Command::Eval { run } => eval(run),
        Command::Sweep(c) => sweep(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
