//! Run configuration as a TOML file.
//!
//! Every section rejects unknown keys. [`RunConfig::resolved`] writes back a
//! file with every default filled in, which is what run directories keep.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{self, MultiViewDataset, ScaleMethod, SyntheticSpec, UnpairRecipe};
use crate::diffnet::MlpSpec;
use crate::error::{Error, Result};
use crate::losses::{ClusterSet, LossWeights};
use crate::rng;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub unpair: UnpairRecipe,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Manifest path, relative to the config file. Without one the
    /// `[synthetic]` section is generated in memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Sampling seed for synthetic data.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scale: ScaleMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub init: u64,
    pub shuffle: u64,
    pub kmeans: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::from_master(0)
    }
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            init: rng::derive(seed, &[1]),
            shuffle: rng::derive(seed, &[2]),
            kmeans: rng::derive(seed, &[3]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliabilityConfig {
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        ReliabilityConfig {
            start: 1.5,
            decay: 0.99,
            floor: 1.0,
        }
    }
}

impl ReliabilityConfig {
    /// `max(floor, start * decay^t)` for 1-based epoch `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.floor.max(self.start * self.decay.powf(t as f64))
    }
}

fn default_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    256
}
fn default_lr() -> f64 {
    1e-3
}
fn default_hidden() -> Vec<usize> {
    vec![1024, 1024, 1024]
}
fn default_latent() -> usize {
    128
}
fn default_true() -> bool {
    true
}
fn default_restarts() -> usize {
    10
}
fn default_kmeans_iter() -> usize {
    100
}
fn default_kmeans_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Encoder hidden widths; decoders mirror them.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_latent")]
    pub latent_dim: usize,
    #[serde(default = "default_true")]
    pub batchnorm: bool,
    /// Cluster counts from coarse to fine; empty means `{2, ceil(K/2), K}`.
    #[serde(default)]
    pub levels: Vec<usize>,
    /// Restarts of the final K-means; the lowest inertia wins.
    #[serde(default = "default_restarts")]
    pub final_restarts: usize,
    #[serde(default = "default_kmeans_iter")]
    pub kmeans_max_iter: usize,
    #[serde(default = "default_kmeans_tol")]
    pub kmeans_tol: f64,
    /// Write a checkpoint every this many epochs (0: only at the end).
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub weights: LossWeights,
    #[serde(default)]
    pub reliability: ReliabilityConfig,
    #[serde(default)]
    pub seeds: Seeds,
}

impl Default for TrainConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs < 4 {
            return bad(format!("train.epochs must be >= 4, got {}", self.epochs));
        }
        if self.batch_size == 0 {
            return bad("train.batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("train.learning_rate must be > 0".into());
        }
        if self.latent_dim == 0 || self.hidden.contains(&0) {
            return bad("train.hidden and train.latent_dim must be >= 1".into());
        }
        if self.final_restarts == 0 || self.kmeans_max_iter == 0 {
            return bad("train.final_restarts and train.kmeans_max_iter must be >= 1".into());
        }
        let r = &self.reliability;
        if !(r.start > 0.0 && r.decay > 0.0 && r.floor > 0.0) {
            return bad("train.reliability values must be > 0".into());
        }
        self.weights
            .validate()
            .map_err(|e| Error::Config(format!("train.weights: {e}")))
    }

    pub fn cluster_set(&self, k: usize) -> Result<ClusterSet> {
        let set = if self.levels.is_empty() {
            ClusterSet::default_for(k)
        } else {
            ClusterSet::new(self.levels.clone())?
        };
        if set.finest() != k {
            return Err(Error::Config(format!(
                "train.levels must end at K = {k}, got {:?}",
                set.levels()
            )));
        }
        Ok(set)
    }

    /// Encoder shape of every view.
    pub fn encoder_specs(&self, ds: &MultiViewDataset) -> Vec<MlpSpec> {
        ds.views
            .iter()
            .map(|v| MlpSpec {
                input_dim: v.dim(),
                hidden_dims: self.hidden.clone(),
                output_dim: self.latent_dim,
                batchnorm: self.batchnorm,
            })
            .collect()
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Values per loss weight; the grid is their Cartesian product. An empty
/// axis keeps the `[train.weights]` value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub lambda1: Vec<f64>,
    #[serde(default)]
    pub lambda2: Vec<f64>,
    #[serde(default)]
    pub lambda3: Vec<f64>,
    #[serde(default)]
    pub lambda4: Vec<f64>,
}

impl SweepConfig {
    pub fn grid(&self, base: &LossWeights) -> Vec<LossWeights> {
        let axis = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let mut out = Vec::new();
        for &l1 in &axis(&self.lambda1, base.lambda1) {
            for &l2 in &axis(&self.lambda2, base.lambda2) {
                for &l3 in &axis(&self.lambda3, base.lambda3) {
                    for &l4 in &axis(&self.lambda4, base.lambda4) {
                        out.push(LossWeights {
                            lambda1: l1,
                            lambda2: l2,
                            lambda3: l3,
                            lambda4: l4,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.train.validate()?;
        if let Some(s) = &cfg.synthetic {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Reads `path`; a relative manifest path is resolved against the
    /// config file's directory and made absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg =
            Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(m) = &cfg.dataset.manifest {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                let joined = base.join(m);
                cfg.dataset.manifest =
                    Some(std::path::absolute(&joined).map_err(|e| Error::io(joined, e))?);
            }
        }
        Ok(cfg)
    }

    /// The configuration with every default written out.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn synthetic(&self) -> Result<&SyntheticSpec> {
        self.synthetic
            .as_ref()
            .ok_or_else(|| Error::Config("missing [synthetic] section".into()))
    }

    /// Loads (or generates) the dataset, unpairs a paired manifest with
    /// `[unpair]`, then scales every view.
    pub fn dataset(&self) -> Result<MultiViewDataset> {
        let ds = match &self.dataset.manifest {
            Some(path) => {
                let m = dataio::Manifest::read(path)?;
                if m.paired {
                    dataio::unpair(&dataio::load_paired(path)?, &self.unpair)?
                } else {
                    dataio::load(path)?
                }
            }
            None => {
                let spec = self.synthetic().map_err(|_| {
                    Error::Config("need dataset.manifest or a [synthetic] section".into())
                })?;
                dataio::synthesize(spec, self.dataset.seed)?
            }
        };
        Ok(dataio::scale(&ds, self.dataset.scale))
    }

    /// Fingerprint of everything that determines the training trajectory.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.dataset).expect("serializes"));
        h.update(serde_json::to_vec(&self.synthetic).expect("serializes"));
        h.update(serde_json::to_vec(&self.unpair).expect("serializes"));
        h.update(self.train.hash().as_bytes());
        hex(&h.finalize())
    }
}
