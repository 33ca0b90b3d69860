//! Trainer checkpoints on top of the diffnet container.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::level::WarmStart;
use super::EpochRecord;
use crate::diffnet::checkpoint::Container;
use crate::diffnet::{AutoencoderBundle, Matrix, OptimizerState};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Meta {
    kind: String,
    config_hash: String,
    epoch: usize,
    steps: u64,
    warm_levels: Vec<usize>,
    history: Vec<EpochRecord>,
}

const KIND: &str = "trainer";

/// Everything needed to continue a run exactly.
pub(crate) struct Snapshot {
    pub config_hash: String,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    pub warm: WarmStart,
}

fn running_stats(bundle: &AutoencoderBundle) -> Vec<(String, Matrix)> {
    let mut out = Vec::new();
    for (v, net) in bundle.views.iter().enumerate() {
        for (part, mlp) in [("enc", &net.encoder), ("dec", &net.decoder)] {
            for (l, layer) in mlp.layers.iter().enumerate() {
                if let Some(bn) = &layer.bn {
                    out.push((format!("bn/{v}/{part}/{l}/mean"), Matrix::row_vector(bn.running_mean.clone())));
                    out.push((format!("bn/{v}/{part}/{l}/var"), Matrix::row_vector(bn.running_var.clone())));
                }
            }
        }
    }
    out
}

pub(crate) fn save(
    path: &Path,
    bundle: &AutoencoderBundle,
    opt: &OptimizerState,
    snap: &Snapshot,
) -> Result<()> {
    let mut tensors = Vec::new();
    for (i, p) in bundle.params().into_iter().enumerate() {
        tensors.push((format!("param/{i}"), p.clone()));
    }
    tensors.extend(running_stats(bundle));
    for (i, (m, s)) in opt.first.iter().zip(&opt.second).enumerate() {
        tensors.push((format!("adam/m/{i}"), m.clone()));
        tensors.push((format!("adam/v/{i}"), s.clone()));
    }
    for (l, (views, common)) in &snap.warm {
        for (v, c) in views.iter().enumerate() {
            tensors.push((format!("warm/{l}/view/{v}"), c.clone()));
        }
        tensors.push((format!("warm/{l}/common"), common.clone()));
    }
    let meta = Meta {
        kind: KIND.into(),
        config_hash: snap.config_hash.clone(),
        epoch: snap.epoch,
        steps: opt.steps,
        warm_levels: snap.warm.keys().copied().collect(),
        history: snap.history.clone(),
    };
    Container {
        meta: serde_json::to_value(meta).map_err(|e| Error::Checkpoint(e.to_string()))?,
        tensors,
    }
    .save(path)
}

/// Loads a checkpoint into freshly initialized `bundle` and `opt`. Nothing
/// is modified unless the whole file validates.
pub(crate) fn load(
    path: &Path,
    expected_hash: &str,
    bundle: &mut AutoencoderBundle,
    opt: &mut OptimizerState,
) -> Result<Snapshot> {
    let mut c = Container::load(path)?;
    let meta: Meta = serde_json::from_value(c.meta.clone())
        .map_err(|e| Error::Checkpoint(format!("bad metadata: {e}")))?;
    if meta.kind != KIND {
        return Err(Error::Checkpoint(format!("not a trainer checkpoint: {}", meta.kind)));
    }
    if meta.config_hash != expected_hash {
        return Err(Error::Checkpoint(format!(
            "config hash mismatch: checkpoint {}, current {expected_hash}",
            meta.config_hash
        )));
    }
    let mut new_bundle = bundle.clone();
    let mut new_opt = opt.clone();
    let check = |name: &str, got: &Matrix, want: &Matrix| {
        if got.shape() == want.shape() {
            Ok(())
        } else {
            Err(Error::Checkpoint(format!(
                "{name}: shape {:?}, expected {:?}",
                got.shape(),
                want.shape()
            )))
        }
    };
    for (i, p) in new_bundle.params_mut().into_iter().enumerate() {
        let name = format!("param/{i}");
        let t = c.take(&name)?;
        check(&name, &t, p)?;
        *p = t;
    }
    for (v, net) in new_bundle.views.iter_mut().enumerate() {
        for (part, mlp) in [("enc", &mut net.encoder), ("dec", &mut net.decoder)] {
            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                if let Some(bn) = &mut layer.bn {
                    let mean = c.take(&format!("bn/{v}/{part}/{l}/mean"))?;
                    let var = c.take(&format!("bn/{v}/{part}/{l}/var"))?;
                    if mean.len() != bn.running_mean.len() || var.len() != bn.running_var.len() {
                        return Err(Error::Checkpoint(format!("bn/{v}/{part}/{l}: width")));
                    }
                    bn.running_mean = mean.into_data();
                    bn.running_var = var.into_data();
                }
            }
        }
    }
    for i in 0..new_opt.first.len() {
        let m = c.take(&format!("adam/m/{i}"))?;
        let s = c.take(&format!("adam/v/{i}"))?;
        check("adam/m", &m, &new_opt.first[i])?;
        check("adam/v", &s, &new_opt.second[i])?;
        new_opt.first[i] = m;
        new_opt.second[i] = s;
    }
    new_opt.steps = meta.steps;
    let v_count = new_bundle.view_count();
    let mut warm = WarmStart::new();
    for &l in &meta.warm_levels {
        let views = (0..v_count)
            .map(|v| c.take(&format!("warm/{l}/view/{v}")))
            .collect::<Result<Vec<_>>>()?;
        warm.insert(l, (views, c.take(&format!("warm/{l}/common"))?));
    }
    *bundle = new_bundle;
    *opt = new_opt;
    Ok(Snapshot {
        config_hash: meta.config_hash,
        epoch: meta.epoch,
        history: meta.history,
        warm,
    })
}
