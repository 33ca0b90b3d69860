use super::level::LevelState;
use crate::diffnet::tape::BatchStats;
use crate::diffnet::{AutoencoderBundle, Matrix, Mode, Tape, Var};
use crate::error::{Error, Result};
use crate::losses::{
    build_inner_pairs, common_contrastive_loss, cross_view_kl, inner_contrastive_loss,
    recon_orth_loss, total_loss, view_distribution, CommonLevel, LossBreakdown, LossTerms,
    LossWeights,
};

/// Objective of one step, recorded on a tape.
pub struct StepLoss {
    pub total: Var,
    pub breakdown: LossBreakdown,
    /// Train-mode batch statistics per view: (encoder, decoder).
    pub stats: Vec<(Vec<BatchStats>, Vec<BatchStats>)>,
}

/// Records the full objective for one batch per view.
///
/// `batches[v]` indexes rows of `features[v]`; `state` supplies every
/// clustering quantity as a constant.
pub fn step_loss<'a>(
    tape: &mut Tape<'a>,
    bundle: &'a AutoencoderBundle,
    features: &[&Matrix],
    batches: &[Vec<usize>],
    state: &LevelState,
    weights: &LossWeights,
) -> Result<StepLoss> {
    let v_count = bundle.view_count();
    if features.len() != v_count || batches.len() != v_count {
        return Err(Error::shape("step_loss", "one feature matrix and batch per view"));
    }
    let mut ae_inputs = Vec::with_capacity(v_count);
    let mut latents = Vec::with_capacity(v_count);
    let mut stats = Vec::with_capacity(v_count);
    for v in 0..v_count {
        let x = tape.constant(features[v].select_rows(&batches[v]));
        let f = bundle.forward_view(tape, v, x, Mode::Train)?;
        ae_inputs.push((x, f.latent, f.recon));
        latents.push(f.latent);
        stats.push((f.encoder_stats, f.decoder_stats));
    }
    let ae = recon_orth_loss(tape, &ae_inputs, weights.lambda1)?;

    let pairs: Vec<_> = (0..v_count)
        .map(|v| {
            let labels: Vec<&[usize]> = state
                .active_fits()
                .map(|f| f.views[v].labels.as_slice())
                .collect();
            build_inner_pairs(&labels, &batches[v])
        })
        .collect();
    let inner = inner_contrastive_loss(tape, &latents, &pairs, weights.temperature)?;

    let levels: Vec<CommonLevel> = state
        .active_fits()
        .map(|f| {
            let mut lv = CommonLevel {
                common: Vec::new(),
                view: Vec::new(),
                view_of: Vec::new(),
                matchings: f.matchings.clone(),
            };
            for (v, batch) in batches.iter().enumerate() {
                for &i in batch {
                    lv.common.push(f.common.labels[state.offsets[v] + i]);
                    lv.view.push(f.views[v].labels[i]);
                    lv.view_of.push(v);
                }
            }
            lv
        })
        .collect();
    let common = common_contrastive_loss(tape, &latents, &levels, weights.temperature)?;

    let centroids = &state.finest().common.centroids;
    let dists = latents
        .iter()
        .map(|&z| view_distribution(tape, z, centroids, weights.temperature))
        .collect::<Result<Vec<_>>>()?;
    let cross = cross_view_kl(tape, &dists, &state.reliable)?;

    let (total, breakdown) = total_loss(
        tape,
        LossTerms {
            ae,
            inner,
            common,
            cross,
        },
        weights,
    )?;
    Ok(StepLoss {
        total,
        breakdown,
        stats,
    })
}
