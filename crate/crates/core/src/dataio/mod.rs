//! Multi-view datasets: model, on-disk format, unpairing, synthesis,
//! feature scaling and mini-batch plans.

mod batch;
mod dataset;
mod manifest;
mod scale;
mod synth;
mod unpair;

pub use batch::BatchPlan;
pub use dataset::{MultiViewDataset, PairedDataset, ViewData};
pub use manifest::{load, load_paired, save, save_paired, Manifest, ManifestView};
pub use scale::{scale, scale_paired, ScaleMethod};
pub use synth::{class_centers, synthesize, SyntheticSpec};
pub use unpair::{unpair, UnpairRecipe, UnpairStrategy};
