//! Minimal dense numerical substrate: matrices, a reverse-mode tape, MLP
//! autoencoders with batch normalization, Adam, and checkpoint storage.

pub mod checkpoint;
pub mod matrix;
pub mod mlp;
pub mod optim;
pub mod tape;

pub use matrix::Matrix;
pub use mlp::{AutoencoderBundle, Mlp, MlpSpec, Mode};
pub use optim::{AdamConfig, GradientSet, OptimizerState};
pub use tape::{ParamId, Tape, Var};
