//! Unpaired multi-view clustering with multi-level reliable guidance.
//!
//! Each view gets its own autoencoder. Training alternates between
//! non-differentiable clustering state (K-means at several granularities,
//! centroid matching against a common view, silhouette-ranked reliable
//! views) and gradient steps on a combined objective made of
//! reconstruction/orthogonality, inner-view contrastive, common-view
//! contrastive and cross-view KL terms. The final partition is K-means on
//! the row-concatenated latent representations of every view.
//!
//! Module map:
//!
//! * [`diffnet`]: matrices, a small reverse-mode tape, MLP autoencoders, Adam.
//! * [`dataio`]: dataset model, manifests, unpairing, synthesis, scaling, batching.
//! * [`clusterkit`]: K-means, cosine similarity, silhouette, Hungarian matching.
//! * [`losses`]: the four objective terms and their pair-set construction.
//! * [`trainer`]: staged level schedule, epoch refresh, checkpointing.
//! * [`evalkit`]: NMI, ACC, pairwise F1, reports, embedding export.
//! * [`config`]: the structured-text run configuration.
//! * [`runner`]: run directories and their output files.

pub mod clusterkit;
pub mod config;
pub mod dataio;
pub mod diffnet;
pub mod error;
pub mod evalkit;
pub mod losses;
pub mod par;
pub mod rng;
pub mod runner;
pub mod trainer;

pub use error::{Error, Result};
