//! Non-differentiable clustering primitives.

mod cosine;
mod hungarian;
mod kmeans;
mod silhouette;

pub use cosine::{cosine, cosine_matrix};
pub use hungarian::{hungarian_max, MatchMatrix};
pub use kmeans::{
    kmeans, kmeans_best_of, kmeans_warm, kmeans_with, Assignment, Centroids, KMeansFit,
    KMeansParams,
};
pub use silhouette::{silhouette_samples, silhouette_view, silhouette_view_with};
