//! Clustering metrics, run reports and embedding export.

mod export;
mod metrics;
mod report;

pub use export::{export_embeddings, read_embeddings, EmbeddingRow};
pub use metrics::{acc, nmi, pairwise_f1};
pub use report::{report, MetricsReport, ScopeMetrics};
