//! Document clustering with character n-grams, chi-square term selection and
//! an artificial immune network.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod immune;
pub mod ngram;
pub mod pipeline;
pub mod similarity;

pub use config::RunConfig;
pub use corpus::{Document, DocumentSet};
pub use immune::{extract_clusters, run_ais, AISParams, Clustering};
pub use pipeline::{run_pipeline, sweep, RunOutcome};
pub use similarity::Metric;
