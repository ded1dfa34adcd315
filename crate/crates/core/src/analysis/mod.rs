//! Statistics over evaluator output and human ratings: precision/recall
//! against a ground-truth set, rating distributions, Fleiss' kappa, and the
//! word-count comparison between rating categories.

mod kappa;
mod metrics;
mod ratings;
mod words;

use thiserror::Error;

pub use kappa::{fleiss_kappa, kappa_table};
pub use metrics::{
    load_ground_truth, precision_recall_f1, GroundTruth, GroundTruthEntry, MetricsReport, Provenance,
};
pub use ratings::{
    load_ratings, rating_distribution, write_ratings, Buckets, Dimension, Distribution, RatingFormat, RatingRecord,
};
pub use words::{
    default_stopwords, tokenize, word_count_analysis, RatedText, WordCount, WordCountReport, DEFAULT_DROP_WORDS,
    DEFAULT_TOP_K,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("no input records")]
    EmptyInput,
    #[error("row {row} sums to {got}, expected {expected}")]
    RowSumMismatch { row: usize, expected: u64, got: u64 },
    #[error("at least two raters per item are needed, got {0}")]
    TooFewRaters(u64),
    #[error("row {row}: {message}")]
    SchemaError { row: usize, message: String },
}

/// Rounds to `decimals` places, ties to even. For display only.
pub fn round_half_even(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round_ties_even() / scale
}
