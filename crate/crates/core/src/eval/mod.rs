//! Analyzer evaluation against labeled messages: agreement metrics,
//! annotator aggregation and inter-rater reliability.

mod agreement;
mod dataset;
mod metrics;
mod runner;

use thiserror::Error;

pub use agreement::{aggregate_annotations, icc, read_ratings_csv};
pub use dataset::{load_dataset, parse_dataset, EvalRecord, LABEL_MAX, LABEL_MIN, LABEL_OFFSET};
pub use metrics::{compute_metrics, render_table, MetricsReport, PredictionOutcome};
pub use runner::{run_eval, DEFAULT_CONCURRENCY};

use crate::analyzer::AnalyzerError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no outcomes to evaluate")]
    NoOutcomes,
    #[error("no record is labeled for axis `{0}`")]
    NoEvaluableRecords(String),
    #[error("no ratings given")]
    NoRatings,
    #[error("ICC needs at least 2 messages and 2 raters, got {rows}x{raters}")]
    IccShape { rows: usize, raters: usize },
    #[error("ratings row {row} has a different number of raters")]
    RaggedRatings { row: usize },
    #[error("ratings must be finite numbers")]
    NonFiniteRating,
    #[error("ICC is undefined: zero between-message and between-rater variance")]
    DegenerateIcc,
    #[error("invalid ratings file: {0}")]
    Ratings(String),
    #[error("dataset line {line}: {detail}")]
    Dataset { line: usize, detail: String },
    #[error("cannot read {path}: {detail}")]
    Io { path: String, detail: String },
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
}
