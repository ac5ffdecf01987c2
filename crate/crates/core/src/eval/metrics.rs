use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::analyzer::ScoreResult;

/// Analyzer result for one labeled message on one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    /// Index of the record in its dataset.
    pub record: usize,
    pub result: ScoreResult,
    pub target: i64,
}

/// Agreement figures of one backend, prompt variant and axis.
///
/// `accuracy`, `one_off_accuracy` and `mean_distance` are computed over
/// parseable predictions only and are `None` when there are none;
/// `error_rate` is computed over all predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default)]
    pub backend: String,
    #[serde(default)]
    pub prompt_variant: String,
    #[serde(default)]
    pub axis: String,
    pub n_total: usize,
    pub n_parseable: usize,
    pub accuracy: Option<f64>,
    pub one_off_accuracy: Option<f64>,
    pub mean_distance: Option<f64>,
    pub error_rate: f64,
}

pub fn compute_metrics(outcomes: &[PredictionOutcome]) -> Result<MetricsReport, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::NoOutcomes);
    }
    let n_total = outcomes.len();
    let distances: Vec<u64> = outcomes
        .iter()
        .filter_map(|o| o.result.score().map(|s| s.abs_diff(o.target)))
        .collect();
    let n_parseable = distances.len();
    let rate = |count: usize| count as f64 / n_parseable as f64;
    let (accuracy, one_off_accuracy, mean_distance) = if n_parseable == 0 {
        (None, None, None)
    } else {
        (
            Some(rate(distances.iter().filter(|&&d| d == 0).count())),
            Some(rate(distances.iter().filter(|&&d| d <= 1).count())),
            Some(distances.iter().sum::<u64>() as f64 / n_parseable as f64),
        )
    };
    Ok(MetricsReport {
        backend: String::new(),
        prompt_variant: String::new(),
        axis: String::new(),
        n_total,
        n_parseable,
        accuracy,
        one_off_accuracy,
        mean_distance,
        error_rate: (n_total - n_parseable) as f64 / n_total as f64,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Plain-text table with one row per report: model (backend and prompt
/// variant), then accuracy, one-off accuracy, mean distance and error rate.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let header = ["Model", "Axis", "Acc.", "1-off", "Mean Dist.", "Error"];
    let rows: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            let variant = match r.prompt_variant.as_str() {
                "" => String::new(),
                v => format!(" ({})", &v[..1]),
            };
            [
                format!("{}{}", r.backend, variant),
                r.axis.clone(),
                cell(r.accuracy),
                cell(r.one_off_accuracy),
                cell(r.mean_distance),
                format!("{:.4}", r.error_rate),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[&str]| {
        cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i < 2 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![line(&header)];
    out.push(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    for row in &rows {
        out.push(line(&row.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    out.join("\n") + "\n"
}
