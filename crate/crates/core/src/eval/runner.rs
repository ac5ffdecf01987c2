use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::dataset::EvalRecord;
use super::metrics::{compute_metrics, MetricsReport, PredictionOutcome};
use super::EvalError;
use crate::analyzer::{score_message, AnalyzerBackend, ScorePrompt};

/// Default number of records scored at once.
pub const DEFAULT_CONCURRENCY: usize = 4;

/// Scores every record labeled for `prompt.axis_name` and returns the
/// outcomes in record order with their metrics. At most `concurrency`
/// records are in flight at any time.
pub fn run_eval(
    records: &[EvalRecord],
    backend: &dyn AnalyzerBackend,
    prompt: &ScorePrompt,
    concurrency: usize,
) -> Result<(Vec<PredictionOutcome>, MetricsReport), EvalError> {
    prompt.validate()?;
    let axis = prompt.axis_name.as_str();
    let labeled: Vec<(usize, &EvalRecord, i64)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.label(axis).map(|t| (i, r, t)))
        .collect();
    if labeled.is_empty() {
        return Err(EvalError::NoEvaluableRecords(axis.to_string()));
    }

    let next = AtomicUsize::new(0);
    let outcomes = Mutex::new(Vec::with_capacity(labeled.len()));
    let first_error = Mutex::new(None);
    let workers = concurrency.clamp(1, labeled.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(record, r, target)) = labeled.get(i) else {
                    break;
                };
                match score_message(backend, prompt, &r.text) {
                    Ok(result) => outcomes.lock().unwrap().push(PredictionOutcome {
                        record,
                        result,
                        target,
                    }),
                    Err(e) => {
                        first_error.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e.into());
    }
    let mut outcomes = outcomes.into_inner().unwrap();
    outcomes.sort_by_key(|o| o.record);

    let mut report = compute_metrics(&outcomes)?;
    report.backend = backend.capability().name;
    report.prompt_variant = prompt.variant.to_string();
    report.axis = axis.to_string();
    Ok((outcomes, report))
}
