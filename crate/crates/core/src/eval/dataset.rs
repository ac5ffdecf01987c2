use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::EvalError;
use crate::analyzer::ScoreRange;

/// Labels in dataset files run from -5 to 5; they are shifted by this
/// offset onto the analyzer's 0..10 scale when loaded.
pub const LABEL_OFFSET: i64 = 5;
pub const LABEL_MIN: i64 = -5;
pub const LABEL_MAX: i64 = 5;

/// One labeled message. Labels are on the 0..10 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalRecord {
    pub text: String,
    pub labels: BTreeMap<String, i64>,
}

impl EvalRecord {
    pub fn label(&self, axis: &str) -> Option<i64> {
        self.labels.get(axis).copied()
    }
}

/// Parses JSON lines `{"text": "...", "agency": -2, "communion": null}`.
/// Every key other than `text` is an axis label (integer or null).
pub fn parse_dataset(text: &str) -> Result<Vec<EvalRecord>, EvalError> {
    let range = ScoreRange::CANONICAL;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| EvalError::Dataset { line: i + 1, detail };
        let obj: serde_json::Map<String, Value> =
            serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let text = obj
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| err("missing string field `text`".into()))?;
        if text.trim().is_empty() {
            return Err(err("empty text".into()));
        }
        let mut labels = BTreeMap::new();
        for (axis, value) in obj.iter().filter(|(k, _)| k.as_str() != "text") {
            match value {
                Value::Null => {}
                Value::Number(n) => {
                    let raw = n
                        .as_i64()
                        .ok_or_else(|| err(format!("label for `{axis}` is not an integer")))?;
                    if !(LABEL_MIN..=LABEL_MAX).contains(&raw) {
                        return Err(err(format!("label {raw} for `{axis}` outside -5..5")));
                    }
                    let shifted = raw + LABEL_OFFSET;
                    debug_assert!(range.contains(shifted));
                    labels.insert(axis.clone(), shifted);
                }
                other => return Err(err(format!("label for `{axis}` must be an integer or null, got {other}"))),
            }
        }
        if labels.is_empty() {
            return Err(err("record has no labels".into()));
        }
        records.push(EvalRecord {
            text: text.to_string(),
            labels,
        });
    }
    Ok(records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_dataset(&text)
}
