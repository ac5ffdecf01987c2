use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use super::{AnalyzerBackend, BackendCapability, RawScore, ScorePrompt};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read predictions: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Line { line: usize, detail: String },
}

/// Serves recorded predictions instead of calling a model.
///
/// The file is JSON lines, one object per message:
/// `{"text": "...", "agency": "7", "communion": 3}`. Values are raw
/// completions (strings, parsed like live model output), integers, or
/// `null` for a recorded backend failure. A message or axis with no entry is
/// also reported as a backend failure.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, HashMap<String, Option<String>>>,
}

impl ReplayBackend {
    pub fn from_jsonl(text: &str) -> Result<Self, ReplayError> {
        let mut entries: HashMap<String, HashMap<String, Option<String>>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |detail: String| ReplayError::Line {
                line: line_no,
                detail,
            };
            let obj: serde_json::Map<String, Value> =
                serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let text = obj
                .get("text")
                .and_then(Value::as_str)
                .ok_or_else(|| err("missing string field `text`".into()))?
                .to_string();
            let slot = entries.entry(text).or_default();
            for (axis, value) in obj.iter().filter(|(k, _)| k.as_str() != "text") {
                let raw = match value {
                    Value::Null => None,
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    other => return Err(err(format!("unsupported value for `{axis}`: {other}"))),
                };
                slot.insert(axis.clone(), raw);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, text: &str, axis: &str, raw: Option<&str>) {
        self.entries
            .entry(text.to_string())
            .or_default()
            .insert(axis.to_string(), raw.map(str::to_string));
    }
}

impl AnalyzerBackend for ReplayBackend {
    fn capability(&self) -> BackendCapability {
        BackendCapability {
            name: "replay".into(),
            supports_prefix: false,
        }
    }

    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String> {
        match self
            .entries
            .get(message)
            .and_then(|axes| axes.get(&prompt.axis_name))
        {
            Some(Some(raw)) => Ok(RawScore::Text(raw.clone())),
            Some(None) => Err("recorded backend failure".into()),
            None => Err(format!(
                "no recorded prediction for axis `{}`",
                prompt.axis_name
            )),
        }
    }
}
