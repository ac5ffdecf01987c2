//! Message analyzers: map a message to an integer score per personality axis
//! and turn scores into outside-influence distributions.

mod binning;
mod lexicon;
mod parse;
mod prompts;
mod remote;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binning::{score_to_distribution, score_to_state};
pub use lexicon::{AxisLexicon, Lexicon, LexiconBackend, LexiconError};
pub use parse::{parse_score, round_half_away, ParsedScore};
pub use prompts::{default_prompt, default_prompts, AGENCY, COMMUNION};
pub use remote::RemoteAnalyzer;
pub use replay::{ReplayBackend, ReplayError};

/// Inclusive integer score range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: i64,
    pub max: i64,
}

impl ScoreRange {
    /// The engine's canonical scale.
    pub const CANONICAL: ScoreRange = ScoreRange { min: 0, max: 10 };

    pub fn new(min: i64, max: i64) -> Result<Self, AnalyzerError> {
        if min >= max {
            return Err(AnalyzerError::InvalidRange { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, score: i64) -> bool {
        (self.min..=self.max).contains(&score)
    }

    pub fn clamp(&self, score: i64) -> i64 {
        score.clamp(self.min, self.max)
    }

    /// Number of integer points in the range.
    pub fn width(&self) -> i64 {
        self.max - self.min + 1
    }

    /// Midpoint, rounded half away from zero.
    pub fn midpoint(&self) -> i64 {
        round_half_away((self.min + self.max) as f64 / 2.0) as i64
    }
}

impl Default for ScoreRange {
    fn default() -> Self {
        Self::CANONICAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Short,
    Long,
}

impl std::str::FromStr for PromptVariant {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "short" | "s" => Ok(Self::Short),
            "long" | "l" => Ok(Self::Long),
            other => Err(AnalyzerError::UnknownVariant(other.to_string())),
        }
    }
}

impl std::fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Short => "short",
            Self::Long => "long",
        })
    }
}

/// System prompt instructing a model to score one axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorePrompt {
    pub axis_name: String,
    pub prompt_text: String,
    pub variant: PromptVariant,
    pub score_min: i64,
    pub score_max: i64,
    /// Assistant-turn prefix nudging the model to answer with a bare number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_prefix: Option<String>,
}

impl ScorePrompt {
    pub fn range(&self) -> ScoreRange {
        ScoreRange {
            min: self.score_min,
            max: self.score_max,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        ScoreRange::new(self.score_min, self.score_max)?;
        if self.prompt_text.trim().is_empty() {
            return Err(AnalyzerError::EmptyPrompt(self.axis_name.clone()));
        }
        Ok(())
    }
}

/// Outcome of scoring one message on one axis. Exactly one variant per call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ScoreResult {
    Ok { score: i64, clamped: bool },
    ParseError { raw_text: String },
    BackendError { detail: String },
}

impl ScoreResult {
    pub fn score(&self) -> Option<i64> {
        match self {
            Self::Ok { score, .. } => Some(*score),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        !matches!(self, Self::Ok { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendCapability {
    pub name: String,
    pub supports_prefix: bool,
}

/// What a backend produced before validation.
#[derive(Debug, Clone, PartialEq)]
pub enum RawScore {
    /// Free text from a generative model, still to be parsed.
    Text(String),
    /// A number the backend computed itself.
    Value(i64),
}

/// A pluggable scoring strategy. Implementations must be safe to call
/// concurrently and must return within a bounded time.
pub trait AnalyzerBackend: Send + Sync {
    fn capability(&self) -> BackendCapability;

    /// Scores `message` (already validated as non-empty). An `Err` is a
    /// backend failure such as a transport error or timeout.
    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String>;
}

impl<T: AnalyzerBackend + ?Sized> AnalyzerBackend for std::sync::Arc<T> {
    fn capability(&self) -> BackendCapability {
        (**self).capability()
    }

    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String> {
        (**self).evaluate(prompt, message)
    }
}

impl<T: AnalyzerBackend + ?Sized> AnalyzerBackend for Box<T> {
    fn capability(&self) -> BackendCapability {
        (**self).capability()
    }

    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String> {
        (**self).evaluate(prompt, message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("message is empty")]
    EmptyMessage,
    #[error("score range [{min}, {max}] is empty")]
    InvalidRange { min: i64, max: i64 },
    #[error("prompt for axis `{0}` is empty")]
    EmptyPrompt(String),
    #[error("unknown prompt variant `{0}`")]
    UnknownVariant(String),
}

/// Scores one message on one axis.
///
/// Empty (or whitespace-only) messages are rejected before the backend is
/// called. Backend text is parsed with [`parse_score`]; out-of-range numbers
/// are clamped into the prompt's range and flagged.
pub fn score_message<B: AnalyzerBackend + ?Sized>(
    backend: &B,
    prompt: &ScorePrompt,
    message: &str,
) -> Result<ScoreResult, AnalyzerError> {
    if message.trim().is_empty() {
        return Err(AnalyzerError::EmptyMessage);
    }
    prompt.validate()?;
    let range = prompt.range();
    Ok(match backend.evaluate(prompt, message) {
        Err(detail) => ScoreResult::BackendError { detail },
        Ok(RawScore::Value(v)) => ScoreResult::Ok {
            score: range.clamp(v),
            clamped: !range.contains(v),
        },
        Ok(RawScore::Text(raw)) => match parse_score(&raw, range) {
            Some(p) => ScoreResult::Ok {
                score: p.score,
                clamped: p.clamped,
            },
            None => ScoreResult::ParseError { raw_text: raw },
        },
    })
}
