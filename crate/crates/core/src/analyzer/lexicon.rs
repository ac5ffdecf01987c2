//! Offline scoring from weighted cue terms.
//!
//! A message's raw cue score is the sum of `weight * occurrences` over all
//! terms and punctuation marks configured for the axis. The final score is
//! `clamp(round(mid + gain * raw), min, max)`, so a message without cues lands
//! on the midpoint of the range.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    round_half_away, AnalyzerBackend, BackendCapability, RawScore, ScorePrompt, ScoreRange,
};

const BUILTIN: &str = include_str!("../../data/lexicon.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid lexicon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("punctuation rule `{0}` must be a single character")]
    Punctuation(String),
    #[error("term `{0}` contains no word characters")]
    EmptyTerm(String),
    #[error("score range [{0}, {1}] is empty")]
    Range(i64, i64),
    #[error("gain must be positive and finite")]
    Gain,
}

/// Cue terms and punctuation weights for one axis.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AxisLexicon {
    #[serde(default)]
    pub terms: BTreeMap<String, i64>,
    #[serde(default)]
    pub punctuation: BTreeMap<String, i64>,
}

fn default_gain() -> f64 {
    1.0
}

fn default_min() -> i64 {
    ScoreRange::CANONICAL.min
}

fn default_max() -> i64 {
    ScoreRange::CANONICAL.max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    #[serde(default = "default_min")]
    pub score_min: i64,
    #[serde(default = "default_max")]
    pub score_max: i64,
    #[serde(default = "default_gain")]
    pub gain: f64,
    pub axes: BTreeMap<String, AxisLexicon>,
}

impl Lexicon {
    /// The cue lists shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("builtin lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let lexicon: Lexicon = serde_json::from_str(text)?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn range(&self) -> ScoreRange {
        ScoreRange {
            min: self.score_min,
            max: self.score_max,
        }
    }

    fn validate(&self) -> Result<(), LexiconError> {
        if self.score_min >= self.score_max {
            return Err(LexiconError::Range(self.score_min, self.score_max));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(LexiconError::Gain);
        }
        for axis in self.axes.values() {
            for mark in axis.punctuation.keys() {
                if mark.chars().count() != 1 {
                    return Err(LexiconError::Punctuation(mark.clone()));
                }
            }
            for term in axis.terms.keys() {
                if tokenize(term).is_empty() {
                    return Err(LexiconError::EmptyTerm(term.clone()));
                }
            }
        }
        Ok(())
    }

    /// Sum of cue weights found in `message`, or `None` for an unknown axis.
    pub fn raw_cue_score(&self, axis: &str, message: &str) -> Option<i64> {
        let lex = self.axes.get(axis)?;
        let tokens = tokenize(message);
        let mut raw = 0;
        for (term, weight) in &lex.terms {
            raw += weight * count_sequence(&tokens, &tokenize(term)) as i64;
        }
        for (mark, weight) in &lex.punctuation {
            let c = mark.chars().next().expect("validated single char");
            raw += weight * message.chars().filter(|m| *m == c).count() as i64;
        }
        Some(raw)
    }

    /// Deterministic score of `message` on `axis`.
    pub fn score(&self, axis: &str, message: &str) -> Option<i64> {
        let raw = self.raw_cue_score(axis, message)?;
        let mid = (self.score_min + self.score_max) as f64 / 2.0;
        let value = round_half_away(mid + self.gain * raw as f64);
        Some(value.clamp(self.score_min as f64, self.score_max as f64) as i64)
    }
}

/// Lowercased word tokens; apostrophes inside words are kept.
fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn count_sequence(tokens: &[String], needle: &[String]) -> usize {
    if needle.is_empty() || needle.len() > tokens.len() {
        return 0;
    }
    tokens.windows(needle.len()).filter(|w| *w == needle).count()
}

/// [`AnalyzerBackend`] backed by a [`Lexicon`].
#[derive(Debug, Clone)]
pub struct LexiconBackend {
    lexicon: Lexicon,
}

impl LexiconBackend {
    pub fn new(lexicon: Lexicon) -> Self {
        Self { lexicon }
    }

    pub fn builtin() -> Self {
        Self::new(Lexicon::builtin())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl AnalyzerBackend for LexiconBackend {
    fn capability(&self) -> BackendCapability {
        BackendCapability {
            name: "lexicon".into(),
            supports_prefix: false,
        }
    }

    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String> {
        self.lexicon
            .score(&prompt.axis_name, message)
            .map(RawScore::Value)
            .ok_or_else(|| format!("lexicon has no cues for axis `{}`", prompt.axis_name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::{AGENCY, COMMUNION};

    #[test]
    fn tokenizer() {
        assert_eq!(
            tokenize("No, you DO it like this!"),
            vec!["no", "you", "do", "it", "like", "this"]
        );
        assert_eq!(tokenize("I don\u{2019}t care."), vec!["i", "don't", "care"]);
        assert_eq!(tokenize("'quoted'"), vec!["quoted"]);
    }

    #[test]
    fn imperative_scores_top() {
        let lex = Lexicon::builtin();
        assert_eq!(lex.score(AGENCY, "No, you do it like this!"), Some(10));
    }

    #[test]
    fn no_cues_is_midpoint() {
        let lex = Lexicon::builtin();
        assert_eq!(lex.score(AGENCY, "The appointment is on Tuesday."), Some(5));
        assert_eq!(lex.score(COMMUNION, "The appointment is on Tuesday."), Some(5));
    }

    #[test]
    fn unknown_axis() {
        assert_eq!(Lexicon::builtin().score("openness", "hello"), None);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            Lexicon::from_json(r#"{"axes":{"a":{"punctuation":{"!!":1}}}}"#),
            Err(LexiconError::Punctuation(_))
        ));
        assert!(matches!(
            Lexicon::from_json(r#"{"axes":{"a":{"terms":{"--":1}}}}"#),
            Err(LexiconError::EmptyTerm(_))
        ));
        assert!(matches!(
            Lexicon::from_json(r#"{"score_min":3,"score_max":3,"axes":{}}"#),
            Err(LexiconError::Range(3, 3))
        ));
    }

    #[test]
    fn multiword_terms_count_occurrences() {
        let lex = Lexicon::from_json(
            r#"{"gain":0.5,"axes":{"a":{"terms":{"thank you":2},"punctuation":{"?":-1}}}}"#,
        )
        .unwrap();
        assert_eq!(lex.raw_cue_score("a", "Thank you, thank you?"), Some(3));
        // 5 + 0.5 * 3 = 6.5, rounded away from zero.
        assert_eq!(lex.score("a", "Thank you, thank you?"), Some(7));
    }
}
