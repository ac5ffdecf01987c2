use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{default_prompt, PromptVariant, ScorePrompt};
use crate::axis::{AxisConfig, AxisError};
use crate::llm::LlmSettings;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("axis {model}.{axis}: {source}")]
    Axis {
        model: String,
        axis: String,
        source: AxisError,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// One axis as declared in a scenario file. The axis parameters are inlined
/// next to the name and the state prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDefinition {
    pub name: String,
    #[serde(flatten)]
    pub config: AxisConfig,
    /// One prompt per state, selected by the current state. May be empty for
    /// models that never feed the reply generator.
    #[serde(default)]
    pub state_prompts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDefinition {
    pub name: String,
    pub axes: Vec<AxisDefinition>,
}

impl ModelDefinition {
    pub fn axis(&self, name: &str) -> Option<&AxisDefinition> {
        self.axes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisRef {
    pub model: String,
    pub axis: String,
}

impl std::fmt::Display for AxisRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.model, self.axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    Positive,
    Negative,
}

/// Feeds the carried state probabilities of one axis into another as its
/// outside influence, reversed first for a negative correlation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisLink {
    pub source: AxisRef,
    pub target: AxisRef,
    pub correlation: Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerKind {
    Remote,
    Lexicon,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSettings {
    pub backend: AnalyzerKind,
    #[serde(flatten)]
    pub llm: LlmSettings,
    #[serde(default)]
    pub supports_prefix: bool,
    /// Lexicon file for the lexicon backend; the built-in lexicon if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// Prediction file for the replay backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
    pub prompt_variant: PromptVariant,
    /// Prompt registry; built-in prompts cover axes missing here.
    #[serde(default)]
    pub prompts: Vec<ScorePrompt>,
}

impl AnalyzerSettings {
    pub fn prompt_for(&self, axis: &str) -> Option<ScorePrompt> {
        self.prompts
            .iter()
            .find(|p| p.axis_name == axis && p.variant == self.prompt_variant)
            .cloned()
            .or_else(|| default_prompt(axis, self.prompt_variant))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationKind {
    Remote,
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub backend: GenerationKind,
    #[serde(flatten)]
    pub llm: LlmSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

fn default_user_model() -> String {
    "user".into()
}

fn default_assistant_model() -> String {
    "assistant".into()
}

/// Complete configuration of a conversation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: String,
    #[serde(default)]
    pub title: String,
    pub role_description: String,
    /// Model whose axes track the human, updated from analyzer scores.
    #[serde(default = "default_user_model")]
    pub user_model: String,
    /// Model whose axes steer the reply generator.
    #[serde(default = "default_assistant_model")]
    pub assistant_model: String,
    pub models: Vec<ModelDefinition>,
    #[serde(default)]
    pub links: Vec<AxisLink>,
    pub analyzer: AnalyzerSettings,
    pub generation: GenerationSettings,
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Loads every `*.json` file of a directory, sorted by id.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>, ScenarioError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|source| ScenarioError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut scenarios = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|source| ScenarioError::Io {
                    path: dir.to_path_buf(),
                    source,
                })?
                .path();
            if path.extension().is_some_and(|e| e == "json") {
                scenarios.push(Self::load(&path)?);
            }
        }
        scenarios.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
        let mut seen = HashSet::new();
        for s in &scenarios {
            if !seen.insert(s.scenario_id.clone()) {
                return Err(invalid(format!("duplicate scenario id `{}`", s.scenario_id)));
            }
        }
        Ok(scenarios)
    }

    pub fn model(&self, name: &str) -> Option<&ModelDefinition> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn axis(&self, r: &AxisRef) -> Option<&AxisDefinition> {
        self.model(&r.model)?.axis(&r.axis)
    }

    pub fn user(&self) -> &ModelDefinition {
        self.model(&self.user_model).expect("validated user model")
    }

    pub fn assistant(&self) -> &ModelDefinition {
        self.model(&self.assistant_model)
            .expect("validated assistant model")
    }

    /// The link feeding `target`, if any.
    pub fn link_into(&self, target: &AxisRef) -> Option<&AxisLink> {
        self.links.iter().find(|l| &l.target == target)
    }

    /// Axis names that need an analyzer score each turn: every user axis and
    /// every assistant axis without an incoming link, in declaration order.
    pub fn analyzed_axes(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        let assistant_unlinked = self.assistant().axes.iter().filter(|a| {
            self.link_into(&AxisRef {
                model: self.assistant_model.clone(),
                axis: a.name.clone(),
            })
            .is_none()
        });
        for axis in self.user().axes.iter().chain(assistant_unlinked) {
            if !names.contains(&axis.name) {
                names.push(axis.name.clone());
            }
        }
        names
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !is_identifier(&self.scenario_id) {
            return Err(invalid(format!(
                "scenario id `{}` must be a non-empty identifier",
                self.scenario_id
            )));
        }
        let mut model_names = HashSet::new();
        for model in &self.models {
            if !is_identifier(&model.name) {
                return Err(invalid(format!("model name `{}` is not an identifier", model.name)));
            }
            if !model_names.insert(model.name.as_str()) {
                return Err(invalid(format!("duplicate model `{}`", model.name)));
            }
            let mut axis_names = HashSet::new();
            for axis in &model.axes {
                if !is_identifier(&axis.name) {
                    return Err(invalid(format!(
                        "axis name `{}` in model `{}` is not an identifier",
                        axis.name, model.name
                    )));
                }
                if !axis_names.insert(axis.name.as_str()) {
                    return Err(invalid(format!(
                        "duplicate axis `{}` in model `{}`",
                        axis.name, model.name
                    )));
                }
                axis.config.validate().map_err(|source| ScenarioError::Axis {
                    model: model.name.clone(),
                    axis: axis.name.clone(),
                    source,
                })?;
                if !axis.state_prompts.is_empty() {
                    if axis.state_prompts.len() != axis.config.states {
                        return Err(invalid(format!(
                            "axis {}.{} has {} state prompts for {} states",
                            model.name,
                            axis.name,
                            axis.state_prompts.len(),
                            axis.config.states
                        )));
                    }
                    if axis.state_prompts.iter().any(|p| p.trim().is_empty()) {
                        return Err(invalid(format!(
                            "axis {}.{} has an empty state prompt",
                            model.name, axis.name
                        )));
                    }
                }
            }
        }
        if self.user_model == self.assistant_model {
            return Err(invalid("user and assistant model must differ"));
        }
        for name in [&self.user_model, &self.assistant_model] {
            if self.model(name).is_none() {
                return Err(invalid(format!("model `{name}` is not defined")));
            }
        }
        if self.models.len() != 2 {
            return Err(invalid(
                "a scenario defines exactly the user and the assistant model",
            ));
        }
        for axis in &self.assistant().axes {
            if axis.state_prompts.is_empty() {
                return Err(invalid(format!(
                    "assistant axis `{}` needs one prompt per state",
                    axis.name
                )));
            }
        }
        let mut targets = HashSet::new();
        for link in &self.links {
            let source = self
                .axis(&link.source)
                .ok_or_else(|| invalid(format!("link source {} does not exist", link.source)))?;
            let target = self
                .axis(&link.target)
                .ok_or_else(|| invalid(format!("link target {} does not exist", link.target)))?;
            if link.source == link.target {
                return Err(invalid(format!("axis {} is linked to itself", link.source)));
            }
            if link.source.model != self.user_model || link.target.model != self.assistant_model {
                return Err(invalid(format!(
                    "link {} -> {} must run from the user model to the assistant model",
                    link.source, link.target
                )));
            }
            if source.config.states != target.config.states {
                return Err(invalid(format!(
                    "linked axes {} and {} have different state counts",
                    link.source, link.target
                )));
            }
            if !targets.insert(link.target.clone()) {
                return Err(invalid(format!("axis {} has more than one incoming link", link.target)));
            }
        }
        for p in &self.analyzer.prompts {
            p.validate()
                .map_err(|e| invalid(format!("analyzer prompt: {e}")))?;
        }
        for axis in self.analyzed_axes() {
            if self.analyzer.prompt_for(&axis).is_none() {
                return Err(invalid(format!(
                    "no {} analyzer prompt for axis `{axis}`",
                    self.analyzer.prompt_variant
                )));
            }
        }
        if self.analyzer.backend == AnalyzerKind::Replay && self.analyzer.replay.is_none() {
            return Err(invalid("replay analyzer needs a `replay` prediction file"));
        }
        Ok(())
    }
}
