use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::generation::{EchoGenerator, RemoteGenerator, ReplyGenerator};
use super::scenario::{AnalyzerKind, AnalyzerSettings, GenerationKind, GenerationSettings};
use crate::analyzer::{
    AnalyzerBackend, Lexicon, LexiconBackend, LexiconError, RemoteAnalyzer, ReplayBackend,
    ReplayError,
};
use crate::llm::{ChatTransport, HttpTransport, LlmSettings};

/// Selects the analyzer backend kind, overriding the scenario.
pub const ENV_ANALYZER_BACKEND: &str = "PERSONA_ANALYZER_BACKEND";
/// Selects the generation backend kind, overriding the scenario.
pub const ENV_GENERATION_BACKEND: &str = "PERSONA_GENERATION_BACKEND";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{0} backend needs a model name (scenario or PERSONA_LLM_MODEL)")]
    MissingModel(&'static str),
    #[error("replay analyzer needs a prediction file")]
    MissingReplay,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("unknown {what} backend `{value}`")]
    UnknownKind { what: &'static str, value: String },
}

/// The services a session talks to.
#[derive(Clone)]
pub struct Backends {
    pub analyzer: Arc<dyn AnalyzerBackend>,
    pub generator: Arc<dyn ReplyGenerator>,
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends")
            .field("analyzer", &self.analyzer.capability().name)
            .field("generator", &self.generator.name())
            .finish()
    }
}

pub fn parse_analyzer_kind(value: &str) -> Result<AnalyzerKind, BackendError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "remote" => Ok(AnalyzerKind::Remote),
        "lexicon" => Ok(AnalyzerKind::Lexicon),
        "replay" => Ok(AnalyzerKind::Replay),
        _ => Err(BackendError::UnknownKind {
            what: "analyzer",
            value: value.into(),
        }),
    }
}

pub fn parse_generation_kind(value: &str) -> Result<GenerationKind, BackendError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "remote" => Ok(GenerationKind::Remote),
        "echo" => Ok(GenerationKind::Echo),
        _ => Err(BackendError::UnknownKind {
            what: "generation",
            value: value.into(),
        }),
    }
}

impl Backends {
    /// Built-in lexicon analyzer and echo generator; no network.
    pub fn hermetic() -> Self {
        Self {
            analyzer: Arc::new(LexiconBackend::builtin()),
            generator: Arc::new(EchoGenerator),
        }
    }

    /// Builds backends from scenario settings. `env` supplies connection
    /// defaults; relative file paths resolve against `base_dir`.
    pub fn from_settings(
        analyzer: &AnalyzerSettings,
        generation: &GenerationSettings,
        env: &LlmSettings,
        base_dir: &Path,
    ) -> Result<Self, BackendError> {
        Ok(Self {
            analyzer: build_analyzer(analyzer, env, base_dir)?,
            generator: build_generator(generation, env)?,
        })
    }

    /// Like [`Backends::from_settings`], with backend kinds overridable
    /// through the process environment.
    pub fn from_settings_with_env_overrides(
        analyzer: &AnalyzerSettings,
        generation: &GenerationSettings,
        base_dir: &Path,
    ) -> Result<Self, BackendError> {
        let mut analyzer = analyzer.clone();
        let mut generation = generation.clone();
        if let Ok(v) = std::env::var(ENV_ANALYZER_BACKEND) {
            analyzer.backend = parse_analyzer_kind(&v)?;
        }
        if let Ok(v) = std::env::var(ENV_GENERATION_BACKEND) {
            generation.backend = parse_generation_kind(&v)?;
        }
        Self::from_settings(&analyzer, &generation, &LlmSettings::from_env(), base_dir)
    }
}

fn transport(settings: &LlmSettings) -> Arc<dyn ChatTransport> {
    Arc::new(HttpTransport::new(settings))
}

fn build_analyzer(
    s: &AnalyzerSettings,
    env: &LlmSettings,
    base_dir: &Path,
) -> Result<Arc<dyn AnalyzerBackend>, BackendError> {
    Ok(match s.backend {
        AnalyzerKind::Lexicon => match &s.lexicon {
            Some(path) => Arc::new(LexiconBackend::new(Lexicon::load(base_dir.join(path))?)),
            None => Arc::new(LexiconBackend::builtin()),
        },
        AnalyzerKind::Replay => {
            let path = s.replay.as_ref().ok_or(BackendError::MissingReplay)?;
            Arc::new(ReplayBackend::load(base_dir.join(path))?)
        }
        AnalyzerKind::Remote => {
            let settings = env.overlay(&s.llm);
            let model = settings.model.clone().ok_or(BackendError::MissingModel("analyzer"))?;
            Arc::new(
                RemoteAnalyzer::new(transport(&settings), model)
                    .with_prefix_support(s.supports_prefix),
            )
        }
    })
}

fn build_generator(
    s: &GenerationSettings,
    env: &LlmSettings,
) -> Result<Arc<dyn ReplyGenerator>, BackendError> {
    Ok(match s.backend {
        GenerationKind::Echo => Arc::new(EchoGenerator),
        GenerationKind::Remote => {
            let settings = env.overlay(&s.llm);
            let model = settings
                .model
                .clone()
                .ok_or(BackendError::MissingModel("generation"))?;
            Arc::new(RemoteGenerator::new(transport(&settings), model).with_temperature(s.temperature))
        }
    })
}
