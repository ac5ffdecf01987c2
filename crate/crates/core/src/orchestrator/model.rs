use serde::Serialize;

use super::scenario::{AxisDefinition, ModelDefinition};
use crate::axis::{AxisConfig, AxisError, AxisRng, AxisState, ProbVector};

/// Live axis of a session: its configuration, current state, per-state
/// prompts and random source.
#[derive(Debug, Clone, Serialize)]
pub struct PersonaAxis {
    pub axis_name: String,
    pub config: AxisConfig,
    pub state: AxisState,
    pub state_prompts: Vec<String>,
    /// Transition probabilities of the latest step, if any.
    pub last_transition: Option<ProbVector>,
    #[serde(skip)]
    pub(crate) rng: AxisRng,
    #[serde(skip)]
    pub(crate) seed: u64,
    #[serde(skip)]
    pub(crate) stream: u64,
}

impl PersonaAxis {
    /// Fresh axis in its initial state. The axis seed overrides
    /// `session_seed` when configured.
    pub fn new(def: &AxisDefinition, session_seed: u64, stream: u64) -> Result<Self, AxisError> {
        let seed = def.config.rng_seed.unwrap_or(session_seed);
        Ok(Self {
            axis_name: def.name.clone(),
            config: def.config.clone(),
            state: def.config.initial_state()?,
            state_prompts: def.state_prompts.clone(),
            last_transition: None,
            rng: AxisRng::new(seed, stream),
            seed,
            stream,
        })
    }

    pub fn rng_draws(&self) -> u64 {
        self.rng.draws()
    }

    pub(crate) fn restore_rng(&mut self, draws: u64) {
        self.rng = AxisRng::restore(self.seed, self.stream, draws);
    }

    pub fn current_prompt(&self) -> Option<&str> {
        self.state_prompts.get(self.state.current).map(String::as_str)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PersonaModel {
    pub name: String,
    pub axes: Vec<PersonaAxis>,
}

impl PersonaModel {
    /// `index` separates the random streams of different models.
    pub fn new(def: &ModelDefinition, session_seed: u64, index: u64) -> Result<Self, AxisError> {
        let axes = def
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| PersonaAxis::new(a, session_seed, (index << 32) | i as u64))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            name: def.name.clone(),
            axes,
        })
    }

    pub fn axis(&self, name: &str) -> Option<&PersonaAxis> {
        self.axes.iter().find(|a| a.axis_name == name)
    }

    pub fn axis_mut(&mut self, name: &str) -> Option<&mut PersonaAxis> {
        self.axes.iter_mut().find(|a| a.axis_name == name)
    }

    pub fn states(&self) -> Vec<(String, usize)> {
        self.axes
            .iter()
            .map(|a| (a.axis_name.clone(), a.state.current))
            .collect()
    }
}

/// The role description followed by the prompt of each axis' current state,
/// separated by blank lines. Axes without state prompts contribute nothing.
pub fn assemble_system_prompt(role_description: &str, axes: &[PersonaAxis]) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(axes.len() + 1);
    if !role_description.is_empty() {
        parts.push(role_description);
    }
    parts.extend(axes.iter().filter_map(PersonaAxis::current_prompt));
    parts.join("\n\n")
}
