use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backends::Backends;
use super::generation::generate_reply;
use super::model::{assemble_system_prompt, PersonaAxis, PersonaModel};
use super::scenario::{AxisRef, Correlation, Scenario};
use crate::analyzer::{score_message, score_to_distribution, AnalyzerError, ScorePrompt, ScoreResult};
use crate::axis::{step, AxisError, AxisState, ProbVector, TransitionTrace};
use crate::llm::ChatMessage;

#[derive(Debug, Error)]
pub enum TurnError {
    #[error("message is empty")]
    EmptyMessage,
    #[error("analyzer: {0}")]
    Analyzer(#[from] AnalyzerError),
    #[error("axis {axis}: {source}")]
    Axis { axis: AxisRef, source: AxisError },
    #[error("reply generation failed: {0}")]
    Generation(String),
    #[error("session setup: {0}")]
    Setup(AxisError),
}

#[derive(Debug, Error)]
pub enum RestoreError {
    #[error(transparent)]
    Axis(#[from] AxisError),
    #[error("turn {turn}: {detail}")]
    Inconsistent { turn: u32, detail: String },
}

/// Where an axis' outside influence came from this turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutsideSource {
    /// One-hot at the binned analyzer score.
    Analyzer { score: i64 },
    /// Carried probabilities of a linked axis.
    Link {
        source: AxisRef,
        correlation: Correlation,
    },
    /// No usable influence; the outside weight was dropped.
    Absent { reason: String },
}

/// One axis step inside a turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisUpdate {
    /// Position of this step within the turn, starting at 0.
    pub sequence: u32,
    pub model: String,
    pub axis: String,
    pub source: OutsideSource,
    /// Outside distribution before weighting.
    pub outside: Option<ProbVector>,
    pub prior: AxisState,
    pub trace: TransitionTrace,
    /// Draws taken from the axis generator since session start, after this
    /// step.
    pub rng_draws: u64,
    pub applied_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisScore {
    pub axis: String,
    pub result: ScoreResult,
}

/// Full record of one processed user message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    /// 1-based turn number.
    pub turn: u32,
    pub user_message: String,
    pub scores: Vec<AxisScore>,
    pub user_updates: Vec<AxisUpdate>,
    pub assistant_updates: Vec<AxisUpdate>,
    pub system_prompt: String,
    pub assistant_reply: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl TurnTrace {
    pub fn score(&self, axis: &str) -> Option<&ScoreResult> {
        self.scores.iter().find(|s| s.axis == axis).map(|s| &s.result)
    }

    pub fn updates(&self) -> impl Iterator<Item = &AxisUpdate> {
        self.user_updates.iter().chain(&self.assistant_updates)
    }

    pub fn update(&self, model: &str, axis: &str) -> Option<&AxisUpdate> {
        self.updates().find(|u| u.model == model && u.axis == axis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSnapshot {
    pub axis: String,
    pub state: usize,
    pub carried_probs: ProbVector,
    /// Transition probabilities of the latest step; absent before turn 1.
    pub transition_probs: Option<ProbVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub name: String,
    pub axes: Vec<AxisSnapshot>,
}

impl ModelSnapshot {
    pub fn axis(&self, name: &str) -> Option<&AxisSnapshot> {
        self.axes.iter().find(|a| a.axis == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    /// Number of completed turns.
    pub turn: u32,
    pub models: Vec<ModelSnapshot>,
}

impl StateSnapshot {
    pub fn model(&self, name: &str) -> Option<&ModelSnapshot> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn state(&self, model: &str, axis: &str) -> Option<usize> {
        Some(self.model(model)?.axis(axis)?.state)
    }
}

/// A computed turn that has not been applied to its session yet.
#[derive(Debug, Clone)]
pub struct PendingTurn {
    pub trace: TurnTrace,
    user: PersonaModel,
    assistant: PersonaModel,
}

/// One conversation: the two personality models, the message history and
/// the turn log.
#[derive(Debug, Clone)]
pub struct Session {
    scenario: Arc<Scenario>,
    seed: u64,
    prompts: HashMap<String, ScorePrompt>,
    user: PersonaModel,
    assistant: PersonaModel,
    history: Vec<ChatMessage>,
    turns: Vec<TurnTrace>,
}

impl Session {
    pub fn new(scenario: Arc<Scenario>, seed: u64) -> Result<Self, AxisError> {
        let user = PersonaModel::new(scenario.user(), seed, 0)?;
        let assistant = PersonaModel::new(scenario.assistant(), seed, 1)?;
        let prompts = scenario
            .analyzed_axes()
            .into_iter()
            .filter_map(|axis| {
                let prompt = scenario.analyzer.prompt_for(&axis)?;
                Some((axis, prompt))
            })
            .collect();
        Ok(Self {
            scenario,
            seed,
            prompts,
            user,
            assistant,
            history: Vec::new(),
            turns: Vec::new(),
        })
    }

    /// Rebuilds a session from its recorded turns without calling any
    /// backend.
    pub fn restore(
        scenario: Arc<Scenario>,
        seed: u64,
        turns: Vec<TurnTrace>,
    ) -> Result<Self, RestoreError> {
        let mut session = Self::new(scenario, seed)?;
        for (i, turn) in turns.iter().enumerate() {
            let inconsistent = |detail: String| RestoreError::Inconsistent {
                turn: turn.turn,
                detail,
            };
            if turn.turn as usize != i + 1 {
                return Err(inconsistent(format!("expected turn {}", i + 1)));
            }
            for update in turn.updates() {
                let model = if update.model == session.user.name {
                    &mut session.user
                } else if update.model == session.assistant.name {
                    &mut session.assistant
                } else {
                    return Err(inconsistent(format!("unknown model `{}`", update.model)));
                };
                let axis = model
                    .axis_mut(&update.axis)
                    .ok_or_else(|| inconsistent(format!("unknown axis `{}`", update.axis)))?;
                if axis.state != update.prior {
                    return Err(inconsistent(format!(
                        "axis {}.{} does not continue from the previous turn",
                        update.model, update.axis
                    )));
                }
                let next = update.trace.next_state();
                next.validate_for(&axis.config)?;
                axis.state = next;
                axis.last_transition = Some(update.trace.transition_probs.clone());
                axis.restore_rng(update.rng_draws);
            }
            session.history.push(ChatMessage::user(turn.user_message.clone()));
            session
                .history
                .push(ChatMessage::assistant(turn.assistant_reply.clone()));
        }
        session.turns = turns;
        Ok(session)
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn user(&self) -> &PersonaModel {
        &self.user
    }

    pub fn assistant(&self) -> &PersonaModel {
        &self.assistant
    }

    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }

    pub fn turns(&self) -> &[TurnTrace] {
        &self.turns
    }

    pub fn system_prompt(&self) -> String {
        assemble_system_prompt(&self.scenario.role_description, &self.assistant.axes)
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let model = |m: &PersonaModel| ModelSnapshot {
            name: m.name.clone(),
            axes: m
                .axes
                .iter()
                .map(|a| AxisSnapshot {
                    axis: a.axis_name.clone(),
                    state: a.state.current,
                    carried_probs: a.state.carried_probs.clone(),
                    transition_probs: a.last_transition.clone(),
                })
                .collect(),
        };
        StateSnapshot {
            turn: self.turns.len() as u32,
            models: vec![model(&self.user), model(&self.assistant)],
        }
    }

    /// Runs one turn and applies it.
    pub fn process_user_message(
        &mut self,
        backends: &Backends,
        text: &str,
    ) -> Result<TurnTrace, TurnError> {
        let pending = self.prepare_turn(backends, text)?;
        let trace = pending.trace.clone();
        self.commit(pending);
        Ok(trace)
    }

    /// Computes a turn on copies of the personality models. The session is
    /// unchanged until [`Session::commit`] is called, so a failure anywhere
    /// leaves it exactly as it was.
    pub fn prepare_turn(&self, backends: &Backends, text: &str) -> Result<PendingTurn, TurnError> {
        if text.trim().is_empty() {
            return Err(TurnError::EmptyMessage);
        }
        let started_at = Utc::now();
        let scores = self.score_all(backends, text)?;

        let mut user = self.user.clone();
        let mut assistant = self.assistant.clone();
        let mut sequence = 0;
        let mut user_updates = Vec::with_capacity(user.axes.len());
        for axis in &mut user.axes {
            let (source, outside) = self.analyzer_outside(&scores, axis);
            user_updates.push(apply_step(&user.name, axis, source, outside, &mut sequence)?);
        }

        let mut assistant_updates = Vec::with_capacity(assistant.axes.len());
        for axis in &mut assistant.axes {
            let target = AxisRef {
                model: assistant.name.clone(),
                axis: axis.axis_name.clone(),
            };
            let (source, outside) = match self.scenario.link_into(&target) {
                Some(link) => {
                    let carried = &user
                        .axis(&link.source.axis)
                        .expect("validated link source")
                        .state
                        .carried_probs;
                    let outside = match link.correlation {
                        Correlation::Positive => carried.clone(),
                        Correlation::Negative => carried.mirrored(),
                    };
                    (
                        OutsideSource::Link {
                            source: link.source.clone(),
                            correlation: link.correlation,
                        },
                        Some(outside),
                    )
                }
                None => self.analyzer_outside(&scores, axis),
            };
            assistant_updates.push(apply_step(&assistant.name, axis, source, outside, &mut sequence)?);
        }

        let system_prompt = assemble_system_prompt(&self.scenario.role_description, &assistant.axes);
        let mut history = self.history.clone();
        history.push(ChatMessage::user(text));
        let reply = generate_reply(
            backends.generator.as_ref(),
            &system_prompt,
            &history,
            &assistant.states(),
        )
        .map_err(TurnError::Generation)?;

        Ok(PendingTurn {
            trace: TurnTrace {
                turn: self.turns.len() as u32 + 1,
                user_message: text.to_string(),
                scores,
                user_updates,
                assistant_updates,
                system_prompt,
                assistant_reply: reply,
                started_at,
                finished_at: Utc::now(),
            },
            user,
            assistant,
        })
    }

    /// Applies a turn computed by [`Session::prepare_turn`] on this session.
    pub fn commit(&mut self, pending: PendingTurn) {
        debug_assert_eq!(pending.trace.turn as usize, self.turns.len() + 1);
        self.user = pending.user;
        self.assistant = pending.assistant;
        self.history
            .push(ChatMessage::user(pending.trace.user_message.clone()));
        self.history
            .push(ChatMessage::assistant(pending.trace.assistant_reply.clone()));
        self.turns.push(pending.trace);
    }

    /// Scores every analyzed axis, concurrently.
    fn score_all(&self, backends: &Backends, text: &str) -> Result<Vec<AxisScore>, TurnError> {
        let axes = self.scenario.analyzed_axes();
        let results: Vec<Result<ScoreResult, AnalyzerError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = axes
                .iter()
                .map(|axis| {
                    let prompt = &self.prompts[axis];
                    let analyzer = backends.analyzer.as_ref();
                    scope.spawn(move || score_message(analyzer, prompt, text))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("analyzer thread panicked"))
                .collect()
        });
        axes.into_iter()
            .zip(results)
            .map(|(axis, result)| Ok(AxisScore { axis, result: result? }))
            .collect()
    }

    fn analyzer_outside(
        &self,
        scores: &[AxisScore],
        axis: &PersonaAxis,
    ) -> (OutsideSource, Option<ProbVector>) {
        let result = scores
            .iter()
            .find(|s| s.axis == axis.axis_name)
            .map(|s| &s.result);
        match result {
            Some(ScoreResult::Ok { score, .. }) => {
                let range = self.prompts[&axis.axis_name].range();
                let one_hot = score_to_distribution(*score, range, axis.config.states)
                    .expect("binned index is within the axis");
                (OutsideSource::Analyzer { score: *score }, Some(one_hot))
            }
            Some(ScoreResult::ParseError { .. }) => (
                OutsideSource::Absent {
                    reason: "analyzer output had no score".into(),
                },
                None,
            ),
            Some(ScoreResult::BackendError { detail }) => (
                OutsideSource::Absent {
                    reason: format!("analyzer failed: {detail}"),
                },
                None,
            ),
            None => (
                OutsideSource::Absent {
                    reason: "axis is not analyzed".into(),
                },
                None,
            ),
        }
    }
}

fn apply_step(
    model: &str,
    axis: &mut PersonaAxis,
    source: OutsideSource,
    outside: Option<ProbVector>,
    sequence: &mut u32,
) -> Result<AxisUpdate, TurnError> {
    let trace = step(&axis.config, &axis.state, outside.as_ref(), &mut axis.rng).map_err(|source| {
        TurnError::Axis {
            axis: AxisRef {
                model: model.to_string(),
                axis: axis.axis_name.clone(),
            },
            source,
        }
    })?;
    let prior = std::mem::replace(&mut axis.state, trace.next_state());
    axis.last_transition = Some(trace.transition_probs.clone());
    let update = AxisUpdate {
        sequence: *sequence,
        model: model.to_string(),
        axis: axis.axis_name.clone(),
        source,
        outside,
        prior,
        trace,
        rng_draws: axis.rng_draws(),
        applied_at: Utc::now(),
    };
    *sequence += 1;
    Ok(update)
}

/// Runs `script` through a fresh session, one turn per message.
pub fn run_scripted_session(
    scenario: Arc<Scenario>,
    script: &[String],
    seed: u64,
    backends: &Backends,
) -> Result<Vec<TurnTrace>, TurnError> {
    let mut session = Session::new(scenario, seed).map_err(TurnError::Setup)?;
    for message in script {
        session.process_user_message(backends, message)?;
    }
    Ok(session.turns)
}
