//! Per-axis probabilistic state machine.
//!
//! Every personality axis has `k` ordered states. Each turn the transition
//! distribution is recomputed as a convex mix of four distributions: a
//! Gaussian around the default state, a Gaussian around the current state,
//! the state probabilities carried over from the previous turn, and an
//! outside influence. The carried probabilities are updated with the same mix
//! minus the current-state term.
//!
//! Everything here is a pure function over value types; callers own the
//! mutation of [`AxisState`].

mod config;
mod engine;
mod prob;

use thiserror::Error;

pub use config::{AxisConfig, AxisState, SelectionMode, Weights, WEIGHT_TOLERANCE};
pub use engine::{
    discretized_normal, select_next_state, step, transition_probs, updated_carried_probs,
    AxisRng, TransitionComponents, TransitionTrace,
};
pub use prob::{mirror, ProbVector, MASS_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxisError {
    #[error("an axis needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("state {index} out of range for {states} states")]
    StateOutOfRange { index: usize, states: usize },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("weight `{name}` must lie in [0, 1], got {value}")]
    WeightOutOfRange { name: &'static str, value: f64 },
    #[error("weights must sum to 1, got {0}")]
    WeightSum(f64),
    #[error("carried probabilities are undefined when default, carried and outside weights are all zero")]
    ZeroCarriedWeight,
    #[error("probability {value} at index {index} is not a finite non-negative number")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("expected a vector over {expected} states, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}
