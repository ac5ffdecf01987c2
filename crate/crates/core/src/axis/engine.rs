use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AxisConfig, AxisError, AxisState, ProbVector, SelectionMode, Weights};

/// Gaussian bump over `states` ordered states.
///
/// The continuous density is evaluated at the integer state indices and the
/// result renormalized over the available states, so truncated tail mass is
/// redistributed rather than wrapped around.
pub fn discretized_normal(center: usize, sigma: f64, states: usize) -> Result<ProbVector, AxisError> {
    if states < 2 {
        return Err(AxisError::TooFewStates(states));
    }
    if center >= states {
        return Err(AxisError::StateOutOfRange {
            index: center,
            states,
        });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(AxisError::InvalidSigma(sigma));
    }
    let two_var = 2.0 * sigma * sigma;
    let mut entries: Vec<f64> = (0..states)
        .map(|i| {
            let d = i as f64 - center as f64;
            (-(d * d) / two_var).exp()
        })
        .collect();
    // exp(0) = 1 at the center keeps the total away from zero even when every
    // other entry underflows.
    let total: f64 = entries.iter().sum();
    for p in &mut entries {
        *p /= total;
    }
    Ok(ProbVector::from_convex_combination(entries))
}

/// The four weighted addends whose sum is the transition distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionComponents {
    pub default: Vec<f64>,
    pub current: Vec<f64>,
    pub carried: Vec<f64>,
    /// Absent when the turn had no outside influence for this axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside: Option<Vec<f64>>,
}

impl TransitionComponents {
    pub fn sum(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.default.len()];
        let parts = [
            Some(&self.default),
            Some(&self.current),
            Some(&self.carried),
            self.outside.as_ref(),
        ];
        for part in parts.into_iter().flatten() {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        total
    }
}

/// Everything one axis step computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTrace {
    pub transition_probs: ProbVector,
    pub new_state: usize,
    pub new_carried_probs: ProbVector,
    pub components: TransitionComponents,
    /// Weights actually applied, after any renormalization for a missing
    /// outside influence.
    pub weights: Weights,
}

impl TransitionTrace {
    pub fn next_state(&self) -> AxisState {
        AxisState {
            current: self.new_state,
            carried_probs: self.new_carried_probs.clone(),
        }
    }
}

fn check_inputs(
    cfg: &AxisConfig,
    state: &AxisState,
    outside: Option<&ProbVector>,
) -> Result<(), AxisError> {
    cfg.validate()?;
    state.validate_for(cfg)?;
    if let Some(o) = outside {
        if o.len() != cfg.states {
            return Err(AxisError::LengthMismatch {
                expected: cfg.states,
                found: o.len(),
            });
        }
    }
    Ok(())
}

fn scaled(weight: f64, p: &ProbVector) -> Vec<f64> {
    p.as_slice().iter().map(|x| weight * x).collect()
}

fn components(
    cfg: &AxisConfig,
    weights: &Weights,
    state: &AxisState,
    outside: Option<&ProbVector>,
) -> Result<TransitionComponents, AxisError> {
    let default = discretized_normal(cfg.default_state, cfg.sigma, cfg.states)?;
    let current = discretized_normal(state.current, cfg.sigma, cfg.states)?;
    Ok(TransitionComponents {
        default: scaled(weights.default, &default),
        current: scaled(weights.current, &current),
        carried: scaled(weights.carried, &state.carried_probs),
        outside: outside.map(|o| scaled(weights.outside, o)),
    })
}

fn carried_mix(
    cfg: &AxisConfig,
    weights: &Weights,
    state: &AxisState,
    outside: Option<&ProbVector>,
) -> Result<ProbVector, AxisError> {
    let (w_default, w_carried, w_outside) = weights.carried_update()?;
    let default = discretized_normal(cfg.default_state, cfg.sigma, cfg.states)?;
    let mut entries: Vec<f64> = default
        .as_slice()
        .iter()
        .zip(state.carried_probs.as_slice())
        .map(|(d, q)| w_default * d + w_carried * q)
        .collect();
    if let Some(o) = outside {
        for (e, p) in entries.iter_mut().zip(o.as_slice()) {
            *e += w_outside * p;
        }
    }
    Ok(ProbVector::from_convex_combination(entries))
}

/// Transition probabilities for the next state: the weighted mix of the
/// default-state Gaussian, the current-state Gaussian, the carried state
/// probabilities and the outside influence.
pub fn transition_probs(
    cfg: &AxisConfig,
    state: &AxisState,
    outside: &ProbVector,
) -> Result<ProbVector, AxisError> {
    check_inputs(cfg, state, Some(outside))?;
    let parts = components(cfg, &cfg.weights, state, Some(outside))?;
    Ok(ProbVector::from_convex_combination(parts.sum()))
}

/// State probabilities carried into the next turn: the same mix as
/// [`transition_probs`] minus the current-state term, with the remaining
/// weights rescaled to sum to one.
pub fn updated_carried_probs(
    cfg: &AxisConfig,
    state: &AxisState,
    outside: &ProbVector,
) -> Result<ProbVector, AxisError> {
    check_inputs(cfg, state, Some(outside))?;
    carried_mix(cfg, &cfg.weights, state, Some(outside))
}

/// Seedable per-axis random source.
///
/// Each probabilistic selection consumes exactly one 64-bit draw, so the
/// stream position after `n` selections is known and can be restored.
#[derive(Debug, Clone)]
pub struct AxisRng {
    rng: ChaCha8Rng,
    draws: u64,
}

impl AxisRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, draws: 0 }
    }

    /// Recreates a generator that has already made `draws` selections.
    pub fn restore(seed: u64, stream: u64, draws: u64) -> Self {
        let mut rng = Self::new(seed, stream);
        rng.rng.set_word_pos(u128::from(draws) * 2);
        rng.draws = draws;
        rng
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform sample in `[0, 1)` with 53 bits of precision.
    fn next_unit(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Picks the next state. Deterministic mode never touches `rng`.
pub fn select_next_state(probs: &ProbVector, mode: SelectionMode, rng: &mut AxisRng) -> usize {
    match mode {
        SelectionMode::Deterministic => probs.argmax(),
        SelectionMode::Probabilistic => {
            let u = rng.next_unit();
            let mut cumulative = 0.0;
            let mut last_positive = 0;
            for (i, &p) in probs.as_slice().iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                cumulative += p;
                last_positive = i;
                if u < cumulative {
                    return i;
                }
            }
            // Rounding left the cumulative total just below u.
            last_positive
        }
    }
}

/// One full axis update.
///
/// With `outside` absent the outside weight is dropped and the other three
/// weights renormalized. If nothing would remain (an axis driven purely by
/// outside influence) the axis holds its state. When the carried update has
/// no weight left (only the current-state term is active) the carried
/// probabilities pass through unchanged.
pub fn step(
    cfg: &AxisConfig,
    state: &AxisState,
    outside: Option<&ProbVector>,
    rng: &mut AxisRng,
) -> Result<TransitionTrace, AxisError> {
    check_inputs(cfg, state, outside)?;
    let weights = match outside {
        Some(_) => cfg.weights,
        None => match cfg.weights.without_outside() {
            Some(w) => w,
            None => return Ok(hold(cfg, state)),
        },
    };
    let parts = components(cfg, &weights, state, outside)?;
    let transition = ProbVector::from_convex_combination(parts.sum());
    let new_state = select_next_state(&transition, cfg.mode, rng);
    let new_carried = match carried_mix(cfg, &weights, state, outside) {
        Ok(p) => p,
        Err(AxisError::ZeroCarriedWeight) => state.carried_probs.clone(),
        Err(e) => return Err(e),
    };
    Ok(TransitionTrace {
        transition_probs: transition,
        new_state,
        new_carried_probs: new_carried,
        components: parts,
        weights,
    })
}

fn hold(cfg: &AxisConfig, state: &AxisState) -> TransitionTrace {
    let zeros = vec![0.0; cfg.states];
    let mut stay = zeros.clone();
    stay[state.current] = 1.0;
    TransitionTrace {
        transition_probs: ProbVector::from_convex_combination(stay.clone()),
        new_state: state.current,
        new_carried_probs: state.carried_probs.clone(),
        components: TransitionComponents {
            default: zeros.clone(),
            current: stay,
            carried: zeros,
            outside: None,
        },
        weights: Weights::new(0.0, 1.0, 0.0, 0.0),
    }
}
