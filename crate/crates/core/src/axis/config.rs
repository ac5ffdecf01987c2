use serde::{Deserialize, Serialize};

use super::{discretized_normal, AxisError, ProbVector};

/// Tolerance on the weight sum of an [`AxisConfig`].
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// How the next state is chosen from the transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Sample the next state from the transition probabilities.
    Probabilistic,
    /// Always take the most probable state (lowest index on ties).
    Deterministic,
}

/// Mixing weights of the four transition components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Pull towards the default state.
    pub default: f64,
    /// Pull towards the current state.
    pub current: f64,
    /// Carried state probabilities from the previous turn.
    pub carried: f64,
    /// Outside influence (analyzer result or a linked axis).
    pub outside: f64,
}

impl Weights {
    pub fn new(default: f64, current: f64, carried: f64, outside: f64) -> Self {
        Self {
            default,
            current,
            carried,
            outside,
        }
    }

    pub fn sum(&self) -> f64 {
        self.default + self.current + self.carried + self.outside
    }

    /// Weights of the carried-probability update, i.e. without the current
    /// state component and rescaled to sum to one. Returned as
    /// `(default, carried, outside)`.
    pub fn carried_update(&self) -> Result<(f64, f64, f64), AxisError> {
        let total = self.default + self.carried + self.outside;
        if total <= 0.0 {
            return Err(AxisError::ZeroCarriedWeight);
        }
        Ok((
            self.default / total,
            self.carried / total,
            self.outside / total,
        ))
    }

    /// Weights with the outside term removed and the remaining three scaled by
    /// `1 / (1 - outside)`. `None` when nothing remains.
    pub fn without_outside(&self) -> Option<Self> {
        let rest = self.default + self.current + self.carried;
        if rest <= 0.0 {
            return None;
        }
        Some(Self {
            default: self.default / rest,
            current: self.current / rest,
            carried: self.carried / rest,
            outside: 0.0,
        })
    }

    fn validate(&self) -> Result<(), AxisError> {
        for (name, w) in [
            ("default", self.default),
            ("current", self.current),
            ("carried", self.carried),
            ("outside", self.outside),
        ] {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(AxisError::WeightOutOfRange { name, value: w });
            }
        }
        let total = self.sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(AxisError::WeightSum(total));
        }
        Ok(())
    }
}

/// Static parameters of one personality axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    /// Number of ordered states.
    pub states: usize,
    /// Default (and starting) state.
    pub default_state: usize,
    /// Standard deviation of both Gaussian components, in state-index units.
    pub sigma: f64,
    pub weights: Weights,
    pub mode: SelectionMode,
    /// Overrides the session seed for this axis when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl AxisConfig {
    pub fn validate(&self) -> Result<(), AxisError> {
        if self.states < 2 {
            return Err(AxisError::TooFewStates(self.states));
        }
        if self.default_state >= self.states {
            return Err(AxisError::StateOutOfRange {
                index: self.default_state,
                states: self.states,
            });
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(AxisError::InvalidSigma(self.sigma));
        }
        self.weights.validate()
    }

    /// State at session start: sitting in the default state, carrying the
    /// default-state Gaussian as state probabilities.
    pub fn initial_state(&self) -> Result<AxisState, AxisError> {
        self.validate()?;
        Ok(AxisState {
            current: self.default_state,
            carried_probs: discretized_normal(self.default_state, self.sigma, self.states)?,
        })
    }
}

/// Evolving state of one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisState {
    pub current: usize,
    pub carried_probs: ProbVector,
}

impl AxisState {
    pub fn validate_for(&self, cfg: &AxisConfig) -> Result<(), AxisError> {
        if self.current >= cfg.states {
            return Err(AxisError::StateOutOfRange {
                index: self.current,
                states: cfg.states,
            });
        }
        if self.carried_probs.len() != cfg.states {
            return Err(AxisError::LengthMismatch {
                expected: cfg.states,
                found: self.carried_probs.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assistant() -> AxisConfig {
        AxisConfig {
            states: 5,
            default_state: 4,
            sigma: 0.1,
            weights: Weights::new(0.1, 0.5, 0.3, 0.1),
            mode: SelectionMode::Probabilistic,
            rng_seed: None,
        }
    }

    #[test]
    fn validates_configs() {
        assert!(assistant().validate().is_ok());

        let mut cfg = assistant();
        cfg.states = 1;
        cfg.default_state = 0;
        assert!(matches!(cfg.validate(), Err(AxisError::TooFewStates(1))));

        let mut cfg = assistant();
        cfg.default_state = 5;
        assert!(matches!(
            cfg.validate(),
            Err(AxisError::StateOutOfRange { .. })
        ));

        let mut cfg = assistant();
        cfg.sigma = 0.0;
        assert!(matches!(cfg.validate(), Err(AxisError::InvalidSigma(_))));

        let mut cfg = assistant();
        cfg.weights.outside = 0.2;
        assert!(matches!(cfg.validate(), Err(AxisError::WeightSum(_))));

        let mut cfg = assistant();
        cfg.weights = Weights::new(1.2, -0.2, 0.0, 0.0);
        assert!(matches!(
            cfg.validate(),
            Err(AxisError::WeightOutOfRange { .. })
        ));
    }

    #[test]
    fn carried_update_weights() {
        let (d, q, o) = assistant().weights.carried_update().unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        assert!((q - 0.6).abs() < 1e-12);
        assert!((o - 0.2).abs() < 1e-12);
        assert!(matches!(
            Weights::new(0.0, 1.0, 0.0, 0.0).carried_update(),
            Err(AxisError::ZeroCarriedWeight)
        ));
    }

    #[test]
    fn dropping_outside_renormalizes() {
        let w = Weights::new(0.1, 0.5, 0.2, 0.2).without_outside().unwrap();
        assert!((w.default - 0.125).abs() < 1e-12);
        assert!((w.current - 0.625).abs() < 1e-12);
        assert!((w.carried - 0.25).abs() < 1e-12);
        assert_eq!(w.outside, 0.0);
        assert!(Weights::new(0.0, 0.0, 0.0, 1.0).without_outside().is_none());
    }

    #[test]
    fn initial_state_sits_at_default() {
        let s = assistant().initial_state().unwrap();
        assert_eq!(s.current, 4);
        assert_eq!(s.carried_probs.argmax(), 4);
    }
}
