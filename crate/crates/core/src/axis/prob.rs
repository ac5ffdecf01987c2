use std::fmt;

use serde::{Deserialize, Serialize};

use super::AxisError;

/// Tolerance on the total mass of a [`ProbVector`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A discrete probability distribution over the ordered states of one axis.
///
/// Entries are non-negative, sum to one within [`MASS_TOLERANCE`] and there
/// are always at least two of them.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, AxisError> {
        if entries.len() < 2 {
            return Err(AxisError::TooFewStates(entries.len()));
        }
        if let Some((index, &value)) = entries
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(AxisError::InvalidProbability { index, value });
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(AxisError::NotNormalized(total));
        }
        Ok(Self(entries))
    }

    /// Builds a vector from entries the caller has already proven to be a
    /// convex combination of valid distributions.
    pub(crate) fn from_convex_combination(entries: Vec<f64>) -> Self {
        debug_assert!(entries.len() >= 2);
        debug_assert!(entries.iter().all(|p| *p >= 0.0));
        Self(entries)
    }

    pub fn one_hot(states: usize, index: usize) -> Result<Self, AxisError> {
        if states < 2 {
            return Err(AxisError::TooFewStates(states));
        }
        if index >= states {
            return Err(AxisError::StateOutOfRange { index, states });
        }
        let mut entries = vec![0.0; states];
        entries[index] = 1.0;
        Ok(Self(entries))
    }

    pub fn uniform(states: usize) -> Result<Self, AxisError> {
        if states < 2 {
            return Err(AxisError::TooFewStates(states));
        }
        Ok(Self(vec![1.0 / states as f64; states]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.0.get(index).copied()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Lowest index attaining the maximum probability.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Reverses the state order, turning a positive correlation into a
    /// negative one.
    pub fn mirrored(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = AxisError;

    fn try_from(entries: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Reverses the state order of `p`.
pub fn mirror(p: &ProbVector) -> ProbVector {
    p.mirrored()
}
