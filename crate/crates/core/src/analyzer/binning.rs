use super::ScoreRange;
use crate::axis::{AxisError, ProbVector};

/// Equal-width binning of the integer score lattice onto `states` states.
///
/// `index = min(floor((score - min) * k / (max - min + 1)), k - 1)`. Scores
/// outside the range are clamped first.
pub fn score_to_state(score: i64, range: ScoreRange, states: usize) -> usize {
    let offset = range.clamp(score) - range.min;
    let k = states as i64;
    let index = (offset * k).div_euclid(range.width());
    index.min(k - 1).max(0) as usize
}

/// One-hot distribution at [`score_to_state`].
pub fn score_to_distribution(
    score: i64,
    range: ScoreRange,
    states: usize,
) -> Result<ProbVector, AxisError> {
    ProbVector::one_hot(states, score_to_state(score, range, states))
}
