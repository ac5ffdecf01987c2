use std::sync::LazyLock;

use regex::Regex;

use super::ScoreRange;

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?[0-9]+(?:\.[0-9]+)?").expect("valid number pattern"));

/// A score extracted from model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParsedScore {
    pub score: i64,
    /// The numeral lay outside the range and was pulled to the nearest bound.
    pub clamped: bool,
}

/// Rounds to the nearest integer, ties away from zero (`8.5 -> 9`,
/// `-2.5 -> -3`).
pub fn round_half_away(x: f64) -> f64 {
    // f64::round already breaks ties away from zero.
    x.round()
}

/// Extracts the first decimal number in `raw`, rounds it half away from zero
/// and clamps it into `range`. `None` when the text contains no number.
pub fn parse_score(raw: &str, range: ScoreRange) -> Option<ParsedScore> {
    let token = NUMBER.find(raw)?;
    // Digit strings always parse; very long ones saturate to infinity and
    // clamp like any other out-of-range value.
    let value: f64 = token.as_str().parse().ok()?;
    let rounded = round_half_away(value);
    let (lo, hi) = (range.min as f64, range.max as f64);
    if rounded < lo {
        Some(ParsedScore {
            score: range.min,
            clamped: true,
        })
    } else if rounded > hi {
        Some(ParsedScore {
            score: range.max,
            clamped: true,
        })
    } else {
        Some(ParsedScore {
            score: rounded as i64,
            clamped: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: ScoreRange = ScoreRange::CANONICAL;

    fn score(raw: &str) -> Option<i64> {
        parse_score(raw, R).map(|p| p.score)
    }

    #[test]
    fn bare_number() {
        assert_eq!(parse_score("7", R), Some(ParsedScore { score: 7, clamped: false }));
    }

    #[test]
    fn first_token_rounded() {
        assert_eq!(score("Score: 8.6/10"), Some(9));
        assert_eq!(score("8.5"), Some(9));
        assert_eq!(score("8.49"), Some(8));
        assert_eq!(score("I'd say 3, maybe 4"), Some(3));
    }

    #[test]
    fn no_digits_is_none() {
        assert_eq!(score("very dominant"), None);
        assert_eq!(score(""), None);
        assert_eq!(score("I cannot rate this."), None);
    }

    #[test]
    fn clamps_out_of_range() {
        assert_eq!(parse_score("12", R), Some(ParsedScore { score: 10, clamped: true }));
        assert_eq!(parse_score("-3", R), Some(ParsedScore { score: 0, clamped: true }));
        let huge = "9".repeat(400);
        assert_eq!(parse_score(&huge, R), Some(ParsedScore { score: 10, clamped: true }));
    }

    #[test]
    fn half_away_from_zero() {
        assert_eq!(round_half_away(2.5), 3.0);
        assert_eq!(round_half_away(-2.5), -3.0);
        assert_eq!(round_half_away(3.5), 4.0);
        assert_eq!(round_half_away(0.49), 0.0);
    }
}
