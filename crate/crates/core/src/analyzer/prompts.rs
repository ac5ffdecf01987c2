use super::{PromptVariant, ScorePrompt, ScoreRange};

pub const AGENCY: &str = "agency";
pub const COMMUNION: &str = "communion";

const AGENCY_SHORT: &str = "Give a score between 0 and 10 where 0 is very submissive and 10 is very dominant. The score should be a single number.";

const AGENCY_LONG: &str = "You are a helpful assistant that analyzes the dominance of a sentence according to the interpersonal circumplex model. You will do this by giving a score between 0 and 10 where 0 is very submissive and 10 is very dominant. The score should be a single number. For example, 'Nein, Sie machen das so!' should be scored as 10.";

const COMMUNION_SHORT: &str = "Give a score between 0 and 10 where 0 is very hostile and 10 is very friendly. The score should be a single number.";

const COMMUNION_LONG: &str = "You are a helpful assistant that analyzes the friendliness of a sentence according to the interpersonal circumplex model. You will do this by giving a score between 0 and 10 where 0 is very hostile and 10 is very friendly. The score should be a single number. For example, 'Ich hasse dich!' should be scored as 0.";

/// Built-in scoring prompt for the two circumplex axes.
pub fn default_prompt(axis: &str, variant: PromptVariant) -> Option<ScorePrompt> {
    let text = match (axis, variant) {
        (AGENCY, PromptVariant::Short) => AGENCY_SHORT,
        (AGENCY, PromptVariant::Long) => AGENCY_LONG,
        (COMMUNION, PromptVariant::Short) => COMMUNION_SHORT,
        (COMMUNION, PromptVariant::Long) => COMMUNION_LONG,
        _ => return None,
    };
    Some(ScorePrompt {
        axis_name: axis.to_string(),
        prompt_text: text.to_string(),
        variant,
        score_min: ScoreRange::CANONICAL.min,
        score_max: ScoreRange::CANONICAL.max,
        answer_prefix: None,
    })
}

/// All four built-in prompts.
pub fn default_prompts() -> Vec<ScorePrompt> {
    [AGENCY, COMMUNION]
        .into_iter()
        .flat_map(|axis| {
            [PromptVariant::Short, PromptVariant::Long]
                .into_iter()
                .filter_map(move |v| default_prompt(axis, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_valid_prompts() {
        let prompts = default_prompts();
        assert_eq!(prompts.len(), 4);
        for p in &prompts {
            p.validate().unwrap();
            assert_eq!(p.range(), ScoreRange::CANONICAL);
        }
        assert!(default_prompt("warmth", PromptVariant::Short).is_none());
    }
}
