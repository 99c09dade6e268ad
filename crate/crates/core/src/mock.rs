//! Seeded random scores in the logits format, for running the pipeline
//! without a model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decode::{ContextToken, LogitsRecord};
use crate::qagen::{AnswerKind, QAInstance};
use crate::FORMAT_VERSION;

/// Word tokens of a context: runs of alphanumeric characters, and every
/// other non-space character on its own. Token boundaries include every
/// boundary of the detokenized tree tokens.
pub fn context_tokens(context: &str) -> Vec<ContextToken> {
    let mut out: Vec<ContextToken> = Vec::new();
    let mut in_word = false;
    for (i, c) in context.chars().enumerate() {
        if c.is_whitespace() {
            in_word = false;
            continue;
        }
        let word = c.is_alphanumeric();
        match out.last_mut() {
            Some(t) if in_word && word => {
                t.text.push(c);
                t.char_end = i + 1;
            }
            _ => out.push(ContextToken {
                text: c.to_string(),
                char_start: i,
                char_end: i + 1,
            }),
        }
        in_word = word;
    }
    out
}

fn stream_seed(seed: u64, id: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockConfig {
    pub seed: u64,
    /// Added to the start and end score of the first original answer.
    pub gold_bias: Option<f64>,
}

/// Scores drawn uniformly from [-1, 1), one stream per instance id.
pub fn mock_logits(qa: &QAInstance, config: &MockConfig) -> LogitsRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, &qa.id));
    let tokens = context_tokens(&qa.context);
    let mut start_scores: Vec<f64> = tokens.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut end_scores: Vec<f64> = tokens.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let no_answer_score = Some(rng.random_range(-1.0..1.0));
    if let Some(bias) = config.gold_bias {
        if let Some(a) = qa.answers.iter().find(|a| a.kind == AnswerKind::Original) {
            let span = a.char_span();
            if let Some(i) = tokens.iter().position(|t| t.char_start == span.start) {
                start_scores[i] += bias;
            }
            if let Some(j) = tokens.iter().position(|t| t.char_end == span.end) {
                end_scores[j] += bias;
            }
        }
    }
    LogitsRecord {
        format_version: FORMAT_VERSION,
        instance_id: qa.id.clone(),
        context_tokens: tokens,
        start_scores,
        end_scores,
        no_answer_score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation() {
        let toks: Vec<String> = context_tokens("last week's quake, U.S.")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, vec!["last", "week", "'", "s", "quake", ",", "U", ".", "S", "."]);
    }

    #[test]
    fn offsets_match_context() {
        let ctx = "café, naïve  résumé";
        for t in context_tokens(ctx) {
            assert_eq!(crate::text::char_slice(ctx, t.char_start, t.char_end), Some(t.text.as_str()));
        }
    }

    #[test]
    fn seeds_are_per_instance() {
        assert_eq!(stream_seed(7, "a"), stream_seed(7, "a"));
        assert_ne!(stream_seed(7, "a"), stream_seed(7, "b"));
        assert_ne!(stream_seed(7, "a"), stream_seed(8, "a"));
    }
}
