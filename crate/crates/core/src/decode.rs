//! Constrained span decoding from per-word start/end scores.
//!
//! A candidate span `[i, j]` scores `start[i] + end[j]`. Only spans that end
//! before the anaphor, have at most `l` words and are not made up entirely
//! of pruned function words are kept; the best `k` are returned.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qagen::QAInstance;
use crate::text::{char_len, char_slice, CharSpan};
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextToken {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// Word-level scores for one QA instance, produced by an external model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsRecord {
    #[serde(default = "current_version")]
    pub format_version: u32,
    pub instance_id: String,
    pub context_tokens: Vec<ContextToken>,
    pub start_scores: Vec<f64>,
    pub end_scores: Vec<f64>,
    #[serde(default)]
    pub no_answer_score: Option<f64>,
}

fn current_version() -> u32 {
    FORMAT_VERSION
}

impl LogitsRecord {
    /// Schema checks; with `context`, token offsets are also checked
    /// against the text.
    pub fn validate(&self, context: Option<&str>) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Validation {
                id: self.instance_id.clone(),
                message,
            })
        };
        if self.format_version > FORMAT_VERSION {
            return fail(format!("unsupported format_version {}", self.format_version));
        }
        let n = self.context_tokens.len();
        if self.start_scores.len() != n || self.end_scores.len() != n {
            return fail(format!(
                "{n} tokens but {} start and {} end scores",
                self.start_scores.len(),
                self.end_scores.len()
            ));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.start_scores) || !finite(&self.end_scores) || self.no_answer_score.is_some_and(|x| !x.is_finite()) {
            return fail("scores must be finite".into());
        }
        let mut prev_end = 0;
        for (i, t) in self.context_tokens.iter().enumerate() {
            if t.char_start >= t.char_end || (i > 0 && t.char_start < prev_end) {
                return fail(format!("token {i} has bad offsets {}..{}", t.char_start, t.char_end));
            }
            prev_end = t.char_end;
            if let Some(ctx) = context {
                if char_slice(ctx, t.char_start, t.char_end) != Some(t.text.as_str()) {
                    return fail(format!("token {i} {:?} does not match the context at {}..{}", t.text, t.char_start, t.char_end));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
    pub char_span: CharSpan,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoAnswerPolicy {
    /// No answer only when no span survives the constraints.
    #[default]
    EmptyListOnly,
    /// Also no answer when `no_answer_score` beats the best span.
    ScoreThreshold,
}

pub const DEFAULT_PRUNE: &[&str] = &["a", "an", "the", "this", "that"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub k: usize,
    pub l: usize,
    pub prune: Vec<String>,
    pub no_answer: NoAnswerPolicy,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            k: 20,
            l: 5,
            prune: DEFAULT_PRUNE.iter().map(|s| s.to_string()).collect(),
            no_answer: NoAnswerPolicy::EmptyListOnly,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::Config(format!("k and l must be at least 1 (k={}, l={})", self.k, self.l)));
        }
        Ok(())
    }
}

/// Number of leading tokens that end at or before `anaphor.start`; spans
/// must lie inside them. Fails when no token overlaps the anaphor.
pub fn anaphor_boundary(tokens: &[ContextToken], anaphor: CharSpan) -> Option<usize> {
    if anaphor.is_empty() {
        return None;
    }
    let locatable = tokens
        .iter()
        .any(|t| t.char_start < anaphor.end && t.char_end > anaphor.start);
    locatable.then(|| tokens.partition_point(|t| t.char_end <= anaphor.start))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    start: usize,
    end: usize,
}

impl Candidate {
    /// Ranking order: higher score, then earlier start, then shorter.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.start.cmp(&other.start))
            .then(self.end.cmp(&other.end))
    }
}

// The heap keeps the worst retained candidate on top.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank(other)
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Ranked candidate spans for one record.
pub fn decode_spans(
    record: &LogitsRecord,
    context: &str,
    anaphor: CharSpan,
    config: &DecodeConfig,
) -> Result<Vec<SpanPrediction>> {
    config.validate()?;
    let decode_err = |message: String| Error::Decode {
        id: record.instance_id.clone(),
        message,
    };
    let tokens = &record.context_tokens;
    if record.start_scores.len() != tokens.len() || record.end_scores.len() != tokens.len() {
        return Err(decode_err("score arrays do not match the token list".into()));
    }
    let boundary = anaphor_boundary(tokens, anaphor).ok_or_else(|| {
        decode_err(format!("anaphor {}..{} is not covered by any context token", anaphor.start, anaphor.end))
    })?;

    let prune: HashSet<String> = config.prune.iter().map(|w| w.to_lowercase()).collect();
    let prunable: Vec<bool> = tokens[..boundary]
        .iter()
        .map(|t| prune.contains(&t.text.to_lowercase()))
        .collect();

    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(config.k + 1);
    for start in 0..boundary {
        let last = (start + config.l).min(boundary);
        let mut all_pruned = true;
        #[allow(clippy::needless_range_loop)]
        for end in start..last {
            all_pruned &= prunable[end];
            if all_pruned {
                continue;
            }
            let c = Candidate {
                score: record.start_scores[start] + record.end_scores[end],
                start,
                end,
            };
            if heap.len() < config.k {
                heap.push(c);
            } else if c.rank(heap.peek().unwrap()) == Ordering::Less {
                heap.pop();
                heap.push(c);
            }
        }
    }

    heap.into_sorted_vec()
        .into_iter()
        .map(|c| {
            let span = CharSpan::new(tokens[c.start].char_start, tokens[c.end].char_end);
            let text = span
                .slice(context)
                .ok_or_else(|| decode_err(format!("token offsets exceed the context ({} chars)", char_len(context))))?;
            Ok(SpanPrediction {
                token_start: c.start,
                token_end: c.end,
                text: text.to_string(),
                char_span: span,
                score: c.score,
            })
        })
        .collect()
}

/// Top span, or `None` for "no answer".
pub fn best_answer(
    ranked: &[SpanPrediction],
    no_answer_score: Option<f64>,
    policy: NoAnswerPolicy,
) -> Option<&SpanPrediction> {
    let top = ranked.first()?;
    match (policy, no_answer_score) {
        (NoAnswerPolicy::ScoreThreshold, Some(na)) if na > top.score => None,
        _ => Some(top),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSpan {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mention_id: Option<String>,
}

/// The mention chosen for an instance by span-to-mention mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedMention {
    pub mention_id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub selected: Option<SelectedMention>,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default = "current_version")]
    pub format_version: u32,
    pub instance_id: String,
    pub predictions: Vec<PredictedSpan>,
    /// Set when the no-answer policy rejected every span.
    #[serde(default)]
    pub no_answer: bool,
    /// Present once spans have been mapped onto mentions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<Mapping>,
}

impl PredictionRecord {
    /// The answer text this record commits to, if any.
    pub fn answer_text(&self) -> Option<&str> {
        match &self.mapping {
            Some(m) => m.selected.as_ref().map(|s| s.text.as_str()),
            None if self.no_answer => None,
            None => self.predictions.first().map(|p| p.text.as_str()),
        }
    }

    pub fn validate(&self, context: Option<&str>) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Validation {
                id: self.instance_id.clone(),
                message,
            })
        };
        if self.format_version > FORMAT_VERSION {
            return fail(format!("unsupported format_version {}", self.format_version));
        }
        for (n, p) in self.predictions.iter().enumerate() {
            if p.char_start >= p.char_end || !p.score.is_finite() {
                return fail(format!("prediction {n} has bad offsets or score"));
            }
            if n > 0 && p.score > self.predictions[n - 1].score {
                return fail("predictions are not sorted by score".into());
            }
            if let Some(ctx) = context {
                if char_slice(ctx, p.char_start, p.char_end) != Some(p.text.as_str()) {
                    return fail(format!("prediction {n} {:?} does not match the context", p.text));
                }
            }
        }
        Ok(())
    }
}

pub fn prediction_record(instance_id: &str, ranked: &[SpanPrediction], no_answer_score: Option<f64>, policy: NoAnswerPolicy) -> PredictionRecord {
    PredictionRecord {
        format_version: FORMAT_VERSION,
        instance_id: instance_id.to_string(),
        predictions: ranked
            .iter()
            .map(|p| PredictedSpan {
                text: p.text.clone(),
                char_start: p.char_span.start,
                char_end: p.char_span.end,
                score: p.score,
                mention_id: None,
            })
            .collect(),
        no_answer: best_answer(ranked, no_answer_score, policy).is_none(),
        mapping: None,
    }
}

/// Ids present only in `dataset` (missing) or only in `records`, or
/// repeated there (extra).
pub fn reconcile<'r>(records: &'r [LogitsRecord], dataset: &[QAInstance]) -> Result<BTreeMap<&'r str, &'r LogitsRecord>> {
    let mut by_id = BTreeMap::new();
    let mut extra = Vec::new();
    for r in records {
        if by_id.insert(r.instance_id.as_str(), r).is_some() {
            extra.push(format!("{} (duplicate)", r.instance_id));
        }
    }
    let wanted: HashSet<&str> = dataset.iter().map(|q| q.id.as_str()).collect();
    extra.extend(by_id.keys().filter(|id| !wanted.contains(*id)).map(|id| id.to_string()));
    let missing: Vec<String> = dataset
        .iter()
        .filter(|q| !by_id.contains_key(q.id.as_str()))
        .map(|q| q.id.clone())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        extra.sort();
        return Err(Error::Reconciliation { missing, extra });
    }
    Ok(by_id)
}

/// Decodes every dataset instance with its record, joined on id. Output
/// follows dataset order whatever the record order or thread count.
pub fn batch_decode(records: &[LogitsRecord], dataset: &[QAInstance], config: &DecodeConfig) -> Result<Vec<PredictionRecord>> {
    config.validate()?;
    let by_id = reconcile(records, dataset)?;
    dataset
        .par_iter()
        .map(|qa| {
            let record = by_id[qa.id.as_str()];
            record.validate(Some(&qa.context))?;
            let ranked = decode_spans(record, &qa.context, qa.anaphor_char_span, config)?;
            Ok(prediction_record(&qa.id, &ranked, record.no_answer_score, config.no_answer))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(words: &[&str], start: Vec<f64>, end: Vec<f64>) -> (LogitsRecord, String) {
        let context = words.join(" ");
        let mut tokens = Vec::new();
        let mut at = 0;
        for w in words {
            tokens.push(ContextToken {
                text: w.to_string(),
                char_start: at,
                char_end: at + w.len(),
            });
            at += w.len() + 1;
        }
        (
            LogitsRecord {
                format_version: FORMAT_VERSION,
                instance_id: "r".into(),
                context_tokens: tokens,
                start_scores: start,
                end_scores: end,
                no_answer_score: None,
            },
            context,
        )
    }

    fn anaphor_at(r: &LogitsRecord, i: usize) -> CharSpan {
        CharSpan::new(r.context_tokens[i].char_start, r.context_tokens[i].char_end)
    }

    #[test]
    fn six_token_example() {
        let (r, ctx) = record(
            &["w0", "w1", "w2", "w3", "w4", "w5"],
            vec![0.1, 2.0, 0.3, 0.0, 0.0, 0.0],
            vec![0.0, 1.5, 0.4, 0.0, 0.0, 0.0],
        );
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 5), &DecodeConfig::default()).unwrap();
        assert_eq!((out[0].token_start, out[0].token_end), (1, 1));
        assert!((out[0].score - 3.5).abs() < 1e-12);
        // all i <= j < 5 with j - i < 5
        assert_eq!(out.len(), 15);
        let best = best_answer(&out, None, NoAnswerPolicy::EmptyListOnly).unwrap();
        assert_eq!(best.text, "w1");
    }

    #[test]
    fn anaphor_first_gives_nothing() {
        let (r, ctx) = record(&["x", "y"], vec![1.0, 1.0], vec![1.0, 1.0]);
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 0), &DecodeConfig::default()).unwrap();
        assert!(out.is_empty());
        assert!(best_answer(&out, None, NoAnswerPolicy::EmptyListOnly).is_none());
    }

    #[test]
    fn function_words_alone_are_pruned() {
        let (r, ctx) = record(&["The", "a", "an", "this", "X"], vec![1.0; 5], vec![1.0; 5]);
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 4), &DecodeConfig::default()).unwrap();
        assert!(out.is_empty());
        let (r, ctx) = record(&["the", "house", "X"], vec![1.0; 3], vec![1.0; 3]);
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 2), &DecodeConfig::default()).unwrap();
        let texts: Vec<&str> = out.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, vec!["the house", "house"]);
    }

    #[test]
    fn ties_prefer_earlier_start() {
        let (r, ctx) = record(
            &["p", "q", "r", "s", "t", "u"],
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        );
        let cfg = DecodeConfig { l: 1, ..DecodeConfig::default() };
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 5), &cfg).unwrap();
        assert_eq!(out[0].token_start, 2);
        assert_eq!(out[1].token_start, 4);
    }

    #[test]
    fn unlocatable_anaphor() {
        let (r, ctx) = record(&["x", "y"], vec![0.0; 2], vec![0.0; 2]);
        let err = decode_spans(&r, &ctx, CharSpan::new(10, 12), &DecodeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }

    #[test]
    fn threshold_policy() {
        let (r, ctx) = record(&["x", "y"], vec![0.5, 0.0], vec![0.5, 0.0]);
        let out = decode_spans(&r, &ctx, anaphor_at(&r, 1), &DecodeConfig::default()).unwrap();
        assert!(best_answer(&out, Some(2.0), NoAnswerPolicy::ScoreThreshold).is_none());
        assert!(best_answer(&out, Some(2.0), NoAnswerPolicy::EmptyListOnly).is_some());
        assert!(best_answer(&out, Some(0.5), NoAnswerPolicy::ScoreThreshold).is_some());
    }

    #[test]
    fn length_mismatch_fails_validation() {
        let (mut r, ctx) = record(&["x", "y"], vec![0.0; 2], vec![0.0; 2]);
        r.end_scores.pop();
        assert!(r.validate(Some(&ctx)).is_err());
    }

    #[test]
    fn zero_k_rejected() {
        let cfg = DecodeConfig { k: 0, ..DecodeConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
