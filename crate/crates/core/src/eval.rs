//! Strict and lenient accuracy.
//!
//! Strict accuracy accepts a prediction equal to an original gold
//! antecedent; lenient accuracy also accepts the answer variations. Strings
//! are compared after collapsing whitespace, case-sensitively.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decode::PredictionRecord;
use crate::qagen::{AnswerKind, QAInstance};
use crate::text::normalize_ws;
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnaphorResult {
    pub id: String,
    pub prediction: Option<String>,
    pub matched_gold: Option<String>,
    pub strict_correct: bool,
    pub lenient_correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mention_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub total_anaphors: u64,
    pub correct_strict: u64,
    pub correct_lenient: u64,
    pub accuracy_strict: f64,
    pub accuracy_lenient: f64,
    /// Anaphors whose selected mention id is a gold antecedent id; present
    /// only for mapped predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_mention: Option<u64>,
    pub per_anaphor: Vec<AnaphorResult>,
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Scores top-1 predictions against the gold dataset. Gold anaphors without
/// a prediction, and "no answer" gold instances, count as incorrect.
pub fn score(predictions: &[PredictionRecord], gold: &[QAInstance]) -> Result<EvalReport> {
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    for p in predictions {
        if !gold_ids.contains(p.instance_id.as_str()) {
            return Err(Error::UnknownId(p.instance_id.clone()));
        }
        if by_id.insert(&p.instance_id, p).is_some() {
            return Err(Error::Validation {
                id: p.instance_id.clone(),
                message: "more than one prediction for this anaphor".into(),
            });
        }
    }

    let any_mapped = predictions.iter().any(|p| p.mapping.is_some());
    let mut report = EvalReport {
        format_version: FORMAT_VERSION,
        total_anaphors: gold.len() as u64,
        correct_strict: 0,
        correct_lenient: 0,
        accuracy_strict: 0.0,
        accuracy_lenient: 0.0,
        correct_mention: any_mapped.then_some(0),
        per_anaphor: Vec::with_capacity(gold.len()),
    };
    for g in gold {
        let record = by_id.get(g.id.as_str());
        let prediction = record.and_then(|r| r.answer_text()).map(normalize_ws);
        let matched = prediction
            .as_ref()
            .and_then(|p| g.answers.iter().find(|a| normalize_ws(&a.text) == *p));
        let strict = prediction.as_ref().is_some_and(|p| {
            g.answers
                .iter()
                .any(|a| a.kind == AnswerKind::Original && normalize_ws(&a.text) == *p)
        });
        let lenient = matched.is_some();
        let mention_correct = any_mapped.then(|| {
            let selected = record
                .and_then(|r| r.mapping.as_ref())
                .and_then(|m| m.selected.as_ref());
            selected.is_some_and(|s| g.original_answers().any(|a| a.mention_id.as_deref() == Some(s.mention_id.as_str())))
        });
        report.correct_strict += strict as u64;
        report.correct_lenient += lenient as u64;
        if let (Some(n), Some(true)) = (report.correct_mention.as_mut(), mention_correct) {
            *n += 1;
        }
        report.per_anaphor.push(AnaphorResult {
            id: g.id.clone(),
            prediction,
            matched_gold: matched.map(|a| a.text.clone()),
            strict_correct: strict,
            lenient_correct: lenient,
            mention_correct,
        });
    }
    report.accuracy_strict = ratio(report.correct_strict, report.total_anaphors);
    report.accuracy_lenient = ratio(report.correct_lenient, report.total_anaphors);
    Ok(report)
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>9}", "mode", "correct", "total", "accuracy");
        let mut row = |name: &str, n: u64| {
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>8} {:>8.2}%",
                name,
                n,
                self.total_anaphors,
                100.0 * ratio(n, self.total_anaphors)
            );
        };
        row("strict", self.correct_strict);
        row("lenient", self.correct_lenient);
        if let Some(m) = self.correct_mention {
            row("mention", m);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flip {
    pub id: String,
    pub mode: Mode,
    pub before: bool,
    pub after: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub flips: Vec<Flip>,
    pub delta_strict: f64,
    pub delta_lenient: f64,
}

/// Per-anaphor flips from `before` to `after`, and accuracy deltas
/// (after minus before).
pub fn compare_reports(before: &EvalReport, after: &EvalReport) -> Result<ReportDiff> {
    let a: BTreeMap<&str, &AnaphorResult> = before.per_anaphor.iter().map(|r| (r.id.as_str(), r)).collect();
    let b: BTreeMap<&str, &AnaphorResult> = after.per_anaphor.iter().map(|r| (r.id.as_str(), r)).collect();
    let only = |x: &BTreeMap<&str, _>, y: &BTreeMap<&str, _>| -> Vec<String> {
        x.keys().filter(|k| !y.contains_key(*k)).map(|k| k.to_string()).collect()
    };
    let (only_first, only_second) = (only(&a, &b), only(&b, &a));
    if !only_first.is_empty() || !only_second.is_empty() {
        return Err(Error::IdSetMismatch { only_first, only_second });
    }
    let mut flips = Vec::new();
    for (id, x) in &a {
        let y = b[id];
        for (mode, p, q) in [
            (Mode::Strict, x.strict_correct, y.strict_correct),
            (Mode::Lenient, x.lenient_correct, y.lenient_correct),
        ] {
            if p != q {
                flips.push(Flip {
                    id: id.to_string(),
                    mode,
                    before: p,
                    after: q,
                });
            }
        }
    }
    Ok(ReportDiff {
        flips,
        delta_strict: after.accuracy_strict - before.accuracy_strict,
        delta_lenient: after.accuracy_lenient - before.accuracy_lenient,
    })
}
