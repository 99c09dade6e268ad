//! QA instances from bridging annotations and quasi-bridging pairs.
//!
//! Each anaphor becomes a question "a' of what?", where a' is the anaphor cut
//! after its head. The context is the first sentence of the document plus
//! the anaphor's sentence and the two before it. Answers are every gold
//! antecedent inside that context together with its head, its form without
//! postmodifiers and its form without postmodifiers and determiner.
//!
//! ## Annotation file
//!
//! Tab-separated, one anaphor per line, `#` starts a comment:
//!
//! ```text
//! doc_id  anaphor_id  anaphor  antecedents
//! wsj_1   a1          3:0-1    1:2-8;0:0-1@1
//! ```
//!
//! Mentions are `sentence:first-last` with inclusive 0-based token indices,
//! optionally followed by `@head`. `sentence:index` is a one-token mention.
//! The antecedent column lists coreferent antecedents separated by `;` and
//! may be `-` or empty.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::text::{char_len, CharSpan};
use crate::treebank::{resolve_mention, Document, Mention, Sentence, TokenSpan, TreeError, Variations};
use crate::quasigen::QuasiBridgingInstance;
use crate::{Error, Result, FORMAT_VERSION};

pub const QUESTION_SUFFIX: &str = " of what?";

pub fn mention_id(doc_id: &str, sentence: usize, span: TokenSpan) -> String {
    format!("{doc_id}:{sentence}:{span}")
}

/// "a' of what?" with a' the anaphor truncated after its head.
pub fn make_question(anaphor: &Mention, sentence: &Sentence) -> Result<String, TreeError> {
    if anaphor.sentence_index != sentence.index() || !sentence.is_valid_span(anaphor.span) {
        return Err(TreeError::SpanOutOfRange {
            sentence: sentence.index(),
            span: anaphor.span,
            len: sentence.len(),
        });
    }
    if !anaphor.span.contains_index(anaphor.head_index) {
        return Err(TreeError::HeadOutsideSpan {
            span: anaphor.span,
            head: anaphor.head_index,
        });
    }
    let truncated = TokenSpan::new(anaphor.span.first, anaphor.head_index);
    Ok(format!("{}{QUESTION_SUFFIX}", sentence.span_text(truncated)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub previous_sentences: usize,
    pub include_first_sentence: bool,
}

impl Default for ContextWindow {
    fn default() -> Self {
        ContextWindow {
            previous_sentences: 2,
            include_first_sentence: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSentence {
    pub sentence_index: usize,
    pub char_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub text: String,
    pub sentences: Vec<ContextSentence>,
}

impl Context {
    pub fn offset_of(&self, sentence_index: usize) -> Option<usize> {
        self.sentences
            .iter()
            .find(|c| c.sentence_index == sentence_index)
            .map(|c| c.char_start)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.sentences.iter().map(|c| c.sentence_index).collect()
    }
}

/// Context for an anaphor in sentence `s`: sentences {0, s-2, s-1, s} in
/// document order without repeats, joined by single spaces.
pub fn build_context(doc: &Document, sentence_index: usize, window: &ContextWindow) -> Context {
    let mut indices: Vec<usize> = Vec::new();
    if window.include_first_sentence && !doc.is_empty() {
        indices.push(0);
    }
    let from = sentence_index.saturating_sub(window.previous_sentences);
    indices.extend((from..=sentence_index).filter(|&i| i < doc.len()));
    indices.sort_unstable();
    indices.dedup();

    let mut text = String::new();
    let mut sentences = Vec::with_capacity(indices.len());
    let mut len = 0;
    for i in indices {
        if !text.is_empty() {
            text.push(' ');
            len += 1;
        }
        sentences.push(ContextSentence { sentence_index: i, char_start: len });
        let s = doc.sentences()[i].text();
        text.push_str(s);
        len += char_len(s);
    }
    Context { text, sentences }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    /// A gold antecedent as annotated.
    Original,
    Head,
    WithoutPostmodifiers,
    WithoutDeterminer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub char_start: usize,
    pub kind: AnswerKind,
    pub mention_id: Option<String>,
}

impl Answer {
    pub fn char_span(&self) -> CharSpan {
        CharSpan::new(self.char_start, self.char_start + char_len(&self.text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgingAnnotation {
    pub id: String,
    pub doc_id: String,
    pub anaphor: Mention,
    /// Coreferent gold antecedents, each preceding the anaphor.
    pub antecedents: Vec<Mention>,
}

impl BridgingAnnotation {
    pub fn new(
        id: impl Into<String>,
        doc_id: impl Into<String>,
        anaphor: Mention,
        antecedents: Vec<Mention>,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(a) = antecedents.iter().find(|a| !a.precedes(&anaphor)) {
            return Err(Error::Validation {
                id,
                message: format!("antecedent \"{}\" does not precede the anaphor", a.text),
            });
        }
        Ok(BridgingAnnotation {
            id,
            doc_id: doc_id.into(),
            anaphor,
            antecedents,
        })
    }
}

/// Gold antecedents inside the context, then their variations; repeats of
/// the same `(text, char_start)` are dropped. Empty means "no answer".
pub fn build_answers(annotation: &BridgingAnnotation, doc: &Document, context: &Context) -> Result<Vec<Answer>> {
    let mut originals = Vec::new();
    let mut variants = Vec::new();
    for antecedent in &annotation.antecedents {
        let Some(offset) = context.offset_of(antecedent.sentence_index) else {
            continue;
        };
        let sentence = doc.sentence(antecedent.sentence_index).ok_or_else(|| Error::Validation {
            id: annotation.id.clone(),
            message: format!("no sentence {}", antecedent.sentence_index),
        })?;
        let v = Variations::with_head(sentence, antecedent.span, antecedent.head_index)?;
        let at = |m: &Mention, kind: AnswerKind, mention_id: Option<String>| Answer {
            text: m.text.clone(),
            char_start: offset + sentence.tokens()[m.span.first].char_start,
            kind,
            mention_id,
        };
        let id = mention_id(&doc.id, antecedent.sentence_index, antecedent.span);
        originals.push(at(&v.full, AnswerKind::Original, Some(id)));
        variants.push(at(&v.head, AnswerKind::Head, None));
        variants.push(at(&v.without_postmodifiers, AnswerKind::WithoutPostmodifiers, None));
        variants.push(at(&v.without_determiner, AnswerKind::WithoutDeterminer, None));
    }
    Ok(dedup_answers(originals.into_iter().chain(variants)))
}

fn dedup_answers(answers: impl IntoIterator<Item = Answer>) -> Vec<Answer> {
    let mut seen = HashSet::new();
    answers
        .into_iter()
        .filter(|a| seen.insert((a.text.clone(), a.char_start)))
        .collect()
}

/// Where the anaphor sits in its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnaphorLocation {
    pub sentence_index: usize,
    pub span: TokenSpan,
    pub head_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAInstance {
    pub id: String,
    pub doc_id: String,
    pub question: String,
    pub context: String,
    pub anaphor_char_span: CharSpan,
    pub answers: Vec<Answer>,
    pub is_no_answer: bool,
    /// Layout of the context; empty for quasi-bridging pairs.
    pub context_sentences: Vec<ContextSentence>,
    pub anaphor: Option<AnaphorLocation>,
}

impl QAInstance {
    pub fn anaphor_text(&self) -> Option<&str> {
        self.anaphor_char_span.slice(&self.context)
    }

    pub fn original_answers(&self) -> impl Iterator<Item = &Answer> {
        self.answers.iter().filter(|a| a.kind == AnswerKind::Original)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Validation {
                id: self.id.clone(),
                message,
            })
        };
        if !self.question.ends_with(QUESTION_SUFFIX) {
            return fail(format!("question {:?} does not end with {QUESTION_SUFFIX:?}", self.question));
        }
        let len = char_len(&self.context);
        let a = self.anaphor_char_span;
        if a.is_empty() || a.end > len {
            return fail(format!("anaphor span {}..{} invalid for context of {len} chars", a.start, a.end));
        }
        if self.is_no_answer != self.answers.is_empty() {
            return fail("is_no_answer must be set exactly when there are no answers".into());
        }
        for ans in &self.answers {
            if ans.text.is_empty() || ans.char_span().slice(&self.context) != Some(ans.text.as_str()) {
                return fail(format!("answer {:?} does not occur at offset {}", ans.text, ans.char_start));
            }
        }
        if !self.answers.is_empty() && !self.answers.iter().any(|x| x.char_span().end <= a.start) {
            return fail("no answer precedes the anaphor".into());
        }
        let mut last = None;
        for cs in &self.context_sentences {
            if cs.char_start > len || last.is_some_and(|l| cs.sentence_index <= l) {
                return fail("context sentence layout out of order or out of range".into());
            }
            last = Some(cs.sentence_index);
        }
        Ok(())
    }
}

/// Full QA instance for one gold annotation.
pub fn build_instance(annotation: &BridgingAnnotation, doc: &Document, window: &ContextWindow) -> Result<QAInstance> {
    let a = &annotation.anaphor;
    let sentence = doc.sentence(a.sentence_index).ok_or_else(|| Error::Validation {
        id: annotation.id.clone(),
        message: format!("no sentence {} in {}", a.sentence_index, doc.id),
    })?;
    let question = make_question(a, sentence)?;
    let context = build_context(doc, a.sentence_index, window);
    let offset = context.offset_of(a.sentence_index).expect("anaphor sentence is in its context");
    let (s, e) = sentence.char_span(a.span);
    let answers = build_answers(annotation, doc, &context)?;
    let instance = QAInstance {
        id: annotation.id.clone(),
        doc_id: doc.id.clone(),
        question,
        context: context.text,
        anaphor_char_span: CharSpan::new(s, e).shift(offset),
        is_no_answer: answers.is_empty(),
        answers,
        context_sentences: context.sentences,
        anaphor: Some(AnaphorLocation {
            sentence_index: a.sentence_index,
            span: a.span,
            head_index: a.head_index,
        }),
    };
    instance.validate()?;
    Ok(instance)
}

/// QA form of a quasi-bridging pair. The context is exactly `s_y s_x`; the
/// antecedent contributes itself, its head and its head-truncated form.
pub fn quasi_to_qa(instance: &QuasiBridgingInstance) -> Result<QAInstance> {
    instance.validate()?;
    let context = instance.context();
    let slice = |span: CharSpan| span.slice(&context).unwrap_or_default().to_string();
    let a = instance.anaphor_char_span;
    let question = format!(
        "{}{QUESTION_SUFFIX}",
        slice(CharSpan::new(a.start, instance.anaphor_head_char_span.end))
    );
    let y = instance.antecedent_char_span;
    let y_head = instance.antecedent_head_char_span;
    let answer = |span: CharSpan, kind| Answer {
        text: slice(span),
        char_start: span.start,
        kind,
        mention_id: None,
    };
    let answers = dedup_answers([
        answer(y, AnswerKind::Original),
        answer(y_head, AnswerKind::Head),
        answer(CharSpan::new(y.start, y_head.end), AnswerKind::WithoutPostmodifiers),
    ]);
    let qa = QAInstance {
        id: instance.id.clone(),
        doc_id: instance.doc_id.clone(),
        question,
        context,
        anaphor_char_span: a,
        is_no_answer: false,
        answers,
        context_sentences: Vec::new(),
        anaphor: None,
    };
    qa.validate()?;
    Ok(qa)
}

// ---------------------------------------------------------------------------
// Annotation ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MentionRef {
    pub sentence_index: usize,
    pub span: TokenSpan,
    pub head: Option<usize>,
}

impl std::str::FromStr for MentionRef {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("malformed mention {s:?}, expected sentence:first-last[@head]");
        let (loc, head) = match s.split_once('@') {
            Some((l, h)) => (l, Some(h.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let (sent, range) = loc.split_once(':').ok_or_else(bad)?;
        let sentence_index = sent.trim().parse().map_err(|_| bad())?;
        let (first, last) = match range.split_once('-') {
            Some((f, l)) => (
                f.trim().parse().map_err(|_| bad())?,
                l.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let i = range.trim().parse().map_err(|_| bad())?;
                (i, i)
            }
        };
        if first > last {
            return Err(bad());
        }
        Ok(MentionRef {
            sentence_index,
            span: TokenSpan::new(first, last),
            head,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub line: usize,
    pub doc_id: String,
    pub anaphor_id: String,
    pub anaphor: MentionRef,
    pub antecedents: Vec<MentionRef>,
}

pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let here = format!("annotations line {}", n + 1);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 || cols.len() > 4 {
            return Err(Error::format(here, format!("expected 3 or 4 tab-separated columns, found {}", cols.len())));
        }
        let anaphor = cols[2].parse().map_err(|e| Error::format(here.clone(), e))?;
        let antecedents = match cols.get(3).map(|c| c.trim()) {
            None | Some("") | Some("-") => Vec::new(),
            Some(list) => list
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse().map_err(|e| Error::format(here.clone(), e)))
                .collect::<Result<_>>()?,
        };
        out.push(AnnotationRecord {
            line: n + 1,
            doc_id: cols[0].trim().to_string(),
            anaphor_id: cols[1].trim().to_string(),
            anaphor,
            antecedents,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub head_fallbacks: u64,
    pub antecedents_not_preceding: u64,
}

/// Mention for a reference; an unresolvable head falls back to the last
/// token of the span (pronouns, numbers).
fn resolve_ref(doc: &Document, r: &MentionRef, stats: &mut IngestStats) -> Result<Mention> {
    let sentence = doc.sentence(r.sentence_index).ok_or_else(|| {
        Error::format(
            format!("document {}", doc.id),
            format!("no sentence {}", r.sentence_index),
        )
    })?;
    let mention = match r.head {
        Some(h) => Mention::new(sentence, r.span, h)?,
        None => match resolve_mention(sentence, r.span) {
            Ok(m) => m,
            Err(TreeError::HeadNotFound { .. }) => {
                stats.head_fallbacks += 1;
                Mention::new(sentence, r.span, r.span.last)?
            }
            Err(e) => return Err(e.into()),
        },
    };
    Ok(mention)
}

/// Resolves annotation records against their documents. Antecedents that
/// do not precede the anaphor are dropped and counted.
pub fn resolve_annotations(
    records: &[AnnotationRecord],
    docs: &BTreeMap<String, Document>,
) -> Result<(Vec<BridgingAnnotation>, IngestStats)> {
    let mut stats = IngestStats::default();
    let mut out = Vec::with_capacity(records.len());
    let mut ids = HashSet::new();
    for r in records {
        let here = format!("annotations line {}", r.line);
        if !ids.insert(r.anaphor_id.clone()) {
            return Err(Error::format(here, format!("duplicate anaphor id {}", r.anaphor_id)));
        }
        let doc = docs
            .get(&r.doc_id)
            .ok_or_else(|| Error::format(here.clone(), format!("unknown document {}", r.doc_id)))?;
        let anaphor = resolve_ref(doc, &r.anaphor, &mut stats).map_err(|e| Error::format(here.clone(), e))?;
        let mut antecedents = Vec::new();
        for a in &r.antecedents {
            let m = resolve_ref(doc, a, &mut stats).map_err(|e| Error::format(here.clone(), e))?;
            if m.precedes(&anaphor) {
                antecedents.push(m);
            } else {
                stats.antecedents_not_preceding += 1;
            }
        }
        out.push(BridgingAnnotation::new(r.anaphor_id.clone(), r.doc_id.clone(), anaphor, antecedents)?);
    }
    Ok((out, stats))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub anaphors: u64,
    /// Anaphor x gold antecedent pairs inside the context; an anaphor
    /// without one counts once (its "no answer" pair).
    pub qa_pairs: u64,
    /// Anaphor x answer entries, variations included.
    pub answer_pairs: u64,
    pub no_answer: u64,
}

impl DatasetStats {
    pub fn of(instances: &[QAInstance]) -> Self {
        let mut s = DatasetStats::default();
        for qa in instances {
            s.anaphors += 1;
            s.qa_pairs += qa.original_answers().count().max(1) as u64;
            s.answer_pairs += qa.answers.len().max(1) as u64;
            s.no_answer += qa.is_no_answer as u64;
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Extended SQuAD JSON
// ---------------------------------------------------------------------------

pub const DATASET_VERSION: &str = "bridgeqa-squad-1.1";

#[derive(Debug, Serialize, Deserialize)]
struct SquadFile {
    version: String,
    format_version: u32,
    data: Vec<SquadArticle>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadArticle {
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    answers: Vec<SquadAnswer>,
    is_no_answer: bool,
    anaphor_char_start: usize,
    anaphor_char_end: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    context_sentences: Vec<ContextSentence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anaphor: Option<AnaphorLocation>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
    kind: AnswerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mention_id: Option<String>,
}

/// SQuAD-1.1-shaped JSON. Consecutive instances of one document form one
/// article and consecutive instances sharing a context one paragraph, so
/// instance order survives a round trip.
pub fn emit_squad_json(instances: &[QAInstance]) -> String {
    let mut data: Vec<SquadArticle> = Vec::new();
    for qa in instances {
        let entry = SquadQa {
            id: qa.id.clone(),
            question: qa.question.clone(),
            answers: qa
                .answers
                .iter()
                .map(|a| SquadAnswer {
                    text: a.text.clone(),
                    answer_start: a.char_start,
                    kind: a.kind,
                    mention_id: a.mention_id.clone(),
                })
                .collect(),
            is_no_answer: qa.is_no_answer,
            anaphor_char_start: qa.anaphor_char_span.start,
            anaphor_char_end: qa.anaphor_char_span.end,
            context_sentences: qa.context_sentences.clone(),
            anaphor: qa.anaphor,
        };
        let article = match data.last_mut() {
            Some(a) if a.title == qa.doc_id => a,
            _ => {
                data.push(SquadArticle {
                    title: qa.doc_id.clone(),
                    paragraphs: Vec::new(),
                });
                data.last_mut().unwrap()
            }
        };
        match article.paragraphs.last_mut() {
            Some(p) if p.context == qa.context => p.qas.push(entry),
            _ => article.paragraphs.push(SquadParagraph {
                context: qa.context.clone(),
                qas: vec![entry],
            }),
        }
    }
    let file = SquadFile {
        version: DATASET_VERSION.to_string(),
        format_version: FORMAT_VERSION,
        data,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("dataset serializes");
    s.push('\n');
    s
}

/// Parses and validates a dataset; errors name the offending instance.
pub fn load_squad_json(json: &str) -> Result<Vec<QAInstance>> {
    let file: SquadFile = serde_json::from_str(json).map_err(|e| Error::format("dataset", e))?;
    if file.format_version > FORMAT_VERSION {
        return Err(Error::format(
            "dataset",
            format!("format_version {} is newer than supported {FORMAT_VERSION}", file.format_version),
        ));
    }
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for article in file.data {
        for paragraph in article.paragraphs {
            for qa in paragraph.qas {
                if !ids.insert(qa.id.clone()) {
                    return Err(Error::Validation {
                        id: qa.id,
                        message: "duplicate id".into(),
                    });
                }
                let instance = QAInstance {
                    id: qa.id,
                    doc_id: article.title.clone(),
                    question: qa.question,
                    context: paragraph.context.clone(),
                    anaphor_char_span: CharSpan::new(qa.anaphor_char_start, qa.anaphor_char_end),
                    answers: qa
                        .answers
                        .into_iter()
                        .map(|a| Answer {
                            text: a.text,
                            char_start: a.answer_start,
                            kind: a.kind,
                            mention_id: a.mention_id,
                        })
                        .collect(),
                    is_no_answer: qa.is_no_answer,
                    context_sentences: qa.context_sentences,
                    anaphor: qa.anaphor,
                };
                instance.validate()?;
                out.push(instance);
            }
        }
    }
    Ok(out)
}
