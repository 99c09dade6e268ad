//! Quasi-bridging data synthesis.
//!
//! A noun phrase of the form "X preposition Y" or "Y 's X" whose X and Y
//! sides contain no further NP is split across two sentences: a nearby
//! sentence `s_y` that mentions Y (but not X) provides the antecedent, and
//! the source sentence, with the whole phrase replaced by "the X", becomes
//! `s_x`. The pair `s_y s_x` then carries the link Y -> "the X".

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io;
use crate::text::CharSpan;
use crate::treebank::{flat_np, find_head, ConstituentNode, Document, Sentence, TokenSpan};
use crate::{Error, Result, FORMAT_VERSION};

const DETERMINER_TAGS: &[&str] = &["DT", "PDT", "PRP$"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XYKind {
    Prepositional,
    Possessive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XYExtraction {
    pub sentence_index: usize,
    pub np_span: TokenSpan,
    pub x_span: TokenSpan,
    pub y_span: TokenSpan,
    pub x_head: usize,
    pub y_head: usize,
    pub kind: XYKind,
    pub preposition: Option<String>,
}

/// Which prepositions may link X and Y. `None` admits every `IN` word.
#[derive(Debug, Clone, Default)]
pub struct ExtractConfig {
    pub prepositions: Option<BTreeSet<String>>,
}

impl ExtractConfig {
    pub fn with_prepositions<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ExtractConfig {
            prepositions: Some(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect()),
        }
    }

    fn allows(&self, preposition: &str) -> bool {
        match &self.prepositions {
            None => true,
            Some(set) => set.contains(&preposition.to_lowercase()),
        }
    }
}

pub mod reasons {
    pub const INNER_NP: &str = "inner_np";
    pub const NO_HEAD: &str = "no_noun_head";
    pub const PREPOSITION: &str = "preposition_not_allowed";
    pub const SAME_HEAD: &str = "x_head_equals_y_head";
    pub const NO_SOURCE_SENTENCE: &str = "no_source_sentence";
    pub const SYNTHESIS: &str = "synthesis_error";
    pub const NO_TREE: &str = "sentence_without_tree";
}

type Rejections = BTreeMap<String, u64>;

fn reject(counts: &mut Rejections, reason: &str) {
    *counts.entry(reason.to_string()).or_default() += 1;
}

fn pos(sentence: &Sentence, i: usize) -> &str {
    &sentence.tokens()[i].pos
}

fn contains_np(nodes: &[ConstituentNode]) -> bool {
    nodes.iter().any(|n| n.walk().any(ConstituentNode::is_np))
}

fn union_span(nodes: &[ConstituentNode]) -> TokenSpan {
    TokenSpan::new(nodes[0].span.first, nodes[nodes.len() - 1].span.last)
}

/// Drops leading determiners; `None` when nothing remains.
fn strip_leading_determiners(sentence: &Sentence, span: TokenSpan) -> Option<TokenSpan> {
    let first = span
        .indices()
        .find(|&i| !DETERMINER_TAGS.contains(&pos(sentence, i)))?;
    Some(TokenSpan::new(first, span.last))
}

/// Head of a determiner-free side; requires a noun.
fn side_head(sentence: &Sentence, span: TokenSpan) -> Option<usize> {
    find_head(&flat_np(sentence, span), sentence).ok()
}

struct Sides {
    x: TokenSpan,
    y: TokenSpan,
    kind: XYKind,
    preposition: Option<String>,
}

fn match_prepositional(
    np: &ConstituentNode,
    sentence: &Sentence,
    config: &ExtractConfig,
    counts: &mut Rejections,
) -> Option<Sides> {
    let (pp, x_part) = np.children.split_last()?;
    if x_part.is_empty() || pp.is_leaf() || pp.category() != "PP" || pp.children.len() != 2 {
        return None;
    }
    let (prep, y) = (&pp.children[0], &pp.children[1]);
    if !prep.is_leaf() || pos(sentence, prep.span.first) != "IN" || y.is_leaf() {
        return None;
    }
    if !y.is_np() {
        // "the value of imposing sanctions ...": a clausal Y with NPs inside
        if y.walk().any(ConstituentNode::is_np) {
            reject(counts, reasons::INNER_NP);
        }
        return None;
    }
    let x_is_phrase = x_part.len() == 1 && !x_part[0].is_leaf();
    if x_is_phrase && !matches!(x_part[0].category(), "NP" | "NML" | "NX") {
        return None;
    }
    let x_has_np = if x_is_phrase {
        x_part[0].has_inner_np()
    } else {
        contains_np(x_part)
    };
    if x_has_np || y.has_inner_np() {
        reject(counts, reasons::INNER_NP);
        return None;
    }
    let word = &sentence.tokens()[prep.span.first].text;
    if !config.allows(word) {
        reject(counts, reasons::PREPOSITION);
        return None;
    }
    Some(Sides {
        x: union_span(x_part),
        y: y.span,
        kind: XYKind::Prepositional,
        preposition: Some(word.clone()),
    })
}

fn match_possessive(
    np: &ConstituentNode,
    sentence: &Sentence,
    counts: &mut Rejections,
) -> Option<Sides> {
    let children = &np.children;
    if children.len() < 2 {
        return None;
    }
    let (y_nodes, y_span, x_nodes): (&[ConstituentNode], TokenSpan, &[ConstituentNode]) =
        if children[0].is_np() && pos(sentence, children[0].span.last) == "POS" {
            let y = &children[0];
            if y.span.len() < 2 {
                return None;
            }
            (
                std::slice::from_ref(y),
                TokenSpan::new(y.span.first, y.span.last - 1),
                &children[1..],
            )
        } else if children.iter().all(ConstituentNode::is_leaf) {
            // flat "(NP (DT the) (NN company) (POS 's) (NN strategy))"
            let p = children
                .iter()
                .position(|c| pos(sentence, c.span.first) == "POS")?;
            if p == 0 || p + 1 == children.len() {
                return None;
            }
            (
                &children[..p],
                TokenSpan::new(children[0].span.first, children[p - 1].span.last),
                &children[p + 1..],
            )
        } else {
            return None;
        };
    let y_has_np = match y_nodes {
        [y] if !y.is_leaf() => y.has_inner_np(),
        leaves => contains_np(leaves),
    };
    if y_has_np || contains_np(x_nodes) {
        reject(counts, reasons::INNER_NP);
        return None;
    }
    Some(Sides {
        x: union_span(x_nodes),
        y: y_span,
        kind: XYKind::Possessive,
        preposition: None,
    })
}

/// Extraction with rejection counts for shapes that match a pattern but
/// fail a constraint.
pub fn extract_xy_nps_counted(
    sentence: &Sentence,
    config: &ExtractConfig,
    counts: &mut BTreeMap<String, u64>,
) -> Vec<XYExtraction> {
    let mut out = Vec::new();
    for np in sentence.noun_phrases() {
        let sides = match_prepositional(np, sentence, config, counts)
            .or_else(|| match_possessive(np, sentence, counts));
        let Some(sides) = sides else { continue };
        let x = strip_leading_determiners(sentence, sides.x);
        let y = strip_leading_determiners(sentence, sides.y);
        let (Some(x), Some(y)) = (x, y) else {
            reject(counts, reasons::NO_HEAD);
            continue;
        };
        let (Some(x_head), Some(y_head)) = (side_head(sentence, x), side_head(sentence, y)) else {
            reject(counts, reasons::NO_HEAD);
            continue;
        };
        out.push(XYExtraction {
            sentence_index: sentence.index(),
            np_span: np.span,
            x_span: x,
            y_span: y,
            x_head,
            y_head,
            kind: sides.kind,
            preposition: sides.preposition,
        });
    }
    out.sort_by_key(|e| (e.np_span.first, e.np_span.last));
    out
}

/// Every "X prep Y" / "Y 's X" NP of the sentence whose X and Y sides
/// dominate no NP node, ordered by span start.
pub fn extract_xy_nps(sentence: &Sentence, config: &ExtractConfig) -> Vec<XYExtraction> {
    extract_xy_nps_counted(sentence, config, &mut BTreeMap::new())
}

fn head_text(sentence: &Sentence, i: usize) -> String {
    sentence.tokens()[i].text.to_lowercase()
}

fn mentions_word(sentence: &Sentence, word: &str) -> bool {
    sentence.tokens().iter().any(|t| t.text.to_lowercase() == word)
}

/// Closest other sentence that contains Y's head word and not X's
/// (case-insensitive). Ties go to the earlier sentence.
pub fn select_source_sentence(doc: &Document, i: usize, extraction: &XYExtraction) -> Option<usize> {
    let source = doc.sentence(i)?;
    let x = head_text(source, extraction.x_head);
    let y = head_text(source, extraction.y_head);
    if x == y {
        return None;
    }
    let ok = |j: usize| {
        let s = &doc.sentences()[j];
        mentions_word(s, &y) && !mentions_word(s, &x)
    };
    (1..doc.len()).find_map(|d| {
        let before = i.checked_sub(d).filter(|&j| ok(j));
        let after = Some(i + d).filter(|&j| j < doc.len() && ok(j));
        before.or(after)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiBridgingInstance {
    pub format_version: u32,
    pub id: String,
    pub doc_id: String,
    pub kind: XYKind,
    pub source_sentence: usize,
    pub antecedent_sentence: usize,
    pub s_y: String,
    pub s_x: String,
    pub anaphor_text: String,
    pub antecedent_text: String,
    /// Offsets into [`QuasiBridgingInstance::context`].
    pub anaphor_char_span: CharSpan,
    pub antecedent_char_span: CharSpan,
    pub anaphor_head_char_span: CharSpan,
    pub antecedent_head_char_span: CharSpan,
}

impl QuasiBridgingInstance {
    /// `s_y` and `s_x` joined by one space.
    pub fn context(&self) -> String {
        format!("{} {}", self.s_y, self.s_x)
    }

    pub fn validate(&self) -> Result<()> {
        let context = self.context();
        let fail = |message: String| Error::Validation { id: self.id.clone(), message };
        let y_len = crate::text::char_len(&self.s_y);
        let y_part = CharSpan::new(0, y_len);
        let x_part = CharSpan::new(y_len + 1, crate::text::char_len(&context));
        let checks = [
            ("antecedent", self.antecedent_char_span, Some(&self.antecedent_text), y_part),
            ("anaphor", self.anaphor_char_span, Some(&self.anaphor_text), x_part),
            ("antecedent head", self.antecedent_head_char_span, None, self.antecedent_char_span),
            ("anaphor head", self.anaphor_head_char_span, None, self.anaphor_char_span),
        ];
        for (what, span, text, within) in checks {
            if span.is_empty() || !within.contains(&span) {
                return Err(fail(format!("{what} span {span:?} outside {within:?}")));
            }
            if let Some(text) = text {
                if span.slice(&context) != Some(text.as_str()) {
                    return Err(fail(format!("{what} text does not match its span")));
                }
            }
        }
        Ok(())
    }
}

/// Occurrence of Y in `s_y`: the whole Y word sequence when present,
/// otherwise Y's head word; the one nearest the source sentence wins.
fn locate_antecedent(
    s_y: &Sentence,
    source: &Sentence,
    extraction: &XYExtraction,
    before_source: bool,
) -> Option<(TokenSpan, usize)> {
    let y_words: Vec<String> = extraction
        .y_span
        .indices()
        .map(|i| head_text(source, i))
        .collect();
    let head_offset = extraction.y_head - extraction.y_span.first;
    let words: Vec<String> = s_y.tokens().iter().map(|t| t.text.to_lowercase()).collect();
    let pick = |mut found: Vec<usize>| {
        if before_source {
            found.pop()
        } else {
            found.into_iter().next()
        }
    };
    let full: Vec<usize> = words
        .windows(y_words.len())
        .enumerate()
        .filter(|(_, w)| *w == y_words.as_slice())
        .map(|(k, _)| k)
        .collect();
    if let Some(k) = pick(full) {
        return Some((TokenSpan::new(k, k + y_words.len() - 1), k + head_offset));
    }
    let head = &y_words[head_offset];
    let heads: Vec<usize> = (0..words.len()).filter(|&k| &words[k] == head).collect();
    pick(heads).map(|k| (TokenSpan::single(k), k))
}

/// Builds the pair (`s_y`, `s_x`) for an extraction and its chosen `s_y`.
pub fn synthesize_pair(
    doc: &Document,
    extraction: &XYExtraction,
    s_y_index: usize,
) -> Result<QuasiBridgingInstance> {
    let i = extraction.sentence_index;
    let source = doc
        .sentence(i)
        .ok_or_else(|| Error::Synthesis(format!("{}: no sentence {i}", doc.id)))?;
    let s_y = doc
        .sentence(s_y_index)
        .filter(|_| s_y_index != i)
        .ok_or_else(|| Error::Synthesis(format!("{}: bad s_y index {s_y_index}", doc.id)))?;
    let np = extraction.np_span;
    if !source.is_valid_span(np) || !np.contains(&extraction.x_span) {
        return Err(Error::Synthesis(format!("{}: extraction spans out of range", doc.id)));
    }

    let tokens = source.tokens();
    let word = |k: usize| (tokens[k].text.clone(), tokens[k].pos.clone());
    let mut words: Vec<(String, String)> = (0..np.first).map(word).collect();
    words.push(("the".to_string(), "DT".to_string()));
    words.extend(extraction.x_span.indices().map(word));
    words.extend((np.last + 1..tokens.len()).map(word));
    if words.is_empty() {
        return Err(Error::Synthesis(format!("{}: replacement left an empty sentence", doc.id)));
    }
    let s_x = Sentence::new(i, words, None)?;
    let anaphor = TokenSpan::new(np.first, np.first + extraction.x_span.len());
    let anaphor_head = np.first + 1 + (extraction.x_head - extraction.x_span.first);

    let (antecedent, antecedent_head) = locate_antecedent(s_y, source, extraction, s_y_index < i)
        .ok_or_else(|| {
            Error::Synthesis(format!("{}: Y does not occur in sentence {s_y_index}", doc.id))
        })?;

    let offset = crate::text::char_len(s_y.text()) + 1;
    let to_span = |s: &Sentence, t: TokenSpan| {
        let (a, b) = s.char_span(t);
        CharSpan::new(a, b)
    };
    Ok(QuasiBridgingInstance {
        format_version: FORMAT_VERSION,
        id: format!("{}:{}:{}", doc.id, i, np),
        doc_id: doc.id.clone(),
        kind: extraction.kind,
        source_sentence: i,
        antecedent_sentence: s_y_index,
        s_y: s_y.text().to_string(),
        s_x: s_x.text().to_string(),
        anaphor_text: s_x.span_text(anaphor).to_string(),
        antecedent_text: s_y.span_text(antecedent).to_string(),
        anaphor_char_span: to_span(&s_x, anaphor).shift(offset),
        antecedent_char_span: to_span(s_y, antecedent),
        anaphor_head_char_span: to_span(&s_x, TokenSpan::single(anaphor_head)).shift(offset),
        antecedent_head_char_span: to_span(s_y, TokenSpan::single(antecedent_head)),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub format_version: u32,
    pub documents_scanned: u64,
    pub documents_failed: u64,
    pub sentences: u64,
    pub extractions: u64,
    pub instances: u64,
    pub rejections: BTreeMap<String, u64>,
}

impl GenerationStats {
    fn absorb(&mut self, other: GenerationStats) {
        self.documents_scanned += other.documents_scanned;
        self.documents_failed += other.documents_failed;
        self.sentences += other.sentences;
        self.extractions += other.extractions;
        self.instances += other.instances;
        for (k, v) in other.rejections {
            *self.rejections.entry(k).or_default() += v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub extract: ExtractConfig,
    pub workers: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            extract: ExtractConfig::default(),
            workers: 1,
        }
    }
}

/// All instances of one document, in sentence then span order.
pub fn generate_document(
    doc: &Document,
    config: &ExtractConfig,
) -> (Vec<QuasiBridgingInstance>, GenerationStats) {
    let mut stats = GenerationStats {
        documents_scanned: 1,
        ..Default::default()
    };
    let mut out = Vec::new();
    for sentence in doc.sentences() {
        stats.sentences += 1;
        if sentence.tree().is_none() {
            reject(&mut stats.rejections, reasons::NO_TREE);
            continue;
        }
        for extraction in extract_xy_nps_counted(sentence, config, &mut stats.rejections) {
            stats.extractions += 1;
            if head_text(sentence, extraction.x_head) == head_text(sentence, extraction.y_head) {
                reject(&mut stats.rejections, reasons::SAME_HEAD);
                continue;
            }
            let Some(j) = select_source_sentence(doc, sentence.index(), &extraction) else {
                reject(&mut stats.rejections, reasons::NO_SOURCE_SENTENCE);
                continue;
            };
            match synthesize_pair(doc, &extraction, j) {
                Ok(instance) => {
                    stats.instances += 1;
                    out.push(instance);
                }
                Err(_) => reject(&mut stats.rejections, reasons::SYNTHESIS),
            }
        }
    }
    (out, stats)
}

/// Runs generation over a stream of document sources. `load` turns a
/// source into a document and runs on the worker pool; failures are
/// counted and the document skipped. Instances reach `sink` in source
/// order whatever the worker count.
pub fn generate_corpus<S, L, F>(
    sources: impl IntoIterator<Item = S>,
    load: L,
    config: &GenerationConfig,
    mut sink: F,
) -> Result<GenerationStats>
where
    S: Send,
    L: Fn(S) -> Result<Document> + Sync,
    F: FnMut(QuasiBridgingInstance) -> Result<()>,
{
    let workers = config.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let chunk_size = workers * 16;
    let mut stats = GenerationStats {
        format_version: FORMAT_VERSION,
        ..Default::default()
    };
    let mut sources = sources.into_iter().peekable();
    while sources.peek().is_some() {
        let chunk: Vec<S> = sources.by_ref().take(chunk_size).collect();
        let results: Vec<(Vec<QuasiBridgingInstance>, GenerationStats)> = pool.install(|| {
            chunk
                .into_par_iter()
                .map(|source| match load(source) {
                    Ok(doc) => generate_document(&doc, &config.extract),
                    Err(_) => (
                        Vec::new(),
                        GenerationStats {
                            documents_scanned: 1,
                            documents_failed: 1,
                            ..Default::default()
                        },
                    ),
                })
                .collect()
        });
        for (instances, doc_stats) in results {
            stats.absorb(doc_stats);
            for instance in instances {
                sink(instance)?;
            }
        }
    }
    Ok(stats)
}

/// [`generate_corpus`] over the tree files of a directory, in id order.
pub fn generate_from_dir<F>(dir: &Path, config: &GenerationConfig, sink: F) -> Result<GenerationStats>
where
    F: FnMut(QuasiBridgingInstance) -> Result<()>,
{
    let files = io::tree_files(dir)?;
    generate_corpus(
        files,
        |(id, path)| io::read_document(&id, &path),
        config,
        sink,
    )
}

/// Seeded sample of `n` instances, returned in file order.
pub fn sample_for_audit(
    instances: &[QuasiBridgingInstance],
    n: usize,
    seed: u64,
) -> Result<Vec<&QuasiBridgingInstance>> {
    if n > instances.len() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: instances.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, instances.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| &instances[k]).collect())
}

pub const AUDIT_HEADER: &str = "id\tdoc_id\tantecedent\tanaphor\ts_y\ts_x\tscore_0_1_2";

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Audit sheet: one row per instance with an empty trailing score column
/// for a manual 0/1/2 judgement.
pub fn audit_tsv(sample: &[&QuasiBridgingInstance]) -> String {
    let mut out = String::from(AUDIT_HEADER);
    out.push('\n');
    for inst in sample {
        let fields = [
            &inst.id,
            &inst.doc_id,
            &inst.antecedent_text,
            &inst.anaphor_text,
            &inst.s_y,
            &inst.s_x,
        ];
        for f in fields {
            out.push_str(&tsv_field(f));
            out.push('\t');
        }
        out.push('\n');
    }
    out
}

/// Score distribution of a filled-in audit sheet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub rows: usize,
    pub unscored: usize,
    /// Counts of scores 0, 1 and 2.
    pub scores: [usize; 3],
}

pub fn summarize_audit(tsv: &str) -> Result<AuditSummary> {
    let mut lines = tsv.lines();
    match lines.next() {
        Some(h) if h == AUDIT_HEADER => {}
        _ => return Err(Error::format("audit sheet", "missing header")),
    }
    let mut summary = AuditSummary::default();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::format(format!("audit sheet row {}", n + 2), "expected 7 columns"));
        }
        summary.rows += 1;
        match fields[6].trim() {
            "" => summary.unscored += 1,
            "0" => summary.scores[0] += 1,
            "1" => summary.scores[1] += 1,
            "2" => summary.scores[2] += 1,
            other => {
                return Err(Error::format(
                    format!("audit sheet row {}", n + 2),
                    format!("score {other:?} not in {{0, 1, 2}}"),
                ))
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_ptb;

    fn sentence(ptb: &str) -> Sentence {
        parse_ptb("t", ptb).unwrap().sentences()[0].clone()
    }

    fn texts(s: &Sentence, e: &XYExtraction) -> (String, String) {
        (s.span_text(e.x_span).to_string(), s.span_text(e.y_span).to_string())
    }

    #[test]
    fn prepositional_from_figure_sentence() {
        let s = sentence("(S (NP (PRP He)) (VP (VBD was) (VP (VBN convicted) (PP (IN of) (NP (NP (NN obstruction)) (PP (IN of) (NP (NN justice))))))) (. .))");
        let found = extract_xy_nps(&s, &ExtractConfig::default());
        assert_eq!(found.len(), 1);
        assert_eq!(texts(&s, &found[0]), ("obstruction".into(), "justice".into()));
        assert_eq!(found[0].kind, XYKind::Prepositional);
        assert_eq!(found[0].preposition.as_deref(), Some("of"));
    }

    #[test]
    fn inner_np_on_y_side_rejected() {
        let s = sentence("(NP (NP (DT the) (JJ political) (NN value)) (PP (IN of) (S (VP (VBG imposing) (NP (NNS sanctions)) (PP (IN against) (NP (NNP South) (NNP Africa)))))))");
        let mut counts = BTreeMap::new();
        let found = extract_xy_nps_counted(&s, &ExtractConfig::default(), &mut counts);
        assert!(found.is_empty());
        assert_eq!(counts.get(reasons::INNER_NP), Some(&1));
    }

    #[test]
    fn inner_phrase_matching_on_its_own_is_kept() {
        let s = sentence("(NP (NP (DT the) (NN cost)) (PP (IN of) (S (VP (VBG repairing) (NP (NP (DT the) (NN region) (POS 's)) (NN transportation) (NN system))))))");
        let found = extract_xy_nps(&s, &ExtractConfig::default());
        assert_eq!(found.len(), 1);
        assert_eq!(texts(&s, &found[0]), ("transportation system".into(), "region".into()));
    }

    #[test]
    fn inner_np_inside_x_rejected() {
        let s = sentence("(NP (NP (NP (DT the) (NN company) (POS 's)) (NN cost)) (PP (IN of) (NP (NN repair))))");
        let mut counts = BTreeMap::new();
        let found = extract_xy_nps_counted(&s, &ExtractConfig::default(), &mut counts);
        assert_eq!(counts.get(reasons::INNER_NP), Some(&1));
        // the possessive inside is still usable
        assert_eq!(found.len(), 1);
        assert_eq!(texts(&s, &found[0]), ("cost".into(), "company".into()));
    }

    #[test]
    fn possessive() {
        let s = sentence("(NP (NP (DT the) (NN company) (POS 's)) (NN strategy))");
        let found = extract_xy_nps(&s, &ExtractConfig::default());
        assert_eq!(found.len(), 1);
        assert_eq!(texts(&s, &found[0]), ("strategy".into(), "company".into()));
        assert_eq!(found[0].kind, XYKind::Possessive);
        assert!(found[0].y_span.last < found[0].x_span.first);
    }

    #[test]
    fn flat_possessive() {
        let s = sentence("(NP (NNP Mobil) (POS 's) (NN workforce))");
        let found = extract_xy_nps(&s, &ExtractConfig::default());
        assert_eq!(texts(&s, &found[0]), ("workforce".into(), "Mobil".into()));
    }

    #[test]
    fn preposition_allow_list() {
        let s = sentence("(NP (NP (NN price)) (PP (IN for) (NP (NN oil))))");
        let only_of = ExtractConfig::with_prepositions(["of"]);
        let mut counts = BTreeMap::new();
        assert!(extract_xy_nps_counted(&s, &only_of, &mut counts).is_empty());
        assert_eq!(counts.get(reasons::PREPOSITION), Some(&1));
        assert_eq!(extract_xy_nps(&s, &ExtractConfig::default()).len(), 1);
    }

    fn doc(lines: &[&str]) -> Document {
        parse_ptb("d", &lines.join("\n")).unwrap()
    }

    const OBSTRUCTION: &str = "(S (NP (PRP He)) (VP (VBD was) (VP (VBN convicted) (PP (IN of) (NP (NP (NN obstruction)) (PP (IN of) (NP (NN justice))))))) (. .))";

    #[test]
    fn source_sentence_tie_goes_earlier() {
        let d = doc(&[
            "(S (NP (NN justice)) (VP (VBZ matters)))",
            OBSTRUCTION,
            "(S (NP (NN Justice)) (VP (VBD prevailed)))",
        ]);
        let e = &extract_xy_nps(&d.sentences()[1], &ExtractConfig::default())[0];
        assert_eq!(select_source_sentence(&d, 1, e), Some(0));
    }

    #[test]
    fn source_sentence_skips_sentences_with_x() {
        let d = doc(&[
            "(S (NP (NN justice)) (VP (VBZ matters)))",
            "(S (NP (NN justice) (CC and) (NN obstruction)) (VP (VBP differ)))",
            OBSTRUCTION,
        ]);
        let e = &extract_xy_nps(&d.sentences()[2], &ExtractConfig::default())[0];
        assert_eq!(select_source_sentence(&d, 2, e), Some(0));
    }

    #[test]
    fn no_candidate() {
        let d = doc(&["(S (NP (NN rain)) (VP (VBD fell)))", OBSTRUCTION]);
        let e = &extract_xy_nps(&d.sentences()[1], &ExtractConfig::default())[0];
        assert_eq!(select_source_sentence(&d, 1, e), None);
    }

    #[test]
    fn determiner_forced_to_the() {
        let d = doc(&[
            "(S (NP (NN justice)) (VP (VBZ matters)))",
            "(S (NP (PRP It)) (VP (VBD was) (NP (NP (DT an) (NN obstruction)) (PP (IN of) (NP (NN justice))))))",
        ]);
        let e = &extract_xy_nps(&d.sentences()[1], &ExtractConfig::default())[0];
        let inst = synthesize_pair(&d, e, 0).unwrap();
        assert_eq!(inst.s_x, "It was the obstruction");
        assert_eq!(inst.anaphor_text, "the obstruction");
        inst.validate().unwrap();
    }

    #[test]
    fn synthesis_rejects_bad_source_index() {
        let d = doc(&["(S (NP (NN justice)) (VP (VBZ matters)))", OBSTRUCTION]);
        let e = &extract_xy_nps(&d.sentences()[1], &ExtractConfig::default())[0];
        assert!(synthesize_pair(&d, e, 1).is_err());
        assert!(synthesize_pair(&d, e, 9).is_err());
    }

    #[test]
    fn antecedent_prefers_full_y_nearest_occurrence() {
        let d = doc(&[
            "(S (NP (NNP Africa) (CC and) (NNP South) (NNP Africa)) (VP (VBD met)))",
            "(S (NP (NP (NNS sanctions)) (PP (IN against) (NP (NNP South) (NNP Africa)))) (VP (VBD passed)))",
        ]);
        let e = &extract_xy_nps(&d.sentences()[1], &ExtractConfig::default())[0];
        let inst = synthesize_pair(&d, e, 0).unwrap();
        assert_eq!(inst.antecedent_text, "South Africa");
        assert_eq!(inst.antecedent_char_span, CharSpan::new(11, 23));
        inst.validate().unwrap();
    }

    #[test]
    fn audit_sheet_roundtrip() {
        let d = doc(&["(S (NP (NN justice)) (VP (VBZ matters)))", OBSTRUCTION]);
        let (instances, _) = generate_document(&d, &ExtractConfig::default());
        let sample = sample_for_audit(&instances, 1, 7).unwrap();
        let mut sheet = audit_tsv(&sample);
        let summary = summarize_audit(&sheet).unwrap();
        assert_eq!((summary.rows, summary.unscored), (1, 1));
        sheet = sheet.replacen("\t\n", "\t2\n", 1);
        assert_eq!(summarize_audit(&sheet).unwrap().scores, [0, 0, 1]);
        let bad = sheet.replacen("\t2\n", "\t3\n", 1);
        assert!(summarize_audit(&bad).is_err());
    }

    #[test]
    fn oversize_sample_is_an_error() {
        assert!(matches!(
            sample_for_audit(&[], 1, 0),
            Err(Error::SampleTooLarge { requested: 1, available: 0 })
        ));
        assert!(sample_for_audit(&[], 0, 0).unwrap().is_empty());
    }
}
