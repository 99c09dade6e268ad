//! Projection of predicted text spans onto mentions.
//!
//! A span maps to a mention when both share the same head word and the span
//! is a contiguous part of the mention truncated after its head (m'). When
//! the anaphor is a time expression only time-typed mentions are kept.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::decode::{Mapping, PredictionRecord, SelectedMention};
use crate::qagen::{mention_id, QAInstance};
use crate::text::CharSpan;
use crate::treebank::{find_head, resolve_mention, Document, Mention, SemanticType, Sentence, TokenSpan};
use crate::{Error, Result, FORMAT_VERSION};

const TIME_WORDS: &[&str] = &[
    "second", "seconds", "minute", "minutes", "hour", "hours", "day", "days", "week", "weeks",
    "weekend", "weekends", "month", "months", "year", "years", "decade", "decades", "century",
    "centuries", "quarter", "quarters", "morning", "mornings", "afternoon", "evening", "night",
    "nights", "today", "yesterday", "tomorrow", "season", "spring", "summer", "autumn", "winter",
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "january",
    "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december",
];

/// Head words that make a mention a time expression. Four-digit years
/// ("1989", "1990s") always count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeLexicon {
    words: BTreeSet<String>,
}

impl Default for TimeLexicon {
    fn default() -> Self {
        TimeLexicon {
            words: TIME_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl TimeLexicon {
    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        TimeLexicon {
            words: text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn is_time_word(&self, word: &str) -> bool {
        is_year(word) || self.words.contains(&word.to_lowercase())
    }

    pub fn type_of(&self, sentence: &Sentence, head_index: usize) -> Option<SemanticType> {
        self.is_time_word(&sentence.tokens()[head_index].text)
            .then_some(SemanticType::Time)
    }
}

fn is_year(word: &str) -> bool {
    let digits = word.strip_suffix('s').unwrap_or(word);
    digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit())
}

/// One line of a mentions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    #[serde(default = "current_version")]
    pub format_version: u32,
    pub id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub first: usize,
    pub last: usize,
    pub head: usize,
    pub text: String,
    #[serde(default)]
    pub semantic_type: Option<SemanticType>,
}

fn current_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionEntry {
    pub id: String,
    pub mention: Mention,
}

impl MentionRecord {
    pub fn from_mention(doc_id: &str, m: &Mention) -> Self {
        MentionRecord {
            format_version: FORMAT_VERSION,
            id: mention_id(doc_id, m.sentence_index, m.span),
            doc_id: doc_id.to_string(),
            sentence_index: m.sentence_index,
            first: m.span.first,
            last: m.span.last,
            head: m.head_index,
            text: m.text.clone(),
            semantic_type: m.semantic_type,
        }
    }

    /// Checks the record against its document. An untyped mention gets the
    /// type the lexicon assigns.
    pub fn resolve(&self, doc: &Document, lexicon: &TimeLexicon) -> Result<MentionEntry> {
        let fail = |message: String| Error::Validation {
            id: self.id.clone(),
            message,
        };
        if self.first > self.last {
            return Err(fail(format!("first {} after last {}", self.first, self.last)));
        }
        let sentence = doc
            .sentence(self.sentence_index)
            .ok_or_else(|| fail(format!("no sentence {} in {}", self.sentence_index, doc.id)))?;
        let m = Mention::new(sentence, TokenSpan::new(self.first, self.last), self.head)
            .map_err(|e| fail(e.to_string()))?;
        if m.text != self.text {
            return Err(fail(format!("text {:?} differs from the document's {:?}", self.text, m.text)));
        }
        let ty = self.semantic_type.or_else(|| lexicon.type_of(sentence, self.head));
        Ok(MentionEntry {
            id: self.id.clone(),
            mention: m.with_type(ty),
        })
    }
}

/// System mentions: every NP of the trees whose head can be found.
pub fn extract_mentions(doc: &Document, lexicon: &TimeLexicon) -> Vec<MentionRecord> {
    let mut out = Vec::new();
    for sentence in doc.sentences() {
        let mut seen = BTreeSet::new();
        for np in sentence.noun_phrases() {
            if !seen.insert(np.span) {
                continue;
            }
            let Ok(head) = find_head(np, sentence) else { continue };
            let Ok(m) = Mention::new(sentence, np.span, head) else { continue };
            let m = m.with_type(lexicon.type_of(sentence, head));
            out.push(MentionRecord::from_mention(&doc.id, &m));
        }
    }
    out.sort_by_key(|r| (r.sentence_index, r.first, std::cmp::Reverse(r.last)));
    out
}

/// Sentence and token span that a context character span covers exactly.
/// `None` when the span crosses a sentence or cuts through a token.
pub fn align_span(qa: &QAInstance, doc: &Document, span: CharSpan) -> Option<(usize, TokenSpan)> {
    let cs = qa.context_sentences.iter().rev().find(|c| c.char_start <= span.start)?;
    let sentence = doc.sentence(cs.sentence_index)?;
    let (start, end) = (span.start - cs.char_start, span.end.checked_sub(cs.char_start)?);
    let tokens = sentence.tokens();
    let first = tokens.iter().position(|t| t.char_start == start)?;
    let last = tokens.iter().position(|t| t.char_end == end)?;
    (first <= last).then(|| (cs.sentence_index, TokenSpan::new(first, last)))
}

/// Head of an arbitrary token span; the last token when it has no noun.
pub fn span_head(sentence: &Sentence, span: TokenSpan) -> usize {
    resolve_mention(sentence, span).map_or(span.last, |m| m.head_index)
}

/// The two mapping conditions: same head word (case-insensitive) and the
/// span lies within the mention's m'.
pub fn mapping_is_sound(sentence: &Sentence, span: TokenSpan, span_head: usize, mention: &Mention) -> bool {
    let tokens = sentence.tokens();
    let m_prime = TokenSpan::new(mention.span.first, mention.head_index);
    mention.sentence_index == sentence.index()
        && tokens[span_head].text.to_lowercase() == tokens[mention.head_index].text.to_lowercase()
        && m_prime.contains(&span)
}

/// Candidate the span maps to. Mentions not ending before the anaphor are
/// never candidates; among several matches the one ending closest before
/// the anaphor wins, then the longer one.
pub fn map_span_to_mention<'m>(
    sentence: &Sentence,
    span: TokenSpan,
    candidates: &'m [MentionEntry],
    anaphor: &Mention,
) -> Option<&'m MentionEntry> {
    let head = span_head(sentence, span);
    candidates
        .iter()
        .filter(|c| c.mention.precedes(anaphor) && mapping_is_sound(sentence, span, head, &c.mention))
        .max_by_key(|c| (c.mention.end_key(), std::cmp::Reverse(c.mention.span.first)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionMapping<'m> {
    pub rank: usize,
    pub score: f64,
    pub mention: &'m MentionEntry,
}

/// Keeps only time-typed mentions when the anaphor is a time expression.
pub fn filter_by_time_type<'m>(anaphor: &Mention, mappings: Vec<MentionMapping<'m>>) -> Vec<MentionMapping<'m>> {
    if anaphor.semantic_type != Some(SemanticType::Time) {
        return mappings;
    }
    mappings
        .into_iter()
        .filter(|m| m.mention.mention.semantic_type == Some(SemanticType::Time))
        .collect()
}

/// Mentions with their best supporting prediction score, best first.
pub fn aggregate<'m>(mappings: &[MentionMapping<'m>]) -> Vec<(&'m MentionEntry, f64)> {
    let mut best: Vec<(&MentionEntry, f64, usize)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for m in mappings {
        match index.get(m.mention.id.as_str()) {
            Some(&i) => {
                if m.score > best[i].1 {
                    best[i].1 = m.score;
                    best[i].2 = best[i].2.min(m.rank);
                }
            }
            None => {
                index.insert(&m.mention.id, best.len());
                best.push((m.mention, m.score, m.rank));
            }
        }
    }
    best.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)));
    best.into_iter().map(|(m, s, _)| (m, s)).collect()
}

/// A decoded span located in the document: sentence, tokens and score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatedSpan {
    pub sentence_index: usize,
    pub span: TokenSpan,
    pub score: f64,
}

/// Maps each ranked prediction, applies the time filter and returns the
/// best-supported mention with its score.
pub fn select_antecedent<'m>(
    ranked: &[LocatedSpan],
    doc: &Document,
    candidates: &'m [MentionEntry],
    anaphor: &Mention,
) -> Option<(&'m MentionEntry, f64)> {
    let mappings: Vec<MentionMapping> = ranked
        .iter()
        .enumerate()
        .filter_map(|(rank, p)| {
            let sentence = doc.sentence(p.sentence_index)?;
            map_span_to_mention(sentence, p.span, candidates, anaphor).map(|mention| MentionMapping {
                rank,
                score: p.score,
                mention,
            })
        })
        .collect();
    aggregate(&filter_by_time_type(anaphor, mappings)).into_iter().next()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingStats {
    pub instances: u64,
    pub mapped_spans: u64,
    pub unmapped_spans: u64,
    pub selected: u64,
}

/// Anaphor mention of a dataset instance, typed by the mentions file when
/// it lists the same span and by the lexicon otherwise.
fn anaphor_mention(qa: &QAInstance, doc: &Document, candidates: &[MentionEntry], lexicon: &TimeLexicon) -> Result<Mention> {
    let loc = qa.anaphor.ok_or_else(|| Error::Validation {
        id: qa.id.clone(),
        message: "instance has no anaphor location; mapping needs one".into(),
    })?;
    let sentence = doc.sentence(loc.sentence_index).ok_or_else(|| Error::Validation {
        id: qa.id.clone(),
        message: format!("no sentence {} in {}", loc.sentence_index, doc.id),
    })?;
    let m = Mention::new(sentence, loc.span, loc.head_index)?;
    let listed = candidates
        .iter()
        .find(|c| c.mention.sentence_index == m.sentence_index && c.mention.span == m.span)
        .and_then(|c| c.mention.semantic_type);
    let ty = listed.or_else(|| lexicon.type_of(sentence, loc.head_index));
    Ok(m.with_type(ty))
}

/// Adds mention ids and the selected mention to decoded predictions.
pub fn map_predictions(
    predictions: &[PredictionRecord],
    dataset: &[QAInstance],
    docs: &BTreeMap<String, Document>,
    mentions: &BTreeMap<String, Vec<MentionEntry>>,
    lexicon: &TimeLexicon,
) -> Result<(Vec<PredictionRecord>, MappingStats)> {
    let by_id: HashMap<&str, &QAInstance> = dataset.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut stats = MappingStats::default();
    let empty = Vec::new();
    let mut out = Vec::with_capacity(predictions.len());
    for record in predictions {
        let qa = by_id
            .get(record.instance_id.as_str())
            .ok_or_else(|| Error::UnknownId(record.instance_id.clone()))?;
        let doc = docs
            .get(&qa.doc_id)
            .ok_or_else(|| Error::Validation {
                id: qa.id.clone(),
                message: format!("no trees for document {}", qa.doc_id),
            })?;
        let candidates = mentions.get(&qa.doc_id).unwrap_or(&empty);
        let anaphor = anaphor_mention(qa, doc, candidates, lexicon)?;
        stats.instances += 1;

        let mut mapped = record.clone();
        let mut mappings = Vec::new();
        for (rank, p) in mapped.predictions.iter_mut().enumerate() {
            p.mention_id = None;
            let Some((s, span)) = align_span(qa, doc, CharSpan::new(p.char_start, p.char_end)) else {
                stats.unmapped_spans += 1;
                continue;
            };
            let sentence = &doc.sentences()[s];
            match map_span_to_mention(sentence, span, candidates, &anaphor) {
                Some(m) => {
                    stats.mapped_spans += 1;
                    p.mention_id = Some(m.id.clone());
                    mappings.push(MentionMapping { rank, score: p.score, mention: m });
                }
                None => stats.unmapped_spans += 1,
            }
        }
        let selected = if record.no_answer {
            None
        } else {
            aggregate(&filter_by_time_type(&anaphor, mappings))
                .into_iter()
                .next()
                .map(|(m, score)| SelectedMention {
                    mention_id: m.id.clone(),
                    text: m.mention.text.clone(),
                    score,
                })
        };
        stats.selected += selected.is_some() as u64;
        mapped.mapping = Some(Mapping { selected });
        out.push(mapped);
    }
    Ok((out, stats))
}

/// Groups mention records by document after checking them.
pub fn index_mentions(
    records: &[MentionRecord],
    docs: &BTreeMap<String, Document>,
    lexicon: &TimeLexicon,
) -> Result<BTreeMap<String, Vec<MentionEntry>>> {
    let mut out: BTreeMap<String, Vec<MentionEntry>> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.id.as_str()) {
            return Err(Error::Validation {
                id: r.id.clone(),
                message: "duplicate mention id".into(),
            });
        }
        let doc = docs.get(&r.doc_id).ok_or_else(|| Error::Validation {
            id: r.id.clone(),
            message: format!("unknown document {}", r.doc_id),
        })?;
        out.entry(r.doc_id.clone()).or_default().push(r.resolve(doc, lexicon)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_ptb;

    const CLAIMS: &str = "(S (NP (NP (DT the) (JJ total) (JJ potential) (NNS claims)) (PP (IN from) (NP (DT the) (NN disaster)))) (VP (VBD rose)) (. .))\n(S (NP (NNS Insurers)) (VP (VBD paid) (NP (NNP Green))) (. .))";

    fn entries(doc: &Document) -> Vec<MentionEntry> {
        let lex = TimeLexicon::default();
        extract_mentions(doc, &lex)
            .iter()
            .map(|r| r.resolve(doc, &lex).unwrap())
            .collect()
    }

    fn anaphor(doc: &Document) -> Mention {
        Mention::new(&doc.sentences()[1], TokenSpan::single(0), 0).unwrap()
    }

    #[test]
    fn claims_span_maps_to_full_mention() {
        let doc = parse_ptb("d", CLAIMS).unwrap();
        let c = entries(&doc);
        let s = &doc.sentences()[0];
        let m = map_span_to_mention(s, TokenSpan::new(1, 3), &c, &anaphor(&doc)).unwrap();
        assert_eq!(m.mention.text, "the total potential claims from the disaster");
        let m = map_span_to_mention(s, TokenSpan::single(3), &c, &anaphor(&doc)).unwrap();
        assert_eq!(m.mention.text, "the total potential claims from the disaster");
        // "disaster" is its own mention, not part of m' of the outer NP
        let m = map_span_to_mention(s, TokenSpan::single(6), &c, &anaphor(&doc)).unwrap();
        assert_eq!(m.mention.text, "the disaster");
    }

    #[test]
    fn no_matching_head_filters_span_out() {
        let doc = parse_ptb("d", CLAIMS).unwrap();
        let c: Vec<MentionEntry> = entries(&doc).into_iter().filter(|e| e.mention.text != "Green").collect();
        let s = &doc.sentences()[1];
        let later = Mention::new(s, TokenSpan::single(3), 3).unwrap();
        assert!(map_span_to_mention(s, TokenSpan::single(2), &c, &later).is_none());
    }

    #[test]
    fn mentions_after_the_anaphor_are_never_chosen() {
        let doc = parse_ptb("d", CLAIMS).unwrap();
        let c = entries(&doc);
        let s = &doc.sentences()[1];
        assert!(map_span_to_mention(s, TokenSpan::single(2), &c, &anaphor(&doc)).is_none());
    }

    #[test]
    fn time_filter() {
        let doc = parse_ptb(
            "d",
            "(S (NP (JJ last) (NN week)) (NP (DT the) (NN company)) (VP (VBD met)))\n(S (NP (DT the) (NN morning)) (VP (VBD came)))",
        )
        .unwrap();
        let c = entries(&doc);
        let lex = TimeLexicon::default();
        let s1 = &doc.sentences()[1];
        let a = Mention::new(s1, TokenSpan::new(0, 1), 1).unwrap().with_type(lex.type_of(s1, 1));
        assert_eq!(a.semantic_type, Some(SemanticType::Time));
        let mappings: Vec<MentionMapping> = c
            .iter()
            .enumerate()
            .filter(|(_, e)| e.mention.sentence_index == 0)
            .map(|(rank, e)| MentionMapping { rank, score: 1.0, mention: e })
            .collect();
        let kept = filter_by_time_type(&a, mappings.clone());
        let texts: Vec<&str> = kept.iter().map(|m| m.mention.mention.text.as_str()).collect();
        assert_eq!(texts, vec!["last week"]);
        let plain = Mention::new(s1, TokenSpan::new(0, 1), 1).unwrap();
        assert_eq!(filter_by_time_type(&plain, mappings.clone()).len(), mappings.len());
        let none: Vec<MentionMapping> = mappings.into_iter().filter(|m| m.mention.mention.text != "last week").collect();
        assert!(filter_by_time_type(&a, none).is_empty());
    }

    #[test]
    fn max_aggregation() {
        let doc = parse_ptb("d", CLAIMS).unwrap();
        let c = entries(&doc);
        let outer = c.iter().find(|e| e.mention.span == TokenSpan::new(0, 6)).unwrap();
        let inner = c.iter().find(|e| e.mention.span == TokenSpan::new(5, 6)).unwrap();
        let agg = aggregate(&[
            MentionMapping { rank: 0, score: 2.0, mention: inner },
            MentionMapping { rank: 1, score: 1.5, mention: outer },
            MentionMapping { rank: 2, score: 3.0, mention: outer },
        ]);
        assert_eq!(agg[0].0.id, outer.id);
        assert_eq!(agg[0].1, 3.0);
        assert_eq!(agg[1].1, 2.0);
    }

    #[test]
    fn years_and_custom_lexicon() {
        let lex = TimeLexicon::default();
        assert!(lex.is_time_word("1989") && lex.is_time_word("1990s") && lex.is_time_word("Monday"));
        assert!(!lex.is_time_word("company") && !lex.is_time_word("19891"));
        let custom = TimeLexicon::parse("# words\nfortnight\n");
        assert!(custom.is_time_word("Fortnight") && !custom.is_time_word("week"));
    }
}
