//! Constituency trees, tokenized sentences and noun-phrase mentions.
//!
//! Trees are read from Penn-Treebank bracketed text ([`parse_ptb`]); words
//! live in the sentence's token list and tree leaves refer to them by index.
//! The head rules in [`head`] provide the NP reductions used for question
//! and answer generation as well as for mention mapping.

mod head;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{char_slice, detokenize};

pub use head::{
    find_head, flat_np, is_noun_tag, resolve_mention, strip_postmodifiers,
    strip_postmodifiers_and_determiner, Variations,
};
pub use parse::{parse_ptb, ParseError};

/// Inclusive token range `[first, last]` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSpan {
    pub first: usize,
    pub last: usize,
}

impl TokenSpan {
    pub fn new(first: usize, last: usize) -> Self {
        assert!(first <= last, "token span [{first}, {last}] is reversed");
        TokenSpan { first, last }
    }

    pub fn single(index: usize) -> Self {
        TokenSpan { first: index, last: index }
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.first <= index && index <= self.last
    }

    pub fn contains(&self, other: &TokenSpan) -> bool {
        self.first <= other.first && other.last <= self.last
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl fmt::Display for TokenSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub pos: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// A node of a constituency tree. Leaves are preterminals: their label is
/// the part-of-speech tag and they cover exactly one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituentNode {
    pub label: String,
    pub children: Vec<ConstituentNode>,
    pub span: TokenSpan,
}

impl ConstituentNode {
    pub fn leaf(tag: impl Into<String>, index: usize) -> Self {
        ConstituentNode {
            label: tag.into(),
            children: Vec::new(),
            span: TokenSpan::single(index),
        }
    }

    /// Builds an inner node whose span is the union of its children.
    ///
    /// Panics if `children` is empty or not contiguous.
    pub fn inner(label: impl Into<String>, children: Vec<ConstituentNode>) -> Self {
        let first = children.first().expect("inner node needs children").span.first;
        let last = children.last().unwrap().span.last;
        for pair in children.windows(2) {
            assert_eq!(pair[0].span.last + 1, pair[1].span.first, "children not contiguous");
        }
        ConstituentNode {
            label: label.into(),
            children,
            span: TokenSpan::new(first, last),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Syntactic category with function tags and indices removed
    /// (`NP-SBJ-1` becomes `NP`). Bracket labels such as `-LRB-` are kept.
    pub fn category(&self) -> &str {
        category_of(&self.label)
    }

    pub fn is_np(&self) -> bool {
        !self.is_leaf() && self.category() == "NP"
    }

    /// Pre-order traversal including `self`.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    /// True when some strict descendant is an NP node.
    pub fn has_inner_np(&self) -> bool {
        self.children.iter().any(|c| c.walk().any(ConstituentNode::is_np))
    }

    fn write_bracketed(&self, tokens: &[Token], out: &mut String) {
        out.push('(');
        out.push_str(&self.label);
        if self.is_leaf() {
            out.push(' ');
            out.push_str(&tokens[self.span.first].text);
        } else {
            for child in &self.children {
                out.push(' ');
                child.write_bracketed(tokens, out);
            }
        }
        out.push(')');
    }
}

pub(crate) fn category_of(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    let end = label.find(['-', '=']).unwrap_or(label.len());
    if end == 0 {
        label
    } else {
        &label[..end]
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a ConstituentNode>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a ConstituentNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    index: usize,
    tokens: Vec<Token>,
    tree: Option<ConstituentNode>,
    text: String,
}

impl Sentence {
    /// Builds a sentence from `(word, tag)` pairs. The tree, when given, must
    /// cover exactly the token range.
    pub fn new(
        index: usize,
        words: Vec<(String, String)>,
        tree: Option<ConstituentNode>,
    ) -> Result<Self, TreeError> {
        if let Some(t) = &tree {
            if words.is_empty() || t.span != TokenSpan::new(0, words.len() - 1) {
                return Err(TreeError::TreeCoverage {
                    tokens: words.len(),
                    span: t.span,
                });
            }
        }
        let (text, offsets) = detokenize(words.iter().map(|(w, p)| (w.as_str(), p.as_str())));
        let tokens = words
            .into_iter()
            .zip(offsets)
            .enumerate()
            .map(|(i, ((text, pos), (s, e)))| Token {
                index: i,
                text,
                pos,
                char_start: s,
                char_end: e,
            })
            .collect();
        Ok(Sentence { index, tokens, tree, text })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tree(&self) -> Option<&ConstituentNode> {
        self.tree.as_ref()
    }

    /// Detokenized surface string.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_valid_span(&self, span: TokenSpan) -> bool {
        span.last < self.tokens.len()
    }

    /// Character range of a token span within [`Sentence::text`].
    pub fn char_span(&self, span: TokenSpan) -> (usize, usize) {
        (self.tokens[span.first].char_start, self.tokens[span.last].char_end)
    }

    pub fn span_text(&self, span: TokenSpan) -> &str {
        let (s, e) = self.char_span(span);
        char_slice(&self.text, s, e).expect("token offsets index the sentence text")
    }

    /// Outermost NP node whose span is exactly `span`.
    pub fn np_for_span(&self, span: TokenSpan) -> Option<&ConstituentNode> {
        self.tree.as_ref()?.walk().find(|n| n.is_np() && n.span == span)
    }

    pub fn noun_phrases(&self) -> impl Iterator<Item = &ConstituentNode> {
        self.tree.iter().flat_map(|t| t.walk()).filter(|n| n.is_np())
    }

    /// Canonical one-line bracketed form, or `None` without a tree.
    pub fn to_bracketed(&self) -> Option<String> {
        let tree = self.tree.as_ref()?;
        let mut out = String::new();
        tree.write_bracketed(&self.tokens, &mut out);
        Some(out)
    }

    pub(crate) fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    sentences: Vec<Sentence>,
}

impl Document {
    /// Sentences are renumbered densely in the given order.
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        let sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.with_index(i))
            .collect();
        Document { id: id.into(), sentences }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        self.sentences.get(index)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// One canonical bracketed tree per line.
    pub fn to_ptb(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            if let Some(line) = s.to_bracketed() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticType {
    Time,
    Person,
    Organization,
    Location,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub sentence_index: usize,
    pub span: TokenSpan,
    pub head_index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_type: Option<SemanticType>,
}

impl Mention {
    pub fn new(sentence: &Sentence, span: TokenSpan, head_index: usize) -> Result<Self, TreeError> {
        if !sentence.is_valid_span(span) {
            return Err(TreeError::SpanOutOfRange {
                sentence: sentence.index(),
                span,
                len: sentence.len(),
            });
        }
        if !span.contains_index(head_index) {
            return Err(TreeError::HeadOutsideSpan { span, head: head_index });
        }
        Ok(Mention {
            sentence_index: sentence.index(),
            span,
            head_index,
            text: sentence.span_text(span).to_string(),
            semantic_type: None,
        })
    }

    pub fn with_type(mut self, ty: Option<SemanticType>) -> Self {
        self.semantic_type = ty;
        self
    }

    /// Document-order position of the first token.
    pub fn start_key(&self) -> (usize, usize) {
        (self.sentence_index, self.span.first)
    }

    pub fn end_key(&self) -> (usize, usize) {
        (self.sentence_index, self.span.last)
    }

    /// True when this mention ends strictly before `other` begins.
    pub fn precedes(&self, other: &Mention) -> bool {
        self.end_key() < other.start_key()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("no noun-tagged token in NP \"{text}\"")]
    HeadNotFound { text: String },
    #[error("expected an NP node, found {label}")]
    NotAnNp { label: String },
    #[error("stripping the determiner from \"{text}\" leaves nothing")]
    DegenerateMention { text: String },
    #[error("tree spans {span} but the sentence has {tokens} tokens")]
    TreeCoverage { tokens: usize, span: TokenSpan },
    #[error("span {span} out of range for sentence {sentence} with {len} tokens")]
    SpanOutOfRange { sentence: usize, span: TokenSpan, len: usize },
    #[error("head {head} lies outside span {span}")]
    HeadOutsideSpan { span: TokenSpan, head: usize },
}
