//! NP head finding and the postmodifier/determiner reductions.
//!
//! The head of an NP is the rightmost noun in the material preceding the
//! NP's first postmodifier. A postmodifier is a non-initial child that opens
//! PP, clausal, parenthetical or appositive material. Nested nominal
//! children are searched recursively so that their own postmodifiers do not
//! leak into the head search.

use super::{ConstituentNode, Mention, Sentence, TokenSpan, TreeError};

const NOUN_TAGS: &[&str] = &["NN", "NNS", "NNP", "NNPS"];
const DETERMINER_TAGS: &[&str] = &["DT", "PDT", "PRP$"];
const POSTMODIFIER_PHRASES: &[&str] = &["PP", "SBAR", "VP", "RRC", "S", "PRN", "UCP"];
const POSTMODIFIER_TAGS: &[&str] = &[",", ":", "-LRB-", "IN", "TO", "WDT", "WP", "WP$"];

pub fn is_noun_tag(pos: &str) -> bool {
    NOUN_TAGS.contains(&pos)
}

fn is_nominal(node: &ConstituentNode) -> bool {
    !node.is_leaf() && matches!(node.category(), "NP" | "NML" | "NX")
}

fn tag<'s>(sentence: &'s Sentence, leaf: &ConstituentNode) -> &'s str {
    &sentence.tokens()[leaf.span.first].pos
}

fn contains_noun(sentence: &Sentence, span: TokenSpan) -> bool {
    span.indices().any(|i| is_noun_tag(&sentence.tokens()[i].pos))
}

/// Index of the first child that starts postmodifier material, if any.
fn postmodifier_boundary(node: &ConstituentNode, sentence: &Sentence) -> Option<usize> {
    node.children.iter().enumerate().skip(1).find_map(|(p, child)| {
        let opens = if child.is_leaf() {
            POSTMODIFIER_TAGS.contains(&tag(sentence, child))
        } else {
            POSTMODIFIER_PHRASES.contains(&child.category())
                || (child.category() == "NP" && node.children[p - 1].category() == "NP")
        };
        opens.then_some(p)
    })
}

fn head_within(node: &ConstituentNode, sentence: &Sentence) -> usize {
    if node.is_leaf() {
        return node.span.first;
    }
    let end = postmodifier_boundary(node, sentence).unwrap_or(node.children.len());
    let region = &node.children[..end];
    for child in region.iter().rev() {
        if !contains_noun(sentence, child.span) {
            continue;
        }
        if child.is_leaf() {
            return child.span.first;
        }
        if is_nominal(child) {
            return head_within(child, sentence);
        }
        return child
            .span
            .indices()
            .rev()
            .find(|&i| is_noun_tag(&sentence.tokens()[i].pos))
            .unwrap();
    }
    region.last().unwrap().span.last
}

/// Head token index of an NP node.
pub fn find_head(np: &ConstituentNode, sentence: &Sentence) -> Result<usize, TreeError> {
    if !np.is_np() {
        return Err(TreeError::NotAnNp { label: np.label.clone() });
    }
    if !sentence.is_valid_span(np.span) {
        return Err(TreeError::SpanOutOfRange {
            sentence: sentence.index(),
            span: np.span,
            len: sentence.len(),
        });
    }
    if !contains_noun(sentence, np.span) {
        return Err(TreeError::HeadNotFound {
            text: sentence.span_text(np.span).to_string(),
        });
    }
    Ok(head_within(np, sentence))
}

/// n': the NP truncated after its head.
pub fn strip_postmodifiers(np: &ConstituentNode, sentence: &Sentence) -> Result<Mention, TreeError> {
    let head = find_head(np, sentence)?;
    Mention::new(sentence, TokenSpan::new(np.span.first, head), head)
}

fn is_possessive(node: &ConstituentNode, sentence: &Sentence) -> bool {
    sentence.tokens()[node.span.last].pos == "POS"
}

/// Token indices of the determiners opening `node`, stopping at `head`.
/// Determiners that belong to a possessor ("the company 's strategy") are
/// not the NP's own and are left in place.
fn leading_determiners(node: &ConstituentNode, sentence: &Sentence, head: usize) -> Vec<usize> {
    let has_possessive_marker = node.children.iter().any(|c| {
        c.is_leaf() && c.span.first < head && tag(sentence, c) == "POS"
    });
    if has_possessive_marker {
        return Vec::new();
    }
    let mut out = Vec::new();
    for child in &node.children {
        if child.span.first > head {
            break;
        }
        if child.is_leaf() {
            if DETERMINER_TAGS.contains(&tag(sentence, child)) {
                out.push(child.span.first);
                continue;
            }
        } else if is_nominal(child) && !is_possessive(child, sentence) {
            out.extend(leading_determiners(child, sentence, head));
        }
        break;
    }
    out
}

/// n'': n' without its leading determiner or possessive pronoun.
pub fn strip_postmodifiers_and_determiner(
    np: &ConstituentNode,
    sentence: &Sentence,
) -> Result<Mention, TreeError> {
    let head = find_head(np, sentence)?;
    without_determiner(np, sentence, head)
}

fn without_determiner(
    np: &ConstituentNode,
    sentence: &Sentence,
    head: usize,
) -> Result<Mention, TreeError> {
    let dets = leading_determiners(np, sentence, head);
    let stripped = dets
        .iter()
        .enumerate()
        .take_while(|&(k, &i)| i == np.span.first + k)
        .count();
    let first = np.span.first + stripped;
    if first > head {
        return Err(TreeError::DegenerateMention {
            text: sentence.span_text(TokenSpan::new(np.span.first, head)).to_string(),
        });
    }
    Mention::new(sentence, TokenSpan::new(first, head), head)
}

/// A flat NP node over `span`, one preterminal per token. Used when a
/// mention's span has no matching NP in the tree or there is no tree.
pub fn flat_np(sentence: &Sentence, span: TokenSpan) -> ConstituentNode {
    let leaves = span
        .indices()
        .map(|i| ConstituentNode::leaf(sentence.tokens()[i].pos.clone(), i))
        .collect();
    ConstituentNode::inner("NP", leaves)
}

/// The four answer forms derived from one NP: the NP itself, its head, n'
/// and n''. Each is a token span inside the NP's sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variations {
    pub full: Mention,
    pub head: Mention,
    pub without_postmodifiers: Mention,
    pub without_determiner: Mention,
}

impl Variations {
    pub fn of(np: &ConstituentNode, sentence: &Sentence) -> Result<Self, TreeError> {
        let head = find_head(np, sentence)?;
        Variations::build(np, sentence, head)
    }

    /// For a mention given as a token span: uses the matching NP node when
    /// the tree has one and a flat NP otherwise.
    pub fn of_span(sentence: &Sentence, span: TokenSpan) -> Result<Self, TreeError> {
        check_span(sentence, span)?;
        match sentence.np_for_span(span) {
            Some(np) => Variations::of(np, sentence),
            None => Variations::of(&flat_np(sentence, span), sentence),
        }
    }

    /// Like [`Variations::of_span`] but with the head supplied by the caller.
    pub fn with_head(sentence: &Sentence, span: TokenSpan, head: usize) -> Result<Self, TreeError> {
        check_span(sentence, span)?;
        if !span.contains_index(head) {
            return Err(TreeError::HeadOutsideSpan { span, head });
        }
        match sentence.np_for_span(span) {
            Some(np) => Variations::build(np, sentence, head),
            None => Variations::build(&flat_np(sentence, span), sentence, head),
        }
    }

    /// n'' falls back to n' when the determiner is all there is.
    fn build(np: &ConstituentNode, sentence: &Sentence, head: usize) -> Result<Self, TreeError> {
        let n_prime = Mention::new(sentence, TokenSpan::new(np.span.first, head), head)?;
        let n_second = match without_determiner(np, sentence, head) {
            Err(TreeError::DegenerateMention { .. }) => n_prime.clone(),
            other => other?,
        };
        Ok(Variations {
            full: Mention::new(sentence, np.span, head)?,
            head: Mention::new(sentence, TokenSpan::single(head), head)?,
            without_postmodifiers: n_prime,
            without_determiner: n_second,
        })
    }

    /// The distinct forms in canonical order: full, head, n', n''.
    pub fn distinct(&self) -> Vec<&Mention> {
        let mut out: Vec<&Mention> = Vec::with_capacity(4);
        for m in [&self.full, &self.head, &self.without_postmodifiers, &self.without_determiner] {
            if !out.iter().any(|o| o.span == m.span) {
                out.push(m);
            }
        }
        out
    }
}

fn check_span(sentence: &Sentence, span: TokenSpan) -> Result<(), TreeError> {
    if sentence.is_valid_span(span) {
        Ok(())
    } else {
        Err(TreeError::SpanOutOfRange {
            sentence: sentence.index(),
            span,
            len: sentence.len(),
        })
    }
}

/// Mention for a token span with its head resolved through the tree.
pub fn resolve_mention(sentence: &Sentence, span: TokenSpan) -> Result<Mention, TreeError> {
    check_span(sentence, span)?;
    let head = match sentence.np_for_span(span) {
        Some(np) => find_head(np, sentence)?,
        None => find_head(&flat_np(sentence, span), sentence)?,
    };
    Mention::new(sentence, span, head)
}
