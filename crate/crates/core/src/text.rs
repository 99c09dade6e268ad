//! Detokenization and character-offset helpers.
//!
//! All offsets in this crate count Unicode scalar values, not bytes, so that
//! they agree with the `answer_start` convention of SQuAD-style datasets.

use serde::{Deserialize, Serialize};

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn shift(self, by: usize) -> Self {
        CharSpan::new(self.start + by, self.end + by)
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// The substring of `text` this span covers.
    pub fn slice<'t>(&self, text: &'t str) -> Option<&'t str> {
        char_slice(text, self.start, self.end)
    }
}

/// Tokens that attach to the preceding token without a space.
const CLOSING: &[&str] = &[".", ",", ";", ":", "''", "?", "!"];

fn attaches_left(text: &str, pos: &str) -> bool {
    CLOSING.contains(&text) || pos == "POS" || pos == "''"
}

fn attaches_right(text: &str, pos: &str) -> bool {
    text == "``" || pos == "``"
}

/// Joins `(text, pos)` pairs into a sentence string and returns the
/// character span `[start, end)` of every token inside it.
///
/// Tokens are separated by one space except before closing punctuation and
/// possessive markers, and after an opening double quote. Every rule looks
/// only at a pair of adjacent tokens, so detokenizing a contiguous
/// subsequence yields exactly the corresponding substring of the whole.
pub fn detokenize<'a, I>(tokens: I) -> (String, Vec<(usize, usize)>)
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut out = String::new();
    let mut spans = Vec::new();
    let mut len = 0usize;
    let mut glue_next = true;
    for (text, pos) in tokens {
        if !glue_next && !attaches_left(text, pos) {
            out.push(' ');
            len += 1;
        }
        let start = len;
        out.push_str(text);
        len += text.chars().count();
        spans.push((start, len));
        glue_next = attaches_right(text, pos);
    }
    (out, spans)
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring by character offsets; `None` when out of range or reversed.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let b_start = indices.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[b_start..b_end])
}

/// Collapses runs of whitespace into a single space and trims both ends.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits on whitespace and reports each piece with its character span.
pub fn whitespace_tokens(s: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in s.chars().enumerate() {
        if c.is_whitespace() {
            if !current.is_empty() {
                out.push((std::mem::take(&mut current), start, i));
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        out.push((current, start, end));
    }
    out
}
