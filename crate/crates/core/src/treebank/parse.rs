//! Reader for Penn-Treebank bracketed trees.

use thiserror::Error;

use super::{ConstituentNode, Document, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug)]
enum Lexeme {
    Open,
    Close,
    Atom(String),
}

fn lex(input: &str) -> (Vec<(Lexeme, Pos)>, Pos) {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut atom = String::new();
    let mut atom_pos = Pos { line, column };
    for c in input.chars() {
        let here = Pos { line, column };
        if c == '(' || c == ')' || c.is_whitespace() {
            if !atom.is_empty() {
                out.push((Lexeme::Atom(std::mem::take(&mut atom)), atom_pos));
            }
            match c {
                '(' => out.push((Lexeme::Open, here)),
                ')' => out.push((Lexeme::Close, here)),
                _ => {}
            }
        } else {
            if atom.is_empty() {
                atom_pos = here;
            }
            atom.push(c);
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    if !atom.is_empty() {
        out.push((Lexeme::Atom(atom), atom_pos));
    }
    (out, Pos { line, column })
}

#[derive(Debug)]
enum Raw {
    Node { label: String, children: Vec<Raw>, pos: Pos },
    Word(String, Pos),
}

struct Frame {
    label: Option<String>,
    children: Vec<Raw>,
    pos: Pos,
}

fn read_raw_trees(input: &str) -> Result<Vec<Raw>, ParseError> {
    let (lexemes, eof) = lex(input);
    let mut trees = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    for (lexeme, pos) in lexemes {
        match lexeme {
            Lexeme::Open => {
                if let Some(top) = stack.last_mut() {
                    // "( (S ...) )": an unlabeled wrapper bracket
                    if top.label.is_none() && top.children.is_empty() {
                        top.label = Some(String::new());
                    }
                }
                stack.push(Frame { label: None, children: Vec::new(), pos });
            }
            Lexeme::Atom(text) => {
                let Some(top) = stack.last_mut() else {
                    return Err(ParseError::at(pos, format!("word {text:?} outside brackets")));
                };
                if top.label.is_none() && top.children.is_empty() {
                    top.label = Some(text);
                } else {
                    top.children.push(Raw::Word(text, pos));
                }
            }
            Lexeme::Close => {
                let Some(frame) = stack.pop() else {
                    return Err(ParseError::at(pos, "unbalanced ')'"));
                };
                let node = Raw::Node {
                    label: frame.label.unwrap_or_default(),
                    children: frame.children,
                    pos: frame.pos,
                };
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => trees.push(node),
                }
            }
        }
    }
    if let Some(open) = stack.first() {
        return Err(ParseError::at(
            eof,
            format!(
                "unexpected end of input: '(' at line {}, column {} is never closed",
                open.pos.line, open.pos.column
            ),
        ));
    }
    Ok(trees)
}

/// Removes outer unlabeled wrapper brackets around a single tree.
fn unwrap_root(mut raw: Raw) -> Raw {
    loop {
        match raw {
            Raw::Node { ref label, ref children, .. }
                if label.is_empty()
                    && children.len() == 1
                    && matches!(children[0], Raw::Node { .. }) =>
            {
                let Raw::Node { mut children, .. } = raw else { unreachable!() };
                raw = children.pop().unwrap();
            }
            Raw::Node { label, children, pos } if label.is_empty() => {
                return Raw::Node { label: "ROOT".to_string(), children, pos };
            }
            other => return other,
        }
    }
}

/// Converts a raw tree, collecting `(word, tag)` pairs. Trace leaves tagged
/// `-NONE-` and constituents left empty by their removal are dropped.
fn build(
    raw: Raw,
    words: &mut Vec<(String, String)>,
) -> Result<Option<ConstituentNode>, ParseError> {
    let (label, children, pos) = match raw {
        Raw::Node { label, children, pos } => (label, children, pos),
        Raw::Word(w, pos) => {
            return Err(ParseError::at(pos, format!("word {w:?} outside a preterminal")));
        }
    };
    if children.is_empty() {
        return Err(ParseError::at(pos, format!("empty constituent ({label})")));
    }
    if children.len() == 1 {
        if let Raw::Word(_, _) = &children[0] {
            let Some(Raw::Word(word, _)) = children.into_iter().next() else { unreachable!() };
            if label == "-NONE-" {
                return Ok(None);
            }
            if label.is_empty() {
                return Err(ParseError::at(pos, format!("word {word:?} has no tag")));
            }
            let index = words.len();
            words.push((word, label.clone()));
            return Ok(Some(ConstituentNode::leaf(label, index)));
        }
    }
    let mut built = Vec::with_capacity(children.len());
    for child in children {
        if let Raw::Word(w, wpos) = child {
            return Err(ParseError::at(
                wpos,
                format!("word {w:?} mixed with constituents under ({label})"),
            ));
        }
        if let Some(node) = build(child, words)? {
            built.push(node);
        }
    }
    if built.is_empty() {
        return Ok(None);
    }
    Ok(Some(ConstituentNode::inner(label, built)))
}

/// Parses a sequence of bracketed trees into a document, one sentence per
/// top-level tree. Layout is free: trees may span lines or share one.
/// Empty input yields an empty document.
pub fn parse_ptb(id: &str, input: &str) -> Result<Document, ParseError> {
    let mut sentences = Vec::new();
    for raw in read_raw_trees(input)? {
        let pos = match &raw {
            Raw::Node { pos, .. } | Raw::Word(_, pos) => *pos,
        };
        let raw = unwrap_root(raw);
        let mut words = Vec::new();
        let Some(tree) = build(raw, &mut words)? else {
            return Err(ParseError::at(pos, "tree contains no tokens"));
        };
        let sentence = Sentence::new(sentences.len(), words, Some(tree))
            .map_err(|e| ParseError::at(pos, e.to_string()))?;
        sentences.push(sentence);
    }
    Ok(Document::new(id, sentences))
}
