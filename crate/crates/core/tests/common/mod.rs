#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use bridgeqa::decode::{ContextToken, LogitsRecord};
use bridgeqa::text::CharSpan;
use bridgeqa::treebank::{parse_ptb, Document};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn doc(id: &str, ptb: &str) -> Document {
    parse_ptb(id, ptb).expect("fixture parses")
}

pub fn fixture_doc(rel: &str) -> Document {
    let path = fixture(rel);
    let id = path.file_stem().unwrap().to_string_lossy().into_owned();
    doc(&id, &std::fs::read_to_string(&path).unwrap())
}

pub fn fixture_docs(rel: &str) -> BTreeMap<String, Document> {
    bridgeqa::io::read_tree_dir(&fixture(rel)).unwrap()
}

pub const PRUNE: &[&str] = &["a", "an", "the", "this", "that"];

/// Exhaustive decoding: every (i, j) with i <= j, scored, filtered and
/// stably sorted. Returns `None` when no token overlaps the anaphor.
pub fn oracle_decode(
    record: &LogitsRecord,
    anaphor: CharSpan,
    k: usize,
    l: usize,
    prune: &[&str],
) -> Option<Vec<(usize, usize, f64)>> {
    let toks = &record.context_tokens;
    if !toks.iter().any(|t| t.char_start < anaphor.end && anaphor.start < t.char_end) {
        return None;
    }
    let pruned = |i: usize| prune.iter().any(|p| p.eq_ignore_ascii_case(&toks[i].text));
    let mut all = Vec::new();
    for i in 0..toks.len() {
        #[allow(clippy::needless_range_loop)]
        for j in i..toks.len() {
            if toks[j].char_end > anaphor.start || j - i + 1 > l {
                continue;
            }
            if (i..=j).all(pruned) {
                continue;
            }
            all.push((i, j, record.start_scores[i] + record.end_scores[j]));
        }
    }
    // (i, j) pairs are generated in start-then-end order, so a stable sort
    // by score alone realizes the tie rule
    all.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    all.truncate(k);
    Some(all)
}

const WORDS: &[&str] = &[
    "the", "a", "an", "this", "that", "The", "THIS", "house", "river", "old", "report", "of",
    "claims", "damage", "city", "residents", "new", "bank",
];

/// Single-space context and a record over it.
pub fn words_record(id: &str, words: &[&str], start: Vec<f64>, end: Vec<f64>) -> (LogitsRecord, String) {
    let context = words.join(" ");
    let mut tokens = Vec::new();
    let mut at = 0;
    for w in words {
        let n = w.chars().count();
        tokens.push(ContextToken {
            text: w.to_string(),
            char_start: at,
            char_end: at + n,
        });
        at += n + 1;
    }
    (
        LogitsRecord {
            format_version: bridgeqa::FORMAT_VERSION,
            instance_id: id.to_string(),
            context_tokens: tokens,
            start_scores: start,
            end_scores: end,
            no_answer_score: None,
        },
        context,
    )
}

pub struct RandomCase {
    pub record: LogitsRecord,
    pub context: String,
    pub anaphor: CharSpan,
}

/// Context of 1..=30 words, scores on a coarse grid so that ties occur,
/// anaphor covering 1-3 tokens at a random position.
pub fn random_case(rng: &mut ChaCha8Rng, id: &str) -> RandomCase {
    let n = rng.random_range(1..=30);
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
    let grid = |rng: &mut ChaCha8Rng| rng.random_range(-8..=8) as f64 * 0.25;
    let start = (0..n).map(|_| grid(rng)).collect();
    let end = (0..n).map(|_| grid(rng)).collect();
    let (record, context) = words_record(id, &words, start, end);
    let a = rng.random_range(0..n);
    let b = (a + rng.random_range(0..3)).min(n - 1);
    let anaphor = CharSpan::new(record.context_tokens[a].char_start, record.context_tokens[b].char_end);
    RandomCase {
        record,
        context,
        anaphor,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NOUNS: &[&str] = &["bank", "river", "report", "claims", "city", "residents", "morning", "damage", "café", "1990s"];
const ADJS: &[&str] = &["old", "new", "total", "naïve"];
const DETS: &[&str] = &["the", "a", "this", "The"];
const PREPS: &[&str] = &["of", "in", "from"];
const VERBS: &[&str] = &["saw", "left", "said"];

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.random_range(0..words.len())]
}

fn random_np(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let mut parts = Vec::new();
    let possessive = depth < 2 && rng.random_bool(0.15);
    if possessive {
        parts.push(format!("(NP (NN {}) (POS 's))", pick(rng, NOUNS)));
    } else if rng.random_bool(0.6) {
        parts.push(format!("(DT {})", pick(rng, DETS)));
    }
    for _ in 0..rng.random_range(0..3) {
        parts.push(format!("(JJ {})", pick(rng, ADJS)));
    }
    let noun = pick(rng, NOUNS);
    let tag = if noun.ends_with('s') { "NNS" } else { "NN" };
    parts.push(format!("({tag} {noun})"));
    let np = format!("(NP {})", parts.join(" "));
    if depth < 2 && !possessive && rng.random_bool(0.4) {
        let prep = pick(rng, PREPS);
        format!("(NP {np} (PP (IN {prep}) {}))", random_np(rng, depth + 1))
    } else {
        np
    }
}

/// One bracketed sentence: NP VP with an optional object NP, then a period.
pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from("(S ");
    s.push_str(&random_np(rng, 0));
    s.push_str(&format!(" (VP (VBD {})", pick(rng, VERBS)));
    if rng.random_bool(0.7) {
        s.push(' ');
        s.push_str(&random_np(rng, 0));
    }
    s.push_str(") (. .))");
    s
}

pub fn random_ptb(rng: &mut ChaCha8Rng, sentences: usize) -> String {
    (0..sentences).map(|_| random_sentence(rng)).collect::<Vec<_>>().join("\n")
}

pub fn random_doc(seed: u64, id: &str) -> Document {
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    doc(id, &random_ptb(&mut r, n))
}
