mod common;

use bridgeqa::qagen::{self, BridgingAnnotation, ContextWindow, QAInstance};
use bridgeqa::treebank::{resolve_mention, Document, Mention, TokenSpan};
use proptest::prelude::*;

use common::*;

fn mentions(doc: &Document) -> Vec<Mention> {
    doc.sentences()
        .iter()
        .flat_map(|s| s.noun_phrases().map(move |np| resolve_mention(s, np.span).unwrap()))
        .collect()
}

/// Annotations with the last NP of each sentence after the first as the
/// anaphor and every second earlier NP as an antecedent.
fn annotations(doc: &Document) -> Vec<BridgingAnnotation> {
    let all = mentions(doc);
    let mut out = Vec::new();
    for s in 1..doc.len() {
        let Some(anaphor) = all.iter().rfind(|m| m.sentence_index == s) else { continue };
        let antecedents: Vec<Mention> = all
            .iter()
            .filter(|m| m.precedes(anaphor))
            .step_by(2)
            .cloned()
            .collect();
        out.push(BridgingAnnotation::new(format!("{}-{s}", doc.id), doc.id.clone(), anaphor.clone(), antecedents).unwrap());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn context_window_shape(n in 1usize..15, prev in 0usize..4, first in any::<bool>(), frac in 0.0f64..1.0) {
        let trees: Vec<String> = (0..n).map(|i| format!("(S (NP (NN w{i})) (VP (VBD left)) (. .))")).collect();
        let d = doc("w", &trees.join("\n"));
        let s = ((n as f64) * frac) as usize;
        let w = ContextWindow { previous_sentences: prev, include_first_sentence: first };
        let c = qagen::build_context(&d, s, &w);
        let idx = c.indices();
        let mut want: Vec<usize> = (s.saturating_sub(prev)..=s).collect();
        if first && !want.contains(&0) {
            want.insert(0, 0);
        }
        prop_assert_eq!(&idx, &want);
        prop_assert!(idx.len() <= prev + 1 + first as usize);
        let joined: Vec<&str> = idx.iter().map(|&i| d.sentences()[i].text()).collect();
        prop_assert_eq!(c.text, joined.join(" "));
    }

    #[test]
    fn built_instances_validate_and_round_trip(seed in any::<u64>()) {
        let d = random_doc(seed, "r");
        let window = ContextWindow::default();
        let qa: Vec<QAInstance> = annotations(&d)
            .iter()
            .map(|a| qagen::build_instance(a, &d, &window).unwrap())
            .collect();
        for q in &qa {
            q.validate().unwrap();
            prop_assert!(q.question.ends_with(" of what?"));
            let a = q.anaphor.unwrap();
            prop_assert_eq!(q.anaphor_text(), Some(d.sentences()[a.sentence_index].span_text(a.span)));
            prop_assert_eq!(q.is_no_answer, q.answers.is_empty());
            let originals: Vec<_> = q.original_answers().collect();
            let first_variation = q.answers.iter().position(|x| x.kind != qagen::AnswerKind::Original);
            if let Some(p) = first_variation {
                prop_assert_eq!(p, originals.len());
            }
            let mut seen = std::collections::HashSet::new();
            for x in &q.answers {
                prop_assert!(seen.insert((x.text.clone(), x.char_start)));
            }
        }
        let loaded = qagen::load_squad_json(&qagen::emit_squad_json(&qa)).unwrap();
        prop_assert_eq!(loaded, qa);
    }
}

#[test]
fn question_keeps_premodifiers_and_drops_postmodifiers() {
    let d = doc("q", "(S (NP (NP (DT the) (JJ old) (NN bank)) (PP (IN of) (NP (DT the) (NN river)))) (VP (VBD left)) (. .))");
    let s = &d.sentences()[0];
    let m = resolve_mention(s, TokenSpan::new(0, 5)).unwrap();
    assert_eq!(qagen::make_question(&m, s).unwrap(), "the old bank of what?");
}

#[test]
fn annotation_syntax_errors_name_the_line() {
    let err = qagen::parse_annotations("d\ta\t0:x-1\t-\n").unwrap_err();
    assert_eq!(err.class(), "format");
    assert!(err.to_string().contains('1'));
}

#[test]
fn duplicate_dataset_ids_are_rejected() {
    let d = random_doc(3, "r");
    let window = ContextWindow::default();
    let mut qa: Vec<QAInstance> = annotations(&d).iter().map(|a| qagen::build_instance(a, &d, &window).unwrap()).collect();
    if qa.is_empty() {
        return;
    }
    qa.push(qa[0].clone());
    assert!(qagen::load_squad_json(&qagen::emit_squad_json(&qa)).is_err());
}
