mod common;

use bridgeqa::treebank::{parse_ptb, resolve_mention, Variations};
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_round_trips(seed in any::<u64>()) {
        let doc = random_doc(seed, "d");
        let again = parse_ptb("d", &doc.to_ptb()).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(again.to_ptb(), doc.to_ptb());
    }

    #[test]
    fn token_offsets_slice_the_sentence_text(seed in any::<u64>()) {
        let doc = random_doc(seed, "d");
        for s in doc.sentences() {
            let mut prev_end = 0;
            for t in s.tokens() {
                prop_assert!(t.char_start >= prev_end);
                prop_assert_eq!(bridgeqa::text::char_slice(s.text(), t.char_start, t.char_end), Some(t.text.as_str()));
                prev_end = t.char_end;
            }
        }
    }

    #[test]
    fn answer_forms_nest_around_the_head(seed in any::<u64>()) {
        let doc = random_doc(seed, "d");
        for s in doc.sentences() {
            for np in s.noun_phrases() {
                let v = Variations::of(np, s).unwrap();
                let head = v.head.span;
                prop_assert_eq!(head.len(), 1);
                prop_assert!(v.without_determiner.span.contains(&head));
                prop_assert!(v.without_postmodifiers.span.contains(&v.without_determiner.span));
                prop_assert!(v.full.span.contains(&v.without_postmodifiers.span));
                prop_assert_eq!(v.without_postmodifiers.span.last, head.first);
                prop_assert_eq!(v.without_postmodifiers.span.first, np.span.first);
                for m in v.distinct() {
                    prop_assert_eq!(m.head_index, head.first);
                }
                prop_assert!(s.tokens()[head.first].pos.starts_with("NN"));
                prop_assert_eq!(resolve_mention(s, np.span).unwrap().head_index, head.first);
            }
        }
    }
}

#[test]
fn offsets_count_characters_not_bytes() {
    let d = doc("u", "(S (NP (DT the) (NN café)) (VP (VBD left)) (. .))");
    let s = &d.sentences()[0];
    assert_eq!(s.text(), "the café left.");
    let left = &s.tokens()[2];
    assert_eq!((left.char_start, left.char_end), (9, 13));
}
