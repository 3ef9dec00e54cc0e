mod common;

use attrib_core::retrieval::{select_negative, select_positive, Bm25Index, Bm25Params};
use proptest::prelude::*;

fn answers_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(common::text_strategy(3), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn negative_never_contains_answer(
        corpus in common::corpus_strategy(30, 12),
        question in common::text_strategy(5),
        answers in answers_strategy(),
        depth in 1usize..40,
    ) {
        let idx = Bm25Index::build(common::passages(&corpus), Bm25Params::default()).unwrap();
        match select_negative(&idx, &question, &answers, depth) {
            Some(p) => {
                prop_assert!(!common::oracle_contains(&p.text, &answers));
                let hits = idx.search(&question, depth);
                let first_clean = hits.iter().find(|h| !common::oracle_contains(&h.passage.text, &answers));
                prop_assert_eq!(Some(&p.doc_id), first_clean.map(|h| &h.passage.doc_id));
            }
            None => {
                for h in idx.search(&question, depth) {
                    prop_assert!(common::oracle_contains(&h.passage.text, &answers));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn positive_always_contains_answer(
        corpus in common::corpus_strategy(30, 12),
        question in common::text_strategy(5),
        answers in answers_strategy(),
        min in 0.0f64..=1.0,
    ) {
        let idx = Bm25Index::build(common::passages(&corpus), Bm25Params::default()).unwrap();
        if let Some(p) = select_positive(&idx, &question, &answers, min) {
            prop_assert!(common::oracle_contains(&p.text, &answers));
        }
    }
}
