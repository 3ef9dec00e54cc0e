mod common;

use attrib_core::jsonl::to_jsonl_string;
use attrib_core::retrieval::{text_contains_answer, tokenize, Bm25Index, Bm25Params};
use attrib_core::simulate::{simulate_dataset, ClassMix, Endpoints, SimulationConfig, SimulationOutput};
use attrib_core::AttributionLabel;

fn run(concurrency: usize, seed: u64, mix: ClassMix) -> SimulationOutput {
    let (records, corpus) = common::synthetic_qa(200);
    let idx = Bm25Index::build(corpus, Bm25Params::default()).unwrap();
    let sub = common::mock_substituter();
    let eps = Endpoints { longifier: None, substituter: Some(&sub) };
    let cfg = SimulationConfig { seed, class_mix: mix, concurrency, ..SimulationConfig::default() };
    simulate_dataset(&records, &cfg, &eps, Some(&idx)).unwrap()
}

#[test]
fn postconditions_hold() {
    let out = run(4, 11, ClassMix::default());
    assert!(out.drops.is_empty(), "{:?}", out.drops);
    for ex in &out.examples {
        let golds: Vec<String> = serde_json::from_str(&ex.meta["gold_answers"]).unwrap();
        match ex.meta["strategy"].as_str() {
            "attributable" => assert!(text_contains_answer(&ex.reference, &golds)),
            "contradictory-answer-swap" => {
                let cand = tokenize(&ex.meta["candidate"]);
                assert!(golds.iter().all(|g| tokenize(g) != cand));
                assert_eq!(ex.answer, ex.meta["candidate"]);
            }
            "contradictory-context-swap" => {
                assert!(ex.reference.contains(&ex.meta["candidate"]));
                assert!(golds.contains(&ex.answer));
            }
            "extrapolatory" => assert!(!text_contains_answer(&ex.reference, &golds)),
            other => panic!("unknown strategy {other}"),
        }
    }
}

#[test]
fn class_counts_within_binomial_interval() {
    let out = run(4, 11, ClassMix::default());
    let (lo, hi) = common::binomial_interval(200, 0.25, 0.99);
    for (strategy, count) in common::counts_by(out.examples.iter().map(|e| e.meta["strategy"].clone())) {
        assert!((lo..=hi).contains(&(count as u64)), "{strategy}: {count} outside [{lo}, {hi}]");
    }
    let [a, c, e] = out.label_counts();
    assert_eq!(a + c + e, 200);
    let (clo, chi) = common::binomial_interval(200, 0.5, 0.99);
    assert!((clo..=chi).contains(&(c as u64)));
}

#[test]
fn reruns_are_byte_identical_regardless_of_concurrency() {
    let a = run(1, 5, ClassMix::default());
    let b = run(8, 5, ClassMix::default());
    assert_eq!(to_jsonl_string(&a.examples), to_jsonl_string(&b.examples));
    let c = run(4, 6, ClassMix::default());
    assert_ne!(to_jsonl_string(&a.examples), to_jsonl_string(&c.examples));
}

#[test]
fn degenerate_mix() {
    let mix = ClassMix { attributable: 0.0, contradictory_answer_swap: 0.0, contradictory_context_swap: 0.0, extrapolatory: 1.0 };
    let out = run(4, 1, mix);
    assert_eq!(out.label_counts(), [0, 0, 200]);
    assert!(out.examples.iter().all(|e| e.label == Some(AttributionLabel::Extrapolatory)));
}

#[test]
fn interval_helper() {
    // Binomial(200, 0.25): mean 50, sd ~6.1
    let (lo, hi) = common::binomial_interval(200, 0.25, 0.99);
    assert!(lo < 50 && hi > 50);
    assert!((34..=38).contains(&lo) && (62..=66).contains(&hi), "{lo} {hi}");
}
