//! Answer-presence predicates and positive/negative evidence selection.

use std::collections::HashSet;

use super::index::Bm25Index;
use super::tokenize::{find_subsequence, tokenize};
use super::Passage;

/// Default number of ranked passages inspected when looking for a negative.
pub const DEFAULT_NEGATIVE_DEPTH: usize = 100;

/// True iff some answer's token sequence occurs contiguously in the passage.
/// Answers without any tokens never match.
pub fn contains_answer<S: AsRef<str>>(passage: &Passage, answers: &[S]) -> bool {
    text_contains_answer(&passage.text, answers)
}

pub fn text_contains_answer<S: AsRef<str>>(text: &str, answers: &[S]) -> bool {
    let hay = tokenize(text);
    answers
        .iter()
        .any(|a| find_subsequence(&hay, &tokenize(a.as_ref())).is_some())
}

/// Fraction of the answer's unique tokens that appear anywhere in the passage.
/// Returns 0.0 for an answer without tokens.
pub fn overlap_ratio(passage: &Passage, answer: &str) -> f64 {
    let answer_tokens: HashSet<String> = tokenize(answer).into_iter().collect();
    if answer_tokens.is_empty() {
        return 0.0;
    }
    let passage_tokens: HashSet<String> = tokenize(&passage.text).into_iter().collect();
    let hit = answer_tokens.iter().filter(|t| passage_tokens.contains(*t)).count();
    hit as f64 / answer_tokens.len() as f64
}

fn max_overlap<S: AsRef<str>>(passage: &Passage, answers: &[S]) -> f64 {
    answers
        .iter()
        .map(|a| overlap_ratio(passage, a.as_ref()))
        .fold(0.0, f64::max)
}

/// Highest-ranked passage that contains an answer and whose best answer
/// overlap reaches `min_overlap`.
pub fn select_positive<S: AsRef<str>>(
    index: &Bm25Index,
    question: &str,
    answers: &[S],
    min_overlap: f64,
) -> Option<Passage> {
    index
        .search(question, index.len())
        .into_iter()
        .map(|hit| hit.passage)
        .find(|p| contains_answer(p, answers) && max_overlap(p, answers) >= min_overlap)
}

/// Highest-ranked passage among the top `depth` hits that contains no answer.
pub fn select_negative<S: AsRef<str>>(
    index: &Bm25Index,
    question: &str,
    answers: &[S],
    depth: usize,
) -> Option<Passage> {
    index
        .search(question, depth)
        .into_iter()
        .map(|hit| hit.passage)
        .find(|p| !contains_answer(p, answers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::Bm25Params;

    fn p(id: &str, text: &str) -> Passage {
        Passage {
            doc_id: id.into(),
            text: text.into(),
        }
    }

    #[test]
    fn containment_cases() {
        assert!(contains_answer(&p("a", "He was born in 1840 in Votkinsk"), &["1840"]));
        assert!(!contains_answer(&p("a", "The sea borders are long"), &["100,915 km"]));
        assert!(contains_answer(&p("a", "barack obama spoke"), &["Barack Obama"]));
        assert!(!contains_answer(&p("a", "obama barack spoke"), &["Barack Obama"]));
        assert!(!contains_answer(&p("a", "anything"), &["..."]));
    }

    #[test]
    fn overlap_cases() {
        let passage = p("a", "According to Bennett, the tomato could cure diarrhea");
        assert_eq!(overlap_ratio(&passage, "tomato Bennett"), 1.0);
        // 2 of 4 unique tokens: {john, cook, bennett, tomato} ∩ passage = {bennett, tomato}
        assert_eq!(overlap_ratio(&passage, "john cook bennett tomato"), 0.5);
        assert_eq!(overlap_ratio(&passage, "ketchup pills"), 0.0);
        assert_eq!(overlap_ratio(&passage, "tomato tomato john"), 0.5);
    }

    fn corpus() -> Bm25Index {
        Bm25Index::build(
            vec![
                p("d1", "the opera mazeppa was written by tchaikovsky the composer"),
                p("d2", "mazeppa opera premiered in moscow"),
                p("d3", "tchaikovsky was born in 1840 and the opera mazeppa followed"),
                p("d4", "unrelated text about fishing ports"),
            ],
            Bm25Params::default(),
        )
        .unwrap()
    }

    #[test]
    fn positive_skips_passages_without_answer() {
        let idx = corpus();
        let ranked: Vec<_> = idx.search("who wrote the opera mazeppa", 10).into_iter().map(|h| h.passage.doc_id).collect();
        let pos = select_positive(&idx, "who wrote the opera mazeppa", &["1840"], 0.5).unwrap();
        assert_eq!(pos.doc_id, "d3");
        assert!(ranked.iter().position(|d| d == "d3").unwrap() > 0);
        assert!(select_positive(&idx, "opera", &["1999"], 0.0).is_none());
    }

    #[test]
    fn positive_prefers_higher_score() {
        let idx = corpus();
        let pos = select_positive(&idx, "opera mazeppa tchaikovsky composer", &["tchaikovsky"], 0.5).unwrap();
        let top = idx.search("opera mazeppa tchaikovsky composer", 1);
        assert_eq!(pos.doc_id, top[0].passage.doc_id);
    }

    #[test]
    fn negative_selection_rules() {
        let idx = corpus();
        // d1 ranks first for this query and contains "tchaikovsky"; next non-containing wins.
        let neg = select_negative(&idx, "opera mazeppa tchaikovsky composer", &["tchaikovsky"], 10).unwrap();
        assert!(!contains_answer(&neg, &["tchaikovsky"]));
        assert_eq!(neg.doc_id, "d2");
        // top-ranked lacks the answer
        let neg = select_negative(&idx, "fishing ports", &["1840"], 10).unwrap();
        assert_eq!(neg.doc_id, "d4");
        // every retrieved passage contains the answer
        assert!(select_negative(&idx, "tchaikovsky", &["tchaikovsky"], 10).is_none());
        // depth cuts the candidate list
        assert!(select_negative(&idx, "opera mazeppa tchaikovsky composer", &["tchaikovsky"], 1).is_none());
    }
}
