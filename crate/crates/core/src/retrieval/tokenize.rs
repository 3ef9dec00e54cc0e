//! Lowercasing tokenizer shared by retrieval, containment checks, and the
//! answer-difference test in simulation.

/// A token with the byte range it occupies in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on every character that is not alphanumeric and lowercases the
/// pieces. Whitespace, punctuation and symbols all act as separators.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_spans(text).into_iter().map(|t| t.text).collect()
}

pub fn tokenize_with_spans(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Token {
                    text: text[s..i].to_lowercase(),
                    start: s,
                    end: i,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: text[s..].to_lowercase(),
            start: s,
            end: text.len(),
        });
    }
    out
}

/// Position of the first contiguous occurrence of `needle` in `haystack`.
/// An empty needle never matches.
pub fn find_subsequence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn splits_on_whitespace_and_punctuation() {
        assert_eq!(toks("Barack Obama, 44th"), ["barack", "obama", "44th"]);
        assert_eq!(toks("U.S.-based"), ["u", "s", "based"]);
        assert!(toks("").is_empty());
        assert!(toks(" ,.;-- ").is_empty());
    }

    #[test]
    fn unicode_letters_survive() {
        assert_eq!(toks("Pyotr Ilyich Tchaikovsky (Чайковский)"), ["pyotr", "ilyich", "tchaikovsky", "чайковский"]);
        assert_eq!(toks("Angoulême\u{3000}Alès"), ["angoulême", "alès"]);
    }

    #[test]
    fn spans_point_back_into_source() {
        let text = "Rate was 3.81% in 2020";
        for t in tokenize_with_spans(text) {
            assert_eq!(text[t.start..t.end].to_lowercase(), t.text);
        }
    }

    #[test]
    fn subsequence_search() {
        let hay = toks("he was born in 1840 in votkinsk");
        assert_eq!(find_subsequence(&hay, &toks("in 1840")), Some(3));
        assert_eq!(find_subsequence(&hay, &toks("1840 born")), None);
        assert_eq!(find_subsequence(&hay, &[]), None);
    }
}
