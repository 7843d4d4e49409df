//! Tokenization, syllables, Type-Token Ratio and Linsear-Write.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("text contains no word tokens")]
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Consecutive token ranges covering `0..tokens.len()`.
    pub sentence_bounds: Vec<Range<usize>>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> {
        self.sentence_bounds.iter().map(|r| &self.tokens[r.clone()])
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}' | '\u{2011}')
}

/// Sentences end at `.`, `!` or `?` followed by whitespace or the end of the
/// text; abbreviations are not special-cased. Words are runs of letters
/// (with combining marks) joined by internal apostrophes or hyphens, and are
/// lowercased. Digits and other symbols separate words and are dropped.
pub fn tokenize(s: &str) -> TokenStream {
    let chars: Vec<char> = s.chars().collect();
    let mut tokens = Vec::new();
    let mut bounds = Vec::new();
    let mut sentence_start = 0usize;
    let mut word = String::new();
    let mut close_sentence = |tokens: &Vec<String>, bounds: &mut Vec<Range<usize>>| {
        if tokens.len() > sentence_start {
            bounds.push(sentence_start..tokens.len());
            sentence_start = tokens.len();
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) {
            word.extend(c.to_lowercase());
        } else if is_joiner(c)
            && !word.is_empty()
            && chars.get(i + 1).copied().is_some_and(is_word_char)
        {
            word.push(if c == '\u{2019}' { '\'' } else if c == '\'' { c } else { '-' });
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
                close_sentence(&tokens, &mut bounds);
            }
        }
        i += 1;
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    close_sentence(&tokens, &mut bounds);
    TokenStream {
        tokens,
        sentence_bounds: bounds,
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Suffixes after which a stem's silent `e` is still silent ("advertisement").
const SILENT_E_SUFFIXES: &[&str] = &["ment", "ness", "less", "ful", "ly"];

fn ends_vce(stem: &[char]) -> bool {
    matches!(stem, [.., v, c, 'e'] if is_vowel(*v) && !is_vowel(*c))
}

fn part_syllables(part: &[char], accented_final_e: bool) -> usize {
    let mut groups = 0usize;
    let mut prev_vowel = false;
    for &c in part {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    if groups > 1 && !accented_final_e {
        match part {
            [.., c, 'l', 'e'] if !is_vowel(*c) => {}
            [.., c, 'e'] if !is_vowel(*c) => groups -= 1,
            _ => {
                let word: String = part.iter().collect();
                if let Some(suffix) = SILENT_E_SUFFIXES.iter().find(|s| word.ends_with(*s)) {
                    let stem = &part[..part.len() - suffix.len()];
                    if stem.len() >= 3 && ends_vce(stem) {
                        groups -= 1;
                    }
                }
            }
        }
    }
    groups.max(1)
}

/// Vowel-group heuristic over `aeiouy` after stripping diacritics. Hyphenated
/// parts are counted separately. An accented final `é` is pronounced. Never
/// less than 1.
pub fn count_syllables(word: &str) -> usize {
    let accented_final_e = word.nfc().last().is_some_and(|c| matches!(c, 'é' | 'É'));
    let plain: Vec<char> = word
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .filter(|c| *c != '\'' && *c != '\u{2019}')
        .collect();
    let total: usize = plain
        .split(|c| *c == '-' || *c == '\u{2010}' || *c == '\u{2011}')
        .filter(|p| p.iter().any(|c| c.is_alphabetic()))
        .map(|p| part_syllables(p, accented_final_e))
        .sum();
    total.max(1)
}

/// Distinct tokens over total tokens.
pub fn type_token_ratio(ts: &TokenStream) -> Result<f64, TextError> {
    if ts.is_empty() {
        return Err(TextError::EmptyText);
    }
    let distinct: HashSet<&str> = ts.tokens.iter().map(String::as_str).collect();
    Ok(distinct.len() as f64 / ts.len() as f64)
}

pub const LINSEAR_WINDOW: usize = 100;

/// Easy words (≤ 2 syllables) score 1, hard words 3, over the first 100
/// tokens. Every sentence starting inside the window counts once.
pub fn linsear_write(ts: &TokenStream) -> Result<f64, TextError> {
    if ts.is_empty() {
        return Err(TextError::EmptyText);
    }
    let window = ts.len().min(LINSEAR_WINDOW);
    let points: usize = ts.tokens[..window]
        .iter()
        .map(|t| if count_syllables(t) >= 3 { 3 } else { 1 })
        .sum();
    let sentences = ts.sentence_bounds.iter().filter(|r| r.start < window).count();
    let r = points as f64 / sentences as f64;
    Ok(if r > 20.0 { r / 2.0 } else { r / 2.0 - 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextMetrics {
    pub ttr: f64,
    pub linsear_write: f64,
    pub tokens: usize,
    pub sentences: usize,
}

pub fn text_metrics(s: &str) -> Result<TextMetrics, TextError> {
    let ts = tokenize(s);
    Ok(TextMetrics {
        ttr: type_token_ratio(&ts)?,
        linsear_write: linsear_write(&ts)?,
        tokens: ts.len(),
        sentences: ts.sentence_bounds.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        let ts = tokenize("Hello world.");
        assert_eq!(ts.tokens, ["hello", "world"]);
        assert_eq!(ts.sentence_bounds, [0..2]);
        assert_eq!(tokenize("A! B? C.").sentence_bounds.len(), 3);
        assert_eq!(tokenize("state-of-the-art results").tokens, ["state-of-the-art", "results"]);
    }

    #[test]
    fn tokenize_edges() {
        assert_eq!(tokenize("Don\u{2019}t stop - 42 items cost $3.50 each").tokens, ["don't", "stop", "items", "cost", "each"]);
        assert_eq!(tokenize("v1.2 is out").sentence_bounds.len(), 1);
        assert_eq!(tokenize("Dr. Smith arrived. Then left").sentence_bounds, [0..1, 1..3, 3..5]);
        assert!(tokenize("... 123 !!").tokens.is_empty());
        assert_eq!(tokenize("Ο ιδιοκτήτης έχει.").tokens, ["ο", "ιδιοκτήτης", "έχει"]);
        assert_eq!(tokenize("cafe\u{0301} noir").tokens[0], "cafe\u{0301}");
    }

    #[test]
    fn syllable_examples() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("advertisement"), 4);
        for (w, n) in [
            ("the", 1),
            ("free", 1),
            ("site", 1),
            ("make", 1),
            ("movement", 2),
            ("lovely", 2),
            ("useless", 2),
            ("apartment", 3),
            ("important", 3),
            ("publication", 4),
            ("monetary", 4),
            ("state-of-the-art", 4),
            ("café", 2),
            ("rhythm", 1),
            ("123", 1),
        ] {
            assert_eq!(count_syllables(w), n, "{w}");
        }
    }

    #[test]
    fn ttr_examples() {
        let ten = tokenize("one two three four five six seven eight nine ten");
        assert_eq!(type_token_ratio(&ten).unwrap(), 1.0);
        assert_eq!(type_token_ratio(&tokenize("the the the")).unwrap(), 1.0 / 3.0);
        assert_eq!(type_token_ratio(&tokenize("the cat sat on the mat")).unwrap(), 5.0 / 6.0);
        assert_eq!(type_token_ratio(&tokenize("42.")), Err(TextError::EmptyText));
    }

    #[test]
    fn linsear_examples() {
        let easy = format!("{}. {}.", ["cat"; 10].join(" "), ["dog"; 10].join(" "));
        assert_eq!(linsear_write(&tokenize(&easy)).unwrap(), 4.0);
        let hard: Vec<String> = (0..5).map(|_| ["important"; 20].join(" ")).collect();
        assert_eq!(linsear_write(&tokenize(&(hard.join(". ") + "."))).unwrap(), 30.0);
        assert_eq!(linsear_write(&TokenStream::default()), Err(TextError::EmptyText));
    }

    #[test]
    fn partial_sentence_counts_once() {
        // 99 easy words in one sentence, then a second sentence whose first
        // token is the 100th.
        let text = format!("{}. cat cat cat.", ["cat"; 99].join(" "));
        let ts = tokenize(&text);
        // points 100, sentences 2 -> r 50 -> 25
        assert_eq!(linsear_write(&ts).unwrap(), 25.0);
    }

    fn sentence() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof!["cat", "table", "important", "advertisement", "the", "monetary"],
            1..8,
        )
        .prop_map(|w| w.join(" ") + ".")
    }

    proptest! {
        #[test]
        fn ttr_in_unit_interval_and_order_invariant(words in proptest::collection::vec("[a-c]{1,3}", 1..30), seed in any::<u64>()) {
            let ts = tokenize(&words.join(" "));
            let t = type_token_ratio(&ts).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
            let mut shuffled = words.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(type_token_ratio(&tokenize(&shuffled.join(" "))).unwrap(), t);
        }

        #[test]
        fn syllables_at_least_one(w in "\\PC{1,20}") {
            prop_assert!(count_syllables(&w) >= 1);
            prop_assert_eq!(count_syllables(&w), count_syllables(&w));
        }

        #[test]
        fn window_ignores_suffix(prefix in proptest::collection::vec(sentence(), 20..30), suffix in proptest::collection::vec(sentence(), 0..10)) {
            let base = prefix.join(" ");
            let ts = tokenize(&base);
            prop_assume!(ts.len() >= LINSEAR_WINDOW);
            let padded = format!("{base} {}", suffix.join(" "));
            prop_assert_eq!(linsear_write(&tokenize(&padded)).unwrap(), linsear_write(&ts).unwrap());
        }

        #[test]
        fn duplicating_sentences_keeps_score(sentences in proptest::collection::vec(sentence(), 1..6)) {
            let once = sentences.join(" ");
            prop_assume!(tokenize(&once).len() * 2 <= LINSEAR_WINDOW);
            let twice: Vec<String> = sentences.iter().flat_map(|s| [s.clone(), s.clone()]).collect();
            prop_assert_eq!(linsear_write(&tokenize(&twice.join(" "))).unwrap(), linsear_write(&tokenize(&once)).unwrap());
        }
    }
}
