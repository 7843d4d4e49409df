use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::normalize::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindHint {
    Banner,
    Disclaimer,
    Either,
}

impl FromStr for KindHint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "banner" => Ok(KindHint::Banner),
            "disclaimer" => Ok(KindHint::Disclaimer),
            "either" | "" => Ok(KindHint::Either),
            other => Err(format!("unknown kind hint {other:?}")),
        }
    }
}

impl fmt::Display for KindHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KindHint::Banner => "banner",
            KindHint::Disclaimer => "disclaimer",
            KindHint::Either => "either",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    /// Stored in matching form (see [`normalize_text`]).
    pub phrase: String,
    pub language: String,
    pub kind_hint: KindHint,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("cannot read lexicon {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Multilingual disclosure phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclaimerLexicon {
    pub entries: Vec<LexiconEntry>,
}

const SEED: &str = include_str!("../../data/lexicon.tsv");

impl DisclaimerLexicon {
    /// The bundled seed list: a partial approximation of a larger curated
    /// list, covering en, nl, de, el, he, es and pt.
    pub fn seed() -> Self {
        Self::parse_tsv(SEED).expect("bundled lexicon parses")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `phrase<TAB>language<TAB>kind_hint`, `#` starts a comment line.
    /// The kind column is optional and defaults to `either`.
    pub fn parse_tsv(src: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |reason: String| LexiconError::Line { line: i + 1, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(err(format!("expected 2 or 3 tab-separated columns, got {}", cols.len())));
            }
            let phrase = normalize_text(cols[0]);
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            let language = cols[1].trim().to_ascii_lowercase();
            if language.is_empty() {
                return Err(err("empty language".into()));
            }
            let kind_hint = cols.get(2).copied().unwrap_or("").parse().map_err(err)?;
            entries.push(LexiconEntry {
                phrase,
                language,
                kind_hint,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LexiconError> {
        let src = std::fs::read_to_string(path).map_err(|e| LexiconError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse_tsv(&src)
    }

    pub fn push(&mut self, phrase: &str, language: &str, kind_hint: KindHint) {
        self.entries.push(LexiconEntry {
            phrase: normalize_text(phrase),
            language: language.to_ascii_lowercase(),
            kind_hint,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn languages(&self) -> std::collections::BTreeSet<&str> {
        self.entries.iter().map(|e| e.language.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_covers_seven_languages() {
        let lex = DisclaimerLexicon::seed();
        assert!(lex.len() >= 40);
        let langs: Vec<_> = lex.languages().into_iter().collect();
        assert_eq!(langs, ["de", "el", "en", "es", "he", "nl", "pt"]);
        for e in &lex.entries {
            assert_eq!(normalize_text(&e.phrase), e.phrase);
        }
    }

    #[test]
    fn parse_normalizes_and_reports_lines() {
        let lex = DisclaimerLexicon::parse_tsv("# c\n  Sponsored\u{00A0}Content \ten\tbanner\nAnzeige\tde\n").unwrap();
        assert_eq!(lex.entries[0].phrase, "sponsored content");
        assert_eq!(lex.entries[1].kind_hint, KindHint::Either);
        let err = DisclaimerLexicon::parse_tsv("ok\ten\n\ten\tbanner\n").unwrap_err();
        assert_eq!(err, LexiconError::Line { line: 2, reason: "empty phrase".into() });
        assert!(DisclaimerLexicon::parse_tsv("x\ten\tweird\n").is_err());
    }
}
