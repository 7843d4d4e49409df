use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::selector::{Selector, SelectorParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    Comments,
    Testimonials,
    Reviews,
    Other,
}

impl FromStr for RuleCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "comments" => Ok(Self::Comments),
            "testimonials" => Ok(Self::Testimonials),
            "reviews" => Ok(Self::Reviews),
            "other" => Ok(Self::Other),
            other => Err(format!("unknown rule category {other:?}")),
        }
    }
}

impl fmt::Display for RuleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Comments => "comments",
            Self::Testimonials => "testimonials",
            Self::Reviews => "reviews",
            Self::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectorRule {
    pub id: String,
    pub category: RuleCategory,
    #[serde(serialize_with = "selector_source")]
    pub selector: Selector,
}

fn selector_source<S: Serializer>(sel: &Selector, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(sel.source())
}

impl SelectorRule {
    pub fn new(id: &str, category: RuleCategory, selector: &str) -> Result<Self, SelectorParseError> {
        Ok(Self {
            id: id.to_string(),
            category,
            selector: selector.parse()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("rule line {line}: {source}")]
    Selector {
        line: usize,
        #[source]
        source: SelectorParseError,
    },
    #[error("duplicate rule id {0:?}")]
    DuplicateId(String),
    #[error("cannot read rules {path}: {reason}")]
    Io { path: String, reason: String },
}

const SEED: &str = include_str!("../../data/rules.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<SelectorRule>,
}

impl RuleSet {
    pub fn seed() -> Self {
        Self::parse_tsv(SEED).expect("bundled rules parse")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `id<TAB>category<TAB>selector`, `#` starts a comment line.
    pub fn parse_tsv(src: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.splitn(3, '\t').collect();
            let [id, category, selector] = cols[..] else {
                return Err(RuleError::Line {
                    line: i + 1,
                    reason: "expected id<TAB>category<TAB>selector".into(),
                });
            };
            let id = id.trim();
            if id.is_empty() {
                return Err(RuleError::Line { line: i + 1, reason: "empty rule id".into() });
            }
            let category = category
                .parse()
                .map_err(|reason| RuleError::Line { line: i + 1, reason })?;
            let rule = SelectorRule::new(id, category, selector)
                .map_err(|source| RuleError::Selector { line: i + 1, source })?;
            if !seen.insert(id.to_string()) {
                return Err(RuleError::DuplicateId(id.to_string()));
            }
            rules.push(rule);
        }
        Ok(Self { rules })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RuleError> {
        let src = std::fs::read_to_string(path).map_err(|e| RuleError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse_tsv(&src)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_rules_parse() {
        let set = RuleSet::seed();
        assert!(set.rules.iter().any(|r| r.selector.source() == "#fbcomments"));
        assert!(set.rules.iter().any(|r| r.selector.source() == ".comment-holder.clearfix"));
    }

    #[test]
    fn load_time_errors() {
        assert!(matches!(RuleSet::parse_tsv("a\tcomments\t#x\na\tother\t.y\n"), Err(RuleError::DuplicateId(_))));
        assert!(matches!(RuleSet::parse_tsv("a\tcomments\tdiv > p\n"), Err(RuleError::Selector { line: 1, .. })));
        assert!(matches!(RuleSet::parse_tsv("a\tnope\t.x\n"), Err(RuleError::Line { .. })));
        assert!(matches!(RuleSet::parse_tsv("only-id\n"), Err(RuleError::Line { .. })));
    }
}
