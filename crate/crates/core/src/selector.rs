//! A small CSS-like selector language: `tag`, `.class`, `#id`, `[attr]`,
//! `[attr=value]` compounds joined by the descendant (whitespace) combinator.
//!
//! Used both for same-document `<style>` rules and for structural rule files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One element on a DOM path, as seen by the selector matcher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementNode {
    /// Pre-order index of the element in its source document.
    pub node_id: usize,
    pub tag: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

impl ElementNode {
    pub fn new(node_id: usize, tag: impl Into<String>) -> Self {
        Self {
            node_id,
            tag: tag.into().to_ascii_lowercase(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: &str) -> Self {
        self.attrs.insert(name.to_ascii_lowercase(), value.to_string());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.attrs.get("id").map(String::as_str).filter(|s| !s.is_empty())
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.attrs
            .get("class")
            .map(String::as_str)
            .unwrap_or("")
            .split_ascii_whitespace()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().any(|c| c == class)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid selector {selector:?}: {reason}")]
pub struct SelectorParseError {
    pub selector: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Compound {
    pub tag: Option<String>,
    pub id: Option<String>,
    pub classes: Vec<String>,
    pub attrs: Vec<(String, Option<String>)>,
}

impl Compound {
    pub fn matches(&self, el: &ElementNode) -> bool {
        if let Some(tag) = &self.tag {
            if *tag != el.tag {
                return false;
            }
        }
        if let Some(id) = &self.id {
            if el.id() != Some(id.as_str()) {
                return false;
            }
        }
        if !self.classes.iter().all(|c| el.has_class(c)) {
            return false;
        }
        self.attrs.iter().all(|(name, value)| match (el.attrs.get(name), value) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(actual), Some(expected)) => actual == expected,
        })
    }
}

/// Parsed selector; compounds are stored left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    source: String,
    parts: Vec<Compound>,
}

impl Selector {
    pub fn parse(s: &str) -> Result<Self, SelectorParseError> {
        s.parse()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn compounds(&self) -> &[Compound] {
        &self.parts
    }

    /// CSS specificity as (ids, classes + attributes, tags).
    pub fn specificity(&self) -> (u32, u32, u32) {
        self.parts.iter().fold((0, 0, 0), |(a, b, c), p| {
            (
                a + u32::from(p.id.is_some()),
                b + (p.classes.len() + p.attrs.len()) as u32,
                c + u32::from(p.tag.is_some()),
            )
        })
    }

    /// `ancestors` runs from the root down to the subject's parent.
    pub fn matches(&self, subject: &ElementNode, ancestors: &[ElementNode]) -> bool {
        let Some((last, rest)) = self.parts.split_last() else {
            return false;
        };
        if !last.matches(subject) {
            return false;
        }
        // Descendant-only chains: greedily binding each compound to the nearest
        // matching ancestor is complete.
        let mut remaining = ancestors;
        for compound in rest.iter().rev() {
            match remaining.iter().rposition(|a| compound.matches(a)) {
                Some(pos) => remaining = &remaining[..pos],
                None => return false,
            }
        }
        true
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Selector {
    type Err = SelectorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| SelectorParseError {
            selector: s.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = Vec::new();
        for word in split_outside_brackets(s.trim()).map_err(|r| err(&r))? {
            parts.push(parse_compound(&word).map_err(|r| err(&r))?);
        }
        if parts.is_empty() {
            return Err(err("empty selector"));
        }
        Ok(Selector {
            source: s.trim().to_string(),
            parts,
        })
    }
}

fn split_outside_brackets(s: &str) -> Result<Vec<String>, String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    for ch in s.chars() {
        match (quote, ch) {
            (Some(q), c) if c == q => {
                quote = None;
                cur.push(c);
            }
            (Some(_), c) => cur.push(c),
            (None, '"' | '\'') if depth > 0 => {
                quote = Some(ch);
                cur.push(ch);
            }
            (None, '[') => {
                depth += 1;
                cur.push(ch);
            }
            (None, ']') => {
                depth = depth.checked_sub(1).ok_or("unbalanced ']'")?;
                cur.push(ch);
            }
            (None, c) if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    words.push(std::mem::take(&mut cur));
                }
            }
            (None, c) => cur.push(c),
        }
    }
    if depth != 0 || quote.is_some() {
        return Err("unterminated attribute selector".into());
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    Ok(words)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii()
}

fn take_ident(chars: &[char], mut i: usize) -> (String, usize) {
    let start = i;
    while i < chars.len() && is_ident_char(chars[i]) {
        i += 1;
    }
    (chars[start..i].iter().collect(), i)
}

fn parse_compound(word: &str) -> Result<Compound, String> {
    let chars: Vec<char> = word.chars().collect();
    let mut c = Compound::default();
    let mut i = 0;
    if chars.first() == Some(&'*') {
        i = 1;
    } else if chars.first().is_some_and(|&ch| is_ident_char(ch)) {
        let (tag, next) = take_ident(&chars, 0);
        c.tag = Some(tag.to_ascii_lowercase());
        i = next;
    }
    while i < chars.len() {
        match chars[i] {
            '.' | '#' => {
                let (ident, next) = take_ident(&chars, i + 1);
                if ident.is_empty() {
                    return Err(format!("expected a name after '{}'", chars[i]));
                }
                if chars[i] == '.' {
                    c.classes.push(ident);
                } else if c.id.replace(ident).is_some() {
                    return Err("more than one #id in a compound".into());
                }
                i = next;
            }
            '[' => {
                let close = chars[i..]
                    .iter()
                    .position(|&ch| ch == ']')
                    .map(|p| p + i)
                    .ok_or("unterminated attribute selector")?;
                let inner: String = chars[i + 1..close].iter().collect();
                c.attrs.push(parse_attr(&inner)?);
                i = close + 1;
            }
            other => return Err(format!("unsupported character {other:?}")),
        }
    }
    Ok(c)
}

fn parse_attr(inner: &str) -> Result<(String, Option<String>), String> {
    let (name, value) = match inner.split_once('=') {
        Some((n, v)) => (n.trim(), Some(v.trim())),
        None => (inner.trim(), None),
    };
    if name.is_empty() || !name.chars().all(is_ident_char) {
        return Err(format!("invalid attribute name {name:?}"));
    }
    let value = value.map(|v| {
        let unquoted = v
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .or_else(|| v.strip_prefix('\'').and_then(|v| v.strip_suffix('\'')))
            .unwrap_or(v);
        unquoted.to_string()
    });
    Ok((name.to_ascii_lowercase(), value))
}
