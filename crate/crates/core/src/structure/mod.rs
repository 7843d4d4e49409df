//! Structure stage: disclosure phrases and structural selector rules.

mod lexicon;
mod rules;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use crate::normalize::normalize_text;
pub use lexicon::{DisclaimerLexicon, KindHint, LexiconEntry, LexiconError};
pub use rules::{RuleCategory, RuleError, RuleSet, SelectorRule};

use crate::page::PageDocument;
use crate::selector::ElementNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Phrase,
    Selector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureMatch {
    pub kind: MatchKind,
    /// `lexicon#<index>` for phrases, the rule id for selectors.
    pub rule_or_phrase_id: String,
    pub element_index: usize,
    /// The phrase as found in the element's matching form, or the rule's selector.
    pub matched_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind_hint: Option<KindHint>,
}

pub fn phrase_id(index: usize) -> String {
    format!("lexicon#{index}")
}

/// Substring search of every phrase in every visible element. Order is
/// element index, then lexicon order.
pub fn match_disclaimers(doc: &PageDocument, lex: &DisclaimerLexicon) -> Vec<StructureMatch> {
    let mut out = Vec::new();
    for (idx, el) in doc.visible_indexed() {
        let hay = normalize_text(&el.text);
        for (li, entry) in lex.entries.iter().enumerate() {
            if hay.contains(entry.phrase.as_str()) {
                out.push(StructureMatch {
                    kind: MatchKind::Phrase,
                    rule_or_phrase_id: phrase_id(li),
                    element_index: idx,
                    matched_text: entry.phrase.clone(),
                    language: Some(entry.language.clone()),
                    kind_hint: Some(entry.kind_hint),
                });
            }
        }
    }
    out
}

/// A rule hits a text element when its selector matches the element itself,
/// one of its enclosing elements, or an inline element merged into its text.
/// Each matched DOM node is reported once per rule, attributed to the first
/// text element that reaches it. Hidden elements participate.
pub fn match_selectors(doc: &PageDocument, rules: &RuleSet) -> Vec<StructureMatch> {
    let mut out = Vec::new();
    let mut seen_nodes: HashSet<(usize, usize)> = HashSet::new();
    for (idx, el) in doc.elements.iter().enumerate() {
        let mut subjects: Vec<(ElementNode, Vec<ElementNode>)> = Vec::new();
        let path: Vec<ElementNode> = el.path().cloned().collect();
        for d in 0..path.len() {
            subjects.push((path[d].clone(), path[..d].to_vec()));
        }
        subjects.extend(el.subjects().into_iter().skip(1));
        for (ri, rule) in rules.rules.iter().enumerate() {
            let hits: Vec<usize> = subjects
                .iter()
                .filter(|(node, anc)| rule.selector.matches(node, anc))
                .map(|(node, _)| node.node_id)
                .collect();
            if hits.is_empty() {
                continue;
            }
            // Report once per rule and element, and only if some matched node is new.
            let fresh = hits.iter().fold(false, |acc, &id| seen_nodes.insert((ri, id)) | acc);
            if !fresh {
                continue;
            }
            out.push(StructureMatch {
                kind: MatchKind::Selector,
                rule_or_phrase_id: rule.id.clone(),
                element_index: idx,
                matched_text: rule.selector.source().to_string(),
                language: None,
                kind_hint: None,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub is_candidate: bool,
    pub matches: Vec<StructureMatch>,
}

impl StructureVerdict {
    pub fn phrase_matches(&self) -> impl Iterator<Item = &StructureMatch> {
        self.matches.iter().filter(|m| m.kind == MatchKind::Phrase)
    }
}

/// Candidate when any phrase or any selector rule fires.
pub fn structure_verdict(doc: &PageDocument, lex: &DisclaimerLexicon, rules: &RuleSet) -> StructureVerdict {
    let mut matches = match_disclaimers(doc, lex);
    matches.extend(match_selectors(doc, rules));
    StructureVerdict {
        is_candidate: !matches.is_empty(),
        matches,
    }
}
