use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ks::{ks_test, KsError, KsResult};
use crate::page::PageDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLengths {
    pub n: usize,
    pub median_chars_text: usize,
    pub median_chars_html: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseKs {
    pub a: String,
    pub b: String,
    pub text: KsResult,
    pub html: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub groups: BTreeMap<String, GroupLengths>,
    /// Every unordered pair of distinct groups, in name order.
    pub pairs: Vec<PairwiseKs>,
}

fn lower_median(sorted: &[usize]) -> usize {
    sorted[(sorted.len() - 1) / 2]
}

fn lengths(docs: &[PageDocument]) -> (Vec<usize>, Vec<usize>) {
    let mut text: Vec<usize> = docs.iter().map(|d| d.plain_text.chars().count()).collect();
    let mut html: Vec<usize> = docs.iter().map(|d| d.html_char_count).collect();
    text.sort_unstable();
    html.sort_unstable();
    (text, html)
}

/// Text length is the visible plain text in characters; HTML length is the raw document.
pub fn text_length_report(groups: &BTreeMap<String, Vec<PageDocument>>) -> Result<LengthReport, KsError> {
    let mut samples = BTreeMap::new();
    for (name, docs) in groups {
        if docs.is_empty() {
            return Err(KsError::EmptySample);
        }
        samples.insert(name.clone(), lengths(docs));
    }
    let summary = samples
        .iter()
        .map(|(name, (text, html))| {
            (
                name.clone(),
                GroupLengths {
                    n: text.len(),
                    median_chars_text: lower_median(text),
                    median_chars_html: lower_median(html),
                },
            )
        })
        .collect();
    let names: Vec<&String> = samples.keys().collect();
    let mut pairs = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (ta, ha) = &samples[*a];
            let (tb, hb) = &samples[*b];
            pairs.push(PairwiseKs {
                a: (*a).clone(),
                b: (*b).clone(),
                text: ks_test(ta, tb)?,
                html: ks_test(ha, hb)?,
            });
        }
    }
    Ok(LengthReport { groups: summary, pairs })
}
