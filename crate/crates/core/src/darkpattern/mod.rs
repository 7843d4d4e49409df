//! How disclosures are presented: kind, position, contrast and font size.

mod wcag;

use serde::{Deserialize, Serialize};

pub use wcag::{contrast_ratio, contrast_ratio_in, relative_luminance, relative_luminance_in};

use crate::normalize::normalize_text;
use crate::page::PageDocument;
use crate::structure::{KindHint, MatchKind, StructureMatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisclosureKind {
    Banner,
    Disclaimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkPatternConfig {
    pub aa_threshold: f64,
    pub aaa_threshold: f64,
    /// Elements with at most this many tokens are banners.
    pub banner_max_tokens: usize,
}

impl Default for DarkPatternConfig {
    fn default() -> Self {
        Self {
            aa_threshold: 4.5,
            aaa_threshold: 7.0,
            banner_max_tokens: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DarkPatternError {
    #[error("page has no visible text")]
    NoVisibleText,
    #[error("element index {0} out of range")]
    BadElement(usize),
}

/// A lexicon hint other than `either` wins; otherwise short text is a banner.
pub fn classify_disclosure(
    m: &StructureMatch,
    doc: &PageDocument,
    banner_max_tokens: usize,
) -> Result<DisclosureKind, DarkPatternError> {
    let el = doc
        .elements
        .get(m.element_index)
        .ok_or(DarkPatternError::BadElement(m.element_index))?;
    Ok(match m.kind_hint {
        Some(KindHint::Banner) => DisclosureKind::Banner,
        Some(KindHint::Disclaimer) => DisclosureKind::Disclaimer,
        _ => {
            let tokens = normalize_text(&el.text).split_whitespace().count();
            if tokens <= banner_max_tokens {
                DisclosureKind::Banner
            } else {
                DisclosureKind::Disclaimer
            }
        }
    })
}

pub fn disclosure_position(m: &StructureMatch, doc: &PageDocument) -> Result<f64, DarkPatternError> {
    doc.elements
        .get(m.element_index)
        .map(|e| e.position_pct)
        .ok_or(DarkPatternError::BadElement(m.element_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prominence {
    Below,
    Equal,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontProminence {
    pub page_median_font_px: f64,
    pub labels: Vec<(usize, Prominence)>,
}

/// Lower median: element `(n - 1) / 2` of the sorted list.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

pub fn font_prominence(doc: &PageDocument, targets: &[usize]) -> Result<FontProminence, DarkPatternError> {
    let sizes: Vec<f64> = doc.visible_indexed().map(|(_, e)| e.font_size_px).collect();
    let median = lower_median(&sizes).ok_or(DarkPatternError::NoVisibleText)?;
    let labels = targets
        .iter()
        .map(|&i| {
            let el = doc.elements.get(i).ok_or(DarkPatternError::BadElement(i))?;
            let label = match el.font_size_px.total_cmp(&median) {
                std::cmp::Ordering::Less => Prominence::Below,
                std::cmp::Ordering::Equal => Prominence::Equal,
                std::cmp::Ordering::Greater => Prominence::Above,
            };
            Ok((i, label))
        })
        .collect::<Result<_, _>>()?;
    Ok(FontProminence {
        page_median_font_px: median,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureRecord {
    pub element_index: usize,
    pub kind: DisclosureKind,
    pub phrase_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    pub text: String,
    pub position_pct: f64,
    /// `None` when the text sits on an image or gradient.
    pub contrast_ratio: Option<f64>,
    pub contrast_indeterminate: bool,
    pub font_size_px: f64,
    pub font_prominence: Prominence,
    pub below_page_median_font: bool,
    pub wcag_aa_pass: Option<bool>,
    pub wcag_aaa_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkPatternSummary {
    pub disclosures: usize,
    pub banners: usize,
    pub disclaimers: usize,
    /// Null when there are no disclosures.
    pub share_below_median_font: Option<f64>,
    /// Over disclosures with a determinate contrast; null when there are none.
    pub share_below_aa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkPatternReport {
    pub records: Vec<DisclosureRecord>,
    pub page_median_font_px: Option<f64>,
    pub summary: DarkPatternSummary,
}

/// One record per element carrying phrase matches. An element is a
/// disclaimer if any of its matches classifies as one.
pub fn analyze_dark_patterns(
    doc: &PageDocument,
    matches: &[StructureMatch],
    cfg: &DarkPatternConfig,
) -> Result<DarkPatternReport, DarkPatternError> {
    let mut grouped: Vec<(usize, Vec<&StructureMatch>)> = Vec::new();
    for m in matches.iter().filter(|m| m.kind == MatchKind::Phrase) {
        match grouped.iter_mut().find(|(i, _)| *i == m.element_index) {
            Some((_, ms)) => ms.push(m),
            None => grouped.push((m.element_index, vec![m])),
        }
    }
    grouped.sort_by_key(|(i, _)| *i);

    let targets: Vec<usize> = grouped.iter().map(|(i, _)| *i).collect();
    let prominence = match font_prominence(doc, &targets) {
        Ok(p) => Some(p),
        Err(DarkPatternError::NoVisibleText) if targets.is_empty() => None,
        Err(e) => return Err(e),
    };

    let mut records = Vec::with_capacity(grouped.len());
    for (n, (idx, ms)) in grouped.iter().enumerate() {
        let el = &doc.elements[*idx];
        let mut kind = DisclosureKind::Banner;
        for m in ms {
            if classify_disclosure(m, doc, cfg.banner_max_tokens)? == DisclosureKind::Disclaimer {
                kind = DisclosureKind::Disclaimer;
            }
        }
        let contrast = (!el.bg_image).then(|| contrast_ratio(el.fg_color, el.bg_color));
        let label = prominence.as_ref().expect("targets imply visible text").labels[n].1;
        records.push(DisclosureRecord {
            element_index: *idx,
            kind,
            phrase_ids: ms.iter().map(|m| m.rule_or_phrase_id.clone()).collect(),
            language: ms.iter().find_map(|m| m.language.clone()),
            text: el.text.clone(),
            position_pct: el.position_pct,
            contrast_ratio: contrast,
            contrast_indeterminate: contrast.is_none(),
            font_size_px: el.font_size_px,
            font_prominence: label,
            below_page_median_font: label == Prominence::Below,
            wcag_aa_pass: contrast.map(|c| c >= cfg.aa_threshold),
            wcag_aaa_pass: contrast.map(|c| c >= cfg.aaa_threshold),
        });
    }

    let share = |hits: usize, total: usize| (total > 0).then(|| hits as f64 / total as f64);
    let determinate: Vec<bool> = records.iter().filter_map(|r| r.wcag_aa_pass).collect();
    let summary = DarkPatternSummary {
        disclosures: records.len(),
        banners: records.iter().filter(|r| r.kind == DisclosureKind::Banner).count(),
        disclaimers: records.iter().filter(|r| r.kind == DisclosureKind::Disclaimer).count(),
        share_below_median_font: share(
            records.iter().filter(|r| r.below_page_median_font).count(),
            records.len(),
        ),
        share_below_aa: share(determinate.iter().filter(|p| !**p).count(), determinate.len()),
    };
    Ok(DarkPatternReport {
        records,
        page_median_font_px: prominence.map(|p| p.page_median_font_px),
        summary,
    })
}
