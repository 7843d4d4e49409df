use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::color::{composite_background, effective_color, ColorValue};
use super::{classes_of, layout_plain_text, Mode, PageDocument, PageError, TextElement};
use crate::normalize::normalize_display;
use crate::selector::ElementNode;

/// One page captured by a real browser: text runs with measured geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderedSnapshot {
    pub url: String,
    pub elements: Vec<SnapshotElement>,
    pub document_height_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotElement {
    pub text: String,
    pub tag: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub font_size_px: f64,
    pub fg_color: ColorValue,
    pub bg_color: ColorValue,
    pub top_px: f64,
    pub height_px: f64,
    pub visible: bool,
    /// Optional root-first DOM path, used by structural rules.
    #[serde(default)]
    pub ancestors: Vec<SnapshotAncestor>,
    #[serde(default)]
    pub bg_image: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAncestor {
    pub tag: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl RenderedSnapshot {
    pub fn from_json(s: &str) -> Result<Self, PageError> {
        serde_json::from_str(s).map_err(|e| PageError::Schema(e.to_string()))
    }
}

fn to_node(node_id: usize, tag: &str, attrs: &BTreeMap<String, String>) -> ElementNode {
    let mut node = ElementNode::new(node_id, tag);
    for (k, v) in attrs {
        node.attrs.insert(k.to_ascii_lowercase(), v.clone());
    }
    node
}

/// Builds a document from measured geometry: `position_pct` is
/// `top_px / document_height_px * 100`, clamped to [0, 100].
pub fn ingest_snapshot(snap: &RenderedSnapshot) -> Result<PageDocument, PageError> {
    if !(snap.document_height_px.is_finite() && snap.document_height_px > 0.0) {
        return Err(PageError::Geometry(format!(
            "document_height_px must be > 0, got {}",
            snap.document_height_px
        )));
    }
    let mut elements = Vec::with_capacity(snap.elements.len());
    let mut next_id = 0usize;
    for (i, se) in snap.elements.iter().enumerate() {
        if !se.top_px.is_finite() || se.top_px < 0.0 {
            return Err(PageError::Geometry(format!("element {i}: top_px {} < 0", se.top_px)));
        }
        if !se.height_px.is_finite() || se.height_px < 0.0 {
            return Err(PageError::Geometry(format!("element {i}: height_px {} < 0", se.height_px)));
        }
        if !se.font_size_px.is_finite() || se.font_size_px < 0.0 {
            return Err(PageError::Schema(format!("element {i}: invalid font_size_px {}", se.font_size_px)));
        }
        let text = normalize_display(&se.text);
        if text.is_empty() {
            continue;
        }
        let ancestors: Vec<ElementNode> = se
            .ancestors
            .iter()
            .map(|a| {
                next_id += 1;
                to_node(next_id - 1, &a.tag, &a.attributes)
            })
            .collect();
        let node = to_node(next_id, &se.tag, &se.attributes);
        next_id += 1;
        let stack = [se.bg_color];
        elements.push(TextElement {
            text,
            tag: node.tag.clone(),
            attr_classes: classes_of(&node),
            attr_id: node.id().map(str::to_string),
            ancestors,
            inline_nodes: Vec::new(),
            font_size_px: se.font_size_px,
            fg_color: effective_color(se.fg_color, &stack),
            bg_color: composite_background(&stack),
            bg_image: se.bg_image,
            position_pct: (se.top_px / snap.document_height_px * 100.0).clamp(0.0, 100.0),
            char_offset: 0,
            hidden: !se.visible || se.height_px == 0.0 || se.font_size_px == 0.0,
            node,
        });
    }
    let plain_text = layout_plain_text(&mut elements);
    Ok(PageDocument {
        url: snap.url.clone(),
        elements,
        plain_text,
        html_char_count: 0,
        mode: Mode::Snapshot,
    })
}
