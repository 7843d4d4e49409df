//! Uniform document model of visible text elements, built either from raw
//! HTML (static mode) or from rendered browser snapshots.

mod color;
mod snapshot;
mod static_html;
pub mod style;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

pub use color::{composite_background, effective_color, ColorError, ColorValue};
pub use snapshot::{ingest_snapshot, RenderedSnapshot, SnapshotAncestor, SnapshotElement};
pub use static_html::parse_static;

use crate::selector::ElementNode;

#[derive(Debug, thiserror::Error)]
pub enum PageError {
    #[error("invalid page url {url:?}: {source}")]
    Url {
        url: String,
        #[source]
        source: url::ParseError,
    },
    #[error("page html is empty")]
    EmptyHtml,
    #[error("no text nodes survived parsing")]
    EmptyDocument,
    #[error("snapshot schema error: {0}")]
    Schema(String),
    #[error("snapshot geometry error: {0}")]
    Geometry(String),
}

/// A fetched page before parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPage {
    pub url: Url,
    pub html: String,
    pub fetched_at: DateTime<Utc>,
}

impl RawPage {
    pub fn new(url: &str, html: impl Into<String>, fetched_at: DateTime<Utc>) -> Result<Self, PageError> {
        let html = html.into();
        if html.is_empty() {
            return Err(PageError::EmptyHtml);
        }
        let url = Url::parse(url).map_err(|source| PageError::Url {
            url: url.to_string(),
            source,
        })?;
        Ok(Self { url, html, fetched_at })
    }

    /// Decodes the body as UTF-8, replacing invalid sequences.
    pub fn from_bytes(url: &str, body: &[u8], fetched_at: DateTime<Utc>) -> Result<Self, PageError> {
        Self::new(url, String::from_utf8_lossy(body).into_owned(), fetched_at)
    }

    pub fn html_char_count(&self) -> usize {
        self.html.chars().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Styles from the document itself; position approximated by text offset.
    Static,
    /// Geometry and styles measured by a browser.
    Snapshot,
}

/// One run of text with its resolved presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextElement {
    /// NFKC-normalized, whitespace-collapsed text (case preserved).
    pub text: String,
    pub tag: String,
    pub attr_classes: BTreeSet<String>,
    pub attr_id: Option<String>,
    /// The element owning this run.
    pub node: ElementNode,
    /// Root-first chain of enclosing elements, excluding `node`.
    pub ancestors: Vec<ElementNode>,
    /// Inline elements whose text was merged into this run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inline_nodes: Vec<InlineNode>,
    pub font_size_px: f64,
    /// Effective (composited, opaque) colors.
    pub fg_color: ColorValue,
    pub bg_color: ColorValue,
    /// Background is an image or gradient; contrast cannot be determined.
    #[serde(default)]
    pub bg_image: bool,
    pub position_pct: f64,
    pub char_offset: usize,
    pub hidden: bool,
}

/// An inline element folded into the run of its block container.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InlineNode {
    pub node: ElementNode,
    /// Inline elements between the run's owner and `node`, outermost first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<ElementNode>,
}

impl TextElement {
    /// `node` with its ancestors, root first.
    pub fn path(&self) -> impl Iterator<Item = &ElementNode> {
        self.ancestors.iter().chain(std::iter::once(&self.node))
    }

    /// Every element this run's text comes from, each paired with its
    /// root-first ancestor chain.
    pub fn subjects(&self) -> Vec<(ElementNode, Vec<ElementNode>)> {
        let path: Vec<ElementNode> = self.path().cloned().collect();
        let mut out = Vec::with_capacity(1 + self.inline_nodes.len());
        out.push((self.node.clone(), self.ancestors.clone()));
        for inl in &self.inline_nodes {
            let mut anc = path.clone();
            anc.extend(inl.parents.iter().cloned());
            out.push((inl.node.clone(), anc));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageDocument {
    pub url: String,
    pub elements: Vec<TextElement>,
    pub plain_text: String,
    pub html_char_count: usize,
    pub mode: Mode,
}

impl PageDocument {
    /// Elements users can see, in document order.
    pub fn visible_text_elements(&self) -> Vec<&TextElement> {
        self.elements.iter().filter(|e| !e.hidden).collect()
    }

    /// Visible elements with their index into `elements`.
    pub fn visible_indexed(&self) -> impl Iterator<Item = (usize, &TextElement)> {
        self.elements.iter().enumerate().filter(|(_, e)| !e.hidden)
    }

    pub fn host(&self) -> Option<String> {
        Url::parse(&self.url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("page document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub fn visible_text_elements(doc: &PageDocument) -> Vec<&TextElement> {
    doc.visible_text_elements()
}

/// Assigns `char_offset` to every element and returns the joined visible text.
/// Hidden elements get the offset at which they would have appeared.
fn layout_plain_text(elements: &mut [TextElement]) -> String {
    let mut plain = String::new();
    let mut chars = 0usize;
    for el in elements.iter_mut() {
        if el.hidden {
            el.char_offset = chars + usize::from(!plain.is_empty());
            continue;
        }
        if !plain.is_empty() {
            plain.push(' ');
            chars += 1;
        }
        el.char_offset = chars;
        plain.push_str(&el.text);
        chars += el.text.chars().count();
    }
    plain
}

fn classes_of(node: &ElementNode) -> BTreeSet<String> {
    node.classes().map(str::to_string).collect()
}
