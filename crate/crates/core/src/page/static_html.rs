use scraper::{ElementRef, Html, Node};

use super::style::{parse_declarations, ComputedStyle, Stylesheet};
use super::{classes_of, layout_plain_text, InlineNode, Mode, PageDocument, PageError, RawPage, TextElement};
use crate::normalize::normalize_display;
use crate::selector::ElementNode;

/// Never rendered as text.
const SKIPPED: &[&str] = &[
    "script", "style", "noscript", "template", "head", "title", "meta", "link", "svg", "math",
    "iframe", "object", "embed", "canvas", "picture", "video", "audio", "source", "track",
];

/// Phrasing content: flows into the enclosing block's text run when it renders
/// the same way as its container.
const INLINE: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "big", "cite", "code", "data", "del", "dfn", "em", "font",
    "i", "ins", "kbd", "label", "mark", "q", "s", "samp", "small", "span", "strike", "strong",
    "sub", "sup", "time", "tt", "u", "var", "wbr",
];

/// Parses raw HTML leniently and resolves styles from inline `style`
/// attributes and same-document `<style>` blocks.
///
/// Vertical position is the run's character offset as a share of the page's
/// visible text length.
pub fn parse_static(page: &RawPage) -> Result<PageDocument, PageError> {
    let html = Html::parse_document(&page.html);
    let mut sheet = Stylesheet::default();
    let style_sel = scraper::Selector::parse("style").expect("static selector");
    for block in html.select(&style_sel) {
        sheet.extend(&block.text().collect::<String>());
    }

    let mut walker = Walker {
        sheet: &sheet,
        next_id: 0,
        path: Vec::new(),
        out: Vec::new(),
    };
    let root = html.root_element();
    let root_style = walker.style_for(root, &ComputedStyle::default());
    walker.container(root, &root_style);

    let mut elements = walker.out;
    if elements.is_empty() {
        return Err(PageError::EmptyDocument);
    }
    let plain_text = layout_plain_text(&mut elements);
    let total = plain_text.chars().count();
    for el in &mut elements {
        el.position_pct = if total == 0 {
            0.0
        } else {
            (el.char_offset as f64 / total as f64 * 100.0).clamp(0.0, 100.0)
        };
    }
    Ok(PageDocument {
        url: page.url.to_string(),
        elements,
        plain_text,
        html_char_count: page.html_char_count(),
        mode: Mode::Static,
    })
}

struct Walker<'s> {
    sheet: &'s Stylesheet,
    next_id: usize,
    /// Enclosing elements, root first, including the one being visited.
    path: Vec<ElementNode>,
    out: Vec<TextElement>,
}

struct Run {
    text: String,
    owner_depth: usize,
    inline: Vec<InlineNode>,
}

impl Walker<'_> {
    fn node_of(&mut self, el: ElementRef<'_>) -> ElementNode {
        let mut node = ElementNode::new(self.next_id, el.value().name());
        self.next_id += 1;
        for (k, v) in el.value().attrs() {
            node.attrs.insert(k.to_ascii_lowercase(), v.to_string());
        }
        node
    }

    fn style_for(&mut self, el: ElementRef<'_>, parent: &ComputedStyle) -> ComputedStyle {
        let node = self.node_of(el);
        let mut decls = self.sheet.matching(&node, &self.path);
        let inline = el.value().attr("style").map(parse_declarations).unwrap_or_default();
        decls.extend(inline.iter());
        let style = parent.derive(decls, el.value().attr("hidden").is_some());
        self.path.push(node);
        style
    }

    /// Visits an element that owns its own text runs. Expects the element's
    /// node already pushed on `path`; pops it when done.
    fn container(&mut self, el: ElementRef<'_>, style: &ComputedStyle) {
        let mut run = Run {
            text: String::new(),
            owner_depth: self.path.len(),
            inline: Vec::new(),
        };
        self.children(el, style, style, &mut run);
        self.flush(&mut run, style);
        self.path.pop();
    }

    fn children(
        &mut self,
        el: ElementRef<'_>,
        owner_style: &ComputedStyle,
        style: &ComputedStyle,
        run: &mut Run,
    ) {
        for child in el.children() {
            match child.value() {
                Node::Text(t) => run.text.push_str(t),
                Node::Element(e) => {
                    let tag = e.name().to_ascii_lowercase();
                    if SKIPPED.contains(&tag.as_str()) {
                        continue;
                    }
                    if tag == "br" {
                        run.text.push(' ');
                        continue;
                    }
                    let Some(child_el) = ElementRef::wrap(child) else {
                        continue;
                    };
                    let child_style = self.style_for(child_el, style);
                    if INLINE.contains(&tag.as_str()) && child_style.renders_like(owner_style) {
                        let (node, parents) = self.path.split_last().expect("child pushed");
                        run.inline.push(InlineNode {
                            node: node.clone(),
                            parents: parents[run.owner_depth..].to_vec(),
                        });
                        self.children(child_el, owner_style, &child_style, run);
                        self.path.pop();
                    } else {
                        self.flush(run, owner_style);
                        self.container(child_el, &child_style);
                    }
                }
                _ => {}
            }
        }
    }

    fn flush(&mut self, run: &mut Run, style: &ComputedStyle) {
        let text = normalize_display(&std::mem::take(&mut run.text));
        let inline_nodes = std::mem::take(&mut run.inline);
        if text.is_empty() {
            return;
        }
        let node = self.path[run.owner_depth - 1].clone();
        let ancestors = self.path[..run.owner_depth - 1].to_vec();
        self.out.push(TextElement {
            text,
            tag: node.tag.clone(),
            attr_classes: classes_of(&node),
            attr_id: node.id().map(str::to_string),
            ancestors,
            inline_nodes,
            font_size_px: style.font_size_px,
            fg_color: style.effective_fg(),
            bg_color: style.effective_bg(),
            bg_image: style.bg_image,
            position_pct: 0.0,
            char_offset: 0,
            hidden: style.hidden(),
            node,
        });
    }
}
