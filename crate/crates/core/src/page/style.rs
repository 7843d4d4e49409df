//! Just enough CSS to resolve text color, background, font size and
//! visibility from inline `style` attributes and same-document `<style>` blocks.

use std::collections::HashMap;

use super::color::{composite_background, effective_color, ColorValue};
use crate::selector::{ElementNode, Selector};

pub const DEFAULT_FONT_PX: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub property: String,
    pub value: String,
}

/// Splits `a: b; c: d` into declarations. `!important` is dropped and
/// semicolons inside parentheses (data URLs) are kept.
pub fn parse_declarations(block: &str) -> Vec<Declaration> {
    split_top_level(block, ';')
        .into_iter()
        .filter_map(|decl| {
            let (prop, value) = decl.split_once(':')?;
            let property = prop.trim().to_ascii_lowercase();
            let value = value.trim();
            let value = value
                .strip_suffix("!important")
                .map(str::trim_end)
                .unwrap_or(value);
            (!property.is_empty() && !value.is_empty()).then(|| Declaration {
                property,
                value: value.to_string(),
            })
        })
        .collect()
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth <= 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Whitespace-separated tokens, keeping parenthesized groups together.
fn value_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start: Option<usize> = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch.is_whitespace() && depth <= 0 {
            if let Some(st) = start.take() {
                out.push(&s[st..i]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push(&s[st..]);
    }
    out
}

#[derive(Debug, Clone)]
struct StyleRule {
    selector: Selector,
    specificity: (u32, u32, u32),
    order: usize,
    declarations: Vec<Declaration>,
}

/// Rules collected from `<style>` blocks. Selectors outside the supported
/// subset, and all at-rules, are skipped.
#[derive(Debug, Clone, Default)]
pub struct Stylesheet {
    rules: Vec<StyleRule>,
}

impl Stylesheet {
    pub fn parse(css: &str) -> Self {
        let mut sheet = Self::default();
        sheet.extend(css);
        sheet
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn extend(&mut self, css: &str) {
        let css = strip_comments(css);
        let mut rest = css.as_str();
        while let Some(open) = rest.find('{') {
            let prelude = rest[..open].trim();
            let Some(close) = matching_brace(rest, open) else {
                break;
            };
            let body = &rest[open + 1..close];
            rest = &rest[close + 1..];
            if prelude.starts_with('@') {
                continue;
            }
            let declarations = parse_declarations(body);
            if declarations.is_empty() {
                continue;
            }
            for sel in prelude.split(',') {
                if let Ok(selector) = Selector::parse(sel) {
                    let order = self.rules.len();
                    self.rules.push(StyleRule {
                        specificity: selector.specificity(),
                        selector,
                        order,
                        declarations: declarations.clone(),
                    });
                }
            }
        }
    }

    /// Declarations applying to `subject` in cascade order (lowest precedence first).
    pub fn matching<'a>(
        &'a self,
        subject: &ElementNode,
        ancestors: &[ElementNode],
    ) -> Vec<&'a Declaration> {
        let mut hits: Vec<&StyleRule> = self
            .rules
            .iter()
            .filter(|r| r.selector.matches(subject, ancestors))
            .collect();
        hits.sort_by_key(|r| (r.specificity, r.order));
        hits.iter().flat_map(|r| r.declarations.iter()).collect()
    }
}

fn strip_comments(css: &str) -> String {
    let mut out = String::with_capacity(css.len());
    let mut rest = css;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("*/") {
            Some(end) => rest = &rest[start + 2 + end + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

fn matching_brace(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, ch) in s[open..].char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Resolved style of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputedStyle {
    /// Declared text color; may be translucent until composited.
    pub color: ColorValue,
    /// Background layers from the document root down, bottom first.
    pub backgrounds: Vec<ColorValue>,
    /// Text sits on a background image or gradient with no opaque color above it.
    pub bg_image: bool,
    pub font_size_px: f64,
    pub display_none: bool,
    pub visibility_hidden: bool,
    pub hidden_attr: bool,
}

impl Default for ComputedStyle {
    fn default() -> Self {
        Self {
            color: ColorValue::BLACK,
            backgrounds: vec![ColorValue::WHITE],
            bg_image: false,
            font_size_px: DEFAULT_FONT_PX,
            display_none: false,
            visibility_hidden: false,
            hidden_attr: false,
        }
    }
}

impl ComputedStyle {
    pub fn hidden(&self) -> bool {
        self.display_none || self.visibility_hidden || self.hidden_attr || self.font_size_px <= 0.0
    }

    pub fn effective_fg(&self) -> ColorValue {
        effective_color(self.color, &self.backgrounds)
    }

    pub fn effective_bg(&self) -> ColorValue {
        composite_background(&self.backgrounds)
    }

    /// Two styles that render text identically, so their runs can merge.
    pub fn renders_like(&self, other: &ComputedStyle) -> bool {
        self.hidden() == other.hidden()
            && self.font_size_px == other.font_size_px
            && self.bg_image == other.bg_image
            && self.effective_fg() == other.effective_fg()
            && self.effective_bg() == other.effective_bg()
    }

    /// Child style from the parent plus the cascaded declarations.
    pub fn derive<'a>(
        &self,
        declarations: impl IntoIterator<Item = &'a Declaration>,
        hidden_attr: bool,
    ) -> ComputedStyle {
        let mut last: HashMap<&str, &str> = HashMap::new();
        for d in declarations {
            last.insert(d.property.as_str(), d.value.as_str());
        }
        let mut out = ComputedStyle {
            hidden_attr: self.hidden_attr || hidden_attr,
            ..self.clone()
        };

        if let Some(v) = last.get("font") {
            if let Some(px) = value_tokens(v)
                .iter()
                .find_map(|t| parse_font_size(t.split('/').next().unwrap_or(t), self.font_size_px))
            {
                out.font_size_px = px;
            }
        }
        if let Some(px) = last
            .get("font-size")
            .and_then(|v| parse_font_size(v, self.font_size_px))
        {
            out.font_size_px = px;
        }
        if let Some(c) = last.get("color").and_then(|v| ColorValue::parse_css(v).ok()) {
            out.color = c;
        }
        if last.get("display").is_some_and(|v| v.eq_ignore_ascii_case("none")) {
            out.display_none = true;
        }
        if let Some(v) = last.get("visibility") {
            match v.to_ascii_lowercase().as_str() {
                "hidden" | "collapse" => out.visibility_hidden = true,
                "visible" => out.visibility_hidden = false,
                _ => {}
            }
        }

        let mut layer: Option<ColorValue> = None;
        let mut image = false;
        if let Some(v) = last.get("background") {
            for tok in value_tokens(v) {
                if tok.contains("url(") || tok.contains("gradient(") {
                    image = true;
                } else if let Ok(c) = ColorValue::parse_css(tok) {
                    layer = Some(c);
                }
            }
        }
        if let Some(v) = last.get("background-image") {
            image = !v.trim().eq_ignore_ascii_case("none");
        }
        if let Some(c) = last
            .get("background-color")
            .and_then(|v| ColorValue::parse_css(v).ok())
        {
            layer = Some(c);
        }
        if let Some(c) = layer.filter(|c| c.a > 0.0) {
            out.backgrounds.push(c);
            if c.is_opaque() {
                out.bg_image = false;
            }
        }
        // The image paints above the element's own background color.
        if image {
            out.bg_image = true;
        }
        out
    }
}

fn parse_font_size(v: &str, parent_px: f64) -> Option<f64> {
    let v = v.trim().to_ascii_lowercase();
    let keyword = match v.as_str() {
        "xx-small" => Some(9.0),
        "x-small" => Some(10.0),
        "small" => Some(13.0),
        "medium" => Some(16.0),
        "large" => Some(18.0),
        "x-large" => Some(24.0),
        "xx-large" => Some(32.0),
        "xxx-large" => Some(48.0),
        "smaller" => Some(parent_px / 1.2),
        "larger" => Some(parent_px * 1.2),
        "0" => Some(0.0),
        _ => None,
    };
    if keyword.is_some() {
        return keyword;
    }
    let split = v
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'))
        .unwrap_or(v.len());
    let (num, unit) = v.split_at(split);
    let n: f64 = num.parse().ok()?;
    if !n.is_finite() || n < 0.0 {
        return None;
    }
    let px = match unit {
        "px" => n,
        "pt" => n * 4.0 / 3.0,
        "pc" => n * 16.0,
        "em" => n * parent_px,
        "rem" => n * DEFAULT_FONT_PX,
        "%" => n / 100.0 * parent_px,
        "" if n == 0.0 => 0.0,
        _ => return None,
    };
    Some(px)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(tag: &str) -> ElementNode {
        ElementNode::new(0, tag)
    }

    #[test]
    fn declarations_drop_important_and_keep_data_urls() {
        let d = parse_declarations(
            "color: red !important; background: url(data:image/png;base64,AA) ; ;font-size:12px",
        );
        assert_eq!(d.len(), 3);
        assert_eq!(d[0].value, "red");
        assert_eq!(d[1].value, "url(data:image/png;base64,AA)");
    }

    #[test]
    fn cascade_orders_by_specificity_then_source() {
        let sheet = Stylesheet::parse(
            "/* c */ #x { color: blue } p { color: red } p { color: green } @media print { p { color: pink } }",
        );
        assert_eq!(sheet.len(), 3);
        let el = node("p").with_attr("id", "x");
        let style = ComputedStyle::default().derive(sheet.matching(&el, &[]), false);
        assert_eq!(style.color, ColorValue::rgb(0, 0, 255));
        let plain = ComputedStyle::default().derive(sheet.matching(&node("p"), &[]), false);
        assert_eq!(plain.color, ColorValue::rgb(0, 128, 0));
    }

    #[test]
    fn unsupported_selectors_are_skipped() {
        let sheet = Stylesheet::parse("div > p, a:hover { color: red } .ok { color: red }");
        assert_eq!(sheet.len(), 1);
    }

    #[test]
    fn font_sizes_resolve_against_parent() {
        assert_eq!(parse_font_size("12px", 16.0), Some(12.0));
        assert_eq!(parse_font_size("0.5em", 20.0), Some(10.0));
        assert_eq!(parse_font_size("150%", 10.0), Some(15.0));
        assert_eq!(parse_font_size("9pt", 16.0), Some(12.0));
        assert_eq!(parse_font_size("2rem", 10.0), Some(32.0));
        assert_eq!(parse_font_size("small", 16.0), Some(13.0));
        assert_eq!(parse_font_size("0", 16.0), Some(0.0));
        assert_eq!(parse_font_size("12vw", 16.0), None);
    }

    #[test]
    fn font_shorthand_sets_size() {
        let decls = parse_declarations("font: italic 11px/1.4 Arial, sans-serif");
        let s = ComputedStyle::default().derive(&decls, false);
        assert_eq!(s.font_size_px, 11.0);
    }

    #[test]
    fn hidden_flags() {
        let base = ComputedStyle::default();
        assert!(base.derive(&parse_declarations("display:none"), false).hidden());
        assert!(base.derive(&parse_declarations("visibility: hidden"), false).hidden());
        assert!(base.derive(&parse_declarations("font-size: 0"), false).hidden());
        assert!(base.derive(&[], true).hidden());
        let hidden = base.derive(&parse_declarations("visibility:hidden"), false);
        assert!(!hidden.derive(&parse_declarations("visibility:visible"), false).hidden());
        let none = base.derive(&parse_declarations("display:none"), false);
        assert!(none.derive(&parse_declarations("display:block"), false).hidden());
    }

    #[test]
    fn background_layers_and_images() {
        let base = ComputedStyle::default();
        let gray = base.derive(&parse_declarations("background: #eeeeee no-repeat"), false);
        assert_eq!(gray.effective_bg(), ColorValue::rgb(0xee, 0xee, 0xee));
        let img = gray.derive(&parse_declarations("background-image: url(x.png)"), false);
        assert!(img.bg_image);
        let covered = img.derive(&parse_declarations("background-color: white"), false);
        assert!(!covered.bg_image);
        let translucent = base.derive(&parse_declarations("background-color: rgba(0,0,0,0.5)"), false);
        assert_eq!(translucent.effective_bg(), ColorValue::rgb(128, 128, 128));
    }
}
