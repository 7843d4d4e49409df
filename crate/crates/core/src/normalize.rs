//! Text normalization used at extraction time and for phrase matching.

use unicode_normalization::UnicodeNormalization;

/// Collapses every run of Unicode whitespace to a single ASCII space and trims.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch);
        }
    }
    out
}

/// NFKC followed by whitespace collapsing. Case is preserved.
pub fn normalize_display(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    collapse_whitespace(&nfkc)
}

/// Matching form: NFKC, Unicode default case folding, whitespace collapsed, trimmed.
///
/// Idempotent: `normalize_text(&normalize_text(s)) == normalize_text(s)`.
pub fn normalize_text(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    let folded = caseless::default_case_fold_str(&nfkc);
    // Folding can leave non-NFKC sequences behind (e.g. after ligature expansion).
    let renorm: String = folded.nfkc().collect();
    collapse_whitespace(&renorm)
}
