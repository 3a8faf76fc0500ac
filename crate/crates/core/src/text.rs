//! Term and tag normalization shared by the lexical graph, the taxonomy,
//! and record ingestion.

use unicode_normalization::UnicodeNormalization;

/// Normalizes a raw tag or term: Unicode NFKC, lowercased, all whitespace
/// removed. This is the photo-tag convention, so "Street Art" and
/// "streetart" collapse to the same surface.
pub fn normalize_term(raw: &str) -> String {
    raw.nfkc()
        .flat_map(char::to_lowercase)
        .filter(|c| !c.is_whitespace())
        .collect()
}

/// Turns a display label into a slug candidate: lowercased, whitespace runs
/// replaced by a single underscore. Used to resolve category labels against
/// concept-graph node ids.
pub fn slugify(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    let mut pending_sep = false;
    for c in label.trim().chars() {
        if c.is_whitespace() {
            pending_sep = !out.is_empty();
        } else {
            if pending_sep {
                out.push('_');
                pending_sep = false;
            }
            out.extend(c.to_lowercase());
        }
    }
    out
}
