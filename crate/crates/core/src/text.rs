//! Text normalization shared by node identity checks and pattern matching.

/// Trims and collapses every run of whitespace into a single space.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Case-folded, whitespace-collapsed form used for text identity.
pub fn fold(text: &str) -> String {
    collapse_whitespace(text).to_lowercase()
}

/// True when the text is a single bracketed atom such as `[Plan]`.
pub fn is_bracketed(text: &str) -> bool {
    let t = text.trim();
    t.len() >= 2 && t.starts_with('[') && t.ends_with(']') && t[1..t.len() - 1].find(['[', ']']).is_none()
}

/// Strips the surrounding brackets of an atom, if present.
pub fn unbracket(text: &str) -> &str {
    let t = text.trim();
    if is_bracketed(t) {
        t[1..t.len() - 1].trim()
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_and_fold() {
        assert_eq!(collapse_whitespace("  a \t b\n c "), "a b c");
        assert_eq!(fold(" [Blue  Block] "), "[blue block]");
    }

    #[test]
    fn bracket_detection() {
        assert!(is_bracketed("[Plan]"));
        assert!(is_bracketed(" [to get hand empty] "));
        assert!(!is_bracketed("[A][B]"));
        assert!(!is_bracketed("plan a trip"));
        assert_eq!(unbracket("[ Taxi ]"), "Taxi");
        assert_eq!(unbracket("Taxi"), "Taxi");
    }
}
