use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::collapse_whitespace;

/// One piece of a node pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Segment {
    Literal(String),
    Placeholder(String),
}

/// A bracketed node template such as `[{{Block}} on the table]`.
///
/// `raw` is the text as written in the library. The segments are the
/// matching form, which differs from `raw` only for placeholder-only
/// declarations that name a concrete example (see the library parser).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePattern {
    pub segments: Vec<Segment>,
    pub raw: String,
}

/// Placeholder captures in pattern order. Names may repeat
/// (`[{{Block}} on top of {{Block}}]`), so this is a list, not a map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bindings(pub Vec<(String, String)>);

impl Bindings {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// First capture bound to `name`.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    /// All captures bound to `name`, in pattern order.
    pub fn all(&self, name: &str) -> Vec<&str> {
        self.0
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("unbalanced braces in `{0}`")]
    UnbalancedBraces(String),
    #[error("empty placeholder name in `{0}`")]
    EmptyPlaceholder(String),
    #[error("empty pattern")]
    Empty,
}

impl NodePattern {
    /// Parses a pattern whose raw text is also its matching form.
    pub fn parse(source: &str) -> Result<Self, PatternError> {
        Self::with_matching_form(source, source)
    }

    /// Parses `matching` into segments while keeping `raw` as the source text.
    pub fn with_matching_form(raw: &str, matching: &str) -> Result<Self, PatternError> {
        let collapsed = collapse_whitespace(matching);
        if collapsed.is_empty() {
            return Err(PatternError::Empty);
        }
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = collapsed.as_str();
        while let Some(c) = rest.chars().next() {
            if c == '{' {
                let (name, tail) = if let Some(after) = rest.strip_prefix("{{") {
                    let end = after
                        .find("}}")
                        .ok_or_else(|| PatternError::UnbalancedBraces(raw.to_string()))?;
                    (&after[..end], &after[end + 2..])
                } else {
                    let after = &rest[1..];
                    let end = after
                        .find('}')
                        .ok_or_else(|| PatternError::UnbalancedBraces(raw.to_string()))?;
                    (&after[..end], &after[end + 1..])
                };
                let name = name.trim();
                if name.is_empty() {
                    return Err(PatternError::EmptyPlaceholder(raw.to_string()));
                }
                if name.contains(['{', '}']) {
                    return Err(PatternError::UnbalancedBraces(raw.to_string()));
                }
                push_literal(&mut segments, std::mem::take(&mut literal));
                segments.push(Segment::Placeholder(name.to_string()));
                rest = tail;
            } else if c == '}' {
                return Err(PatternError::UnbalancedBraces(raw.to_string()));
            } else {
                literal.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
        push_literal(&mut segments, literal);
        Ok(Self {
            segments,
            raw: raw.trim().to_string(),
        })
    }

    /// Number of literal characters; higher means more specific.
    pub fn specificity(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => l.chars().count(),
                Segment::Placeholder(_) => 0,
            })
            .sum()
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Placeholder(p) => Some(p.as_str()),
            Segment::Literal(_) => None,
        })
    }

    pub fn is_literal(&self) -> bool {
        self.placeholders().next().is_none()
    }

    /// Text of a placeholder-free pattern.
    pub fn literal_text(&self) -> Option<String> {
        if !self.is_literal() {
            return None;
        }
        Some(
            self.segments
                .iter()
                .map(|s| match s {
                    Segment::Literal(l) => l.as_str(),
                    Segment::Placeholder(_) => "",
                })
                .collect(),
        )
    }

    /// Unifies the pattern with `text`, leftmost-shortest.
    ///
    /// Literals compare case-insensitively after whitespace collapsing;
    /// every placeholder captures a non-empty, bracket-free substring.
    pub fn matches(&self, text: &str) -> Option<Bindings> {
        let text: Vec<char> = collapse_whitespace(text).chars().collect();
        let mut captures = Vec::new();
        if unify(&self.segments, &text, 0, &mut captures) {
            Some(Bindings(captures))
        } else {
            None
        }
    }

    /// Fills placeholders from `bindings`. The i-th occurrence of a name takes
    /// the i-th capture of that name (falling back to the last one). Returns
    /// `None` when some placeholder has no capture at all.
    pub fn instantiate(&self, bindings: &Bindings) -> Option<String> {
        let mut seen: Vec<(&str, usize)> = Vec::new();
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => out.push_str(l),
                Segment::Placeholder(name) => {
                    let values = bindings.all(name);
                    let idx = match seen.iter_mut().find(|(n, _)| n == name) {
                        Some((_, count)) => {
                            *count += 1;
                            *count
                        }
                        None => {
                            seen.push((name, 0));
                            0
                        }
                    };
                    let value = values.get(idx).or_else(|| values.last())?;
                    out.push_str(value);
                }
            }
        }
        Some(out)
    }

    /// Fills every placeholder with its own name, e.g. `[Block on the table]`.
    pub fn instantiate_with_names(&self) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) | Segment::Placeholder(l) => l.as_str(),
            })
            .collect()
    }

    /// The matching form written back with doubled-brace placeholders.
    pub fn matching_source(&self) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => l.clone(),
                Segment::Placeholder(p) => format!("{{{{{p}}}}}"),
            })
            .collect()
    }
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Splits a literal run, turning a standalone capital letter that follows a
/// word (`[Accommodation for A]`, `[transportation from A to B]`) into a
/// placeholder named after the letter. A bare `[A]` stays literal.
fn push_literal(segments: &mut Vec<Segment>, literal: String) {
    if literal.is_empty() {
        return;
    }
    let chars: Vec<char> = literal.chars().collect();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let standalone = c.is_ascii_uppercase()
            && i > 0
            && chars[i - 1] == ' '
            && matches!(chars.get(i + 1), None | Some(' ') | Some(']'));
        if standalone {
            if !current.is_empty() {
                segments.push(Segment::Literal(std::mem::take(&mut current)));
            }
            segments.push(Segment::Placeholder(c.to_string()));
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        segments.push(Segment::Literal(current));
    }
}

fn chars_eq(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn unify(segments: &[Segment], text: &[char], pos: usize, captures: &mut Vec<(String, String)>) -> bool {
    let Some((first, rest)) = segments.split_first() else {
        return pos == text.len();
    };
    match first {
        Segment::Literal(lit) => {
            let mut p = pos;
            for lc in lit.chars() {
                match text.get(p) {
                    Some(&tc) if chars_eq(lc, tc) => p += 1,
                    _ => return false,
                }
            }
            unify(rest, text, p, captures)
        }
        Segment::Placeholder(name) => {
            let mut end = pos;
            while end < text.len() {
                let c = text[end];
                if c == '[' || c == ']' {
                    break;
                }
                end += 1;
                let captured: String = text[pos..end].iter().collect();
                if captured.trim().is_empty() {
                    continue;
                }
                captures.push((name.clone(), captured));
                if unify(rest, text, end, captures) {
                    return true;
                }
                captures.pop();
            }
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> NodePattern {
        NodePattern::parse(s).unwrap()
    }

    /// Independent matcher: walks characters with an explicit stack of
    /// (segment, position) choice points instead of recursion.
    fn walk_match(p: &NodePattern, text: &str) -> Option<Vec<String>> {
        let text: Vec<char> = collapse_whitespace(text).to_lowercase().chars().collect();
        let segs: Vec<(bool, Vec<char>)> = p
            .segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => (true, l.to_lowercase().chars().collect()),
                Segment::Placeholder(_) => (false, Vec::new()),
            })
            .collect();
        // stack entries: (segment index, text position, captures so far)
        type Frame = (usize, usize, Vec<(usize, usize)>);
        let mut stack: Vec<Frame> = vec![(0, 0, Vec::new())];
        while let Some((si, pos, caps)) = stack.pop() {
            if si == segs.len() {
                if pos == text.len() {
                    return Some(caps.iter().map(|&(a, b)| text[a..b].iter().collect()).collect());
                }
                continue;
            }
            let (is_lit, lit) = &segs[si];
            if *is_lit {
                if text.len() >= pos + lit.len() && text[pos..pos + lit.len()] == lit[..] {
                    stack.push((si + 1, pos + lit.len(), caps));
                }
            } else {
                let mut options = Vec::new();
                let mut end = pos;
                while end < text.len() && text[end] != '[' && text[end] != ']' {
                    end += 1;
                    if text[pos..end].iter().any(|c| !c.is_whitespace()) {
                        let mut c = caps.clone();
                        c.push((pos, end));
                        options.push((si + 1, end, c));
                    }
                }
                // shortest must be explored first, so push it last
                options.reverse();
                stack.extend(options);
            }
        }
        None
    }

    #[test]
    fn block_on_table_binds_block() {
        let b = pat("[{{Block}} on the table]")
            .matches("[Blue block on the table]")
            .unwrap();
        assert_eq!(b.get("Block"), Some("Blue block"));
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn exact_literal_gives_empty_bindings() {
        let b = pat("[Plan]").matches("[Plan]").unwrap();
        assert!(b.is_empty());
        assert!(pat("[Plan]").matches("[plan]").is_some());
        assert!(pat("[Plan]").matches("[Plans]").is_none());
    }

    #[test]
    fn accommodation_pattern_rejects_dining() {
        let p = pat("[Accommodation for {{City}}]");
        assert!(p.matches("[Dining for Nashville]").is_none());
        assert_eq!(walk_match(&p, "[Dining for Nashville]"), None);
        assert_eq!(
            p.matches("[Accommodation for Nashville]").unwrap().get("City"),
            Some("Nashville")
        );
    }

    #[test]
    fn single_capitals_are_placeholders() {
        let p = pat("[transportation from A to B]");
        assert_eq!(p.placeholders().collect::<Vec<_>>(), vec!["A", "B"]);
        let b = p
            .matches("[Transportation from City 1 in Georgia to City 2 in Georgia]")
            .unwrap();
        assert_eq!(b.get("A"), Some("City 1 in Georgia"));
        assert_eq!(b.get("B"), Some("City 2 in Georgia"));
        assert!(pat("[Plan]").is_literal());
        assert!(pat("[to get hand empty]").is_literal());
        assert!(pat("[A]").is_literal());
    }

    #[test]
    fn single_brace_placeholder() {
        let p = pat("[from day {{i}} to day {j}]");
        assert_eq!(p.placeholders().collect::<Vec<_>>(), vec!["i", "j"]);
        let b = p.matches("[from day 1 to day 3]").unwrap();
        assert_eq!(b.all("i"), vec!["1"]);
        assert_eq!(b.get("j"), Some("3"));
    }

    #[test]
    fn repeated_names_bind_positionally() {
        let p = pat("[{{Block}} on top of {{Block}}]");
        let b = p.matches("[Orange block on top of Blue block]").unwrap();
        assert_eq!(b.all("Block"), vec!["Orange block", "Blue block"]);
        assert_eq!(p.instantiate(&b).unwrap(), "[Orange block on top of Blue block]");
    }

    #[test]
    fn captures_never_span_brackets() {
        assert!(pat("[{{City}}]").matches("[A][B]").is_none());
        assert!(pat("[{{City}}]").matches("[]").is_none());
        assert!(pat("[{{City}}]").matches("[ ]").is_none());
    }

    #[test]
    fn unbalanced_braces_error() {
        assert!(matches!(
            NodePattern::parse("[{{Block} on]"),
            Err(PatternError::UnbalancedBraces(_))
        ));
        assert!(matches!(
            NodePattern::parse("[a}]"),
            Err(PatternError::UnbalancedBraces(_))
        ));
        assert!(matches!(
            NodePattern::parse("[{{ }}]"),
            Err(PatternError::EmptyPlaceholder(_))
        ));
    }

    #[test]
    fn specificity_counts_literals() {
        assert_eq!(pat("[Plan]").specificity(), 6);
        assert_eq!(pat("[{{City}}]").specificity(), 2);
    }

    #[test]
    fn matchers_agree_on_fixture_table() {
        let patterns = [
            "[{{Block}} on the table]",
            "[{{Block}} on top of {{Block}}]",
            "[to get {{Block}} clear]",
            "[to get {{Block}} on the table]",
            "[Dining for {{City}}]",
            "[{{City}}]",
            "[from day {{i}} to day {j}]",
            "[{{Object}} Craves {{Object}}]",
        ];
        let texts = [
            "[Blue block on the table]",
            "[to get the blue block on the table]",
            "[Orange block on top of Blue block]",
            "[to get the red block clear]",
            "[Dining for Knoxville]",
            "[Dining for City 1 in Georgia]",
            "[Valencia]",
            "[from day 20 to day 21]",
            "[Object d Craves Object b]",
            "[to get object d craves object b]",
            "[a on top of b on top of c]",
        ];
        for p in &patterns {
            let p = pat(p);
            for t in &texts {
                let ours = p
                    .matches(t)
                    .map(|b| b.values().map(|v| v.to_lowercase()).collect::<Vec<_>>());
                assert_eq!(ours, walk_match(&p, t), "pattern {} on {}", p.raw, t);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word() -> impl Strategy<Value = String> {
            "[a-z]{1,6}( [a-z]{1,6}){0,2}"
        }

        proptest! {
            #[test]
            fn bindings_substitute_back(a in word(), b in word(), lit in "(on top of|on the table|craves|to)") {
                let p = NodePattern::parse(&format!("[{{{{X}}}} {lit} {{{{Y}}}}]")).unwrap();
                let text = format!("[{a} {lit} {b}]");
                if let Some(bind) = p.matches(&text) {
                    let back = p.instantiate(&bind).unwrap();
                    prop_assert_eq!(crate::text::fold(&back), crate::text::fold(&text));
                } else {
                    // the only way to miss is impossible here: the text was built from the pattern
                    prop_assert!(false, "built text did not match");
                }
            }

            #[test]
            fn agrees_with_walk_matcher(a in word(), b in word()) {
                let p = NodePattern::parse("[{{X}} on top of {{Y}}]").unwrap();
                let text = format!("[{a} on top of {b}]");
                let ours = p.matches(&text).map(|bd| bd.values().map(|v| v.to_lowercase()).collect::<Vec<_>>());
                prop_assert_eq!(ours, walk_match(&p, &text));
            }
        }
    }
}
