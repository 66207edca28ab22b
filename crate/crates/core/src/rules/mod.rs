//! Rule libraries: the textual `Rules:` / `Divisible Nodes:` /
//! `Leaf Nodes(Example):` format, node-pattern matching, divisibility and
//! rule retrieval.
//!
//! Grammar, line oriented:
//!
//! ```text
//! Rules:
//! [n.] HEAD -> BODY [# comment]          one rule per line
//!      HEAD -> BODY [# comment]          indented: alternative head, same rule number
//! Divisible Nodes:
//! ITEM; ITEM; ... [# comment]
//! Leaf Nodes(Example):
//! ITEM; ITEM; ... [# comment]
//! ```
//!
//! `BODY` is a run of bracket atoms `[..][..]`, a doubled-brace group of
//! atoms `{{[..][..]}}` (indefinite repetition), or a bare placeholder
//! `{{name}}` that refers to a placeholder declaration in one of the node
//! sections. An `ITEM` is a bracket atom or a bare placeholder whose comment
//! names a concrete example (`such as [Dining for A]`). Placeholders are
//! `{{Name}}`, `{name}`, or a capital letter standing alone after a word.

mod parse;
mod pattern;

pub mod builtin;

use serde::{Deserialize, Serialize};

pub use parse::{parse_library, LibraryError};
pub use pattern::{Bindings, NodePattern, PatternError, Segment};

use crate::text::{fold, is_bracketed, unbracket};

/// One rule `head -> body`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    /// `R<n>` in file order; alternative heads on continuation lines get `R<n>.<k>`.
    pub id: String,
    pub head: NodePattern,
    /// Child patterns. For indefinite rules this is a template: children
    /// may repeat any body pattern any number of times.
    pub body: Vec<NodePattern>,
    pub indefinite: bool,
    pub comment: String,
    /// Body exactly as written, kept for rendering.
    pub body_source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleLibrary {
    pub rules: Vec<Rule>,
    pub divisible_patterns: Vec<NodePattern>,
    pub leaf_patterns: Vec<NodePattern>,
}

impl Rule {
    /// Whether a generated child text is an instance of some body pattern.
    ///
    /// A literal body atom also licenses its qualified form: `[cost]`
    /// licenses `[transportation cost]`.
    pub fn licenses_child(&self, child: &str) -> bool {
        if self.body.is_empty() {
            return self.indefinite && is_bracketed(child);
        }
        self.body.iter().any(|p| pattern_licenses(p, child))
    }

    /// Whether `(head, children)` is derivable from this rule.
    ///
    /// Indefinite rules accept any non-empty sequence of licensed children.
    /// Definite rules accept any non-empty selection of their body atoms, in
    /// any order, each atom used at most once.
    pub fn licenses_branch<S: AsRef<str>>(&self, children: &[S]) -> bool {
        if children.is_empty() {
            return false;
        }
        if self.indefinite {
            return children.iter().all(|c| self.licenses_child(c.as_ref()));
        }
        if children.len() > self.body.len() {
            return false;
        }
        let edges: Vec<Vec<usize>> = children
            .iter()
            .map(|c| {
                (0..self.body.len())
                    .filter(|&j| pattern_licenses(&self.body[j], c.as_ref()))
                    .collect()
            })
            .collect();
        perfect_matching(&edges, self.body.len())
    }

    /// Body instantiated with the head's bindings, or `None` when some body
    /// placeholder is not bound by the head (the model has to fill it).
    pub fn instantiate_body(&self, bindings: &Bindings) -> Option<Vec<String>> {
        if self.indefinite || self.body.is_empty() {
            return None;
        }
        self.body.iter().map(|p| p.instantiate(bindings)).collect()
    }

    pub fn render(&self) -> String {
        let mut line = format!("{} -> {}", self.head.raw, self.body_source);
        if !self.comment.is_empty() {
            line.push_str(" # ");
            line.push_str(&self.comment);
        }
        line
    }
}

fn pattern_licenses(pattern: &NodePattern, child: &str) -> bool {
    if pattern.matches(child).is_some() {
        return true;
    }
    match pattern.literal_text() {
        Some(lit) if is_bracketed(&lit) && is_bracketed(child) => {
            let base = fold(unbracket(&lit));
            let qualified = fold(unbracket(child));
            qualified.len() > base.len() && qualified.ends_with(&format!(" {base}"))
        }
        _ => false,
    }
}

/// Kuhn's augmenting-path matching: can every left vertex get a distinct right one?
fn perfect_matching(edges: &[Vec<usize>], right: usize) -> bool {
    fn augment(u: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &edges[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, edges, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..edges.len()).all(|u| augment(u, edges, &mut vec![false; right], &mut owner))
}

impl RuleLibrary {
    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        parse_library(text)
    }

    /// Divisibility of a concrete node text.
    ///
    /// A node is divisible when some divisible pattern matches it and no
    /// leaf pattern matches it more specifically. Nodes matching nothing
    /// are leaves.
    pub fn is_divisible(&self, node_text: &str) -> bool {
        let best = |patterns: &[NodePattern]| {
            patterns
                .iter()
                .filter(|p| p.matches(node_text).is_some())
                .map(NodePattern::specificity)
                .max()
        };
        match (best(&self.divisible_patterns), best(&self.leaf_patterns)) {
            (Some(d), Some(l)) => d >= l,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// Candidate rules for a node, in library order, with head bindings.
    ///
    /// When several heads match, only the most specific ones are kept, so
    /// `[Plan]` is not also treated as a `[{{City}}]`.
    pub fn rules_for(&self, node_text: &str) -> Vec<(&Rule, Bindings)> {
        if !self.is_divisible(node_text) {
            return Vec::new();
        }
        let matched: Vec<(&Rule, Bindings)> = self
            .rules
            .iter()
            .filter_map(|r| r.head.matches(node_text).map(|b| (r, b)))
            .collect();
        let top = matched.iter().map(|(r, _)| r.head.specificity()).max();
        matched
            .into_iter()
            .filter(|(r, _)| Some(r.head.specificity()) == top)
            .collect()
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// First rule that derives `children` from `parent`.
    pub fn derivation<S: AsRef<str>>(&self, parent: &str, children: &[S]) -> Option<&Rule> {
        self.rules_for(parent)
            .into_iter()
            .map(|(r, _)| r)
            .find(|r| r.licenses_branch(children))
    }

    /// Text of the root node: the query itself when it is already a node
    /// atom, otherwise the head of the first rule (`[Plan]`).
    pub fn root_label(&self, query: &str) -> String {
        let query = query.trim();
        if is_bracketed(query) {
            return query.to_string();
        }
        match self.rules.first() {
            Some(r) => r.head.instantiate_with_names(),
            None => query.to_string(),
        }
    }

    /// Divisibility of a root query. Free-text queries stand for the
    /// library's root node.
    pub fn root_divisible(&self, query: &str) -> bool {
        self.is_divisible(&self.root_label(query))
    }

    /// Canonical text form; reparses to an equal library.
    pub fn render(&self) -> String {
        let mut out = String::from("Rules:\n");
        let mut group = 0;
        for rule in &self.rules {
            if rule.id.contains('.') {
                out.push_str("   ");
            } else {
                group += 1;
                out.push_str(&format!("{group}. "));
            }
            out.push_str(&rule.render());
            out.push('\n');
        }
        let section = |out: &mut String, title: &str, patterns: &[NodePattern]| {
            out.push('\n');
            out.push_str(title);
            out.push('\n');
            for p in patterns {
                out.push_str(&p.raw);
                out.push(';');
                if p.raw.starts_with('{') {
                    out.push_str(&format!(" # such as {}", p.matching_source()));
                }
                out.push('\n');
            }
        };
        section(&mut out, "Divisible Nodes:", &self.divisible_patterns);
        section(&mut out, "Leaf Nodes(Example):", &self.leaf_patterns);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }
}
