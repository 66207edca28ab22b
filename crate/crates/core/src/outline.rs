//! Indented-bracket outline text: one node per line, four spaces per level.
//!
//! ```text
//! [Plan]
//!     [Blue block on the table]
//!         [to get the blue block clear]
//! ```

use std::collections::BTreeMap;

use crate::hypertree::{HyperEdge, HyperTree, Node, NodeId, TreeError, TreeLimits};
use crate::rules::RuleLibrary;

const INDENT: &str = "    ";

/// Renders a tree. Nodes with a single branch list their children directly;
/// nodes with alternatives introduce each branch with a `| branch k (rule)`
/// line so the layout stays readable.
pub fn render(tree: &HyperTree) -> String {
    let mut out = String::new();
    render_node(tree, tree.root, 0, &mut out);
    out
}

fn render_node(tree: &HyperTree, id: NodeId, level: usize, out: &mut String) {
    out.push_str(&INDENT.repeat(level));
    out.push_str(&tree.nodes[&id].text);
    out.push('\n');
    let branches = tree.branches(id);
    if branches.len() == 1 {
        for child in &branches[0].children {
            render_node(tree, *child, level + 1, out);
        }
        return;
    }
    for edge in branches {
        out.push_str(&INDENT.repeat(level + 1));
        out.push_str(&format!("| branch {} ({})\n", edge.branch_index, edge.rule_id));
        for child in &edge.children {
            render_node(tree, *child, level + 2, out);
        }
    }
}

/// Drops blank lines and trailing whitespace; lines end with `\n`.
pub fn normalize(text: &str) -> String {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .map(|l| format!("{l}\n"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OutlineError {
    #[error("outline is empty")]
    Empty,
    #[error("line {0}: more than one root")]
    MultipleRoots(usize),
    #[error("line {0}: branch markers are not supported when parsing")]
    BranchMarker(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Parses a branch-free outline. Each node's children form one branch.
///
/// With a library, divisibility is stamped from it and each edge's
/// `rule_id` is the first rule deriving it (`?` when none does). Without
/// one, a node is divisible exactly when it has children.
pub fn parse(text: &str, library: Option<&RuleLibrary>) -> Result<HyperTree, OutlineError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if raw.trim_start().starts_with('|') {
            return Err(OutlineError::BranchMarker(i + 1));
        }
        let width: usize = raw
            .chars()
            .take_while(|c| c.is_whitespace())
            .map(|c| if c == '\t' { 4 } else { 1 })
            .sum();
        lines.push((i + 1, width, raw.trim().to_string()));
    }
    let Some((_, root_width, root_text)) = lines.first().cloned() else {
        return Err(OutlineError::Empty);
    };
    let mut tree = HyperTree::with_root(&root_text, false)?.with_limits(TreeLimits {
        max_depth: None,
        max_children: usize::MAX,
    });
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    // (indent width, node) for the current ancestor path
    let mut path: Vec<(usize, NodeId)> = vec![(root_width, tree.root)];
    for (idx, (line_no, width, text)) in lines.into_iter().enumerate().skip(1) {
        while path.last().is_some_and(|(w, _)| *w >= width) {
            path.pop();
        }
        let Some(&(_, parent)) = path.last() else {
            return Err(OutlineError::MultipleRoots(line_no));
        };
        let id = NodeId(idx as u32);
        let depth = tree.nodes[&parent].depth + 1;
        tree.nodes.insert(
            id,
            Node {
                id,
                text,
                depth,
                divisible: false,
            },
        );
        children.entry(parent).or_default().push(id);
        path.push((width, id));
    }
    for (parent, kids) in children {
        let rule_id = match library {
            Some(lib) => {
                let texts: Vec<&str> = kids.iter().map(|k| tree.nodes[k].text.as_str()).collect();
                lib.derivation(&tree.nodes[&parent].text, &texts)
                    .map_or_else(|| "?".to_string(), |r| r.id.clone())
            }
            None => "outline".to_string(),
        };
        tree.edges.push(HyperEdge {
            parent,
            children: kids,
            rule_id,
            branch_index: 0,
            confidence: None,
        });
    }
    let expanded: Vec<NodeId> = tree.edges.iter().map(|e| e.parent).collect();
    for node in tree.nodes.values_mut() {
        node.divisible = match library {
            Some(lib) if node.id == tree.root => lib.root_divisible(&node.text),
            Some(lib) => lib.is_divisible(&node.text),
            None => expanded.contains(&node.id),
        };
    }
    tree.limits = TreeLimits::default();
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypertree::HyperTree;

    const SMALL: &str = "[Plan]\n    [A]\n        [a1]\n        [a2]\n    [B]\n";

    #[test]
    fn parse_then_render_is_identity() {
        let t = parse(SMALL, None).unwrap();
        assert_eq!(render(&t), SMALL);
        assert_eq!(t.len(), 5);
        assert_eq!(t.edges.len(), 2);
        let leaves: Vec<_> = t.leaves().iter().map(|n| n.text.as_str()).collect();
        assert_eq!(leaves, ["[a1]", "[a2]", "[B]"]);
        assert!(t.nodes[&NodeId(1)].divisible);
        assert!(!t.nodes[&NodeId(4)].divisible);
    }

    #[test]
    fn normalize_strips_trailing_space() {
        assert_eq!(normalize("[A] \n\n    [B]   \n"), "[A]\n    [B]\n");
    }

    #[test]
    fn errors() {
        assert_eq!(parse("  \n", None).unwrap_err(), OutlineError::Empty);
        assert_eq!(parse("[A]\n[B]\n", None).unwrap_err(), OutlineError::MultipleRoots(2));
    }

    #[test]
    fn branched_render_marks_alternatives() {
        let mut t = HyperTree::with_root("[A]", true).unwrap();
        let yes = |_: &str| true;
        t.attach_branch(t.root, &["[B]"], "R1", None, &yes).unwrap();
        t.attach_branch(t.root, &["[C]"], "R2", None, &yes).unwrap();
        assert_eq!(
            render(&t),
            "[A]\n    | branch 0 (R1)\n        [B]\n    | branch 1 (R2)\n        [C]\n"
        );
    }
}
