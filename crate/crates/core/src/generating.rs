//! Generating-hypertree checks against a rule library.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hypertree::{HyperTree, NodeId};
use crate::rules::RuleLibrary;
use crate::text::{collapse_whitespace, fold};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: NodeId,
    pub detail: String,
}

/// Per-property findings; empty lists mean the property holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratingReport {
    /// Leaves must carry non-empty text.
    pub leaves: Vec<Violation>,
    /// Expanded nodes must be divisible.
    pub divisibility: Vec<Violation>,
    /// Every branch must be derivable from a library rule.
    pub derivation: Vec<Violation>,
    /// Structure: single parent per node, depth bookkeeping, no ancestor
    /// repeating a descendant's text.
    pub structure: Vec<Violation>,
}

impl GeneratingReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    pub fn violation_count(&self) -> usize {
        self.leaves.len() + self.divisibility.len() + self.derivation.len() + self.structure.len()
    }
}

/// Checks the three generating properties plus structural acyclicity.
/// Diagnostic only: every finding is reported, nothing fails.
pub fn check_generating(tree: &HyperTree, library: &RuleLibrary) -> GeneratingReport {
    let mut report = GeneratingReport::default();

    let mut parents: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for edge in &tree.edges {
        for child in &edge.children {
            parents.entry(*child).or_default().push(edge.parent);
        }
    }
    for (id, node) in &tree.nodes {
        let count = parents.get(id).map_or(0, Vec::len);
        let expected = usize::from(*id != tree.root);
        if count != expected {
            report.structure.push(Violation {
                node: *id,
                detail: format!("appears in {count} child lists, expected {expected}"),
            });
        }
        if let Some(&[parent]) = parents.get(id).map(Vec::as_slice) {
            if let Some(p) = tree.nodes.get(&parent) {
                if p.depth + 1 != node.depth {
                    report.structure.push(Violation {
                        node: *id,
                        detail: format!("depth {} under parent at depth {}", node.depth, p.depth),
                    });
                }
            }
        }
    }
    for edge in &tree.edges {
        if edge.children.is_empty() {
            report.structure.push(Violation {
                node: edge.parent,
                detail: format!("branch {} has no children", edge.branch_index),
            });
        }
        for id in std::iter::once(&edge.parent).chain(&edge.children) {
            if !tree.nodes.contains_key(id) {
                report.structure.push(Violation {
                    node: *id,
                    detail: "edge references a missing node".into(),
                });
            }
        }
    }

    // Ancestor walk with a visited set; catches both structural loops and
    // repeated texts along a path.
    for id in tree.nodes.keys() {
        let mut seen = BTreeSet::from([*id]);
        let own = fold(&tree.nodes[id].text);
        let mut cur = *id;
        while let Some(parent) = parents.get(&cur).and_then(|p| p.first()).copied() {
            if !seen.insert(parent) {
                report.structure.push(Violation {
                    node: *id,
                    detail: "node is its own ancestor".into(),
                });
                break;
            }
            if tree.nodes.get(&parent).is_some_and(|p| fold(&p.text) == own) {
                report.structure.push(Violation {
                    node: *id,
                    detail: format!("repeats the text of ancestor {parent}"),
                });
            }
            cur = parent;
        }
    }

    let expanded: BTreeSet<NodeId> = tree.edges.iter().map(|e| e.parent).collect();
    for (id, node) in &tree.nodes {
        if expanded.contains(id) {
            let divisible = if *id == tree.root {
                library.root_divisible(&node.text)
            } else {
                library.is_divisible(&node.text)
            };
            if !divisible || !node.divisible {
                report.divisibility.push(Violation {
                    node: *id,
                    detail: format!("`{}` is expanded but not divisible", node.text),
                });
            }
        } else if collapse_whitespace(&node.text).is_empty() {
            report.leaves.push(Violation {
                node: *id,
                detail: "leaf has empty text".into(),
            });
        }
    }

    for edge in &tree.edges {
        let Some(parent) = tree.nodes.get(&edge.parent) else {
            continue;
        };
        let parent_text = if edge.parent == tree.root {
            library.root_label(&parent.text)
        } else {
            parent.text.clone()
        };
        let children: Vec<&str> = edge
            .children
            .iter()
            .filter_map(|c| tree.nodes.get(c).map(|n| n.text.as_str()))
            .collect();
        if library.derivation(&parent_text, &children).is_none() {
            report.derivation.push(Violation {
                node: edge.parent,
                detail: format!(
                    "branch {} of `{}` ({}) matches no rule",
                    edge.branch_index,
                    parent.text,
                    children.join("")
                ),
            });
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypertree::{HyperEdge, Node};
    use crate::rules::builtin;

    fn lib() -> RuleLibrary {
        RuleLibrary::parse(builtin::TRAVELPLANNER).unwrap()
    }

    #[test]
    fn constructed_tree_is_clean() {
        let lib = lib();
        let mut t = HyperTree::for_library("[Plan]", &lib).unwrap();
        t.attach_branch(
            t.root,
            &["[Transportation]", "[Accommodation]", "[Attraction]", "[Dining]"],
            "R1",
            None,
            &lib,
        )
        .unwrap();
        let r = check_generating(&t, &lib);
        assert!(r.is_clean(), "{r:?}");
    }

    #[test]
    fn edge_under_leaf_violates_divisibility() {
        let lib = lib();
        let mut t = HyperTree::for_library("[Plan]", &lib).unwrap();
        t.attach_branch(t.root, &["[house rule]"], "R1", None, &lib).unwrap();
        let leaf = NodeId(1);
        t.nodes.insert(
            NodeId(2),
            Node {
                id: NodeId(2),
                text: "[cost]".into(),
                depth: 2,
                divisible: false,
            },
        );
        t.edges.push(HyperEdge {
            parent: leaf,
            children: vec![NodeId(2)],
            rule_id: "forged".into(),
            branch_index: 0,
            confidence: None,
        });
        let r = check_generating(&t, &lib);
        assert_eq!(r.divisibility.len(), 1);
        assert_eq!(r.divisibility[0].node, leaf);
    }

    /// Derivation oracle: every rule is tried independently with its own
    /// head match and per-child body matching, without `rules_for`.
    fn derivable_by_any_rule(lib: &RuleLibrary, parent: &str, children: &[&str]) -> bool {
        lib.rules.iter().any(|r| {
            r.head.matches(parent).is_some() && children.iter().all(|c| r.body.iter().any(|p| p.matches(c).is_some()))
        })
    }

    #[test]
    fn unmatched_children_violate_derivation() {
        let lib = lib();
        let mut t = HyperTree::for_library("[Plan]", &lib).unwrap();
        let children = ["[Transportation]", "[Weather]"];
        assert!(!derivable_by_any_rule(&lib, "[Plan]", &children));
        t.attach_branch(t.root, &children, "R1", None, &lib).unwrap();
        let r = check_generating(&t, &lib);
        assert_eq!(r.derivation.len(), 1);
        assert!(r.divisibility.is_empty());
    }

    #[test]
    fn structural_loop_is_reported() {
        let lib = lib();
        let mut t = HyperTree::for_library("[Plan]", &lib).unwrap();
        t.attach_branch(t.root, &["[Transportation]"], "R1", None, &lib)
            .unwrap();
        // forge: root becomes a child of its own child
        t.edges.push(HyperEdge {
            parent: NodeId(1),
            children: vec![t.root],
            rule_id: "forged".into(),
            branch_index: 0,
            confidence: None,
        });
        let r = check_generating(&t, &lib);
        assert!(r.structure.iter().any(|v| v.detail.contains("own ancestor")), "{r:?}");
    }
}
