//! Hypertrees and hyperchains.
//!
//! A [`HyperTree`] grows from a root by attaching branches: each
//! [`HyperEdge`] connects one parent to an ordered, non-empty set of fresh
//! children produced by one rule instance. A node may carry several
//! alternative branches. A [`HyperChain`] picks exactly one branch at every
//! expanded node it reaches.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rules::RuleLibrary;
use crate::text::{collapse_whitespace, fold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub text: String,
    pub depth: usize,
    pub divisible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub parent: NodeId,
    pub children: Vec<NodeId>,
    pub rule_id: String,
    pub branch_index: usize,
    pub confidence: Option<f64>,
}

/// Guards applied by [`HyperTree::attach_branch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLimits {
    /// Deepest allowed node depth; `None` for unbounded.
    pub max_depth: Option<usize>,
    /// Children allowed in one branch.
    pub max_children: usize,
}

impl Default for TreeLimits {
    fn default() -> Self {
        Self {
            max_depth: None,
            max_children: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("unknown parent node {0}")]
    UnknownParent(NodeId),
    #[error("node {0} is not divisible")]
    ParentNotDivisible(NodeId),
    #[error("child `{child}` repeats the text of ancestor {ancestor}")]
    CycleDetected { child: String, ancestor: NodeId },
    #[error("branch has no children")]
    EmptyBranch,
    #[error("child text is empty")]
    EmptyChild,
    #[error("branch would exceed the depth limit {0}")]
    DepthLimit(usize),
    #[error("branch has {0} children, above the limit {1}")]
    TooManyChildren(usize, usize),
}

/// Decides the divisible flag stamped on new nodes.
pub trait Divisibility {
    fn is_divisible(&self, text: &str) -> bool;
}

impl Divisibility for RuleLibrary {
    fn is_divisible(&self, text: &str) -> bool {
        RuleLibrary::is_divisible(self, text)
    }
}

impl<F: Fn(&str) -> bool> Divisibility for F {
    fn is_divisible(&self, text: &str) -> bool {
        self(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperTree {
    pub root: NodeId,
    #[serde(with = "node_list")]
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: Vec<HyperEdge>,
    #[serde(default, skip_serializing)]
    pub limits: TreeLimits,
}

mod node_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(nodes: &BTreeMap<NodeId, Node>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(nodes.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<NodeId, Node>, D::Error> {
        let list = Vec::<Node>::deserialize(d)?;
        Ok(list.into_iter().map(|n| (n.id, n)).collect())
    }
}

impl HyperTree {
    /// A single-node tree; the root is not divisible.
    pub fn new(query: &str) -> Result<Self, TreeError> {
        Self::with_root(query, false)
    }

    /// A single-node tree whose root is stamped against `library`.
    pub fn for_library(query: &str, library: &RuleLibrary) -> Result<Self, TreeError> {
        Self::with_root(query, library.root_divisible(query))
    }

    pub fn with_root(query: &str, divisible: bool) -> Result<Self, TreeError> {
        let text = query.trim();
        if collapse_whitespace(text).is_empty() {
            return Err(TreeError::EmptyQuery);
        }
        let root = NodeId(0);
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            Node {
                id: root,
                text: text.to_string(),
                depth: 0,
                divisible,
            },
        );
        Ok(Self {
            root,
            nodes,
            edges: Vec::new(),
            limits: TreeLimits::default(),
        })
    }

    pub fn with_limits(mut self, limits: TreeLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn root_node(&self) -> &Node {
        &self.nodes[&self.root]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Outgoing edges of `id`, ordered by branch index.
    pub fn branches(&self, id: NodeId) -> Vec<&HyperEdge> {
        let mut out: Vec<&HyperEdge> = self.edges.iter().filter(|e| e.parent == id).collect();
        out.sort_by_key(|e| e.branch_index);
        out
    }

    pub fn branch_count(&self, id: NodeId) -> usize {
        self.edges.iter().filter(|e| e.parent == id).count()
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.edges.iter().find(|e| e.children.contains(&id)).map(|e| e.parent)
    }

    /// Ancestors of `id` from its parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parent_of(cur) {
            if out.contains(&p) {
                break;
            }
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.values().map(|n| n.depth).max().unwrap_or(0)
    }

    fn next_id(&self) -> NodeId {
        NodeId(self.nodes.keys().next_back().map_or(0, |id| id.0 + 1))
    }

    /// Attaches one branch of fresh children under `parent` and returns its
    /// branch index.
    pub fn attach_branch<S: AsRef<str>>(
        &mut self,
        parent: NodeId,
        child_texts: &[S],
        rule_id: &str,
        confidence: Option<f64>,
        divisibility: &dyn Divisibility,
    ) -> Result<usize, TreeError> {
        let parent_node = self.nodes.get(&parent).ok_or(TreeError::UnknownParent(parent))?;
        if !parent_node.divisible {
            return Err(TreeError::ParentNotDivisible(parent));
        }
        if child_texts.is_empty() {
            return Err(TreeError::EmptyBranch);
        }
        if child_texts.len() > self.limits.max_children {
            return Err(TreeError::TooManyChildren(child_texts.len(), self.limits.max_children));
        }
        let depth = parent_node.depth + 1;
        if let Some(max) = self.limits.max_depth {
            if depth > max {
                return Err(TreeError::DepthLimit(max));
            }
        }
        let mut lineage = vec![parent];
        lineage.extend(self.ancestors(parent));
        let lineage_texts: Vec<(NodeId, String)> = lineage.iter().map(|id| (*id, fold(&self.nodes[id].text))).collect();
        let mut texts = Vec::with_capacity(child_texts.len());
        for child in child_texts {
            let text = child.as_ref().trim();
            if text.is_empty() {
                return Err(TreeError::EmptyChild);
            }
            let folded = fold(text);
            if let Some((ancestor, _)) = lineage_texts.iter().find(|(_, t)| *t == folded) {
                return Err(TreeError::CycleDetected {
                    child: text.to_string(),
                    ancestor: *ancestor,
                });
            }
            texts.push(text.to_string());
        }

        let branch_index = self.branch_count(parent);
        let mut next = self.next_id();
        let mut children = Vec::with_capacity(texts.len());
        for text in texts {
            let id = next;
            next = NodeId(next.0 + 1);
            let divisible = divisibility.is_divisible(&text);
            self.nodes.insert(
                id,
                Node {
                    id,
                    text,
                    depth,
                    divisible,
                },
            );
            children.push(id);
        }
        self.edges.push(HyperEdge {
            parent,
            children,
            rule_id: rule_id.to_string(),
            branch_index,
            confidence,
        });
        Ok(branch_index)
    }

    /// Sets the confidence of an existing branch.
    pub fn set_confidence(&mut self, parent: NodeId, branch_index: usize, confidence: f64) -> bool {
        match self
            .edges
            .iter_mut()
            .find(|e| e.parent == parent && e.branch_index == branch_index)
        {
            Some(e) => {
                e.confidence = Some(confidence);
                true
            }
            None => false,
        }
    }

    pub fn edge(&self, parent: NodeId, branch_index: usize) -> Option<&HyperEdge> {
        self.edges
            .iter()
            .find(|e| e.parent == parent && e.branch_index == branch_index)
    }

    /// Leaves in depth-first, left-to-right order. Alternative branches are
    /// visited in branch order.
    pub fn leaves(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let branches = self.branches(id);
            if branches.is_empty() {
                out.push(&self.nodes[&id]);
                continue;
            }
            for edge in branches.iter().rev() {
                for child in edge.children.iter().rev() {
                    stack.push(*child);
                }
            }
        }
        out
    }

    /// Nodes in depth-first pre-order.
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(&self.nodes[&id]);
            for edge in self.branches(id).iter().rev() {
                for child in edge.children.iter().rev() {
                    stack.push(*child);
                }
            }
        }
        out
    }

    /// Every hyperchain: one branch chosen at each branched node reachable
    /// under the choices above it. Sorted by selection vector.
    pub fn hyperchains(&self) -> Vec<HyperChain> {
        let mut selections: Vec<Selection> = Vec::new();
        enumerate(self, vec![self.root], Selection::default(), &mut selections);
        selections.sort();
        selections
            .into_iter()
            .map(|selection| HyperChain::from_selection(self, selection).expect("enumerated selection is valid"))
            .collect()
    }

    pub fn hyperchain_count(&self) -> usize {
        let mut selections = Vec::new();
        enumerate(self, vec![self.root], Selection::default(), &mut selections);
        selections.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Depth-first enumeration over a frontier of nodes still to resolve.
fn enumerate(tree: &HyperTree, mut frontier: Vec<NodeId>, mut selection: Selection, out: &mut Vec<Selection>) {
    // resolve unbranched nodes in place; fork at branched ones
    while let Some(id) = frontier.pop() {
        let branches = tree.branches(id);
        match branches.len() {
            0 => {}
            1 => {
                selection.0.insert(id, branches[0].branch_index);
                frontier.extend(branches[0].children.iter().rev());
            }
            _ => {
                for edge in branches {
                    let mut sel = selection.clone();
                    sel.0.insert(id, edge.branch_index);
                    let mut f = frontier.clone();
                    f.extend(edge.children.iter().rev());
                    enumerate(tree, f, sel, out);
                }
                return;
            }
        }
    }
    out.push(selection);
}

/// Branch chosen at each expanded node of a hyperchain.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection(pub BTreeMap<NodeId, usize>);

impl Selection {
    /// Selection vector as `(node, branch)` pairs in node order.
    pub fn pairs(&self) -> Vec<(NodeId, usize)> {
        self.0.iter().map(|(k, v)| (*k, *v)).collect()
    }
}

/// A branch-free sub-hypertree of a source tree. Node ids are the source's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperChain {
    pub tree: HyperTree,
    pub selection: Selection,
}

impl HyperChain {
    /// Rebuilds the chain that `selection` picks out of `source`. Fails when
    /// a selected branch does not exist or a reached branched node has no
    /// selection.
    pub fn from_selection(source: &HyperTree, selection: Selection) -> Option<Self> {
        let mut nodes = BTreeMap::new();
        let mut edges = Vec::new();
        let mut stack = vec![source.root];
        while let Some(id) = stack.pop() {
            nodes.insert(id, source.nodes.get(&id)?.clone());
            let branches = source.branches(id);
            if branches.is_empty() {
                continue;
            }
            let chosen = *selection.0.get(&id)?;
            let edge = branches.into_iter().find(|e| e.branch_index == chosen)?;
            stack.extend(edge.children.iter().rev());
            edges.push(edge.clone());
        }
        if selection
            .0
            .keys()
            .any(|k| !nodes.contains_key(k) || edges.iter().all(|e| e.parent != *k))
        {
            return None;
        }
        Some(Self {
            tree: HyperTree {
                root: source.root,
                nodes,
                edges,
                limits: source.limits,
            },
            selection,
        })
    }

    pub fn leaves(&self) -> Vec<&Node> {
        self.tree.leaves()
    }

    /// Leaves that can still be expanded.
    pub fn divisible_leaves(&self) -> Vec<&Node> {
        self.leaves().into_iter().filter(|n| n.divisible).collect()
    }

    /// The most recently attached edge (highest first child id).
    pub fn newest_edge(&self) -> Option<&HyperEdge> {
        self.tree.edges.iter().max_by_key(|e| e.children.first().copied())
    }

    pub fn is_branch_free(&self) -> bool {
        self.tree.nodes.keys().all(|id| self.tree.branch_count(*id) <= 1)
    }
}
