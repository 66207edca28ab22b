//! Build traces: what each iteration saw, kept, selected and attached.

use htp_core::{Divisibility, HyperChain, HyperTree, NodeId, Selection, TreeError, TreeLimits};
use serde::{Deserialize, Serialize};

use crate::builder::MAX_CHILDREN;
use crate::params::BuilderParams;

/// One branch added to the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub parent: NodeId,
    pub parent_text: String,
    pub rule_id: String,
    pub children: Vec<String>,
    pub branch_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    /// Whether the children came from a model reply.
    pub generated: bool,
}

/// Work done for one kept chain in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    /// Position of the chain in the iteration's canonical list.
    pub chain: usize,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_text: Option<String>,
    /// The selection fell back to the leftmost candidate.
    #[serde(default)]
    pub fallback: bool,
    /// Rule ids retrieved for the selected node.
    pub rules: Vec<String>,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Hyperchains extracted at the start of the iteration.
    pub chains: usize,
    /// Canonical positions of the chains kept by pruning.
    pub kept: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
    pub steps: Vec<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Hyperchains in the final tree.
    pub chains: usize,
    /// Canonical positions offered to the decision.
    pub candidates: Vec<usize>,
    /// Canonical position of the outline.
    pub chosen: usize,
    pub selection: Selection,
    pub model_called: bool,
    pub fallback: bool,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildTrace {
    pub query: String,
    pub root: String,
    pub root_divisible: bool,
    pub params: BuilderParams,
    pub iterations: Vec<IterationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionRecord>,
    /// Deepest node in the final tree.
    #[serde(default)]
    pub tree_depth: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl BuildTrace {
    pub fn new(query: &str, root: &str, root_divisible: bool, params: BuilderParams) -> Self {
        BuildTrace {
            query: query.to_string(),
            root: root.to_string(),
            root_divisible,
            params,
            iterations: Vec::new(),
            decision: None,
            tree_depth: 0,
            warnings: Vec::new(),
        }
    }

    pub fn attachments(&self) -> impl Iterator<Item = &Attachment> {
        self.iterations
            .iter()
            .flat_map(|it| it.steps.iter())
            .flat_map(|s| s.attachments.iter())
    }

    /// Rebuilds the tree by re-attaching every recorded branch in order.
    pub fn replay(&self, divisibility: &dyn Divisibility) -> Result<HyperTree, TreeError> {
        let mut tree = HyperTree::with_root(&self.root, self.root_divisible)?.with_limits(TreeLimits {
            max_depth: Some(self.params.depth),
            max_children: MAX_CHILDREN,
        });
        for a in self.attachments() {
            let index = tree.attach_branch(a.parent, &a.children, &a.rule_id, a.confidence, divisibility)?;
            debug_assert_eq!(index, a.branch_index);
        }
        Ok(tree)
    }

    /// The decided outline over the replayed tree.
    pub fn replay_outline(&self, divisibility: &dyn Divisibility) -> Result<HyperChain, String> {
        let tree = self.replay(divisibility).map_err(|e| e.to_string())?;
        let selection = self.decision.as_ref().map(|d| d.selection.clone()).unwrap_or_default();
        HyperChain::from_selection(&tree, selection)
            .ok_or_else(|| "decision does not fit the replayed tree".to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per iteration plus the decision.
    pub fn summary(&self) -> String {
        let mut out = format!("query: {}\nroot: {}\n", self.query, self.root);
        out.push_str(&format!(
            "{:>4} {:>6} {:>8} {:>9} {:>8}  selections\n",
            "iter", "chains", "kept", "expanded", "branches"
        ));
        for it in &self.iterations {
            let kept = it
                .kept
                .iter()
                .map(|k| (k + 1).to_string())
                .collect::<Vec<_>>()
                .join(",");
            let expanded = it.steps.iter().filter(|s| s.selected.is_some()).count();
            let branches: usize = it.steps.iter().map(|s| s.attachments.len()).sum();
            let selections = it
                .steps
                .iter()
                .filter_map(|s| s.selected_text.as_deref())
                .collect::<Vec<_>>()
                .join(" | ");
            out.push_str(&format!(
                "{:>4} {:>6} {:>8} {:>9} {:>8}  {}\n",
                it.iteration, it.chains, kept, expanded, branches, selections
            ));
        }
        if let Some(d) = &self.decision {
            out.push_str(&format!(
                "decision: chain {} of {}{}{}\n",
                d.chosen + 1,
                d.chains,
                if d.model_called { " (model)" } else { "" },
                if d.fallback { " (fallback)" } else { "" }
            ));
        }
        out.push_str(&format!("tree depth: {}\n", self.tree_depth));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}
