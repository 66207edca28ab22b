use std::collections::BTreeSet;

use htp_core::rules::builtin;
use htp_core::{check_generating, HyperChain, HyperTree, NodeId, RuleLibrary, Selection, TreeError};
use proptest::prelude::*;

/// Tree shaped by a list of (node pick, child count) steps. Every node is
/// divisible; a node gets a new branch only while the tree stays within
/// `max_branched` branched nodes of at most `max_branches` branches each.
fn grow(steps: &[(usize, usize)], max_branched: usize, max_branches: usize) -> HyperTree {
    let yes = |_: &str| true;
    let mut tree = HyperTree::with_root("[root]", true).unwrap();
    let mut counter = 0;
    for &(pick, kids) in steps {
        let ids: Vec<NodeId> = tree.nodes.keys().copied().collect();
        let target = ids[pick % ids.len()];
        let count = tree.branch_count(target);
        let branched = tree.nodes.keys().filter(|id| tree.branch_count(**id) > 1).count();
        if count >= max_branches || (count == 1 && branched >= max_branched) {
            continue;
        }
        let texts: Vec<String> = (0..kids)
            .map(|_| {
                counter += 1;
                format!("[s{counter}]")
            })
            .collect();
        tree.attach_branch(target, &texts, "r", None, &yes).unwrap();
    }
    tree
}

/// Brute force: walk the full cartesian product of branch choices over all
/// branched nodes, project each vector onto the nodes it actually reaches,
/// and collect the distinct projections.
fn brute_force_selections(tree: &HyperTree) -> BTreeSet<Selection> {
    let branched: Vec<(NodeId, usize)> = tree
        .nodes
        .keys()
        .map(|id| (*id, tree.branch_count(*id)))
        .filter(|(_, c)| *c > 0)
        .collect();
    let total: usize = branched.iter().map(|(_, c)| *c).product();
    let mut out = BTreeSet::new();
    for mut code in 0..total {
        let mut choice = std::collections::BTreeMap::new();
        for (id, c) in &branched {
            choice.insert(*id, code % c);
            code /= c;
        }
        let mut sel = Selection::default();
        let mut stack = vec![tree.root];
        while let Some(id) = stack.pop() {
            if let Some(&b) = choice.get(&id) {
                sel.0.insert(id, b);
                let edge = tree
                    .edges
                    .iter()
                    .find(|e| e.parent == id && e.branch_index == b)
                    .unwrap();
                stack.extend(edge.children.iter().copied());
            }
        }
        out.insert(sel);
    }
    out
}

fn steps() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..64, 1usize..4), 0..14)
}

proptest! {
    #[test]
    fn enumeration_matches_brute_force(steps in steps()) {
        let tree = grow(&steps, 5, 4);
        let chains = tree.hyperchains();
        let oracle = brute_force_selections(&tree);
        prop_assert_eq!(chains.len(), oracle.len());
        let ours: BTreeSet<Selection> = chains.iter().map(|c| c.selection.clone()).collect();
        prop_assert_eq!(&ours, &oracle);
        // canonical order
        let sels: Vec<_> = chains.iter().map(|c| c.selection.clone()).collect();
        let mut sorted = sels.clone();
        sorted.sort();
        prop_assert_eq!(sels, sorted);
    }

    #[test]
    fn chains_are_branch_free_and_replayable(steps in steps()) {
        let tree = grow(&steps, 5, 4);
        for chain in tree.hyperchains() {
            prop_assert!(chain.is_branch_free());
            let again = HyperChain::from_selection(&tree, chain.selection.clone()).unwrap();
            prop_assert_eq!(&again, &chain);
            for (id, node) in &chain.tree.nodes {
                prop_assert_eq!(node, &tree.nodes[id]);
            }
        }
    }

    #[test]
    fn adding_a_branch_never_decreases_chain_count(steps in steps(), pick in 0usize..64) {
        let mut tree = grow(&steps, 8, 8);
        let before = tree.hyperchain_count();
        let ids: Vec<NodeId> = tree.nodes.keys().copied().collect();
        let target = ids[pick % ids.len()];
        tree.attach_branch(target, &["[extra]"], "r", None, &|_: &str| true).unwrap();
        prop_assert!(tree.hyperchain_count() >= before);
    }

    #[test]
    fn leaves_survive_json(steps in steps()) {
        let tree = grow(&steps, 5, 4);
        let back = HyperTree::from_json(&tree.to_json()).unwrap();
        let a: Vec<_> = tree.leaves().iter().map(|n| n.id).collect();
        let b: Vec<_> = back.leaves().iter().map(|n| n.id).collect();
        prop_assert_eq!(a, b);
    }

    /// Random rule-driven construction with rejected attempts mixed in.
    #[test]
    fn constructed_trees_stay_generating(ops in prop::collection::vec((0usize..256, 0usize..4, 0usize..3), 1..40)) {
        let lib = RuleLibrary::parse(builtin::BLOCKSWORLD).unwrap();
        let mut tree = HyperTree::for_library("[Plan]", &lib).unwrap();
        let colours = ["red", "blue", "green", "orange"];
        for (pick, colour, kind) in ops {
            let ids: Vec<NodeId> = tree.nodes.keys().copied().collect();
            let target = ids[pick % ids.len()];
            let text = tree.nodes[&target].text.clone();
            let c = colours[colour];
            let d = colours[(colour + 1) % 4];
            let candidate: Vec<String> = match kind {
                0 => vec![format!("[{c} block on the table]"), format!("[{d} block on top of {c} block]")],
                1 => vec![format!("[to get the {c} block clear]"), "[to get hand empty]".into()],
                _ => vec![text.clone()],
            };
            let before = tree.clone();
            let derivable = lib.derivation(&lib.root_label(&text), &candidate).is_some()
                || (target != tree.root && lib.derivation(&text, &candidate).is_some());
            if !derivable {
                continue;
            }
            match tree.attach_branch(target, &candidate, "r", None, &lib) {
                Ok(_) => {}
                Err(TreeError::ParentNotDivisible(_)) | Err(TreeError::CycleDetected { .. }) => {
                    prop_assert_eq!(&tree, &before);
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
            let report = check_generating(&tree, &lib);
            prop_assert!(report.is_clean(), "{:?}", report);
        }
    }
}
