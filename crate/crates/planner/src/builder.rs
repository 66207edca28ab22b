//! Top-down outline construction: extract hyperchains, prune them to the
//! width, select one divisible leaf per kept chain, expand it with up to P
//! rules, repeat, then decide the outline.

use std::collections::BTreeSet;

use htp_core::{
    check_generating, outline, Bindings, HyperChain, HyperTree, Node, NodeId, Rule, RuleLibrary, TreeLimits,
};
use htp_gateway::{Gateway, GatewayError, ModelRequest, Payload, Role};

use crate::params::{BuilderParams, ExpansionMode, Pruning, RuleSampling};
use crate::trace::{Attachment, BuildTrace, ChainStep, DecisionRecord, IterationRecord};

/// Children allowed in one branch.
pub const MAX_CHILDREN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("chain has no divisible leaf")]
    NoDivisibleLeaf,
    #[error("`{child}` under `{node}` matches no body pattern of rule {rule}")]
    PatternViolation { node: String, rule: String, child: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl BuildError {
    /// The backend could not be reached or the transcript ran out.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, BuildError::Gateway(e) if e.is_unavailable())
    }
}

/// A failed build with everything recorded up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct BuildFailure {
    pub error: BuildError,
    pub trace: Box<BuildTrace>,
}

#[derive(Debug, Clone)]
pub struct BuildResult {
    pub tree: HyperTree,
    pub outline: HyperChain,
    pub trace: BuildTrace,
}

impl BuildResult {
    /// The outline in indented-bracket text.
    pub fn outline_text(&self) -> String {
        outline::render(&self.outline.tree)
    }
}

/// Chains numbered from 1, each rendered as an indented outline.
pub fn render_chains(chains: &[&HyperChain]) -> String {
    chains
        .iter()
        .enumerate()
        .map(|(i, c)| format!("Candidate {}:\n{}", i + 1, outline::render(&c.tree)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn numbered<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn index_below(n: usize) -> impl Fn(&Payload) -> Result<(), String> {
    move |p| match p.index() {
        Some(i) if i < n => Ok(()),
        Some(i) => Err(format!("{} is not between 1 and {n}", i + 1)),
        None => Err("expected an index".into()),
    }
}

fn indices_below(n: usize) -> impl Fn(&Payload) -> Result<(), String> {
    move |p| match p.indices() {
        Some(v) if v.iter().all(|&i| i < n) => Ok(()),
        Some(_) => Err(format!("numbers must lie between 1 and {n}")),
        None => Err("expected indices".into()),
    }
}

/// Soft failure: the model kept answering in the wrong shape.
fn is_parse_failure(e: &GatewayError) -> bool {
    matches!(e, GatewayError::ParseFailure { .. })
}

/// Chains kept by a pruning strategy, as canonical positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFilter {
    pub kept: Vec<usize>,
    /// Newest-branch confidence per chain, for `Probability`.
    pub scores: Vec<f64>,
    /// The model reply was unusable and the first chains were kept.
    pub fallback: bool,
}

/// Cuts `chains` down to at most `n` chains per the strategy.
pub fn select_chains(
    gateway: &Gateway,
    query: &str,
    chains: &[HyperChain],
    strategy: Pruning,
) -> Result<ChainFilter, GatewayError> {
    let n = strategy.n();
    let first_n = || (0..chains.len().min(n)).collect::<Vec<_>>();
    if chains.len() <= n {
        return Ok(ChainFilter {
            kept: first_n(),
            scores: Vec::new(),
            fallback: false,
        });
    }
    match strategy {
        Pruning::Width(_) => Ok(ChainFilter {
            kept: first_n(),
            scores: Vec::new(),
            fallback: false,
        }),
        Pruning::Probability(_) => {
            let mut scores = Vec::with_capacity(chains.len());
            for chain in chains {
                scores.push(branch_confidence(gateway, query, chain)?);
            }
            let mut order: Vec<usize> = (0..chains.len()).collect();
            // stable: ties keep canonical order
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            let mut kept: Vec<usize> = order.into_iter().take(n).collect();
            kept.sort_unstable();
            Ok(ChainFilter {
                kept,
                scores,
                fallback: false,
            })
        }
        Pruning::LlmGuided(_) => {
            let refs: Vec<&HyperChain> = chains.iter().collect();
            let request = ModelRequest::new(Role::FilterChains)
                .slot("query", query)
                .slot("chains", render_chains(&refs))
                .slot("keep", n.to_string());
            match gateway.complete_validated(&request, indices_below(chains.len())) {
                Ok(c) => {
                    let mut kept: Vec<usize> = c.parsed.indices().unwrap_or_default().iter().copied().take(n).collect();
                    kept.sort_unstable();
                    Ok(ChainFilter {
                        kept,
                        scores: Vec::new(),
                        fallback: false,
                    })
                }
                Err(e) if is_parse_failure(&e) => Ok(ChainFilter {
                    kept: first_n(),
                    scores: Vec::new(),
                    fallback: true,
                }),
                Err(e) => Err(e),
            }
        }
    }
}

/// Confidence of a chain's newest branch: the stored value, else a
/// ScoreConfidence request. Unusable replies score 0.
pub fn branch_confidence(gateway: &Gateway, query: &str, chain: &HyperChain) -> Result<f64, GatewayError> {
    let Some(edge) = chain.newest_edge() else {
        return Ok(0.0);
    };
    if let Some(c) = edge.confidence {
        return Ok(c);
    }
    let text = |id: &NodeId| chain.tree.nodes[id].text.clone();
    let branch = format!(
        "{} -> {}",
        text(&edge.parent),
        edge.children.iter().map(text).collect::<Vec<_>>().join(" ")
    );
    let request = ModelRequest::new(Role::ScoreConfidence)
        .slot("query", query)
        .slot("chain", outline::render(&chain.tree))
        .slot("branch", branch);
    match gateway.complete(&request) {
        Ok(c) => Ok(c.parsed.score().unwrap_or(0.0)),
        Err(e) if is_parse_failure(&e) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Picks the leaf to expand. A single candidate is taken without asking;
/// an unusable reply falls back to the leftmost candidate. Returns the
/// node and whether the fallback was used.
pub fn select_node(
    gateway: &Gateway,
    query: &str,
    chain: &HyperChain,
    candidates: &[&Node],
) -> Result<(NodeId, bool), BuildError> {
    match candidates {
        [] => Err(BuildError::NoDivisibleLeaf),
        [only] => Ok((only.id, false)),
        _ => {
            let texts: Vec<&str> = candidates.iter().map(|n| n.text.as_str()).collect();
            let request = ModelRequest::new(Role::SelectNode)
                .slot("query", query)
                .slot("chain", outline::render(&chain.tree))
                .slot("candidates", numbered(&texts));
            match gateway.complete_validated(&request, index_below(candidates.len())) {
                Ok(c) => Ok((candidates[c.parsed.index().unwrap_or(0)].id, false)),
                Err(e) if is_parse_failure(&e) => Ok((candidates[0].id, true)),
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Up to `count` rules applicable to `node_text`.
pub fn retrieve_rules<'a>(
    gateway: &Gateway,
    query: &str,
    library: &'a RuleLibrary,
    node_text: &str,
    count: usize,
    sampling: RuleSampling,
) -> Result<Vec<(&'a Rule, Bindings)>, GatewayError> {
    let mut rules = library.rules_for(node_text);
    if rules.len() <= count || sampling == RuleSampling::LibraryOrder {
        rules.truncate(count);
        return Ok(rules);
    }
    let listed: Vec<String> = rules.iter().map(|(r, _)| r.render()).collect();
    let request = ModelRequest::new(Role::RetrieveRules)
        .slot("query", query)
        .slot("node", node_text)
        .slot("rules", numbered(&listed))
        .slot("count", count.to_string());
    let order: Vec<usize> = match gateway.complete_validated(&request, indices_below(rules.len())) {
        Ok(c) => c
            .parsed
            .indices()
            .unwrap_or_default()
            .iter()
            .copied()
            .take(count)
            .collect(),
        Err(e) if is_parse_failure(&e) => (0..count).collect(),
        Err(e) => return Err(e),
    };
    Ok(order.into_iter().map(|i| rules[i].clone()).collect())
}

/// Children for one rule instance. Returns the texts and whether a model
/// produced them.
pub fn expand_node(
    gateway: &Gateway,
    query: &str,
    chain: &HyperChain,
    node_text: &str,
    rule: &Rule,
    bindings: &Bindings,
    mode: ExpansionMode,
) -> Result<(Vec<String>, bool), BuildError> {
    if mode == ExpansionMode::Instantiate {
        if let Some(children) = rule.instantiate_body(bindings) {
            return Ok((children, false));
        }
    }
    let request = ModelRequest::new(Role::ExpandNode)
        .slot("query", query)
        .slot("chain", outline::render(&chain.tree))
        .slot("node", node_text)
        .slot("rule", rule.render());
    let validate = |p: &Payload| {
        let children = p.children().unwrap_or_default();
        if children.len() > MAX_CHILDREN {
            return Err(format!("at most {MAX_CHILDREN} sub-nodes are allowed"));
        }
        if rule.licenses_branch(children) {
            Ok(())
        } else {
            Err(format!("sub-nodes do not fit the rule {}", rule.render()))
        }
    };
    match gateway.complete_validated(&request, validate) {
        Ok(c) => Ok((c.parsed.children().unwrap_or_default().to_vec(), true)),
        Err(GatewayError::ParseFailure {
            role,
            attempts,
            reason,
            raw,
        }) => {
            if let Ok(Payload::Children(children)) = htp_gateway::parse_reply(Role::ExpandNode, &raw) {
                let child = children
                    .iter()
                    .find(|c| !rule.licenses_child(c))
                    .unwrap_or(&children[0])
                    .clone();
                return Err(BuildError::PatternViolation {
                    node: node_text.to_string(),
                    rule: rule.id.clone(),
                    child,
                });
            }
            Err(GatewayError::ParseFailure {
                role,
                attempts,
                reason,
                raw,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Picks the outline among the candidate chains (canonical positions into
/// `chains`). One candidate is returned without a model call; an unusable
/// reply falls back to the first candidate.
pub fn decide_outline(
    gateway: &Gateway,
    query: &str,
    chains: &[HyperChain],
    candidates: &[usize],
) -> Result<DecisionRecord, GatewayError> {
    let record = |chosen: usize, model_called, fallback, rationale: String| DecisionRecord {
        chains: chains.len(),
        candidates: candidates.to_vec(),
        chosen,
        selection: chains[chosen].selection.clone(),
        model_called,
        fallback,
        rationale,
    };
    if candidates.len() <= 1 {
        return Ok(record(
            candidates.first().copied().unwrap_or(0),
            false,
            false,
            String::new(),
        ));
    }
    let refs: Vec<&HyperChain> = candidates.iter().map(|&i| &chains[i]).collect();
    let request = ModelRequest::new(Role::DecideOutline)
        .slot("query", query)
        .slot("chains", render_chains(&refs));
    match gateway.complete_validated(&request, index_below(candidates.len())) {
        Ok(c) => {
            let rationale = c
                .raw
                .lines()
                .map(str::trim)
                .skip_while(|l| l.is_empty())
                .skip(1)
                .collect::<Vec<_>>()
                .join("\n")
                .trim()
                .to_string();
            Ok(record(
                candidates[c.parsed.index().unwrap_or(0)],
                true,
                false,
                rationale,
            ))
        }
        Err(e) if is_parse_failure(&e) => Ok(record(candidates[0], true, true, String::new())),
        Err(e) => Err(e),
    }
}

struct Builder<'a> {
    library: &'a RuleLibrary,
    query: &'a str,
    gateway: &'a Gateway,
    params: BuilderParams,
    tree: HyperTree,
    trace: BuildTrace,
}

impl Builder<'_> {
    fn iterate(&mut self, iteration: usize) -> Result<bool, BuildError> {
        let chains = self.tree.hyperchains();
        let filter = if chains.len() > self.params.width {
            select_chains(self.gateway, self.query, &chains, self.params.pruning)?
        } else {
            ChainFilter {
                kept: (0..chains.len()).collect(),
                scores: Vec::new(),
                fallback: false,
            }
        };
        if filter.fallback {
            self.trace.warnings.push(format!(
                "iteration {iteration}: chain filter reply unusable, kept the first chains"
            ));
        }
        self.trace.iterations.push(IterationRecord {
            iteration,
            chains: chains.len(),
            kept: filter.kept.clone(),
            scores: filter.scores,
            steps: Vec::new(),
        });
        let mut expanded: BTreeSet<NodeId> = BTreeSet::new();
        let mut progressed = false;
        for &ci in &filter.kept {
            let chain = &chains[ci];
            let candidates: Vec<&Node> = chain
                .divisible_leaves()
                .into_iter()
                .filter(|n| !expanded.contains(&n.id))
                .collect();
            let mut step = ChainStep {
                chain: ci,
                candidates: candidates.iter().map(|n| n.text.clone()).collect(),
                selected: None,
                selected_text: None,
                fallback: false,
                rules: Vec::new(),
                attachments: Vec::new(),
            };
            if candidates.is_empty() {
                self.push_step(step);
                continue;
            }
            let (node, fallback) = match select_node(self.gateway, self.query, chain, &candidates) {
                Ok(v) => v,
                Err(e) => {
                    self.push_step(step);
                    return Err(e);
                }
            };
            let node_text = self.tree.nodes[&node].text.clone();
            expanded.insert(node);
            progressed = true;
            step.selected = Some(node);
            step.selected_text = Some(node_text.clone());
            step.fallback = fallback;
            let rules = match retrieve_rules(
                self.gateway,
                self.query,
                self.library,
                &node_text,
                self.params.rule_sample,
                self.params.rule_sampling,
            ) {
                Ok(r) => r,
                Err(e) => {
                    self.push_step(step);
                    return Err(e.into());
                }
            };
            step.rules = rules.iter().map(|(r, _)| r.id.clone()).collect();
            for (rule, bindings) in rules {
                let expansion = expand_node(
                    self.gateway,
                    self.query,
                    chain,
                    &node_text,
                    rule,
                    &bindings,
                    self.params.expansion,
                );
                let (children, generated) = match expansion {
                    Ok(v) => v,
                    Err(
                        e @ (BuildError::PatternViolation { .. }
                        | BuildError::Gateway(GatewayError::ParseFailure { .. })),
                    ) => {
                        self.trace
                            .warnings
                            .push(format!("iteration {iteration}: {node_text} with rule {}: {e}", rule.id));
                        continue;
                    }
                    Err(e) => {
                        self.push_step(step);
                        return Err(e);
                    }
                };
                match self.tree.attach_branch(node, &children, &rule.id, None, self.library) {
                    Ok(branch_index) => step.attachments.push(Attachment {
                        parent: node,
                        parent_text: node_text.clone(),
                        rule_id: rule.id.clone(),
                        children,
                        branch_index,
                        confidence: None,
                        generated,
                    }),
                    Err(e) => self
                        .trace
                        .warnings
                        .push(format!("iteration {iteration}: {node_text} with rule {}: {e}", rule.id)),
                }
            }
            self.push_step(step);
        }
        let report = check_generating(&self.tree, self.library);
        if !report.is_clean() {
            self.trace.warnings.push(format!(
                "iteration {iteration}: tree is not generating ({} violations)",
                report.violation_count()
            ));
        }
        Ok(progressed)
    }

    fn push_step(&mut self, step: ChainStep) {
        self.trace
            .iterations
            .last_mut()
            .expect("iteration record exists")
            .steps
            .push(step);
    }

    fn decide(&mut self) -> Result<HyperChain, BuildError> {
        let chains = self.tree.hyperchains();
        let candidates = if chains.len() > self.params.width {
            let filter = select_chains(self.gateway, self.query, &chains, self.params.pruning)?;
            if filter.fallback {
                self.trace
                    .warnings
                    .push("decision: chain filter reply unusable, kept the first chains".into());
            }
            filter.kept
        } else {
            (0..chains.len()).collect()
        };
        let decision = decide_outline(self.gateway, self.query, &chains, &candidates)?;
        if decision.fallback {
            self.trace
                .warnings
                .push("decision: reply unusable, took the first candidate".into());
        }
        let outline = chains[decision.chosen].clone();
        self.trace.decision = Some(decision);
        Ok(outline)
    }

    fn run(&mut self) -> Result<HyperChain, BuildError> {
        if !self.tree.root_node().divisible {
            self.trace
                .warnings
                .push("no divisible pattern matches the query; the outline is the root alone".into());
        } else {
            for d in 1..=self.params.depth {
                if !self.iterate(d)? {
                    break;
                }
            }
        }
        let outline = self.decide()?;
        self.trace.tree_depth = self.tree.max_depth();
        Ok(outline)
    }
}

/// Builds a hypertree for `query` and decides its outline.
pub fn build_outline(
    library: &RuleLibrary,
    query: &str,
    gateway: &Gateway,
    params: BuilderParams,
) -> Result<BuildResult, BuildFailure> {
    let root = library.root_label(query);
    let root_divisible = library.root_divisible(query);
    let mut trace = BuildTrace::new(query, &root, root_divisible, params);
    let fail = |error, trace: BuildTrace| BuildFailure {
        error,
        trace: Box::new(trace),
    };
    if query.trim().is_empty() {
        return Err(fail(BuildError::EmptyQuery, trace));
    }
    if let Err(e) = params.validate() {
        return Err(fail(BuildError::InvalidParams(e), trace));
    }
    let tree = match HyperTree::with_root(&root, root_divisible) {
        Ok(t) => t.with_limits(TreeLimits {
            max_depth: Some(params.depth),
            max_children: MAX_CHILDREN,
        }),
        Err(_) => {
            trace.root = String::new();
            return Err(fail(BuildError::EmptyQuery, trace));
        }
    };
    let mut builder = Builder {
        library,
        query,
        gateway,
        params,
        tree,
        trace,
    };
    match builder.run() {
        Ok(outline) => Ok(BuildResult {
            tree: builder.tree,
            outline,
            trace: builder.trace,
        }),
        Err(error) => {
            builder.trace.tree_depth = builder.tree.max_depth();
            Err(fail(error, builder.trace))
        }
    }
}
