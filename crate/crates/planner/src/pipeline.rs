//! Self-guided planning over a decided outline, then final plan generation.

use htp_core::{outline, HyperChain, NodeId, RuleLibrary};
use htp_eval::{plan_actions, BlocksAction, KnowledgeBase, MysteryAction, PlanFormat, TravelPlan, TripItinerary};
use htp_gateway::{Gateway, GatewayError, ModelRequest, Payload, Role};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Solving steps allowed per leaf.
    pub step_budget: usize,
    /// Size cap for the knowledge excerpt in each prompt.
    pub knowledge_chars: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            step_budget: 30,
            knowledge_chars: 6000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub node: NodeId,
    pub text: String,
    pub refinement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSolution {
    pub node: NodeId,
    pub text: String,
    /// Ancestor texts below the root, then the leaf.
    pub path: Vec<String>,
    /// Reasoning steps in order; the scratch growth under this leaf.
    pub steps: Vec<String>,
    /// What the last step submitted, or the whole last step.
    pub answer: String,
    /// The step budget ran out or the model stopped answering.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningOutcome {
    pub query: String,
    pub outline: String,
    pub refinements: Vec<Refinement>,
    /// One entry per outline leaf, in leaf order.
    pub solutions: Vec<LeafSolution>,
}

impl PlanningOutcome {
    pub fn failed_leaves(&self) -> Vec<&LeafSolution> {
        self.solutions.iter().filter(|s| s.failed).collect()
    }

    /// The outline with each refined node's notes beneath it.
    pub fn enriched_outline(&self) -> String {
        enriched(&self.outline, &self.refinements)
    }

    /// Text handed to plan generation.
    pub fn render(&self) -> String {
        let mut out = format!("Outline:\n{}\nSubtask results:\n", self.enriched_outline());
        for s in &self.solutions {
            let status = if s.failed { "UNSOLVED" } else { "solved" };
            out.push_str(&format!("{} ({status})\n", s.path.join(" > ")));
            for step in &s.steps {
                for line in step.lines() {
                    out.push_str(&format!("    {line}\n"));
                }
            }
        }
        out
    }
}

fn enriched(outline_text: &str, refinements: &[Refinement]) -> String {
    let mut out = String::new();
    let mut pending = refinements.iter().peekable();
    for line in outline_text.lines() {
        out.push_str(line);
        out.push('\n');
        let indent = &line[..line.len() - line.trim_start().len()];
        if let Some(r) = pending.peek() {
            if line.trim() == r.text {
                for note in r.refinement.lines().filter(|l| !l.trim().is_empty()) {
                    out.push_str(&format!("{indent}  > {}\n", note.trim()));
                }
                pending.next();
            }
        }
    }
    out
}

/// Placeholder values bound by any library pattern matching `text`.
fn bound_values(library: &RuleLibrary, text: &str) -> Vec<String> {
    let heads = library.rules.iter().map(|r| &r.head);
    let mut out: Vec<String> = Vec::new();
    for p in heads.chain(&library.divisible_patterns).chain(&library.leaf_patterns) {
        if let Some(b) = p.matches(text) {
            for v in b.values() {
                let v = v.trim().to_string();
                if !v.is_empty() && !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Knowledge records mentioning values bound along the node's path; the
/// whole knowledge base under the cap when nothing is bound. Empty without
/// knowledge.
fn knowledge_for(
    library: &RuleLibrary,
    chain: &HyperChain,
    node: NodeId,
    kb: Option<&KnowledgeBase>,
    cap: usize,
) -> String {
    let Some(kb) = kb.filter(|k| !k.is_empty()) else {
        return String::new();
    };
    let mut path = chain.tree.ancestors(node);
    path.insert(0, node);
    let mut tokens: Vec<String> = Vec::new();
    for id in path {
        for v in bound_values(library, &chain.tree.nodes[&id].text) {
            if !tokens.contains(&v) {
                tokens.push(v);
            }
        }
    }
    let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
    let excerpt = kb.excerpt(&refs, cap);
    if excerpt.is_empty() && !refs.is_empty() {
        kb.excerpt(&[], cap)
    } else {
        excerpt
    }
}

fn path_texts(chain: &HyperChain, node: NodeId) -> Vec<String> {
    let mut ids = chain.tree.ancestors(node);
    ids.reverse();
    ids.push(node);
    ids.into_iter()
        .filter(|id| *id != chain.tree.root)
        .map(|id| chain.tree.nodes[&id].text.clone())
        .collect()
}

fn submitted(step: &str) -> String {
    match step.find("I will submit:") {
        Some(at) => step[at + "I will submit:".len()..].trim().to_string(),
        None => step.trim().to_string(),
    }
}

fn solve_leaf(
    gateway: &Gateway,
    query: &str,
    outline_text: &str,
    knowledge: String,
    path: Vec<String>,
    node: NodeId,
    budget: usize,
) -> Result<LeafSolution, GatewayError> {
    let text = path.last().cloned().unwrap_or_default();
    let mut steps: Vec<String> = Vec::new();
    let mut done = false;
    for _ in 0..budget {
        let progress = if steps.is_empty() {
            "(none)".to_string()
        } else {
            steps.join("\n")
        };
        let request = ModelRequest::new(Role::SolveSubtask)
            .slot("query", query)
            .slot("outline", outline_text)
            .slot("knowledge", knowledge.as_str())
            .slot("subtask", path.join(" > "))
            .slot("progress", progress);
        match gateway.complete(&request) {
            Ok(c) => {
                let Payload::Step { text, done: finished } = c.parsed else {
                    break;
                };
                steps.push(text);
                if finished {
                    done = true;
                    break;
                }
            }
            Err(e @ GatewayError::ParseFailure { .. }) => {
                steps.push(format!("(no usable step: {e})"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let answer = if done {
        steps.last().map(|s| submitted(s)).unwrap_or_default()
    } else {
        String::new()
    };
    Ok(LeafSolution {
        node,
        text,
        path,
        steps,
        answer,
        failed: !done,
    })
}

/// Refines every non-leaf node of the outline with knowledge, then solves
/// each leaf step by step. Refinements and leaves run concurrently; results
/// keep outline order. Failed leaves are flagged, not fatal.
pub fn self_guided_plan(
    gateway: &Gateway,
    query: &str,
    library: &RuleLibrary,
    outline_chain: &HyperChain,
    kb: Option<&KnowledgeBase>,
    params: PipelineParams,
) -> Result<PlanningOutcome, GatewayError> {
    let outline_text = outline::render(&outline_chain.tree);
    let inner: Vec<NodeId> = outline_chain
        .tree
        .preorder()
        .into_iter()
        .filter(|n| outline_chain.tree.branch_count(n.id) > 0)
        .map(|n| n.id)
        .collect();
    let refinements: Vec<Refinement> = inner
        .par_iter()
        .map(|&id| {
            let text = outline_chain.tree.nodes[&id].text.clone();
            let request = ModelRequest::new(Role::RefineNode)
                .slot("query", query)
                .slot("outline", outline_text.as_str())
                .slot(
                    "knowledge",
                    knowledge_for(library, outline_chain, id, kb, params.knowledge_chars),
                )
                .slot("node", text.as_str());
            let refinement = match gateway.complete(&request) {
                Ok(c) => c.parsed.text().unwrap_or_default().to_string(),
                Err(GatewayError::ParseFailure { .. }) => String::new(),
                Err(e) => return Err(e),
            };
            Ok(Refinement {
                node: id,
                text,
                refinement,
            })
        })
        .collect::<Result<_, GatewayError>>()?;
    let enriched_text = enriched(&outline_text, &refinements);
    let leaves: Vec<NodeId> = outline_chain.leaves().into_iter().map(|n| n.id).collect();
    let solutions: Vec<LeafSolution> = leaves
        .par_iter()
        .map(|&id| {
            solve_leaf(
                gateway,
                query,
                &enriched_text,
                knowledge_for(library, outline_chain, id, kb, params.knowledge_chars),
                path_texts(outline_chain, id),
                id,
                params.step_budget,
            )
        })
        .collect::<Result<_, GatewayError>>()?;
    Ok(PlanningOutcome {
        query: query.to_string(),
        outline: outline_text,
        refinements,
        solutions,
    })
}

/// Parsed form of a final plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", content = "plan")]
pub enum StructuredPlan {
    TravelPlannerDays(TravelPlan),
    BlocksPlan(Vec<String>),
    TripPlan(TripItinerary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPlan {
    pub format: PlanFormat,
    pub delivered: bool,
    /// Canonical text when delivered, else the last raw reply.
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<StructuredPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Parses plan text under a format, returning canonical text and the
/// structured form.
pub fn parse_final(format: PlanFormat, text: &str) -> Result<(String, StructuredPlan), String> {
    match format {
        PlanFormat::BlocksPlan => {
            let actions = plan_actions(text);
            if actions.is_empty() {
                return Err("plan has no actions".into());
            }
            if let Some(bad) = actions
                .iter()
                .find(|a| BlocksAction::parse(a).is_none() && MysteryAction::parse(a).is_none())
            {
                return Err(format!("`{bad}` is not an action"));
            }
            let body = format!("[PLAN]\n{}\n[PLAN END]\n", actions.join("\n"));
            Ok((body, StructuredPlan::BlocksPlan(actions)))
        }
        PlanFormat::TripPlan => {
            let it = TripItinerary::parse(text).map_err(|e| e.to_string())?;
            Ok((format!("{}\n", text.trim()), StructuredPlan::TripPlan(it)))
        }
        PlanFormat::TravelPlannerDays => {
            let plan = TravelPlan::parse(text).map_err(|e| e.to_string())?;
            Ok((format!("{}\n", text.trim()), StructuredPlan::TravelPlannerDays(plan)))
        }
    }
}

/// One GeneratePlan request (re-prompted per the gateway's retry limit).
/// A reply that never parses yields an undelivered plan.
pub fn generate_plan(
    gateway: &Gateway,
    query: &str,
    outcome: &PlanningOutcome,
    format: PlanFormat,
) -> Result<FinalPlan, GatewayError> {
    let request = ModelRequest::new(Role::GeneratePlan)
        .slot("query", query)
        .slot("outcome", outcome.render())
        .slot("format", format.instructions());
    let validate = |p: &Payload| parse_final(format, p.text().unwrap_or_default()).map(|_| ());
    match gateway.complete_validated(&request, validate) {
        Ok(c) => {
            let (text, structured) =
                parse_final(format, c.parsed.text().unwrap_or_default()).expect("validated reply parses");
            Ok(FinalPlan {
                format,
                delivered: true,
                text,
                structured: Some(structured),
                failure: None,
            })
        }
        Err(GatewayError::ParseFailure { reason, raw, .. }) => Ok(FinalPlan {
            format,
            delivered: false,
            text: raw,
            structured: None,
            failure: Some(reason),
        }),
        Err(e) => Err(e),
    }
}
