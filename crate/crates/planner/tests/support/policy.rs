//! A scripted model that steers the builder towards a target outline and
//! answers the remaining roles with fixed replies. Used to exercise the
//! planner and to record transcripts.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use htp_gateway::{BackendCall, FnBackend, Role};

#[derive(Debug, Clone, Default)]
pub struct Policy {
    /// Node text to the children the model writes for it.
    expansions: HashMap<String, Vec<String>>,
    /// Subtask-path fragment to the solving reply, first match wins.
    solutions: Vec<(String, String)>,
    plan: String,
    decide: usize,
    scores: Vec<(String, u32)>,
    keep: Option<String>,
}

fn indent(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

impl Policy {
    /// Learns each node's children from an indented outline.
    pub fn from_outline(outline: &str) -> Self {
        let mut policy = Policy {
            decide: 1,
            ..Policy::default()
        };
        let lines: Vec<&str> = outline.lines().filter(|l| !l.trim().is_empty()).collect();
        for (i, line) in lines.iter().enumerate() {
            let depth = indent(line);
            let Some(first) = lines.get(i + 1).filter(|n| indent(n) > depth) else {
                continue;
            };
            let child_depth = indent(first);
            let children: Vec<String> = lines[i + 1..]
                .iter()
                .take_while(|n| indent(n) > depth)
                .filter(|n| indent(n) == child_depth)
                .map(|n| n.trim().to_string())
                .collect();
            if !children.is_empty() {
                policy.expansions.entry(line.trim().to_string()).or_insert(children);
            }
        }
        policy
    }

    /// Uses the steps beneath each bracketed label of a trace as the
    /// solution for leaves with that text.
    pub fn with_trace(mut self, trace: &str) -> Self {
        let mut current: Option<String> = None;
        let mut steps: Vec<String> = Vec::new();
        let flush = |label: Option<String>, steps: &mut Vec<String>, out: &mut Vec<(String, String)>| {
            if let Some(l) = label {
                let mut body = steps.join("\n");
                if !body.contains("The subtask is achieved.") && !body.contains("I will submit:") {
                    body.push_str("\nThe subtask is achieved.");
                }
                out.push((l, body));
            }
            steps.clear();
        };
        for line in trace.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with('[') && line.ends_with(']') {
                flush(current.take(), &mut steps, &mut self.solutions);
                if line != "[Plan]" {
                    current = Some(line.to_string());
                }
            } else if current.is_some() {
                steps.push(line.to_string());
            }
        }
        flush(current, &mut steps, &mut self.solutions);
        self
    }

    pub fn with_solution(mut self, path_fragment: &str, reply: &str) -> Self {
        self.solutions.push((path_fragment.to_string(), reply.to_string()));
        self
    }

    pub fn with_expansion(mut self, node: &str, children: &[&str]) -> Self {
        self.expansions
            .insert(node.to_string(), children.iter().map(|c| c.to_string()).collect());
        self
    }

    pub fn with_plan(mut self, plan: &str) -> Self {
        self.plan = plan.to_string();
        self
    }

    pub fn with_decision(mut self, n: usize) -> Self {
        self.decide = n;
        self
    }

    /// Confidence for branches whose rendering contains `fragment`.
    pub fn with_score(mut self, fragment: &str, score: u32) -> Self {
        self.scores.push((fragment.to_string(), score));
        self
    }

    pub fn with_filter_reply(mut self, reply: &str) -> Self {
        self.keep = Some(reply.to_string());
        self
    }

    pub fn reply(&self, call: &BackendCall<'_>) -> String {
        let slot = |name: &str| call.request.slots.get(name).cloned().unwrap_or_default();
        match call.request.role {
            Role::SelectNode => {
                let candidates = slot("candidates");
                let pick = candidates
                    .lines()
                    .position(|l| {
                        let text = l.split_once(". ").map_or(l, |(_, t)| t);
                        self.expansions.contains_key(text)
                    })
                    .unwrap_or(0);
                (pick + 1).to_string()
            }
            Role::ExpandNode => match self.expansions.get(&slot("node")) {
                Some(children) => children.join("\n"),
                None => "[unknown]".into(),
            },
            Role::FilterChains => self.keep.clone().unwrap_or_else(|| {
                let n: usize = slot("keep").parse().unwrap_or(1);
                (1..=n).map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            }),
            Role::ScoreConfidence => {
                let branch = slot("branch");
                self.scores
                    .iter()
                    .find(|(f, _)| branch.contains(f.as_str()))
                    .map_or(50, |(_, s)| *s)
                    .to_string()
            }
            Role::DecideOutline => format!("{}\nIt covers every requirement.", self.decide),
            Role::RetrieveRules => "1".into(),
            Role::RefineNode => format!("{} covers its listed sub-parts.", slot("node")),
            Role::SolveSubtask => {
                let path = slot("subtask");
                let leaf = path.rsplit(" > ").next().unwrap_or_default().to_string();
                self.solutions
                    .iter()
                    .find(|(k, _)| *k == leaf)
                    .or_else(|| self.solutions.iter().find(|(k, _)| path.contains(k.as_str())))
                    .map_or_else(|| "The subtask is achieved.".to_string(), |(_, v)| v.clone())
            }
            Role::GeneratePlan => self.plan.clone(),
        }
    }

    pub fn backend(self, model: &str) -> Arc<FnBackend> {
        Arc::new(FnBackend::new(model, move |call| Ok(self.reply(call))))
    }
}
