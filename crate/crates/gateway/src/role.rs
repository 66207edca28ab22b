//! Request roles and their strict reply schemas.

use std::fmt;

use serde::{Deserialize, Serialize};

/// What a model call is for. Each role has one reply schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    FilterChains,
    SelectNode,
    RetrieveRules,
    ExpandNode,
    DecideOutline,
    RefineNode,
    SolveSubtask,
    GeneratePlan,
    ScoreConfidence,
}

impl Role {
    pub const ALL: [Role; 9] = [
        Role::FilterChains,
        Role::SelectNode,
        Role::RetrieveRules,
        Role::ExpandNode,
        Role::DecideOutline,
        Role::RefineNode,
        Role::SolveSubtask,
        Role::GeneratePlan,
        Role::ScoreConfidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::FilterChains => "FilterChains",
            Role::SelectNode => "SelectNode",
            Role::RetrieveRules => "RetrieveRules",
            Role::ExpandNode => "ExpandNode",
            Role::DecideOutline => "DecideOutline",
            Role::RefineNode => "RefineNode",
            Role::SolveSubtask => "SolveSubtask",
            Role::GeneratePlan => "GeneratePlan",
            Role::ScoreConfidence => "ScoreConfidence",
        }
    }

    pub fn from_name(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(name))
    }

    /// Identifier of the bundled template for this role.
    pub fn default_template(self) -> &'static str {
        match self {
            Role::FilterChains => "filter_chains",
            Role::SelectNode => "select_node",
            Role::RetrieveRules => "retrieve_rules",
            Role::ExpandNode => "expand_node",
            Role::DecideOutline => "decide_outline",
            Role::RefineNode => "refine_node",
            Role::SolveSubtask => "solve_subtask",
            Role::GeneratePlan => "generate_plan",
            Role::ScoreConfidence => "score_confidence",
        }
    }

    /// Suffix appended to the prompt when a reply failed to parse.
    pub fn format_reminder(self) -> &'static str {
        match self {
            Role::FilterChains | Role::RetrieveRules => {
                "Reply with numbers only, separated by commas, on one line (for example: 1,3)."
            }
            Role::SelectNode | Role::DecideOutline => "Reply with a single number on the first line (for example: 2).",
            Role::ExpandNode => "Reply with one sub-node per line, each wrapped in square brackets, and nothing else.",
            Role::ScoreConfidence => "Reply with a single integer from 0 to 100.",
            Role::RefineNode => "Reply with a non-empty description.",
            Role::SolveSubtask => "Reply with the next reasoning step as plain text.",
            Role::GeneratePlan => "Reply with the final plan only; if you use [PLAN] then close it with [PLAN END].",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A reply parsed according to its role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Payload {
    /// 0-based index (SelectNode, DecideOutline).
    Index(usize),
    /// 0-based indices, deduplicated, reply order kept (FilterChains, RetrieveRules).
    Indices(Vec<usize>),
    /// Bracketed child texts (ExpandNode).
    Children(Vec<String>),
    /// Confidence in [0, 1] (ScoreConfidence).
    Score(f64),
    /// Free text (RefineNode).
    Text(String),
    /// One reasoning step and whether it closes the subtask (SolveSubtask).
    Step { text: String, done: bool },
    /// Plan body with `[PLAN]` delimiters removed (GeneratePlan).
    Plan(String),
}

impl Payload {
    pub fn index(&self) -> Option<usize> {
        match self {
            Payload::Index(i) => Some(*i),
            _ => None,
        }
    }

    pub fn indices(&self) -> Option<&[usize]> {
        match self {
            Payload::Indices(v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> Option<&[String]> {
        match self {
            Payload::Children(v) => Some(v),
            _ => None,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            Payload::Score(s) => Some(*s),
            _ => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            Payload::Text(t) | Payload::Plan(t) => Some(t),
            Payload::Step { text, .. } => Some(text),
            _ => None,
        }
    }
}

/// Phrases that close a subtask.
pub const DONE_MARKERS: [&str; 2] = ["I will submit:", "The subtask is achieved."];

/// Parses a raw reply under the role's schema.
pub fn parse_reply(role: Role, raw: &str) -> Result<Payload, String> {
    match role {
        Role::SelectNode | Role::DecideOutline => parse_index(first_line(raw)).map(Payload::Index),
        Role::FilterChains | Role::RetrieveRules => parse_indices(first_line(raw)).map(Payload::Indices),
        Role::ExpandNode => parse_children(raw).map(Payload::Children),
        Role::ScoreConfidence => parse_score(first_line(raw)).map(Payload::Score),
        Role::RefineNode => non_empty(raw).map(Payload::Text),
        Role::SolveSubtask => non_empty(raw).map(|text| Payload::Step {
            done: DONE_MARKERS.iter().any(|m| text.contains(m)),
            text,
        }),
        Role::GeneratePlan => parse_plan(raw).map(Payload::Plan),
    }
}

fn first_line(raw: &str) -> &str {
    raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("")
}

fn non_empty(raw: &str) -> Result<String, String> {
    let t = raw.trim();
    if t.is_empty() {
        Err("empty reply".into())
    } else {
        Ok(t.to_string())
    }
}

fn parse_index(line: &str) -> Result<usize, String> {
    let token = line.trim_end_matches('.');
    let n: usize = token
        .parse()
        .map_err(|_| format!("expected a single positive integer, got `{line}`"))?;
    if n == 0 {
        return Err("numbering starts at 1".into());
    }
    Ok(n - 1)
}

fn parse_indices(line: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for token in line.split(',').map(str::trim) {
        if token.is_empty() {
            continue;
        }
        let i = parse_index(token)?;
        if !out.contains(&i) {
            out.push(i);
        }
    }
    if out.is_empty() {
        return Err(format!("expected comma-separated integers, got `{line}`"));
    }
    Ok(out)
}

fn parse_children(raw: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for line in raw.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let inner = line
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| format!("line is not a bracketed node: `{line}`"))?;
        if inner.contains('[') || inner.contains(']') || inner.trim().is_empty() {
            return Err(format!("line is not a single bracketed node: `{line}`"));
        }
        out.push(line.to_string());
    }
    if out.is_empty() {
        return Err("no children in reply".into());
    }
    Ok(out)
}

fn parse_score(line: &str) -> Result<f64, String> {
    let token = line.trim_end_matches('%').trim();
    let n: u32 = token
        .parse()
        .map_err(|_| format!("expected an integer from 0 to 100, got `{line}`"))?;
    if n > 100 {
        return Err(format!("score {n} is above 100"));
    }
    Ok(f64::from(n) / 100.0)
}

fn parse_plan(raw: &str) -> Result<String, String> {
    let body = match raw.find("[PLAN]") {
        Some(start) => {
            let rest = &raw[start + "[PLAN]".len()..];
            let end = rest.find("[PLAN END]").ok_or("`[PLAN]` without `[PLAN END]`")?;
            &rest[..end]
        }
        None => raw,
    };
    non_empty(body)
}
