//! Blocksworld states, actions, and a STRIPS executor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{AtomError, ExecError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Table,
    Block(String),
}

/// Every block is either resting on a support or held.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlocksState {
    pub on: BTreeMap<String, Support>,
    pub holding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum BlocksAction {
    PickUp(String),
    PutDown(String),
    Stack(String, String),
    Unstack(String, String),
}

/// Goal and initial-state vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BlocksAtom {
    On(String, String),
    OnTable(String),
    Clear(String),
    HandEmpty,
    Holding(String),
}

impl fmt::Display for BlocksAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlocksAction::PickUp(x) => write!(f, "pick up the {x} block"),
            BlocksAction::PutDown(x) => write!(f, "put down the {x} block"),
            BlocksAction::Stack(x, y) => write!(f, "stack the {x} block on top of the {y} block"),
            BlocksAction::Unstack(x, y) => write!(f, "unstack the {x} block from on top of the {y} block"),
        }
    }
}

impl fmt::Display for BlocksAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlocksAtom::On(x, y) => write!(f, "on({x},{y})"),
            BlocksAtom::OnTable(x) => write!(f, "ontable({x})"),
            BlocksAtom::Clear(x) => write!(f, "clear({x})"),
            BlocksAtom::HandEmpty => write!(f, "handempty"),
            BlocksAtom::Holding(x) => write!(f, "holding({x})"),
        }
    }
}

const NAME: &str = r"(?:the\s+)?(?:block\s+)?([a-z0-9_-]+)(?:\s+block)?";

fn action_patterns() -> &'static [(Regex, u8)] {
    static CELL: OnceLock<Vec<(Regex, u8)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let re = |p: String| Regex::new(&p).expect("action regex");
        vec![
            (re(format!(r"^pick\s*up\s+{NAME}$")), 0),
            (re(format!(r"^put\s*down\s+{NAME}$")), 1),
            (re(format!(r"^stack\s+{NAME}\s+on\s+(?:top\s+of\s+)?{NAME}$")), 2),
            (
                re(format!(r"^unstack\s+{NAME}\s+from\s+(?:on\s+)?(?:top\s+of\s+)?{NAME}$")),
                3,
            ),
        ]
    })
}

fn normalise_line(line: &str) -> String {
    line.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches('.')
        .trim()
        .to_lowercase()
}

impl BlocksAction {
    /// Parses one plan line such as `unstack the yellow block from on top of
    /// the blue block`. Case, spacing and a trailing period are ignored.
    pub fn parse(line: &str) -> Option<BlocksAction> {
        let norm = normalise_line(line);
        for (re, kind) in action_patterns() {
            if let Some(c) = re.captures(&norm) {
                let a = c[1].to_string();
                return Some(match kind {
                    0 => BlocksAction::PickUp(a),
                    1 => BlocksAction::PutDown(a),
                    2 => BlocksAction::Stack(a, c[2].to_string()),
                    _ => BlocksAction::Unstack(a, c[2].to_string()),
                });
            }
        }
        None
    }

    pub fn blocks(&self) -> Vec<&str> {
        match self {
            BlocksAction::PickUp(x) | BlocksAction::PutDown(x) => vec![x],
            BlocksAction::Stack(x, y) | BlocksAction::Unstack(x, y) => vec![x, y],
        }
    }
}

impl BlocksAtom {
    /// `on(a,b)`, `ontable(a)`, `clear(a)`, `handempty`, `holding(a)`.
    pub fn parse(text: &str) -> Result<BlocksAtom, AtomError> {
        let (name, args) = split_atom(text)?;
        let bad = || AtomError::Unknown(text.trim().to_string());
        Ok(match (name.as_str(), args.as_slice()) {
            ("on", [x, y]) => BlocksAtom::On(x.clone(), y.clone()),
            ("ontable" | "on-table" | "on_table", [x]) => BlocksAtom::OnTable(x.clone()),
            ("clear", [x]) => BlocksAtom::Clear(x.clone()),
            ("handempty" | "hand-empty" | "hand_empty", []) => BlocksAtom::HandEmpty,
            ("holding", [x]) => BlocksAtom::Holding(x.clone()),
            _ => return Err(bad()),
        })
    }
}

/// Splits `name(a, b)` into a lowercase name and trimmed lowercase args.
pub(crate) fn split_atom(text: &str) -> Result<(String, Vec<String>), AtomError> {
    let t = text.trim();
    let bad = || AtomError::Unknown(t.to_string());
    match t.find('(') {
        None => {
            if t.is_empty() || !t.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_') {
                return Err(bad());
            }
            Ok((t.to_lowercase(), Vec::new()))
        }
        Some(open) => {
            let inner = t[open + 1..].strip_suffix(')').ok_or_else(bad)?;
            let args: Vec<String> = inner.split(',').map(|a| a.trim().to_lowercase()).collect();
            if args.iter().any(String::is_empty) {
                return Err(bad());
            }
            Ok((t[..open].trim().to_lowercase(), args))
        }
    }
}

impl BlocksState {
    /// Builds a state from `on`, `ontable` and `holding` atoms; `clear` and
    /// `handempty` are derived and only checked for consistency.
    pub fn from_atoms(atoms: &[BlocksAtom]) -> Result<BlocksState, AtomError> {
        let mut state = BlocksState {
            on: BTreeMap::new(),
            holding: None,
        };
        let mut place = |block: &str, support: Option<Support>| -> Result<(), AtomError> {
            let taken = state.on.contains_key(block) || state.holding.as_deref() == Some(block);
            if taken {
                return Err(AtomError::Inconsistent(format!("block {block} placed twice")));
            }
            match support {
                Some(s) => {
                    state.on.insert(block.to_string(), s);
                }
                None if state.holding.is_some() => {
                    return Err(AtomError::Inconsistent("holding two blocks".into()));
                }
                None => state.holding = Some(block.to_string()),
            }
            Ok(())
        };
        for atom in atoms {
            match atom {
                BlocksAtom::On(x, y) => place(x, Some(Support::Block(y.clone())))?,
                BlocksAtom::OnTable(x) => place(x, Some(Support::Table))?,
                BlocksAtom::Holding(x) => place(x, None)?,
                BlocksAtom::Clear(_) | BlocksAtom::HandEmpty => {}
            }
        }
        state.validate().map_err(AtomError::Inconsistent)?;
        for atom in atoms {
            if !state.holds(atom) {
                return Err(AtomError::Inconsistent(format!("{atom} contradicts the placement")));
            }
        }
        Ok(state)
    }

    /// Every block mentioned as a support exists, each block is held or
    /// placed, and the on-relation has no cycles.
    pub fn validate(&self) -> Result<(), String> {
        let blocks = self.blocks();
        let mut below: BTreeMap<&str, usize> = BTreeMap::new();
        for (x, s) in &self.on {
            if let Support::Block(y) = s {
                if !blocks.contains(y.as_str()) {
                    return Err(format!("{x} rests on unknown block {y}"));
                }
                if self.holding.as_deref() == Some(y) {
                    return Err(format!("{x} rests on the held block {y}"));
                }
                *below.entry(y).or_default() += 1;
            }
        }
        if let Some((y, _)) = below.iter().find(|(_, n)| **n > 1) {
            return Err(format!("more than one block on {y}"));
        }
        for start in self.on.keys() {
            let mut cur = start.as_str();
            let mut steps = 0;
            while let Some(Support::Block(y)) = self.on.get(cur) {
                cur = y;
                steps += 1;
                if steps > self.on.len() {
                    return Err(format!("cycle through {start}"));
                }
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> BTreeSet<&str> {
        self.on
            .keys()
            .map(String::as_str)
            .chain(self.holding.as_deref())
            .collect()
    }

    pub fn is_clear(&self, block: &str) -> bool {
        self.on.contains_key(block) && !self.on.values().any(|s| matches!(s, Support::Block(b) if b == block))
    }

    pub fn hand_empty(&self) -> bool {
        self.holding.is_none()
    }

    pub fn holds(&self, atom: &BlocksAtom) -> bool {
        match atom {
            BlocksAtom::On(x, y) => self.on.get(x) == Some(&Support::Block(y.clone())),
            BlocksAtom::OnTable(x) => self.on.get(x) == Some(&Support::Table),
            BlocksAtom::Clear(x) => self.is_clear(x),
            BlocksAtom::HandEmpty => self.hand_empty(),
            BlocksAtom::Holding(x) => self.holding.as_deref() == Some(x),
        }
    }

    /// Every true atom, in a stable order.
    pub fn atoms(&self) -> BTreeSet<BlocksAtom> {
        let mut out = BTreeSet::new();
        for (x, s) in &self.on {
            out.insert(match s {
                Support::Table => BlocksAtom::OnTable(x.clone()),
                Support::Block(y) => BlocksAtom::On(x.clone(), y.clone()),
            });
            if self.is_clear(x) {
                out.insert(BlocksAtom::Clear(x.clone()));
            }
        }
        match &self.holding {
            Some(x) => {
                out.insert(BlocksAtom::Holding(x.clone()));
            }
            None => {
                out.insert(BlocksAtom::HandEmpty);
            }
        }
        out
    }

    /// Applies one action atomically; on failure the state is untouched.
    pub fn apply(&mut self, action: &BlocksAction) -> Result<(), String> {
        let blocks = self.blocks();
        if let Some(unknown) = action.blocks().into_iter().find(|b| !blocks.contains(b)) {
            return Err(format!("unknown block {unknown}"));
        }
        match action {
            BlocksAction::PickUp(x) => {
                self.require(self.on.get(x) == Some(&Support::Table), || {
                    format!("the {x} block is not on the table")
                })?;
                self.require(self.is_clear(x), || format!("the {x} block is not clear"))?;
                self.require(self.hand_empty(), || "the hand is not empty".into())?;
                self.on.remove(x);
                self.holding = Some(x.clone());
            }
            BlocksAction::PutDown(x) => {
                self.require(self.holding.as_deref() == Some(x), || {
                    format!("not holding the {x} block")
                })?;
                self.holding = None;
                self.on.insert(x.clone(), Support::Table);
            }
            BlocksAction::Stack(x, y) => {
                self.require(self.holding.as_deref() == Some(x), || {
                    format!("not holding the {x} block")
                })?;
                self.require(self.is_clear(y), || format!("the {y} block is not clear"))?;
                self.holding = None;
                self.on.insert(x.clone(), Support::Block(y.clone()));
            }
            BlocksAction::Unstack(x, y) => {
                self.require(self.on.get(x) == Some(&Support::Block(y.clone())), || {
                    format!("the {x} block is not on top of the {y} block")
                })?;
                self.require(self.is_clear(x), || format!("the {x} block is not clear"))?;
                self.require(self.hand_empty(), || "the hand is not empty".into())?;
                self.on.remove(x);
                self.holding = Some(x.clone());
            }
        }
        Ok(())
    }

    fn require(&self, ok: bool, reason: impl FnOnce() -> String) -> Result<(), String> {
        if ok {
            Ok(())
        } else {
            Err(reason())
        }
    }

    /// Sentence form used by step-by-step traces, blocks in name order.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for b in self.blocks() {
            let pos = match (self.on.get(b), self.holding.as_deref()) {
                (Some(Support::Table), _) => "is on the table".to_string(),
                (Some(Support::Block(y)), _) => format!("is on top of the {y} block"),
                _ => "is in my hand".to_string(),
            };
            let clear = if self.is_clear(b) { "clear" } else { "not clear" };
            parts.push(format!("the {b} block {pos} and {clear}"));
        }
        format!("The current state is: {}.", parts.join(", "))
    }
}

/// Runs a plan from `init`, returning every state including the initial one.
pub fn trace_blocks_plan(init: &BlocksState, plan: &[String]) -> Result<Vec<BlocksState>, ExecError> {
    let mut states = vec![init.clone()];
    let mut cur = init.clone();
    for (step, line) in plan.iter().enumerate() {
        let action = BlocksAction::parse(line).ok_or_else(|| ExecError::UnknownAction {
            step,
            text: line.clone(),
        })?;
        let known = cur.blocks();
        if let Some(b) = action.blocks().into_iter().find(|b| !known.contains(b)) {
            return Err(ExecError::UnknownBlock {
                step,
                block: b.to_string(),
            });
        }
        cur.apply(&action)
            .map_err(|reason| ExecError::PreconditionViolated { step, reason })?;
        states.push(cur.clone());
    }
    Ok(states)
}

pub fn execute_blocks_plan(init: &BlocksState, plan: &[String]) -> Result<BlocksState, ExecError> {
    trace_blocks_plan(init, plan).map(|mut s| s.pop().expect("at least the initial state"))
}

/// Conjunction of goal atoms; an empty goal holds.
pub fn check_blocks_goal(state: &BlocksState, goal: &[BlocksAtom]) -> bool {
    goal.iter().all(|a| state.holds(a))
}

/// One clause of a trace state line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockFact {
    pub block: String,
    /// `None` when the block is in the hand.
    pub support: Option<Support>,
    pub clear: bool,
}

/// Parses `The current state is: the orange block is on the table and not
/// clear, the red block is on top of the orange block and clear, ...`. The
/// `is` before the position may be missing.
pub fn parse_state_line(line: &str) -> Option<Vec<BlockFact>> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(
            r"^the ([a-z0-9_-]+) block (?:is )?(on the table|on top of the ([a-z0-9_-]+) block|in my hand) and (not )?clear$",
        )
        .expect("state regex")
    });
    let norm = normalise_line(line);
    let body = norm.strip_prefix("the current state is:").unwrap_or(&norm).trim();
    let mut out = Vec::new();
    for clause in body.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let c = re.captures(clause)?;
        let support = match &c[2] {
            "on the table" => Some(Support::Table),
            "in my hand" => None,
            _ => Some(Support::Block(c[3].to_string())),
        };
        out.push(BlockFact {
            block: c[1].to_string(),
            support,
            clear: c.get(4).is_none(),
        });
    }
    Some(out)
}

impl BlocksState {
    /// Checks a parsed state line against this state: every block listed
    /// exactly once with the right position and clear flag.
    pub fn agrees_with(&self, facts: &[BlockFact]) -> Result<(), String> {
        let listed: BTreeSet<&str> = facts.iter().map(|f| f.block.as_str()).collect();
        if listed != self.blocks() || listed.len() != facts.len() {
            return Err(format!("line lists {listed:?}, state has {:?}", self.blocks()));
        }
        for f in facts {
            let support = self.on.get(&f.block).cloned();
            if support != f.support {
                return Err(format!(
                    "the {} block: line says {:?}, state has {:?}",
                    f.block, f.support, support
                ));
            }
            if self.is_clear(&f.block) != f.clear {
                return Err(format!("the {} block: clear flag differs", f.block));
            }
        }
        Ok(())
    }
}
