//! Mystery Blocksworld: obfuscated predicates over objects with four
//! actions (attack, succumb, overcome, feast).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::blocks::split_atom;
use crate::error::{AtomError, ExecError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MysteryFact {
    Province(String),
    Planet(String),
    Pain(String),
    /// First object craves the second.
    Craves(String, String),
    Harmony,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum MysteryAction {
    Attack(String),
    Succumb(String),
    /// Overcome X from Y.
    Overcome(String, String),
    /// Feast X from Y.
    Feast(String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MysteryState {
    pub objects: BTreeSet<String>,
    pub province: BTreeSet<String>,
    pub planet: BTreeSet<String>,
    pub craves: BTreeMap<String, String>,
    pub harmony: bool,
    pub pain: BTreeSet<String>,
}

impl fmt::Display for MysteryFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MysteryFact::Province(x) => write!(f, "province({x})"),
            MysteryFact::Planet(x) => write!(f, "planet({x})"),
            MysteryFact::Pain(x) => write!(f, "pain({x})"),
            MysteryFact::Craves(x, y) => write!(f, "craves({x},{y})"),
            MysteryFact::Harmony => write!(f, "harmony"),
        }
    }
}

impl fmt::Display for MysteryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MysteryAction::Attack(x) => write!(f, "attack object {x}"),
            MysteryAction::Succumb(x) => write!(f, "succumb object {x}"),
            MysteryAction::Overcome(x, y) => write!(f, "overcome object {x} from object {y}"),
            MysteryAction::Feast(x, y) => write!(f, "feast object {x} from object {y}"),
        }
    }
}

impl MysteryFact {
    /// `province(a)`, `planet(a)`, `pain(a)`, `craves(a,b)`, `harmony`.
    pub fn parse(text: &str) -> Result<MysteryFact, AtomError> {
        let (name, args) = split_atom(text)?;
        Ok(match (name.as_str(), args.as_slice()) {
            ("province", [x]) => MysteryFact::Province(x.clone()),
            ("planet", [x]) => MysteryFact::Planet(x.clone()),
            ("pain", [x]) => MysteryFact::Pain(x.clone()),
            ("craves", [x, y]) => MysteryFact::Craves(x.clone(), y.clone()),
            ("harmony", []) => MysteryFact::Harmony,
            _ => return Err(AtomError::Unknown(text.trim().to_string())),
        })
    }

    pub fn objects(&self) -> Vec<&str> {
        match self {
            MysteryFact::Province(x) | MysteryFact::Planet(x) | MysteryFact::Pain(x) => vec![x],
            MysteryFact::Craves(x, y) => vec![x, y],
            MysteryFact::Harmony => vec![],
        }
    }
}

const OBJ: &str = r"(?:object\s+)?([a-z0-9_-]+)";

impl MysteryAction {
    /// Parses `feast object a from object b`, `attack object d`, and so on;
    /// case, spacing and a trailing period are ignored.
    pub fn parse(line: &str) -> Option<MysteryAction> {
        static CELL: OnceLock<Vec<(Regex, u8)>> = OnceLock::new();
        let patterns = CELL.get_or_init(|| {
            let re = |p: String| Regex::new(&p).expect("action regex");
            vec![
                (re(format!(r"^attack\s+{OBJ}$")), 0),
                (re(format!(r"^succumb\s+{OBJ}$")), 1),
                (re(format!(r"^overcome\s+{OBJ}\s+from\s+{OBJ}$")), 2),
                (re(format!(r"^feast\s+{OBJ}\s+from\s+{OBJ}$")), 3),
            ]
        });
        let norm = line
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .trim_end_matches('.')
            .trim()
            .to_lowercase();
        for (re, kind) in patterns {
            if let Some(c) = re.captures(&norm) {
                let x = c[1].to_string();
                return Some(match kind {
                    0 => MysteryAction::Attack(x),
                    1 => MysteryAction::Succumb(x),
                    2 => MysteryAction::Overcome(x, c[2].to_string()),
                    _ => MysteryAction::Feast(x, c[2].to_string()),
                });
            }
        }
        None
    }

    pub fn objects(&self) -> Vec<&str> {
        match self {
            MysteryAction::Attack(x) | MysteryAction::Succumb(x) => vec![x],
            MysteryAction::Overcome(x, y) | MysteryAction::Feast(x, y) => vec![x, y],
        }
    }

    /// (preconditions, deletes, adds).
    fn schema(&self) -> (Vec<MysteryFact>, Vec<MysteryFact>, Vec<MysteryFact>) {
        use MysteryFact::*;
        match self {
            MysteryAction::Attack(x) => (
                vec![Province(x.clone()), Planet(x.clone()), Harmony],
                vec![Province(x.clone()), Planet(x.clone()), Harmony],
                vec![Pain(x.clone())],
            ),
            MysteryAction::Succumb(x) => (
                vec![Pain(x.clone())],
                vec![Pain(x.clone())],
                vec![Province(x.clone()), Planet(x.clone()), Harmony],
            ),
            MysteryAction::Overcome(x, y) => (
                vec![Province(y.clone()), Pain(x.clone())],
                vec![Province(y.clone()), Pain(x.clone())],
                vec![Harmony, Province(x.clone()), Craves(x.clone(), y.clone())],
            ),
            MysteryAction::Feast(x, y) => (
                vec![Craves(x.clone(), y.clone()), Province(x.clone()), Harmony],
                vec![Craves(x.clone(), y.clone()), Province(x.clone()), Harmony],
                vec![Pain(x.clone()), Province(y.clone())],
            ),
        }
    }
}

impl MysteryState {
    /// Builds a state from true facts. `objects` lists extra objects that
    /// appear in no fact.
    pub fn from_facts(facts: &[MysteryFact], objects: &[String]) -> MysteryState {
        let mut s = MysteryState {
            objects: objects.iter().cloned().collect(),
            ..MysteryState::default()
        };
        for f in facts {
            s.set(f, true);
        }
        s
    }

    pub fn holds(&self, fact: &MysteryFact) -> bool {
        match fact {
            MysteryFact::Province(x) => self.province.contains(x),
            MysteryFact::Planet(x) => self.planet.contains(x),
            MysteryFact::Pain(x) => self.pain.contains(x),
            MysteryFact::Craves(x, y) => self.craves.get(x) == Some(y),
            MysteryFact::Harmony => self.harmony,
        }
    }

    pub fn set(&mut self, fact: &MysteryFact, value: bool) {
        for o in fact.objects() {
            self.objects.insert(o.to_string());
        }
        let toggle = |set: &mut BTreeSet<String>, x: &String| {
            if value {
                set.insert(x.clone());
            } else {
                set.remove(x);
            }
        };
        match fact {
            MysteryFact::Province(x) => toggle(&mut self.province, x),
            MysteryFact::Planet(x) => toggle(&mut self.planet, x),
            MysteryFact::Pain(x) => toggle(&mut self.pain, x),
            MysteryFact::Craves(x, y) => {
                if value {
                    self.craves.insert(x.clone(), y.clone());
                } else if self.craves.get(x) == Some(y) {
                    self.craves.remove(x);
                }
            }
            MysteryFact::Harmony => self.harmony = value,
        }
    }

    /// Every true fact, in a stable order.
    pub fn facts(&self) -> BTreeSet<MysteryFact> {
        let mut out = BTreeSet::new();
        out.extend(self.province.iter().cloned().map(MysteryFact::Province));
        out.extend(self.planet.iter().cloned().map(MysteryFact::Planet));
        out.extend(self.pain.iter().cloned().map(MysteryFact::Pain));
        out.extend(
            self.craves
                .iter()
                .map(|(x, y)| MysteryFact::Craves(x.clone(), y.clone())),
        );
        if self.harmony {
            out.insert(MysteryFact::Harmony);
        }
        out
    }

    /// Applies one action atomically; on failure the state is untouched.
    pub fn apply(&mut self, action: &MysteryAction) -> Result<(), String> {
        if let Some(o) = action.objects().into_iter().find(|o| !self.objects.contains(*o)) {
            return Err(format!("unknown object {o}"));
        }
        let (pre, del, add) = action.schema();
        if let Some(missing) = pre.iter().find(|f| !self.holds(f)) {
            return Err(format!("{action} needs {missing}"));
        }
        for f in &del {
            self.set(f, false);
        }
        for f in &add {
            self.set(f, true);
        }
        Ok(())
    }
}

/// Runs a plan from `init`, returning every state including the initial one.
pub fn trace_mystery_plan(init: &MysteryState, plan: &[String]) -> Result<Vec<MysteryState>, ExecError> {
    let mut states = vec![init.clone()];
    let mut cur = init.clone();
    for (step, line) in plan.iter().enumerate() {
        let action = MysteryAction::parse(line).ok_or_else(|| ExecError::UnknownAction {
            step,
            text: line.clone(),
        })?;
        if let Some(o) = action.objects().into_iter().find(|o| !cur.objects.contains(*o)) {
            return Err(ExecError::UnknownBlock {
                step,
                block: o.to_string(),
            });
        }
        cur.apply(&action)
            .map_err(|reason| ExecError::PreconditionViolated { step, reason })?;
        states.push(cur.clone());
    }
    Ok(states)
}

pub fn execute_mystery_plan(init: &MysteryState, plan: &[String]) -> Result<MysteryState, ExecError> {
    trace_mystery_plan(init, plan).map(|mut s| s.pop().expect("at least the initial state"))
}

pub fn check_mystery_goal(state: &MysteryState, goal: &[MysteryFact]) -> bool {
    goal.iter().all(|f| state.holds(f))
}

/// How a trace line states a fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    /// `... is True/False`, or a clause with no verb: a statement about the
    /// current state.
    Is,
    /// `... becomes True/False`: an effect of the preceding action.
    Becomes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactClaim {
    pub fact: MysteryFact,
    pub value: bool,
    pub claim: Claim,
}

/// Parses a trace fact line such as `Planet object a, Province object a
/// becomes True`. A clause without its own verb takes the verb and value of
/// the next clause that has one, or `is True` when none follows. The
/// misspelling `Hamony` is accepted, as is `the Pain object is X`.
pub fn parse_fact_line(line: &str) -> Option<Vec<FactClaim>> {
    static CLAUSE: OnceLock<Regex> = OnceLock::new();
    let clause_re = CLAUSE.get_or_init(|| {
        Regex::new(
            r"^(?:(province|planet|pain) object ([a-z0-9_-]+)|object ([a-z0-9_-]+) craves? object ([a-z0-9_-]+)|(harmony|hamony)|the pain object is ([a-z0-9_-]+))(?: (is|becomes) (true|false))?$",
        )
        .expect("clause regex")
    });
    let norm = line
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches('.')
        .trim()
        .to_lowercase();
    if norm.is_empty() {
        return None;
    }
    let mut parsed = Vec::new();
    for clause in norm.split(',').map(str::trim) {
        let c = clause_re.captures(clause)?;
        let fact = if let Some(kind) = c.get(1) {
            let x = c[2].to_string();
            match kind.as_str() {
                "province" => MysteryFact::Province(x),
                "planet" => MysteryFact::Planet(x),
                _ => MysteryFact::Pain(x),
            }
        } else if c.get(3).is_some() {
            MysteryFact::Craves(c[3].to_string(), c[4].to_string())
        } else if c.get(5).is_some() {
            MysteryFact::Harmony
        } else {
            MysteryFact::Pain(c[6].to_string())
        };
        let verb = c.get(7).map(|v| {
            let claim = if v.as_str() == "is" { Claim::Is } else { Claim::Becomes };
            (claim, &c[8] == "true")
        });
        // `the Pain object is X` carries its own value
        let verb = if c.get(6).is_some() && verb.is_none() {
            Some((Claim::Is, true))
        } else {
            verb
        };
        parsed.push((fact, verb));
    }
    let mut out = Vec::with_capacity(parsed.len());
    let mut carry = (Claim::Is, true);
    for (fact, verb) in parsed.into_iter().rev() {
        if let Some(v) = verb {
            carry = v;
        }
        out.push(FactClaim {
            fact,
            value: carry.1,
            claim: carry.0,
        });
    }
    out.reverse();
    Some(out)
}

/// Splits `Since Harmony is True, ..., I can Feast object a from object b.`
/// into its precondition claims and the action text.
pub fn parse_since_line(line: &str) -> Option<(Vec<FactClaim>, String)> {
    let lower = line.to_lowercase();
    let since = lower.find("since ")?;
    let can = lower.find("i can ")?;
    if can <= since {
        return None;
    }
    let conditions = line[since + "since ".len()..can].trim().trim_end_matches(',').trim();
    let action = line[can + "i can ".len()..]
        .trim()
        .trim_end_matches('.')
        .trim()
        .to_string();
    Some((parse_fact_line(conditions)?, action))
}
