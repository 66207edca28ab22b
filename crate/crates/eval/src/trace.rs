//! Replays reasoning traces against the executors, checking every state
//! description the trace makes along the way.

use std::collections::BTreeSet;

use crate::blocks::{parse_state_line, BlocksAction, BlocksState};
use crate::mystery::{parse_fact_line, parse_since_line, Claim, FactClaim, MysteryAction, MysteryFact, MysteryState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceError {
    /// 1-based line number in the trace text.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck<S> {
    /// Actions in trace order, in canonical text.
    pub actions: Vec<String>,
    /// State descriptions verified.
    pub states_checked: usize,
    pub final_state: S,
}

fn action_text(line: &str) -> Option<&str> {
    let lower = line.to_ascii_lowercase();
    let at = lower.find("i can ")?;
    Some(line[at + "i can ".len()..].trim().trim_end_matches('.').trim())
}

/// Blocksworld traces: `I can <action>` lines are executed and each
/// `The current state is: ...` line must describe the state exactly.
pub fn verify_blocks_trace(init: &BlocksState, trace: &str) -> Result<TraceCheck<BlocksState>, TraceError> {
    let mut state = init.clone();
    let mut actions = Vec::new();
    let mut states_checked = 0;
    for (i, raw) in trace.lines().enumerate() {
        let err = |reason: String| TraceError { line: i + 1, reason };
        let line = raw.trim();
        if line.to_ascii_lowercase().starts_with("the current state is:") {
            let facts = parse_state_line(line).ok_or_else(|| err("unparseable state line".into()))?;
            state.agrees_with(&facts).map_err(err)?;
            states_checked += 1;
        } else if let Some(text) = action_text(line) {
            let action = BlocksAction::parse(text).ok_or_else(|| err(format!("unknown action `{text}`")))?;
            state.apply(&action).map_err(err)?;
            actions.push(action.to_string());
        }
    }
    Ok(TraceCheck {
        actions,
        states_checked,
        final_state: state,
    })
}

fn check_is(state: &MysteryState, claims: &[FactClaim]) -> Result<(), String> {
    for c in claims.iter().filter(|c| c.claim == Claim::Is) {
        if state.holds(&c.fact) != c.value {
            return Err(format!("claims {} is {}, state disagrees", c.fact, c.value));
        }
    }
    Ok(())
}

fn diff(before: &MysteryState, after: &MysteryState) -> BTreeSet<(MysteryFact, bool)> {
    let (b, a) = (before.facts(), after.facts());
    let added = a.difference(&b).map(|f| (f.clone(), true));
    let removed = b.difference(&a).map(|f| (f.clone(), false));
    added.chain(removed).collect()
}

struct Pending {
    line: usize,
    effects: BTreeSet<(MysteryFact, bool)>,
    claimed: BTreeSet<(MysteryFact, bool)>,
}

fn close(pending: Option<Pending>) -> Result<(), TraceError> {
    match pending {
        Some(p) if p.claimed != p.effects => Err(TraceError {
            line: p.line,
            reason: format!("stated effects {:?} differ from actual {:?}", p.claimed, p.effects),
        }),
        _ => Ok(()),
    }
}

/// Mystery traces: each `Since <conditions>, I can <action>` line must have
/// true conditions; the `becomes` lines that follow must list exactly the
/// facts the action changed, and every `is` claim must hold.
pub fn verify_mystery_trace(init: &MysteryState, trace: &str) -> Result<TraceCheck<MysteryState>, TraceError> {
    let mut state = init.clone();
    let mut actions = Vec::new();
    let mut states_checked = 0;
    let mut pending: Option<Pending> = None;
    for (i, raw) in trace.lines().enumerate() {
        let err = |reason: String| TraceError { line: i + 1, reason };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((conditions, text)) = parse_since_line(line) {
            close(pending.take())?;
            check_is(&state, &conditions).map_err(err)?;
            let action = MysteryAction::parse(&text).ok_or_else(|| err(format!("unknown action `{text}`")))?;
            let before = state.clone();
            state.apply(&action).map_err(err)?;
            actions.push(action.to_string());
            pending = Some(Pending {
                line: i + 1,
                effects: diff(&before, &state),
                claimed: BTreeSet::new(),
            });
        } else if let Some(claims) = parse_fact_line(line) {
            for c in claims.iter().filter(|c| c.claim == Claim::Becomes) {
                let p = pending
                    .as_mut()
                    .ok_or_else(|| err("effect stated before any action".into()))?;
                p.claimed.insert((c.fact.clone(), c.value));
            }
            if claims.iter().any(|c| c.claim == Claim::Is) {
                check_is(&state, &claims).map_err(err)?;
                states_checked += 1;
            }
        } else {
            close(pending.take())?;
        }
    }
    close(pending)?;
    Ok(TraceCheck {
        actions,
        states_checked,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlocksAtom;

    fn two_blocks() -> BlocksState {
        let atoms: Vec<BlocksAtom> = ["on(a,b)", "ontable(b)", "clear(a)", "handempty"]
            .iter()
            .map(|a| BlocksAtom::parse(a).unwrap())
            .collect();
        BlocksState::from_atoms(&atoms).unwrap()
    }

    #[test]
    fn blocks_trace_mismatch_is_reported() {
        let good = "I can unstack the a block from on top of the b block.\nThe current state is: the a block is in my hand and not clear, the b block is on the table and clear.";
        let check = verify_blocks_trace(&two_blocks(), good).unwrap();
        assert_eq!(check.actions.len(), 1);
        assert_eq!(check.states_checked, 1);
        let bad = good.replace(
            "b block is on the table and clear",
            "b block is on the table and not clear",
        );
        assert_eq!(verify_blocks_trace(&two_blocks(), &bad).unwrap_err().line, 2);
    }

    #[test]
    fn mystery_effects_must_be_exact() {
        let init = MysteryState::from_facts(
            &[
                MysteryFact::Harmony,
                MysteryFact::Province("a".into()),
                MysteryFact::Planet("a".into()),
            ],
            &[],
        );
        let good = "Since Harmony is True, Province object a, Planet object a is True, I can Attack object a.\nProvince object a, Planet object a becomes False\nHarmony becomes False\nPain object a becomes True.";
        assert_eq!(verify_mystery_trace(&init, good).unwrap().actions, ["attack object a"]);
        let missing = good.replace("\nHarmony becomes False", "");
        assert_eq!(verify_mystery_trace(&init, &missing).unwrap_err().line, 1);
        let wrong_is = format!("{good}\nHarmony is True");
        assert_eq!(verify_mystery_trace(&init, &wrong_is).unwrap_err().line, 5);
    }
}
