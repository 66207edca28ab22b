//! Scores one delivered (or missing) plan against its instance.

use crate::blocks::{check_blocks_goal, execute_blocks_plan};
use crate::dataset::{Instance, InstanceSpec};
use crate::knowledge::KnowledgeBase;
use crate::metrics::{ConstraintClass, ConstraintResult, PlanVerdict};
use crate::mystery::{check_mystery_goal, execute_mystery_plan};
use crate::travel::{builtin_constraints, check_travel_plan, TravelPlan};
use crate::trip::{match_trip, TripItinerary};

/// Action lines of a plan: the lines between `[PLAN]` and `[PLAN END]` when
/// the markers are present, otherwise every non-empty line.
pub fn plan_actions(text: &str) -> Vec<String> {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    let body: &[&str] = match lines.iter().position(|l| l.eq_ignore_ascii_case("[plan]")) {
        Some(start) => {
            let rest = &lines[start + 1..];
            let end = rest
                .iter()
                .position(|l| l.eq_ignore_ascii_case("[plan end]"))
                .unwrap_or(rest.len());
            &rest[..end]
        }
        None => &lines,
    };
    body.iter().filter(|l| !l.is_empty()).map(|l| l.to_string()).collect()
}

fn result(name: &str, class: ConstraintClass, passed: bool, detail: Option<String>) -> ConstraintResult {
    ConstraintResult {
        name: name.to_string(),
        class,
        passed,
        detail,
    }
}

fn undelivered(id: &str) -> PlanVerdict {
    PlanVerdict {
        id: id.to_string(),
        delivered: false,
        results: Vec::new(),
    }
}

/// `plan` is `None` when no plan was delivered. Travel plans that do not
/// parse count as undelivered; `kb` defaults to an empty knowledge base.
pub fn evaluate(instance: &Instance, plan: Option<&str>, kb: Option<&KnowledgeBase>) -> PlanVerdict {
    let Some(text) = plan.filter(|t| !t.trim().is_empty()) else {
        return undelivered(&instance.id);
    };
    let results = match &instance.spec {
        InstanceSpec::Blocksworld { init, goal } => {
            let actions = plan_actions(text);
            match execute_blocks_plan(init, &actions) {
                Ok(end) => vec![
                    result("valid-actions", ConstraintClass::Commonsense, true, None),
                    result(
                        "goal-reached",
                        ConstraintClass::Hard,
                        check_blocks_goal(&end, goal),
                        None,
                    ),
                ],
                Err(e) => vec![
                    result(
                        "valid-actions",
                        ConstraintClass::Commonsense,
                        false,
                        Some(e.to_string()),
                    ),
                    result("goal-reached", ConstraintClass::Hard, false, None),
                ],
            }
        }
        InstanceSpec::Mystery { init, goal } => {
            let actions = plan_actions(text);
            match execute_mystery_plan(init, &actions) {
                Ok(end) => vec![
                    result("valid-actions", ConstraintClass::Commonsense, true, None),
                    result(
                        "goal-reached",
                        ConstraintClass::Hard,
                        check_mystery_goal(&end, goal),
                        None,
                    ),
                ],
                Err(e) => vec![
                    result(
                        "valid-actions",
                        ConstraintClass::Commonsense,
                        false,
                        Some(e.to_string()),
                    ),
                    result("goal-reached", ConstraintClass::Hard, false, None),
                ],
            }
        }
        InstanceSpec::Trip { gold } => {
            let m = match_trip(text, gold);
            let well_formed = TripItinerary::parse(text).map(|_| ()).map_err(|e| e.to_string());
            let detail = (!m.matched).then(|| format!("{}/{} visits match", m.matching_visits, m.gold_visits));
            vec![
                result(
                    "well-formed",
                    ConstraintClass::Commonsense,
                    well_formed.is_ok(),
                    well_formed.err(),
                ),
                result("exact-match", ConstraintClass::Hard, m.matched, detail),
            ]
        }
        InstanceSpec::TravelPlanner { requirements, .. } => {
            let Ok(parsed) = TravelPlan::parse(text) else {
                return undelivered(&instance.id);
            };
            let empty = KnowledgeBase::default();
            check_travel_plan(&parsed, requirements, kb.unwrap_or(&empty), &builtin_constraints())
        }
    };
    PlanVerdict {
        id: instance.id.clone(),
        delivered: true,
        results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_dataset, Benchmark};
    use std::path::Path;

    fn blocks() -> Instance {
        let text = r#"{"id": "b", "query": "q", "init": ["ontable(a)", "ontable(b)", "clear(a)", "clear(b)", "handempty"], "goal": ["on(a,b)"]}"#;
        parse_dataset(text, Benchmark::Blocksworld, Path::new("."))
            .unwrap()
            .remove(0)
    }

    #[test]
    fn extracts_marked_actions() {
        let text = "Here it is\n[PLAN]\npick up a\n\nstack a on b\n[PLAN END]\nthanks";
        assert_eq!(plan_actions(text), ["pick up a", "stack a on b"]);
        assert_eq!(plan_actions("pick up a\nstack a on b\n"), ["pick up a", "stack a on b"]);
    }

    #[test]
    fn blocks_verdicts() {
        let inst = blocks();
        let good = evaluate(&inst, Some("[PLAN]\npick up a\nstack a on b\n[PLAN END]"), None);
        assert!(good.success());
        let short = evaluate(&inst, Some("[PLAN]\npick up a\n[PLAN END]"), None);
        assert!(short.class_passed(ConstraintClass::Commonsense) && !short.success());
        let bad = evaluate(&inst, Some("[PLAN]\nstack a on b\n[PLAN END]"), None);
        assert!(!bad.class_passed(ConstraintClass::Commonsense));
        assert!(!evaluate(&inst, None, None).delivered);
    }

    #[test]
    fn trip_verdicts() {
        let text = r#"{"id": "t", "query": "q", "gold": "**Day 1-2:** Visit Rome for 2 days.\n**Day 2:** Fly from Rome to Oslo.\n**Day 2-3:** Visit Oslo for 2 days."}"#;
        let inst = parse_dataset(text, Benchmark::Trip, Path::new(".")).unwrap().remove(0);
        let InstanceSpec::Trip { gold } = &inst.spec else {
            unreachable!()
        };
        assert!(evaluate(&inst, Some(&gold.render()), None).success());
        let v = evaluate(&inst, Some("**Day 1-3:** Visit Rome for 3 days."), None);
        assert!(v.delivered && !v.success());
    }

    #[test]
    fn unparseable_travel_plan_is_undelivered() {
        let text = r#"{"id": "t", "query": "q", "days": 1}"#;
        let inst = parse_dataset(text, Benchmark::TravelPlanner, Path::new("."))
            .unwrap()
            .remove(0);
        assert!(!evaluate(&inst, Some("no plan here"), None).delivered);
    }
}
