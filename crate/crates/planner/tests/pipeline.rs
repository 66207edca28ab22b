#[path = "support/policy.rs"]
mod policy;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use htp_core::{outline, HyperChain, RuleLibrary};
use htp_eval::knowledge::{Attraction, Restaurant};
use htp_eval::{KnowledgeBase, PlanFormat};
use htp_gateway::{FnBackend, Gateway, Role};
use htp_planner::{generate_plan, parse_final, self_guided_plan, PipelineParams, StructuredPlan};
use policy::Policy;

fn read(rel: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel);
    std::fs::read_to_string(path).unwrap()
}

fn library(name: &str) -> RuleLibrary {
    RuleLibrary::parse(&read(&format!("crates/core/libraries/{name}.htl"))).unwrap()
}

fn chain(text: &str, lib: &RuleLibrary) -> HyperChain {
    outline::parse(text, Some(lib)).unwrap().hyperchains().remove(0)
}

#[test]
fn blocksworld_leaves_follow_the_trace() {
    let lib = library("blocksworld");
    let outline_chain = chain(&read("fixtures/outlines/blocksworld.txt"), &lib);
    let gw = Gateway::new(
        Policy::default()
            .with_trace(&read("fixtures/traces/blocksworld.txt"))
            .with_plan(&read("fixtures/plans/blocksworld.txt"))
            .backend("policy"),
    );
    let outcome = self_guided_plan(&gw, "stack", &lib, &outline_chain, None, PipelineParams::default()).unwrap();
    assert_eq!(outcome.solutions.len(), outline_chain.leaves().len());
    assert_eq!(outcome.refinements.len(), 5);
    let clear = &outcome.solutions[0];
    assert_eq!(clear.text, "[to get the blue block clear]");
    assert!(clear.steps[0].contains("unstack the yellow block from on top of the blue block"));
    assert!(outcome.failed_leaves().is_empty());
    let plan = generate_plan(&gw, "stack", &outcome, PlanFormat::BlocksPlan).unwrap();
    assert!(plan.delivered);
    match &plan.structured {
        Some(StructuredPlan::BlocksPlan(actions)) => assert_eq!(actions.len(), 10),
        other => panic!("{other:?}"),
    }
    assert!(plan.text.starts_with("[PLAN]\n") && plan.text.ends_with("[PLAN END]\n"));
    assert_eq!(
        parse_final(PlanFormat::BlocksPlan, &plan.text).unwrap().1,
        plan.structured.unwrap()
    );
}

#[test]
fn empty_knowledge_leaves_slot_empty() {
    let lib = library("trip");
    let outline_chain = chain(&read("fixtures/outlines/trip.txt"), &lib);
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let gw = Gateway::new(Arc::new(FnBackend::new("probe", move |c| {
        if let Some(k) = c.request.slots.get("knowledge") {
            log.lock().unwrap().push(k.clone());
        }
        Ok(match c.request.role {
            Role::RefineNode => "Stays and flights.".to_string(),
            _ => "I will submit: done".to_string(),
        })
    })));
    let outcome = self_guided_plan(&gw, "trip", &lib, &outline_chain, None, PipelineParams::default()).unwrap();
    assert_eq!(outcome.solutions.len(), outline_chain.leaves().len());
    assert!(outcome.solutions.iter().all(|s| s.answer == "done" && !s.failed));
    let seen = seen.lock().unwrap();
    assert!(!seen.is_empty() && seen.iter().all(String::is_empty));
}

#[test]
fn knowledge_follows_bound_cities() {
    let lib = library("travelplanner");
    let text =
        "[Plan]\n    [Dining]\n        [Dining for Nashville]\n            [cuisine]\n            [dining cost]\n";
    let outline_chain = chain(text, &lib);
    let restaurant = |name: &str, city: &str| Restaurant {
        name: name.into(),
        city: city.into(),
        average_cost: 20.0,
        cuisines: "Indian".into(),
    };
    let kb = KnowledgeBase {
        restaurants: vec![restaurant("Twigly", "Nashville"), restaurant("Gus", "Memphis")],
        attractions: vec![Attraction {
            name: "Zoo".into(),
            city: "Memphis".into(),
        }],
        ..KnowledgeBase::default()
    };
    let prompts = Arc::new(Mutex::new(Vec::new()));
    let log = prompts.clone();
    let gw = Gateway::new(Arc::new(FnBackend::new("probe", move |c| {
        if c.request.role == Role::SolveSubtask {
            log.lock().unwrap().push(c.request.slots["knowledge"].clone());
        }
        Ok("The subtask is achieved.".to_string())
    })));
    self_guided_plan(&gw, "q", &lib, &outline_chain, Some(&kb), PipelineParams::default()).unwrap();
    for k in prompts.lock().unwrap().iter() {
        assert!(k.contains("Twigly") && !k.contains("Gus") && !k.contains("Zoo"), "{k}");
    }
}

#[test]
fn step_budget_marks_leaf_failed() {
    let lib = library("blocksworld");
    let outline_chain = chain("[Plan]\n    [Blue block on the table]\n", &lib);
    let gw = Gateway::new(Arc::new(FnBackend::new("slow", |c| {
        Ok(match c.request.role {
            Role::SolveSubtask => format!("thinking ({} chars so far)", c.request.slots["progress"].len()),
            Role::GeneratePlan => "[PLAN]\npick up the blue block\nput down the blue block\n[PLAN END]".into(),
            _ => "noted".into(),
        })
    })));
    let params = PipelineParams {
        step_budget: 3,
        ..PipelineParams::default()
    };
    let outcome = self_guided_plan(&gw, "q", &lib, &outline_chain, None, params).unwrap();
    assert_eq!(outcome.solutions.len(), 1);
    assert!(outcome.solutions[0].failed);
    assert_eq!(outcome.solutions[0].steps.len(), 3);
    assert!(outcome.render().contains("UNSOLVED"));
    let plan = generate_plan(&gw, "q", &outcome, PlanFormat::BlocksPlan).unwrap();
    assert!(plan.delivered);
}

#[test]
fn unparseable_plan_is_undelivered() {
    let lib = library("trip");
    let outline_chain = chain(&read("fixtures/outlines/trip.txt"), &lib);
    let calls = Arc::new(Mutex::new(0));
    let count = calls.clone();
    let gw = Gateway::new(Arc::new(FnBackend::new("bad", move |c| {
        if c.request.role == Role::GeneratePlan {
            *count.lock().unwrap() += 1;
            return Ok("Day one: somewhere nice".into());
        }
        Ok("The subtask is achieved.".into())
    })));
    let outcome = self_guided_plan(&gw, "q", &lib, &outline_chain, None, PipelineParams::default()).unwrap();
    let plan = generate_plan(&gw, "q", &outcome, PlanFormat::TripPlan).unwrap();
    assert!(!plan.delivered && plan.structured.is_none() && plan.failure.is_some());
    assert_eq!(*calls.lock().unwrap(), 2);
}

#[test]
fn reference_plans_parse_in_their_formats() {
    let (text, structured) = parse_final(PlanFormat::TripPlan, &read("fixtures/plans/trip.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("**Day")).count(), 5);
    assert!(matches!(structured, StructuredPlan::TripPlan(it) if it.segments.len() == 5));
    let (text, structured) =
        parse_final(PlanFormat::TravelPlannerDays, &read("fixtures/plans/travelplanner.txt")).unwrap();
    assert!(matches!(&structured, StructuredPlan::TravelPlannerDays(p) if p.days.len() == 7));
    assert_eq!(parse_final(PlanFormat::TravelPlannerDays, &text).unwrap().1, structured);
    let (_, structured) = parse_final(PlanFormat::BlocksPlan, &read("fixtures/plans/mystery.txt")).unwrap();
    assert!(matches!(structured, StructuredPlan::BlocksPlan(a) if a.len() == 10));
    assert!(parse_final(PlanFormat::BlocksPlan, "[PLAN]\njump\n[PLAN END]").is_err());
}
