use std::path::PathBuf;

use htp_eval::{
    check_blocks_goal, check_mystery_goal, execute_blocks_plan, execute_mystery_plan, plan_actions,
    verify_blocks_trace, verify_mystery_trace, BlocksAtom, BlocksState, MysteryFact, MysteryState, TravelPlan,
    TripItinerary,
};

fn fixture(rel: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn atoms(list: &[&str]) -> Vec<BlocksAtom> {
    list.iter().map(|a| BlocksAtom::parse(a).unwrap()).collect()
}

fn facts(list: &[&str]) -> Vec<MysteryFact> {
    list.iter().map(|a| MysteryFact::parse(a).unwrap()).collect()
}

fn blocks_init() -> BlocksState {
    BlocksState::from_atoms(&atoms(&[
        "on(yellow,blue)",
        "on(blue,red)",
        "on(red,orange)",
        "ontable(orange)",
        "clear(yellow)",
        "handempty",
    ]))
    .unwrap()
}

fn mystery_init() -> MysteryState {
    MysteryState::from_facts(
        &facts(&[
            "harmony",
            "craves(a,b)",
            "craves(b,c)",
            "craves(c,d)",
            "planet(d)",
            "province(a)",
        ]),
        &[],
    )
}

#[test]
fn blocks_plan_follows_trace() {
    let plan = plan_actions(&fixture("plans/blocksworld.txt"));
    assert_eq!(plan.len(), 10);
    let check = verify_blocks_trace(&blocks_init(), &fixture("traces/blocksworld.txt")).unwrap();
    assert_eq!(check.actions, plan);
    assert_eq!(check.states_checked, 10);
    let end = execute_blocks_plan(&blocks_init(), &plan).unwrap();
    assert_eq!(end, check.final_state);
    assert!(check_blocks_goal(
        &end,
        &atoms(&["ontable(blue)", "on(orange,blue)", "on(red,orange)"])
    ));
    assert!(!check_blocks_goal(&end, &atoms(&["on(yellow,red)"])));
}

#[test]
fn mystery_plan_follows_trace() {
    let plan = plan_actions(&fixture("plans/mystery.txt"));
    assert_eq!(plan.len(), 10);
    let check = verify_mystery_trace(&mystery_init(), &fixture("traces/mystery.txt")).unwrap();
    assert_eq!(check.actions, plan);
    assert!(check.states_checked >= 10);
    let end = execute_mystery_plan(&mystery_init(), &plan).unwrap();
    assert_eq!(end, check.final_state);
    assert!(check_mystery_goal(
        &end,
        &facts(&["planet(b)", "craves(d,b)", "craves(c,d)"])
    ));
}

#[test]
fn corrupted_trace_is_caught() {
    let trace =
        fixture("traces/blocksworld.txt").replacen("is in my hand and not clear", "is on the table and clear", 1);
    assert!(verify_blocks_trace(&blocks_init(), &trace).is_err());
    let trace = fixture("traces/mystery.txt").replacen("Hamony becomes False", "Harmony becomes True", 1);
    assert!(verify_mystery_trace(&mystery_init(), &trace).is_err());
}

#[test]
fn trip_and_travel_plans_parse() {
    let trip = TripItinerary::parse(&fixture("plans/trip.txt")).unwrap();
    assert_eq!(trip.segments.len(), 5);
    let travel = TravelPlan::parse(&fixture("plans/travelplanner.txt")).unwrap();
    assert_eq!(travel.days.len(), 7);
}
