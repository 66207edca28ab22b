//! Evaluators for planning benchmarks.
//!
//! * [`blocks`] and [`mystery`]: STRIPS-style executors plus parsers for
//!   state descriptions found in reasoning traces.
//! * [`trip`]: itinerary grammar and exact-match scoring.
//! * [`travel`] and [`knowledge`]: day-block travel plans checked against
//!   reference tables.
//! * [`trace`]: replays reasoning traces and checks their state claims.
//! * [`metrics`]: micro/macro pass rates as exact fractions.
//! * [`dataset`] and [`evaluate`]: JSONL instances and per-plan verdicts.

pub mod blocks;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod knowledge;
pub mod metrics;
pub mod mystery;
pub mod trace;
pub mod travel;
pub mod trip;

pub use blocks::{
    check_blocks_goal, execute_blocks_plan, parse_state_line, trace_blocks_plan, BlockFact, BlocksAction, BlocksAtom,
    BlocksState, Support,
};
pub use dataset::{load_dataset, parse_dataset, Benchmark, DatasetError, Instance, InstanceSpec, PlanFormat};
pub use error::{AtomError, ExecError};
pub use evaluate::{evaluate, plan_actions};
pub use knowledge::{KnowledgeBase, KnowledgeError, Manifest};
pub use metrics::{
    aggregate_metrics, ConstraintClass, ConstraintResult, MetricsError, MetricsReport, PlanVerdict, Rate,
};
pub use mystery::{
    check_mystery_goal, execute_mystery_plan, parse_fact_line, parse_since_line, trace_mystery_plan, Claim, FactClaim,
    MysteryAction, MysteryFact, MysteryState,
};
pub use trace::{verify_blocks_trace, verify_mystery_trace, TraceCheck, TraceError};
pub use travel::{builtin_constraints, check_travel_plan, plan_cost, Constraint, DayPlan, TravelPlan, TravelQuery};
pub use trip::{match_trip, TripItinerary, TripMatch, TripSegment};
