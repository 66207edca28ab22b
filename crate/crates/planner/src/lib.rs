//! Hypertree planning in three stages.
//!
//! 1. [`build_outline`] grows a hypertree from a rule library: each
//!    iteration extracts hyperchains, prunes them to the width, selects one
//!    divisible leaf per kept chain and expands it with up to `P` rules.
//!    A decision step then picks the outline.
//! 2. [`self_guided_plan`] refines the outline's inner nodes with knowledge
//!    and solves each leaf step by step.
//! 3. [`generate_plan`] turns the outcome into the benchmark's plan format.
//!
//! Every model call goes through an [`htp_gateway::Gateway`], so runs replay
//! deterministically from transcripts.

pub mod builder;
pub mod params;
pub mod pipeline;
pub mod trace;

pub use builder::{
    branch_confidence, build_outline, decide_outline, expand_node, render_chains, retrieve_rules, select_chains,
    select_node, BuildError, BuildFailure, BuildResult, ChainFilter,
};
pub use params::{BuilderParams, ExpansionMode, Pruning, RuleSampling};
pub use pipeline::{
    generate_plan, parse_final, self_guided_plan, FinalPlan, LeafSolution, PipelineParams, PlanningOutcome, Refinement,
    StructuredPlan,
};
pub use trace::{Attachment, BuildTrace, ChainStep, DecisionRecord, IterationRecord};
