//! Command-line runner for hypertree planning.
//!
//! * `plan` builds an outline for one query, plans it and writes
//!   `outline.txt`, `trace.json`, `reasoning.txt`, `plan.txt` and
//!   `plan.json` under `--out`. Exit status 0 means a plan was delivered,
//!   2 that none was, 64 a configuration error and 69 an unreachable model.
//! * `bench` does the same for every instance of a JSONL dataset under
//!   `instances/<id>/`, evaluates the plans and writes `report.json`,
//!   `report.txt` and `timings.json`.
//! * `inspect` prints the iteration table of a stored trace and its outline.
//! * `parse-lib` checks a rule library.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_bench, cmd_inspect, cmd_parse_lib, cmd_plan, load_trace, trace_outline, PlanStatus};
pub use config::{read_query, BackendSpec, RunConfig};
pub use error::CliError;
pub use report::{InstanceReport, RunReport, Timings};
