//! Core data model for hypertree planning.
//!
//! Two halves live here. [`rules`] parses the line-oriented rule-library
//! format and decides which node texts are divisible and which rules apply
//! to them. [`hypertree`] holds the growing reasoning structure: nodes,
//! hyperedges (one parent to an ordered set of children), hyperchain
//! extraction and the generating-hypertree checks.

pub mod generating;
pub mod hypertree;
pub mod outline;
pub mod rules;
pub mod text;

pub use generating::{check_generating, GeneratingReport, Violation};
pub use hypertree::{Divisibility, HyperChain, HyperEdge, HyperTree, Node, NodeId, Selection, TreeError, TreeLimits};
pub use rules::{Bindings, LibraryError, NodePattern, Rule, RuleLibrary, Segment};
