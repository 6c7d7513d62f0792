//! Evolutionary search over boolean circuits encoded as acyclic graphs,
//! with semantics-preserving rewrites that drift neutrally across genotypes.

pub mod benchmarks;
pub mod circuit;
pub mod evolution;
pub mod experiment;
pub mod mutation;
pub mod rewrites;
pub mod semantics;
pub mod stats;

pub use circuit::{EdgeRef, FunctionKind, Individual, Node, NodeId, NodeKind, Violation};
pub use rewrites::{apply_match, apply_ruleset, enumerate_matches, Match, RuleId, RuleSet};
pub use semantics::{evaluate, fitness, Evaluator, Fitness, TruthTable};
