//! Interpreter and exact expected-cost analyzer for a probabilistic heap
//! language.
//!
//! The language is an untyped lambda calculus with a mutable heap,
//! `fork`-style concurrency, a `tick` primitive that incurs cost, and two
//! probabilistic primitives (`ChooseUniform`, `ChooseWeighted`). A single
//! reduction step maps an expression and heap to a finite-support
//! distribution over (reduct, heap, cost, forked threads); thread-pool
//! execution composes steps monadically.
//!
//! On top of the semantics the crate provides:
//! * exhaustive exploration of the reachable-configuration graph,
//! * an exact solver for expected total cost on finite graphs,
//! * a checker for node-indexed potential certificates that bound the
//!   expected cost from above,
//! * truncated-execution adequacy checks (postcondition, progress,
//!   expected cost),
//! * reproducible seeded Monte Carlo estimation.

pub mod analysis;
pub mod dist;
pub mod exec;
pub mod mc;
pub mod rat;
pub mod semantics;
pub mod syntax;

pub use analysis::{
    adequacy_check, check_certificate, composition_check, eval_bound, expected_post_cost,
    solve_expected_cost, AdequacyReport, CheckReport, NodeCost, PostPotential,
    PotentialCertificate,
};
pub use dist::{Dist, DistError, Prob};
pub use exec::{explore_graph, step_n, step_thread, Config, ConfigGraph, ExecError, Scheduler};
pub use mc::{estimate, sample_run, McReport};
pub use rat::Rat;
pub use semantics::{head_step, is_pure_step, prim_step, Heap, StepOutcome};
pub use syntax::{parse_program, pretty, pretty_val, subst, Expr, Loc, SyntaxError, Val};
