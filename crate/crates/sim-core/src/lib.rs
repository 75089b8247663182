//! Synchronous message-passing executions with crash-free omission and
//! Byzantine adversaries, plus the machinery built on top of them: formal
//! execution records and their validators, a deterministic round engine,
//! isolation and merge constructions, a falsification harness that hunts
//! for cheap counterexample executions, a validity calculus over input
//! configurations, and agreement-to-agreement reductions.

pub mod adversary;
pub mod engine;
pub mod harness;
pub mod model;
pub mod reductions;
pub mod registry;
pub mod trace;
pub mod validity;
