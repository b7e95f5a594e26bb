//! Sequential distributed model predictive control for cooperative
//! multi-agent systems with artificial cooperation outputs.
//!
//! Each agent tracks a self-chosen cooperation output while penalizing the
//! disagreement with its neighbors' outputs. Agents optimize one after
//! another and publish their chosen outputs immediately, so later agents in
//! the sequence react to the current choices of earlier ones.

pub mod cooperation;
pub mod diagnostics;
pub mod dynamics;
pub mod graph;
pub mod ocp;
pub mod orchestrator;
pub mod solver;
