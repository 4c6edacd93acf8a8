//! Scenario-driven front end for `finsler-core`: loads scenario files, draws seeded samples,
//! runs the engine, the closed forms, the classifier and the finite-difference oracle, and
//! writes deterministic JSON reports.

pub mod cli;
pub mod commands;
pub mod error;
pub mod model;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod tolerances;
