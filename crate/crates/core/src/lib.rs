//! Replicator dynamics of automatic versus controlled agents, with
//! population-environment feedback, bifurcation analysis and a
//! finite-population cross-check.

pub mod abm;
pub mod bifurcation;
pub mod cli;
pub mod equilibria;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod odeint;
pub mod plot;

pub use error::{Error, Result};
pub use model::{ModelParams, Scenario, ScenarioKind, SystemState};
