//! Plant siting on a transport network with three stakeholders.
//!
//! A [`scenario::Scenario`] describes the network, the candidate sites and the
//! market. [`agents::evaluate_all`] turns every pair of plant candidates into
//! a situation with its payoffs, and [`compromise::compromise_select`] picks
//! the situation that keeps the worst-off agent closest to its best case.
//! The [`optimizers`] module holds standalone solvers for the classical
//! subproblems: transportation, loading and production planning.

pub mod agents;
pub mod compromise;
pub mod costflow;
pub mod error;
pub mod network;
pub mod optimizers;
pub mod production;
pub mod scenario;

pub use error::{Error, Result};
