//! Solvers for the classical subproblems that sit next to the siting model.

pub mod loading;
pub mod plan;
pub mod transport;

pub use loading::{solve_loading, LoadingFile, LoadingInstance, LoadingItem, LoadingSolution};
pub use plan::{solve_production_plan, solve_production_plan_integer, PlanInstance, PlanSolution};
pub use transport::{balance, solve_transportation, Fictitious, TransportInstance, TransportPlan};
