//! Dual block-coordinate ascent over a [`FactorGraph`](crate::graph::FactorGraph).

mod admissible;
mod consistency;
mod iterate;
mod message;
mod schedule;
mod state;

pub use admissible::{check_admissible, AdmissibilityReport};
pub use consistency::{enumerate_minimizers, marginal_consistency, ConsistencyReport, MINIMIZER_TOL};
pub use iterate::{
    bound_slack, receive_messages, run_iteration, run_iteration_observed, run_to_convergence, send_messages,
    ConvergenceMonitor, StopRule,
};
pub use message::{apply_update, default_direction, generic_message, maximize_message, min_oracle, MessageUpdate};
pub use schedule::{Direction, Schedule, SendBlock, Visit};
pub use state::Reparametrization;
