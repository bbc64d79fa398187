//! Instance formats and convergence logs.

pub mod dd;
pub mod log;
pub mod multicut;
mod tokens;
pub mod uai;

pub use dd::{parse_dd, write_dd};
pub use log::{write_csv, ConvergenceRecord, Event, CSV_HEADER};
pub use multicut::{parse_multicut, write_multicut};
pub use uai::{parse_uai, parse_uai_neglog, write_uai};
