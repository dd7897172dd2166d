//! Configuration, the spin-statistics pipeline, reports and the command line.

pub mod checks;
pub mod cli;
pub mod config;
pub mod pipeline;
pub mod plots;
pub mod report;
pub mod schlieder;

pub use config::RunConfig;
pub use pipeline::{run_spinstat, SpinStatRun};
pub use report::{verify, SpinStatReport, CONFIRMED};
pub use schlieder::{schlieder_check, FactorModel, SchliederOutcome};
