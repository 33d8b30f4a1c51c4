//! The on-policy training loop, evaluation and seeded sweeps.

mod config;
mod eval;
mod log;
mod run;
mod sweep;

pub use config::{
    AdvantageMode, InitialPolicy, LambdaSchedule, RhoSource, TrainConfig, SCHEMA_VERSION,
};
pub use eval::{evaluate, EvalSummary, TaxiTallies};
pub use log::{IterationRecord, RunLog, RunSummary, LOG_COLUMNS};
pub use run::{train, TrainFailure, TrainOutput};
pub use sweep::{beta_setting, sweep, SweepAggregate, SweepAxis, SweepResult, SweepRow};
