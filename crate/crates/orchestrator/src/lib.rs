//! Campaign orchestration for the virtual proving ground.
//!
//! A campaign config is expanded into test cases, grouped into batches and
//! executed on a local worker pool, one OS process (or thread) per case.
//! Each case writes its KPI log, verdict and optionally a replayable trace
//! under its own directory; the coordinator aggregates verdicts into a
//! report and samples worker CPU and memory while batches run.

pub mod config;
pub mod error;
pub mod instance;
pub mod resources;
pub mod runner;
pub mod scripts;
pub mod stream;
pub mod trace;

pub use config::{load_config, parse_config, CampaignConfig, RunMode};
pub use error::{Error, Result};
pub use instance::{run_instance, InstanceResult};
pub use runner::{run_campaign, CampaignOutcome, Executor, RunOptions};
pub use trace::replay;
