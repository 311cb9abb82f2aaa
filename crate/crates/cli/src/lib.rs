//! Command-line driver for the kidrank pipeline: dataset generation,
//! end-to-end experiment runs, learner comparisons and SHAP explanations,
//! all written as files under one output directory.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod explain;
pub mod output;

pub use config::{ConfigError, ExperimentConfig};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// A pipeline stage failed at run time.
    pub const RUNTIME: u8 = 1;
    /// Bad arguments, config or input schema.
    pub const CONFIG: u8 = 2;
}

/// Exit code for an error: config and schema problems anywhere in the chain
/// give [`exit::CONFIG`], everything else [`exit::RUNTIME`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<toml::de::Error>() {
            return exit::CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<kidrank_core::Error>() {
            if matches!(
                e,
                kidrank_core::Error::Config { .. } | kidrank_core::Error::Schema { .. }
            ) {
                return exit::CONFIG;
            }
        }
    }
    exit::RUNTIME
}
