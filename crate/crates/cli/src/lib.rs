//! Command-line front end for the estimation library: long-format CSV
//! ingest, estimation and test runs, scenario simulation, and power
//! studies, driven by a TOML config file with flag overrides.

pub mod config;
pub mod ingest;
pub mod run;

use thiserror::Error;

/// Everything a subcommand can fail with. `exit_code` separates usage
/// problems (bad flags, bad config values) from runtime failures (missing
/// files, malformed data, numerical errors), per the documented 0/1/2
/// convention.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Ingest {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{module}: {message}")]
    Run {
        module: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            _ => 2,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }
}

impl From<survode::params::EstimateError> for CliError {
    fn from(err: survode::params::EstimateError) -> Self {
        use survode::params::EstimateError;
        let (module, message): (&'static str, String) = match err {
            EstimateError::Build(e) => ("events", e.to_string()),
            EstimateError::Hazard(e) => ("hazard", e.to_string()),
            EstimateError::Solve(e) => ("ode", e.to_string()),
        };
        CliError::Run { module, message }
    }
}

impl From<survode::events::BuildError> for CliError {
    fn from(err: survode::events::BuildError) -> Self {
        CliError::Run {
            module: "events",
            message: err.to_string(),
        }
    }
}

impl From<survode::hazard::HazardError> for CliError {
    fn from(err: survode::hazard::HazardError) -> Self {
        CliError::Run {
            module: "hazard",
            message: err.to_string(),
        }
    }
}

impl From<survode::ode::SolveError> for CliError {
    fn from(err: survode::ode::SolveError) -> Self {
        CliError::Run {
            module: "ode",
            message: err.to_string(),
        }
    }
}

impl From<survode::testing::TestError> for CliError {
    fn from(err: survode::testing::TestError) -> Self {
        CliError::Run {
            module: "testing",
            message: err.to_string(),
        }
    }
}

impl From<survode::simulation::SimError> for CliError {
    fn from(err: survode::simulation::SimError) -> Self {
        CliError::Run {
            module: "simulation",
            message: err.to_string(),
        }
    }
}
