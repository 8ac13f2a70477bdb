//! Configuration, orchestration and serialization for `gsolve`.

pub mod config;
pub mod profile;
pub mod run;
pub mod verify;

pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use run::{run, RunError, RunOutcome, Status};

/// Exit code for an invalid configuration or command line.
pub const EXIT_CONFIG: u8 = 2;
