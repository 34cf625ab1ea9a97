//! File formats, run modes and tooling around `l2hmi-core`.
//!
//! - [`config`]: TOML loading, validation and the config hash.
//! - [`logfile`]: the sealed JSON-lines session log.
//! - [`session`]: the protocol runner shared by live and headless modes.
//! - [`headless`]: batch runs with scripted agents.
//! - [`wire`] and [`server`]: the WebSocket protocol and live server.
//! - [`replay`]: re-simulation of a log against its checkpoints.
//! - [`analyze`]: CSV export, p-value table and reaction-time summaries.

pub mod analyze;
pub mod config;
pub mod headless;
pub mod logfile;
pub mod replay;
pub mod server;
pub mod session;
pub mod wire;

mod error;

pub use error::{Error, Result};

/// Process exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for replay divergence or a tampered log.
pub const EXIT_DIVERGENCE: i32 = 3;
