//! The `heurex` command-line tool and HTTP service.

pub mod cli;
pub mod config;
pub mod error;
pub mod inputs;
pub mod server;

pub use cli::run;
pub use config::Config;
pub use error::{AppError, ErrorKind};
pub use heurex_core as core;
