//! Library half of the phasesep CLI: scenario configuration, CSV I/O, and
//! the command implementations, kept out of main.rs so the integration and
//! acceptance tests can drive them directly.

pub mod commands;
pub mod config;
pub mod csvio;
