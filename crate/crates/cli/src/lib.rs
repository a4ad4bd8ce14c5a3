//! Library backing the `homodyne` binary: config parsing/rendering and the
//! subcommand implementations (kept out of `main.rs` so tests can call them
//! directly).

pub mod config;
pub mod run;
