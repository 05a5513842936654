//! Library backing the `sparsemv` command-line tool.
//!
//! The binary in `main.rs` is a thin argument-parsing shell; everything
//! it does lives here so integration tests can drive the same code
//! paths directly:
//!
//! * [`config`] — JSON run configuration, defaults, flag overrides.
//! * [`ingest`] — CSV price tables, return matrices, weight files.
//! * [`commands`] — the `solve`, `backtest`, `bench`, `estimate`, and
//!   `calibrate` subcommands and the artifacts they write.
//! * [`error`] — error classification and process exit codes.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
