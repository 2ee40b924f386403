//! Command-line companion to `gnorm-core`: corpus files, batch runs,
//! sweeps, and artifact export for CI and notebook consumers.
//!
//! The core crate owns the datapaths and the measurement machinery; this
//! crate owns everything that touches an operating system — file formats,
//! worker pools, exit codes, and the `gnorm` binary itself. The split
//! keeps the golden model free of I/O so it can be embedded anywhere a
//! testbench runs.
//!
//! Guarantees the command layer adds on top of the core:
//!
//! - **Reproducibility.** Every run writes a manifest that pins tool
//!   version, command, seed, corpus identity, and full configuration.
//!   Re-running from the same manifest produces byte-identical artifacts,
//!   at any `--jobs` level.
//! - **No partial output.** Artifacts are staged as temporary files and
//!   renamed into place only when the whole run has succeeded.
//! - **Diagnosable failure.** Exit codes distinguish usage (2), I/O (3),
//!   and data-format (4) problems, and corpus errors name the offending
//!   byte offset.

#![deny(missing_docs)]

pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod report;

pub use error::CliError;
