//! The one error type every command funnels into, carrying the process
//! exit code contract: 0 success, 2 usage, 3 I/O, 4 data format.
//!
//! The split matters to CI consumers: a 2 means the invocation itself was
//! wrong (fix the script), a 3 means the filesystem misbehaved (retry or
//! fix permissions), a 4 means a file was read but its contents are not
//! what the sidecar or schema promised (regenerate the artifact).

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Anything a command can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The flags or their combination are invalid (exit 2).
    #[error("{0}")]
    Usage(String),
    /// A file or directory could not be read or written (exit 3).
    #[error("{}: {source}", path.display())]
    Io {
        /// The path the operation failed on.
        path: PathBuf,
        /// The underlying I/O error.
        source: io::Error,
    },
    /// A file was read but its contents are malformed (exit 4).
    #[error("{0}")]
    DataFormat(String),
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::DataFormat(_) => 4,
        }
    }

    /// A usage error from anything printable.
    pub fn usage(why: impl fmt::Display) -> Self {
        CliError::Usage(why.to_string())
    }

    /// An I/O error tagged with the path it happened on.
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// A data-format error from anything printable.
    pub fn data(why: impl fmt::Display) -> Self {
        CliError::DataFormat(why.to_string())
    }
}
