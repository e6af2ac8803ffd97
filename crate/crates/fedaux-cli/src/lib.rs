//! Library surface of the experiment CLI, exposed so integration tests
//! can drive the commands in-process.

pub mod commands;
pub mod config;
pub mod metrics_io;
pub mod report;

use fedaux::error::Error;

/// Process exit code for an error, per the documented contract:
/// 2 config, 3 data/io, 4 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Io(_) => 3,
        Error::NonFinite { .. } | Error::Numerical { .. } => 4,
        Error::Internal(_) => 1,
    }
}
