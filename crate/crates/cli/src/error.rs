//! Process-level error taxonomy.
//!
//! Every failure the binary can hit maps onto one of three distinct exit
//! codes so scripts can tell bad input, bad numerics, and a bad environment
//! apart without parsing messages:
//!
//! * [`EXIT_CONFIG`] — the configuration file does not parse or violates an
//!   invariant of the domain types it references;
//! * [`EXIT_NUMERIC`] — the pipeline itself failed (truncation defect,
//!   off-resonance closed form, failed grid points, ...);
//! * [`EXIT_IO`] — the environment failed (missing file, unwritable output
//!   directory, corrupt coefficient cache).

use std::fmt;

use relcav::bogoliubov::BogoliubovError;
use relcav::cache::CacheError;
use relcav::geometry::GeometryError;
use relcav::sweep::SweepError;
use relcav::symplectic::SymplecticError;
use relcav::trajectory::TrajectoryError;

/// Exit code for configuration problems (parse errors, invariant violations).
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numeric failures in the evaluation pipeline.
pub const EXIT_NUMERIC: i32 = 3;
/// Exit code for I/O failures (inputs, outputs, cache).
pub const EXIT_IO: i32 = 4;

/// A failure, classified by which exit code it deserves.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        Self::Config(msg.to_string())
    }

    pub fn numeric(msg: impl fmt::Display) -> Self {
        Self::Numeric(msg.to_string())
    }

    pub fn io(msg: impl fmt::Display) -> Self {
        Self::Io(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Numeric(_) => EXIT_NUMERIC,
            Self::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "configuration error: {msg}"),
            Self::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Self::Io(msg) => write!(f, "I/O failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        Self::Io(e.to_string())
    }
}

// Runtime failures of the evaluation pipeline are numeric by default; the
// one exception is a cache failure surfacing through a junction source,
// which is an environment problem and keeps its I/O classification.
impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::Cache(cache) => Self::from(cache),
            other => Self::Numeric(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Scenario(inner) => Self::from(inner),
            other => Self::Numeric(other.to_string()),
        }
    }
}

impl From<SymplecticError> for CliError {
    fn from(e: SymplecticError) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<BogoliubovError> for CliError {
    fn from(e: BogoliubovError) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Numeric(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_and_nonzero() {
        let codes = [
            CliError::config("x").exit_code(),
            CliError::numeric("x").exit_code(),
            CliError::io("x").exit_code(),
        ];
        for (i, a) in codes.iter().enumerate() {
            assert_ne!(*a, 0);
            for b in &codes[i + 1..] {
                assert_ne!(*a, *b);
            }
        }
    }

    #[test]
    fn cache_failures_keep_io_classification_through_wrappers() {
        let io = std::io::Error::new(std::io::ErrorKind::PermissionDenied, "denied");
        let nested = TrajectoryError::Cache(CacheError::Io(io));
        assert_eq!(CliError::from(nested).exit_code(), EXIT_IO);
        let direct = TrajectoryError::InvalidRepetitions;
        assert_eq!(CliError::from(direct).exit_code(), EXIT_NUMERIC);
    }
}
