use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A point was evaluated outside the rectangle.
    #[error("point ({xi1}, {xi2}) lies outside [0, {length}] x [0, {height}]")]
    OutOfDomain {
        xi1: f64,
        xi2: f64,
        length: f64,
        height: f64,
    },

    /// Inconsistent or invalid solver inputs.
    #[error("configuration error: {0}")]
    Config(String),

    /// The indefinite problem violates the coercivity margin.
    #[error("ill-posed problem: coercivity margin {margin} is not positive")]
    IllPosed { margin: f64 },

    /// A per-mode Riccati solution escapes to infinity inside the horizon.
    #[error("Riccati blow-up for mode with rate {mu} at t = {time}")]
    BlowUp { mu: f64, time: f64 },

    /// `gamma == 2 mu` makes the integration constant undefined.
    #[error("degenerate Riccati constant: gamma = {gamma} equals 2 mu = {}", 2.0 * mu)]
    DegenerateConstant { mu: f64, gamma: f64 },

    /// No admissible control can satisfy the request.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// Malformed grid dump.
    #[error("grid format error: {0}")]
    GridFormat(String),

    /// Config text failed validation.
    #[error("{0}")]
    Parse(#[from] ConfigErrors),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A run-time failure carrying the scenario it happened in.
    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single config violation, tied to the line that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based line number; 0 when the violation is not tied to a line
    /// (for example a missing key).
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "`{}`: {}", self.key, self.message)
        } else {
            write!(f, "line {}: `{}`: {}", self.line, self.key, self.message)
        }
    }
}

/// Every violation found while parsing a scenario config.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} config violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}
