use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Failures raised while integrating a run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    InvalidConfig(String),
    #[error("non-finite derivative of state `{state}` at t = {time} s")]
    NonFiniteDerivative { state: String, time: f64 },
    #[error("state limit violated at t = {time} s: {what}")]
    StateLimit { what: String, time: f64 },
}

/// Invalid arguments to the physical model functions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("chamber volume must be positive, got {0} m^3")]
    NonPositiveVolume(f64),
    #[error("non-finite pressure ({0} Pa)")]
    NonFinitePressure(f64),
    #[error("force {force} N exceeds the rated blocked load path of {rated} N")]
    OverRatedBlockage { force: f64, rated: f64 },
}

/// Failures of the experiment protocols and their statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("run {run} aborted: {source}")]
    RunAborted { run: usize, source: SimError },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("insufficient excitation: displacement span {span} m is below {min} m")]
    InsufficientExcitation { span: f64, min: f64 },
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("regression inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("regression abscissa has zero variance")]
    DegenerateVariance,
    #[error("missing channel `{0}`")]
    MissingChannel(String),
}

/// One problem found while validating a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// Dotted location, e.g. `actuator.supply_pressure_pa`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Every issue found in a configuration, not only the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl ConfigError {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.issues
            .iter()
            .any(|i| i.path.contains(needle) || i.message.contains(needle))
    }
}

/// Errors reading or writing run records.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed csv {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("empty time series")]
    Empty,
}
