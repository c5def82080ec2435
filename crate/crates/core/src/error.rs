use thiserror::Error;

/// Invalid numeric input to one of the model functions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("received power is zero; coupling cannot be calibrated")]
    ZeroReceivedPower,
    #[error("{name} must be {rule}, got {value}")]
    OutOfRange {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
}

/// Failure to find a steady-state operating point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    /// The attacked reference pins the feedback below the network's
    /// operating range and the regulator cuts its output.
    #[error("feedback pinned below operating range (setpoint {setpoint}); regulator shuts down")]
    ShutdownSignal { setpoint: f64 },
    #[error("load characteristic has no intersection with the regulation limits: {0}")]
    NoOperatingPoint(String),
}

/// Errors raised while running a scenario. Per-point solver failures are
/// recorded as events instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("target {target} is unreachable; closest achievable value is {best}")]
    Unreachable { target: f64, best: f64 },
    #[error("target relation is not monotone in the coupling constant")]
    CalibrationAmbiguous,
    #[error("no peak #{peak} on the {point} coupling profile")]
    MissingKnob { point: String, peak: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
