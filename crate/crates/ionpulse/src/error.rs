use thiserror::Error;

/// Errors produced by register construction, pulse application, sequence
/// building, and experiment execution.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ion index {ion} out of range for a {num_ions}-ion register")]
    IonOutOfRange { ion: usize, num_ions: usize },

    #[error("bus quantum number {n} exceeds the Fock cutoff {n_max}")]
    FockOutOfRange { n: usize, n_max: usize },

    #[error("expected {expected} qubit labels, got {got}")]
    QubitCount { expected: usize, got: usize },

    #[error("invalid register configuration: {0}")]
    InvalidRegister(String),

    #[error("radial frequency {omega_rad} rad/s must exceed the axial frequency {omega_ax} rad/s")]
    RockingModeUndefined { omega_rad: f64, omega_ax: f64 },

    #[error("control and target must be distinct ions (both {0})")]
    ControlEqualsTarget(usize),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid noise configuration: {0}")]
    InvalidNoiseConfig(String),

    #[error("input out of range: {0}")]
    InputOutOfRange(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("schedule error at line {line}: {message}")]
    Schedule { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
