use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation: every resonator needs at least 2 Fock levels, got {0}")]
    InvalidTruncation(usize),

    #[error("{0} is not a bosonic mode")]
    WrongSubsystem(&'static str),

    #[error("occupation {occupation} out of range for {subsystem} (dimension {dim})")]
    OutOfRange {
        subsystem: &'static str,
        occupation: usize,
        dim: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate schedule: {0}")]
    DegenerateSchedule(String),

    #[error("misconfigured anharmonicity: e<->f transition at {omega_ef_ghz} GHz is not resonant with the bus at {omega_r_ghz} GHz")]
    MisconfiguredAnharmonicity { omega_ef_ghz: f64, omega_r_ghz: f64 },

    #[error("schedule `{label}` does not implement the controlled-phase gate (deviation {deviation:.3e})")]
    IdealActionMismatch { label: String, deviation: f64 },

    #[error("solver failure in segment {segment} at t = {time_ns:.6} ns: {reason}")]
    Solver {
        segment: usize,
        time_ns: f64,
        reason: String,
    },

    #[error("evolution failed at (theta1, theta2) = ({theta1:.6}, {theta2:.6}): {source}")]
    GridPoint {
        theta1: f64,
        theta2: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
