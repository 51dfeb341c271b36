use alloc::string::String;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degree sum {sum} is odd")]
    OddDegreeSum { sum: usize },
    #[error("vertex {vertex} has degree {degree}, need at least {min}")]
    DegreeTooSmall {
        vertex: usize,
        degree: usize,
        min: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} = {value} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("not a valid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("plug-in TV needs at least {required} samples, got {given}")]
    TooFewSamples { required: usize, given: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("regime is not reachable: {0}")]
    UnreachableRegime(String),
}

pub type Result<T> = core::result::Result<T, Error>;
