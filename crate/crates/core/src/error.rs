use crate::LocationId;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("profile length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("negative coordinate {value} for group {group} where a nonnegative profile is required")]
    NegativeProfile { group: usize, value: i64 },

    #[error("unknown location {0}")]
    UnknownLocation(LocationId),

    #[error("flow conservation violated at location {location}")]
    FlowConservation { location: LocationId },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance exceeds enumeration limits: {0}")]
    TooLarge(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
