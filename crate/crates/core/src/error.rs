use alloc::string::String;
use core::fmt;

/// Errors raised by the fitting and selection routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input data violates a structural requirement.
    InvalidData(String),
    /// A class does not have enough rows for the requested operation.
    ClassTooSmall { class: String, size: usize },
    /// The covariance structure cannot be used at this dimension.
    StructureMismatch { structure: &'static str, dim: usize },
    /// Every candidate covariance structure produced a singular fit.
    AllStructuresSingular,
    /// Configuration values out of range.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::ClassTooSmall { class, size } => {
                write!(f, "class '{class}' with {size} rows is too small for the requested split")
            }
            Error::StructureMismatch { structure, dim } => {
                write!(f, "covariance structure {structure} is not defined for dimension {dim}")
            }
            Error::AllStructuresSingular => write!(f, "all covariance structures gave singular fits"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
