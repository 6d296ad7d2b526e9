use std::fmt;

use thiserror::Error;

/// A transcendental term was evaluated outside its real domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainFault(pub &'static str);

impl fmt::Display for DomainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// Which expression of a problem raised a [`DomainFault`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Objective,
    Inequality(usize),
    Equality(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Objective => f.write_str("objective"),
            Site::Inequality(i) => write!(f, "inequality {i}"),
            Site::Equality(j) => write!(f, "equality {j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("evaluation domain error in {site}: {fault}")]
    Domain { site: Site, fault: DomainFault },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
