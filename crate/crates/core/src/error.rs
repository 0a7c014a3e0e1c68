use alloc::string::String;

/// Errors raised by operators, solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("problem size overflows the index range")]
    Size,
    #[error("operator is not positive definite: {0}")]
    Definiteness(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("snapshot capture refused: {0}")]
    Capacity(String),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), Error> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
