//! Error type shared by every solver module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence {
        what: &'static str,
        iterations: usize,
    },

    /// The moment system has no equilibrium inside the admissible fugacity range.
    #[error("no equilibrium for rho = {rho}, e = {e}: {reason}")]
    NoSolution {
        rho: f64,
        e: f64,
        reason: &'static str,
    },

    #[error("singular denominator in M(z), N(z): |{denominator:e}| below threshold at z = {z}")]
    SingularDenominator { z: f64, denominator: f64 },

    #[error("non-positive density rho = {0}")]
    NonPositiveDensity(f64),

    #[error("non-positive internal energy e = {0}")]
    NonPositiveEnergy(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid Butcher tableau: {0}")]
    Tableau(String),

    #[error("collision stencil table needs {required} bytes, cap is {cap}")]
    MemoryBudget { required: usize, cap: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("every node excluded from the entropy integral")]
    AllNodesExcluded,

    #[error("Riemann problem generates vacuum")]
    Vacuum,

    #[error("positivity lost in cell {cell}: {detail}")]
    Positivity { cell: usize, detail: String },

    /// Wraps an equilibrium failure with the spatial cell it happened in.
    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_cell(self, cell: usize) -> Self {
        match self {
            e @ Error::Cell { .. } => e,
            e => Error::Cell {
                cell,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, looking through cell annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Cell { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures of the numerics (inversion, positivity, blow-up), as
    /// opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Convergence { .. }
                | Error::NoSolution { .. }
                | Error::SingularDenominator { .. }
                | Error::NonPositiveDensity(_)
                | Error::NonPositiveEnergy(_)
                | Error::NonFinite(_)
                | Error::AllNodesExcluded
                | Error::Vacuum
                | Error::Positivity { .. }
                | Error::Domain(_)
        )
    }
}
