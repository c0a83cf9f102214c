use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Variants that signal an inconsistent physical state (`NonPhysicalState`,
/// `Physicality`, `SymmetryViolation`) indicate an upstream bug rather than
/// bad user input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("Fock cutoff {dimension} too small: trace deficit {deficit:e} exceeds {tolerance:e}")]
    Cutoff {
        dimension: usize,
        deficit: f64,
        tolerance: f64,
    },

    #[error("state is not positive semidefinite (min eigenvalue {0:e})")]
    NonPhysicalState(f64),

    #[error("conjugation symmetry violated: imaginary residue {0:e}")]
    SymmetryViolation(f64),

    #[error("unphysical covariance matrix: {0}")]
    Physicality(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not converge: change {change:e} after {nodes} nodes")]
    QuadratureNotConverged { nodes: usize, change: f64 },

    #[error("efficiency ratio undefined: GG02 key rate is {0:e}")]
    UndefinedRatio(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
