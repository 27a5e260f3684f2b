use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window [{lo}, {hi}): lo must be < hi")]
    InvalidWindow { lo: i64, hi: i64 },

    #[error("symbol is singular at x = {x}: k(x) = {k:.3e} below tolerance")]
    SymbolSingular { x: f64, k: f64 },

    #[error("quadrature did not converge: refinement disagreement {estimate:.3e} exceeds {tolerance:.3e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("matrix is not antisymmetric: max |m + m^T| entry {deviation:.3e}")]
    NotAntisymmetric { deviation: f64 },

    #[error("Pfaffian needs even dimension, got {dim}")]
    OddDimension { dim: usize },

    #[error("{n} factors exceed the brute-force oracle scale (max {max})")]
    TooManyFactors { n: usize, max: usize },

    #[error("operator support {site} lies outside the covariance window [{lo}, {hi})")]
    SupportOutsideWindow { site: i64, lo: i64, hi: i64 },

    #[error("{n} sites exceed the density-matrix reconstruction cap of {max}")]
    TooManySites { n: usize, max: usize },

    #[error("site {site} lies outside the paired-state window")]
    SiteOutsideWindow { site: i64 },

    #[error("Schmidt enumeration hit the {cap}-term cap before reaching tail bound {tail_bound:.3e} (tail {tail:.3e})")]
    TailNotReached { cap: usize, tail_bound: f64, tail: f64 },

    #[error("Schmidt tail {tail:.3e} is large enough to flip a majorization comparison")]
    TailTooLarge { tail: f64 },

    #[error("density matrix is not a two-qubit state (dimension {dim})")]
    NotTwoQubit { dim: usize },

    #[error("density matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
