//! Free-fermion toolkit for the XY spin chain.
//!
//! The chain's ground-state sector is handled as a quasi-free state: a
//! momentum-space symbol defines the covariance, finite block-Toeplitz
//! truncations feed a Pfaffian moment engine through the Jordan–Wigner
//! transformation, and the entanglement and quasi-equivalence diagnostics
//! are built on top of that calculus.

pub mod covariance;
pub mod diagnostics;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod quasifree;
pub mod resource;

pub use covariance::{covariance_block, dispersion, symbol_eval, CovarianceTruncation, XYParams};
pub use error::{Error, Result};
pub use lattice::{TestVector, Window};
pub use quasifree::{
    jordan_wigner_reduce, moment_pfaffian, pauli_expectation, pfaffian, reduced_density_matrix,
    wick_moment_bruteforce, DensityMatrix, Pauli, PauliString,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
