//! Moment engine for the quasi-free state: Pfaffian evaluation, the
//! brute-force Wick-sum oracle, Jordan–Wigner reduction of Pauli strings
//! to Majorana monomials, and reconstruction of reduced density matrices
//! on small site sets.

mod jordan_wigner;
mod pfaffian;
mod rdm;
mod wick;

pub use jordan_wigner::{jordan_wigner_reduce, JwReduction, MajoranaMonomial, Pauli, PauliString};
pub use pfaffian::{pfaffian, pfaffian_complex};
pub use rdm::{pauli_expectation, reduced_density_matrix, DensityMatrix, MAX_RDM_SITES};
pub use wick::{moment_pfaffian, wick_moment_bruteforce, MAX_BRUTEFORCE_FACTORS};
