//! Small dense linear-algebra helpers shared across modules.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Array2<Complex64>;
pub type RMat = Array2<f64>;

pub fn eye(n: usize) -> CMat {
    Array2::eye(n)
}

/// Eigenvalues and eigenvectors of a hermitian matrix, ascending.
///
/// The LAPACK call sees the row-major buffer as column-major and therefore
/// diagonalizes the conjugate matrix; the eigenvectors it returns must be
/// conjugated back (eigenvalues are unaffected). Covered by a unit test on
/// a complex hermitian input.
pub fn eigh(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    let (w, v) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e}")))?;
    Ok((w, v.mapv(|z| z.conj())))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMat) -> Result<Array1<f64>> {
    Ok(eigh(m)?.0)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn frobenius_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs(&(m - &adjoint(m)))
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diag().sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == Complex64::ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn pauli_matrix(letter: crate::quasifree::Pauli) -> CMat {
    use crate::quasifree::Pauli::*;
    let z = Complex64::ZERO;
    let o = Complex64::ONE;
    let i = Complex64::I;
    match letter {
        X => ndarray::array![[z, o], [o, z]],
        Y => ndarray::array![[z, -i], [i, z]],
        Z => ndarray::array![[o, z], [z, -o]],
    }
}

/// Least-squares fit `y ≈ a·x + b`; returns `(a, b, rms_residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    let denom = n * sxx - sx * sx;
    let (a, b) = if denom.abs() < 1e-300 {
        (0.0, sy / n)
    } else {
        ((n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom)
    };
    let rms = (x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let r = a * u + b - v;
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (a, b, rms)
}
