//! Pfaffian of antisymmetric matrices by Parlett–Reid elimination with
//! partial pivoting. Congruence updates `E A Eᵀ` with unit determinant
//! leave the Pfaffian unchanged, so after clearing row `k` beyond the
//! pivot the expansion picks up the factor `a[k, k+1]` and recurses on
//! the trailing block.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};

const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Pfaffian of a real antisymmetric matrix of even dimension.
pub fn pfaffian(m: &RMat) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() || n % 2 != 0 {
        return Err(Error::OddDimension {
            dim: if n != m.ncols() { usize::MAX } else { n },
        });
    }
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    if dev > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric { deviation: dev });
    }
    let mc = m.mapv(|v| Complex64::new(v, 0.0));
    Ok(eliminate(mc).re)
}

/// Pfaffian of a complex antisymmetric matrix; antisymmetry is the
/// caller's responsibility (used on explicitly antisymmetrized pairing
/// matrices).
pub fn pfaffian_complex(m: &CMat) -> Result<Complex64> {
    let n = m.nrows();
    if n != m.ncols() || n % 2 != 0 {
        return Err(Error::OddDimension { dim: n });
    }
    Ok(eliminate(m.clone()))
}

fn eliminate(mut a: CMat) -> Complex64 {
    let n = a.nrows();
    if n == 0 {
        return Complex64::ONE;
    }
    let mut pf = Complex64::ONE;
    for k in (0..n - 1).step_by(2) {
        // pivot: largest |a[k, j]| for j > k
        let mut piv = k + 1;
        let mut best = a[(k, k + 1)].norm();
        for j in k + 2..n {
            let v = a[(k, j)].norm();
            if v > best {
                best = v;
                piv = j;
            }
        }
        if best == 0.0 {
            return Complex64::ZERO;
        }
        if piv != k + 1 {
            swap_rows_cols(&mut a, k + 1, piv);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)];
        pf *= pivot;
        for j in k + 2..n {
            let f = a[(k, j)] / pivot;
            if f == Complex64::ZERO {
                continue;
            }
            for l in 0..n {
                let r = a[(k + 1, l)];
                a[(j, l)] -= f * r;
            }
            for l in 0..n {
                let c = a[(l, k + 1)];
                a[(l, j)] -= f * c;
            }
        }
    }
    pf
}

fn swap_rows_cols(a: &mut CMat, i: usize, j: usize) {
    let n = a.nrows();
    for l in 0..n {
        let t = a[(i, l)];
        a[(i, l)] = a[(j, l)];
        a[(j, l)] = t;
    }
    for l in 0..n {
        let t = a[(l, i)];
        a[(l, i)] = a[(l, j)];
        a[(l, j)] = t;
    }
}
