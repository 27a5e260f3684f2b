//! Quasi-free moments of CAR monomials `B(h_1) ⋯ B(h_{2n})`.
//!
//! The brute-force oracle sums over all ordered pairings with signs; the
//! production path evaluates the same quantity as the Pfaffian of the
//! antisymmetrized pairing matrix. The two must agree, and the oracle is
//! deliberately kept free of any Pfaffian code.

use ndarray::Array2;
use num_complex::Complex64;

use crate::covariance::CovarianceTruncation;
use crate::error::{Error, Result};
use crate::lattice::{gamma_apply, TestVector};

use super::pfaffian::pfaffian_complex;

pub const MAX_BRUTEFORCE_FACTORS: usize = 12;

/// Pairing value `(Γh_a, A h_b)` with the test vectors embedded into the
/// covariance window.
fn pair_value(ha: &TestVector, hb: &TestVector, cov: &CovarianceTruncation) -> Result<Complex64> {
    let a = cov.complex_form();
    let ga = gamma_apply(ha);
    let u = embed(&ga, cov)?;
    let v = embed(hb, cov)?;
    let n = u.len();
    let mut av = vec![Complex64::ZERO; n];
    for (i, slot) in av.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (j, vj) in v.iter().enumerate() {
            if *vj != Complex64::ZERO {
                acc += a[(i, j)] * vj;
            }
        }
        *slot = acc;
    }
    Ok(u.iter().zip(&av).map(|(x, y)| x.conj() * y).sum())
}

fn embed(v: &TestVector, cov: &CovarianceTruncation) -> Result<Vec<Complex64>> {
    let win = cov.window();
    let mut out = vec![Complex64::ZERO; 2 * win.len()];
    for (off, site) in v.window().sites().enumerate() {
        let f1 = v.f1()[off];
        let f2 = v.f2()[off];
        if f1 == Complex64::ZERO && f2 == Complex64::ZERO {
            continue;
        }
        let target = win.offset(site).ok_or(Error::SupportOutsideWindow {
            site,
            lo: win.lo(),
            hi: win.hi(),
        })?;
        out[2 * target] = f1;
        out[2 * target + 1] = f2;
    }
    Ok(out)
}

/// Moment by explicit signed sum over the `(2n−1)!!` ordered pairings.
/// Odd-length input gives 0. Capped at [`MAX_BRUTEFORCE_FACTORS`] factors.
pub fn wick_moment_bruteforce(
    factors: &[TestVector],
    cov: &CovarianceTruncation,
) -> Result<Complex64> {
    let n = factors.len();
    if n % 2 == 1 {
        return Ok(Complex64::ZERO);
    }
    if n > MAX_BRUTEFORCE_FACTORS {
        return Err(Error::TooManyFactors {
            n,
            max: MAX_BRUTEFORCE_FACTORS,
        });
    }
    if n == 0 {
        return Ok(Complex64::ONE);
    }
    // pair values for a < b
    let mut w = vec![vec![Complex64::ZERO; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            w[a][b] = pair_value(&factors[a], &factors[b], cov)?;
        }
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    Ok(pairing_sum(&mut remaining, &w))
}

fn pairing_sum(remaining: &mut Vec<usize>, w: &[Vec<Complex64>]) -> Complex64 {
    if remaining.is_empty() {
        return Complex64::ONE;
    }
    let first = remaining[0];
    let mut total = Complex64::ZERO;
    for pos in 1..remaining.len() {
        let partner = remaining[pos];
        let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
        let mut rest: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&x| x != first && x != partner)
            .collect();
        total += sign * w[first][partner] * pairing_sum(&mut rest, w);
    }
    total
}

/// Same moment as [`wick_moment_bruteforce`], evaluated as the Pfaffian of
/// the antisymmetrized pairing matrix; scales far beyond the oracle.
pub fn moment_pfaffian(factors: &[TestVector], cov: &CovarianceTruncation) -> Result<Complex64> {
    let n = factors.len();
    if n % 2 == 1 {
        return Ok(Complex64::ZERO);
    }
    if n == 0 {
        return Ok(Complex64::ONE);
    }
    let mut m = Array2::zeros((n, n));
    for a in 0..n {
        for b in a + 1..n {
            let v = pair_value(&factors[a], &factors[b], cov)?;
            m[(a, b)] = v;
            m[(b, a)] = -v;
        }
    }
    pfaffian_complex(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::XYParams;
    use crate::lattice::Window;
    use rand::{Rng, SeedableRng};

    fn cov(g: f64, l: f64, lo: i64, hi: i64) -> CovarianceTruncation {
        CovarianceTruncation::build(&XYParams::new(g, l).unwrap(), Window::new(lo, hi).unwrap())
            .unwrap()
    }

    fn random_vector(window: Window, rng: &mut impl Rng) -> TestVector {
        let n = window.len();
        let f1 = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let f2 = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        TestVector::new(window, f1, f2).unwrap()
    }

    #[test]
    fn single_pair_is_the_pair_value() {
        let c = cov(0.7, 0.3, -2, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = Window::new(-2, 3).unwrap();
        let h1 = random_vector(w, &mut rng);
        let h2 = random_vector(w, &mut rng);
        let brute = wick_moment_bruteforce(&[h1.clone(), h2.clone()], &c).unwrap();
        let direct = pair_value(&h1, &h2, &c).unwrap();
        assert!((brute - direct).norm() < 1e-14);
        let pf = moment_pfaffian(&[h1, h2], &c).unwrap();
        assert!((brute - pf).norm() < 1e-14);
    }

    #[test]
    fn odd_moments_vanish() {
        let c = cov(1.0, 1.0, 0, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let w = Window::new(0, 4).unwrap();
        let hs: Vec<TestVector> = (0..3).map(|_| random_vector(w, &mut rng)).collect();
        assert_eq!(wick_moment_bruteforce(&hs, &c).unwrap(), Complex64::ZERO);
        assert_eq!(moment_pfaffian(&hs, &c).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn four_factor_three_term_combination() {
        let c = cov(1.0, 1.0, -1, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = Window::new(-1, 3).unwrap();
        let hs: Vec<TestVector> = (0..4).map(|_| random_vector(w, &mut rng)).collect();
        let v = |a: usize, b: usize| pair_value(&hs[a], &hs[b], &c).unwrap();
        let want = v(0, 1) * v(2, 3) - v(0, 2) * v(1, 3) + v(0, 3) * v(1, 2);
        let brute = wick_moment_bruteforce(&hs, &c).unwrap();
        assert!((brute - want).norm() < 1e-13);
        let pf = moment_pfaffian(&hs, &c).unwrap();
        assert!((pf - want).norm() < 1e-13);
    }

    #[test]
    fn oracle_equivalence_eight_factors() {
        let c = cov(0.0, 0.0, -3, 4);
        let w = Window::new(-3, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let hs: Vec<TestVector> = (0..8).map(|_| random_vector(w, &mut rng)).collect();
            let brute = wick_moment_bruteforce(&hs, &c).unwrap();
            let pf = moment_pfaffian(&hs, &c).unwrap();
            assert!(
                (brute - pf).norm() <= 1e-9 * (1.0 + brute.norm()),
                "brute={brute} pf={pf}"
            );
        }
    }

    #[test]
    fn factor_cap_enforced() {
        let c = cov(0.0, 0.0, 0, 2);
        let w = Window::new(0, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let hs: Vec<TestVector> = (0..14).map(|_| random_vector(w, &mut rng)).collect();
        assert!(matches!(
            wick_moment_bruteforce(&hs, &c),
            Err(Error::TooManyFactors { .. })
        ));
        // the Pfaffian path has no such cap
        assert!(moment_pfaffian(&hs, &c).is_ok());
    }

    #[test]
    fn support_outside_window_is_rejected() {
        let c = cov(0.0, 0.0, 0, 2);
        let w = Window::new(0, 5).unwrap();
        let h = TestVector::delta(w, 4, 0).unwrap();
        assert!(matches!(
            wick_moment_bruteforce(&[h.clone(), h], &c),
            Err(Error::SupportOutsideWindow { .. })
        ));
    }
}
