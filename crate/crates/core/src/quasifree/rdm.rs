//! Pauli expectations through the Pfaffian engine and reconstruction of
//! reduced density matrices on small site sets.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::covariance::CovarianceTruncation;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

use super::jordan_wigner::{jordan_wigner_reduce, JwReduction, Pauli, PauliString};
use super::pfaffian::pfaffian;

pub const MAX_RDM_SITES: usize = 12;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;
const EXPECTATION_IMAG_TOL: f64 = 1e-8;

/// Expectation of a Pauli string in the quasi-free state: the string is
/// reduced to its Majorana monomial and evaluated as a Pfaffian of the
/// corresponding Majorana covariance submatrix. Odd strings give 0.
///
/// The result of a hermitian string is real; a residual imaginary part
/// above tolerance signals a non-hermitian input and is rejected.
pub fn pauli_expectation(p: &PauliString, cov: &CovarianceTruncation) -> Result<f64> {
    for site in p.support() {
        if !cov.window().contains(site) {
            return Err(Error::SupportOutsideWindow {
                site,
                lo: cov.window().lo(),
                hi: cov.window().hi(),
            });
        }
    }
    match jordan_wigner_reduce(p) {
        JwReduction::Zero => Ok(0.0),
        JwReduction::Monomial(m) => {
            let r = m.degree() / 2;
            let sub = cov.majorana_submatrix(&m.indices)?;
            let pf = pfaffian(&sub)?;
            // <m_{a1}…m_{a2r}> = Pf(-i M_sub) = (-i)^r Pf(M_sub)
            let val = m.sign * Complex64::I.powu(3 * r as u32) * pf;
            if val.im.abs() > EXPECTATION_IMAG_TOL * (1.0 + val.re.abs()) {
                return Err(Error::NonFinite {
                    context: "Pauli expectation has a non-negligible imaginary part",
                });
            }
            Ok(val.re)
        }
    }
}

/// Reduced state on an ordered list of distinct sites. The tensor factor
/// order follows `sites` (first site = most significant qubit). Both the
/// raw reconstruction and a PSD-repaired copy (eigenvalues in
/// `[-1e-8, 0)` clipped, renormalized) are kept.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    sites: Vec<i64>,
    matrix: CMat,
    repaired: CMat,
}

impl DensityMatrix {
    pub fn new(sites: Vec<i64>, matrix: CMat) -> Result<Self> {
        let n = sites.len();
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "matrix dimension {} does not match {} sites",
                matrix.nrows(),
                n
            )));
        }
        {
            let mut seen = sites.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != n {
                return Err(Error::InvalidArgument("duplicate sites".into()));
            }
        }
        if linalg::hermiticity_deviation(&matrix) > HERMITICITY_TOL {
            return Err(Error::InvalidArgument(
                "density matrix is not hermitian".into(),
            ));
        }
        let tr = linalg::trace(&matrix);
        if (tr - Complex64::ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let repaired = psd_repair(&matrix)?;
        Ok(DensityMatrix {
            sites,
            matrix,
            repaired,
        })
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Raw reconstructed matrix.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// PSD-clipped and renormalized copy.
    pub fn repaired(&self) -> &CMat {
        &self.repaired
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::eigvalsh(&self.matrix)?.to_vec())
    }

    /// Partial trace keeping `keep` (a sub-list of this state's sites, in
    /// the order they should appear in the result).
    pub fn partial_trace(&self, keep: &[i64]) -> Result<DensityMatrix> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|s| {
                self.sites
                    .iter()
                    .position(|t| t == s)
                    .ok_or(Error::SiteOutsideWindow { site: *s })
            })
            .collect::<Result<_>>()?;
        let n = self.sites.len();
        let k = keep.len();
        let traced: Vec<usize> = (0..n).filter(|q| !positions.contains(q)).collect();
        let dim_k = 1usize << k;
        let mut out: CMat = Array2::zeros((dim_k, dim_k));
        let expand = |kept_bits: usize, traced_bits: usize| -> usize {
            let mut idx = 0usize;
            for (pos_in_keep, &q) in positions.iter().enumerate() {
                let bit = (kept_bits >> (k - 1 - pos_in_keep)) & 1;
                idx |= bit << (n - 1 - q);
            }
            for (pos_in_traced, &q) in traced.iter().enumerate() {
                let bit = (traced_bits >> (traced.len().saturating_sub(1) - pos_in_traced.min(traced.len().saturating_sub(1)))) & 1;
                idx |= bit << (n - 1 - q);
            }
            idx
        };
        let dim_t = 1usize << traced.len();
        for r in 0..dim_k {
            for c in 0..dim_k {
                let mut acc = Complex64::ZERO;
                for t in 0..dim_t {
                    acc += self.matrix[(expand(r, t), expand(c, t))];
                }
                out[(r, c)] = acc;
            }
        }
        DensityMatrix::new(keep.to_vec(), out)
    }

    /// Reorder the tensor factors to `new_order` (a permutation of the
    /// current site list).
    pub fn reorder(&self, new_order: &[i64]) -> Result<DensityMatrix> {
        let n = self.sites.len();
        if new_order.len() != n {
            return Err(Error::InvalidArgument("reorder length mismatch".into()));
        }
        let positions: Vec<usize> = new_order
            .iter()
            .map(|s| {
                self.sites
                    .iter()
                    .position(|t| t == s)
                    .ok_or(Error::SiteOutsideWindow { site: *s })
            })
            .collect::<Result<_>>()?;
        let dim = self.dim();
        let remap = |idx: usize| -> usize {
            let mut out = 0usize;
            for (new_q, &old_q) in positions.iter().enumerate() {
                let bit = (idx >> (n - 1 - old_q)) & 1;
                out |= bit << (n - 1 - new_q);
            }
            out
        };
        let mut out: CMat = Array2::zeros((dim, dim));
        for r in 0..dim {
            for c in 0..dim {
                out[(remap(r), remap(c))] = self.matrix[(r, c)];
            }
        }
        DensityMatrix::new(new_order.to_vec(), out)
    }
}

fn psd_repair(matrix: &CMat) -> Result<CMat> {
    let (w, v) = linalg::eigh(matrix)?;
    let min_eig = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Err(Error::NotPositive { min_eig });
    }
    if min_eig >= 0.0 {
        return Ok(matrix.clone());
    }
    let clipped: Vec<f64> = w.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let dim = matrix.nrows();
    let mut out: CMat = Array2::zeros((dim, dim));
    for (k, &wk) in clipped.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let col = v.column(k);
        let scale = wk / total;
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += scale * col[i] * col[j].conj();
            }
        }
    }
    Ok(out)
}

/// All four letters per site, in a fixed enumeration order.
const LETTER_CHOICES: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];

/// Reconstruct the reduced density matrix on `sites` from Pauli
/// expectations: `ρ = 2^{-n} Σ_P ⟨P⟩ P` over all `4^n` strings.
///
/// The enumeration is a parallel map over fixed chunks with a sequential
/// reduction in chunk order, so the floating-point result is deterministic
/// under any thread count.
pub fn reduced_density_matrix(
    sites: &[i64],
    cov: &CovarianceTruncation,
) -> Result<DensityMatrix> {
    let n = sites.len();
    if n == 0 || n > MAX_RDM_SITES {
        return Err(Error::TooManySites {
            n,
            max: MAX_RDM_SITES,
        });
    }
    for &site in sites {
        if !cov.window().contains(site) {
            return Err(Error::SupportOutsideWindow {
                site,
                lo: cov.window().lo(),
                hi: cov.window().hi(),
            });
        }
    }
    let dim = 1usize << n;
    let total = 4usize.pow(n as u32);
    let chunk = 1usize << (2 * n.min(5)); // at most 1024 combos per task
    let starts: Vec<usize> = (0..total).step_by(chunk).collect();

    let partials: Vec<Result<CMat>> = starts
        .par_iter()
        .map(|&start| {
            let mut local: CMat = Array2::zeros((dim, dim));
            for combo in start..(start + chunk).min(total) {
                accumulate_term(combo, sites, cov, &mut local)?;
            }
            Ok(local)
        })
        .collect();

    let mut rho: CMat = Array2::zeros((dim, dim));
    for p in partials {
        rho += &p?;
    }
    rho /= Complex64::new(dim as f64, 0.0);
    DensityMatrix::new(sites.to_vec(), rho)
}

/// Add `⟨P⟩ · P` for the `combo`-th Pauli string to the accumulator,
/// exploiting that a Pauli word has one nonzero entry per column.
fn accumulate_term(
    combo: usize,
    sites: &[i64],
    cov: &CovarianceTruncation,
    acc: &mut CMat,
) -> Result<()> {
    let n = sites.len();
    let mut letters = Vec::with_capacity(n);
    let mut digits = combo;
    for q in 0..n {
        let choice = LETTER_CHOICES[digits % 4];
        digits /= 4;
        if let Some(l) = choice {
            letters.push((q, sites[q], l));
        }
    }
    let p = PauliString::from_letters(letters.iter().map(|&(_, s, l)| (s, l)));
    let v = if p.is_identity() {
        1.0
    } else {
        pauli_expectation(&p, cov)?
    };
    if v == 0.0 {
        return Ok(());
    }
    let dim = 1usize << n;
    let mut flip = 0usize;
    for &(q, _, l) in &letters {
        if matches!(l, Pauli::X | Pauli::Y) {
            flip |= 1 << (n - 1 - q);
        }
    }
    for col in 0..dim {
        let mut phase = Complex64::new(v, 0.0);
        for &(q, _, l) in &letters {
            let bit = (col >> (n - 1 - q)) & 1;
            match l {
                Pauli::X => {}
                Pauli::Y => {
                    phase *= if bit == 0 { Complex64::I } else { -Complex64::I };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        acc[(col ^ flip, col)] += phase;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::XYParams;
    use crate::lattice::{TestVector, Window};
    use crate::quasifree::wick_moment_bruteforce;
    use approx::assert_abs_diff_eq;

    fn cov(g: f64, l: f64, lo: i64, hi: i64) -> CovarianceTruncation {
        CovarianceTruncation::build(&XYParams::new(g, l).unwrap(), Window::new(lo, hi).unwrap())
            .unwrap()
    }

    #[test]
    fn identity_normalization() {
        let c = cov(0.7, 0.3, 0, 3);
        assert_abs_diff_eq!(
            pauli_expectation(&PauliString::identity(), &c).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sigma_z_vanishes_at_half_filling() {
        let c = cov(0.0, 0.0, -2, 3);
        for site in [-2, 0, 2] {
            let v = pauli_expectation(&PauliString::single(site, Pauli::Z), &c).unwrap();
            assert!(v.abs() < 1e-8, "site {site}: {v}");
        }
    }

    #[test]
    fn sigma_z_is_plus_one_in_the_polarized_phase() {
        let c = cov(0.0, 2.0, 0, 2);
        let v = pauli_expectation(&PauliString::single(0, Pauli::Z), &c).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn odd_strings_have_zero_expectation() {
        let c = cov(1.0, 1.0, 0, 3);
        let v = pauli_expectation(&PauliString::single(1, Pauli::X), &c).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn connected_zz_matches_the_analytic_value() {
        // nearest-neighbour connected <sz sz> at the free-fermion point is -4/pi^2
        let c = cov(0.0, 0.0, 0, 2);
        let zz = pauli_expectation(
            &PauliString::from_letters([(0, Pauli::Z), (1, Pauli::Z)]),
            &c,
        )
        .unwrap();
        let z = pauli_expectation(&PauliString::single(0, Pauli::Z), &c).unwrap();
        let connected = zz - z * z;
        assert_abs_diff_eq!(
            connected,
            -4.0 / (std::f64::consts::PI * std::f64::consts::PI),
            epsilon = 1e-6
        );
    }

    #[test]
    fn xx_gap_string_matches_six_factor_wick_oracle() {
        // X0 X2 = i^2 m0 m0 m1 m2 m3 m4 before reduction; the reduced
        // degree-4 evaluation must match the 6-factor brute-force value.
        let c = cov(0.7, 0.3, 0, 3);
        let w = c.window();
        let m = |site: i64, kind: usize| TestVector::majorana(w, site, kind).unwrap();
        let factors = vec![m(0, 0), m(0, 0), m(0, 1), m(1, 0), m(1, 1), m(2, 0)];
        let brute = wick_moment_bruteforce(&factors, &c).unwrap();
        let oracle = (Complex64::I * Complex64::I * brute).re;
        let reduced = pauli_expectation(
            &PauliString::from_letters([(0, Pauli::X), (2, Pauli::X)]),
            &c,
        )
        .unwrap();
        assert_abs_diff_eq!(oracle, reduced, epsilon = 1e-10);
    }

    #[test]
    fn majorana_form_matches_two_point_wick_oracle() {
        // M_ab = i(<m_a m_b> - delta_ab) on a window straddling the origin
        let c = cov(0.7, 0.3, -2, 2);
        let w = c.window();
        let m = c.majorana_form();
        for a in 0..8 {
            for b in 0..8 {
                let site_a = w.lo() + (a / 2) as i64;
                let site_b = w.lo() + (b / 2) as i64;
                let va = TestVector::majorana(w, site_a, a % 2).unwrap();
                let vb = TestVector::majorana(w, site_b, b % 2).unwrap();
                let g = wick_moment_bruteforce(&[va, vb], &c).unwrap();
                let delta = if a == b { 1.0 } else { 0.0 };
                let want = Complex64::I * (g - delta);
                assert!(want.im.abs() < 1e-10);
                assert_abs_diff_eq!(m[(a, b)], want.re, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn translation_covariance_of_expectations() {
        let p = PauliString::from_letters([(0, Pauli::X), (1, Pauli::X)]);
        let c1 = cov(1.0, 1.0, -1, 3);
        let c2 = cov(1.0, 1.0, 2, 6);
        let v1 = pauli_expectation(&p, &c1).unwrap();
        let v2 = pauli_expectation(&p.shift(3), &c2).unwrap();
        assert_abs_diff_eq!(v1, v2, epsilon = 1e-10);
    }

    #[test]
    fn single_site_rdm_is_maximally_mixed_at_half_filling() {
        let c = cov(0.0, 0.0, 0, 1);
        let rho = reduced_density_matrix(&[0], &c).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-9);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-9);
    }

    #[test]
    fn single_site_rdm_is_polarized_for_strong_field() {
        let c = cov(0.0, 2.0, 0, 1);
        let rho = reduced_density_matrix(&[0], &c).unwrap();
        // <sigma_z> = +1: the |0> population carries all the weight
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_consistency_for_adjacent_pair() {
        for (g, l) in [(0.0, 0.0), (1.0, 1.0), (0.7, 0.3)] {
            let c = cov(g, l, 0, 2);
            let pair = reduced_density_matrix(&[0, 1], &c).unwrap();
            let single = reduced_density_matrix(&[0], &c).unwrap();
            let traced = pair.partial_trace(&[0]).unwrap();
            let dev = (traced.matrix() - single.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            assert!(dev < 1e-9, "({g},{l}): deviation {dev}");
        }
    }

    #[test]
    fn reorder_swaps_tensor_factors() {
        let c = cov(1.0, 1.0, 0, 2);
        let rho = reduced_density_matrix(&[0, 1], &c).unwrap();
        let swapped = rho.reorder(&[1, 0]).unwrap();
        let back = swapped.reorder(&[0, 1]).unwrap();
        let dev = (rho.matrix() - back.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-14);
        // the swapped matrix agrees entrywise under index bit swap
        let m = rho.matrix();
        let s = swapped.matrix();
        for r in 0..4 {
            for cidx in 0..4 {
                let swap_bits = |i: usize| ((i & 1) << 1) | ((i >> 1) & 1);
                assert_eq!(s[(swap_bits(r), swap_bits(cidx))], m[(r, cidx)]);
            }
        }
    }

    #[test]
    fn site_cap_is_enforced() {
        let c = cov(0.0, 0.0, 0, 13);
        let sites: Vec<i64> = (0..13).collect();
        assert!(matches!(
            reduced_density_matrix(&sites, &c),
            Err(Error::TooManySites { .. })
        ));
    }
}
