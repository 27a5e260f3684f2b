//! The maximally entangled reference chain ω₁ and CHSH/Bell evaluation on
//! two-qubit marginals.
//!
//! ω₁ pairs the qubit at site `−j` with the qubit at site `j−1` in the
//! state `χ₂`; the pairing map is the reflection `s ↔ −s−1`. CHSH values
//! are computed from the Pauli correlation matrix over traceless
//! dichotomic observables and are therefore two-qubit-marginal lower
//! bounds on the half-chain Bell correlation.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceTruncation, XYParams};
use crate::entanglement::TwoBlockSource;
use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::linalg::{self, CMat};
use crate::quasifree::{reduced_density_matrix, DensityMatrix, Pauli};

/// ω₁ restricted to a finite window: pairs `(−j, j−1)` for `1 ≤ j ≤ max_j`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairedState {
    max_j: i64,
}

impl PairedState {
    pub fn new(max_j: i64) -> Result<Self> {
        if max_j < 1 {
            return Err(Error::InvalidArgument("max_j must be >= 1".into()));
        }
        Ok(PairedState { max_j })
    }

    pub fn window(&self) -> Window {
        Window::new(-self.max_j, self.max_j).expect("max_j >= 1")
    }

    /// The partner of `site` under the `(−j, j−1)` pairing.
    pub fn partner(site: i64) -> i64 {
        -site - 1
    }
}

fn chi2_projector() -> CMat {
    let mut m: CMat = Array2::zeros((4, 4));
    let h = Complex64::new(0.5, 0.0);
    for (r, c) in [(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
        m[(r, c)] = h;
    }
    m
}

/// Exact reduced state of ω₁ on `sites`: matched pairs contribute `χ₂`
/// projectors, unmatched members maximally mixed qubits.
///
/// Tensor order of the result: matched pairs first (ascending `j`, each
/// as `(−j, j−1)`), then unmatched sites ascending.
pub fn omega1_rdm(state: &PairedState, sites: &[i64]) -> Result<DensityMatrix> {
    let window = state.window();
    for &s in sites {
        if !window.contains(s) {
            return Err(Error::SiteOutsideWindow { site: s });
        }
    }
    {
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::InvalidArgument("duplicate sites".into()));
        }
    }
    let mut matched: Vec<(i64, i64)> = Vec::new();
    let mut singles: Vec<i64> = Vec::new();
    for &s in sites {
        let p = PairedState::partner(s);
        if sites.contains(&p) {
            if s < p {
                matched.push((s, p));
            }
        } else {
            singles.push(s);
        }
    }
    matched.sort_by_key(|&(l, _)| std::cmp::Reverse(l)); // ascending j = descending left site... j = -l
    matched.sort_by_key(|&(l, _)| -l);
    singles.sort_unstable();

    let mut order: Vec<i64> = Vec::with_capacity(sites.len());
    let mut matrix: CMat = Array2::eye(1);
    let chi = chi2_projector();
    let mixed: CMat = Array2::eye(2) / Complex64::new(2.0, 0.0);
    for &(l, r) in &matched {
        order.push(l);
        order.push(r);
        matrix = linalg::kron(&matrix, &chi);
    }
    for &s in &singles {
        order.push(s);
        matrix = linalg::kron(&matrix, &mixed);
    }
    DensityMatrix::new(order, matrix)
}

impl TwoBlockSource for PairedState {
    fn rdm(&self, sites: &[i64]) -> Result<DensityMatrix> {
        omega1_rdm(self, sites)?.reorder(sites)
    }

    fn label(&self) -> String {
        "omega1".into()
    }
}

/// Pauli correlation matrix `T_uv = tr(ρ σ_u ⊗ σ_v)`.
fn correlation_matrix(rho: &DensityMatrix) -> Result<[[f64; 3]; 3]> {
    if rho.dim() != 4 {
        return Err(Error::NotTwoQubit { dim: rho.dim() });
    }
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let m = rho.matrix();
    let mut t = [[0.0; 3]; 3];
    for (u, &lu) in letters.iter().enumerate() {
        for (v, &lv) in letters.iter().enumerate() {
            let op = linalg::kron(&linalg::pauli_matrix(lu), &linalg::pauli_matrix(lv));
            let val = linalg::trace(&op.dot(m));
            t[u][v] = val.re;
        }
    }
    Ok(t)
}

/// Largest two eigenvalue sum of `TᵀT` via the closed-form two-qubit
/// criterion: `β = √(u₁ + u₂) ≤ √2`.
pub fn chsh_beta(rho: &DensityMatrix) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let mut tt: CMat = Array2::zeros((3, 3));
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += t[k][i] * t[k][j];
            }
            tt[(i, j)] = Complex64::new(acc, 0.0);
        }
    }
    let w = linalg::eigvalsh(&tt)?;
    Ok((w[2] + w[1]).max(0.0).sqrt())
}

/// Direct ascent over observable directions: alternating exact updates of
/// the Bloch vectors `â₁, â₂, b̂₁, b̂₂` in
/// `β = ½[â₁ᵀT(b̂₁+b̂₂) + â₂ᵀT(b̂₁−b̂₂)]`, multi-start.
pub fn chsh_beta_ascent(rho: &DensityMatrix, starts: usize, seed: u64) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let apply = |m: &[[f64; 3]; 3], v: [f64; 3]| {
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i] += m[i][j] * v[j];
            }
        }
        out
    };
    let transpose_apply = |m: &[[f64; 3]; 3], v: [f64; 3]| {
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i] += m[j][i] * v[j];
            }
        }
        out
    };
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let normalize = |v: [f64; 3], fallback: [f64; 3]| {
        let n = norm(v);
        if n > 1e-15 {
            [v[0] / n, v[1] / n, v[2] / n]
        } else {
            fallback
        }
    };
    let objective = |a1: [f64; 3], a2: [f64; 3], b1: [f64; 3], b2: [f64; 3]| {
        let tb_plus = apply(&t, add(b1, b2, 1.0));
        let tb_minus = apply(&t, add(b1, b2, -1.0));
        0.5 * ((a1[0] * tb_plus[0] + a1[1] * tb_plus[1] + a1[2] * tb_plus[2])
            + (a2[0] * tb_minus[0] + a2[1] * tb_minus[1] + a2[2] * tb_minus[2]))
    };

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..starts.max(1) {
        let rand_unit = |rng: &mut ChaCha12Rng| {
            let v = [
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ];
            normalize(v, [1.0, 0.0, 0.0])
        };
        let mut b1 = rand_unit(&mut rng);
        let mut b2 = rand_unit(&mut rng);
        let mut a1 = rand_unit(&mut rng);
        let mut a2 = rand_unit(&mut rng);
        let mut f = objective(a1, a2, b1, b2);
        for _ in 0..500 {
            a1 = normalize(apply(&t, add(b1, b2, 1.0)), a1);
            a2 = normalize(apply(&t, add(b1, b2, -1.0)), a2);
            b1 = normalize(transpose_apply(&t, add(a1, a2, 1.0)), b1);
            b2 = normalize(transpose_apply(&t, add(a1, a2, -1.0)), b2);
            let fn_ = objective(a1, a2, b1, b2);
            if fn_ <= f + 1e-14 {
                f = f.max(fn_);
                break;
            }
            f = fn_;
        }
        best = best.max(f);
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaRow {
    pub site_a: i64,
    pub site_b: i64,
    pub beta: f64,
}

/// Two-qubit-marginal CHSH values for a list of XY site pairs.
pub fn beta_scan_xy(params: &XYParams, pairs: &[(i64, i64)]) -> Result<Vec<BetaRow>> {
    pairs
        .iter()
        .map(|&(i, j)| {
            if i == j {
                return Err(Error::InvalidArgument("pair sites must differ".into()));
            }
            let lo = i.min(j);
            let hi = i.max(j) + 1;
            let cov = CovarianceTruncation::build(params, Window::new(lo, hi)?)?;
            let rho = reduced_density_matrix(&[i, j], &cov)?;
            Ok(BetaRow {
                site_a: i,
                site_b: j,
                beta: chsh_beta(&rho)?,
            })
        })
        .collect()
}

/// Deterministic random two-qubit density matrix (Ginibre ensemble).
pub fn random_two_qubit_state(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut g: CMat = Array2::zeros((4, 4));
    for r in 0..4 {
        for c in 0..4 {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random::<f64>();
            let mag = (-2.0 * u1.ln()).sqrt();
            g[(r, c)] = Complex64::new(
                mag * (2.0 * std::f64::consts::PI * u2).cos(),
                mag * (2.0 * std::f64::consts::PI * u2).sin(),
            );
        }
    }
    let gh = g.t().mapv(|z| z.conj());
    let mut rho = g.dot(&gh);
    let tr = linalg::trace(&rho);
    rho /= tr;
    // symmetrize away rounding
    let rh = rho.t().mapv(|z| z.conj());
    let rho = (&rho + &rh) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(vec![0, 1], rho).expect("Ginibre state is a density matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matched_pair_is_chi2() {
        let st = PairedState::new(4).unwrap();
        let rho = omega1_rdm(&st, &[-1, 0]).unwrap();
        assert_eq!(rho.sites(), &[-1, 0]);
        let m = rho.matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 3)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(3, 3)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unmatched_member_is_maximally_mixed() {
        let st = PairedState::new(4).unwrap();
        let rho = omega1_rdm(&st, &[-1]).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_pairs_are_a_product_in_pair_order() {
        let st = PairedState::new(4).unwrap();
        let rho = omega1_rdm(&st, &[-1, 0, -2, 1]).unwrap();
        // pair ordering: (-1, 0) then (-2, 1)
        assert_eq!(rho.sites(), &[-1, 0, -2, 1]);
        let want = linalg::kron(&chi2_projector(), &chi2_projector());
        let dev = (rho.matrix() - &want)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-14);
        // partial trace of one pair leaves the other pair's chi2
        let traced = rho.partial_trace(&[-1, 0]).unwrap();
        let dev = (traced.matrix() - &chi2_projector())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-14);
    }

    #[test]
    fn site_outside_window_rejected() {
        let st = PairedState::new(2).unwrap();
        assert!(matches!(
            omega1_rdm(&st, &[5]),
            Err(Error::SiteOutsideWindow { site: 5 })
        ));
    }

    #[test]
    fn chsh_of_the_singlet_is_sqrt_two() {
        let rho = DensityMatrix::new(vec![0, 1], chi2_projector()).unwrap();
        assert_abs_diff_eq!(chsh_beta(&rho).unwrap(), 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            chsh_beta_ascent(&rho, 8, 7).unwrap(),
            2.0f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn chsh_of_pure_products_is_one() {
        // |00><00| and a rotated pure product
        let mut m: CMat = Array2::zeros((4, 4));
        m[(0, 0)] = Complex64::ONE;
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        assert_abs_diff_eq!(chsh_beta(&rho).unwrap(), 1.0, epsilon = 1e-12);

        let theta: f64 = 0.61;
        let psi = [theta.cos(), theta.sin()];
        let mut q: CMat = Array2::zeros((2, 2));
        for r in 0..2 {
            for c in 0..2 {
                q[(r, c)] = Complex64::new(psi[r] * psi[c], 0.0);
            }
        }
        let mixed_free = linalg::kron(&q, &q);
        let rho = DensityMatrix::new(vec![0, 1], mixed_free).unwrap();
        assert_abs_diff_eq!(chsh_beta(&rho).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chsh_of_half_singlet_mixture() {
        let m = chi2_projector() * Complex64::new(0.5, 0.0)
            + Array2::<Complex64>::eye(4) * Complex64::new(0.125, 0.0);
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        let want = 2.0f64.sqrt() / 2.0;
        assert_abs_diff_eq!(chsh_beta(&rho).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(chsh_beta_ascent(&rho, 8, 3).unwrap(), want, epsilon = 1e-7);
    }

    #[test]
    fn formula_and_ascent_agree_on_random_states() {
        for seed in 0..20 {
            let rho = random_two_qubit_state(seed);
            let f = chsh_beta(&rho).unwrap();
            let a = chsh_beta_ascent(&rho, 12, seed ^ 0xabcd).unwrap();
            assert!((f - a).abs() < 1e-6, "seed {seed}: formula {f} ascent {a}");
            assert!(f <= 2.0f64.sqrt() + 1e-10);
        }
    }

    #[test]
    fn polarized_xy_marginals_are_nearly_product() {
        let rows = beta_scan_xy(&XYParams::new(0.0, 2.0).unwrap(), &[(0, 1), (0, 3)]).unwrap();
        for r in rows {
            assert!(r.beta <= 1.0 + 1e-6, "beta {}", r.beta);
        }
    }
}
