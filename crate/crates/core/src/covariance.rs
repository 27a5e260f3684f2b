//! XY ground-state covariance: momentum-space symbol, Fourier blocks, and
//! finite block-Toeplitz truncations in complex and Majorana form.
//!
//! The symbol is sampled on a uniform grid offset by half a step, so the
//! zeros of the dispersion at critical couplings never coincide with a
//! sample point. With that grid the assembled window matrix is an exact
//! compression of a projection (spectrum inside `[0, 1]` to rounding), and
//! the Γ-compatibility identity `ΓAΓ + A = 1` holds on the window to the
//! same accuracy.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::linalg::{self, CMat, RMat};

/// Anisotropy γ and transverse field λ of the XY chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XYParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl XYParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !gamma.is_finite() || !lambda.is_finite() {
            return Err(Error::NonFinite {
                context: "XY parameters",
            });
        }
        Ok(XYParams { gamma, lambda })
    }

    /// Criticality condition: `|λ| = 1, γ ≠ 0` or `|λ| < 1, γ = 0`.
    pub fn is_critical(&self) -> bool {
        (self.lambda.abs() == 1.0 && self.gamma != 0.0)
            || (self.lambda.abs() < 1.0 && self.gamma == 0.0)
    }

    /// `|λ| < 1`, `γ ≠ 0`: the symbol still defines a quasi-free state, but
    /// only as the Θ-invariant ground state sector (no uniqueness claim).
    pub fn is_symmetry_broken_sector(&self) -> bool {
        self.lambda.abs() < 1.0 && self.gamma != 0.0
    }
}

impl std::fmt::Display for XYParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "gamma={} lambda={}", self.gamma, self.lambda)
    }
}

/// Dispersion `k(x) = [(cos x − λ)² + γ² sin²x]^{1/2}`.
pub fn dispersion(params: &XYParams, x: f64) -> f64 {
    let a = x.cos() - params.lambda;
    let b = params.gamma * x.sin();
    (a * a + b * b).sqrt()
}

const SYMBOL_SINGULAR_TOL: f64 = 1e-12;

/// 2×2 complex block. Row/column 0 is the creation component, 1 the
/// annihilation component of the doubled space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block2(pub [[Complex64; 2]; 2]);

impl Block2 {
    pub fn zero() -> Self {
        Block2([[Complex64::ZERO; 2]; 2])
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Block2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn mul(&self, other: &Block2) -> Block2 {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[Complex64::ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Block2(out)
    }

    pub fn max_abs_diff(&self, other: &Block2) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

/// Momentum-space symbol `Ê(x) = ½(1 + K(x)/k(x))`, a rank-one projection
/// wherever `k(x) > 0`.
pub fn symbol_eval(params: &XYParams, x: f64) -> Result<Block2> {
    let k = dispersion(params, x);
    if k <= SYMBOL_SINGULAR_TOL {
        return Err(Error::SymbolSingular { x, k });
    }
    let a = (x.cos() - params.lambda) / k;
    let b = params.gamma * x.sin() / k;
    Ok(Block2([
        [
            Complex64::new(0.5 * (1.0 + a), 0.0),
            Complex64::new(0.0, -0.5 * b),
        ],
        [
            Complex64::new(0.0, 0.5 * b),
            Complex64::new(0.5 * (1.0 - a), 0.0),
        ],
    ]))
}

/// Quadrature grid for the Fourier coefficients of the symbol.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// log2 of the sample count of the base grid; one refinement doubling
    /// is always performed for the convergence estimate.
    pub log2_points: u32,
    /// Maximum allowed disagreement between the two grids.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            log2_points: 14,
            tolerance: 1e-4,
        }
    }
}

/// Fourier coefficients `C(d) = (2π)⁻¹ ∫ e^{−idx} Ê(x) dx` for `0 ≤ d ≤ dmax`,
/// cached once per parameter set; `C(−d) = C(d)†` exactly.
#[derive(Debug, Clone)]
pub struct BlockTable {
    params: XYParams,
    spec: QuadratureSpec,
    blocks: Vec<Block2>,
    /// Largest disagreement between the base and refined grids.
    error_estimate: f64,
}

/// DFT of the sampled symbol on the offset grid `x_m = 2π(m+δ)/n`.
///
/// Phases are taken from an exact integer-indexed table so the assembled
/// Toeplitz matrix stays an exact compression of the sampled projection.
fn dft_blocks(params: &XYParams, log2_points: u32, dmax: usize) -> Result<Vec<Block2>> {
    let n = 1usize << log2_points;
    // Offsets tried in order; the first grid avoiding symbol zeros wins.
    let offsets = [0.5f64, 0.5 + 1.0 / 64.0, 0.5 + 1.0 / 128.0];
    let mut samples: Option<Vec<Block2>> = None;
    let mut delta = 0.5;
    'outer: for &off in &offsets {
        let mut s = Vec::with_capacity(n);
        for m in 0..n {
            let x = 2.0 * std::f64::consts::PI * (m as f64 + off) / n as f64;
            match symbol_eval(params, x) {
                Ok(b) => s.push(b),
                Err(Error::SymbolSingular { .. }) => continue 'outer,
                Err(e) => return Err(e),
            }
        }
        samples = Some(s);
        delta = off;
        break;
    }
    let samples = samples.ok_or(Error::SymbolSingular {
        x: f64::NAN,
        k: 0.0,
    })?;

    // e^{−i d x_m} = ω^{(d (2m+1)) mod 2n} exactly when δ = 1/2, with
    // ω = e^{−iπ/n}; for the fallback offsets an additional constant phase
    // per d is folded in.
    let table: Vec<Complex64> = (0..2 * n)
        .map(|r| {
            let phi = -std::f64::consts::PI * r as f64 / n as f64;
            Complex64::from_polar(1.0, phi)
        })
        .collect();
    let extra = delta - 0.5; // 0 on the primary grid
    let mut blocks = Vec::with_capacity(dmax + 1);
    for d in 0..=dmax {
        let mut acc = [[Complex64::ZERO; 2]; 2];
        for (m, b) in samples.iter().enumerate() {
            let r = (d * (2 * m + 1)) % (2 * n);
            let ph = table[r];
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += ph * b.0[i][j];
                }
            }
        }
        let scale = 1.0 / n as f64;
        let corr = if extra == 0.0 {
            Complex64::ONE
        } else {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * d as f64 * extra / n as f64)
        };
        for row in &mut acc {
            for z in row.iter_mut() {
                *z *= scale * corr;
            }
        }
        blocks.push(Block2(acc));
    }
    Ok(blocks)
}

impl BlockTable {
    pub fn build(params: XYParams, dmax: usize, spec: QuadratureSpec) -> Result<Self> {
        let coarse = dft_blocks(&params, spec.log2_points, dmax)?;
        let fine = dft_blocks(&params, spec.log2_points + 1, dmax)?;
        let mut err = 0.0f64;
        for (a, b) in coarse.iter().zip(&fine) {
            err = err.max(a.max_abs_diff(b));
        }
        if err > spec.tolerance {
            return Err(Error::QuadratureNotConverged {
                estimate: err,
                tolerance: spec.tolerance,
            });
        }
        Ok(BlockTable {
            params,
            spec,
            blocks: fine,
            error_estimate: err,
        })
    }

    pub fn params(&self) -> XYParams {
        self.params
    }

    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    pub fn dmax(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn block(&self, d: i64) -> Block2 {
        let ad = d.unsigned_abs() as usize;
        assert!(ad <= self.dmax(), "block distance {d} beyond table range");
        if d >= 0 {
            self.blocks[ad]
        } else {
            self.blocks[ad].dagger()
        }
    }
}

/// Single Fourier coefficient of the symbol with default quadrature.
pub fn covariance_block(params: &XYParams, d: i64) -> Result<Block2> {
    let table = BlockTable::build(*params, d.unsigned_abs() as usize, QuadratureSpec::default())?;
    Ok(table.block(d))
}

/// Finite block-Toeplitz compression of the basis projection to a window,
/// in both complex (particle/hole) and real antisymmetric (Majorana) form.
///
/// Matrix layout: row/column `2·offset + c` where `offset` indexes window
/// sites ascending and `c` is the doubled-space component. The Majorana
/// form uses the same interleaving with `m_{2j}` at `c = 0` and `m_{2j+1}`
/// at `c = 1`; `M_{ab} = (i/2)·⟨[m_a, m_b]⟩`.
#[derive(Debug, Clone)]
pub struct CovarianceTruncation {
    params: XYParams,
    window: Window,
    complex_form: CMat,
    majorana_form: RMat,
    quadrature_error: f64,
}

const MAJORANA_IMAG_TOL: f64 = 1e-9;

impl CovarianceTruncation {
    pub fn build(params: &XYParams, window: Window) -> Result<Self> {
        Self::build_with_spec(params, window, QuadratureSpec::default())
    }

    pub fn build_with_spec(
        params: &XYParams,
        window: Window,
        spec: QuadratureSpec,
    ) -> Result<Self> {
        let table = BlockTable::build(*params, window.len().saturating_sub(1), spec)?;
        Self::from_table(&table, window)
    }

    pub fn from_table(table: &BlockTable, window: Window) -> Result<Self> {
        let n = window.len();
        assert!(
            table.dmax() + 1 >= n,
            "block table covers distances up to {}, window needs {}",
            table.dmax(),
            n - 1
        );

        let mut complex_form: CMat = Array2::zeros((2 * n, 2 * n));
        for j in 0..n {
            for k in 0..n {
                let b = table.block(j as i64 - k as i64);
                for ci in 0..2 {
                    for cj in 0..2 {
                        complex_form[(2 * j + ci, 2 * k + cj)] = b.0[ci][cj];
                    }
                }
            }
        }

        let majorana_form = majorana_from_blocks(table, n)?;

        Ok(CovarianceTruncation {
            params: table.params(),
            window,
            complex_form,
            majorana_form,
            quadrature_error: table.error_estimate(),
        })
    }

    pub fn params(&self) -> XYParams {
        self.params
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn quadrature_error(&self) -> f64 {
        self.quadrature_error
    }

    pub fn complex_form(&self) -> &CMat {
        &self.complex_form
    }

    pub fn majorana_form(&self) -> &RMat {
        &self.majorana_form
    }

    /// Majorana covariance restricted to the given Majorana indices
    /// (`2·site + c` in absolute site coordinates).
    pub fn majorana_submatrix(&self, indices: &[i64]) -> Result<RMat> {
        let mut rows = Vec::with_capacity(indices.len());
        for &a in indices {
            let site = a.div_euclid(2);
            let c = a.rem_euclid(2) as usize;
            let off = self.window.offset(site).ok_or(Error::SupportOutsideWindow {
                site,
                lo: self.window.lo(),
                hi: self.window.hi(),
            })?;
            rows.push(2 * off + c);
        }
        let k = rows.len();
        let mut out = Array2::zeros((k, k));
        for (i, &ri) in rows.iter().enumerate() {
            for (j, &rj) in rows.iter().enumerate() {
                out[(i, j)] = self.majorana_form[(ri, rj)];
            }
        }
        Ok(out)
    }

    /// Eigenvalues of the complex form, ascending; exact compression of a
    /// projection, so they lie in `[0, 1]`.
    pub fn mode_occupations(&self) -> Result<Vec<f64>> {
        Ok(linalg::eigvalsh(&self.complex_form)?.to_vec())
    }

    /// Mode occupations recovered from the Majorana form: the hermitian
    /// matrix `iM` has eigenvalues `±s_k` and `ν = (1 ± s)/2`.
    pub fn mode_occupations_from_majorana(&self) -> Result<Vec<f64>> {
        let n2 = self.majorana_form.nrows();
        let mut im: CMat = Array2::zeros((n2, n2));
        for i in 0..n2 {
            for j in 0..n2 {
                im[(i, j)] = Complex64::new(0.0, self.majorana_form[(i, j)]);
            }
        }
        let w = linalg::eigvalsh(&im)?;
        let mut occ: Vec<f64> = w.iter().map(|s| 0.5 * (1.0 + s)).collect();
        occ.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(occ)
    }

    /// Max deviation of the window identity `ΓAΓ + A = 1`, where Γ acts by
    /// component swap and conjugation.
    pub fn gamma_compatibility_deviation(&self) -> f64 {
        let n = self.window.len();
        let a = &self.complex_form;
        let mut dev = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                for ci in 0..2 {
                    for cj in 0..2 {
                        let gag = a[(2 * j + (1 - ci), 2 * k + (1 - cj))].conj();
                        let id = if j == k && ci == cj {
                            Complex64::ONE
                        } else {
                            Complex64::ZERO
                        };
                        dev = dev.max((gag + a[(2 * j + ci, 2 * k + cj)] - id).norm());
                    }
                }
            }
        }
        dev
    }

    /// Max deviation of 2×2 blocks from depending on `j − k` only.
    pub fn toeplitz_deviation(&self) -> f64 {
        let n = self.window.len();
        let a = &self.complex_form;
        let mut dev = 0.0f64;
        for j in 1..n {
            for k in 1..n {
                for ci in 0..2 {
                    for cj in 0..2 {
                        let d =
                            (a[(2 * j + ci, 2 * k + cj)] - a[(2 * (j - 1) + ci, 2 * (k - 1) + cj)]).norm();
                        dev = dev.max(d);
                    }
                }
            }
        }
        dev
    }
}

fn majorana_from_blocks(table: &BlockTable, n: usize) -> Result<RMat> {
    let mut m: RMat = Array2::zeros((2 * n, 2 * n));
    let mut worst_imag = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let c = table.block(j as i64 - k as i64).0;
            let (c11, c12, c21, c22) = (c[0][0], c[0][1], c[1][0], c[1][1]);
            // <m_a m_b> from the particle/hole two-point functions:
            //   <c_j c*_k> = C11, <c_j c_k> = C12, <c*_j c*_k> = C21, <c*_j c_k> = C22
            let g = [
                [
                    c12 + c11 + c22 + c21,
                    -Complex64::I * (c12 - c11 + c22 - c21),
                ],
                [
                    -Complex64::I * (c12 + c11 - c22 - c21),
                    -(c12 - c11 - c22 + c21),
                ],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    let delta = if j == k && a == b { 1.0 } else { 0.0 };
                    let val = Complex64::I * (g[a][b] - delta);
                    worst_imag = worst_imag.max(val.im.abs());
                    m[(2 * j + a, 2 * k + b)] = val.re;
                }
            }
        }
    }
    if worst_imag > MAJORANA_IMAG_TOL {
        return Err(Error::NonFinite {
            context: "Majorana covariance acquired an imaginary part",
        });
    }
    // Mᵀ = −M exactly.
    let mt = m.t().to_owned();
    Ok((&m - &mt) * 0.5)
}
