//! Quasi-equivalence and criticality diagnostics: truncated `tr(X)`,
//! Hilbert–Schmidt norms of `E − F` and `E − θ₋Eθ₋`, divergence
//! classification over truncation ladders, and cluster-decay scans.
//!
//! The window compression of the symbol is eigen-rounded to the nearest
//! orthogonal projection before the half-chain split. This keeps the two
//! trace identities (`‖E−F‖²_HS = tr X` and `‖E−θ₋Eθ₋‖²_HS = 4 tr X`)
//! exact finite-dimensional algebra at every truncation, while the
//! growth/saturation of `tr X` over the ladder still separates critical
//! from gapped couplings.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::covariance::{BlockTable, CovarianceTruncation, QuadratureSpec, XYParams};
use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::linalg::{self, CMat};
use crate::quasifree::{pauli_expectation, PauliString};

/// Nearest orthogonal projection to the window compression: eigenvalues
/// `ν ≥ 1/2` round to 1, the rest to 0.
fn rounded_projection(table: &BlockTable, half_width: i64) -> Result<CMat> {
    let window = Window::symmetric(half_width)?;
    let trunc = CovarianceTruncation::from_table(table, window)?;
    let (w, v) = linalg::eigh(trunc.complex_form())?;
    let dim = v.nrows();
    let kept: Vec<usize> = (0..dim).filter(|&k| w[k] >= 0.5).collect();
    let mut sel: CMat = Array2::zeros((dim, kept.len()));
    for (col, &k) in kept.iter().enumerate() {
        sel.column_mut(col).assign(&v.column(k));
    }
    let selh = sel.t().mapv(|z| z.conj());
    Ok(sel.dot(&selh))
}

/// Is row/column `idx` of the doubled window space on the right half-chain?
fn right_mask(half_width: i64) -> impl Fn(usize) -> bool {
    move |idx: usize| {
        let site = -half_width + (idx / 2) as i64;
        site >= 0
    }
}

struct SplitTraces {
    trace_x: f64,
    hs_e_minus_f: f64,
    hs_theta: f64,
}

fn split_traces(proj: &CMat, half_width: i64) -> SplitTraces {
    let right = right_mask(half_width);
    let dim = proj.nrows();
    let mut tr_rr = 0.0;
    let mut tr_ll = 0.0;
    let mut sq_rr = 0.0;
    let mut sq_ll = 0.0;
    let mut cross = 0.0;
    let mut hs_theta = 0.0;
    for i in 0..dim {
        let ri = right(i);
        let di = proj[(i, i)].re;
        if ri {
            tr_rr += di;
        } else {
            tr_ll += di;
        }
        for j in 0..dim {
            let same = ri == right(j);
            let sq = proj[(i, j)].norm_sqr();
            if same {
                if ri {
                    sq_rr += sq;
                } else {
                    sq_ll += sq;
                }
            } else {
                cross += sq;
                // (E - θEθ)_{ij} = 2 E_{ij} on the cross quadrants
                hs_theta += 4.0 * sq;
            }
        }
    }
    SplitTraces {
        // tr(Y) - tr(Y²) per half, with tr(Y²) = ‖Y‖²_F for hermitian Y
        trace_x: (tr_rr - sq_rr) + (tr_ll - sq_ll),
        hs_e_minus_f: cross,
        hs_theta,
    }
}

/// `tr(X_N)` for the window `[-N, N)` with the half-chain split at 0:
/// `X = PEP − (PEP)² + (1−P)E(1−P) − ((1−P)E(1−P))²`.
pub fn trace_x(params: &XYParams, n: i64) -> Result<f64> {
    check_half_width(n)?;
    let table = BlockTable::build(*params, (2 * n - 1) as usize, QuadratureSpec::default())?;
    let proj = rounded_projection(&table, n)?;
    Ok(split_traces(&proj, n).trace_x)
}

/// `‖E_N − F_N‖²_HS` with `F = PEP + (1−P)E(1−P)`; equals `trace_x` as an
/// algebraic identity at fixed truncation.
pub fn hs_norm_e_minus_f(params: &XYParams, n: i64) -> Result<f64> {
    check_half_width(n)?;
    let table = BlockTable::build(*params, (2 * n - 1) as usize, QuadratureSpec::default())?;
    let proj = rounded_projection(&table, n)?;
    Ok(split_traces(&proj, n).hs_e_minus_f)
}

/// `‖E_N − θ₋E_Nθ₋‖²_HS`; equals `4·trace_x` at fixed truncation.
pub fn hs_norm_theta_conjugation(params: &XYParams, n: i64) -> Result<f64> {
    check_half_width(n)?;
    let table = BlockTable::build(*params, (2 * n - 1) as usize, QuadratureSpec::default())?;
    let proj = rounded_projection(&table, n)?;
    Ok(split_traces(&proj, n).hs_theta)
}

fn check_half_width(n: i64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation half-width must be >= 2, got {n}"
        )));
    }
    Ok(())
}

/// All half-chain trace diagnostics at one truncation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceIdentityReport {
    pub n: i64,
    pub trace_x: f64,
    pub hs_e_minus_f: f64,
    pub hs_theta: f64,
    /// Identity deviations, reported with the data.
    pub dev_e_minus_f: f64,
    pub dev_theta: f64,
    /// Difference between forming the operator products inside `[-N, N)`
    /// and inside the doubled window `[-2N, 2N)` traced back over the
    /// inner sites; estimates the truncation error of the window ordering.
    pub truncation_error: Option<f64>,
}

/// Compute `tr X`, both HS norms, and optionally the doubled-window
/// truncation-error estimate, sharing one block table.
pub fn trace_identity_report(
    table: &BlockTable,
    n: i64,
    with_error_estimate: bool,
) -> Result<TraceIdentityReport> {
    check_half_width(n)?;
    let proj = rounded_projection(table, n)?;
    let t = split_traces(&proj, n);
    let truncation_error = if with_error_estimate {
        let big = rounded_projection(table, 2 * n)?;
        let inner = partial_trace_x(&big, 2 * n, n);
        Some((inner - t.trace_x).abs())
    } else {
        None
    };
    Ok(TraceIdentityReport {
        n,
        trace_x: t.trace_x,
        hs_e_minus_f: t.hs_e_minus_f,
        hs_theta: t.hs_theta,
        dev_e_minus_f: (t.hs_e_minus_f - t.trace_x).abs(),
        dev_theta: (t.hs_theta - 4.0 * t.trace_x).abs(),
        truncation_error,
    })
}

/// Diagonal of `X` built on a wide window, traced over the inner sites
/// only: the "semi-infinite products first, truncate second" ordering.
fn partial_trace_x(proj: &CMat, big_half: i64, inner_half: i64) -> f64 {
    let right = right_mask(big_half);
    let dim = proj.nrows();
    let mut acc = 0.0;
    for i in 0..dim {
        let site = -big_half + (i / 2) as i64;
        if site < -inner_half || site >= inner_half {
            continue;
        }
        let ri = right(i);
        let mut row_sq = 0.0;
        for j in 0..dim {
            if right(j) == ri {
                row_sq += proj[(i, j)].norm_sqr();
            }
        }
        acc += proj[(i, i)].re - row_sq;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Diverging,
    Converging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    /// Minimum fitted slope (versus `ln N`) to call a ladder diverging.
    pub slope_min: f64,
    /// Maximum relative RMS residual of the log fit.
    pub residual_max: f64,
    /// Maximum |v(last) − v(previous)| to call a ladder converged.
    pub converge_diff: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            slope_min: 0.01,
            residual_max: 0.05,
            converge_diff: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogFit {
    /// Slope with respect to the natural log of the truncation size.
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual relative to the RMS of the values.
    pub rms_rel_residual: f64,
}

pub fn log_fit(sizes: &[i64], values: &[f64]) -> LogFit {
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let (slope, intercept, rms) = linalg::linear_fit(&x, values);
    let scale = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
    LogFit {
        slope,
        intercept,
        rms_rel_residual: if scale > 0.0 { rms / scale } else { 0.0 },
    }
}

/// Converging if the last successive difference is below threshold;
/// diverging if the values fit `a·ln N + b` with a slope above threshold
/// and a small relative residual; otherwise inconclusive.
pub fn classify_divergence(
    sizes: &[i64],
    values: &[f64],
    thresholds: &ClassifyThresholds,
) -> Result<(Classification, LogFit)> {
    if sizes.len() < 4 || sizes.len() != values.len() {
        return Err(Error::InvalidArgument(
            "classification needs at least 4 ladder points".into(),
        ));
    }
    if !sizes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "ladder sizes must be strictly increasing".into(),
        ));
    }
    let fit = log_fit(sizes, values);
    let last_diff = (values[values.len() - 1] - values[values.len() - 2]).abs();
    let class = if last_diff < thresholds.converge_diff {
        Classification::Converging
    } else if fit.slope > thresholds.slope_min && fit.rms_rel_residual < thresholds.residual_max {
        Classification::Diverging
    } else {
        Classification::Inconclusive
    };
    Ok((class, fit))
}

/// `tr X` over a ladder of truncation half-widths, classified.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceScan {
    pub params: XYParams,
    pub sizes: Vec<i64>,
    pub reports: Vec<TraceIdentityReport>,
    pub classification: Classification,
    pub fit: LogFit,
}

pub fn divergence_scan(
    params: &XYParams,
    sizes: &[i64],
    thresholds: &ClassifyThresholds,
    with_error_estimate: bool,
) -> Result<DivergenceScan> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("empty ladder".into()));
    }
    let max_n = *sizes.iter().max().unwrap();
    let dmax = if with_error_estimate { 4 * max_n } else { 2 * max_n } - 1;
    let table = BlockTable::build(*params, dmax as usize, QuadratureSpec::default())?;
    let reports: Vec<TraceIdentityReport> = sizes
        .iter()
        .map(|&n| trace_identity_report(&table, n, with_error_estimate))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = reports.iter().map(|r| r.trace_x).collect();
    for v in &values {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "divergence scan value",
            });
        }
        if *v < -1e-10 {
            return Err(Error::InvalidArgument(format!(
                "trace_x = {v} violates positivity"
            )));
        }
    }
    let (classification, fit) = classify_divergence(sizes, &values, thresholds)?;
    Ok(DivergenceScan {
        params: *params,
        sizes: sizes.to_vec(),
        reports,
        classification,
        fit,
    })
}

/// Connected correlations below this magnitude are treated as numerically
/// zero and excluded from decay fits.
pub const CLUSTER_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate: `m` in `c·e^{−mk}` or `p` in `c·k^{−p}`.
    pub rate: f64,
    pub log_amplitude: f64,
    pub rms_log_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayPreference {
    Exponential,
    PowerLaw,
    /// All connected values below the numerical floor: consistent with
    /// arbitrarily fast decay, inconsistent with any power law.
    BelowFloor,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterScan {
    pub params: XYParams,
    pub distances: Vec<i64>,
    pub connected: Vec<f64>,
    pub exp_fit: Option<DecayFit>,
    pub pow_fit: Option<DecayFit>,
    pub preference: DecayPreference,
}

/// Connected correlations `⟨a·τ_k(b)⟩ − ⟨a⟩⟨b⟩` for `k = 1..k_max`, with
/// exponential and power-law decay fits on the values above the floor.
pub fn cluster_scan(
    a: &PauliString,
    b: &PauliString,
    params: &XYParams,
    k_max: i64,
) -> Result<ClusterScan> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let lo = a
        .support()
        .chain(b.support())
        .min()
        .ok_or_else(|| Error::InvalidArgument("cluster observables must be non-trivial".into()))?;
    let hi = a
        .support()
        .chain(b.support().map(|s| s + k_max))
        .max()
        .unwrap()
        + 1;
    let cov = CovarianceTruncation::build(params, Window::new(lo, hi)?)?;
    let ea = pauli_expectation(a, &cov)?;
    let eb = pauli_expectation(b, &cov)?;
    let mut distances = Vec::with_capacity(k_max as usize);
    let mut connected = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let joint = pauli_expectation(&a.mul(&b.shift(k)), &cov)?;
        distances.push(k);
        connected.push(joint - ea * eb);
    }

    let usable: Vec<(f64, f64)> = distances
        .iter()
        .zip(&connected)
        .filter(|(_, c)| c.abs() > CLUSTER_FLOOR)
        .map(|(&k, &c)| (k as f64, c.abs().ln()))
        .collect();

    let (exp_fit, pow_fit, preference) = if usable.len() < 3 {
        let pref = if connected.iter().all(|c| c.abs() <= CLUSTER_FLOOR) {
            DecayPreference::BelowFloor
        } else {
            DecayPreference::Inconclusive
        };
        (None, None, pref)
    } else {
        let ks: Vec<f64> = usable.iter().map(|(k, _)| *k).collect();
        let logs: Vec<f64> = usable.iter().map(|(_, l)| *l).collect();
        let (me, be, re) = linalg::linear_fit(&ks, &logs);
        let lks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
        let (mp, bp, rp) = linalg::linear_fit(&lks, &logs);
        let exp_fit = DecayFit {
            rate: -me,
            log_amplitude: be,
            rms_log_residual: re,
        };
        let pow_fit = DecayFit {
            rate: -mp,
            log_amplitude: bp,
            rms_log_residual: rp,
        };
        let pref = if re < rp {
            DecayPreference::Exponential
        } else {
            DecayPreference::PowerLaw
        };
        (Some(exp_fit), Some(pow_fit), pref)
    };

    Ok(ClusterScan {
        params: *params,
        distances,
        connected,
        exp_fit,
        pow_fit,
        preference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasifree::Pauli;
    use approx::assert_abs_diff_eq;

    fn params(g: f64, l: f64) -> XYParams {
        XYParams::new(g, l).unwrap()
    }

    fn rel_dev(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn identities_hold_at_fixed_truncation() {
        for (g, l) in [(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)] {
            let p = params(g, l);
            let table = BlockTable::build(p, 2 * 12 - 1, QuadratureSpec::default()).unwrap();
            let r = trace_identity_report(&table, 12, false).unwrap();
            assert!(
                rel_dev(r.hs_e_minus_f, r.trace_x) < 1e-8,
                "({g},{l}): hs={} trx={}",
                r.hs_e_minus_f,
                r.trace_x
            );
            assert!(rel_dev(r.hs_theta, 4.0 * r.trace_x) < 1e-8);
            assert!(r.trace_x >= -1e-10);
        }
    }

    #[test]
    fn polarized_symbol_commutes_with_the_split() {
        // E is diagonal for (0, 2): X vanishes identically and E = F.
        let p = params(0.0, 2.0);
        assert!(trace_x(&p, 8).unwrap().abs() < 1e-12);
        assert!(hs_norm_e_minus_f(&p, 8).unwrap() < 1e-12);
        assert!(hs_norm_theta_conjugation(&p, 8).unwrap() < 1e-12);
    }

    #[test]
    fn truncation_error_estimate_is_small_for_gapped() {
        let table =
            BlockTable::build(params(1.0, 2.0), 4 * 8 - 1, QuadratureSpec::default()).unwrap();
        let r = trace_identity_report(&table, 8, true).unwrap();
        assert!(r.truncation_error.unwrap() < 1e-3, "{:?}", r.truncation_error);
    }

    #[test]
    fn classify_constant_sequence_as_converging() {
        let sizes = [16, 32, 64, 128];
        let values = [0.7, 0.7, 0.7, 0.7];
        let (c, _) = classify_divergence(&sizes, &values, &ClassifyThresholds::default()).unwrap();
        assert_eq!(c, Classification::Converging);
    }

    #[test]
    fn classify_exact_log_sequence_as_diverging() {
        let sizes = [16i64, 32, 64, 128, 256];
        let values: Vec<f64> = sizes.iter().map(|&n| 0.5 * (n as f64).ln() + 0.2).collect();
        let (c, fit) = classify_divergence(&sizes, &values, &ClassifyThresholds::default()).unwrap();
        assert_eq!(c, Classification::Diverging);
        assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 1e-6);
        assert!(fit.rms_rel_residual < 1e-12);
    }

    #[test]
    fn classify_needs_four_points() {
        let r = classify_divergence(&[2, 4, 8], &[1.0, 2.0, 3.0], &ClassifyThresholds::default());
        assert!(r.is_err());
    }

    #[test]
    fn critical_ladder_diverges_and_gapped_converges() {
        let ladder = [8i64, 16, 32, 64];
        let scan = divergence_scan(
            &params(1.0, 1.0),
            &ladder,
            &ClassifyThresholds::default(),
            false,
        )
        .unwrap();
        assert_eq!(scan.classification, Classification::Diverging);
        // monotone non-decreasing up to quadrature noise
        for w in scan.reports.windows(2) {
            assert!(w[1].trace_x >= w[0].trace_x - 1e-6);
        }
        let scan = divergence_scan(
            &params(1.0, 2.0),
            &ladder,
            &ClassifyThresholds::default(),
            false,
        )
        .unwrap();
        assert_eq!(scan.classification, Classification::Converging);
    }

    #[test]
    fn cluster_scan_critical_prefers_power_law() {
        let a = PauliString::single(0, Pauli::Z);
        let scan = cluster_scan(&a, &a, &params(0.0, 0.0), 12).unwrap();
        assert_eq!(scan.preference, DecayPreference::PowerLaw);
        let e = scan.exp_fit.unwrap();
        let p = scan.pow_fit.unwrap();
        assert!(p.rms_log_residual < 0.5 * e.rms_log_residual);
        // k^{-2} trend
        assert_abs_diff_eq!(p.rate, 2.0, epsilon = 0.05);
    }

    #[test]
    fn cluster_scan_gapped_anisotropic_prefers_exponential() {
        let a = PauliString::single(0, Pauli::Z);
        let scan = cluster_scan(&a, &a, &params(1.0, 2.0), 10).unwrap();
        assert_eq!(scan.preference, DecayPreference::Exponential);
        let e = scan.exp_fit.unwrap();
        let p = scan.pow_fit.unwrap();
        assert!(e.rms_log_residual < 0.5 * p.rms_log_residual);
    }

    #[test]
    fn cluster_scan_product_state_is_below_floor() {
        let a = PauliString::single(0, Pauli::Z);
        let scan = cluster_scan(&a, &a, &params(0.0, 2.0), 8).unwrap();
        assert_eq!(scan.preference, DecayPreference::BelowFloor);
        assert!(scan.connected.iter().all(|c| c.abs() <= CLUSTER_FLOOR));
    }
}
