//! Entanglement quantities: mode entanglement spectra, block entropy,
//! one-copy entanglement via majorization, logarithmic negativity,
//! singlet-fidelity optimization over local isometries, and the
//! localization-length search over pairs of blocks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceTruncation, QuadratureSpec, XYParams};
use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::linalg::{self, CMat};
use crate::quasifree::{reduced_density_matrix, DensityMatrix, MAX_RDM_SITES};

/// Single-mode occupation eigenvalues of a block-restricted covariance,
/// one representative `ν ∈ [1/2, 1]` per `(ν, 1−ν)` pair, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    occupations: Vec<f64>,
}

impl EntanglementSpectrum {
    /// Wrap a raw occupation list (values clipped to `[0, 1]` after a
    /// tolerance check). Mostly useful for tests and synthetic inputs.
    pub fn from_occupations(occ: Vec<f64>) -> Result<Self> {
        for &v in &occ {
            if !(-1e-10..=1.0 + 1e-10).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "occupation {v} outside [0, 1]"
                )));
            }
        }
        Ok(EntanglementSpectrum {
            occupations: occ.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn n_modes(&self) -> usize {
        self.occupations.len()
    }
}

const SPECTRUM_REFINEMENT_TOL: f64 = 1e-8;
const SPECTRUM_MAX_LOG2_POINTS: u32 = 18;

fn spectrum_from_truncation(trunc: &CovarianceTruncation) -> Result<Vec<f64>> {
    let occ = trunc.mode_occupations()?;
    let n = occ.len() / 2;
    // eigenvalues pair as (ν, 1−ν) by Γ-compatibility
    let mut reps = Vec::with_capacity(n);
    for k in 0..n {
        let lo = occ[k];
        let hi = occ[occ.len() - 1 - k];
        debug_assert!((lo + hi - 1.0).abs() < 1e-7, "pairing broken: {lo} {hi}");
        reps.push(hi.clamp(0.0, 1.0));
    }
    reps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(reps)
}

/// Entanglement spectrum of a contiguous block of the infinite chain.
///
/// The Toeplitz covariance embeds blocks exactly, so the ambient width
/// only scopes the computation. The quadrature grid is doubled until the
/// spectrum moves less than 1e-8 between doublings; for jump symbols at
/// criticality this typically needs one doubling beyond the default grid.
pub fn entanglement_spectrum(
    params: &XYParams,
    block: Window,
    ambient_n: i64,
) -> Result<EntanglementSpectrum> {
    let ambient = Window::symmetric(ambient_n)?;
    if !ambient.contains_window(&block) {
        return Err(Error::InvalidArgument(format!(
            "block {block} not contained in ambient [-{ambient_n}, {ambient_n})"
        )));
    }
    let base = QuadratureSpec::default();
    let spectrum_at = |log2_points: u32| -> Result<Vec<f64>> {
        let spec = QuadratureSpec {
            log2_points,
            ..base
        };
        let trunc = CovarianceTruncation::build_with_spec(params, block, spec)?;
        spectrum_from_truncation(&trunc)
    };
    let mut lg = base.log2_points;
    let mut prev = spectrum_at(lg)?;
    let mut dev = f64::INFINITY;
    while lg < SPECTRUM_MAX_LOG2_POINTS {
        lg += 1;
        let next = spectrum_at(lg)?;
        dev = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        prev = next;
        if dev <= SPECTRUM_REFINEMENT_TOL {
            return Ok(EntanglementSpectrum { occupations: prev });
        }
    }
    Err(Error::QuadratureNotConverged {
        estimate: dev,
        tolerance: SPECTRUM_REFINEMENT_TOL,
    })
}

fn binary_entropy_bits(v: f64) -> f64 {
    let mut s = 0.0;
    for p in [v, 1.0 - v] {
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    s
}

/// Block von Neumann entropy in bits: `S = Σ_k H₂(ν_k)`.
pub fn block_entropy(spectrum: &EntanglementSpectrum) -> f64 {
    spectrum.occupations.iter().map(|&v| binary_entropy_bits(v)).sum()
}

/// Schmidt probabilities of the block split, descending, with the mass
/// left in the unenumerated tail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchmidtData {
    probabilities: Vec<f64>,
    tail: f64,
}

impl SchmidtData {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }
}

pub const SCHMIDT_ENUMERATION_CAP: usize = 1 << 20;

struct HeapItem {
    prob: f64,
    last_flip: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.prob == other.prob && self.last_flip == other.last_flip
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| other.last_flip.cmp(&self.last_flip))
    }
}

/// Enumerate Schmidt probabilities (products of per-mode `max/min(ν, 1−ν)`
/// factors) in globally descending order until the cumulative mass reaches
/// `1 − tail_bound`.
///
/// Descending order means prefix sums of the output are exact prefix sums
/// of the true Schmidt vector, which the majorization step relies on.
pub fn schmidt_from_spectrum(
    spectrum: &EntanglementSpectrum,
    tail_bound: f64,
) -> Result<SchmidtData> {
    if !(0.0 < tail_bound && tail_bound < 1.0) {
        return Err(Error::InvalidArgument(
            "tail bound must lie in (0, 1)".into(),
        ));
    }
    // flip ratios sorted descending: cheapest flips first keeps the
    // best-first frontier small
    let mut ratios: Vec<f64> = spectrum
        .occupations
        .iter()
        .map(|&v| {
            let hi = v.max(1.0 - v);
            let lo = v.min(1.0 - v);
            lo / hi
        })
        .filter(|r| *r > 0.0)
        .collect();
    ratios.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let p_top: f64 = spectrum
        .occupations
        .iter()
        .map(|&v| v.max(1.0 - v))
        .product();

    let mut probabilities = Vec::new();
    let mut total = 0.0f64;
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    heap.push(HeapItem {
        prob: p_top,
        last_flip: usize::MAX,
    });
    while let Some(item) = heap.pop() {
        probabilities.push(item.prob);
        total += item.prob;
        if total >= 1.0 - tail_bound {
            break;
        }
        if probabilities.len() >= SCHMIDT_ENUMERATION_CAP {
            return Err(Error::TailNotReached {
                cap: SCHMIDT_ENUMERATION_CAP,
                tail_bound,
                tail: 1.0 - total,
            });
        }
        let start = if item.last_flip == usize::MAX {
            0
        } else {
            item.last_flip + 1
        };
        for j in start..ratios.len() {
            heap.push(HeapItem {
                prob: item.prob * ratios[j],
                last_flip: j,
            });
        }
    }
    Ok(SchmidtData {
        probabilities,
        tail: (1.0 - total).max(0.0),
    })
}

/// Exact-conversion one-copy entanglement via Nielsen majorization: the
/// largest `d` whose uniform vector majorizes the Schmidt vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OneCopy {
    pub d: u64,
    pub e1_bits: f64,
}

pub fn one_copy_exact(schmidt: &SchmidtData) -> Result<OneCopy> {
    let d_opt = largest_majorized_d(&schmidt.probabilities, 0.0);
    let d_pess = largest_majorized_d(&schmidt.probabilities, schmidt.tail);
    if d_opt != d_pess {
        return Err(Error::TailTooLarge { tail: schmidt.tail });
    }
    let d = d_opt;
    Ok(OneCopy {
        d,
        e1_bits: if d >= 2 { (d as f64).log2() } else { 0.0 },
    })
}

/// Largest `d` with `Σ_{j≤k} p_j ≤ k/d` for all `k ≤ d`; prefixes beyond
/// the enumerated list are bounded by `total + tail_slack`.
fn largest_majorized_d(probabilities: &[f64], tail_slack: f64) -> u64 {
    const EPS: f64 = 1e-12;
    let len = probabilities.len();
    let total: f64 = probabilities.iter().sum();
    let mut best = 1u64;
    let mut prefix = 0.0f64;
    let mut min_ratio = f64::INFINITY; // min over k <= d of k / prefix_k
    let mut d = 1u64;
    loop {
        let k = d as usize;
        let pref_k = if k <= len {
            prefix += probabilities[k - 1];
            prefix
        } else {
            (total + tail_slack).min(1.0)
        };
        if pref_k > 0.0 {
            min_ratio = min_ratio.min(k as f64 / pref_k);
        }
        let admissible = (d as f64) <= min_ratio + EPS;
        if admissible {
            best = d;
        } else {
            break;
        }
        if k > len && pref_k >= 1.0 - EPS {
            // all further constraints are k/1: no d beyond k is admissible
            break;
        }
        d += 1;
        if d > (len as u64 + 2).max(1 << 20) {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneCopyRow {
    pub length: usize,
    pub entropy_bits: f64,
    pub e1_bits: f64,
    pub d: u64,
    pub schmidt_terms: usize,
    pub schmidt_tail: f64,
}

pub const SCHMIDT_TAIL_DEFAULT: f64 = 1e-10;

/// Block entropy per length over a ladder of block lengths.
pub fn entropy_scan(
    params: &XYParams,
    lengths: &[usize],
    ambient_n: i64,
) -> Result<Vec<(usize, f64)>> {
    check_lengths(lengths, ambient_n)?;
    lengths
        .iter()
        .map(|&l| {
            let spectrum = entanglement_spectrum(params, Window::new(0, l as i64)?, ambient_n)?;
            Ok((l, block_entropy(&spectrum)))
        })
        .collect()
}

fn check_lengths(lengths: &[usize], ambient_n: i64) -> Result<()> {
    if lengths.is_empty() || !lengths.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "lengths must be non-empty and ascending".into(),
        ));
    }
    let max_len = *lengths.last().unwrap();
    if (max_len as i64) > ambient_n {
        return Err(Error::InvalidArgument(format!(
            "block length {max_len} exceeds ambient half-width {ambient_n}"
        )));
    }
    Ok(())
}

/// Entanglement spectrum → Schmidt data → `(S, E₁)` per block length.
pub fn one_copy_scan(
    params: &XYParams,
    lengths: &[usize],
    ambient_n: i64,
) -> Result<Vec<OneCopyRow>> {
    check_lengths(lengths, ambient_n)?;
    lengths
        .iter()
        .map(|&l| {
            let spectrum = entanglement_spectrum(params, Window::new(0, l as i64)?, ambient_n)?;
            let s = block_entropy(&spectrum);
            let schmidt = schmidt_from_spectrum(&spectrum, SCHMIDT_TAIL_DEFAULT)?;
            let oc = one_copy_exact(&schmidt)?;
            Ok(OneCopyRow {
                length: l,
                entropy_bits: s,
                e1_bits: oc.e1_bits,
                d: oc.d,
                schmidt_terms: schmidt.probabilities.len(),
                schmidt_tail: schmidt.tail,
            })
        })
        .collect()
}

/// Logarithmic negativity `log₂ ‖ρ^{T_B}‖₁` across the cut whose A side is
/// `cut_a` (a subset of the state's sites).
pub fn log_negativity(rho: &DensityMatrix, cut_a: &[i64]) -> Result<f64> {
    let n = rho.n_sites();
    let positions_a: Vec<usize> = cut_a
        .iter()
        .map(|s| {
            rho.sites()
                .iter()
                .position(|t| t == s)
                .ok_or(Error::SiteOutsideWindow { site: *s })
        })
        .collect::<Result<_>>()?;
    let mask_b: usize = (0..n)
        .filter(|q| !positions_a.contains(q))
        .map(|q| 1usize << (n - 1 - q))
        .sum();
    let dim = rho.dim();
    let m = rho.matrix();
    let mut pt: CMat = Array2::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            // transpose the B-side bits between row and column
            let rb = r & mask_b;
            let cb = c & mask_b;
            let r2 = (r & !mask_b) | cb;
            let c2 = (c & !mask_b) | rb;
            pt[(r2, c2)] = m[(r, c)];
        }
    }
    let w = linalg::eigvalsh(&pt)?;
    let trace_norm: f64 = w.iter().map(|v| v.abs()).sum();
    Ok(trace_norm.log2().max(0.0))
}

/// See-saw options: random starts, iteration cap, stagnation tolerance.
#[derive(Debug, Clone)]
pub struct SeesawOptions {
    pub starts: usize,
    pub iteration_cap: usize,
    pub stagnation_tol: f64,
    pub seed: u64,
    /// Optional warm-start isometries (already embedded to the current
    /// dimensions).
    pub warm: Vec<(CMat, CMat)>,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            starts: 8,
            iteration_cap: 500,
            stagnation_tol: 1e-10,
            seed: 0,
            warm: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FidelityOutcome {
    /// Best achieved overlap with `|χ_d⟩` — a certified lower bound on the
    /// optimum, never claimed optimal.
    pub fidelity: f64,
    pub isometry_a: CMat,
    pub isometry_b: CMat,
    /// False when every start was still improving at the iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

/// Heuristic maximum of `⟨χ_d| (V_A ⊗ V_B)† ρ (V_A ⊗ V_B) |χ_d⟩` over local
/// isometries, by alternating eigenvector updates with polar projection.
///
/// `cut_a` lists the A-side sites; the remaining sites form the B side in
/// their current order.
pub fn singlet_fidelity(
    rho: &DensityMatrix,
    cut_a: &[i64],
    d: usize,
    opts: &SeesawOptions,
) -> Result<FidelityOutcome> {
    let sites_b: Vec<i64> = rho
        .sites()
        .iter()
        .copied()
        .filter(|s| !cut_a.contains(s))
        .collect();
    if cut_a.len() + sites_b.len() != rho.n_sites() {
        return Err(Error::InvalidArgument("cut is not a subset of sites".into()));
    }
    let order: Vec<i64> = cut_a.iter().copied().chain(sites_b.iter().copied()).collect();
    let rho_ab = rho.reorder(&order)?;
    let dim_a = 1usize << cut_a.len();
    let dim_b = 1usize << sites_b.len();
    if d < 1 || dim_a < d || dim_b < d {
        return Err(Error::InvalidArgument(format!(
            "cut sides ({dim_a}, {dim_b}) cannot embed d = {d}"
        )));
    }
    let matrix = rho_ab.repaired().clone();

    let mut inits: Vec<(CMat, CMat)> = opts.warm.clone();
    for s in 0..opts.starts {
        let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ (0x9e3779b97f4a7c15u64.wrapping_mul(s as u64 + 1)));
        inits.push((
            random_isometry(dim_a, d, &mut rng),
            random_isometry(dim_b, d, &mut rng),
        ));
    }

    let runs: Vec<(f64, CMat, CMat, bool, usize)> = inits
        .par_iter()
        .map(|(va0, vb0)| seesaw_run(&matrix, dim_a, dim_b, d, va0, vb0, opts))
        .collect();

    let mut best = None::<(f64, CMat, CMat, bool, usize)>;
    for r in runs {
        match &best {
            None => best = Some(r),
            Some(b) if r.0 > b.0 => best = Some(r),
            _ => {}
        }
    }
    let (fidelity, isometry_a, isometry_b, converged, iterations) = best.unwrap();
    Ok(FidelityOutcome {
        fidelity,
        isometry_a,
        isometry_b,
        converged,
        iterations,
    })
}

fn seesaw_run(
    rho: &CMat,
    dim_a: usize,
    dim_b: usize,
    d: usize,
    va0: &CMat,
    vb0: &CMat,
    opts: &SeesawOptions,
) -> (f64, CMat, CMat, bool, usize) {
    let mut va = va0.clone();
    let mut vb = vb0.clone();
    let mut f = embedded_fidelity(rho, &va, &vb, dim_b, d);
    let mut converged = false;
    let mut iters = 0;
    for it in 0..opts.iteration_cap {
        iters = it + 1;
        let mut improved = false;

        // optimal V_A candidate: top eigenvector of (1_A ⊗ V_B)† ρ (1_A ⊗ V_B)
        let kb = kron_id_left(&vb, dim_a);
        let contracted = conjugate(rho, &kb);
        if let Some(w) = top_eigenvector(&contracted) {
            let cand = polar_isometry(&reshape(&w, dim_a, d));
            let fc = embedded_fidelity(rho, &cand, &vb, dim_b, d);
            if fc > f {
                improved = fc > f + opts.stagnation_tol;
                va = cand;
                f = fc;
            }
        }

        // optimal V_B candidate: top eigenvector of (V_A ⊗ 1_B)† ρ (V_A ⊗ 1_B)
        let ka = kron_id_right(&va, dim_b);
        let contracted = conjugate(rho, &ka);
        if let Some(w) = top_eigenvector(&contracted) {
            let wd = reshape(&w, d, dim_b);
            let cand = polar_isometry(&wd.t().to_owned());
            let fc = embedded_fidelity(rho, &va, &cand, dim_b, d);
            if fc > f {
                improved = improved || fc > f + opts.stagnation_tol;
                vb = cand;
                f = fc;
            }
        }

        if !improved {
            converged = true;
            break;
        }
    }
    (f, va, vb, converged, iters)
}

fn embedded_fidelity(rho: &CMat, va: &CMat, vb: &CMat, dim_b: usize, d: usize) -> f64 {
    let dim_a = va.nrows();
    let mut phi: Array1<Complex64> = Array1::zeros(dim_a * dim_b);
    let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for a in 0..dim_a {
        for b in 0..dim_b {
            let mut acc = Complex64::ZERO;
            for j in 0..d {
                acc += va[(a, j)] * vb[(b, j)];
            }
            phi[a * dim_b + b] = acc * scale;
        }
    }
    let rp = rho.dot(&phi);
    phi.iter()
        .zip(rp.iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// `1_{dim_left} ⊗ v`
fn kron_id_left(v: &CMat, dim_left: usize) -> CMat {
    let (r, c) = v.dim();
    let mut out: CMat = Array2::zeros((dim_left * r, dim_left * c));
    for i in 0..dim_left {
        for a in 0..r {
            for b in 0..c {
                out[(i * r + a, i * c + b)] = v[(a, b)];
            }
        }
    }
    out
}

/// `v ⊗ 1_{dim_right}`
fn kron_id_right(v: &CMat, dim_right: usize) -> CMat {
    let (r, c) = v.dim();
    let mut out: CMat = Array2::zeros((r * dim_right, c * dim_right));
    for a in 0..r {
        for b in 0..c {
            let val = v[(a, b)];
            if val == Complex64::ZERO {
                continue;
            }
            for i in 0..dim_right {
                out[(a * dim_right + i, b * dim_right + i)] = val;
            }
        }
    }
    out
}

fn conjugate(rho: &CMat, k: &CMat) -> CMat {
    let kh = k.t().mapv(|z| z.conj());
    kh.dot(&rho.dot(k))
}

fn top_eigenvector(m: &CMat) -> Option<Array1<Complex64>> {
    let (w, v) = linalg::eigh(m).ok()?;
    let last = w.len().checked_sub(1)?;
    Some(v.column(last).to_owned())
}

fn reshape(w: &Array1<Complex64>, rows: usize, cols: usize) -> CMat {
    let mut out: CMat = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            out[(r, c)] = w[r * cols + c];
        }
    }
    out
}

/// Closest isometry in Frobenius norm: the unitary polar factor.
fn polar_isometry(w: &CMat) -> CMat {
    use ndarray_linalg::SVD;
    match w.svd(true, true) {
        Ok((Some(u), _s, Some(vt))) => {
            let k = w.ncols().min(w.nrows());
            let ut = u.slice(ndarray::s![.., ..k]).to_owned();
            let vtt = vt.slice(ndarray::s![..k, ..]).to_owned();
            ut.dot(&vtt)
        }
        _ => w.clone(),
    }
}

fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    let mut w: CMat = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            // Box-Muller
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random::<f64>();
            let mag = (-2.0 * u1.ln()).sqrt();
            let re = mag * (2.0 * std::f64::consts::PI * u2).cos();
            let u3: f64 = rng.random::<f64>().max(1e-300);
            let u4: f64 = rng.random::<f64>();
            let mag2 = (-2.0 * u3.ln()).sqrt();
            let im = mag2 * (2.0 * std::f64::consts::PI * u4).cos();
            w[(r, c)] = Complex64::new(re, im);
        }
    }
    polar_isometry(&w)
}

/// Anything that can produce two-block reduced density matrices.
pub trait TwoBlockSource {
    fn rdm(&self, sites: &[i64]) -> Result<DensityMatrix>;
    fn label(&self) -> String;
}

impl TwoBlockSource for XYParams {
    fn rdm(&self, sites: &[i64]) -> Result<DensityMatrix> {
        let lo = *sites.iter().min().unwrap();
        let hi = *sites.iter().max().unwrap() + 1;
        let cov = CovarianceTruncation::build(self, Window::new(lo, hi)?)?;
        reduced_density_matrix(sites, &cov)
    }

    fn label(&self) -> String {
        format!("xy({self})")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub source: String,
    pub m: i64,
    pub distance: i64,
    pub epsilon: f64,
    pub l_max: usize,
    /// Least block length reaching fidelity `1 − ε`, if any.
    pub l_star: Option<usize>,
    pub fidelity_per_l: Vec<f64>,
    /// Row-major `[re, im]` dumps of the achieving isometries at the last
    /// evaluated block length.
    pub isometry_a: Vec<Vec<[f64; 2]>>,
    pub isometry_b: Vec<Vec<[f64; 2]>>,
}

/// Search the least block length `L ≤ l_max` such that the two-block state
/// on `Λ₁ = [M−L, M)`, `Λ₂ = [M+N, M+N+L)` reaches singlet fidelity
/// `1 − ε` for `χ_d` with `d = 2`. Isometries are warm-started from the
/// previous block length.
pub fn localization_length(
    source: &dyn TwoBlockSource,
    m: i64,
    distance: i64,
    epsilon: f64,
    l_max: usize,
    opts: &SeesawOptions,
) -> Result<LocalizationResult> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
    }
    if distance < 0 {
        return Err(Error::InvalidArgument("distance must be >= 0".into()));
    }
    if l_max == 0 || 2 * l_max > MAX_RDM_SITES {
        return Err(Error::TooManySites {
            n: 2 * l_max,
            max: MAX_RDM_SITES,
        });
    }
    let mut fidelity_per_l = Vec::with_capacity(l_max);
    let mut l_star = None;
    let mut warm: Vec<(CMat, CMat)> = Vec::new();
    let mut last_iso: Option<(CMat, CMat)> = None;
    for l in 1..=l_max {
        let li = l as i64;
        let lambda1: Vec<i64> = (m - li..m).collect();
        let lambda2: Vec<i64> = (m + distance..m + distance + li).collect();
        let sites: Vec<i64> = lambda1.iter().chain(lambda2.iter()).copied().collect();
        let rho = source.rdm(&sites)?;
        let run_opts = SeesawOptions {
            warm: warm.clone(),
            seed: opts.seed ^ (l as u64) << 32,
            ..opts.clone()
        };
        let out = singlet_fidelity(&rho, &lambda1, 2, &run_opts)?;
        fidelity_per_l.push(out.fidelity);
        // warm starts for L+1: the new Λ₁ site is prepended (most
        // significant qubit), the new Λ₂ site is appended (least
        // significant); try both basis states on each new qubit
        warm = embed_warm(&out.isometry_a, &out.isometry_b);
        last_iso = Some((out.isometry_a, out.isometry_b));
        if out.fidelity >= 1.0 - epsilon {
            l_star = Some(l);
            break;
        }
    }
    let (ia, ib) = last_iso.unwrap();
    Ok(LocalizationResult {
        source: source.label(),
        m,
        distance,
        epsilon,
        l_max,
        l_star,
        fidelity_per_l,
        isometry_a: dump_matrix(&ia),
        isometry_b: dump_matrix(&ib),
    })
}

fn embed_warm(va: &CMat, vb: &CMat) -> Vec<(CMat, CMat)> {
    let basis = |bit: usize| {
        let mut e: CMat = Array2::zeros((2, 1));
        e[(bit, 0)] = Complex64::ONE;
        e
    };
    let mut out = Vec::with_capacity(4);
    for ba in 0..2 {
        for bb in 0..2 {
            // Λ₁ grows leftward: new qubit is the most significant on A;
            // Λ₂ grows rightward: new qubit is the least significant on B.
            let va2 = kron_cols(&basis(ba), va);
            let vb2 = kron_cols(vb, &basis(bb));
            out.push((va2, vb2));
        }
    }
    out
}

/// Column-wise kron for isometries: maps `C^d → H₁ ⊗ H₂` by tensoring each
/// column of the right factor with the single column of the left (or vice
/// versa when the left has `d` columns).
fn kron_cols(left: &CMat, right: &CMat) -> CMat {
    let d = left.ncols().max(right.ncols());
    let rows = left.nrows() * right.nrows();
    let mut out: CMat = Array2::zeros((rows, d));
    for j in 0..d {
        let lj = if left.ncols() == 1 { 0 } else { j };
        let rj = if right.ncols() == 1 { 0 } else { j };
        for a in 0..left.nrows() {
            for b in 0..right.nrows() {
                out[(a * right.nrows() + b, j)] = left[(a, lj)] * right[(b, rj)];
            }
        }
    }
    out
}

fn dump_matrix(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(g: f64, l: f64) -> XYParams {
        XYParams::new(g, l).unwrap()
    }

    fn spec(occ: &[f64]) -> EntanglementSpectrum {
        EntanglementSpectrum::from_occupations(occ.to_vec()).unwrap()
    }

    #[test]
    fn single_site_spectrum_at_half_filling() {
        let s = entanglement_spectrum(&params(0.0, 0.0), Window::new(0, 1).unwrap(), 8).unwrap();
        assert_eq!(s.n_modes(), 1);
        assert_abs_diff_eq!(s.occupations()[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn polarized_spectrum_is_pure() {
        let s = entanglement_spectrum(&params(0.0, 2.0), Window::new(0, 4).unwrap(), 16).unwrap();
        for &v in s.occupations() {
            assert!((v - 1.0).abs() < 1e-3 || v.abs() < 1e-3);
        }
        assert!(block_entropy(&s) < 1e-6);
    }

    #[test]
    fn spectrum_is_translation_invariant() {
        let a = entanglement_spectrum(&params(1.0, 1.0), Window::new(0, 5).unwrap(), 32).unwrap();
        let b = entanglement_spectrum(&params(1.0, 1.0), Window::new(-7, -2).unwrap(), 32).unwrap();
        for (x, y) in a.occupations().iter().zip(b.occupations()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(block_entropy(&spec(&[0.5])), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(block_entropy(&spec(&[0.0, 1.0, 1.0, 0.0])), 0.0, epsilon = 1e-14);
        // invariance under nu <-> 1 - nu
        assert_abs_diff_eq!(
            block_entropy(&spec(&[0.3])),
            block_entropy(&spec(&[0.7])),
            epsilon = 1e-14
        );
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_from_spectrum(&spec(&[0.5]), 1e-12).unwrap();
        assert_eq!(s.probabilities(), &[0.5, 0.5]);
        let s = schmidt_from_spectrum(&spec(&[0.9, 0.5]), 1e-12).unwrap();
        let want = [0.45, 0.45, 0.05, 0.05];
        for (p, w) in s.probabilities().iter().zip(want) {
            assert_abs_diff_eq!(p, &w, epsilon = 1e-12);
        }
        // p1 is the product of max factors
        let sp = spec(&[0.8, 0.6, 0.55]);
        let s = schmidt_from_spectrum(&sp, 1e-12).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 0.8 * 0.6 * 0.55, epsilon = 1e-12);
        // descending order
        assert!(s.probabilities().windows(2).all(|w| w[0] >= w[1] - 1e-15));
    }

    #[test]
    fn one_copy_examples() {
        let oc = |probs: &[f64]| {
            one_copy_exact(&SchmidtData {
                probabilities: probs.to_vec(),
                tail: 0.0,
            })
            .unwrap()
        };
        let r = oc(&[0.5, 0.5]);
        assert_eq!((r.d, r.e1_bits), (2, 1.0));
        let r = oc(&[0.6, 0.4]);
        assert_eq!((r.d, r.e1_bits), (1, 0.0));
        let r = oc(&[0.25, 0.25, 0.25, 0.25]);
        assert_eq!((r.d, r.e1_bits), (4, 2.0));
        let r = oc(&[1.0]);
        assert_eq!((r.d, r.e1_bits), (1, 0.0));
    }

    #[test]
    fn one_copy_tail_guard() {
        // prefixes inside the enumerated list are exact, so a tail can only
        // flip comparisons that run past the list: [0.3] with tail 0.7
        // admits d = 3 if the tail is spread thin but not if it is bulky
        let s = SchmidtData {
            probabilities: vec![0.3],
            tail: 0.7,
        };
        assert!(matches!(one_copy_exact(&s), Err(Error::TailTooLarge { .. })));
        // a decidable case: all comparisons resolve within the list
        let s = SchmidtData {
            probabilities: vec![0.5, 0.3],
            tail: 0.2,
        };
        assert_eq!(one_copy_exact(&s).unwrap().d, 2);
    }

    #[test]
    fn negativity_of_product_and_singlet() {
        // product of two maximally mixed qubits
        let m: CMat = Array2::eye(4) / Complex64::new(4.0, 0.0);
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        assert_abs_diff_eq!(log_negativity(&rho, &[0]).unwrap(), 0.0, epsilon = 1e-12);

        let mut chi: CMat = Array2::zeros((4, 4));
        for (r, c) in [(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            chi[(r, c)] = Complex64::new(0.5, 0.0);
        }
        let rho = DensityMatrix::new(vec![0, 1], chi).unwrap();
        assert_abs_diff_eq!(log_negativity(&rho, &[0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn seesaw_reaches_the_singlet() {
        let mut chi: CMat = Array2::zeros((4, 4));
        for (r, c) in [(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            chi[(r, c)] = Complex64::new(0.5, 0.0);
        }
        let rho = DensityMatrix::new(vec![0, 1], chi).unwrap();
        let out = singlet_fidelity(&rho, &[0], 2, &SeesawOptions::default()).unwrap();
        assert!(out.fidelity > 1.0 - 1e-9, "fidelity {}", out.fidelity);
        assert!(out.converged);
    }

    #[test]
    fn seesaw_on_maximally_mixed_pair() {
        let m: CMat = Array2::eye(4) / Complex64::new(4.0, 0.0);
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        let out = singlet_fidelity(&rho, &[0], 2, &SeesawOptions::default()).unwrap();
        assert_abs_diff_eq!(out.fidelity, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn seesaw_on_half_singlet_mixture() {
        let mut chi: CMat = Array2::zeros((4, 4));
        for (r, c) in [(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            chi[(r, c)] = Complex64::new(0.25, 0.0);
        }
        let m: CMat = &chi + &(Array2::<Complex64>::eye(4) * Complex64::new(0.125, 0.0));
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        let out = singlet_fidelity(&rho, &[0], 2, &SeesawOptions::default()).unwrap();
        assert_abs_diff_eq!(out.fidelity, 0.625, epsilon = 1e-9);
    }

    #[test]
    fn seesaw_rejects_undersized_cut() {
        let m: CMat = Array2::eye(4) / Complex64::new(4.0, 0.0);
        let rho = DensityMatrix::new(vec![0, 1], m).unwrap();
        assert!(singlet_fidelity(&rho, &[0], 4, &SeesawOptions::default()).is_err());
    }

    #[test]
    fn entropy_grows_at_criticality() {
        let rows = one_copy_scan(&params(0.0, 0.0), &[2, 4, 8], 32).unwrap();
        assert!(rows[0].entropy_bits < rows[1].entropy_bits);
        assert!(rows[1].entropy_bits < rows[2].entropy_bits);
        for r in &rows {
            assert!(r.e1_bits <= r.entropy_bits + 1e-12);
        }
    }
}
