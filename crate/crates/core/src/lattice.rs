//! Finite lattice windows and the structural operators of the chain.
//!
//! Test functions live on the doubled space `K = l2(Z) ⊕ l2(Z)`; a
//! [`TestVector`] stores both components explicitly over a finite
//! half-open [`Window`] of sites. Site 0 always belongs to the right
//! half-chain: the half-chain projection keeps `j >= 0`, the sign flip
//! `theta_minus` negates `j <= -1`, and the involution `gamma` swaps the
//! two components with complex conjugation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open interval of lattice sites `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Window { lo, hi })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // lo < hi is a construction invariant
    }

    pub fn contains(&self, site: i64) -> bool {
        self.lo <= site && site < self.hi
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Ascending site enumeration.
    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        self.lo..self.hi
    }

    /// Offset of `site` from the window start, if contained.
    pub fn offset(&self, site: i64) -> Option<usize> {
        self.contains(site).then_some((site - self.lo) as usize)
    }

    pub fn translate(&self, steps: i64) -> Window {
        Window {
            lo: self.lo + steps,
            hi: self.hi + steps,
        }
    }

    /// Symmetric window `[-n, n)` around the half-chain split.
    pub fn symmetric(n: i64) -> Result<Self> {
        Window::new(-n, n)
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Element of the doubled test-function space restricted to a window.
///
/// `f1` is the creation component and `f2` the annihilation component of
/// `B(h) = c*(f1) + c(f2)`, both indexed by the window sites.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector {
    window: Window,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
}

impl TestVector {
    pub fn new(window: Window, f1: Vec<Complex64>, f2: Vec<Complex64>) -> Result<Self> {
        if f1.len() != window.len() || f2.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "component length {}/{} does not match window length {}",
                f1.len(),
                f2.len(),
                window.len()
            )));
        }
        Ok(TestVector { window, f1, f2 })
    }

    pub fn zero(window: Window) -> Self {
        let n = window.len();
        TestVector {
            window,
            f1: vec![Complex64::ZERO; n],
            f2: vec![Complex64::ZERO; n],
        }
    }

    /// Delta vector at `site` in component `component` (0 for f1, 1 for f2).
    pub fn delta(window: Window, site: i64, component: usize) -> Result<Self> {
        let off = window
            .offset(site)
            .ok_or(Error::SupportOutsideWindow {
                site,
                lo: window.lo(),
                hi: window.hi(),
            })?;
        let mut v = TestVector::zero(window);
        match component {
            0 => v.f1[off] = Complex64::ONE,
            1 => v.f2[off] = Complex64::ONE,
            _ => return Err(Error::InvalidArgument("component must be 0 or 1".into())),
        }
        Ok(v)
    }

    /// Test vector of the Majorana mode `m_{2j}` (`kind` 0) or `m_{2j+1}`
    /// (`kind` 1) at `site`: `m_{2j} = B(δ_j ⊕ δ_j)`, `m_{2j+1} = B(iδ_j ⊕ −iδ_j)`.
    pub fn majorana(window: Window, site: i64, kind: usize) -> Result<Self> {
        let off = window
            .offset(site)
            .ok_or(Error::SupportOutsideWindow {
                site,
                lo: window.lo(),
                hi: window.hi(),
            })?;
        let mut v = TestVector::zero(window);
        match kind {
            0 => {
                v.f1[off] = Complex64::ONE;
                v.f2[off] = Complex64::ONE;
            }
            1 => {
                v.f1[off] = Complex64::I;
                v.f2[off] = -Complex64::I;
            }
            _ => return Err(Error::InvalidArgument("majorana kind must be 0 or 1".into())),
        }
        Ok(v)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn f1(&self) -> &[Complex64] {
        &self.f1
    }

    pub fn f2(&self) -> &[Complex64] {
        &self.f2
    }

    pub fn scale(&self, alpha: Complex64) -> TestVector {
        TestVector {
            window: self.window,
            f1: self.f1.iter().map(|z| alpha * z).collect(),
            f2: self.f2.iter().map(|z| alpha * z).collect(),
        }
    }

    /// Interleaved coefficient layout used by the covariance matrices:
    /// entry `2*offset + 0` is `f1` at the site, `2*offset + 1` is `f2`.
    pub fn interleaved(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(2 * self.window.len());
        for off in 0..self.window.len() {
            out.push(self.f1[off]);
            out.push(self.f2[off]);
        }
        out
    }
}

/// Lattice translation `(u^k f)_j = f_{j-k}`, applied to both components.
/// The window is carried along with the data.
pub fn shift_apply(v: &TestVector, steps: i64) -> TestVector {
    TestVector {
        window: v.window.translate(steps),
        f1: v.f1.clone(),
        f2: v.f2.clone(),
    }
}

/// Sign flip on the left half-chain: entries at sites `j <= -1` are negated.
pub fn theta_minus_apply(v: &TestVector) -> TestVector {
    let mut out = v.clone();
    for (off, site) in v.window.sites().enumerate() {
        if site <= -1 {
            out.f1[off] = -out.f1[off];
            out.f2[off] = -out.f2[off];
        }
    }
    out
}

/// Half-chain projection: entries at sites `j <= -1` are zeroed.
pub fn half_projection_apply(v: &TestVector) -> TestVector {
    let mut out = v.clone();
    for (off, site) in v.window.sites().enumerate() {
        if site <= -1 {
            out.f1[off] = Complex64::ZERO;
            out.f2[off] = Complex64::ZERO;
        }
    }
    out
}

/// Antilinear involution `Γ(f1 ⊕ f2) = (conj f2 ⊕ conj f1)`.
pub fn gamma_apply(v: &TestVector) -> TestVector {
    TestVector {
        window: v.window,
        f1: v.f2.iter().map(|z| z.conj()).collect(),
        f2: v.f1.iter().map(|z| z.conj()).collect(),
    }
}

/// The structural operators as dense matrices on the doubled window space
/// (interleaved layout, dimension `2 * window.len()`), for norm diagnostics.
///
/// `GammaInvolution` is antilinear; the returned matrix is its linear part
/// (the component swap) and must be composed with entrywise conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeOperatorKind {
    /// One-step right shift with zero fill at the window edge.
    Shift,
    ThetaMinus,
    HalfProjection,
    GammaInvolution,
}

pub fn dense_matrix(kind: LatticeOperatorKind, window: Window) -> ndarray::Array2<Complex64> {
    let n = window.len();
    let mut m = ndarray::Array2::zeros((2 * n, 2 * n));
    match kind {
        LatticeOperatorKind::Shift => {
            for off in 0..n.saturating_sub(1) {
                for c in 0..2 {
                    m[(2 * (off + 1) + c, 2 * off + c)] = Complex64::ONE;
                }
            }
        }
        LatticeOperatorKind::ThetaMinus => {
            for (off, site) in window.sites().enumerate() {
                let s = if site <= -1 { -1.0 } else { 1.0 };
                for c in 0..2 {
                    m[(2 * off + c, 2 * off + c)] = Complex64::new(s, 0.0);
                }
            }
        }
        LatticeOperatorKind::HalfProjection => {
            for (off, site) in window.sites().enumerate() {
                if site >= 0 {
                    for c in 0..2 {
                        m[(2 * off + c, 2 * off + c)] = Complex64::ONE;
                    }
                }
            }
        }
        LatticeOperatorKind::GammaInvolution => {
            for off in 0..n {
                m[(2 * off, 2 * off + 1)] = Complex64::ONE;
                m[(2 * off + 1, 2 * off)] = Complex64::ONE;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn window_basics() {
        let w = Window::new(-3, 4).unwrap();
        assert_eq!(w.len(), 7);
        assert!(w.contains(-3) && w.contains(3) && !w.contains(4));
        assert_eq!(w.offset(-3), Some(0));
        assert_eq!(w.offset(4), None);
        assert!(Window::new(2, 2).is_err());
        assert!(Window::new(3, 1).is_err());
    }

    #[test]
    fn shift_moves_delta() {
        let w = Window::new(-1, 2).unwrap();
        let v = TestVector::delta(w, 0, 0).unwrap();
        let shifted = shift_apply(&v, 1);
        assert_eq!(shifted.window(), Window::new(0, 3).unwrap());
        assert_eq!(shifted.f1()[shifted.window().offset(1).unwrap()], c(1.0, 0.0));
        // steps = 0 is the identity
        assert_eq!(shift_apply(&v, 0), v);
        // group property: +5 then -5 recovers the input
        let far = TestVector::delta(Window::new(-4, -2).unwrap(), -3, 1).unwrap();
        assert_eq!(shift_apply(&shift_apply(&far, 5), -5), far);
        assert_eq!(
            shift_apply(&far, 5).window(),
            Window::new(1, 3).unwrap()
        );
    }

    #[test]
    fn theta_minus_signs() {
        let w = Window::new(-2, 3).unwrap();
        let right = TestVector::delta(w, 2, 0).unwrap();
        assert_eq!(theta_minus_apply(&right), right);
        let left = TestVector::delta(w, -1, 0).unwrap();
        let flipped = theta_minus_apply(&left);
        assert_eq!(flipped.f1()[w.offset(-1).unwrap()], c(-1.0, 0.0));
        // involution
        assert_eq!(theta_minus_apply(&flipped), left);
    }

    #[test]
    fn half_projection_kills_left() {
        let w = Window::new(-3, 2).unwrap();
        let right = TestVector::delta(w, 0, 1).unwrap();
        assert_eq!(half_projection_apply(&right), right);
        let left = TestVector::delta(w, -2, 0).unwrap();
        assert_eq!(half_projection_apply(&left), TestVector::zero(w));
    }

    #[test]
    fn gamma_swaps_and_conjugates() {
        let w = Window::new(0, 1).unwrap();
        let v = TestVector::delta(w, 0, 0).unwrap();
        let g = gamma_apply(&v);
        assert_eq!(g.f1()[0], c(0.0, 0.0));
        assert_eq!(g.f2()[0], c(1.0, 0.0));
        // antilinearity: gamma(i v) = -i gamma(v)
        let iv = v.scale(Complex64::I);
        let gi = gamma_apply(&iv);
        assert_eq!(gi.f2()[0], c(0.0, -1.0));
    }

    #[test]
    fn dense_half_projection_is_idempotent_and_gamma_compatible() {
        let w = Window::new(-3, 3).unwrap();
        let p = dense_matrix(LatticeOperatorKind::HalfProjection, w);
        let swap = dense_matrix(LatticeOperatorKind::GammaInvolution, w);
        let pp = p.dot(&p);
        assert_eq!(pp, p);
        // Γ p Γ = p: Γ = swap ∘ conj, and p is real, so swap · p · swap = p.
        let conj_p = swap.dot(&p.mapv(|z| z.conj())).dot(&swap);
        assert_eq!(conj_p, p);
    }

    proptest! {
        #[test]
        fn prop_a27_identity(seed in 0u64..1000) {
            // half_projection(v) == (theta_minus(v) + v) / 2 entrywise
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = Window::new(-4, 4).unwrap();
            let n = w.len();
            let f1: Vec<Complex64> = (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let f2: Vec<Complex64> = (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let v = TestVector::new(w, f1, f2).unwrap();
            let lhs = half_projection_apply(&v);
            let th = theta_minus_apply(&v);
            for off in 0..n {
                let want1 = (th.f1()[off] + v.f1()[off]) * 0.5;
                let want2 = (th.f2()[off] + v.f2()[off]) * 0.5;
                prop_assert!((lhs.f1()[off] - want1).norm() < 1e-15);
                prop_assert!((lhs.f2()[off] - want2).norm() < 1e-15);
            }
            // gamma is an involution
            let gg = gamma_apply(&gamma_apply(&v));
            for off in 0..n {
                prop_assert!((gg.f1()[off] - v.f1()[off]).norm() < 1e-15);
                prop_assert!((gg.f2()[off] - v.f2()[off]).norm() < 1e-15);
            }
        }

        #[test]
        fn prop_shift_commutes_on_right_support(site in 0i64..5, steps in 0i64..4) {
            // theta_minus, half_projection commute with shift for data in j >= max(0, steps)
            let w = Window::new(-8, 8).unwrap();
            let v = TestVector::delta(w, site, 0).unwrap();
            let a = theta_minus_apply(&shift_apply(&v, steps));
            let b = shift_apply(&theta_minus_apply(&v), steps);
            prop_assert_eq!(a, b);
            let a = half_projection_apply(&shift_apply(&v, steps));
            let b = shift_apply(&half_projection_apply(&v), steps);
            prop_assert_eq!(a, b);
        }
    }
}
