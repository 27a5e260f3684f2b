//! Jordan–Wigner reduction of Pauli strings to Majorana normal form.
//!
//! Majorana convention (used identically everywhere): `m_{2j} = c_j + c_j†`,
//! `m_{2j+1} = −i(c_j − c_j†)`. Under the chain's string convention (string
//! origin at site 0) the single-letter dictionary is
//!
//! ```text
//!   σ_x^{(j)} =  T · S_j · m_{2j}
//!   σ_y^{(j)} = −T · S_j · m_{2j+1}
//!   σ_z^{(j)} =  i · m_{2j} m_{2j+1}
//! ```
//!
//! with `S_j` the σ_z string between site 0 and `j` (itself a product of
//! Majorana bilinears). The reduction multiplies letters in ascending site
//! order inside the algebra generated by the Majorana modes and the formal
//! unitary `T`, using `T m_a T = ±m_a` (− on sites `j ≤ −1`). For even
//! strings the `T` factors cancel; odd strings are killed by Θ-invariance
//! and reduce to zero without touching the engine.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Single-site Pauli letter; identity letters are never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(&self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Finitely supported Pauli word with a complex coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    letters: BTreeMap<i64, Pauli>,
    coefficient: Complex64,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            letters: BTreeMap::new(),
            coefficient: Complex64::ONE,
        }
    }

    pub fn single(site: i64, letter: Pauli) -> Self {
        let mut letters = BTreeMap::new();
        letters.insert(site, letter);
        PauliString {
            letters,
            coefficient: Complex64::ONE,
        }
    }

    pub fn from_letters(letters: impl IntoIterator<Item = (i64, Pauli)>) -> Self {
        PauliString {
            letters: letters.into_iter().collect(),
            coefficient: Complex64::ONE,
        }
    }

    pub fn with_coefficient(mut self, c: Complex64) -> Self {
        self.coefficient = c;
        self
    }

    pub fn coefficient(&self) -> Complex64 {
        self.coefficient
    }

    pub fn letters(&self) -> &BTreeMap<i64, Pauli> {
        &self.letters
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.letters.keys().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Even iff the count of X and Y letters is even.
    pub fn is_even(&self) -> bool {
        self.letters
            .values()
            .filter(|l| matches!(l, Pauli::X | Pauli::Y))
            .count()
            % 2
            == 0
    }

    /// Translate the whole word by `steps` sites.
    pub fn shift(&self, steps: i64) -> Self {
        PauliString {
            letters: self
                .letters
                .iter()
                .map(|(&s, &l)| (s + steps, l))
                .collect(),
            coefficient: self.coefficient,
        }
    }

    /// Operator product, combining overlapping letters by the Pauli table.
    pub fn mul(&self, other: &PauliString) -> Self {
        let mut letters = self.letters.clone();
        let mut coeff = self.coefficient * other.coefficient;
        for (&site, &l2) in &other.letters {
            match letters.remove(&site) {
                None => {
                    letters.insert(site, l2);
                }
                Some(l1) => {
                    let (phase, prod) = pauli_product(l1, l2);
                    coeff *= phase;
                    if let Some(p) = prod {
                        letters.insert(site, p);
                    }
                }
            }
        }
        PauliString {
            letters,
            coefficient: coeff,
        }
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coefficient != Complex64::ONE {
            write!(f, "({}) ", self.coefficient)?;
        }
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        for (i, (site, l)) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", l.as_char(), site)?;
        }
        Ok(())
    }
}

fn pauli_product(a: Pauli, b: Pauli) -> (Complex64, Option<Pauli>) {
    use Pauli::*;
    let i = Complex64::I;
    match (a, b) {
        (X, X) | (Y, Y) | (Z, Z) => (Complex64::ONE, None),
        (X, Y) => (i, Some(Z)),
        (Y, X) => (-i, Some(Z)),
        (Y, Z) => (i, Some(X)),
        (Z, Y) => (-i, Some(X)),
        (Z, X) => (i, Some(Y)),
        (X, Z) => (-i, Some(Y)),
    }
}

/// Majorana monomial in normal form: strictly increasing mode indices
/// (index `2j + c` for site `j`, component `c`) and a scalar prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct MajoranaMonomial {
    pub indices: Vec<i64>,
    pub sign: Complex64,
}

impl MajoranaMonomial {
    pub fn degree(&self) -> usize {
        self.indices.len()
    }
}

/// Result of reducing a Pauli string to the even CAR algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum JwReduction {
    /// Odd strings have zero expectation in every Θ-invariant state.
    Zero,
    Monomial(MajoranaMonomial),
}

/// Canonical-form accumulator for products in the algebra generated by the
/// Majorana modes and the grading unitary `T`.
struct Accumulator {
    coeff: Complex64,
    t: bool,
    indices: Vec<i64>,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            coeff: Complex64::ONE,
            t: false,
            indices: Vec::new(),
        }
    }

    /// Multiply by `m_a` on the right.
    fn mul_majorana(&mut self, a: i64) {
        match self.indices.binary_search(&a) {
            Ok(pos) => {
                // m_a already present: commute to it and square away.
                let crossings = self.indices.len() - pos - 1;
                if crossings % 2 == 1 {
                    self.coeff = -self.coeff;
                }
                self.indices.remove(pos);
            }
            Err(pos) => {
                let crossings = self.indices.len() - pos;
                if crossings % 2 == 1 {
                    self.coeff = -self.coeff;
                }
                self.indices.insert(pos, a);
            }
        }
    }

    /// Multiply by `T` on the right: move it left past the Majorana list,
    /// flipping the sign once per mode living on the left half-chain.
    fn mul_t(&mut self) {
        for &a in &self.indices {
            if a.div_euclid(2) < 0 {
                self.coeff = -self.coeff;
            }
        }
        self.t = !self.t;
    }

    fn mul_scalar(&mut self, c: Complex64) {
        self.coeff *= c;
    }

    /// σ_z string between the origin and `site` as Majorana bilinears.
    fn mul_string(&mut self, site: i64) {
        let range = if site >= 1 {
            0..site
        } else if site == 0 {
            0..0
        } else {
            site..0
        };
        for k in range {
            self.mul_scalar(Complex64::I);
            self.mul_majorana(2 * k);
            self.mul_majorana(2 * k + 1);
        }
    }
}

/// Reduce a Pauli string to its Majorana normal form, or `Zero` for odd
/// parity. The string site set of X/Y letters (including the sites between
/// disconnected support blocks) is materialized exactly as σ_z bilinears.
pub fn jordan_wigner_reduce(p: &PauliString) -> JwReduction {
    if !p.is_even() {
        return JwReduction::Zero;
    }
    let mut acc = Accumulator::new();
    for (&site, &letter) in p.letters() {
        match letter {
            Pauli::Z => {
                acc.mul_scalar(Complex64::I);
                acc.mul_majorana(2 * site);
                acc.mul_majorana(2 * site + 1);
            }
            Pauli::X => {
                acc.mul_t();
                acc.mul_string(site);
                acc.mul_majorana(2 * site);
            }
            Pauli::Y => {
                acc.mul_scalar(-Complex64::ONE);
                acc.mul_t();
                acc.mul_string(site);
                acc.mul_majorana(2 * site + 1);
            }
        }
    }
    debug_assert!(!acc.t, "T factors must cancel in the even sector");
    JwReduction::Monomial(MajoranaMonomial {
        indices: acc.indices,
        sign: acc.coeff * p.coefficient(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sigma_z_is_a_bilinear() {
        let p = PauliString::single(0, Pauli::Z);
        match jordan_wigner_reduce(&p) {
            JwReduction::Monomial(m) => {
                assert_eq!(m.indices, vec![0, 1]);
                assert_eq!(m.sign, Complex64::I);
            }
            JwReduction::Zero => panic!("sigma_z is even"),
        }
        // negative site
        let p = PauliString::single(-3, Pauli::Z);
        match jordan_wigner_reduce(&p) {
            JwReduction::Monomial(m) => {
                assert_eq!(m.indices, vec![-6, -5]);
                assert_eq!(m.sign, Complex64::I);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn odd_strings_reduce_to_zero() {
        assert_eq!(
            jordan_wigner_reduce(&PauliString::single(0, Pauli::X)),
            JwReduction::Zero
        );
        let p = PauliString::from_letters([(0, Pauli::X), (1, Pauli::Y), (2, Pauli::X)]);
        assert_eq!(jordan_wigner_reduce(&p), JwReduction::Zero);
        // Z letters do not affect parity
        let p = PauliString::from_letters([(0, Pauli::X), (3, Pauli::Z)]);
        assert_eq!(jordan_wigner_reduce(&p), JwReduction::Zero);
    }

    #[test]
    fn xx_with_gap_includes_the_string_bilinear() {
        // X0 X2 = -m1 m2 m3 m4: the site-1 string bilinear survives, the
        // site-0 one collapses against X0's own Majorana.
        let p = PauliString::from_letters([(0, Pauli::X), (2, Pauli::X)]);
        match jordan_wigner_reduce(&p) {
            JwReduction::Monomial(m) => {
                assert_eq!(m.indices, vec![1, 2, 3, 4]);
                assert_eq!(m.sign, c(-1.0, 0.0));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn nearest_neighbour_xx() {
        // X0 X1 = (T m0)(T S1 m2) = m0 (i m0 m1) m2 = i m1 m2... sign check below
        let p = PauliString::from_letters([(0, Pauli::X), (1, Pauli::X)]);
        match jordan_wigner_reduce(&p) {
            JwReduction::Monomial(m) => {
                assert_eq!(m.indices, vec![1, 2]);
                assert_eq!(m.sign, c(0.0, 1.0));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn cross_zero_xx() {
        // X_{-1} X_0 = i m_{-1} m_0 (T conjugation flips the left-half mode)
        let p = PauliString::from_letters([(-1, Pauli::X), (0, Pauli::X)]);
        match jordan_wigner_reduce(&p) {
            JwReduction::Monomial(m) => {
                assert_eq!(m.indices, vec![-1, 0]);
                assert_eq!(m.sign, c(0.0, 1.0));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn identity_reduces_to_empty_monomial() {
        match jordan_wigner_reduce(&PauliString::identity()) {
            JwReduction::Monomial(m) => {
                assert!(m.indices.is_empty());
                assert_eq!(m.sign, Complex64::ONE);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn pauli_multiplication_table() {
        let x = PauliString::single(0, Pauli::X);
        let y = PauliString::single(0, Pauli::Y);
        let xy = x.mul(&y);
        assert_eq!(xy.letters()[&0], Pauli::Z);
        assert_eq!(xy.coefficient(), Complex64::I);
        let yx = y.mul(&x);
        assert_eq!(yx.coefficient(), -Complex64::I);
        let xx = x.mul(&x);
        assert!(xx.is_identity());
        assert_eq!(xx.coefficient(), Complex64::ONE);
    }

    #[test]
    fn shift_translates_support() {
        let p = PauliString::from_letters([(0, Pauli::X), (2, Pauli::Y)]);
        let q = p.shift(5);
        assert_eq!(q.support().collect::<Vec<_>>(), vec![5, 7]);
    }

    #[test]
    fn degree_counts_are_consistent() {
        // parity even => even degree monomial
        for letters in [
            vec![(0, Pauli::Z), (5, Pauli::Z)],
            vec![(0, Pauli::X), (4, Pauli::Y)],
            vec![(-2, Pauli::Y), (1, Pauli::Y), (2, Pauli::Z)],
        ] {
            let p = PauliString::from_letters(letters);
            if let JwReduction::Monomial(m) = jordan_wigner_reduce(&p) {
                assert_eq!(m.degree() % 2, 0);
            } else {
                panic!("expected even string");
            }
        }
    }
}
