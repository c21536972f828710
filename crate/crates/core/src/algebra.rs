//! Exterior and Clifford algebra on dense multivectors.
//!
//! A multivector over an `n`-dimensional orthonormal coframe `{e^a}` is stored as
//! `2^n` complex coefficients indexed by blade bitmask: bit `a` set means `e^a`
//! is a factor, factors ordered by ascending index. Frame indices are 0-based
//! in code (`e^0 ... e^{n-1}`).
//!
//! All products are computed blade by blade with a sign from the number of
//! transpositions needed to sort the factors, times the metric diagonal for
//! each repeated factor.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MAX_DIM: usize = 8;

/// Diagonal metric `g^{aa}` of an orthonormal frame.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    n: usize,
    diag: [i8; MAX_DIM],
}

impl Signature {
    pub fn new(diag: &[i8]) -> Result<Self> {
        let n = diag.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidSignature(format!(
                "dimension {n} outside 2..={MAX_DIM}"
            )));
        }
        let mut d = [0i8; MAX_DIM];
        for (slot, &s) in d.iter_mut().zip(diag) {
            if s != 1 && s != -1 {
                return Err(Error::InvalidSignature(format!("entry {s} is not ±1")));
            }
            *slot = s;
        }
        Ok(Self { n, diag: d })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(&vec![1; n]).expect("euclidean dimension in range")
    }

    /// Mostly-plus Lorentzian signature with the timelike direction first.
    pub fn lorentzian(n: usize) -> Self {
        let mut d = vec![1; n];
        d[0] = -1;
        Self::new(&d).expect("lorentzian dimension in range")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of blades, `2^n`.
    pub fn blades(&self) -> usize {
        1 << self.n
    }

    /// `g^{aa}` as a float.
    pub fn metric(&self, a: usize) -> f64 {
        self.diag[a] as f64
    }

    pub fn diag(&self) -> &[i8] {
        &self.diag[..self.n]
    }

    pub fn is_euclidean(&self) -> bool {
        self.diag().iter().all(|&s| s == 1)
    }

    pub(crate) fn ensure_same(&self, other: &Signature) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SignatureMismatch(
                format!("{self:?}"),
                format!("{other:?}"),
            ))
        }
    }

    pub(crate) fn check_index(&self, a: usize) -> Result<()> {
        if a < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: a, n: self.n })
        }
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.diag())
    }
}

/// Sign picked up when the factors of blade `a` followed by blade `b` are
/// sorted into ascending order (repeated factors left adjacent).
#[inline]
pub fn reorder_sign(a: usize, b: usize) -> f64 {
    let mut a = a >> 1;
    let mut swaps = 0u32;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn grade_of(mask: usize) -> usize {
    mask.count_ones() as usize
}

/// Clifford product of two basis blades: `(sign, blade)`.
#[inline]
pub fn blade_product(sig: &Signature, a: usize, b: usize) -> (f64, usize) {
    let mut sign = reorder_sign(a, b);
    let mut common = a & b;
    while common != 0 {
        let bit = common.trailing_zeros() as usize;
        sign *= sig.metric(bit);
        common &= common - 1;
    }
    (sign, a ^ b)
}

#[derive(Clone, PartialEq)]
pub struct Multivector {
    sig: Signature,
    coeffs: Vec<C64>,
}

impl Multivector {
    pub fn zero(sig: Signature) -> Self {
        Self {
            sig,
            coeffs: vec![C64::new(0.0, 0.0); sig.blades()],
        }
    }

    pub fn scalar(sig: Signature, value: impl Into<C64>) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[0] = value.into();
        m
    }

    /// A single blade with the given coefficient.
    pub fn blade(sig: Signature, mask: usize, value: impl Into<C64>) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[mask] = value.into();
        m
    }

    /// Frame 1-form `e^a`.
    pub fn basis(sig: Signature, a: usize) -> Self {
        Self::blade(sig, 1 << a, 1.0)
    }

    /// Lowered frame 1-form `e_a = g_{aa} e^a`.
    pub fn basis_lower(sig: Signature, a: usize) -> Self {
        Self::blade(sig, 1 << a, sig.metric(a))
    }

    /// Blade from a list of distinct frame indices, in the given order.
    pub fn from_indices(sig: Signature, indices: &[usize]) -> Result<Self> {
        let mut out = Self::scalar(sig, 1.0);
        for &a in indices {
            sig.check_index(a)?;
            out = out.wedge(&Self::basis(sig, a))?;
        }
        Ok(out)
    }

    pub fn from_coeffs(sig: Signature, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != sig.blades() {
            return Err(Error::DimensionMismatch {
                expected: sig.blades(),
                got: coeffs.len(),
            });
        }
        Ok(Self { sig, coeffs })
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.dim()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> C64 {
        self.coeffs[mask]
    }

    pub fn set_coeff(&mut self, mask: usize, value: impl Into<C64>) {
        self.coeffs[mask] = value.into();
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Nonzero `(blade, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(m, c)| (m, *c))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self {
            sig: self.sig,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Grades carrying a nonzero coefficient.
    pub fn grades(&self) -> Vec<usize> {
        let mut present = vec![false; self.dim() + 1];
        for (m, _) in self.terms() {
            present[grade_of(m)] = true;
        }
        present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(g, _)| g)
            .collect()
    }

    /// The unique grade of a nonzero homogeneous form, `None` for zero or mixed input.
    pub fn homogeneous_grade(&self) -> Option<usize> {
        match self.grades().as_slice() {
            [g] => Some(*g),
            _ => None,
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.sig.ensure_same(&other.sig)?;
        Ok(self.wedge_unchecked(other))
    }

    pub(crate) fn wedge_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.sig);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if a & b == 0 {
                    out.coeffs[a | b] += ca * cb * reorder_sign(a, b);
                }
            }
        }
        out
    }

    /// Interior derivative `i_{X_a}` with respect to the frame vector dual to `e^a`.
    pub fn interior(&self, a: usize) -> Self {
        let bit = 1usize << a;
        let below = bit - 1;
        let mut out = Self::zero(self.sig);
        for (m, c) in self.terms() {
            if m & bit != 0 {
                let s = if (m & below).count_ones() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                };
                out.coeffs[m ^ bit] += c * s;
            }
        }
        out
    }

    /// `i_{X^a} = g^{aa} i_{X_a}`.
    pub fn interior_upper(&self, a: usize) -> Self {
        self.interior(a).scale(self.sig.metric(a))
    }

    /// Contraction with the metric dual of a 1-form `x`: `i_{x̃}`.
    pub fn interior_dual(&self, x: &Self) -> Self {
        let mut out = Self::zero(self.sig);
        for a in 0..self.dim() {
            let c = x.coeff(1 << a);
            if c != C64::new(0.0, 0.0) {
                out += &self.interior_upper(a).scale(c);
            }
        }
        out
    }

    pub fn clifford_mul(&self, other: &Self) -> Result<Self> {
        self.sig.ensure_same(&other.sig)?;
        Ok(self.clifford_unchecked(other))
    }

    pub(crate) fn clifford_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.sig);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let (s, m) = blade_product(&self.sig, a, b);
                out.coeffs[m] += ca * cb * s;
            }
        }
        out
    }

    /// Main automorphism: grade-`p` part scaled by `(-1)^p`.
    pub fn eta(&self) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            if grade_of(m) & 1 == 1 {
                *c = -*c;
            }
        }
        out
    }

    /// Reversion: grade-`p` part scaled by `(-1)^{p(p-1)/2}`.
    pub fn reverse(&self) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            let p = grade_of(m);
            if (p * p.saturating_sub(1) / 2) & 1 == 1 {
                *c = -*c;
            }
        }
        out
    }

    pub fn clifford_bracket(&self, other: &Self) -> Result<Self> {
        Ok(&self.clifford_mul(other)? - &other.clifford_mul(self)?)
    }

    /// Bracket through the contraction formula valid when `self` is a
    /// homogeneous 2-form: `-2 i_{X^a}α ∧ i_{X_a}β`.
    pub fn two_form_bracket(&self, other: &Self) -> Result<Self> {
        self.sig.ensure_same(&other.sig)?;
        if !self.grades().iter().all(|&g| g == 2) {
            return Err(Error::NotHomogeneous(
                "two_form_bracket needs a 2-form on the left".into(),
            ));
        }
        let mut out = Self::zero(self.sig);
        for a in 0..self.dim() {
            out += &self.interior_upper(a).wedge_unchecked(&other.interior(a));
        }
        Ok(out.scale(-2.0))
    }

    /// `Σ_a e^a · α · e_a`, summed by brute force.
    pub fn frame_sandwich(&self) -> Self {
        let mut out = Self::zero(self.sig);
        for a in 0..self.dim() {
            let up = Self::basis(self.sig, a);
            let down = Self::basis_lower(self.sig, a);
            out += &up.clifford_unchecked(self).clifford_unchecked(&down);
        }
        out
    }

    pub fn grade_project(&self, p: usize) -> Self {
        let mut out = Self::zero(self.sig);
        for (m, c) in self.terms() {
            if grade_of(m) == p {
                out.coeffs[m] = c;
            }
        }
        out
    }

    /// Degree operator `e^a ∧ i_{X_a}`.
    pub fn pi_degree(&self) -> Self {
        let mut out = Self::zero(self.sig);
        for a in 0..self.dim() {
            out += &Self::basis(self.sig, a).wedge_unchecked(&self.interior(a));
        }
        out
    }

    /// Applies `f(grade)` as a scalar on each homogeneous part.
    pub fn map_grades(&self, f: impl Fn(usize) -> C64) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            *c *= f(grade_of(m));
        }
        out
    }

    /// Clifford product through the contraction expansion
    /// `Σ_k (-1)^{⌊k/2⌋}/k! η^k(i_{X_I} α) ∧ i_{X^I} β`, with the sum over
    /// ordered multi-indices folded onto increasing index sets.
    pub fn clifford_by_contractions(&self, other: &Self) -> Result<Self> {
        self.sig.ensure_same(&other.sig)?;
        let n = self.dim();
        let mut out = Self::zero(self.sig);
        for set in 0usize..(1 << n) {
            let k = grade_of(set);
            let mut left = self.clone();
            let mut right = other.clone();
            // i_{X_{a1}} ... i_{X_{ak}}: innermost index applied first.
            for a in (0..n).rev().filter(|a| set & (1 << a) != 0) {
                left = left.interior(a);
                right = right.interior_upper(a);
            }
            if k & 1 == 1 {
                left = left.eta();
            }
            let sign = if (k / 2) & 1 == 0 { 1.0 } else { -1.0 };
            out += &left.wedge_unchecked(&right).scale(sign);
        }
        Ok(out)
    }
}

/// `(i_{X^a} i_{X^b} F) i_{X_a} i_{X_b} α`.
pub fn double_contraction(f: &Multivector, alpha: &Multivector) -> Multivector {
    let n = f.dim();
    let mut out = Multivector::zero(f.sig());
    for a in 0..n {
        for b in 0..n {
            let c = f.interior_upper(b).interior_upper(a).coeff(0);
            if c != C64::new(0.0, 0.0) {
                out += &alpha.interior(b).interior(a).scale(c);
            }
        }
    }
    out
}

/// `i_{X_a}F ∧ i_{X^a}α`.
pub fn single_contraction(f: &Multivector, alpha: &Multivector) -> Multivector {
    let mut out = Multivector::zero(f.sig());
    for a in 0..f.dim() {
        out += &f.interior(a).wedge_unchecked(&alpha.interior_upper(a));
    }
    out
}

/// `α·F` for a 2-form `F`, written through wedges and contractions:
/// `F∧α + i_{X_a}F∧i_{X^a}α - ½(i_{X_a}i_{X_b}F) i_{X^a}i_{X^b}α`.
pub fn two_form_product_expansion(alpha: &Multivector, f: &Multivector) -> Result<Multivector> {
    alpha.sig.ensure_same(&f.sig)?;
    let mut out = f.wedge_unchecked(alpha);
    out += &single_contraction(f, alpha);
    out -= &double_contraction(f, alpha).scale(0.5);
    Ok(out)
}

/// `Σ_a e^a · α · i_{X_a}F`, by brute force.
pub fn frame_contracted_product(alpha: &Multivector, f: &Multivector) -> Result<Multivector> {
    alpha.sig.ensure_same(&f.sig)?;
    let mut out = Multivector::zero(alpha.sig);
    for a in 0..alpha.dim() {
        out += &Multivector::basis(alpha.sig, a)
            .clifford_unchecked(alpha)
            .clifford_unchecked(&f.interior(a));
    }
    Ok(out)
}

fn parity_sign(alpha: &Multivector) -> Result<f64> {
    if alpha.is_zero() {
        return Ok(1.0);
    }
    let p = alpha
        .homogeneous_grade()
        .ok_or_else(|| Error::NotHomogeneous("expected a homogeneous form".into()))?;
    Ok(if p & 1 == 0 { 1.0 } else { -1.0 })
}

/// `(-1)^p [2α∧F - 2 i_{X_a}F∧i_{X^a}α + (i_{X_a}i_{X_b}F) i_{X^a}i_{X^b}α]`,
/// a closed form sometimes quoted for `Σ_a e^a·α·i_{X_a}F`. It does not match
/// the brute-force sum; see [`frame_contracted_expansion`].
pub fn frame_contracted_expansion_cross_term(alpha: &Multivector, f: &Multivector) -> Result<Multivector> {
    alpha.sig.ensure_same(&f.sig)?;
    let s = parity_sign(alpha)?;
    let mut out = alpha.wedge_unchecked(f).scale(2.0);
    out -= &single_contraction(f, alpha).scale(2.0);
    out += &double_contraction(f, alpha);
    Ok(out.scale(s))
}

/// `Σ_a e^a·α·i_{X_a}F = (-1)^p [2F∧α + (i_{X_a}i_{X_b}F) i_{X^a}i_{X^b}α]`
/// for a homogeneous `p`-form `α` and a 2-form `F`.
pub fn frame_contracted_expansion(alpha: &Multivector, f: &Multivector) -> Result<Multivector> {
    alpha.sig.ensure_same(&f.sig)?;
    let s = parity_sign(alpha)?;
    let mut out = f.wedge_unchecked(alpha).scale(2.0);
    out += &double_contraction(f, alpha);
    Ok(out.scale(s))
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({c})")?;
            }
            if m != 0 {
                write!(f, "e")?;
                for a in 0..self.dim() {
                    if m & (1 << a) != 0 {
                        write!(f, "{}", a + 1)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        debug_assert_eq!(self.sig, rhs.sig);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Multivector> for Multivector {
    fn sub_assign(&mut self, rhs: &Multivector) {
        debug_assert_eq!(self.sig, rhs.sig);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(mut self, rhs: Multivector) -> Multivector {
        self += &rhs;
        self
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(mut self, rhs: Multivector) -> Multivector {
        self -= &rhs;
        self
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

/// Clifford product; panics on signature mismatch (use [`Multivector::clifford_mul`]
/// for the checked form).
impl Mul for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.sig, rhs.sig, "signature mismatch in Clifford product");
        self.clifford_unchecked(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(sig: Signature, idx: &[usize]) -> Multivector {
        Multivector::from_indices(sig, idx).unwrap()
    }

    #[test]
    fn wedge_basics() {
        let s = Signature::euclidean(3);
        assert_eq!(e(s, &[0]).wedge(&e(s, &[1])).unwrap(), e(s, &[0, 1]));
        assert!(e(s, &[0]).wedge(&e(s, &[0])).unwrap().is_zero());
        let v = &e(s, &[0]) + &e(s, &[1]);
        assert!(v.wedge(&e(s, &[0, 1])).unwrap().is_zero());
        assert_eq!(e(s, &[1, 0]), e(s, &[0, 1]).scale(-1.0));
    }

    #[test]
    fn interior_basics() {
        let s = Signature::euclidean(3);
        assert_eq!(e(s, &[0, 1]).interior(0), e(s, &[1]));
        assert_eq!(e(s, &[0, 1]).interior(1), e(s, &[0]).scale(-1.0));
        assert!(Multivector::scalar(s, 3.0).interior(0).is_zero());
    }

    #[test]
    fn clifford_examples() {
        let s = Signature::euclidean(2);
        assert_eq!(&e(s, &[0]) * &e(s, &[0]), Multivector::scalar(s, 1.0));
        assert_eq!(&e(s, &[0]) * &e(s, &[0, 1]), e(s, &[1]));
        assert_eq!(&e(s, &[0, 1]) * &e(s, &[0]), e(s, &[1]).scale(-1.0));
        let l = Signature::lorentzian(2);
        assert_eq!(&e(l, &[0]) * &e(l, &[0]), Multivector::scalar(l, -1.0));
    }

    #[test]
    fn eta_and_degree() {
        let s = Signature::euclidean(3);
        let x = &(&Multivector::scalar(s, 1.0) + &e(s, &[0])) + &e(s, &[0, 1]);
        let expect = &(&Multivector::scalar(s, 1.0) - &e(s, &[0])) + &e(s, &[0, 1]);
        assert_eq!(x.eta(), expect);
        assert_eq!(e(s, &[0, 1]).pi_degree(), e(s, &[0, 1]).scale(2.0));
        assert!(Multivector::scalar(s, 1.0).pi_degree().is_zero());
        let y = &e(s, &[0]) + &e(s, &[0, 1, 2]);
        assert_eq!(y.pi_degree(), &e(s, &[0]) + &e(s, &[0, 1, 2]).scale(3.0));
    }

    #[test]
    fn bracket_examples() {
        let s = Signature::euclidean(4);
        let b = e(s, &[0, 1]).clifford_bracket(&e(s, &[0])).unwrap();
        assert_eq!(b, e(s, &[1]).scale(-2.0));
        assert_eq!(b, e(s, &[0, 1]).two_form_bracket(&e(s, &[0])).unwrap());
        assert!(e(s, &[0, 1])
            .clifford_bracket(&e(s, &[2, 3]))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn sandwich_examples() {
        let s4 = Signature::euclidean(4);
        assert_eq!(e(s4, &[0]).frame_sandwich(), e(s4, &[0]).scale(-2.0));
        assert!(e(s4, &[0, 1]).frame_sandwich().is_zero());
        let s6 = Signature::euclidean(6);
        assert_eq!(
            Multivector::scalar(s6, 1.0).frame_sandwich(),
            Multivector::scalar(s6, 6.0)
        );
    }

    #[test]
    fn signature_mismatch_is_error() {
        let a = Multivector::basis(Signature::euclidean(3), 0);
        let b = Multivector::basis(Signature::euclidean(4), 0);
        assert!(matches!(a.wedge(&b), Err(Error::SignatureMismatch(..))));
        assert!(a.clifford_mul(&b).is_err());
    }

    #[test]
    fn signature_validation() {
        assert!(Signature::new(&[1]).is_err());
        assert!(Signature::new(&[1, 2]).is_err());
        assert!(Signature::new(&[1; 9]).is_err());
    }
}
