//! Point-indexed form and spinor fields.
//!
//! A field is a closure that, given a point and a jet order `K`, returns the
//! order-`K` Taylor expansion of its frame components around that point.
//! Differential operators request one order more from their input than they
//! are asked for, so arbitrarily deep operator compositions stay exact.
//!
//! Every field carries a U(1) charge. Gauged derivatives couple a field of
//! charge `q` to `q·A`; Clifford products add charges.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{Multivector, Signature, C64};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::spin::{GammaRep, Spinor};

/// A point in the coordinate chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn origin(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Self {
        Self(c.to_vec())
    }
}

/// `coeff · x^powers`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub powers: Vec<u8>,
}

impl Monomial {
    pub fn new(coeff: impl Into<C64>, powers: Vec<u8>) -> Self {
        Self {
            coeff: coeff.into(),
            powers,
        }
    }
}

/// Polynomial in the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.powers.len() != n {
                return Err(Error::MalformedSpec(format!(
                    "monomial has {} exponents, expected {n}",
                    t.powers.len()
                )));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn constant(n: usize, c: impl Into<C64>) -> Self {
        Self {
            n,
            terms: vec![Monomial::new(c, vec![0; n])],
        }
    }

    /// The coordinate function `x^a`.
    pub fn coordinate(n: usize, a: usize) -> Self {
        let mut p = vec![0; n];
        p[a] = 1;
        Self {
            n,
            terms: vec![Monomial::new(1.0, p)],
        }
    }

    /// Parses `[(coeff, powers), ...]`.
    pub fn from_terms(n: usize, terms: &[(f64, &[u8])]) -> Result<Self> {
        Self::new(
            n,
            terms
                .iter()
                .map(|(c, p)| Monomial::new(*c, p.to_vec()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.powers.iter().map(|&p| p as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(x)
                        .map(|(&p, &xi)| xi.powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn eval_jet(&self, coords: &[Jet<C64>]) -> Jet<C64> {
        let space = coords[0].space().clone();
        let max_pow = self
            .terms
            .iter()
            .flat_map(|t| t.powers.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        // powers[a][k] = (x^a)^k
        let powers: Vec<Vec<Jet<C64>>> = coords
            .iter()
            .map(|x| {
                let mut v = vec![Jet::scalar_const(space.clone(), 1.0)];
                for k in 1..=max_pow {
                    let next = v[k - 1].mul(x);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = Jet::scalar_const(space.clone(), 0.0);
        for t in &self.terms {
            let mut m = Jet::scalar_const(space.clone(), t.coeff);
            for (a, &p) in t.powers.iter().enumerate() {
                if p > 0 {
                    m = m.mul(&powers[a][p as usize]);
                }
            }
            acc.axpy(1.0, &m);
        }
        acc
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, a: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[a] > 0)
            .map(|t| {
                let mut p = t.powers.clone();
                let k = p[a] as f64;
                p[a] -= 1;
                Monomial::new(t.coeff * k, p)
            })
            .collect();
        Self { n: self.n, terms }
    }
}

type FormEval = dyn Fn(&Point, usize) -> Result<Jet<Multivector>> + Send + Sync;
type SpinorEval = dyn Fn(&Point, usize) -> Result<Jet<Spinor>> + Send + Sync;

/// Multivector-valued field in orthonormal-frame components.
#[derive(Clone)]
pub struct FormField {
    sig: Signature,
    grade: Option<usize>,
    charge: i32,
    eval: Arc<FormEval>,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("sig", &self.sig)
            .field("grade", &self.grade)
            .field("charge", &self.charge)
            .finish_non_exhaustive()
    }
}

pub(crate) fn check_point(sig: &Signature, p: &Point) -> Result<()> {
    if p.dim() == sig.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: sig.dim(),
            got: p.dim(),
        })
    }
}

impl FormField {
    pub fn new(
        sig: Signature,
        grade: Option<usize>,
        eval: impl Fn(&Point, usize) -> Result<Jet<Multivector>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            sig,
            grade,
            charge: 0,
            eval: Arc::new(eval),
        }
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.dim()
    }

    /// Declared grade of a homogeneous field.
    pub fn grade(&self) -> Option<usize> {
        self.grade
    }

    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn with_charge(mut self, charge: i32) -> Self {
        self.charge = charge;
        self
    }

    pub fn with_grade(mut self, grade: Option<usize>) -> Self {
        self.grade = grade;
        self
    }

    pub fn eval(&self, p: &Point, order: usize) -> Result<Jet<Multivector>> {
        check_point(&self.sig, p)?;
        (self.eval)(p, order)
    }

    pub fn value(&self, p: &Point) -> Result<Multivector> {
        Ok(self.eval(p, 0)?.into_value())
    }

    /// Order-2 jet of a single blade coefficient.
    pub fn coefficient_jet2(&self, p: &Point, mask: usize) -> Result<crate::jet::Jet2> {
        let j = self.eval(p, 2)?;
        Ok(j.map(|m| m.coeff(mask)).to_jet2())
    }

    pub fn constant(value: Multivector) -> Self {
        let sig = value.sig();
        let grade = value.homogeneous_grade();
        Self::new(sig, grade, move |p, order| {
            let space = JetSpace::get(p.dim(), order)?;
            Ok(Jet::constant(space, value.clone()))
        })
    }

    pub fn zero(sig: Signature) -> Self {
        Self::constant(Multivector::zero(sig))
    }

    /// Form whose frame components are polynomials: `Σ poly_i(x) · blade_i`.
    ///
    /// Blades are lists of distinct frame indices; their order sets the sign.
    pub fn polynomial(sig: Signature, terms: Vec<(Vec<usize>, Polynomial)>) -> Result<Self> {
        let n = sig.dim();
        let mut blades = Vec::with_capacity(terms.len());
        let mut grades = Vec::new();
        for (idx, poly) in terms {
            if poly.dim() != n {
                return Err(Error::MalformedSpec(format!(
                    "polynomial in {} variables for dimension {n}",
                    poly.dim()
                )));
            }
            if idx.iter().any(|&a| a >= n) {
                return Err(Error::MalformedSpec(format!("blade {idx:?} out of range")));
            }
            let blade = Multivector::from_indices(sig, &idx)?;
            if blade.is_zero() {
                return Err(Error::MalformedSpec(format!("blade {idx:?} repeats an index")));
            }
            grades.push(idx.len());
            blades.push((blade, poly));
        }
        grades.sort_unstable();
        grades.dedup();
        let grade = match grades.as_slice() {
            [g] => Some(*g),
            [] => None,
            _ => None,
        };
        Ok(Self::new(sig, grade, move |p, order| {
            let coords = Jet::coordinates(p.coords(), order)?;
            let space = coords[0].space().clone();
            let mut acc = Jet::constant(space, Multivector::zero(sig));
            for (blade, poly) in &blades {
                let c = poly.eval_jet(&coords);
                let b = blade.clone();
                acc.axpy(1.0, &c.map(|x| b.scale(*x)));
            }
            Ok(acc)
        }))
    }

    /// Scalar (0-form) polynomial field.
    pub fn scalar_polynomial(sig: Signature, poly: Polynomial) -> Result<Self> {
        Self::polynomial(sig, vec![(vec![], poly)])
    }

    /// Pointwise bilinear combination of two form fields.
    pub fn zip_with(
        &self,
        other: &Self,
        grade: Option<usize>,
        charge: i32,
        f: impl Fn(&Jet<Multivector>, &Jet<Multivector>) -> Jet<Multivector> + Send + Sync + 'static,
    ) -> Result<Self> {
        self.sig.ensure_same(&other.sig)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::new(self.sig, grade, move |p, order| {
            Ok(f(&a.eval(p, order)?, &b.eval(p, order)?))
        })
        .with_charge(charge))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let grade = if self.grade == other.grade { self.grade } else { None };
        self.zip_with(other, grade, self.charge, |x, y| x.add(y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let grade = if self.grade == other.grade { self.grade } else { None };
        self.zip_with(other, grade, self.charge, |x, y| x.sub(y))
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        let a = self.clone();
        Self::new(self.sig, self.grade, move |p, order| {
            Ok(a.eval(p, order)?.scaled(c))
        })
        .with_charge(self.charge)
    }

    pub fn clifford(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, None, self.charge + other.charge, |x, y| {
            jet_clifford(x, y)
        })
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let grade = match (self.grade, other.grade) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        self.zip_with(other, grade, self.charge + other.charge, |x, y| {
            jet_wedge(x, y)
        })
    }

    /// Pointwise linear map on values (e.g. interior products, grade projections).
    pub fn map_values(
        &self,
        grade: Option<usize>,
        f: impl Fn(&Multivector) -> Multivector + Send + Sync + 'static,
    ) -> Self {
        let a = self.clone();
        Self::new(self.sig, grade, move |p, order| Ok(a.eval(p, order)?.map(&f)))
            .with_charge(self.charge)
    }

    /// `i_{x̃} self` for a 1-form field `x`.
    pub fn contract_with(&self, x: &FormField) -> Result<Self> {
        let grade = self.grade.map(|g| g.saturating_sub(1));
        self.zip_with(x, grade, self.charge + x.charge, |a, x| {
            let zero = Multivector::zero(a.value().sig());
            x.bilinear(a, zero, |x, a| a.interior_dual(x))
        })
    }

    /// Product with the scalar part of a 0-form field.
    pub fn times_scalar(&self, s: &FormField) -> Result<Self> {
        self.sig.ensure_same(&s.sig)?;
        let (a, s) = (self.clone(), s.clone());
        let charge = self.charge + s.charge;
        Ok(Self::new(self.sig, self.grade, move |p, order| {
            let f = s.eval(p, order)?.map(|m| m.coeff(0));
            Ok(a.eval(p, order)?.times(&f))
        })
        .with_charge(charge))
    }

    /// `exp(c · f)` for a 0-form `f`, as a 0-form.
    pub fn exp_scalar(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        let a = self.clone();
        let sig = self.sig;
        Self::new(sig, Some(0), move |p, order| {
            let f = a.eval(p, order)?.map(|m| m.coeff(0)).scaled(c).exp();
            Ok(f.map(|x| Multivector::scalar(sig, *x)))
        })
    }

    /// Gauge-transformed copy `e^{-χ}·self` (or `e^{-iχ}` with `imaginary`),
    /// with charge raised by one.
    pub fn gauge_transformed(&self, chi: &FormField, imaginary: bool) -> Result<Self> {
        let c = if imaginary {
            C64::new(0.0, -1.0)
        } else {
            C64::new(-1.0, 0.0)
        };
        let out = self.times_scalar(&chi.exp_scalar(c))?;
        Ok(out.with_charge(self.charge + 1))
    }
}

pub fn jet_clifford(a: &Jet<Multivector>, b: &Jet<Multivector>) -> Jet<Multivector> {
    let zero = Multivector::zero(a.value().sig());
    a.bilinear(b, zero, |x, y| x.clifford_unchecked(y))
}

pub fn jet_wedge(a: &Jet<Multivector>, b: &Jet<Multivector>) -> Jet<Multivector> {
    let zero = Multivector::zero(a.value().sig());
    a.bilinear(b, zero, |x, y| x.wedge_unchecked(y))
}

/// Spinor-valued field.
#[derive(Clone)]
pub struct SpinorField {
    rep: Arc<GammaRep>,
    charge: i32,
    eval: Arc<SpinorEval>,
}

impl fmt::Debug for SpinorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpinorField")
            .field("sig", &self.rep.sig())
            .field("charge", &self.charge)
            .finish_non_exhaustive()
    }
}

impl SpinorField {
    pub fn new(
        rep: Arc<GammaRep>,
        eval: impl Fn(&Point, usize) -> Result<Jet<Spinor>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            rep,
            charge: 0,
            eval: Arc::new(eval),
        }
    }

    pub fn rep(&self) -> &Arc<GammaRep> {
        &self.rep
    }

    pub fn sig(&self) -> Signature {
        self.rep.sig()
    }

    pub fn dim(&self) -> usize {
        self.rep.sig().dim()
    }

    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn with_charge(mut self, charge: i32) -> Self {
        self.charge = charge;
        self
    }

    pub fn eval(&self, p: &Point, order: usize) -> Result<Jet<Spinor>> {
        check_point(&self.rep.sig(), p)?;
        (self.eval)(p, order)
    }

    pub fn value(&self, p: &Point) -> Result<Spinor> {
        Ok(self.eval(p, 0)?.into_value())
    }

    pub fn constant(rep: Arc<GammaRep>, phi: Spinor) -> Result<Self> {
        rep.check(&phi)?;
        Ok(Self::new(rep, move |p, order| {
            Ok(Jet::constant(JetSpace::get(p.dim(), order)?, phi.clone()))
        }))
    }

    pub fn zero(rep: Arc<GammaRep>) -> Self {
        let dim = rep.spinor_dim();
        Self::constant(rep, Spinor::zero(dim)).expect("zero spinor has the right size")
    }

    /// `ψ(x) = φ0 + (Σ_a x^a e_a)·φ1`, the general flat-space twistor spinor.
    pub fn coordinate_spinor(rep: Arc<GammaRep>, phi0: Spinor, phi1: Spinor) -> Result<Self> {
        rep.check(&phi0)?;
        rep.check(&phi1)?;
        let sig = rep.sig();
        let r = rep.clone();
        Ok(Self::new(rep, move |p, order| {
            let coords = Jet::coordinates(p.coords(), order)?;
            let space = coords[0].space().clone();
            let mut x = Jet::constant(space.clone(), Multivector::zero(sig));
            for (a, c) in coords.iter().enumerate() {
                let e = Multivector::basis_lower(sig, a);
                x.axpy(1.0, &c.map(|v| e.scale(*v)));
            }
            let phi1_jet = Jet::constant(space.clone(), phi1.clone());
            let mut out = r.act_jet(&x, &phi1_jet);
            out.axpy(1.0, &Jet::constant(space, phi0.clone()));
            Ok(out)
        }))
    }

    /// Spinor with polynomial components.
    pub fn polynomial(rep: Arc<GammaRep>, components: Vec<Polynomial>) -> Result<Self> {
        if components.len() != rep.spinor_dim() {
            return Err(Error::DimensionMismatch {
                expected: rep.spinor_dim(),
                got: components.len(),
            });
        }
        let n = rep.sig().dim();
        if components.iter().any(|c| c.dim() != n) {
            return Err(Error::MalformedSpec("polynomial dimension mismatch".into()));
        }
        let dim = rep.spinor_dim();
        Ok(Self::new(rep, move |p, order| {
            let coords = Jet::coordinates(p.coords(), order)?;
            let space = coords[0].space().clone();
            let mut out = Jet::constant(space, Spinor::zero(dim));
            for (i, poly) in components.iter().enumerate() {
                let c = poly.eval_jet(&coords);
                let u = Spinor::basis(dim, i);
                out.axpy(1.0, &c.map(|x| u.scale(*x)));
            }
            Ok(out)
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.sig().ensure_same(&other.sig())?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::new(self.rep.clone(), move |p, order| {
            Ok(a.eval(p, order)?.add(&b.eval(p, order)?))
        })
        .with_charge(self.charge))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.sig().ensure_same(&other.sig())?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::new(self.rep.clone(), move |p, order| {
            Ok(a.eval(p, order)?.sub(&b.eval(p, order)?))
        })
        .with_charge(self.charge))
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        let a = self.clone();
        Self::new(self.rep.clone(), move |p, order| {
            Ok(a.eval(p, order)?.scaled(c))
        })
        .with_charge(self.charge)
    }

    /// Clifford action `form · ψ`; charges add.
    pub fn clifford_by(&self, form: &FormField) -> Result<Self> {
        self.sig().ensure_same(&form.sig())?;
        let (a, f) = (self.clone(), form.clone());
        let rep = self.rep.clone();
        Ok(Self::new(self.rep.clone(), move |p, order| {
            Ok(rep.act_jet(&f.eval(p, order)?, &a.eval(p, order)?))
        })
        .with_charge(self.charge + form.charge()))
    }

    /// Product with the scalar part of a 0-form; charges add.
    pub fn times_scalar(&self, s: &FormField) -> Result<Self> {
        self.sig().ensure_same(&s.sig())?;
        let (a, s2) = (self.clone(), s.clone());
        Ok(Self::new(self.rep.clone(), move |p, order| {
            let f = s2.eval(p, order)?.map(|m| m.coeff(0));
            Ok(a.eval(p, order)?.times(&f))
        })
        .with_charge(self.charge + s.charge()))
    }

    /// `e^{-χ}·ψ` (or `e^{-iχ}·ψ`), charge raised by one.
    pub fn gauge_transformed(&self, chi: &FormField, imaginary: bool) -> Result<Self> {
        let c = if imaginary {
            C64::new(0.0, -1.0)
        } else {
            C64::new(-1.0, 0.0)
        };
        Ok(self
            .times_scalar(&chi.exp_scalar(c))?
            .with_charge(self.charge + 1))
    }
}

/// Either kind of field, as returned by residual evaluators.
#[derive(Clone, Debug)]
pub enum Field {
    Form(FormField),
    Spinor(SpinorField),
}

impl Field {
    /// Euclidean norm of the field's components at a point.
    pub fn norm_at(&self, p: &Point) -> Result<f64> {
        match self {
            Field::Form(f) => Ok(f.value(p)?.norm()),
            Field::Spinor(s) => Ok(s.value(p)?.norm()),
        }
    }

    pub fn charge(&self) -> i32 {
        match self {
            Field::Form(f) => f.charge(),
            Field::Spinor(s) => s.charge(),
        }
    }
}

impl From<FormField> for Field {
    fn from(f: FormField) -> Self {
        Field::Form(f)
    }
}

impl From<SpinorField> for Field {
    fn from(s: SpinorField) -> Self {
        Field::Spinor(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Linear;

    #[test]
    fn polynomial_form_derivatives() {
        let sig = Signature::euclidean(3);
        let f = FormField::scalar_polynomial(
            sig,
            Polynomial::from_terms(3, &[(1.0, &[1, 1, 0])]).unwrap(),
        )
        .unwrap();
        let j = f.coefficient_jet2(&Point::new(vec![2.0, 3.0, 5.0]), 0).unwrap();
        assert_eq!(j.value, C64::new(6.0, 0.0));
        assert_eq!(j.grad, vec![C64::new(3.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
    }

    #[test]
    fn constant_form_has_zero_derivatives() {
        let sig = Signature::euclidean(4);
        let f = FormField::constant(Multivector::basis(sig, 0));
        let j = f.eval(&Point::new(vec![0.3, 0.1, -0.2, 0.7]), 2).unwrap();
        assert!(j.terms()[1..].iter().all(|t| t.is_zero()));
        assert_eq!(f.grade(), Some(1));
    }

    #[test]
    fn harmonic_polynomial_laplacian() {
        let p = Polynomial::from_terms(2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        let coords = Jet::coordinates(&[0.4, -1.3], 2).unwrap();
        let j = p.eval_jet(&coords).to_jet2();
        assert_eq!(j.hess[0][0] + j.hess[1][1], C64::new(0.0, 0.0));
    }

    #[test]
    fn malformed_specs_rejected() {
        let sig = Signature::euclidean(3);
        assert!(Polynomial::from_terms(3, &[(1.0, &[1, 0])]).is_err());
        let p = Polynomial::constant(3, 1.0);
        assert!(FormField::polynomial(sig, vec![(vec![0, 0], p.clone())]).is_err());
        assert!(FormField::polynomial(sig, vec![(vec![5], p)]).is_err());
    }

    #[test]
    fn coordinate_spinor_constant_when_phi1_zero() {
        let sig = Signature::euclidean(4);
        let rep = GammaRep::new(sig);
        let phi0 = Spinor::basis(4, 1);
        let psi = SpinorField::coordinate_spinor(rep, phi0.clone(), Spinor::zero(4)).unwrap();
        let j = psi.eval(&Point::new(vec![0.5, 0.2, 0.1, -0.3]), 2).unwrap();
        assert_eq!(j.value(), &phi0);
        assert!(j.terms()[1..].iter().all(|t| t.is_zero()));
    }

    #[test]
    fn dimension_mismatch_on_bad_point() {
        let sig = Signature::euclidean(3);
        let f = FormField::zero(sig);
        assert!(f.eval(&Point::new(vec![0.0; 4]), 0).is_err());
    }
}
