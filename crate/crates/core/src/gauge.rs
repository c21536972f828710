//! U(1)-gauged derivatives.
//!
//! A field of charge `q` couples to `c·q·A` where `c = 1`, or `c = i` with the
//! imaginary toggle. Charge-zero fields see the plain Levi-Civita connection.

use crate::algebra::{Multivector, C64};
use crate::error::{Error, Result};
use crate::fields::{FormField, Point, SpinorField};
use crate::geometry::Geometry;
use crate::jet::Jet;

#[derive(Clone, Debug)]
pub struct Gauge {
    potential: FormField,
    imaginary: bool,
}

impl Gauge {
    /// Gauge connection from a 1-form potential.
    pub fn new(potential: FormField, imaginary: bool) -> Result<Self> {
        match potential.grade() {
            Some(1) | None => {}
            Some(g) => {
                return Err(Error::MalformedSpec(format!(
                    "gauge potential must be a 1-form, got grade {g}"
                )))
            }
        }
        if potential.charge() != 0 {
            return Err(Error::MalformedSpec("gauge potential must be uncharged".into()));
        }
        Ok(Self {
            potential: potential.with_grade(Some(1)),
            imaginary,
        })
    }

    /// Flat connection `A = dχ`.
    pub fn exact(geom: &Geometry, chi: &FormField, imaginary: bool) -> Result<Self> {
        if chi.grade() != Some(0) {
            return Err(Error::MalformedSpec("gauge function must be a 0-form".into()));
        }
        Self::new(geom.d(chi)?, imaginary)
    }

    pub fn potential(&self) -> &FormField {
        &self.potential
    }

    pub fn imaginary(&self) -> bool {
        self.imaginary
    }

    pub fn coupling(&self) -> C64 {
        if self.imaginary {
            C64::new(0.0, 1.0)
        } else {
            C64::new(1.0, 0.0)
        }
    }

    /// `F = dA`.
    pub fn field_strength(&self, geom: &Geometry) -> Result<FormField> {
        geom.d(&self.potential)
    }

    /// Effective potential `c·q·A` seen by a field of charge `q`.
    pub fn effective_potential(&self, charge: i32) -> FormField {
        self.potential.scale(self.coupling() * charge as f64)
    }

    /// Effective curvature `c·q·F`.
    pub fn effective_field_strength(&self, geom: &Geometry, charge: i32) -> Result<FormField> {
        Ok(self.field_strength(geom)?.scale(self.coupling() * charge as f64))
    }

    /// Frame components `c·q·A(X_a)` as jets.
    pub(crate) fn shifts(&self, p: &Point, order: usize, charge: i32) -> Result<Vec<Jet<C64>>> {
        let a = self.potential.eval(p, order)?;
        let c = self.coupling() * charge as f64;
        Ok((0..p.dim())
            .map(|i| a.map(|m| m.coeff(1 << i) * c))
            .collect())
    }
}

/// Gauged differential operators on a fixed geometry and gauge connection.
#[derive(Clone, Debug)]
pub struct Gauged {
    pub geom: Geometry,
    pub gauge: Option<Gauge>,
}

impl Gauged {
    pub fn new(geom: Geometry, gauge: Option<Gauge>) -> Self {
        Self { geom, gauge }
    }

    pub fn ungauged(geom: Geometry) -> Self {
        Self { geom, gauge: None }
    }

    fn g(&self) -> Option<&Gauge> {
        self.gauge.as_ref()
    }

    fn eff_potential(&self, charge: i32) -> FormField {
        match &self.gauge {
            Some(g) => g.effective_potential(charge),
            None => FormField::zero(self.geom.sig()),
        }
    }

    /// `c·q·F` for a field of charge `q`; zero without a gauge.
    pub fn eff_field_strength(&self, charge: i32) -> Result<FormField> {
        match &self.gauge {
            Some(g) => g.effective_field_strength(&self.geom, charge),
            None => Ok(FormField::zero(self.geom.sig()).with_grade(Some(2))),
        }
    }

    pub fn nabla(&self, f: &FormField, c: usize) -> Result<FormField> {
        self.geom.nabla_with(f, c, self.g())
    }

    /// `e^a ∧ ∇̂_{X_a}`.
    pub fn d(&self, f: &FormField) -> Result<FormField> {
        self.geom.d_with(f, self.g())
    }

    /// `-i_{X^a} ∇̂_{X_a}`.
    pub fn delta(&self, f: &FormField) -> Result<FormField> {
        self.geom.delta_with(f, self.g())
    }

    /// `e^a·∇̂_{X_a}`.
    pub fn hodge_de_rham(&self, f: &FormField) -> Result<FormField> {
        self.geom.dslash_with(f, self.g())
    }

    /// `d + A∧`.
    pub fn d_shifted(&self, f: &FormField) -> Result<FormField> {
        let a = self.eff_potential(f.charge());
        Ok(self.geom.d(f)?.add(&a.wedge(f)?)?.with_charge(f.charge()))
    }

    /// `δ - i_Ã`.
    pub fn delta_shifted(&self, f: &FormField) -> Result<FormField> {
        let a = self.eff_potential(f.charge());
        Ok(self.geom.delta(f)?.sub(&f.contract_with(&a)?)?.with_charge(f.charge()))
    }

    /// `d̸ + A`.
    pub fn hodge_de_rham_shifted(&self, f: &FormField) -> Result<FormField> {
        let a = self.eff_potential(f.charge());
        Ok(self
            .geom
            .hodge_de_rham(f)?
            .add(&a.clifford(f)?)?
            .with_charge(f.charge()))
    }

    /// `(d̂ - δ̂)²`.
    pub fn laplace(&self, f: &FormField) -> Result<FormField> {
        self.hodge_de_rham(&self.hodge_de_rham(f)?)
    }

    pub fn trace_hessian(&self, f: &FormField) -> Result<FormField> {
        self.geom.trace_hessian_with(f, self.g())
    }

    /// `[∇̂_a, ∇̂_b] - ∇̂_{[X_a, X_b]}` by second derivatives.
    pub fn curvature_commutator(&self, f: &FormField, a: usize, b: usize) -> Result<FormField> {
        self.geom.commutator_with(f, a, b, self.g())
    }

    /// `R(X_a, X_b)α - (i_{X_a} i_{X_b} F) α`, pointwise.
    pub fn curvature_action(&self, f: &FormField, a: usize, b: usize) -> Result<FormField> {
        let ff = self.eff_field_strength(f.charge())?;
        let (geom, f2) = (self.geom, f.clone());
        let ungauged = FormField::new(geom.sig(), f.grade(), move |p, order| {
            let pack = geom.curvature(p)?;
            Ok(f2
                .eval(p, order)?
                .map(|m| crate::geometry::curvature_action_with(&pack, m, a, b)))
        });
        let fab = ff.map_values(Some(0), move |m| m.interior(b).interior(a));
        Ok(ungauged.sub(&f.times_scalar(&fab)?)?.with_charge(f.charge()))
    }

    pub fn spinor_nabla(&self, psi: &SpinorField, c: usize) -> Result<SpinorField> {
        self.geom.spinor_nabla_with(psi, c, self.g())
    }

    /// `e^a·∇̂_{X_a}`.
    pub fn dirac(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.geom.dirac_with(psi, self.g())
    }

    /// `D̸ + A`.
    pub fn dirac_shifted(&self, psi: &SpinorField) -> Result<SpinorField> {
        let a = self.eff_potential(psi.charge());
        Ok(self
            .geom
            .dirac(psi)?
            .add(&psi.clifford_by(&a)?)?
            .with_charge(psi.charge()))
    }

    pub fn spinor_trace_hessian(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.geom.spinor_trace_hessian_with(psi, self.g())
    }

    pub fn spinor_curvature_commutator(&self, psi: &SpinorField, a: usize, b: usize) -> Result<SpinorField> {
        self.geom.spinor_commutator_with(psi, a, b, self.g())
    }

    /// `½ R_ab·ψ - (i_{X_a} i_{X_b} F) ψ`, pointwise.
    pub fn spinor_curvature_action(&self, psi: &SpinorField, a: usize, b: usize) -> Result<SpinorField> {
        let ff = self.eff_field_strength(psi.charge())?;
        let fab = ff.map_values(Some(0), move |m| m.interior(b).interior(a));
        Ok(self
            .geom
            .spinor_curvature_action(psi, a, b)?
            .sub(&psi.times_scalar(&fab)?)?
            .with_charge(psi.charge()))
    }

    /// `D̂²ψ - ∇̂²ψ + ¼𝓡ψ - F·ψ`.
    pub fn lichnerowicz_residual(&self, psi: &SpinorField) -> Result<SpinorField> {
        let ff = self.eff_field_strength(psi.charge())?;
        Ok(self
            .dirac(&self.dirac(psi)?)?
            .sub(&self.spinor_trace_hessian(psi)?)?
            .add(&self.geom.scalar_curvature_times(psi, 0.25)?)?
            .sub(&psi.clifford_by(&ff)?)?
            .with_charge(psi.charge()))
    }

    /// `d̂²α - F∧α`.
    pub fn d_squared_residual(&self, f: &FormField) -> Result<FormField> {
        let ff = self.eff_field_strength(f.charge())?;
        Ok(self.d(&self.d(f)?)?.sub(&ff.wedge(f)?)?.with_charge(f.charge()))
    }

    /// `δ̂²α + ½(i_{X^a} i_{X^b} F) i_{X_a} i_{X_b} α`, summed over all `a, b`.
    pub fn delta_squared_residual(&self, f: &FormField) -> Result<FormField> {
        self.delta_squared_with(f, 0.5)
    }

    /// Same square with unit weight on the double contraction. Nonzero
    /// whenever the contraction is.
    pub fn delta_squared_residual_unit_weight(&self, f: &FormField) -> Result<FormField> {
        self.delta_squared_with(f, 1.0)
    }

    fn delta_squared_with(&self, f: &FormField, weight: f64) -> Result<FormField> {
        let ff = self.eff_field_strength(f.charge())?;
        let term = f.zip_with(&ff, None, f.charge(), |a, fj| {
            let zero = Multivector::zero(a.value().sig());
            a.bilinear(fj, zero, |a, fm| double_contraction(fm, a))
        })?;
        Ok(self
            .delta(&self.delta(f)?)?
            .add(&term.scale(weight))?
            .with_charge(f.charge()))
    }
}

pub use crate::algebra::double_contraction;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Signature;
    use crate::fields::Polynomial;

    #[test]
    fn zero_potential_reduces_to_ungauged() {
        let sig = Signature::euclidean(3);
        let geom = Geometry::flat(sig);
        let g = Gauged::new(geom, Some(Gauge::new(FormField::zero(sig), false).unwrap()));
        let f = FormField::scalar_polynomial(sig, Polynomial::from_terms(3, &[(1.0, &[1, 2, 0])]).unwrap())
            .unwrap()
            .with_charge(1);
        let p = Point::new(vec![0.3, -0.2, 0.9]);
        assert_eq!(g.d(&f).unwrap().value(&p).unwrap(), geom.d(&f).unwrap().value(&p).unwrap());
    }

    #[test]
    fn constant_field_strength_commutator() {
        // A = x1 e2, F = e12
        let sig = Signature::euclidean(2);
        let geom = Geometry::flat(sig);
        let a = FormField::polynomial(sig, vec![(vec![1], Polynomial::coordinate(2, 0))]).unwrap();
        let g = Gauged::new(geom, Some(Gauge::new(a, false).unwrap()));
        let f = FormField::scalar_polynomial(sig, Polynomial::from_terms(2, &[(2.0, &[0, 1])]).unwrap())
            .unwrap()
            .with_charge(1);
        let p = Point::new(vec![0.4, 0.5]);
        let comm = g.curvature_commutator(&f, 0, 1).unwrap().value(&p).unwrap();
        // -(i_1 i_2 F) f = f
        assert!((comm.coeff(0) - C64::new(1.0, 0.0)).norm() < 1e-14, "{comm}");
        let formula = g.curvature_action(&f, 0, 1).unwrap().value(&p).unwrap();
        assert!((&comm - &formula).norm() < 1e-14);
    }
}
