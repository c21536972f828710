//! Geometry backends and covariant exterior calculus.
//!
//! The constant-curvature backend lives on the conformally flat chart
//! `g = h^{-2} η` with `h = 1 + (k/4) Σ η_aa x_a²`, orthonormal coframe
//! `e^a = h^{-1} dx^a` and frame `X_a = h ∂_a`. Its connection 1-forms are
//! `ω_ab = h_a e_b - h_b e_a` with `h_a = ∂_a h`, and `∇_X e^a = -ω^a_b(X) e^b`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Multivector, Signature, C64};
use crate::error::{Error, Result};
use crate::fields::{check_point, FormField, Point, SpinorField};
use crate::gauge::Gauge;
use crate::jet::{Jet, JetSpace};
use crate::spin::{GammaRep, Spinor};

/// Conformal factors below this magnitude are treated as leaving the chart.
const CHART_EPS: f64 = 1e-6;
/// Sampling rejects points whose conformal factor is smaller than this.
pub const SAMPLE_MIN_FACTOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryKind {
    Flat,
    ConstantCurvature(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    sig: Signature,
    kind: GeometryKind,
}

/// Frame data around a point, as jets of a fixed order.
pub(crate) struct LocalFrame {
    h: Jet<C64>,
    dh: Vec<Jet<C64>>,
    /// Per direction `c`, the nonzero `(a, b, ω_ab(X_c))`.
    conn: Vec<Vec<(usize, usize, Jet<C64>)>>,
    flat: bool,
}

/// Curvature characteristics at a point.
#[derive(Clone, Debug)]
pub struct CurvaturePack {
    /// `R[a][b]`, antisymmetric.
    pub r: Vec<Vec<Multivector>>,
    pub ricci: Vec<Multivector>,
    pub scalar: C64,
    /// Undefined for `n = 2`.
    pub k: Option<Vec<Multivector>>,
    /// Undefined for `n = 2`.
    pub conformal: Option<Vec<Vec<Multivector>>>,
}

impl CurvaturePack {
    /// Derives `P_a`, the scalar curvature, `K_a` and `C_ab` from the curvature 2-forms.
    pub fn from_two_forms(sig: Signature, r: Vec<Vec<Multivector>>) -> Self {
        let n = sig.dim();
        let ricci: Vec<Multivector> = (0..n)
            .map(|a| {
                let mut p = Multivector::zero(sig);
                for (b, row) in r.iter().enumerate() {
                    p += &row[a].interior_upper(b);
                }
                p
            })
            .collect();
        let scalar = (0..n)
            .map(|a| ricci[a].interior_upper(a).coeff(0))
            .sum::<C64>();
        let (k, conformal) = if n > 2 {
            let nf = n as f64;
            let k = (0..n)
                .map(|a| {
                    let el = Multivector::basis_lower(sig, a);
                    (&el.scale(scalar / (2.0 * (nf - 1.0))) - &ricci[a]).scale(1.0 / (nf - 2.0))
                })
                .collect();
            let c = (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            let ea = Multivector::basis_lower(sig, a);
                            let eb = Multivector::basis_lower(sig, b);
                            let pe = &ricci[a].wedge_unchecked(&eb) - &ricci[b].wedge_unchecked(&ea);
                            let eab = ea.wedge_unchecked(&eb);
                            &(&r[a][b] - &pe.scale(1.0 / (nf - 2.0)))
                                + &eab.scale(scalar / ((nf - 1.0) * (nf - 2.0)))
                        })
                        .collect()
                })
                .collect();
            (Some(k), Some(c))
        } else {
            (None, None)
        };
        Self {
            r,
            ricci,
            scalar,
            k,
            conformal,
        }
    }
}

/// `R(X_a, X_b) α = ½ [R_ab, α]`.
pub fn curvature_action_with(pack: &CurvaturePack, alpha: &Multivector, a: usize, b: usize) -> Multivector {
    let r = &pack.r[a][b];
    (&r.clifford_unchecked(alpha) - &alpha.clifford_unchecked(r)).scale(0.5)
}

/// The three expressions of the curvature endomorphism applied to a form.
#[derive(Clone, Debug)]
pub struct EndomorphismRoutes {
    /// `e^a ∧ i_{X^b} R(X_b, X_a) α`.
    pub operator: Multivector,
    /// `¼ R_ab·α·e^{ab} + ¼ 𝓡 α`.
    pub clifford: Multivector,
    /// `P_a ∧ i_{X^a} α - R_ab ∧ i_{X^b} i_{X^a} α`.
    pub wedge: Multivector,
}

pub fn curvature_endomorphism_with(pack: &CurvaturePack, alpha: &Multivector) -> EndomorphismRoutes {
    let sig = alpha.sig();
    let n = sig.dim();
    let mut operator = Multivector::zero(sig);
    let mut clifford = alpha.scale(pack.scalar * 0.25);
    let mut wedge = Multivector::zero(sig);
    for a in 0..n {
        let ea = Multivector::basis(sig, a);
        wedge += &pack.ricci[a].wedge_unchecked(&alpha.interior_upper(a));
        for b in 0..n {
            let act = curvature_action_with(pack, alpha, b, a);
            operator += &ea.wedge_unchecked(&act.interior_upper(b));
            let eab = ea.wedge_unchecked(&Multivector::basis(sig, b));
            clifford += &pack.r[a][b]
                .clifford_unchecked(alpha)
                .clifford_unchecked(&eab)
                .scale(0.25);
            wedge -= &pack.r[a][b].wedge_unchecked(&alpha.interior_upper(a).interior_upper(b));
        }
    }
    EndomorphismRoutes {
        operator,
        clifford,
        wedge,
    }
}

/// Sampled evaluation points.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<Point>,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificationCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl CertificationCheck {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct Certification {
    pub points: usize,
    pub rejected: usize,
    pub checks: Vec<CertificationCheck>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

fn shifted(mut base: Jet<Multivector>, j: &Jet<Multivector>, shift: Option<&Jet<C64>>) -> Jet<Multivector> {
    if let Some(s) = shift {
        base.axpy(1.0, &j.times(s));
    }
    base
}

impl Geometry {
    pub fn flat(sig: Signature) -> Self {
        Self {
            sig,
            kind: GeometryKind::Flat,
        }
    }

    pub fn constant_curvature(sig: Signature, k: f64) -> Self {
        Self {
            sig,
            kind: GeometryKind::ConstantCurvature(k),
        }
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.dim()
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    /// Sectional curvature (0 for flat).
    pub fn curvature_constant(&self) -> f64 {
        match self.kind {
            GeometryKind::Flat => 0.0,
            GeometryKind::ConstantCurvature(k) => k,
        }
    }

    pub fn conformal_factor(&self, p: &Point) -> f64 {
        let k = self.curvature_constant();
        1.0 + 0.25
            * k
            * p.coords()
                .iter()
                .enumerate()
                .map(|(a, x)| self.sig.metric(a) * x * x)
                .sum::<f64>()
    }

    pub fn check_chart(&self, p: &Point) -> Result<()> {
        check_point(&self.sig, p)?;
        let h = self.conformal_factor(p);
        if h.abs() < CHART_EPS {
            return Err(Error::OutsideChart {
                point: p.coords().to_vec(),
                factor: h,
            });
        }
        Ok(())
    }

    pub(crate) fn frame(&self, p: &Point, order: usize) -> Result<LocalFrame> {
        self.check_chart(p)?;
        let n = self.dim();
        let k = self.curvature_constant();
        if k == 0.0 {
            let space = JetSpace::get(n, order)?;
            return Ok(LocalFrame {
                h: Jet::scalar_const(space.clone(), 1.0),
                dh: vec![Jet::scalar_const(space, 0.0); n],
                conn: vec![Vec::new(); n],
                flat: true,
            });
        }
        let x = Jet::coordinates(p.coords(), order)?;
        let space = x[0].space().clone();
        let mut h = Jet::scalar_const(space, 1.0);
        for (a, xa) in x.iter().enumerate() {
            h.axpy(0.25 * k * self.sig.metric(a), &xa.mul(xa));
        }
        let dh: Vec<Jet<C64>> = x
            .iter()
            .enumerate()
            .map(|(a, xa)| xa.scaled(0.5 * k * self.sig.metric(a)))
            .collect();
        let conn = (0..n)
            .map(|c| {
                let ec = self.sig.metric(c);
                let mut v = Vec::with_capacity(2 * n);
                for a in (0..n).filter(|&a| a != c) {
                    v.push((a, c, dh[a].scaled(ec)));
                    v.push((c, a, dh[a].scaled(-ec)));
                }
                v
            })
            .collect();
        Ok(LocalFrame {
            h,
            dh,
            conn,
            flat: false,
        })
    }

    /// Connection coefficients `ω_ab(X_c)` at a point, indexed `[c][a][b]`.
    pub fn connection(&self, p: &Point) -> Result<Vec<Vec<Vec<f64>>>> {
        let fr = self.frame(p, 0)?;
        let n = self.dim();
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for (c, list) in fr.conn.iter().enumerate() {
            for (a, b, w) in list {
                out[c][*a][*b] += w.value().re;
            }
        }
        Ok(out)
    }

    /// Connection coefficients as jets of the given order, indexed `[c][a][b]`.
    pub fn connection_jets(&self, p: &Point, order: usize) -> Result<Vec<Vec<Vec<Jet<C64>>>>> {
        let fr = self.frame(p, order)?;
        let n = self.dim();
        let zero = Jet::scalar_const(fr.h.space().clone(), 0.0);
        let mut out = vec![vec![vec![zero; n]; n]; n];
        for (c, list) in fr.conn.iter().enumerate() {
            for (a, b, w) in list {
                out[c][*a][*b].axpy(1.0, w);
            }
        }
        Ok(out)
    }

    /// Closed-form curvature 2-forms `R_ab` of the backend.
    pub fn curvature_two_forms(&self, p: &Point) -> Result<Vec<Vec<Multivector>>> {
        self.check_chart(p)?;
        let n = self.dim();
        let k = self.curvature_constant();
        Ok((0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        Multivector::basis_lower(self.sig, a)
                            .wedge_unchecked(&Multivector::basis_lower(self.sig, b))
                            .scale(k)
                    })
                    .collect()
            })
            .collect())
    }

    pub fn curvature(&self, p: &Point) -> Result<CurvaturePack> {
        Ok(CurvaturePack::from_two_forms(self.sig, self.curvature_two_forms(p)?))
    }

    pub fn curvature_action(&self, alpha: &Multivector, a: usize, b: usize, p: &Point) -> Result<Multivector> {
        self.sig.ensure_same(&alpha.sig())?;
        self.sig.check_index(a)?;
        self.sig.check_index(b)?;
        Ok(curvature_action_with(&self.curvature(p)?, alpha, a, b))
    }

    pub fn curvature_endomorphism(&self, alpha: &Multivector, p: &Point) -> Result<EndomorphismRoutes> {
        self.sig.ensure_same(&alpha.sig())?;
        Ok(curvature_endomorphism_with(&self.curvature(p)?, alpha))
    }

    /// Form field built from the curvature pack. Frame components of the
    /// curvature are constant on every backend here, so its jets are constant.
    pub fn curvature_field(
        &self,
        grade: Option<usize>,
        f: impl Fn(&CurvaturePack) -> Result<Multivector> + Send + Sync + 'static,
    ) -> FormField {
        let g = *self;
        FormField::new(self.sig, grade, move |p, order| {
            let v = f(&g.curvature(p)?)?;
            Ok(Jet::constant(JetSpace::get(p.dim(), order)?, v))
        })
    }

    /// The 0-form `h^r`. Twistor spinors of the chart are `h^{-1/2}` times flat ones.
    pub fn conformal_power_field(&self, r: f64) -> FormField {
        let g = *self;
        FormField::new(self.sig, Some(0), move |p, order| {
            let fr = g.frame(p, order)?;
            let sig = g.sig;
            Ok(fr.h.powf(r)?.map(|c| Multivector::scalar(sig, *c)))
        })
    }

    pub fn scalar_curvature_field(&self) -> FormField {
        let sig = self.sig;
        self.curvature_field(Some(0), move |c| Ok(Multivector::scalar(sig, c.scalar)))
    }

    pub fn ricci_field(&self, a: usize) -> FormField {
        self.curvature_field(Some(1), move |c| Ok(c.ricci[a].clone()))
    }

    /// `K_a`; unsupported for `n = 2`.
    pub fn k_field(&self, a: usize) -> Result<FormField> {
        if self.dim() < 3 {
            return Err(Error::Unsupported("K_a is undefined for n = 2".into()));
        }
        Ok(self.curvature_field(Some(1), move |c| Ok(c.k.as_ref().expect("n > 2")[a].clone())))
    }

    /// `C_ab`; unsupported for `n = 2`.
    pub fn conformal_field(&self, a: usize, b: usize) -> Result<FormField> {
        if self.dim() < 3 {
            return Err(Error::Unsupported("C_ab is undefined for n = 2".into()));
        }
        Ok(self.curvature_field(Some(2), move |c| {
            Ok(c.conformal.as_ref().expect("n > 2")[a][b].clone())
        }))
    }

    // ---- jet-level covariant derivatives ----

    /// `∇_c` of a form jet; the result has one order less.
    pub(crate) fn nabla_form_jet(
        &self,
        fr: &LocalFrame,
        j: &Jet<Multivector>,
        c: usize,
        shift: Option<&Jet<C64>>,
    ) -> Jet<Multivector> {
        let mut base = j.partial(c);
        if !fr.flat {
            base = base.times(&fr.h);
        }
        let low = j.truncate(base.order());
        for (a, b, w) in &fr.conn[c] {
            let coeff = -self.sig.metric(*a);
            let eb = Multivector::basis(self.sig, *b);
            let term = low.map(|m| eb.wedge_unchecked(&m.interior(*a)));
            base.axpy(coeff, &term.times(w));
        }
        shifted(base, &low, shift)
    }

    pub(crate) fn nabla_spinor_jet(
        &self,
        fr: &LocalFrame,
        rep: &GammaRep,
        j: &Jet<Spinor>,
        c: usize,
        shift: Option<&Jet<C64>>,
    ) -> Jet<Spinor> {
        let mut base = j.partial(c);
        if !fr.flat {
            base = base.times(&fr.h);
        }
        let low = j.truncate(base.order());
        for (a, b, w) in &fr.conn[c] {
            let ab = Multivector::basis(self.sig, *a).clifford_unchecked(&Multivector::basis(self.sig, *b));
            let term = low.map(|s| rep.act_unchecked(&ab, s));
            base.axpy(0.25, &term.times(w));
        }
        if let Some(s) = shift {
            base.axpy(1.0, &low.times(s));
        }
        base
    }

    /// `c_b` with `∇_{X^a} X_a = c_b X_b`.
    fn trace_vector(&self, fr: &LocalFrame) -> Vec<Jet<C64>> {
        let n = self.dim();
        let space = fr.h.space().clone();
        let mut out = vec![Jet::scalar_const(space, 0.0); n];
        for (a, list) in fr.conn.iter().enumerate() {
            for (b, a2, w) in list {
                if *a2 == a {
                    out[*b].axpy(self.sig.metric(a) * self.sig.metric(*b), w);
                }
            }
        }
        out
    }

    fn form_shifts(
        &self,
        gauge: Option<&Gauge>,
        charge: i32,
        p: &Point,
        order: usize,
    ) -> Result<Option<Vec<Jet<C64>>>> {
        match gauge {
            Some(g) if charge != 0 => Ok(Some(g.shifts(p, order, charge)?)),
            _ => Ok(None),
        }
    }

    /// All directional derivatives of a form field at `order`, evaluated from one
    /// evaluation of the field.
    pub(crate) fn form_nablas(
        &self,
        f: &FormField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<Vec<Jet<Multivector>>> {
        let fr = self.frame(p, order)?;
        let j = f.eval(p, order + 1)?;
        let sh = self.form_shifts(gauge, f.charge(), p, order)?;
        Ok((0..self.dim())
            .map(|c| self.nabla_form_jet(&fr, &j, c, sh.as_ref().map(|s| &s[c])))
            .collect())
    }

    pub(crate) fn spinor_nablas(
        &self,
        psi: &SpinorField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<Vec<Jet<Spinor>>> {
        Ok(self.spinor_value_and_nablas(psi, gauge, p, order)?.1)
    }

    /// The spinor's own jet at `order` together with all `∇̂_c ψ`, from one evaluation.
    pub(crate) fn spinor_value_and_nablas(
        &self,
        psi: &SpinorField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<(Jet<Spinor>, Vec<Jet<Spinor>>)> {
        let fr = self.frame(p, order)?;
        let j = psi.eval(p, order + 1)?;
        let sh = self.form_shifts(gauge, psi.charge(), p, order)?;
        let nablas = (0..self.dim())
            .map(|c| self.nabla_spinor_jet(&fr, psi.rep(), &j, c, sh.as_ref().map(|s| &s[c])))
            .collect();
        Ok((j.truncate(order), nablas))
    }

    /// `Σ_a η_aa ∇_a ∇_a - ∇_{∇_{X^a} X_a}` on a form field.
    pub(crate) fn trace_hessian_form_jet(
        &self,
        f: &FormField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<Jet<Multivector>> {
        let fr = self.frame(p, order + 1)?;
        let first = self.form_nablas(f, gauge, p, order + 1)?;
        let sh = self.form_shifts(gauge, f.charge(), p, order)?;
        let cvec = self.trace_vector(&fr);
        let mut out = first[0].truncate(order).zero_like();
        for a in 0..self.dim() {
            let second = self.nabla_form_jet(&fr, &first[a], a, sh.as_ref().map(|s| &s[a]));
            out.axpy(self.sig.metric(a), &second);
            if !fr.flat {
                out.axpy(-1.0, &first[a].times(&cvec[a]).truncate(order));
            }
        }
        Ok(out)
    }

    pub(crate) fn trace_hessian_spinor_jet(
        &self,
        psi: &SpinorField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<Jet<Spinor>> {
        let fr = self.frame(p, order + 1)?;
        let first = self.spinor_nablas(psi, gauge, p, order + 1)?;
        let sh = self.form_shifts(gauge, psi.charge(), p, order)?;
        let cvec = self.trace_vector(&fr);
        let mut out = first[0].truncate(order).zero_like();
        for a in 0..self.dim() {
            let second = self.nabla_spinor_jet(&fr, psi.rep(), &first[a], a, sh.as_ref().map(|s| &s[a]));
            out.axpy(self.sig.metric(a), &second);
            if !fr.flat {
                out.axpy(-1.0, &first[a].times(&cvec[a]).truncate(order));
            }
        }
        Ok(out)
    }

    // ---- field-level operators ----

    pub(crate) fn nabla_with(&self, f: &FormField, c: usize, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        self.sig.check_index(c)?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        Ok(FormField::new(self.sig, f.grade(), move |p, order| {
            let mut all = g.form_nablas(&f2, gauge.as_ref(), p, order)?;
            Ok(all.swap_remove(c))
        })
        .with_charge(f.charge()))
    }

    pub(crate) fn d_with(&self, f: &FormField, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        let sig = self.sig;
        Ok(FormField::new(sig, f.grade().map(|p| p + 1), move |p, order| {
            let all = g.form_nablas(&f2, gauge.as_ref(), p, order)?;
            let mut out = all[0].zero_like();
            for (c, j) in all.iter().enumerate() {
                let ec = Multivector::basis(sig, c);
                out.axpy(1.0, &j.map(|m| ec.wedge_unchecked(m)));
            }
            Ok(out)
        })
        .with_charge(f.charge()))
    }

    pub(crate) fn delta_with(&self, f: &FormField, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        let grade = f.grade().map(|p| p.saturating_sub(1));
        Ok(FormField::new(self.sig, grade, move |p, order| {
            let all = g.form_nablas(&f2, gauge.as_ref(), p, order)?;
            let mut out = all[0].zero_like();
            for (c, j) in all.iter().enumerate() {
                out.axpy(-1.0, &j.map(|m| m.interior_upper(c)));
            }
            Ok(out)
        })
        .with_charge(f.charge()))
    }

    pub(crate) fn dslash_with(&self, f: &FormField, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        let sig = self.sig;
        Ok(FormField::new(sig, None, move |p, order| {
            let all = g.form_nablas(&f2, gauge.as_ref(), p, order)?;
            let mut out = all[0].zero_like();
            for (c, j) in all.iter().enumerate() {
                let ec = Multivector::basis(sig, c);
                out.axpy(1.0, &j.map(|m| ec.clifford_unchecked(m)));
            }
            Ok(out)
        })
        .with_charge(f.charge()))
    }

    pub(crate) fn trace_hessian_with(&self, f: &FormField, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        Ok(FormField::new(self.sig, f.grade(), move |p, order| {
            g.trace_hessian_form_jet(&f2, gauge.as_ref(), p, order)
        })
        .with_charge(f.charge()))
    }

    /// Commutator route `[∇_a, ∇_b] - ∇_{[X_a, X_b]}` with `[X_a, X_b] = h_a X_b - h_b X_a`.
    pub(crate) fn commutator_with(&self, f: &FormField, a: usize, b: usize, gauge: Option<&Gauge>) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        self.sig.check_index(a)?;
        self.sig.check_index(b)?;
        let (g, f2, gauge) = (*self, f.clone(), gauge.cloned());
        Ok(FormField::new(self.sig, f.grade(), move |p, order| {
            let fr = g.frame(p, order + 1)?;
            let first = g.form_nablas(&f2, gauge.as_ref(), p, order + 1)?;
            let sh = g.form_shifts(gauge.as_ref(), f2.charge(), p, order)?;
            let s = |c: usize| sh.as_ref().map(|v| &v[c]);
            let mut out = g.nabla_form_jet(&fr, &first[b], a, s(a));
            out.axpy(-1.0, &g.nabla_form_jet(&fr, &first[a], b, s(b)));
            out.axpy(-1.0, &first[b].times(&fr.dh[a]).truncate(order));
            out.axpy(1.0, &first[a].times(&fr.dh[b]).truncate(order));
            Ok(out)
        })
        .with_charge(f.charge()))
    }

    pub fn nabla(&self, f: &FormField, c: usize) -> Result<FormField> {
        self.nabla_with(f, c, None)
    }

    pub fn d(&self, f: &FormField) -> Result<FormField> {
        self.d_with(f, None)
    }

    pub fn delta(&self, f: &FormField) -> Result<FormField> {
        self.delta_with(f, None)
    }

    /// Hodge-de Rham operator `e^a·∇_{X_a}`.
    pub fn hodge_de_rham(&self, f: &FormField) -> Result<FormField> {
        self.dslash_with(f, None)
    }

    /// Laplace operator as the square of the Hodge-de Rham operator.
    pub fn laplace(&self, f: &FormField) -> Result<FormField> {
        self.hodge_de_rham(&self.hodge_de_rham(f)?)
    }

    /// `-dδ - δd`.
    pub fn laplace_split(&self, f: &FormField) -> Result<FormField> {
        let dd = self.d(&self.delta(f)?)?;
        let dd2 = self.delta(&self.d(f)?)?;
        Ok(dd.add(&dd2)?.scale(-1.0))
    }

    /// Trace of the Hessian `∇²`.
    pub fn trace_hessian(&self, f: &FormField) -> Result<FormField> {
        self.trace_hessian_with(f, None)
    }

    /// Second-derivative commutator `R(X_a, X_b)` applied to a field.
    pub fn curvature_commutator(&self, f: &FormField, a: usize, b: usize) -> Result<FormField> {
        self.commutator_with(f, a, b, None)
    }

    /// `I(R)` applied pointwise (wedge expression).
    pub fn curvature_endomorphism_field(&self, f: &FormField) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2) = (*self, f.clone());
        Ok(FormField::new(self.sig, f.grade(), move |p, order| {
            let pack = g.curvature(p)?;
            Ok(f2.eval(p, order)?.map(|m| curvature_endomorphism_with(&pack, m).wedge))
        })
        .with_charge(f.charge()))
    }

    /// `d̸²f - ∇²f + I(R)f`.
    pub fn weitzenbock_residual(&self, f: &FormField) -> Result<FormField> {
        self.laplace(f)?
            .sub(&self.trace_hessian(f)?)?
            .add(&self.curvature_endomorphism_field(f)?)
    }

    /// Exterior derivative computed in chart coordinates, independent of the connection.
    pub fn coordinate_d(&self, f: &FormField) -> Result<FormField> {
        self.sig.ensure_same(&f.sig())?;
        let (g, f2) = (*self, f.clone());
        Ok(FormField::new(self.sig, f.grade().map(|p| p + 1), move |p, order| {
            g.coordinate_d_jet(p, &f2.eval(p, order + 1)?)
        })
        .with_charge(f.charge()))
    }

    pub(crate) fn coordinate_d_jet(&self, p: &Point, j: &Jet<Multivector>) -> Result<Jet<Multivector>> {
        let order = j.order();
        let fr = self.frame(p, order)?;
        let hinv = fr.h.recip()?;
        let n = self.dim();
        let sig = self.sig;
        let mut hinv_pow = vec![Jet::scalar_const(fr.h.space().clone(), 1.0)];
        let mut h_pow = vec![Jet::scalar_const(fr.h.space().clone(), 1.0)];
        for k in 1..=n + 1 {
            hinv_pow.push(hinv_pow[k - 1].mul(&hinv));
            h_pow.push(h_pow[k - 1].mul(&fr.h));
        }
        let mut out = j.truncate(order - 1).zero_like();
        for mask in 0..sig.blades() {
            let c = j.map(|m| m.coeff(mask));
            if c.is_zero() {
                continue;
            }
            let deg = mask.count_ones() as usize;
            let coord = c.mul(&hinv_pow[deg]);
            let blade = Multivector::blade(sig, mask, 1.0);
            for d in 0..n {
                let ed = Multivector::basis(sig, d).wedge_unchecked(&blade);
                if ed.is_zero() {
                    continue;
                }
                let comp = coord.partial(d).mul(&h_pow[deg + 1]);
                out.axpy(1.0, &comp.map(|x| ed.scale(*x)));
            }
        }
        Ok(out)
    }

    // ---- spinor operators ----

    pub(crate) fn spinor_nabla_with(&self, psi: &SpinorField, c: usize, gauge: Option<&Gauge>) -> Result<SpinorField> {
        self.sig.ensure_same(&psi.sig())?;
        self.sig.check_index(c)?;
        let (g, s, gauge) = (*self, psi.clone(), gauge.cloned());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            let mut all = g.spinor_nablas(&s, gauge.as_ref(), p, order)?;
            Ok(all.swap_remove(c))
        })
        .with_charge(psi.charge()))
    }

    pub(crate) fn dirac_jet(
        &self,
        psi: &SpinorField,
        gauge: Option<&Gauge>,
        p: &Point,
        order: usize,
    ) -> Result<Jet<Spinor>> {
        let all = self.spinor_nablas(psi, gauge, p, order)?;
        Ok(self.clifford_sum(psi.rep(), &all))
    }

    /// `Σ_a e^a · v_a`.
    pub(crate) fn clifford_sum(&self, rep: &GammaRep, v: &[Jet<Spinor>]) -> Jet<Spinor> {
        let mut out = v[0].zero_like();
        for (a, j) in v.iter().enumerate() {
            let ea = Multivector::basis(self.sig, a);
            out.axpy(1.0, &j.map(|s| rep.act_unchecked(&ea, s)));
        }
        out
    }

    pub(crate) fn dirac_with(&self, psi: &SpinorField, gauge: Option<&Gauge>) -> Result<SpinorField> {
        self.sig.ensure_same(&psi.sig())?;
        let (g, s, gauge) = (*self, psi.clone(), gauge.cloned());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            g.dirac_jet(&s, gauge.as_ref(), p, order)
        })
        .with_charge(psi.charge()))
    }

    pub(crate) fn spinor_trace_hessian_with(&self, psi: &SpinorField, gauge: Option<&Gauge>) -> Result<SpinorField> {
        self.sig.ensure_same(&psi.sig())?;
        let (g, s, gauge) = (*self, psi.clone(), gauge.cloned());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            g.trace_hessian_spinor_jet(&s, gauge.as_ref(), p, order)
        })
        .with_charge(psi.charge()))
    }

    pub(crate) fn spinor_commutator_with(
        &self,
        psi: &SpinorField,
        a: usize,
        b: usize,
        gauge: Option<&Gauge>,
    ) -> Result<SpinorField> {
        self.sig.ensure_same(&psi.sig())?;
        self.sig.check_index(a)?;
        self.sig.check_index(b)?;
        let (g, s, gauge) = (*self, psi.clone(), gauge.cloned());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            let fr = g.frame(p, order + 1)?;
            let first = g.spinor_nablas(&s, gauge.as_ref(), p, order + 1)?;
            let sh = g.form_shifts(gauge.as_ref(), s.charge(), p, order)?;
            let sf = |c: usize| sh.as_ref().map(|v| &v[c]);
            let rep = s.rep();
            let mut out = g.nabla_spinor_jet(&fr, rep, &first[b], a, sf(a));
            out.axpy(-1.0, &g.nabla_spinor_jet(&fr, rep, &first[a], b, sf(b)));
            out.axpy(-1.0, &first[b].times(&fr.dh[a]).truncate(order));
            out.axpy(1.0, &first[a].times(&fr.dh[b]).truncate(order));
            Ok(out)
        })
        .with_charge(psi.charge()))
    }

    pub fn spinor_covariant_derivative(&self, psi: &SpinorField, c: usize) -> Result<SpinorField> {
        self.spinor_nabla_with(psi, c, None)
    }

    pub fn dirac(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.dirac_with(psi, None)
    }

    pub fn spinor_trace_hessian(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.spinor_trace_hessian_with(psi, None)
    }

    /// Commutator route for the spinor curvature operator.
    pub fn spinor_curvature_commutator(&self, psi: &SpinorField, a: usize, b: usize) -> Result<SpinorField> {
        self.spinor_commutator_with(psi, a, b, None)
    }

    /// `½ R_ab · ψ`, pointwise.
    pub fn spinor_curvature_action(&self, psi: &SpinorField, a: usize, b: usize) -> Result<SpinorField> {
        self.sig.ensure_same(&psi.sig())?;
        self.sig.check_index(a)?;
        self.sig.check_index(b)?;
        let (g, s) = (*self, psi.clone());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            let r = g.curvature_two_forms(p)?[a][b].scale(0.5);
            let rep = s.rep().clone();
            Ok(s.eval(p, order)?.map(|v| rep.act_unchecked(&r, v)))
        })
        .with_charge(psi.charge()))
    }

    /// Multiplication by a scalar function of the curvature, pointwise.
    pub(crate) fn scalar_curvature_times(&self, psi: &SpinorField, c: f64) -> Result<SpinorField> {
        let (g, s) = (*self, psi.clone());
        Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
            let r = g.curvature(p)?.scalar;
            Ok(s.eval(p, order)?.scaled(r * c))
        })
        .with_charge(psi.charge()))
    }

    /// `D̸²ψ - ∇²ψ + ¼𝓡ψ`.
    pub fn lichnerowicz_residual(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.dirac(&self.dirac(psi)?)?
            .sub(&self.spinor_trace_hessian(psi)?)?
            .add(&self.scalar_curvature_times(psi, 0.25)?)
    }

    // ---- sampling and certification ----

    /// Uniform points in `[-1, 1]^n`; points with a small conformal factor are rejected.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Samples> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut points = Vec::with_capacity(count);
        let mut rejected = 0;
        while points.len() < count {
            let p = Point::new((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
            if self.curvature_constant() != 0.0 && self.conformal_factor(&p).abs() < SAMPLE_MIN_FACTOR {
                rejected += 1;
                if rejected > 1000 * count.max(1) {
                    return Err(Error::OutsideChart {
                        point: p.0,
                        factor: self.conformal_factor(&Point::origin(n)),
                    });
                }
                continue;
            }
            points.push(p);
        }
        Ok(Samples { points, rejected })
    }

    /// Connection 1-forms `ω_ab` as jets.
    fn connection_form_jets(&self, p: &Point, order: usize) -> Result<Vec<Vec<Jet<Multivector>>>> {
        let coeffs = self.connection_jets(p, order)?;
        let n = self.dim();
        Ok((0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let mut acc = Jet::constant(coeffs[0][0][0].space().clone(), Multivector::zero(self.sig));
                        for (c, row) in coeffs.iter().enumerate() {
                            let ec = Multivector::basis(self.sig, c);
                            acc.axpy(1.0, &row[a][b].map(|x| ec.scale(*x)));
                        }
                        acc
                    })
                    .collect()
            })
            .collect())
    }

    /// Curvature 2-forms from the structure equation `R_ab = dω_ab + ω_ac ∧ ω^c_b`.
    pub fn curvature_from_connection(&self, p: &Point) -> Result<Vec<Vec<Multivector>>> {
        let omega = self.connection_form_jets(p, 1)?;
        let n = self.dim();
        let mut out = vec![vec![Multivector::zero(self.sig); n]; n];
        for a in 0..n {
            for b in 0..n {
                let mut r = self.coordinate_d_jet(p, &omega[a][b])?.into_value();
                for c in 0..n {
                    let w = omega[a][c]
                        .value()
                        .wedge_unchecked(omega[c][b].value())
                        .scale(self.sig.metric(c));
                    r += &w;
                }
                out[a][b] = r;
            }
        }
        Ok(out)
    }

    /// Checks the backend's curvature against independent derivations at sampled points.
    pub fn certify(&self, count: usize, seed: u64) -> Result<Certification> {
        let samples = self.sample_points(count, seed)?;
        let n = self.dim();
        let sig = self.sig;
        let k = self.curvature_constant();
        let nf = n as f64;
        let mut worst: Vec<(&str, f64, f64)> = vec![
            ("curvature from structure equation", 0.0, 1e-9),
            ("curvature from derivative commutator", 0.0, 1e-9),
            ("R_ab = k e_a^e_b", 0.0, 1e-9),
            ("P_a = k(n-1) e_a", 0.0, 1e-9),
            ("scalar curvature = k n(n-1)", 0.0, 1e-9),
            ("P_a = (scalar/n) e_a", 0.0, 1e-9),
            ("R_ab antisymmetric", 0.0, 1e-10),
            ("R_ab ^ e^b = 0", 0.0, 1e-10),
            ("P_a ^ e^a = 0", 0.0, 1e-10),
        ];
        if n > 2 {
            worst.push(("C_ab = 0", 0.0, 1e-9));
            worst.push(("K_a = -(k/2) e_a", 0.0, 1e-9));
        }
        let frame_fields: Vec<FormField> = (0..n)
            .map(|c| FormField::constant(Multivector::basis(sig, c)))
            .collect();
        let mut commutators = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    for (c, f) in frame_fields.iter().enumerate() {
                        commutators.push((a, b, c, self.curvature_commutator(f, a, b)?));
                    }
                }
            }
        }
        for p in &samples.points {
            let r = self.curvature_two_forms(p)?;
            let pack = CurvaturePack::from_two_forms(sig, r.clone());
            let cartan = self.curvature_from_connection(p)?;
            let mut res = vec![0.0; worst.len()];
            for a in 0..n {
                let ea = Multivector::basis_lower(sig, a);
                let mut bianchi = Multivector::zero(sig);
                for b in 0..n {
                    let eb = Multivector::basis_lower(sig, b);
                    res[0] = f64::max(res[0], (&cartan[a][b] - &r[a][b]).norm());
                    res[2] = f64::max(res[2], (&r[a][b] - &ea.wedge_unchecked(&eb).scale(k)).norm());
                    res[6] = f64::max(res[6], (&r[a][b] + &r[b][a]).norm());
                    bianchi += &r[a][b].wedge_unchecked(&Multivector::basis(sig, b));
                    if let Some(cw) = &pack.conformal {
                        res[9] = f64::max(res[9], cw[a][b].norm());
                    }
                }
                res[7] = f64::max(res[7], bianchi.norm());
                res[3] = f64::max(res[3], (&pack.ricci[a] - &ea.scale(k * (nf - 1.0))).norm());
                res[5] = f64::max(res[5], (&pack.ricci[a] - &ea.scale(pack.scalar / nf)).norm());
                if let Some(kk) = &pack.k {
                    res[10] = f64::max(res[10], (&kk[a] - &ea.scale(-0.5 * k)).norm());
                }
            }
            res[4] = (pack.scalar - C64::new(k * nf * (nf - 1.0), 0.0)).norm();
            let mut pe = Multivector::zero(sig);
            for a in 0..n {
                pe += &pack.ricci[a].wedge_unchecked(&Multivector::basis(sig, a));
            }
            res[8] = pe.norm();
            for (a, b, c, f) in &commutators {
                let lhs = f.value(p)?;
                let rhs = curvature_action_with(&pack, &Multivector::basis(sig, *c), *a, *b);
                res[1] = f64::max(res[1], (&lhs - &rhs).norm());
            }
            for (w, r) in worst.iter_mut().zip(res) {
                w.1 = f64::max(w.1, r);
            }
        }
        Ok(Certification {
            points: samples.points.len(),
            rejected: samples.rejected,
            checks: worst
                .into_iter()
                .map(|(name, max_residual, tolerance)| CertificationCheck {
                    name: name.to_string(),
                    max_residual,
                    tolerance,
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Polynomial;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec())
    }

    #[test]
    fn flat_d_of_product() {
        let sig = Signature::euclidean(3);
        let g = Geometry::flat(sig);
        let f = FormField::scalar_polynomial(sig, Polynomial::from_terms(3, &[(1.0, &[1, 1, 0])]).unwrap()).unwrap();
        let p = pt(&[2.0, 3.0, 5.0]);
        let df = g.d(&f).unwrap().value(&p).unwrap();
        let mut expect = Multivector::basis(sig, 0).scale(3.0);
        expect += &Multivector::basis(sig, 1).scale(2.0);
        assert_eq!(df, expect);
        assert!(g.delta(&f).unwrap().value(&p).unwrap().is_zero());
    }

    #[test]
    fn connection_vanishes_at_origin() {
        let g = Geometry::constant_curvature(Signature::euclidean(4), 1.0);
        let w = g.connection(&Point::origin(4)).unwrap();
        assert!(w.iter().flatten().flatten().all(|x| *x == 0.0));
        let e1 = FormField::constant(Multivector::basis(g.sig(), 1));
        assert!(g.nabla(&e1, 0).unwrap().value(&Point::origin(4)).unwrap().is_zero());
    }

    #[test]
    fn curvature_action_example() {
        let sig = Signature::euclidean(3);
        let g = Geometry::constant_curvature(sig, 2.0);
        let out = g
            .curvature_action(&Multivector::basis(sig, 0), 0, 1, &pt(&[0.1, 0.2, 0.3]))
            .unwrap();
        assert_eq!(out, Multivector::basis(sig, 1).scale(-2.0));
    }

    #[test]
    fn endomorphism_on_one_forms() {
        let sig = Signature::euclidean(4);
        let g = Geometry::constant_curvature(sig, 1.5);
        let a = &Multivector::basis(sig, 0) + &Multivector::basis(sig, 2).scale(3.0);
        let r = g.curvature_endomorphism(&a, &pt(&[0.0; 4])).unwrap();
        for v in [&r.operator, &r.clifford, &r.wedge] {
            assert!((v - &a.scale(1.5 * 3.0)).norm() < 1e-12, "{v}");
        }
        let s = g.curvature_endomorphism(&Multivector::scalar(sig, 1.0), &pt(&[0.0; 4])).unwrap();
        assert!(s.wedge.is_zero());
    }

    #[test]
    fn chart_boundary_is_an_error() {
        let g = Geometry::constant_curvature(Signature::euclidean(2), -4.0);
        // h = 1 - (x² + y²) vanishes on the unit circle
        assert!(matches!(g.check_chart(&pt(&[1.0, 0.0])), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Geometry::constant_curvature(Signature::euclidean(3), -1.0);
        let a = g.sample_points(20, 7).unwrap();
        let b = g.sample_points(20, 7).unwrap();
        assert_eq!(a.points, b.points);
    }
}
