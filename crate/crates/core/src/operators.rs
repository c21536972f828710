//! Equation residuals, symmetry and transformation operators on spinors, and
//! their composition into pipelines.
//!
//! Ungauged equations and operator kinds always use the Levi-Civita connection,
//! whatever gauge the context carries. Gauged ones use the context's gauge
//! with each field's charge.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{Multivector, Signature};
use crate::error::{Error, Result};
use crate::fields::{Field, FormField, Point, SpinorField};
use crate::gauge::{double_contraction, Gauged};
use crate::jet::{Jet, MAX_ORDER};
use crate::spin::{massive_residual, penrose_residual};

/// Tolerance for ingredient preconditions.
pub const PRECONDITION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EquationId {
    Twistor,
    Cky,
    CkyIntegrability,
    NormalCkyIntegrability,
    ConformalLaplace,
    Potential,
    GaugedTwistor,
    GaugedLaplaceGamma,
    GaugedConformalLaplace,
    GaugedPotential,
    GaugedCky,
    GaugedCkyIntegrability,
    Harmonic,
    Massive,
    GaugedHarmonic,
    GaugedMassive,
    GaugedHarmonicObstruction,
    HarmonicForm,
    GaugedHarmonicForm,
}

/// What kind of field an equation constrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubjectKind {
    Spinor,
    /// A homogeneous form of any degree.
    Form,
    /// A 0-form.
    Function,
}

impl EquationId {
    pub const ALL: [EquationId; 19] = [
        EquationId::Twistor,
        EquationId::Cky,
        EquationId::CkyIntegrability,
        EquationId::NormalCkyIntegrability,
        EquationId::ConformalLaplace,
        EquationId::Potential,
        EquationId::GaugedTwistor,
        EquationId::GaugedLaplaceGamma,
        EquationId::GaugedConformalLaplace,
        EquationId::GaugedPotential,
        EquationId::GaugedCky,
        EquationId::GaugedCkyIntegrability,
        EquationId::Harmonic,
        EquationId::Massive,
        EquationId::GaugedHarmonic,
        EquationId::GaugedMassive,
        EquationId::GaugedHarmonicObstruction,
        EquationId::HarmonicForm,
        EquationId::GaugedHarmonicForm,
    ];

    pub fn name(self) -> &'static str {
        use EquationId::*;
        match self {
            Twistor => "TWISTOR",
            Cky => "CKY",
            CkyIntegrability => "CKY_INT",
            NormalCkyIntegrability => "NORMAL_CKY_INT",
            ConformalLaplace => "CONF_LAPLACE",
            Potential => "POTENTIAL",
            GaugedTwistor => "GAUGED_TWISTOR",
            GaugedLaplaceGamma => "GAUGED_LAPLACE_GAMMA",
            GaugedConformalLaplace => "GAUGED_CONF_LAPLACE",
            GaugedPotential => "GAUGED_POTENTIAL",
            GaugedCky => "GAUGED_CKY",
            GaugedCkyIntegrability => "GAUGED_CKY_INT",
            Harmonic => "HARMONIC",
            Massive => "MASSIVE",
            GaugedHarmonic => "GAUGED_HARMONIC",
            GaugedMassive => "GAUGED_MASSIVE",
            GaugedHarmonicObstruction => "OBSTRUCTION",
            HarmonicForm => "HARMONIC_FORM",
            GaugedHarmonicForm => "GAUGED_HARMONIC_FORM",
        }
    }

    /// The residual being evaluated, left minus right.
    pub fn formula(self) -> &'static str {
        use EquationId::*;
        match self {
            Twistor => "∇_{X_a}ψ - (1/n) e_a·D̸ψ, per direction a",
            Cky => "∇_{X_a}ω - 1/(p+1) i_{X_a}dω + 1/(n-p+1) e_a∧δω, per direction a",
            CkyIntegrability => "p/(p+1) δdω + (n-p)/(n-p+1) dδω - e^b∧i_{X^a}R(X_a,X_b)ω",
            NormalCkyIntegrability => "p/(p+1) δdω + (n-p)/(n-p+1) dδω + 2(n-p) K_a∧i_{X^a}ω",
            ConformalLaplace => "Δf - (n-2)/(4(n-1)) 𝓡f,  Δ = -δd",
            Potential => {
                "1/(n-2(p+1)) δdα + 1/(n-2(p-1)) dδα - 1/(n-2) P_a∧i_{X^a}α + (n+2(p-1))/(4(n-1)(n-2)) 𝓡α"
            }
            GaugedTwistor => "∇̂_{X_a}ψ - (1/n) e_a·D̂ψ, per direction a",
            GaugedLaplaceGamma => "Δ̂f + [(1 + (n-2)/(n-1))γ - (n-2)/(4(n-1)) 𝓡]f,  Δ̂ = -δ̂d̂",
            GaugedConformalLaplace => "Δ̂f - (n-2)/(4(n-1)) 𝓡f",
            GaugedPotential => {
                "1/(n-2(p+1)) δ̂d̂α + 1/(n-2(p-1)) d̂δ̂α - 1/(n-2) P_a∧i_{X^a}α + (n+2(p-1))/(4(n-1)(n-2)) 𝓡α"
            }
            GaugedCky => "∇̂_{X_a}ω - 1/(p+1) i_{X_a}d̂ω + 1/(n-p+1) e_a∧δ̂ω, per direction a",
            GaugedCkyIntegrability => "p/(p+1) δ̂d̂ω + (n-p)/(n-p+1) d̂δ̂ω - e^b∧i_{X^a}R̂(X_a,X_b)ω",
            Harmonic => "D̸ψ",
            Massive => "D̸ψ - mψ",
            GaugedHarmonic => "D̂ψ",
            GaugedMassive => "D̂ψ - mψ",
            GaugedHarmonicObstruction => {
                "D̂𝓛̂_ωψ - [p/(p+1) (F∧ω)·ψ - 3 (i_{X^a}F∧i_{X_a}ω)·ψ - (n-p)/(n-p+1) (i_{X^a}i_{X^b}F) i_{X_a}i_{X_b}ω·ψ]"
            }
            HarmonicForm => "dΩ, δΩ",
            GaugedHarmonicForm => "d̂Ω, δ̂Ω",
        }
    }

    pub fn subject(self) -> SubjectKind {
        use EquationId::*;
        match self {
            Twistor | GaugedTwistor | Harmonic | Massive | GaugedHarmonic | GaugedMassive
            | GaugedHarmonicObstruction => SubjectKind::Spinor,
            ConformalLaplace | GaugedLaplaceGamma | GaugedConformalLaplace => SubjectKind::Function,
            _ => SubjectKind::Form,
        }
    }

    pub fn gauged(self) -> bool {
        use EquationId::*;
        matches!(
            self,
            GaugedTwistor
                | GaugedLaplaceGamma
                | GaugedConformalLaplace
                | GaugedPotential
                | GaugedCky
                | GaugedCkyIntegrability
                | GaugedHarmonic
                | GaugedMassive
                | GaugedHarmonicObstruction
                | GaugedHarmonicForm
        )
    }

    /// Equations whose residual has one component per frame direction.
    pub fn directional(self) -> bool {
        use EquationId::*;
        matches!(self, Twistor | GaugedTwistor | Cky | GaugedCky)
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EquationId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::MalformedSpec(format!("unknown equation `{s}`")))
    }
}

/// Scalar parameters and auxiliary fields some residuals need.
#[derive(Clone, Debug, Default)]
pub struct ResidualArgs {
    pub mass: f64,
    /// Eigenvalue of `F·ψ = γψ`.
    pub gamma: f64,
    /// The CKY form of the obstruction.
    pub omega: Option<FormField>,
}

fn as_spinor(id: EquationId, f: &Field) -> Result<&SpinorField> {
    match f {
        Field::Spinor(s) => Ok(s),
        Field::Form(_) => Err(Error::MalformedSpec(format!("{id} expects a spinor field"))),
    }
}

fn as_form(id: EquationId, f: &Field) -> Result<(&FormField, usize)> {
    match f {
        Field::Form(w) => {
            let p = w.grade().ok_or_else(|| Error::NotHomogeneous(format!("{id} needs a homogeneous form")))?;
            if id.subject() == SubjectKind::Function && p != 0 {
                return Err(Error::MalformedSpec(format!("{id} expects a function, got a {p}-form")));
            }
            Ok((w, p))
        }
        Field::Spinor(_) => Err(Error::MalformedSpec(format!("{id} expects a form field"))),
    }
}

fn forms(v: Vec<FormField>) -> Vec<Field> {
    v.into_iter().map(Field::Form).collect()
}

fn spinors(v: Vec<SpinorField>) -> Vec<Field> {
    v.into_iter().map(Field::Spinor).collect()
}

/// The residual components of `id` on `subject`.
pub fn residual(id: EquationId, ctx: &Gauged, subject: &Field, args: &ResidualArgs) -> Result<Vec<Field>> {
    use EquationId::*;
    let plain = Gauged::ungauged(ctx.geom);
    let c = if id.gauged() { ctx } else { &plain };
    match id {
        Twistor | GaugedTwistor => Ok(spinors(penrose_residual(c, as_spinor(id, subject)?)?)),
        Harmonic | GaugedHarmonic => Ok(vec![c.dirac(as_spinor(id, subject)?)?.into()]),
        Massive | GaugedMassive => Ok(vec![massive_residual(c, as_spinor(id, subject)?, args.mass)?.into()]),
        Cky | GaugedCky => {
            let (w, p) = as_form(id, subject)?;
            Ok(forms(cky_residual(c, w, p)?))
        }
        CkyIntegrability | GaugedCkyIntegrability => {
            let (w, p) = as_form(id, subject)?;
            let lhs = cky_second_order(c, w, p)?;
            Ok(vec![lhs.sub(&curvature_trace(c, w, p)?)?.into()])
        }
        NormalCkyIntegrability => {
            let (w, p) = as_form(id, subject)?;
            let n = c.geom.dim();
            let lhs = cky_second_order(c, w, p)?;
            let k = k_wedge(c, w, p)?;
            Ok(vec![lhs.add(&k.scale(2.0 * (n - p) as f64))?.into()])
        }
        ConformalLaplace => {
            let (f, _) = as_form(id, subject)?;
            Ok(vec![laplace_gamma(c, f, 0.0)?.into()])
        }
        GaugedConformalLaplace => {
            let (f, _) = as_form(id, subject)?;
            Ok(vec![laplace_gamma(c, f, 0.0)?.into()])
        }
        GaugedLaplaceGamma => {
            let (f, _) = as_form(id, subject)?;
            Ok(vec![laplace_gamma(c, f, args.gamma)?.into()])
        }
        Potential | GaugedPotential => {
            let (a, p) = as_form(id, subject)?;
            Ok(vec![potential_residual(c, a, p)?.into()])
        }
        HarmonicForm | GaugedHarmonicForm => {
            let (w, _) = as_form(id, subject)?;
            Ok(vec![c.d(w)?.into(), c.delta(w)?.into()])
        }
        GaugedHarmonicObstruction => {
            let psi = as_spinor(id, subject)?;
            let omega = args
                .omega
                .as_ref()
                .ok_or_else(|| Error::MalformedSpec("OBSTRUCTION needs a CKY form".into()))?;
            let lhs = ctx.dirac(&script_l_omega(ctx, omega, psi)?)?;
            let [t1, t2, t3] = obstruction_terms(ctx, omega, psi)?;
            Ok(vec![lhs.sub(&t1)?.sub(&t2)?.sub(&t3)?.into()])
        }
    }
}

/// Worst component norm at a point.
pub fn residual_norm(components: &[Field], p: &Point) -> Result<f64> {
    let mut m = 0.0f64;
    for c in components {
        let v = c.norm_at(p)?;
        m = if v.is_nan() { f64::NAN } else { m.max(v) };
    }
    Ok(m)
}

/// Residual norms over a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSweep {
    /// Worst component per point.
    pub per_point: Vec<f64>,
    /// Worst point per component (per frame direction for directional equations).
    pub per_component: Vec<f64>,
    pub max: f64,
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Evaluates every component at every point, in parallel over points.
pub fn sweep(components: &[Field], points: &[Point]) -> Result<ResidualSweep> {
    let table: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| components.iter().map(|c| c.norm_at(p)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let per_point: Vec<f64> = table.iter().map(|row| row.iter().copied().fold(0.0, nan_max)).collect();
    let per_component = (0..components.len())
        .map(|i| table.iter().map(|row| row[i]).fold(0.0, nan_max))
        .collect();
    let max = per_point.iter().copied().fold(0.0, nan_max);
    Ok(ResidualSweep {
        per_point,
        per_component,
        max,
    })
}

pub fn max_residual(
    id: EquationId,
    ctx: &Gauged,
    subject: &Field,
    args: &ResidualArgs,
    points: &[Point],
) -> Result<f64> {
    Ok(sweep(&residual(id, ctx, subject, args)?, points)?.max)
}

/// Fails with a precondition error naming `id` unless the residual stays within `tol`.
pub fn require(
    id: EquationId,
    ctx: &Gauged,
    subject: &Field,
    args: &ResidualArgs,
    points: &[Point],
    tol: f64,
) -> Result<()> {
    let r = max_residual(id, ctx, subject, args, points)?;
    if r <= tol {
        Ok(())
    } else {
        Err(Error::Precondition {
            equation: id,
            residual: r,
            tolerance: tol,
        })
    }
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn lower(sig: Signature, a: usize) -> Multivector {
    Multivector::basis_lower(sig, a)
}

fn cky_residual(c: &Gauged, w: &FormField, p: usize) -> Result<Vec<FormField>> {
    let sig = w.sig();
    let n = sig.dim();
    let dw = c.d(w)?;
    let delw = c.delta(w)?;
    (0..n)
        .map(|a| {
            let ea = lower(sig, a);
            let i_dw = dw.map_values(Some(p), move |m| m.interior(a)).scale(1.0 / (p + 1) as f64);
            let e_delw = delw
                .map_values(Some(p), move |m| ea.wedge_unchecked(m))
                .scale(1.0 / (n - p + 1) as f64);
            c.nabla(w, a)?.sub(&i_dw)?.add(&e_delw)
        })
        .collect()
}

/// `p/(p+1) δ̂d̂ω + (n-p)/(n-p+1) d̂δ̂ω`.
fn cky_second_order(c: &Gauged, w: &FormField, p: usize) -> Result<FormField> {
    let n = c.geom.dim();
    let a = c.delta(&c.d(w)?)?.scale(p as f64 / (p + 1) as f64);
    let b = c.d(&c.delta(w)?)?.scale((n - p) as f64 / (n - p + 1) as f64);
    a.add(&b)
}

/// `e^b ∧ i_{X^a} R̂(X_a, X_b) ω`.
fn curvature_trace(c: &Gauged, w: &FormField, p: usize) -> Result<FormField> {
    let sig = w.sig();
    let n = sig.dim();
    let mut acc = FormField::zero(sig).with_grade(Some(p)).with_charge(w.charge());
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let eb = Multivector::basis(sig, b);
            let term = c
                .curvature_action(w, a, b)?
                .map_values(Some(p), move |m| eb.wedge_unchecked(&m.interior_upper(a)));
            acc = acc.add(&term)?;
        }
    }
    Ok(acc)
}

/// `Σ_a K_a ∧ i_{X^a} ω`.
fn k_wedge(c: &Gauged, w: &FormField, p: usize) -> Result<FormField> {
    let sig = w.sig();
    let mut acc = FormField::zero(sig).with_grade(Some(p)).with_charge(w.charge());
    for a in 0..sig.dim() {
        let ia = w.map_values(p.checked_sub(1), move |m| m.interior_upper(a));
        acc = acc.add(&c.geom.k_field(a)?.wedge(&ia)?)?;
    }
    Ok(acc)
}

/// `Σ_a P_a ∧ i_{X^a} α`.
fn ricci_wedge(c: &Gauged, w: &FormField, p: usize) -> Result<FormField> {
    let sig = w.sig();
    let mut acc = FormField::zero(sig).with_grade(Some(p)).with_charge(w.charge());
    for a in 0..sig.dim() {
        let ia = w.map_values(p.checked_sub(1), move |m| m.interior_upper(a));
        acc = acc.add(&c.geom.ricci_field(a).wedge(&ia)?)?;
    }
    Ok(acc)
}

fn laplace_gamma(c: &Gauged, f: &FormField, gamma: f64) -> Result<FormField> {
    let n = c.geom.dim() as f64;
    let lap = c.delta(&c.d(f)?)?.scale(-1.0);
    let scal = c.geom.scalar_curvature_field().scale(-(n - 2.0) / (4.0 * (n - 1.0)));
    let coeff = scal.add(&FormField::constant(Multivector::scalar(
        f.sig(),
        (1.0 + (n - 2.0) / (n - 1.0)) * gamma,
    )))?;
    lap.add(&f.times_scalar(&coeff)?.with_charge(f.charge()))
}

/// Rejects the degrees where the potential-form coefficients blow up.
fn potential_coefficients(n: usize, p: usize) -> Result<(f64, f64)> {
    let (nf, pf) = (n as f64, p as f64);
    if n == 2 {
        return Err(Error::Singular("potential forms need n > 2".into()));
    }
    let up = nf - 2.0 * (pf + 1.0);
    let down = nf - 2.0 * (pf - 1.0);
    if up == 0.0 || down == 0.0 {
        return Err(Error::Singular(format!(
            "potential-form coefficients diverge for a {p}-form in dimension {n}"
        )));
    }
    Ok((1.0 / up, 1.0 / down))
}

fn potential_residual(c: &Gauged, a: &FormField, p: usize) -> Result<FormField> {
    let n = c.geom.dim();
    let (cu, cd) = potential_coefficients(n, p)?;
    let nf = n as f64;
    let lhs = c
        .delta(&c.d(a)?)?
        .scale(cu)
        .add(&c.d(&c.delta(a)?)?.scale(cd))?;
    let rw = ricci_wedge(c, a, p)?.scale(1.0 / (nf - 2.0));
    let scal = c.geom.scalar_curvature_field();
    let rs = a
        .times_scalar(&scal)?
        .with_charge(a.charge())
        .scale((nf + 2.0 * (p as f64 - 1.0)) / (4.0 * (nf - 1.0) * (nf - 2.0)));
    lhs.sub(&rw)?.add(&rs)
}

/// Right side of the gauged potential equation written with a single
/// coefficient, valid where `P_a = (𝓡/n) e_a`:
/// `(p/(n(n-2)) - (n+2(p-1))/(4(n-1)(n-2))) 𝓡α`.
pub fn potential_rhs_constant_curvature(ctx: &Gauged, alpha: &FormField) -> Result<FormField> {
    let p = alpha
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("potential form".into()))?;
    let n = ctx.geom.dim() as f64;
    if n == 2.0 {
        return Err(Error::Singular("potential forms need n > 2".into()));
    }
    let pf = p as f64;
    let coeff = pf / (n * (n - 2.0)) - (n + 2.0 * (pf - 1.0)) / (4.0 * (n - 1.0) * (n - 2.0));
    Ok(alpha
        .times_scalar(&ctx.geom.scalar_curvature_field())?
        .with_charge(alpha.charge())
        .scale(coeff))
}

/// Right side of the potential equation as a sum over `P_a`.
pub fn potential_rhs(ctx: &Gauged, alpha: &FormField) -> Result<FormField> {
    let p = alpha
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("potential form".into()))?;
    let n = ctx.geom.dim() as f64;
    if n == 2.0 {
        return Err(Error::Singular("potential forms need n > 2".into()));
    }
    let rw = ricci_wedge(ctx, alpha, p)?.scale(1.0 / (n - 2.0));
    let rs = alpha
        .times_scalar(&ctx.geom.scalar_curvature_field())?
        .with_charge(alpha.charge())
        .scale((n + 2.0 * (p as f64 - 1.0)) / (4.0 * (n - 1.0) * (n - 2.0)));
    rw.sub(&rs)
}

/// The three gauge-curvature terms that `D̂𝓛̂_ωψ` reduces to on a gauged harmonic
/// spinor: `p/(p+1) (F∧ω)·ψ`, `-3 (i_{X^a}F∧i_{X_a}ω)·ψ` and
/// `-(n-p)/(n-p+1) ((i_{X^a}i_{X^b}F) i_{X_a}i_{X_b}ω)·ψ`. `F` is the field
/// strength seen by the product `ω·ψ`.
pub fn obstruction_terms(ctx: &Gauged, omega: &FormField, psi: &SpinorField) -> Result<[SpinorField; 3]> {
    let p = omega
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("CKY form".into()))?;
    let n = ctx.geom.dim();
    let f = ctx.eff_field_strength(omega.charge() + psi.charge())?;
    let sig = omega.sig();
    let fw = f.wedge(omega)?.with_charge(0);
    let mixed = f.zip_with(omega, Some(p), 0, move |fj, wj| {
        let mut out = fj.zero_like();
        for a in 0..sig.dim() {
            let x = fj.map(|m| m.interior_upper(a));
            let y = wj.map(|m| m.interior(a));
            out.axpy(1.0, &crate::fields::jet_wedge(&x, &y));
        }
        out
    })?;
    let dc = f.zip_with(omega, p.checked_sub(2), 0, |fj, wj| {
        let zero = Multivector::zero(fj.value().sig());
        fj.bilinear(wj, zero, |fm, wm| double_contraction(fm, wm))
    })?;
    let charge = psi.charge() + omega.charge();
    let t1 = psi.clifford_by(&fw)?.scale(p as f64 / (p + 1) as f64);
    let t2 = psi.clifford_by(&mixed)?.scale(-3.0);
    let t3 = psi
        .clifford_by(&dc)?
        .scale(-((n - p) as f64) / (n - p + 1) as f64);
    Ok([t1.with_charge(charge), t2.with_charge(charge), t3.with_charge(charge)])
}

// ---- operators ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    LOmega,
    ScriptLOmega,
    LF,
    LAlpha,
    /// `Ω·ψ` for a harmonic middle form `Ω`.
    LMiddle,
    HatLOmega,
    HatScriptLOmega,
    HatLF,
    HatLAlpha,
    HatLMiddle,
}

/// Where an operator sits in a twistor-to-harmonic pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// Twistor spinors to twistor spinors.
    TwistorSymmetry,
    /// Twistor spinors to harmonic spinors.
    Transformation,
    /// Harmonic spinors to harmonic spinors.
    HarmonicSymmetry,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 10] = [
        OperatorKind::LOmega,
        OperatorKind::ScriptLOmega,
        OperatorKind::LF,
        OperatorKind::LAlpha,
        OperatorKind::LMiddle,
        OperatorKind::HatLOmega,
        OperatorKind::HatScriptLOmega,
        OperatorKind::HatLF,
        OperatorKind::HatLAlpha,
        OperatorKind::HatLMiddle,
    ];

    pub fn name(self) -> &'static str {
        use OperatorKind::*;
        match self {
            LOmega => "L_omega",
            ScriptLOmega => "Script_L_omega",
            LF => "L_f",
            LAlpha => "L_alpha",
            LMiddle => "L_middle",
            HatLOmega => "hat_L_omega",
            HatScriptLOmega => "hat_Script_L_omega",
            HatLF => "hat_L_f",
            HatLAlpha => "hat_L_alpha",
            HatLMiddle => "hat_L_middle",
        }
    }

    pub fn gauged(self) -> bool {
        use OperatorKind::*;
        matches!(self, HatLOmega | HatScriptLOmega | HatLF | HatLAlpha | HatLMiddle)
    }

    pub fn stage(self) -> Stage {
        use OperatorKind::*;
        match self {
            LOmega | HatLOmega => Stage::TwistorSymmetry,
            LF | LAlpha | LMiddle | HatLF | HatLAlpha | HatLMiddle => Stage::Transformation,
            ScriptLOmega | HatScriptLOmega => Stage::HarmonicSymmetry,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::MalformedSpec(format!("unknown operator `{s}`")))
    }
}

/// An operator together with its form ingredient.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    kind: OperatorKind,
    ingredient: FormField,
    gamma: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, ingredient: FormField) -> Result<Self> {
        let p = ingredient
            .grade()
            .ok_or_else(|| Error::NotHomogeneous(format!("{kind} needs a homogeneous ingredient")))?;
        let n = ingredient.dim();
        match kind {
            OperatorKind::LF | OperatorKind::HatLF if p != 0 => {
                return Err(Error::MalformedSpec(format!("{kind} needs a function, got a {p}-form")))
            }
            OperatorKind::LMiddle | OperatorKind::HatLMiddle if n % 2 != 0 || 2 * p != n => {
                return Err(Error::MalformedSpec(format!(
                    "{kind} needs a middle form, got a {p}-form in dimension {n}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            ingredient,
            gamma: 0.0,
        })
    }

    /// Eigenvalue `γ` of `F·ψ = γψ` assumed by `hat_L_f`.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn ingredient(&self) -> &FormField {
        &self.ingredient
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grade(&self) -> usize {
        self.ingredient.grade().expect("checked at construction")
    }

    /// The equation the ingredient has to satisfy.
    pub fn precondition(&self) -> EquationId {
        use OperatorKind::*;
        match self.kind {
            LOmega | ScriptLOmega => EquationId::Cky,
            HatLOmega | HatScriptLOmega => EquationId::GaugedCky,
            LF => EquationId::ConformalLaplace,
            HatLF if self.gamma != 0.0 => EquationId::GaugedLaplaceGamma,
            HatLF => EquationId::GaugedConformalLaplace,
            LAlpha => EquationId::Potential,
            HatLAlpha => EquationId::GaugedPotential,
            LMiddle => EquationId::HarmonicForm,
            HatLMiddle => EquationId::GaugedHarmonicForm,
        }
    }

    /// Checks the ingredient's equation at `points`.
    pub fn check(&self, ctx: &Gauged, points: &[Point], tol: f64) -> Result<()> {
        let args = ResidualArgs {
            gamma: self.gamma,
            ..Default::default()
        };
        require(self.precondition(), ctx, &self.ingredient.clone().into(), &args, points, tol)
    }

    /// The operator applied to `psi`, without checking the ingredient.
    pub fn apply_unchecked(&self, ctx: &Gauged, psi: &SpinorField) -> Result<SpinorField> {
        self.ingredient.sig().ensure_same(&psi.sig())?;
        ctx.geom.sig().ensure_same(&psi.sig())?;
        if self.kind.gauged() && ctx.gauge.is_none() {
            return Err(Error::MalformedSpec(format!("{} needs a gauge context", self.kind)));
        }
        let plain = Gauged::ungauged(ctx.geom);
        let c = if self.kind.gauged() { ctx } else { &plain };
        let w = &self.ingredient;
        use OperatorKind::*;
        match self.kind {
            LOmega | HatLOmega => l_omega(c, w, psi),
            ScriptLOmega | HatScriptLOmega => script_l_omega(c, w, psi),
            LF | HatLF => l_f(c, w, psi),
            LAlpha | HatLAlpha => l_alpha(c, w, psi),
            LMiddle | HatLMiddle => Ok(psi.clifford_by(w)?),
        }
    }

    /// Checks the ingredient at `points` within `tol`, then applies the operator.
    pub fn apply(&self, ctx: &Gauged, psi: &SpinorField, points: &[Point], tol: f64) -> Result<SpinorField> {
        self.check(ctx, points, tol)?;
        self.apply_unchecked(ctx, psi)
    }
}

/// `a·D̂ψ + b·ψ` with `a`, `b` form fields, evaluating `ψ` once per call.
fn dirac_combination(c: &Gauged, a: &FormField, b: &FormField, psi: &SpinorField) -> Result<SpinorField> {
    let (geom, gauge, s, a, b) = (c.geom, c.gauge.clone(), psi.clone(), a.clone(), b.clone());
    let rep = psi.rep().clone();
    let charge = psi.charge() + a.charge();
    Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
        let (v, nab) = geom.spinor_value_and_nablas(&s, gauge.as_ref(), p, order)?;
        let d = geom.clifford_sum(&rep, &nab);
        let mut out = rep.act_jet(&a.eval(p, order)?, &d);
        out.axpy(1.0, &rep.act_jet(&b.eval(p, order)?, &v));
        Ok(out)
    })
    .with_charge(charge))
}

/// `-(-1)^p (p/n) ω·D̂ψ + p/(2(p+1)) d̂ω·ψ + p/(2(n-p+1)) δ̂ω·ψ`.
fn l_omega(c: &Gauged, w: &FormField, psi: &SpinorField) -> Result<SpinorField> {
    let p = w.grade().expect("homogeneous");
    let n = c.geom.dim();
    let (pf, nf) = (p as f64, n as f64);
    let a = w.scale(-sign(p) * pf / nf);
    let b = c
        .d(w)?
        .scale(pf / (2.0 * (pf + 1.0)))
        .add(&c.delta(w)?.scale(pf / (2.0 * (nf - pf + 1.0))))?;
    dirac_combination(c, &a, &b, psi)
}

/// `((n-2)/n) f D̂ψ + d̂f·ψ`.
fn l_f(c: &Gauged, f: &FormField, psi: &SpinorField) -> Result<SpinorField> {
    let nf = c.geom.dim() as f64;
    dirac_combination(c, &f.scale((nf - 2.0) / nf), &c.d(f)?, psi)
}

/// `α·D̂ψ + Ω·ψ` with `Ω` from [`omega_from_alpha`].
fn l_alpha(c: &Gauged, alpha: &FormField, psi: &SpinorField) -> Result<SpinorField> {
    let omega = omega_from_alpha_in(c, alpha)?;
    dirac_combination(c, alpha, &omega, psi)
}

/// `e^a·ω·∇̂_{X_a}ψ + p/(p+1) d̂ω·ψ - (n-p)/(n-p+1) δ̂ω·ψ`.
fn script_l_omega(c: &Gauged, w: &FormField, psi: &SpinorField) -> Result<SpinorField> {
    let p = w.grade().ok_or_else(|| Error::NotHomogeneous("CKY form".into()))?;
    let n = c.geom.dim();
    let (pf, nf) = (p as f64, n as f64);
    let b = c
        .d(w)?
        .scale(pf / (pf + 1.0))
        .sub(&c.delta(w)?.scale((nf - pf) / (nf - pf + 1.0)))?;
    let (geom, gauge, s, w) = (c.geom, c.gauge.clone(), psi.clone(), w.clone());
    let rep = psi.rep().clone();
    let sig = geom.sig();
    let ea: Arc<Vec<Multivector>> = Arc::new((0..n).map(|a| Multivector::basis(sig, a)).collect());
    let charge = psi.charge() + w.charge();
    Ok(SpinorField::new(psi.rep().clone(), move |p, order| {
        let (v, nab) = geom.spinor_value_and_nablas(&s, gauge.as_ref(), p, order)?;
        let wj = w.eval(p, order)?;
        let mut out = rep.act_jet(&b.eval(p, order)?, &v);
        for (a, na) in nab.iter().enumerate() {
            let e = &ea[a];
            let ew: Jet<Multivector> = wj.map(|m| e.clifford_unchecked(m));
            out.axpy(1.0, &rep.act_jet(&ew, na));
        }
        Ok(out)
    })
    .with_charge(charge))
}

fn omega_from_alpha_in(c: &Gauged, alpha: &FormField) -> Result<FormField> {
    let p = alpha
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("potential form".into()))?;
    let n = c.geom.dim();
    let (cu, cd) = potential_coefficients(n, p)?;
    let s = sign(p) * n as f64;
    c.d(alpha)?.scale(s * cu).sub(&c.delta(alpha)?.scale(s * cd))
}

/// `Ω = (-1)^p n/(n-2(p+1)) d̂α - (-1)^p n/(n-2(p-1)) δ̂α`, the Clifford form that
/// makes `α·D̂ψ + Ω·ψ` harmonic. Ungauged unless `gauged`.
pub fn omega_from_alpha(ctx: &Gauged, alpha: &FormField, gauged: bool) -> Result<FormField> {
    if gauged {
        omega_from_alpha_in(ctx, alpha)
    } else {
        omega_from_alpha_in(&Gauged::ungauged(ctx.geom), alpha)
    }
}

/// The two conditions under which `α·D̂ψ + Ω·ψ` is harmonic for every twistor `ψ`.
#[derive(Clone, Debug)]
pub struct ConstructionConditions {
    /// `d̸̂α + ((n - 2Π)/n) ηΩ`.
    pub first: FormField,
    /// `d̸̂Ω + (n/2) e^a·α·K_a - (-1)^p (n-2p)/((n-1)(n-2)) α·F + n/(n-2) e^a·α·i_{X_a}F`.
    pub second: FormField,
}

/// Conditions for `Ω = omega_from_alpha(α)`. `F` is the field strength seen by a
/// spinor of charge `spinor_charge`; it is dropped when `gauged` is false.
pub fn construction_conditions(
    ctx: &Gauged,
    alpha: &FormField,
    gauged: bool,
    spinor_charge: i32,
) -> Result<ConstructionConditions> {
    let plain = Gauged::ungauged(ctx.geom);
    let c = if gauged { ctx } else { &plain };
    let p = alpha
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("potential form".into()))?;
    let sig = alpha.sig();
    let n = sig.dim();
    let nf = n as f64;
    let omega = omega_from_alpha_in(c, alpha)?;
    let eta = omega.map_values(None, move |m| m.eta().map_grades(|g| ((nf - 2.0 * g as f64) / nf).into()));
    let first = c.hodge_de_rham(alpha)?.add(&eta)?;
    let mut second = c.hodge_de_rham(&omega)?;
    for a in 0..n {
        let ea = FormField::constant(Multivector::basis(sig, a));
        let term = ea.clifford(alpha)?.clifford(&c.geom.k_field(a)?)?;
        second = second.add(&term.scale(nf / 2.0))?;
    }
    if gauged {
        let f = c.eff_field_strength(spinor_charge)?;
        let af = alpha.clifford(&f)?.scale(-sign(p) * (nf - 2.0 * p as f64) / ((nf - 1.0) * (nf - 2.0)));
        second = second.add(&af)?;
        for a in 0..n {
            let ea = FormField::constant(Multivector::basis(sig, a));
            let i_f = f.map_values(Some(1), move |m| m.interior(a));
            second = second.add(&ea.clifford(alpha)?.clifford(&i_f)?.scale(nf / (nf - 2.0)))?;
        }
    }
    Ok(ConstructionConditions { first, second })
}

/// The gauge-curvature terms of the gauged potential-form condition, sorted by
/// degree. They cannot balance the degree-`p` equation, so each must vanish on
/// its own.
#[derive(Clone, Debug)]
pub struct ConsistencyTerms {
    /// `(2/(n-2) - (n-2p)/(n(n-1)(n-2))) i_{X_a}F ∧ i_{X^a}α`, degree `p`.
    pub same_degree: FormField,
    /// `(1/(n-2(p+1)) - (n-2p)/(n(n-1)(n-2)) - 2/(n-2)) F∧α`, degree `p+2`.
    pub raised: FormField,
    /// `-(1/(n-2(p-1)) - (n-2p)/(2n(n-1)(n-2)) + 1/(n-2)) (i_{X_a}i_{X_b}F) i_{X^a}i_{X^b}α`, degree `p-2`.
    pub lowered: FormField,
}

pub fn consistency_terms(ctx: &Gauged, alpha: &FormField, spinor_charge: i32) -> Result<ConsistencyTerms> {
    let p = alpha
        .grade()
        .ok_or_else(|| Error::NotHomogeneous("potential form".into()))?;
    let sig = alpha.sig();
    let n = sig.dim();
    let (cu, cd) = potential_coefficients(n, p)?;
    let (nf, pf) = (n as f64, p as f64);
    let base = (nf - 2.0 * pf) / (nf * (nf - 1.0) * (nf - 2.0));
    let f = ctx.eff_field_strength(spinor_charge)?;
    let mixed = f.zip_with(alpha, Some(p), alpha.charge(), move |fj, aj| {
        let mut out = fj.zero_like();
        for a in 0..sig.dim() {
            let x = fj.map(|m| m.interior(a));
            let y = aj.map(|m| m.interior_upper(a));
            out.axpy(1.0, &crate::fields::jet_wedge(&x, &y));
        }
        out
    })?;
    let dc = f.zip_with(alpha, p.checked_sub(2), alpha.charge(), |fj, aj| {
        let zero = Multivector::zero(fj.value().sig());
        fj.bilinear(aj, zero, |fm, am| double_contraction(fm, am))
    })?;
    Ok(ConsistencyTerms {
        same_degree: mixed.scale(2.0 / (nf - 2.0) - base),
        raised: f.wedge(alpha)?.with_charge(alpha.charge()).scale(cu - base - 2.0 / (nf - 2.0)),
        lowered: dc.scale(-(cd - base / 2.0 + 1.0 / (nf - 2.0))),
    })
}

// ---- pipelines ----

/// A sequence of operators applied left to right: twistor symmetries, then at
/// most one transformation, then harmonic symmetries.
#[derive(Clone, Debug, Default)]
pub struct Pipeline {
    stages: Vec<OperatorSpec>,
}

impl Pipeline {
    pub fn new(stages: Vec<OperatorSpec>) -> Result<Self> {
        if let Some(first) = stages.first() {
            let g = first.kind.gauged();
            if let Some(bad) = stages.iter().find(|s| s.kind.gauged() != g) {
                return Err(Error::InvalidPipeline(format!(
                    "{} mixes gauged and ungauged operators",
                    bad.kind
                )));
            }
        }
        for w in stages.windows(2) {
            let (a, b) = (w[0].kind.stage(), w[1].kind.stage());
            if b < a || (a == Stage::Transformation && b == Stage::Transformation) {
                return Err(Error::InvalidPipeline(format!(
                    "{} cannot follow {}",
                    w[1].kind, w[0].kind
                )));
            }
        }
        // each stage consumes one derivative; the final check needs one more
        if stages.len() + 1 > MAX_ORDER {
            return Err(Error::JetDepthExhausted {
                requested: stages.len() + 1,
                max: MAX_ORDER,
            });
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[OperatorSpec] {
        &self.stages
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn gauged(&self) -> bool {
        self.stages.first().is_some_and(|s| s.kind.gauged())
    }

    /// The equation the input spinor must satisfy.
    pub fn input_equation(&self) -> Option<EquationId> {
        let first = self.stages.first()?;
        Some(match (first.kind.stage(), self.gauged()) {
            (Stage::HarmonicSymmetry, false) => EquationId::Harmonic,
            (Stage::HarmonicSymmetry, true) => EquationId::GaugedHarmonic,
            (_, false) => EquationId::Twistor,
            (_, true) => EquationId::GaugedTwistor,
        })
    }

    /// The equation the output satisfies.
    pub fn output_equation(&self) -> Option<EquationId> {
        let last = self.stages.last()?;
        Some(match (last.kind.stage(), self.gauged()) {
            (Stage::TwistorSymmetry, false) => EquationId::Twistor,
            (Stage::TwistorSymmetry, true) => EquationId::GaugedTwistor,
            (_, false) => EquationId::Harmonic,
            (_, true) => EquationId::GaugedHarmonic,
        })
    }

    /// Derivative orders of the input consumed by the stages.
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn apply_unchecked(&self, ctx: &Gauged, psi: &SpinorField) -> Result<SpinorField> {
        let mut out = psi.clone();
        for s in &self.stages {
            out = s.apply_unchecked(ctx, &out)?;
        }
        Ok(out)
    }

    /// Checks the input equation and every ingredient at `points`, then composes.
    pub fn apply(&self, ctx: &Gauged, psi: &SpinorField, points: &[Point], tol: f64) -> Result<SpinorField> {
        if let Some(id) = self.input_equation() {
            require(id, ctx, &psi.clone().into(), &ResidualArgs::default(), points, tol)?;
        }
        for s in &self.stages {
            s.check(ctx, points, tol)?;
        }
        self.apply_unchecked(ctx, psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Polynomial;
    use crate::geometry::Geometry;

    #[test]
    fn names_round_trip() {
        for id in EquationId::ALL {
            assert_eq!(id.name().parse::<EquationId>().unwrap(), id);
        }
        for k in OperatorKind::ALL {
            assert_eq!(k.name().parse::<OperatorKind>().unwrap(), k);
        }
        assert!("NOPE".parse::<EquationId>().is_err());
    }

    #[test]
    fn rotation_is_cky() {
        let sig = Signature::euclidean(3);
        let ctx = Gauged::ungauged(Geometry::flat(sig));
        let w = FormField::polynomial(
            sig,
            vec![
                (vec![1], Polynomial::coordinate(3, 0)),
                (vec![0], Polynomial::from_terms(3, &[(-1.0, &[0, 1, 0])]).unwrap()),
            ],
        )
        .unwrap();
        let pts = [Point::new(vec![0.2, -0.4, 0.7])];
        let r = max_residual(EquationId::Cky, &ctx, &w.into(), &ResidualArgs::default(), &pts).unwrap();
        assert!(r < 1e-14, "{r:e}");
    }

    #[test]
    fn pipeline_order_is_enforced() {
        let sig = Signature::euclidean(3);
        let one = FormField::constant(Multivector::scalar(sig, 1.0));
        let e1 = FormField::constant(Multivector::basis(sig, 0));
        let lf = OperatorSpec::new(OperatorKind::LF, one).unwrap();
        let lw = OperatorSpec::new(OperatorKind::LOmega, e1.clone()).unwrap();
        let hat = OperatorSpec::new(OperatorKind::HatLOmega, e1).unwrap();
        assert!(Pipeline::new(vec![lw.clone(), lf.clone()]).is_ok());
        assert!(matches!(Pipeline::new(vec![lf.clone(), lw.clone()]), Err(Error::InvalidPipeline(_))));
        assert!(matches!(Pipeline::new(vec![lf.clone(), lf]), Err(Error::InvalidPipeline(_))));
        assert!(matches!(Pipeline::new(vec![hat, lw]), Err(Error::InvalidPipeline(_))));
        assert_eq!(Pipeline::new(vec![]).unwrap().output_equation(), None);
    }

    #[test]
    fn singular_degrees_are_reported() {
        assert!(matches!(potential_coefficients(4, 1), Err(Error::Singular(_))));
        assert!(matches!(potential_coefficients(4, 3), Err(Error::Singular(_))));
        assert!(matches!(potential_coefficients(2, 0), Err(Error::Singular(_))));
        assert!(potential_coefficients(4, 2).is_ok());
    }
}
