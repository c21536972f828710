use std::collections::BTreeMap;
use std::fmt;

use spinorcalc::fields::{Monomial, Polynomial};
use spinorcalc::operators::{residual, sweep, OperatorKind, OperatorSpec, Pipeline, ResidualArgs, PRECONDITION_TOL};
use spinorcalc::seiberg_witten::{evaluate_candidate, ORIENTATION};
use spinorcalc::{
    C64, DualPairing, EquationId, Error, Field, FormField, GammaRep, Gauge, Gauged, Geometry, Point, Signature,
    Spinor, SpinorField,
};

use crate::report::{CertificationLine, CertificationReport, CheckReport, Report, SwCheckReport, Verdict};
use crate::scenario::*;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Precondition(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema(m) => write!(f, "scenario error: {m}"),
            Failure::Precondition(m) => write!(f, "precondition failed: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition { .. } => Failure::Precondition(e.to_string()),
            Error::Singular(_) | Error::OutsideChart { .. } | Error::DivisionByZero => Failure::Numerical(e.to_string()),
            _ => Failure::Schema(e.to_string()),
        }
    }
}

fn schema(msg: impl Into<String>) -> Failure {
    Failure::Schema(msg.into())
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Clone, Copy, Debug)]
pub struct Overrides {
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance_scale: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            points: None,
            seed: None,
            tolerance_scale: 1.0,
        }
    }
}

pub fn parse_scenario(text: &str) -> Res<Scenario> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    if s.schema_version != SCHEMA_VERSION {
        return Err(schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            s.schema_version
        )));
    }
    Ok(s)
}

fn geometry(signature: &[i8], spec: GeometrySpec) -> Res<Geometry> {
    let sig = Signature::new(signature)?;
    Ok(match spec {
        GeometrySpec::Flat => Geometry::flat(sig),
        GeometrySpec::ConstantCurvature(k) => Geometry::constant_curvature(sig, k),
    })
}

fn geometry_label(spec: GeometrySpec) -> String {
    match spec {
        GeometrySpec::Flat => "flat".into(),
        GeometrySpec::ConstantCurvature(k) => format!("constant-curvature {k}"),
    }
}

fn polynomial(n: usize, spec: &PolySpec) -> Res<Polynomial> {
    let terms = spec
        .iter()
        .map(|(c, powers)| {
            if powers.len() != n {
                return Err(schema(format!("monomial {powers:?} needs {n} powers")));
            }
            Ok(Monomial::new(*c, powers.clone()))
        })
        .collect::<Res<Vec<_>>>()?;
    Ok(Polynomial::new(n, terms)?)
}

fn form(sig: Signature, components: &[ComponentSpec]) -> Res<FormField> {
    let n = sig.dim();
    let mut terms = Vec::new();
    for c in components {
        let idx = c
            .blade
            .iter()
            .map(|&i| {
                if i == 0 || i > n {
                    Err(schema(format!("blade index {i} outside 1..={n}")))
                } else {
                    Ok(i - 1)
                }
            })
            .collect::<Res<Vec<_>>>()?;
        terms.push((idx, polynomial(n, &c.poly)?));
    }
    if terms.is_empty() {
        return Ok(FormField::zero(sig));
    }
    Ok(FormField::polynomial(sig, terms)?)
}

fn spinor(values: &[ComplexSpec]) -> Spinor {
    Spinor(values.iter().map(|[re, im]| C64::new(*re, *im)).collect())
}

struct Env {
    geom: Geometry,
    ctx: Gauged,
    chi: Option<(FormField, bool)>,
    fields: BTreeMap<String, Field>,
}

fn build_gauge(geom: &Geometry, spec: &GaugeSpec) -> Res<(Option<Gauge>, Option<(FormField, bool)>, String)> {
    let sig = geom.sig();
    Ok(match spec {
        GaugeSpec::Absent | GaugeSpec::Keyword(GaugeKeyword::None) => (None, None, "none".into()),
        GaugeSpec::Potential(PotentialSpec::Exact { chi, imaginary }) => {
            let chi = FormField::scalar_polynomial(sig, polynomial(sig.dim(), chi)?)?;
            let g = Gauge::exact(geom, &chi, *imaginary)?;
            (Some(g), Some((chi, *imaginary)), format!("exact{}", if *imaginary { " imaginary" } else { "" }))
        }
        GaugeSpec::Potential(PotentialSpec::Polynomial1Form { components, imaginary }) => {
            if components.iter().any(|c| c.blade.len() != 1) {
                return Err(schema("gauge potential components must be 1-form blades"));
            }
            let a = form(sig, components)?;
            (
                Some(Gauge::new(a, *imaginary)?),
                None,
                format!("polynomial-1form{}", if *imaginary { " imaginary" } else { "" }),
            )
        }
    })
}

fn build_field(env: &Env, name: &str, spec: &FieldSpec) -> Res<Field> {
    let sig = env.geom.sig();
    let n = sig.dim();
    let rep = GammaRep::new(sig);
    let d = rep.spinor_dim();
    let check_dim = |v: &[ComplexSpec]| {
        if v.len() != d {
            Err(schema(format!("field {name:?}: spinors have {d} components here, got {}", v.len())))
        } else {
            Ok(())
        }
    };
    let (field, power, gauged, charge): (Field, _, _, _) = match spec {
        FieldSpec::PolynomialForm {
            components,
            conformal_power,
            gauged,
            charge,
        } => (form(sig, components)?.into(), *conformal_power, *gauged, *charge),
        FieldSpec::CoordinateSpinor {
            phi0,
            phi1,
            conformal_power,
            gauged,
            charge,
        } => {
            check_dim(phi0)?;
            check_dim(phi1)?;
            let f = SpinorField::coordinate_spinor(rep, spinor(phi0), spinor(phi1))?;
            (f.into(), *conformal_power, *gauged, *charge)
        }
        FieldSpec::ConstantSpinor {
            phi,
            conformal_power,
            gauged,
            charge,
        } => {
            check_dim(phi)?;
            (SpinorField::constant(rep, spinor(phi))?.into(), *conformal_power, *gauged, *charge)
        }
        FieldSpec::PolynomialSpinor {
            components,
            conformal_power,
            gauged,
            charge,
        } => {
            if components.len() != d {
                return Err(schema(format!("field {name:?}: spinors have {d} components here")));
            }
            let polys = components.iter().map(|p| polynomial(n, p)).collect::<Res<Vec<_>>>()?;
            (SpinorField::polynomial(rep, polys)?.into(), *conformal_power, *gauged, *charge)
        }
    };
    let mut field = match power {
        Some(r) if r != 0.0 => {
            let h = env.geom.conformal_power_field(r);
            match field {
                Field::Form(f) => f.times_scalar(&h)?.into(),
                Field::Spinor(s) => s.times_scalar(&h)?.into(),
            }
        }
        _ => field,
    };
    if gauged {
        let (chi, imaginary) = env
            .chi
            .as_ref()
            .ok_or_else(|| schema(format!("field {name:?} is gauged but the scenario gauge is not exact")))?;
        field = match field {
            Field::Form(f) => f.gauge_transformed(chi, *imaginary)?.into(),
            Field::Spinor(s) => s.gauge_transformed(chi, *imaginary)?.into(),
        };
    }
    if let Some(q) = charge {
        field = match field {
            Field::Form(f) => f.with_charge(q).into(),
            Field::Spinor(s) => s.with_charge(q).into(),
        };
    }
    Ok(field)
}

impl Env {
    fn get(&self, name: &str) -> Res<&Field> {
        self.fields.get(name).ok_or_else(|| schema(format!("unknown field {name:?}")))
    }

    fn form(&self, name: &str) -> Res<FormField> {
        match self.get(name)? {
            Field::Form(f) => Ok(f.clone()),
            Field::Spinor(_) => Err(schema(format!("field {name:?} is a spinor, expected a form"))),
        }
    }

    fn spinor(&self, name: &str) -> Res<SpinorField> {
        match self.get(name)? {
            Field::Spinor(s) => Ok(s.clone()),
            Field::Form(_) => Err(schema(format!("field {name:?} is a form, expected a spinor"))),
        }
    }

    fn pipeline(&self, stages: &[StageSpec]) -> Res<Pipeline> {
        let specs = stages
            .iter()
            .map(|s| {
                let kind: OperatorKind = s.op.parse()?;
                let mut spec = OperatorSpec::new(kind, self.form(&s.ingredient)?)?;
                if let Some(g) = s.gamma {
                    spec = spec.with_gamma(g);
                }
                Ok(spec)
            })
            .collect::<Res<Vec<_>>>()?;
        Ok(Pipeline::new(specs)?)
    }
}

fn stage_names(p: &Pipeline) -> Vec<String> {
    p.stages().iter().map(|s| s.kind().name().to_string()).collect()
}

fn run_check(env: &Env, check: &CheckSpec, points: &[Point], scale: f64) -> Res<CheckReport> {
    let tol = check.tolerance * scale;
    let args = ResidualArgs {
        mass: check.mass.unwrap_or(0.0),
        gamma: check.gamma.unwrap_or(0.0),
        omega: check.omega.as_deref().map(|n| env.form(n)).transpose()?,
    };
    let (equation, subject, stages) = match (&check.pipeline, &check.field) {
        (Some(stages), None) => {
            let input = check
                .input
                .as_deref()
                .ok_or_else(|| schema(format!("check {:?}: a pipeline needs an input", check.name)))?;
            let psi = env.spinor(input)?;
            let pipeline = env.pipeline(stages)?;
            let eq = match &check.equation {
                Some(e) => e.parse()?,
                None => pipeline
                    .output_equation()
                    .or(pipeline.input_equation())
                    .unwrap_or(if env.ctx.gauge.is_some() {
                        EquationId::GaugedTwistor
                    } else {
                        EquationId::Twistor
                    }),
            };
            let out = pipeline.apply(&env.ctx, &psi, points, PRECONDITION_TOL * scale)?;
            (eq, Field::from(out), stage_names(&pipeline))
        }
        (None, Some(field)) => {
            if check.input.is_some() {
                return Err(schema(format!("check {:?}: input is only for pipelines", check.name)));
            }
            let eq: EquationId = check
                .equation
                .as_deref()
                .ok_or_else(|| schema(format!("check {:?} needs an equation", check.name)))?
                .parse()?;
            (eq, env.get(field)?.clone(), vec![])
        }
        _ => {
            return Err(schema(format!(
                "check {:?} needs exactly one of field or pipeline",
                check.name
            )))
        }
    };
    let sw = sweep(&residual(equation, &env.ctx, &subject, &args)?, points)?;
    Ok(CheckReport {
        name: check.name.clone(),
        equation: equation.name().to_string(),
        stages,
        verdict: Verdict::of(sw.max, tol),
        per_point: sw.per_point,
        max_norm: sw.max,
        tolerance: tol,
    })
}

fn orientation_label() -> String {
    let idx: String = (0..4)
        .filter(|a| ORIENTATION & (1 << a) != 0)
        .map(|a| char::from(b'1' + a as u8))
        .collect();
    format!("e{idx}")
}

/// Candidates are findings rather than checks: a nonvanishing current says
/// the candidate is not a solution, and does not fail the run.
fn run_sw(env: &Env, spec: &SwSpec, seed: u64, default_points: &[Point], scale: f64) -> Res<SwCheckReport> {
    let tol = spec.tolerance * scale;
    let owned;
    let points = match spec.points {
        Some(count) => {
            owned = env.geom.sample_points(count, seed)?.points;
            &owned[..]
        }
        None => default_points,
    };
    let psi = env.spinor(&spec.input)?;
    let pipeline = env.pipeline(&spec.candidate)?;
    let candidate = pipeline.apply(&env.ctx, &psi, points, PRECONDITION_TOL * scale)?;
    let pairing = DualPairing::hermitian(psi.rep().spinor_dim());
    let r = evaluate_candidate(&env.ctx, &candidate, &pairing, points, tol)?;
    Ok(SwCheckReport {
        name: spec.name.clone(),
        orientation: orientation_label(),
        stages: stage_names(&pipeline),
        current_vanishes: r.current.pass,
        solution: r.is_solution(),
        current_per_point: r.current.per_point,
        current_max: r.current.max_norm,
        dirac_max: r.dirac_norm,
        curvature_max: r.curvature_norm,
        self_dual_max: r.self_dual_norm,
        tolerance: tol,
    })
}

pub fn certification(geom: &Geometry, count: usize, seed: u64) -> Res<CertificationReport> {
    let c = geom.certify(count, seed)?;
    Ok(CertificationReport {
        passed: c.passed(),
        points: c.points,
        rejected_points: c.rejected,
        checks: c
            .checks
            .iter()
            .map(|k| CertificationLine {
                name: k.name.clone(),
                max_residual: k.max_residual,
                tolerance: k.tolerance,
                verdict: Verdict::of(k.max_residual, k.tolerance),
            })
            .collect(),
    })
}

pub fn run(s: &Scenario, o: Overrides) -> Res<Report> {
    if !(o.tolerance_scale > 0.0 && o.tolerance_scale.is_finite()) {
        return Err(schema("tolerance scale must be positive"));
    }
    let geom = geometry(&s.signature, s.geometry)?;
    let count = o.points.unwrap_or(s.points.count);
    let seed = o.seed.unwrap_or(s.points.seed);
    let samples = geom.sample_points(count, seed)?;
    let (gauge, chi, gauge_label) = build_gauge(&geom, &s.gauge)?;
    let mut env = Env {
        geom,
        ctx: Gauged::new(geom, gauge),
        chi,
        fields: BTreeMap::new(),
    };
    for (name, spec) in &s.fields {
        let f = build_field(&env, name, spec)?;
        env.fields.insert(name.clone(), f);
    }
    let cert = certification(&geom, count, seed)?;
    let checks = s
        .checks
        .iter()
        .map(|c| run_check(&env, c, &samples.points, o.tolerance_scale))
        .collect::<Res<Vec<_>>>()?;
    let sw = s
        .sw
        .iter()
        .map(|c| run_sw(&env, c, seed, &samples.points, o.tolerance_scale))
        .collect::<Res<Vec<_>>>()?;
    let passed = cert.passed && checks.iter().all(|c| c.verdict == Verdict::Pass);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        description: s.description.clone(),
        signature: s.signature.clone(),
        geometry: geometry_label(s.geometry),
        gauge: gauge_label,
        seed,
        points: count,
        rejected_points: samples.rejected,
        tolerance_scale: o.tolerance_scale,
        certification: cert,
        checks,
        sw,
        passed,
    })
}

pub fn parse_backend(text: &str) -> Res<(Geometry, GeometrySpec, PointsSpec)> {
    if let Ok(b) = serde_json::from_str::<BackendFile>(text) {
        if b.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", b.schema_version)));
        }
        return Ok((geometry(&b.signature, b.geometry)?, b.geometry, b.points));
    }
    let s = parse_scenario(text)?;
    Ok((geometry(&s.signature, s.geometry)?, s.geometry, s.points))
}
