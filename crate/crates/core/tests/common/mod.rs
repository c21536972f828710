#![allow(dead_code)]

use spinorcalc::fields::Polynomial;
use spinorcalc::operators::{max_residual, ResidualArgs};
use spinorcalc::{
    C64, EquationId, Field, FormField, GammaRep, Gauged, Geometry, Multivector, Point, Signature, Spinor,
    SpinorField,
};

pub fn spinor(dim: usize, seed: u64) -> Spinor {
    Spinor(
        (0..dim)
            .map(|i| {
                let t = (seed * 31 + i as u64 * 17 + 1) as f64;
                C64::new((t * 0.37).sin(), (t * 0.91).cos())
            })
            .collect(),
    )
}

/// `φ0 + x·φ1`.
pub fn flat_twistor(sig: Signature, seed: u64) -> SpinorField {
    let rep = GammaRep::new(sig);
    let d = rep.spinor_dim();
    SpinorField::coordinate_spinor(rep, spinor(d, seed), spinor(d, seed + 100)).unwrap()
}

/// Twistor spinor of the backend: `h^{-1/2}` times a flat one.
pub fn twistor(geom: &Geometry, seed: u64) -> SpinorField {
    let psi = flat_twistor(geom.sig(), seed);
    if geom.curvature_constant() == 0.0 {
        psi
    } else {
        psi.times_scalar(&geom.conformal_power_field(-0.5)).unwrap()
    }
}

pub fn constant_spinor(sig: Signature, seed: u64) -> SpinorField {
    let rep = GammaRep::new(sig);
    let d = rep.spinor_dim();
    SpinorField::constant(rep, spinor(d, seed)).unwrap()
}

pub fn poly(n: usize, terms: &[(f64, &[u8])]) -> Polynomial {
    Polynomial::from_terms(n, terms).unwrap()
}

/// Monomial powers with a single variable raised.
pub fn pw(n: usize, idx: &[usize]) -> Vec<u8> {
    let mut v = vec![0u8; n];
    for &i in idx {
        v[i] += 1;
    }
    v
}

pub fn coord(n: usize, a: usize) -> Polynomial {
    Polynomial::coordinate(n, a)
}

pub fn form(sig: Signature, terms: Vec<(Vec<usize>, Polynomial)>) -> FormField {
    FormField::polynomial(sig, terms).unwrap()
}

pub fn constant_form(sig: Signature, blades: &[(&[usize], f64)]) -> FormField {
    let mut m = Multivector::zero(sig);
    for (idx, c) in blades {
        m += &Multivector::from_indices(sig, idx).unwrap().scale(*c);
    }
    FormField::constant(m)
}

/// Named flat-space CKY forms of every degree `1..n`.
pub fn flat_cky_basis(sig: Signature) -> Vec<(String, FormField)> {
    let n = sig.dim();
    let eta = |a: usize| sig.metric(a);
    let mut out = Vec::new();
    out.push(("const e1".into(), constant_form(sig, &[(&[0], 1.0)])));
    out.push(("const e12+0.5e23".into(), constant_form(sig, &[(&[0, 1], 1.0), (&[1, 2], 0.5)])));
    out.push(("const e123".into(), constant_form(sig, &[(&[0, 1, 2], 1.0)])));
    // rotation x_1 e_2 - x_2 e_1 as a 1-form with lowered index
    out.push((
        "rotation 12".into(),
        form(
            sig,
            vec![
                (vec![1], poly(n, &[(eta(0) * eta(1), &pw(n, &[0]))])),
                (vec![0], poly(n, &[(-eta(0) * eta(1), &pw(n, &[1]))])),
            ],
        ),
    ));
    // dilation x̃ = η_aa x_a e^a
    out.push((
        "dilation".into(),
        form(sig, (0..n).map(|a| (vec![a], poly(n, &[(eta(a), &pw(n, &[a]))]))).collect()),
    ));
    // special conformal 2(b·x)x̃ - (x·x) b̃ with b = X_1
    let mut terms = Vec::new();
    for a in 0..n {
        let mut t: Vec<(f64, Vec<u8>)> = vec![(2.0 * eta(0) * eta(a), pw(n, &[0, a]))];
        if a == 0 {
            for c in 0..n {
                t.push((-eta(c) * eta(0), pw(n, &[c, c])));
            }
        }
        let refs: Vec<(f64, &[u8])> = t.iter().map(|(c, p)| (*c, p.as_slice())).collect();
        terms.push((vec![a], poly(n, &refs)));
    }
    out.push(("special conformal".into(), form(sig, terms)));
    // x̃ ∧ e2
    out.push((
        "dilation ∧ e2".into(),
        form(
            sig,
            (0..n)
                .filter(|&a| a != 1)
                .map(|a| (vec![a, 1], poly(n, &[(eta(a), &pw(n, &[a]))])))
                .collect(),
        ),
    ));
    // i_x e123
    out.push((
        "i_x e123".into(),
        form(
            sig,
            vec![
                (vec![1, 2], coord(n, 0)),
                (vec![0, 2], poly(n, &[(-1.0, &pw(n, &[1]))])),
                (vec![0, 1], coord(n, 2)),
            ],
        ),
    ));
    out
}

/// Harmonic polynomials in `n >= 3` variables (Euclidean signature).
pub fn harmonic_functions(sig: Signature) -> Vec<(String, FormField)> {
    let n = sig.dim();
    let fs: Vec<(&str, Polynomial)> = vec![
        ("1", poly(n, &[(1.0, &pw(n, &[]))])),
        ("x1", coord(n, 0)),
        ("x1 x2", poly(n, &[(1.0, &pw(n, &[0, 1]))])),
        ("x1²-x2²", poly(n, &[(1.0, &pw(n, &[0, 0])), (-1.0, &pw(n, &[1, 1]))])),
        ("x1 x2 x3", poly(n, &[(1.0, &pw(n, &[0, 1, 2]))])),
        ("x1³-3x1x2²", poly(n, &[(1.0, &pw(n, &[0, 0, 0])), (-3.0, &pw(n, &[0, 1, 1]))])),
    ];
    fs.into_iter()
        .map(|(name, p)| (name.to_string(), FormField::scalar_polynomial(sig, p).unwrap()))
        .collect()
}

/// Closed and coclosed flat forms: harmonic potentials of every supported degree.
pub fn flat_potential_forms(sig: Signature) -> Vec<(String, FormField)> {
    let n = sig.dim();
    let mut out = harmonic_functions(sig);
    let ok = |p: usize| n != 2 * (p + 1) && n + 2 != 2 * p;
    if ok(1) {
        out.push(("const e2".into(), constant_form(sig, &[(&[1], 1.0)])));
        out.push((
            "d(x1 x2)".into(),
            form(sig, vec![(vec![0], coord(n, 1)), (vec![1], coord(n, 0))]),
        ));
    }
    if n >= 4 && ok(2) {
        out.push(("const e12+e34".into(), constant_form(sig, &[(&[0, 1], 1.0), (&[2, 3], 1.0)])));
        out.push((
            "x2 e13 + x1 e23".into(),
            form(sig, vec![(vec![0, 2], coord(n, 1)), (vec![1, 2], coord(n, 0))]),
        ));
    }
    out
}

/// Frame components of a flat-space form times `h^r`.
pub fn rescaled(geom: &Geometry, f: &FormField, r: f64) -> FormField {
    if geom.curvature_constant() == 0.0 || r == 0.0 {
        f.clone()
    } else {
        f.times_scalar(&geom.conformal_power_field(r)).unwrap()
    }
}

/// CKY forms of the backend from flat ones.
pub fn cky_on(geom: &Geometry, f: &FormField) -> FormField {
    rescaled(geom, f, -1.0)
}

/// Harmonic middle forms of the backend from flat ones.
pub fn middle_on(geom: &Geometry, f: &FormField) -> FormField {
    rescaled(geom, f, geom.dim() as f64 / 2.0)
}

/// Potential forms of the backend from flat ones.
pub fn potential_on(geom: &Geometry, f: &FormField) -> FormField {
    rescaled(geom, f, geom.dim() as f64 / 2.0 - 1.0)
}

pub fn worst(fields: &[SpinorField], pts: &[Point]) -> f64 {
    let mut m = 0.0f64;
    for f in fields {
        for p in pts {
            m = m.max(f.value(p).unwrap().norm());
        }
    }
    m
}

pub fn res(id: EquationId, ctx: &Gauged, f: impl Into<Field>, pts: &[Point]) -> f64 {
    max_residual(id, ctx, &f.into(), &ResidualArgs::default(), pts).unwrap()
}

pub fn points(geom: &Geometry, count: usize, seed: u64) -> Vec<Point> {
    geom.sample_points(count, seed).unwrap().points
}

/// `χ` for flat gauge connections `A = dχ`.
pub fn gauge_function(sig: Signature) -> FormField {
    let n = sig.dim();
    FormField::scalar_polynomial(
        sig,
        poly(n, &[(0.5, &pw(n, &[0, 1])), (-0.3, &pw(n, &[2, 2])), (0.2, &pw(n, &[n - 1]))]),
    )
    .unwrap()
}
