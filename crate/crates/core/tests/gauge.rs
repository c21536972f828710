mod common;

use common::*;
use spinorcalc::{FormField, Gauge, Gauged, Geometry, Point, Signature, SpinorField};

fn form_gap(a: &FormField, b: &FormField, pts: &[Point]) -> f64 {
    pts.iter()
        .map(|p| (&a.value(p).unwrap() - &b.value(p).unwrap()).norm())
        .fold(0.0, f64::max)
}

fn form_norm(a: &FormField, pts: &[Point]) -> f64 {
    pts.iter().map(|p| a.value(p).unwrap().norm()).fold(0.0, f64::max)
}

/// `A = x1 e2 - 0.4 x3² e1 + 0.3 x1x2 e3`, with nonconstant `F`.
fn polynomial_potential(sig: Signature) -> FormField {
    let n = sig.dim();
    form(
        sig,
        vec![
            (vec![1], coord(n, 0)),
            (vec![0], poly(n, &[(-0.4, &pw(n, &[2, 2]))])),
            (vec![2], poly(n, &[(0.3, &pw(n, &[0, 1]))])),
        ],
    )
}

fn test_forms(sig: Signature) -> Vec<FormField> {
    let n = sig.dim();
    vec![
        FormField::scalar_polynomial(sig, poly(n, &[(1.0, &pw(n, &[0, 1])), (0.5, &pw(n, &[2]))])).unwrap(),
        form(sig, vec![(vec![0], poly(n, &[(1.0, &pw(n, &[1, 1]))])), (vec![2], coord(n, 0))]),
        form(sig, vec![(vec![0, 1], coord(n, 2)), (vec![1, 2], poly(n, &[(2.0, &pw(n, &[0, 0]))]))]),
        constant_form(sig, &[(&[0, 1, 2], 1.0)]),
    ]
}

fn contexts(imaginary: bool) -> Vec<Gauged> {
    let mut out = Vec::new();
    for geom in [
        Geometry::flat(Signature::euclidean(4)),
        Geometry::flat(Signature::euclidean(3)),
        Geometry::flat(Signature::lorentzian(4)),
        Geometry::constant_curvature(Signature::euclidean(4), 0.9),
    ] {
        let a = polynomial_potential(geom.sig());
        out.push(Gauged::new(geom, Some(Gauge::new(a, imaginary).unwrap())));
    }
    out
}

#[test]
fn field_strength_is_nonzero_and_closed() {
    for ctx in contexts(false) {
        let pts = points(&ctx.geom, 4, 1);
        let f = ctx.gauge.as_ref().unwrap().field_strength(&ctx.geom).unwrap();
        assert!(form_norm(&f, &pts) > 0.1);
        assert!(form_norm(&ctx.geom.d(&f).unwrap(), &pts) < 1e-10);
    }
}

#[test]
fn shifted_operators_match_connection_forms() {
    for imaginary in [false, true] {
        for ctx in contexts(imaginary) {
            let pts = points(&ctx.geom, 4, 2);
            for f in test_forms(ctx.geom.sig()) {
                for charge in [1, 2] {
                    let f = f.clone().with_charge(charge);
                    assert!(form_gap(&ctx.d(&f).unwrap(), &ctx.d_shifted(&f).unwrap(), &pts) < 1e-10);
                    assert!(form_gap(&ctx.delta(&f).unwrap(), &ctx.delta_shifted(&f).unwrap(), &pts) < 1e-10);
                    let dd = ctx.hodge_de_rham(&f).unwrap();
                    assert!(form_gap(&dd, &ctx.hodge_de_rham_shifted(&f).unwrap(), &pts) < 1e-10);
                    let split = ctx.d(&f).unwrap().sub(&ctx.delta(&f).unwrap()).unwrap();
                    assert!(form_gap(&dd, &split, &pts) < 1e-10);
                }
            }
        }
    }
}

#[test]
fn squares_of_gauged_operators() {
    for imaginary in [false, true] {
        for ctx in contexts(imaginary) {
            let pts = points(&ctx.geom, 4, 3);
            for f in test_forms(ctx.geom.sig()) {
                let f = f.with_charge(1);
                assert!(form_norm(&ctx.d_squared_residual(&f).unwrap(), &pts) < 1e-9);
                assert!(form_norm(&ctx.delta_squared_residual(&f).unwrap(), &pts) < 1e-9);
                if f.grade() >= Some(2) {
                    assert!(form_norm(&ctx.delta_squared_residual_unit_weight(&f).unwrap(), &pts) > 1e-3);
                }
                if f.grade() == Some(0) {
                    assert!(form_norm(&ctx.d(&ctx.d(&f).unwrap()).unwrap(), &pts) > 1e-3);
                }
            }
        }
    }
}

#[test]
fn gauged_curvature_on_forms() {
    for ctx in contexts(false) {
        let pts = points(&ctx.geom, 3, 4);
        let n = ctx.geom.dim();
        for f in test_forms(ctx.geom.sig()) {
            let f = f.with_charge(1);
            for a in 0..n {
                for b in 0..n {
                    let lhs = ctx.curvature_commutator(&f, a, b).unwrap();
                    let rhs = ctx.curvature_action(&f, a, b).unwrap();
                    assert!(form_gap(&lhs, &rhs, &pts) < 1e-9, "{a}{b}");
                }
            }
        }
    }
}

#[test]
fn delta_square_on_a_two_form() {
    let sig = Signature::euclidean(2);
    let ctx = Gauged::new(
        Geometry::flat(sig),
        Some(Gauge::new(form(sig, vec![(vec![1], coord(2, 0))]), false).unwrap()),
    );
    let e12 = constant_form(sig, &[(&[0, 1], 1.0)]).with_charge(1);
    let p = Point::new(vec![0.3, -0.2]);
    let sq = ctx.delta(&ctx.delta(&e12).unwrap()).unwrap().value(&p).unwrap();
    assert!((sq.coeff(0).re + 1.0).abs() < 1e-13);
    let unit = ctx.delta_squared_residual_unit_weight(&e12).unwrap().value(&p).unwrap();
    assert!((unit.coeff(0).re - 1.0).abs() < 1e-13);
}

#[test]
fn constant_field_strength_on_scalars() {
    let sig = Signature::euclidean(3);
    let ctx = Gauged::new(
        Geometry::flat(sig),
        Some(Gauge::new(form(sig, vec![(vec![1], coord(3, 0))]), false).unwrap()),
    );
    let s = FormField::scalar_polynomial(sig, poly(3, &[(1.0, &pw(3, &[]))])).unwrap().with_charge(1);
    let p = Point::new(vec![0.2, -0.1, 0.3]);
    // F = e12, i_{X_1} i_{X_2} F = -1 so the commutator is +1
    let c = ctx.curvature_commutator(&s, 0, 1).unwrap().value(&p).unwrap();
    assert!((c.coeff(0).re - 1.0).abs() < 1e-12);
    let c = ctx.curvature_commutator(&s, 1, 0).unwrap().value(&p).unwrap();
    assert!((c.coeff(0).re + 1.0).abs() < 1e-12);
}

#[test]
fn gauged_curvature_and_lichnerowicz_on_spinors() {
    for imaginary in [false, true] {
        for ctx in contexts(imaginary) {
            let pts = points(&ctx.geom, 3, 5);
            let n = ctx.geom.dim();
            let psi = flat_twistor(ctx.geom.sig(), 4)
                .times_scalar(&FormField::scalar_polynomial(ctx.geom.sig(), poly(n, &[(1.0, &pw(n, &[])), (0.5, &pw(n, &[1, 2]))])).unwrap())
                .unwrap()
                .with_charge(1);
            for a in 0..n {
                for b in 0..n {
                    let lhs = ctx.spinor_curvature_commutator(&psi, a, b).unwrap();
                    let rhs = ctx.spinor_curvature_action(&psi, a, b).unwrap();
                    assert!(worst(&[lhs.sub(&rhs).unwrap()], &pts) < 1e-9);
                }
            }
            let r = worst(&[ctx.lichnerowicz_residual(&psi).unwrap()], &pts);
            assert!(r < 1e-9, "{:?}: {r:e}", ctx.geom);
            let shifted = ctx.dirac_shifted(&psi).unwrap();
            assert!(worst(&[ctx.dirac(&psi).unwrap().sub(&shifted).unwrap()], &pts) < 1e-10);
        }
    }
}

#[test]
fn dirac_gauge_covariance() {
    for imaginary in [false, true] {
        for ctx in contexts(imaginary) {
            let geom = ctx.geom;
            let sig = geom.sig();
            let pts = points(&geom, 4, 6);
            let chi = gauge_function(sig);
            let a = ctx.gauge.as_ref().unwrap().potential().clone();
            let moved = a.add(&geom.d(&chi).unwrap()).unwrap();
            let ctx2 = Gauged::new(geom, Some(Gauge::new(moved, imaginary).unwrap()));
            let psi = twistor(&geom, 2).with_charge(1);
            let psi2: SpinorField = psi.gauge_transformed(&chi, imaginary).unwrap().with_charge(1);
            let lhs = ctx2.dirac(&psi2).unwrap();
            let rhs = ctx.dirac(&psi).unwrap().gauge_transformed(&chi, imaginary).unwrap().with_charge(1);
            let r = worst(&[lhs.sub(&rhs).unwrap()], &pts);
            assert!(r < 1e-10, "{geom:?}: {r:e}");
            let f = test_forms(sig)[1].clone().with_charge(1);
            let f2 = f.gauge_transformed(&chi, imaginary).unwrap().with_charge(1);
            let lhs = ctx2.d(&f2).unwrap();
            let rhs = ctx.d(&f).unwrap().gauge_transformed(&chi, imaginary).unwrap();
            assert!(form_gap(&lhs, &rhs, &pts) < 1e-10);
        }
    }
}
