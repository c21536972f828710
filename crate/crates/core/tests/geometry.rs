use spinorcalc::fields::{Monomial, Polynomial};
use spinorcalc::{FormField, Geometry, Multivector, Point, Signature, SpinorField, Spinor, GammaRep, C64};

fn random_one_form(sig: Signature, seed: u64) -> FormField {
    let n = sig.dim();
    let mut terms = Vec::new();
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 33) % 7) as f64 - 3.0
    };
    for a in 0..n {
        let mut monos = vec![Monomial::new(next(), vec![0; n])];
        for b in 0..n {
            let mut p = vec![0u8; n];
            p[b] = 1;
            monos.push(Monomial::new(next(), p.clone()));
            p[(b + 1) % n] += 1;
            monos.push(Monomial::new(next() / 2.0, p));
        }
        terms.push((vec![a], Polynomial::new(n, monos).unwrap()));
    }
    FormField::polynomial(sig, terms).unwrap()
}

#[test]
fn constant_curvature_certifies() {
    for (sig, k) in [
        (Signature::euclidean(3), 1.0),
        (Signature::euclidean(4), -1.0),
        (Signature::euclidean(5), 0.7),
        (Signature::lorentzian(4), 1.0),
        (Signature::euclidean(2), 2.0),
    ] {
        let g = Geometry::constant_curvature(sig, k);
        let cert = g.certify(20, 3).unwrap();
        for c in &cert.checks {
            assert!(c.passed(), "{sig:?} k={k}: {} = {:e}", c.name, c.max_residual);
        }
    }
}

#[test]
fn flat_certifies() {
    let cert = Geometry::flat(Signature::euclidean(4)).certify(10, 1).unwrap();
    assert!(cert.passed());
    assert_eq!(cert.rejected, 0);
}

#[test]
fn weitzenbock_curved_one_form() {
    let sig = Signature::euclidean(3);
    let g = Geometry::constant_curvature(sig, 1.0);
    let f = random_one_form(sig, 11);
    let r = g.weitzenbock_residual(&f).unwrap();
    for p in g.sample_points(5, 2).unwrap().points {
        let v = r.value(&p).unwrap().norm();
        assert!(v < 1e-8, "{v:e}");
    }
}

#[test]
fn spinor_curvature_identity() {
    let sig = Signature::euclidean(4);
    let g = Geometry::constant_curvature(sig, 1.0);
    let rep = GammaRep::new(sig);
    let psi = SpinorField::coordinate_spinor(rep.clone(), Spinor::basis(4, 0), Spinor::basis(4, 2)).unwrap();
    let p = Point::new(vec![0.3, -0.4, 0.2, 0.5]);
    for (a, b) in [(0, 1), (1, 3)] {
        let lhs = g.spinor_curvature_commutator(&psi, a, b).unwrap().value(&p).unwrap();
        let rhs = g.spinor_curvature_action(&psi, a, b).unwrap().value(&p).unwrap();
        let diff = (&lhs - &rhs).norm();
        let sum = (&lhs + &rhs).norm();
        assert!(diff < 1e-8, "diff {diff:e} sum {sum:e}");
    }
    let l = g.lichnerowicz_residual(&psi).unwrap().value(&p).unwrap().norm();
    assert!(l < 1e-8, "{l:e}");
    let _ = (Multivector::zero(sig), C64::new(0.0, 0.0));
}
