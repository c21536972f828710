//! Seiberg–Witten residuals in Euclidean four dimensions.
//!
//! The orientation is fixed by the volume blade `e1234`; self-duality of `F`
//! flips with it.

use rayon::prelude::*;

use crate::algebra::{reorder_sign, Multivector, Signature};
use crate::error::{Error, Result};
use crate::fields::{Point, SpinorField};
use crate::gauge::Gauged;
use crate::operators::{OperatorKind, OperatorSpec, Pipeline};
use crate::spin::{DualPairing, GammaRep, Spinor};

/// Volume blade defining the orientation, as a bitmask.
pub const ORIENTATION: usize = 0b1111;

fn require_sw(sig: &Signature) -> Result<()> {
    if sig.dim() != 4 || !sig.is_euclidean() {
        return Err(Error::Unsupported(format!(
            "Seiberg–Witten residuals need Euclidean signature in four dimensions, got {sig:?}"
        )));
    }
    Ok(())
}

/// Hodge star with `α∧⋆β = ⟨α,β⟩ e1234`.
pub fn hodge_star(a: &Multivector) -> Result<Multivector> {
    require_sw(&a.sig())?;
    let mut out = Multivector::zero(a.sig());
    for (m, c) in a.terms() {
        let rest = ORIENTATION ^ m;
        out.set_coeff(rest, out.coeff(rest) + c * reorder_sign(m, rest));
    }
    Ok(out)
}

/// `½(F + ⋆F)`.
pub fn self_dual(f: &Multivector) -> Result<Multivector> {
    Ok((f + &hodge_star(f)?).scale(0.5))
}

/// `½(F - ⋆F)`.
pub fn anti_self_dual(f: &Multivector) -> Result<Multivector> {
    Ok((f - &hodge_star(f)?).scale(0.5))
}

/// `τ^ψ = (e_a·e_b·ψ, ψ) e^a∧e^b`, summed over all ordered pairs.
pub fn tau(rep: &GammaRep, pairing: &DualPairing, psi: &Spinor) -> Result<Multivector> {
    let sig = rep.sig();
    require_sw(&sig)?;
    rep.check(psi)?;
    let mut out = Multivector::zero(sig);
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let word = &(&Multivector::scalar(sig, 1.0) * &Multivector::basis_lower(sig, a))
                * &Multivector::basis_lower(sig, b);
            let wedge = Multivector::scalar(sig, 1.0)
                .wedge(&Multivector::basis(sig, a))?
                .wedge(&Multivector::basis(sig, b))?;
            let c = pairing.pair(&rep.act_unchecked(&word, psi), psi);
            out += &wedge.scale(c);
        }
    }
    Ok(out)
}

/// Pointwise residuals of the Seiberg–Witten system.
#[derive(Clone, Debug)]
pub struct SwResiduals {
    /// `D̂ψ`.
    pub dirac: Spinor,
    /// `F⁺ + ¼τ^ψ`.
    pub curvature: Multivector,
}

/// `F` is the curvature of the connection at unit charge, so the imaginary
/// toggle turns it into `iF`.
pub fn sw_residuals(ctx: &Gauged, psi: &SpinorField, pairing: &DualPairing, p: &Point) -> Result<SwResiduals> {
    require_sw(&ctx.geom.sig())?;
    let dirac = ctx.dirac(psi)?.value(p)?;
    let f = ctx.eff_field_strength(1)?.value(p)?;
    let t = tau(psi.rep(), pairing, &psi.value(p)?)?;
    Ok(SwResiduals {
        dirac,
        curvature: &self_dual(&f)? + &t.scale(0.25),
    })
}

#[derive(Clone, Debug)]
pub struct CurrentVerdict {
    pub per_point: Vec<f64>,
    pub max_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest 2-form current of `candidate` over `points`, judged against `tol`.
pub fn vanishing_current_check(
    candidate: &SpinorField,
    pairing: &DualPairing,
    points: &[Point],
    tol: f64,
) -> Result<CurrentVerdict> {
    require_sw(&candidate.sig())?;
    let per_point = points
        .par_iter()
        .map(|p| Ok(tau(candidate.rep(), pairing, &candidate.value(p)?)?.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let max_norm = per_point.iter().copied().fold(0.0, |m: f64, x| if x.is_nan() { x } else { m.max(x) });
    Ok(CurrentVerdict {
        pass: max_norm <= tol,
        per_point,
        max_norm,
        tolerance: tol,
    })
}

/// Candidate shapes built from a gauged twistor spinor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwShape {
    /// `L̂_α ψ`
    Alpha,
    /// `L̂_α L̂_ω ψ`
    AlphaOmega,
    /// `𝓛̂_ω' L̂_α ψ`
    OmegaPrimeAlpha,
    /// `𝓛̂_ω' L̂_α L̂_ω ψ`
    OmegaPrimeAlphaOmega,
}

impl SwShape {
    pub const ALL: [SwShape; 4] = [
        SwShape::Alpha,
        SwShape::AlphaOmega,
        SwShape::OmegaPrimeAlpha,
        SwShape::OmegaPrimeAlphaOmega,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SwShape::Alpha => "alpha",
            SwShape::AlphaOmega => "alpha-omega",
            SwShape::OmegaPrimeAlpha => "omega_prime-alpha",
            SwShape::OmegaPrimeAlphaOmega => "omega_prime-alpha-omega",
        }
    }

    /// Stages in application order (rightmost operator first).
    pub fn pipeline(&self, alpha: &OperatorSpec, omega: &OperatorSpec, omega_prime: &OperatorSpec) -> Result<Pipeline> {
        let want = [
            (alpha, OperatorKind::HatLAlpha, "alpha"),
            (omega, OperatorKind::HatLOmega, "omega"),
            (omega_prime, OperatorKind::HatScriptLOmega, "omega_prime"),
        ];
        for (spec, kind, name) in want {
            if spec.kind() != kind && !(kind == OperatorKind::HatLAlpha && spec.kind() == OperatorKind::HatLMiddle) {
                return Err(Error::InvalidPipeline(format!(
                    "{name} must be a {} stage, got {}",
                    kind.name(),
                    spec.kind().name()
                )));
            }
        }
        let stages = match self {
            SwShape::Alpha => vec![alpha.clone()],
            SwShape::AlphaOmega => vec![omega.clone(), alpha.clone()],
            SwShape::OmegaPrimeAlpha => vec![alpha.clone(), omega_prime.clone()],
            SwShape::OmegaPrimeAlphaOmega => vec![omega.clone(), alpha.clone(), omega_prime.clone()],
        };
        Pipeline::new(stages)
    }
}

impl std::str::FromStr for SwShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SwShape::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::MalformedSpec(format!("unknown candidate shape {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SwReport {
    /// Largest gauged Dirac residual of the candidate.
    pub dirac_norm: f64,
    /// Largest `|F⁺ + ¼τ|`.
    pub curvature_norm: f64,
    /// Largest `|F⁺|`.
    pub self_dual_norm: f64,
    pub current: CurrentVerdict,
}

impl SwReport {
    /// Both equations hold within the tolerance.
    pub fn is_solution(&self) -> bool {
        self.dirac_norm <= self.current.tolerance && self.curvature_norm <= self.current.tolerance
    }
}

/// Runs a candidate pipeline on `psi` and evaluates both equations.
/// Ingredients are certified at `precondition_tol`; `tol` judges the outcome.
#[allow(clippy::too_many_arguments)]
pub fn certify_candidate(
    ctx: &Gauged,
    pipeline: &Pipeline,
    psi: &SpinorField,
    pairing: &DualPairing,
    points: &[Point],
    precondition_tol: f64,
    tol: f64,
) -> Result<SwReport> {
    require_sw(&ctx.geom.sig())?;
    let candidate = pipeline.apply(ctx, psi, points, precondition_tol)?;
    evaluate_candidate(ctx, &candidate, pairing, points, tol)
}

/// Both Seiberg–Witten equations for an already built candidate.
pub fn evaluate_candidate(
    ctx: &Gauged,
    candidate: &SpinorField,
    pairing: &DualPairing,
    points: &[Point],
    tol: f64,
) -> Result<SwReport> {
    require_sw(&ctx.geom.sig())?;
    let dirac = ctx.dirac(candidate)?;
    let f = ctx.eff_field_strength(1)?;
    let rows = points
        .par_iter()
        .map(|p| {
            let d = dirac.value(p)?.norm();
            let fp = self_dual(&f.value(p)?)?;
            let t = tau(candidate.rep(), pairing, &candidate.value(p)?)?;
            Ok((d, (&fp + &t.scale(0.25)).norm(), fp.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |g: fn(&(f64, f64, f64)) -> f64| rows.iter().map(g).fold(0.0, f64::max);
    Ok(SwReport {
        dirac_norm: max(|r| r.0),
        curvature_norm: max(|r| r.1),
        self_dual_norm: max(|r| r.2),
        current: vanishing_current_check(candidate, pairing, points, tol)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(idx: &[usize]) -> Multivector {
        Multivector::from_indices(Signature::euclidean(4), idx).unwrap()
    }

    #[test]
    fn star_examples() {
        assert_eq!(hodge_star(&e(&[0, 1])).unwrap(), e(&[2, 3]));
        assert_eq!(hodge_star(&e(&[0, 1, 2, 3])).unwrap(), e(&[]));
        assert_eq!(hodge_star(&e(&[0, 2])).unwrap(), e(&[1, 3]).scale(-1.0));
    }

    #[test]
    fn other_dimensions_rejected() {
        let m = Multivector::scalar(Signature::euclidean(3), 1.0);
        assert!(matches!(hodge_star(&m), Err(Error::Unsupported(_))));
        let m = Multivector::scalar(Signature::lorentzian(4), 1.0);
        assert!(matches!(hodge_star(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tau_of_zero() {
        let rep = GammaRep::new(Signature::euclidean(4));
        let z = Spinor(vec![crate::C64::new(0.0, 0.0); rep.spinor_dim()]);
        assert!(tau(&rep, &DualPairing::hermitian(4), &z).unwrap().is_zero());
    }
}
