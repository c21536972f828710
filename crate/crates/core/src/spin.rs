//! Spinor representation of the Clifford algebra and spinor-valued data.
//!
//! Gamma matrices come from the tensor-product recursion on Pauli matrices.
//! Every generator, and hence every blade, is a monomial matrix (one nonzero
//! entry per row, valued in `{±1, ±i}`), so blades are stored as a row
//! permutation plus phases and applied without dense products.

use std::ops::{Add, Sub};
use std::sync::Arc;

use crate::algebra::{Multivector, Signature, C64};
use crate::error::{Error, Result};
use crate::fields::{FormField, SpinorField};
use crate::gauge::Gauged;
use crate::jet::{Jet, Linear};

/// `(Mψ)[i] = phase[i] ψ[perm[i]]`.
#[derive(Clone, Debug, PartialEq)]
struct MonomialMatrix {
    perm: Vec<usize>,
    phase: Vec<C64>,
}

impl MonomialMatrix {
    fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect(),
            phase: vec![C64::new(1.0, 0.0); dim],
        }
    }

    fn compose(&self, inner: &Self) -> Self {
        let perm = self.perm.iter().map(|&m| inner.perm[m]).collect();
        let phase = self
            .phase
            .iter()
            .zip(&self.perm)
            .map(|(p, &m)| p * inner.phase[m])
            .collect();
        Self { perm, phase }
    }

    fn kron(&self, other: &Self) -> Self {
        let db = other.perm.len();
        let mut perm = Vec::with_capacity(self.perm.len() * db);
        let mut phase = Vec::with_capacity(self.perm.len() * db);
        for (ia, &pa) in self.perm.iter().enumerate() {
            for (ib, &pb) in other.perm.iter().enumerate() {
                perm.push(pa * db + pb);
                phase.push(self.phase[ia] * other.phase[ib]);
            }
        }
        Self { perm, phase }
    }

    fn scale(&self, s: C64) -> Self {
        Self {
            perm: self.perm.clone(),
            phase: self.phase.iter().map(|p| p * s).collect(),
        }
    }

    fn apply_acc(&self, coeff: C64, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += coeff * self.phase[i] * psi[self.perm[i]];
        }
    }
}

fn pauli(which: u8) -> MonomialMatrix {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match which {
        1 => MonomialMatrix {
            perm: vec![1, 0],
            phase: vec![one, one],
        },
        2 => MonomialMatrix {
            perm: vec![1, 0],
            phase: vec![-i, i],
        },
        3 => MonomialMatrix {
            perm: vec![0, 1],
            phase: vec![one, -one],
        },
        _ => MonomialMatrix::identity(2),
    }
}

/// Matrices `γ^a` representing the frame 1-forms `e^a`, extended to all blades.
#[derive(Clone, Debug)]
pub struct GammaRep {
    sig: Signature,
    dim: usize,
    blades: Vec<MonomialMatrix>,
}

impl GammaRep {
    pub fn new(sig: Signature) -> Arc<Self> {
        let n = sig.dim();
        let k = n / 2;
        let factors = |slots: Vec<u8>| {
            slots
                .into_iter()
                .map(pauli)
                .reduce(|a, b| a.kron(&b))
                .unwrap_or_else(|| MonomialMatrix::identity(1))
        };
        let mut gammas = Vec::with_capacity(n);
        for j in 0..k {
            for p in [1u8, 2u8] {
                let mut slots = vec![3u8; j];
                slots.push(p);
                slots.extend(std::iter::repeat(0u8).take(k - j - 1));
                gammas.push(factors(slots));
            }
        }
        if n % 2 == 1 {
            gammas.push(factors(vec![3u8; k]));
        }
        let i = C64::new(0.0, 1.0);
        for (a, g) in gammas.iter_mut().enumerate() {
            if sig.metric(a) < 0.0 {
                *g = g.scale(i);
            }
        }
        let dim = 1usize << k;
        let blades = (0..sig.blades())
            .map(|mask| {
                let mut m = MonomialMatrix::identity(dim);
                for (a, g) in gammas.iter().enumerate() {
                    if mask & (1 << a) != 0 {
                        m = m.compose(g);
                    }
                }
                m
            })
            .collect();
        Arc::new(Self { sig, dim, blades })
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    /// Spinor dimension `2^{⌊n/2⌋}`.
    pub fn spinor_dim(&self) -> usize {
        self.dim
    }

    /// Dense matrix of a multivector's action.
    pub fn represent(&self, mv: &Multivector) -> Result<Vec<Vec<C64>>> {
        self.sig.ensure_same(&mv.sig())?;
        let mut out = vec![vec![C64::new(0.0, 0.0); self.dim]; self.dim];
        for (mask, c) in mv.terms() {
            let m = &self.blades[mask];
            for i in 0..self.dim {
                out[i][m.perm[i]] += c * m.phase[i];
            }
        }
        Ok(out)
    }

    /// Clifford action `mv · ψ`.
    pub fn act(&self, mv: &Multivector, psi: &Spinor) -> Result<Spinor> {
        self.sig.ensure_same(&mv.sig())?;
        self.check(psi)?;
        Ok(self.act_unchecked(mv, psi))
    }

    pub(crate) fn act_unchecked(&self, mv: &Multivector, psi: &Spinor) -> Spinor {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (mask, c) in mv.terms() {
            self.blades[mask].apply_acc(c, &psi.0, &mut out);
        }
        Spinor(out)
    }

    /// Clifford action on jets.
    pub fn act_jet(&self, mv: &Jet<Multivector>, psi: &Jet<Spinor>) -> Jet<Spinor> {
        let zero = Spinor::zero(self.dim);
        mv.bilinear(psi, zero, |m, s| self.act_unchecked(m, s))
    }

    pub fn check(&self, psi: &Spinor) -> Result<()> {
        if psi.0.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.0.len(),
            })
        }
    }

    /// Exact check of `γ^aγ^b + γ^bγ^a = 2g^{ab}`: worst entry deviation.
    pub fn anticommutator_defect(&self) -> f64 {
        let n = self.sig.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let ga = &self.blades[1 << a];
                let gb = &self.blades[1 << b];
                let ab = ga.compose(gb);
                let ba = gb.compose(ga);
                for i in 0..self.dim {
                    let mut row = vec![C64::new(0.0, 0.0); self.dim];
                    row[ab.perm[i]] += ab.phase[i];
                    row[ba.perm[i]] += ba.phase[i];
                    if a == b {
                        row[i] -= C64::new(2.0 * self.sig.metric(a), 0.0);
                    }
                    for v in row {
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }

    /// Consistency of the blade table with the Clifford product of blades.
    #[cfg(test)]
    pub(crate) fn blade_table_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.sig.blades() {
            for b in 0..self.sig.blades() {
                let (s, m) = crate::algebra::blade_product(&self.sig, a, b);
                let lhs = self.blades[a].compose(&self.blades[b]);
                let rhs = self.blades[m].scale(C64::new(s, 0.0));
                if lhs.perm != rhs.perm {
                    return f64::INFINITY;
                }
                for (x, y) in lhs.phase.iter().zip(&rhs.phase) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spinor(pub Vec<C64>);

impl Spinor {
    pub fn zero(dim: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); dim])
    }

    /// Standard basis spinor `u_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut s = Self::zero(dim);
        s.0[i] = C64::new(1.0, 0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[C64] {
        &self.0
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        Self(self.0.iter().map(|x| x * c).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Linear for Spinor {
    fn zero_like(&self) -> Self {
        Spinor::zero(self.0.len())
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
    fn scaled(&self, c: C64) -> Self {
        self.scale(c)
    }
    fn norm(&self) -> f64 {
        Spinor::norm(self)
    }
    fn axpy(&mut self, c: C64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }
}

impl Add for &Spinor {
    type Output = Spinor;
    fn add(self, rhs: &Spinor) -> Spinor {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Sub for &Spinor {
    type Output = Spinor;
    fn sub(self, rhs: &Spinor) -> Spinor {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), rhs);
        out
    }
}

/// Spinor inner product `(φ, ψ) = ψ† M φ`, linear in the first slot.
///
/// The default `M = 1` is the Hermitian pairing; the dual spinor is `ψ̄ = ψ† M`.
#[derive(Clone, Debug)]
pub struct DualPairing {
    matrix: Vec<Vec<C64>>,
}

impl DualPairing {
    pub fn hermitian(dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        Self { matrix }
    }

    pub fn from_matrix(matrix: Vec<Vec<C64>>) -> Result<Self> {
        let dim = matrix.len();
        if matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::MalformedSpec("pairing matrix must be square".into()));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn pair(&self, phi: &Spinor, psi: &Spinor) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, row) in self.matrix.iter().enumerate() {
            let mut m_phi = C64::new(0.0, 0.0);
            for (j, m) in row.iter().enumerate() {
                m_phi += m * phi.0[j];
            }
            acc += psi.0[i].conj() * m_phi;
        }
        acc
    }
}

/// Grade-`p` Dirac current `(e_{a1}···e_{ap}·ψ, ψ) e^{a1}∧···∧e^{ap}`, summed over
/// all ordered index tuples.
pub fn dirac_current(
    rep: &GammaRep,
    pairing: &DualPairing,
    psi: &Spinor,
    p: usize,
) -> Result<Multivector> {
    let sig = rep.sig();
    let n = sig.dim();
    if p > n {
        return Err(Error::GradeOutOfRange { grade: p, n });
    }
    rep.check(psi)?;
    let mut out = Multivector::zero(sig);
    let mut tuple = vec![0usize; p];
    loop {
        let distinct = {
            let mut seen = 0usize;
            tuple.iter().all(|&a| {
                let fresh = seen & (1 << a) == 0;
                seen |= 1 << a;
                fresh
            })
        };
        if distinct {
            let mut word = Multivector::scalar(sig, 1.0);
            let mut wedge = Multivector::scalar(sig, 1.0);
            for &a in &tuple {
                word = &word * &Multivector::basis_lower(sig, a);
                wedge = wedge.wedge_unchecked(&Multivector::basis(sig, a));
            }
            let c = pairing.pair(&rep.act_unchecked(&word, psi), psi);
            out += &wedge.scale(c);
        }
        // odometer over {0..n}^p
        let mut pos = p;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

// ---- twistor and Dirac equations ----

/// `∇̂_{X_a}ψ - (1/n) e_a·D̂ψ`, one field per frame direction.
pub fn penrose_residual(ctx: &Gauged, psi: &SpinorField) -> Result<Vec<SpinorField>> {
    let sig = ctx.geom.sig();
    let n = sig.dim();
    let dpsi = ctx.dirac(psi)?;
    (0..n)
        .map(|a| {
            let ea = FormField::constant(Multivector::basis_lower(sig, a).scale(1.0 / n as f64));
            ctx.spinor_nabla(psi, a)?.sub(&dpsi.clifford_by(&ea)?)
        })
        .collect()
}

/// `D̂ψ - mψ`.
pub fn massive_residual(ctx: &Gauged, psi: &SpinorField, m: f64) -> Result<SpinorField> {
    ctx.dirac(psi)?.sub(&psi.scale(m))
}

/// Residuals of the three integrability conditions of the (gauged) twistor equation.
#[derive(Clone, Debug)]
pub struct TwistorIntegrability {
    /// `D̂²ψ + n/(4(n-1)) 𝓡ψ - n/(n-1) F·ψ`.
    pub dirac_square: SpinorField,
    /// Per direction `a`: `∇̂_a D̂ψ - (n/2) K_a·ψ + n/((n-1)(n-2)) e_a·F·ψ - n/(n-2) (i_{X_a}F)·ψ`.
    pub nabla_dirac: Vec<SpinorField>,
    /// Per pair `a < b`: `C_ab·ψ` minus its gauge-curvature terms.
    pub conformal: Vec<((usize, usize), SpinorField)>,
}

impl TwistorIntegrability {
    pub fn all(&self) -> impl Iterator<Item = &SpinorField> {
        std::iter::once(&self.dirac_square)
            .chain(self.nabla_dirac.iter())
            .chain(self.conformal.iter().map(|(_, f)| f))
    }
}

pub fn twistor_integrability_residuals(ctx: &Gauged, psi: &SpinorField) -> Result<TwistorIntegrability> {
    let geom = &ctx.geom;
    let sig = geom.sig();
    let n = sig.dim();
    if n < 3 {
        return Err(Error::Unsupported("twistor integrability needs n >= 3".into()));
    }
    let nf = n as f64;
    let f = ctx.eff_field_strength(psi.charge())?;
    let dpsi = ctx.dirac(psi)?;
    let scal = geom.scalar_curvature_field();
    let dirac_square = ctx
        .dirac(&dpsi)?
        .add(&psi.times_scalar(&scal)?.scale(nf / (4.0 * (nf - 1.0))))?
        .sub(&psi.clifford_by(&f)?.scale(nf / (nf - 1.0)))?;
    let lower = |a: usize| FormField::constant(Multivector::basis_lower(sig, a));
    let i_f = |a: usize| f.map_values(Some(1), move |m| m.interior(a));
    let mut nabla_dirac = Vec::with_capacity(n);
    for a in 0..n {
        let r = ctx
            .spinor_nabla(&dpsi, a)?
            .sub(&psi.clifford_by(&geom.k_field(a)?)?.scale(nf / 2.0))?
            .add(&psi.clifford_by(&lower(a).clifford(&f)?)?.scale(nf / ((nf - 1.0) * (nf - 2.0))))?
            .sub(&psi.clifford_by(&i_f(a))?.scale(nf / (nf - 2.0)))?;
        nabla_dirac.push(r);
    }
    let mut conformal = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let fab = f.map_values(Some(0), move |m| m.interior(b).interior(a));
            let mixed = lower(b).clifford(&i_f(a))?.sub(&lower(a).clifford(&i_f(b))?)?;
            let eef = lower(a).clifford(&lower(b))?.clifford(&f)?;
            let r = psi
                .clifford_by(&geom.conformal_field(a, b)?)?
                .sub(&psi.times_scalar(&fab)?.scale(2.0))?
                .sub(&psi.clifford_by(&mixed)?.scale(nf / (nf - 2.0)))?
                .sub(&psi.clifford_by(&eef)?.scale(4.0 / ((nf - 1.0) * (nf - 2.0))))?;
            conformal.push(((a, b), r));
        }
    }
    Ok(TwistorIntegrability {
        dirac_square,
        nabla_dirac,
        conformal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anticommutation_all_dims() {
        for n in 2..=8 {
            for sig in [Signature::euclidean(n), Signature::lorentzian(n)] {
                let rep = GammaRep::new(sig);
                assert_eq!(rep.spinor_dim(), 1 << (n / 2));
                assert_eq!(rep.anticommutator_defect(), 0.0, "n={n} {sig:?}");
            }
        }
    }

    #[test]
    fn blade_table_is_homomorphic() {
        for n in 2..=6 {
            for sig in [Signature::euclidean(n), Signature::lorentzian(n)] {
                assert_eq!(GammaRep::new(sig).blade_table_defect(), 0.0, "n={n}");
            }
        }
    }

    #[test]
    fn represent_identity_and_square() {
        let sig = Signature::lorentzian(4);
        let rep = GammaRep::new(sig);
        let one = rep.represent(&Multivector::scalar(sig, 1.0)).unwrap();
        for (i, row) in one.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
            }
        }
        let e0 = Multivector::basis(sig, 0);
        let sq = rep.represent(&(&e0 * &e0)).unwrap();
        assert_eq!(sq[0][0], C64::new(-1.0, 0.0));
    }

    #[test]
    fn current_of_zero_and_scalar() {
        let sig = Signature::euclidean(4);
        let rep = GammaRep::new(sig);
        let pairing = DualPairing::hermitian(4);
        let zero = Spinor::zero(4);
        assert!(dirac_current(&rep, &pairing, &zero, 2).unwrap().is_zero());
        let psi = Spinor(vec![
            C64::new(1.0, 2.0),
            C64::new(0.0, -1.0),
            C64::new(3.0, 0.0),
            C64::new(0.5, 0.5),
        ]);
        let c0 = dirac_current(&rep, &pairing, &psi, 0).unwrap();
        assert!((c0.coeff(0) - C64::new(psi.norm().powi(2), 0.0)).norm() < 1e-12);
        assert!(dirac_current(&rep, &pairing, &psi, 5).is_err());
    }
}
