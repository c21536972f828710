//! Truncated multivariate Taylor expansions ("jets") over vector-valued data.
//!
//! A `Jet<V>` of order `K` in `n` variables stores the Taylor coefficients of a
//! `V`-valued function around a point for every monomial of total degree at
//! most `K`. Derivatives are exact shifts of coefficients, products go through
//! a precomputed multiplication table, so differentiation is exact to roundoff
//! for any closed-form field. Each partial derivative lowers the order by one.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra::{Multivector, C64, MAX_DIM};
use crate::error::{Error, Result};

/// Highest jet order any field may be asked for.
pub const MAX_ORDER: usize = 8;

type Exponents = [u8; MAX_DIM];

/// Values that form a complex vector space.
pub trait Linear: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn scaled(&self, c: C64) -> Self;
    fn norm(&self) -> f64;

    fn axpy(&mut self, c: C64, other: &Self) {
        self.add_assign_ref(&other.scaled(c));
    }
}

impl Linear for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, c: C64) -> Self {
        self * c
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
    fn axpy(&mut self, c: C64, other: &Self) {
        *self += c * other;
    }
}

impl Linear for Multivector {
    fn zero_like(&self) -> Self {
        Multivector::zero(self.sig())
    }
    fn is_zero(&self) -> bool {
        Multivector::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, c: C64) -> Self {
        self.scale(c)
    }
    fn norm(&self) -> f64 {
        Multivector::norm(self)
    }
}

/// Monomial bookkeeping for jets of a fixed `(n, order)`.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    order: usize,
    exps: Vec<Exponents>,
    index: HashMap<Exponents, usize>,
    /// `(i, j, k)` with `x^i x^j = x^k`, every pair of total degree `<= order`.
    mul: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    fn build(n: usize, order: usize) -> Self {
        // graded enumeration: all monomials of degree 0, then 1, ...
        let mut exps: Vec<Exponents> = vec![[0; MAX_DIM]];
        let mut degree_start = vec![0usize, 1];
        for _deg in 1..=order {
            let prev = degree_start[degree_start.len() - 2]..degree_start[degree_start.len() - 1];
            let mut next = Vec::new();
            for m in &exps[prev] {
                // extend only at or after the last used variable to avoid duplicates
                let last = (0..n).rev().find(|&v| m[v] > 0).unwrap_or(0);
                for v in last..n {
                    let mut e = *m;
                    e[v] += 1;
                    next.push(e);
                }
            }
            exps.extend(next);
            degree_start.push(exps.len());
        }
        let index: HashMap<Exponents, usize> =
            exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let degree = |e: &Exponents| e.iter().map(|&x| x as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            let di = degree(ei);
            let end = degree_start[order - di + 1];
            for (j, ej) in exps[..end].iter().enumerate() {
                let mut s = [0u8; MAX_DIM];
                for v in 0..n {
                    s[v] = ei[v] + ej[v];
                }
                mul.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        Self {
            n,
            order,
            exps,
            index,
            mul,
        }
    }

    /// Shared space for `(n, order)`.
    pub fn get(n: usize, order: usize) -> Result<Arc<JetSpace>> {
        if order > MAX_ORDER {
            return Err(Error::JetDepthExhausted {
                requested: order,
                max: MAX_ORDER,
            });
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIM,
                got: n,
            });
        }
        static SPACES: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let map = SPACES.get_or_init(Default::default);
        let mut guard = map.lock().expect("jet space cache poisoned");
        Ok(guard
            .entry((n, order))
            .or_insert_with(|| Arc::new(JetSpace::build(n, order)))
            .clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i][..self.n]
    }

    /// Index of the monomial with the given exponents, if within the order.
    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        let mut e = [0u8; MAX_DIM];
        e[..exps.len()].copy_from_slice(exps);
        self.index.get(&e).copied()
    }
}

#[derive(Clone, Debug)]
pub struct Jet<V> {
    space: Arc<JetSpace>,
    terms: Vec<V>,
}

impl<V: Linear> Jet<V> {
    pub fn constant(space: Arc<JetSpace>, value: V) -> Self {
        let zero = value.zero_like();
        let mut terms = vec![zero; space.len()];
        terms[0] = value;
        Self { space, terms }
    }

    pub fn from_terms(space: Arc<JetSpace>, terms: Vec<V>) -> Self {
        assert_eq!(space.len(), terms.len(), "jet term count mismatch");
        Self { space, terms }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn value(&self) -> &V {
        &self.terms[0]
    }

    pub fn into_value(mut self) -> V {
        self.terms.swap_remove(0)
    }

    pub fn terms(&self) -> &[V] {
        &self.terms
    }

    /// Taylor coefficient for the given exponent vector (zero if beyond the order).
    pub fn taylor(&self, exps: &[u8]) -> V {
        match self.space.index_of(exps) {
            Some(i) => self.terms[i].clone(),
            None => self.terms[0].zero_like(),
        }
    }

    pub fn zero_like(&self) -> Self {
        Self {
            space: self.space.clone(),
            terms: self.terms.iter().map(|t| t.zero_like()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.is_zero())
    }

    /// Restriction to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let space = JetSpace::get(self.n(), order).expect("lower order is valid");
        let terms = self.terms[..space.len()].to_vec();
        Self { space, terms }
    }

    /// Partial derivative with respect to coordinate `a`; the result has order one lower.
    pub fn partial(&self, a: usize) -> Self {
        assert!(self.order() >= 1, "partial derivative of an order-0 jet");
        let lower = JetSpace::get(self.n(), self.order() - 1).expect("lower order is valid");
        let terms = (0..lower.len())
            .map(|i| {
                let mut e = lower.exps[i];
                let k = e[a] as f64 + 1.0;
                e[a] += 1;
                let src = self.space.index[&e];
                self.terms[src].scaled(C64::new(k, 0.0))
            })
            .collect();
        Self {
            space: lower,
            terms,
        }
    }

    pub fn map<W: Linear>(&self, f: impl Fn(&V) -> W) -> Jet<W> {
        Jet {
            space: self.space.clone(),
            terms: self.terms.iter().map(f).collect(),
        }
    }

    pub fn try_map<W: Linear>(&self, f: impl Fn(&V) -> Result<W>) -> Result<Jet<W>> {
        Ok(Jet {
            space: self.space.clone(),
            terms: self.terms.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn scaled(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        self.map(|t| t.scaled(c))
    }

    /// `self += c * other`, on the common (lower) order.
    pub fn axpy(&mut self, c: impl Into<C64>, other: &Self) {
        let c = c.into();
        if other.order() < self.order() {
            *self = self.truncate(other.order());
        }
        for (t, o) in self.terms.iter_mut().zip(&other.terms) {
            if !o.is_zero() {
                t.axpy(c, o);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Product of two jets under a bilinear map, truncated to the lower order.
    pub fn bilinear<B: Linear, W: Linear>(
        &self,
        other: &Jet<B>,
        zero: W,
        f: impl Fn(&V, &B) -> W,
    ) -> Jet<W> {
        let space = if self.order() <= other.order() {
            self.space.clone()
        } else {
            other.space.clone()
        };
        let len = space.len();
        let nz_a: Vec<bool> = self.terms[..len].iter().map(|t| !t.is_zero()).collect();
        let nz_b: Vec<bool> = other.terms[..len].iter().map(|t| !t.is_zero()).collect();
        let mut terms = vec![zero; len];
        for &(i, j, k) in &space.mul {
            let (i, j) = (i as usize, j as usize);
            if nz_a[i] && nz_b[j] {
                let prod = f(&self.terms[i], &other.terms[j]);
                terms[k as usize].add_assign_ref(&prod);
            }
        }
        Jet { space, terms }
    }

    /// Multiplication by a scalar jet.
    pub fn times(&self, s: &Jet<C64>) -> Self {
        let zero = self.terms[0].zero_like();
        self.bilinear(s, zero, |v, c| v.scaled(*c))
    }
}

impl Jet<C64> {
    /// The coordinate function `x^a` expanded around `x^a = value`.
    pub fn variable(space: Arc<JetSpace>, a: usize, value: f64) -> Self {
        let mut j = Self::constant(space.clone(), C64::new(value, 0.0));
        if space.order >= 1 {
            let mut e = [0u8; MAX_DIM];
            e[a] = 1;
            let idx = space.index[&e];
            j.terms[idx] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Coordinate jets `x^0 ... x^{n-1}` around a point.
    pub fn coordinates(point: &[f64], order: usize) -> Result<Vec<Self>> {
        let space = JetSpace::get(point.len(), order)?;
        Ok(point
            .iter()
            .enumerate()
            .map(|(a, &x)| Self::variable(space.clone(), a, x))
            .collect())
    }

    pub fn scalar_const(space: Arc<JetSpace>, c: impl Into<C64>) -> Self {
        Self::constant(space, c.into())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.bilinear(other, C64::new(0.0, 0.0), |a, b| a * b)
    }

    /// `f(self)` given `derivs[k] = f^{(k)}(value) / k!` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[C64]) -> Self {
        let order = self.order();
        let mut u = self.clone();
        u.terms[0] = C64::new(0.0, 0.0);
        let mut acc = Self::constant(self.space.clone(), derivs[order]);
        for k in (0..order).rev() {
            acc = acc.mul(&u);
            acc.terms[0] += derivs[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Self> {
        let v = self.terms[0];
        if v.norm() == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let inv = 1.0 / v;
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut c = inv;
        for _ in 0..=self.order() {
            d.push(c);
            c *= -inv;
        }
        Ok(self.compose(&d))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn exp(&self) -> Self {
        let e = self.terms[0].exp();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            d.push(e / fact);
        }
        self.compose(&d)
    }

    /// Real power `self^r` on the principal branch.
    pub fn powf(&self, r: f64) -> Result<Self> {
        let v = self.terms[0];
        if v.norm() == 0.0 {
            return Err(Error::DivisionByZero);
        }
        // f^{(k)}/k! = binom(r, k) v^{r-k}
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                binom *= (r - (k as f64 - 1.0)) / k as f64;
            }
            d.push(v.powf(r - k as f64) * binom);
        }
        Ok(self.compose(&d))
    }

    pub fn grad(&self, a: usize) -> C64 {
        let mut e = [0u8; MAX_DIM];
        e[a] = 1;
        self.space
            .index
            .get(&e)
            .map(|&i| self.terms[i])
            .unwrap_or_default()
    }

    /// Second partial `∂_a ∂_b`.
    pub fn hess(&self, a: usize, b: usize) -> C64 {
        let mut e = [0u8; MAX_DIM];
        e[a] += 1;
        e[b] += 1;
        let factor = if a == b { 2.0 } else { 1.0 };
        self.space
            .index
            .get(&e)
            .map(|&i| self.terms[i] * factor)
            .unwrap_or_default()
    }

    pub fn to_jet2(&self) -> Jet2 {
        let n = self.n();
        Jet2 {
            value: self.terms[0],
            grad: (0..n).map(|a| self.grad(a)).collect(),
            hess: (0..n)
                .map(|a| (0..n).map(|b| self.hess(a, b)).collect())
                .collect(),
        }
    }
}

/// Value, gradient and Hessian of a scalar at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: C64,
    pub grad: Vec<C64>,
    pub hess: Vec<Vec<C64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn space_sizes() {
        // C(n + k, k)
        assert_eq!(JetSpace::get(2, 2).unwrap().len(), 6);
        assert_eq!(JetSpace::get(4, 3).unwrap().len(), 35);
        assert_eq!(JetSpace::get(6, 4).unwrap().len(), 210);
        assert!(JetSpace::get(3, MAX_ORDER + 1).is_err());
    }

    #[test]
    fn product_rule() {
        let x = Jet::coordinates(&[3.0, 5.0], 2).unwrap();
        let j = x[0].mul(&x[1]).to_jet2();
        assert_eq!(j.value, c(15.0));
        assert_eq!(j.grad, vec![c(5.0), c(3.0)]);
        assert_eq!(j.hess[0][1], c(1.0));
        assert_eq!(j.hess[1][0], c(1.0));
        assert_eq!(j.hess[0][0], c(0.0));
    }

    #[test]
    fn constant_has_no_derivatives() {
        let s = JetSpace::get(3, 2).unwrap();
        let j = Jet::scalar_const(s, 7.0).to_jet2();
        assert!(j.grad.iter().all(|g| g.norm() == 0.0));
        assert!(j.hess.iter().flatten().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn square() {
        let x = Jet::coordinates(&[2.0], 2).unwrap();
        let j = x[0].mul(&x[0]).to_jet2();
        assert_eq!(j.value, c(4.0));
        assert_eq!(j.grad[0], c(4.0));
        assert_eq!(j.hess[0][0], c(2.0));
    }

    #[test]
    fn recip_and_exp() {
        let x = Jet::coordinates(&[2.0], 3).unwrap();
        let r = x[0].recip().unwrap().to_jet2();
        assert!((r.value - c(0.5)).norm() < 1e-15);
        assert!((r.grad[0] - c(-0.25)).norm() < 1e-15);
        assert!((r.hess[0][0] - c(0.25)).norm() < 1e-15);
        let e = x[0].exp().to_jet2();
        let e2 = 2f64.exp();
        assert!((e.hess[0][0] - c(e2)).norm() < 1e-12);
        let s = JetSpace::get(1, 2).unwrap();
        assert!(matches!(
            Jet::scalar_const(s, 0.0).recip(),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn powf_matches_recip() {
        let x = Jet::coordinates(&[1.5, -0.5], 3).unwrap();
        let h = x[0].mul(&x[0]).add(&x[1].mul(&x[1])).add(&Jet::scalar_const(x[0].space().clone(), 1.0));
        let a = h.powf(-1.0).unwrap();
        let b = h.recip().unwrap();
        for (p, q) in a.terms().iter().zip(b.terms()) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::coordinates(&[1.0, 2.0], 3).unwrap();
        let f = x[0].mul(&x[0]).mul(&x[1]); // x^2 y
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        let j = fx.to_jet2(); // 2xy
        assert_eq!(j.value, c(4.0));
        assert_eq!(j.grad, vec![c(4.0), c(2.0)]);
        assert_eq!(j.hess[0][1], c(2.0));
    }
}
