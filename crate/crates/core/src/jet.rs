//! Truncated multivariate polynomials ("jets") and map-germs built from them.
//!
//! A [`JetPoly`] lives in `R[y_1..y_s] / m^{N+1}`: every product, sum and
//! composition drops terms above its truncation order `N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "y{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Polynomial in `nvars` variables truncated above total degree `order`.
///
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoly<S> {
    nvars: usize,
    order: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> JetPoly<S> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        JetPoly { nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: usize, c: S) -> Self {
        Self::from_terms(nvars, order, [(Monomial::one(nvars), c)])
    }

    pub fn var(nvars: usize, order: usize, i: usize) -> Self {
        Self::from_terms(nvars, order, [(Monomial::var(nvars, i), S::one())])
    }

    pub fn monomial(nvars: usize, order: usize, m: Monomial, c: S) -> Self {
        Self::from_terms(nvars, order, [(m, c)])
    }

    /// Builds a jet from (exponent, coefficient) pairs, summing duplicates and
    /// dropping terms above `order`.
    ///
    /// Panics if an exponent vector has the wrong length.
    pub fn from_terms(nvars: usize, order: usize, terms: impl IntoIterator<Item = (Monomial, S)>) -> Self {
        let mut out = JetPoly::zero(nvars, order);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "exponent length must match the number of variables");
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: S) {
        if m.degree() > self.order || c.is_negligible() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_negligible() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> S {
        self.coeff(&Monomial::one(self.nvars))
    }

    /// Coefficients of `y_1, .., y_s`.
    pub fn linear_coeffs(&self) -> Vec<S> {
        (0..self.nvars).map(|i| self.coeff(&Monomial::var(self.nvars, i))).collect()
    }

    /// Lowest total degree of a stored term.
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Terms of exactly total degree `d`.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        JetPoly {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Same polynomial re-truncated at `order` (raising the order keeps the terms).
    pub fn with_order(&self, order: usize) -> Self {
        JetPoly {
            nvars: self.nvars,
            order,
            terms: self.terms.iter().filter(|(m, _)| m.degree() <= order).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = JetPoly::zero(self.nvars, self.order);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        let mut out = JetPoly::zero(self.nvars, self.order);
        for (e, v) in &self.terms {
            out.add_term(e.mul(m), v.clone());
        }
        out
    }

    fn mul_trunc(&self, other: &Self, order: usize) -> Self {
        let mut acc: HashMap<Monomial, S> = HashMap::new();
        let rhs: Vec<(&Monomial, usize, &S)> = other.terms.iter().map(|(m, c)| (m, m.degree(), c)).collect();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if da > order {
                continue;
            }
            for &(mb, db, cb) in &rhs {
                if da + db > order {
                    continue;
                }
                let prod = ca.clone() * cb.clone();
                acc.entry(ma.mul(mb)).and_modify(|v| *v = v.clone() + prod.clone()).or_insert(prod);
            }
        }
        JetPoly {
            nvars: self.nvars,
            order,
            terms: acc.into_iter().filter(|(_, c)| !c.is_negligible()).collect(),
        }
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut result = JetPoly::constant(self.nvars, self.order, S::one());
        for _ in 0..e {
            result = &result * self;
        }
        result
    }

    /// Partial derivative in `y_{i+1}`; the order drops by one (never below zero).
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = JetPoly::zero(self.nvars, self.order.saturating_sub(1));
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut d = m.clone();
            d.0[i] -= 1;
            out.add_term(d, c.clone() * S::from_u16(e).expect("exponent fits the scalar"));
        }
        out
    }

    /// Substitutes `subs[i]` for `y_{i+1}`.
    ///
    /// The substituted jets must have zero constant term, so the result is a
    /// correct jet at order `min(self.order, subs order)`.
    pub fn compose(&self, subs: &[JetPoly<S>]) -> Self {
        assert_eq!(subs.len(), self.nvars, "one substitution per variable");
        let (nvars, order) = match subs.first() {
            Some(g) => (g.nvars, subs.iter().map(|g| g.order).min().unwrap_or(g.order).min(self.order)),
            None => {
                // no variables: only the constant survives
                return self.clone();
            }
        };
        debug_assert!(subs.iter().all(|g| g.constant_term().is_negligible()));
        let mut powers: Vec<Vec<JetPoly<S>>> = subs
            .iter()
            .map(|g| vec![JetPoly::constant(nvars, order, S::one()), g.with_order(order)])
            .collect();
        let mut out = JetPoly::zero(nvars, order);
        for (m, c) in &self.terms {
            if m.degree() > order {
                continue;
            }
            let mut term = JetPoly::constant(nvars, order, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                let e = e as usize;
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e {
                    let next = &powers[i][powers[i].len() - 1] * &powers[i][1];
                    powers[i].push(next);
                }
                term = &term * &powers[i][e];
                if term.is_zero() {
                    break;
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Re-expresses the jet in `new_nvars` variables, sending `y_{i+1}` to `y_{map[i]+1}`.
    pub fn embed(&self, new_nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut out = JetPoly::zero(new_nvars, self.order);
        for (m, c) in &self.terms {
            let mut e = vec![0u16; new_nvars];
            for (i, &k) in m.0.iter().enumerate() {
                e[map[i]] += k;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars);
        let mut total = S::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                for _ in 0..e {
                    v = v * x.clone();
                }
            }
            total = total + v;
        }
        total
    }

    /// Coefficient-wise conversion to another scalar type.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> JetPoly<T> {
        JetPoly::from_terms(self.nvars, self.order, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Drops coefficients whose magnitude is below `tol` times the largest one.
    pub fn prune(&self, tol: f64) -> Self {
        let scale = self.terms.values().map(|c| crate::scalar::to_f64(&c.abs())).fold(0.0, f64::max);
        JetPoly {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| crate::scalar::to_f64(&c.abs()) > tol * scale)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

impl<S: Scalar + Float> JetPoly<S> {
    /// `(sin p, cos p)` for a jet `p` with arbitrary constant term.
    pub fn sin_cos(&self) -> (Self, Self) {
        let c0 = self.constant_term();
        let mut h = self.clone();
        h.terms.remove(&Monomial::one(self.nvars));
        // series of sin h and cos h; h is nilpotent modulo m^{order+1}
        let mut sin_h = JetPoly::zero(self.nvars, self.order);
        let mut cos_h = JetPoly::constant(self.nvars, self.order, S::one());
        let mut power = JetPoly::constant(self.nvars, self.order, S::one());
        let mut factorial = S::one();
        for k in 1..=self.order {
            power = &power * &h;
            if power.is_zero() {
                break;
            }
            factorial = factorial * S::from_usize(k).expect("small integer");
            let term = power.scale(&(S::one() / factorial));
            match k % 4 {
                1 => sin_h = &sin_h + &term,
                2 => cos_h = &cos_h - &term,
                3 => sin_h = &sin_h - &term,
                _ => cos_h = &cos_h + &term,
            }
        }
        let (s0, c0) = (Float::sin(c0), Float::cos(c0));
        let sin = &sin_h.scale(&c0) + &cos_h.scale(&s0);
        let cos = &cos_h.scale(&c0) - &sin_h.scale(&s0);
        (sin, cos)
    }
}

impl<S: Scalar> Add for &JetPoly<S> {
    type Output = JetPoly<S>;
    fn add(self, rhs: Self) -> JetPoly<S> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.with_order(self.order.min(rhs.order));
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<S: Scalar> Sub for &JetPoly<S> {
    type Output = JetPoly<S>;
    fn sub(self, rhs: Self) -> JetPoly<S> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.with_order(self.order.min(rhs.order));
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<S: Scalar> Mul for &JetPoly<S> {
    type Output = JetPoly<S>;
    fn mul(self, rhs: Self) -> JetPoly<S> {
        assert_eq!(self.nvars, rhs.nvars);
        self.mul_trunc(rhs, self.order.min(rhs.order))
    }
}

impl<S: Scalar> Neg for &JetPoly<S> {
    type Output = JetPoly<S>;
    fn neg(self) -> JetPoly<S> {
        JetPoly {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for JetPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(b.0.cmp(a.0)));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let negative = *c < S::zero();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            let is_one = mag == S::one();
            if m.degree() == 0 {
                write!(f, "{mag}")?;
            } else if is_one {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Map-germ `(R^s, 0) -> (R^t, 0)` given by `t` jets with zero constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct MapGerm<S> {
    source_dim: usize,
    order: usize,
    components: Vec<JetPoly<S>>,
}

impl<S: Scalar> MapGerm<S> {
    /// Validates the components and re-truncates them at `order`.
    pub fn new(source_dim: usize, order: usize, components: Vec<JetPoly<S>>) -> Result<Self> {
        let mut comps = Vec::with_capacity(components.len());
        for (i, c) in components.into_iter().enumerate() {
            if c.nvars() != source_dim {
                return Err(Error::DimensionMismatch(format!(
                    "component {i} has {} variables, expected {source_dim}",
                    c.nvars()
                )));
            }
            if !c.constant_term().is_negligible() {
                return Err(Error::NonzeroConstant(i));
            }
            let mut c = c.with_order(order);
            c.terms.remove(&Monomial::one(source_dim));
            comps.push(c);
        }
        Ok(MapGerm { source_dim, order, components: comps })
    }

    pub fn identity(source_dim: usize, order: usize) -> Self {
        MapGerm {
            source_dim,
            order,
            components: (0..source_dim).map(|i| JetPoly::var(source_dim, order, i)).collect(),
        }
    }

    pub fn zero(source_dim: usize, target_dim: usize, order: usize) -> Self {
        MapGerm { source_dim, order, components: vec![JetPoly::zero(source_dim, order); target_dim] }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[JetPoly<S>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &JetPoly<S> {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<JetPoly<S>> {
        self.components
    }

    pub fn with_order(&self, order: usize) -> Self {
        MapGerm {
            source_dim: self.source_dim,
            order,
            components: self.components.iter().map(|c| c.with_order(order)).collect(),
        }
    }

    /// `self ∘ inner`, truncated at the smaller order.
    pub fn compose(&self, inner: &MapGerm<S>) -> Result<Self> {
        if inner.target_dim() != self.source_dim {
            return Err(Error::DimensionMismatch(format!(
                "inner germ has target dimension {}, outer germ expects {}",
                inner.target_dim(),
                self.source_dim
            )));
        }
        let order = self.order.min(inner.order);
        if self.source_dim == 0 {
            return Ok(MapGerm::zero(inner.source_dim, self.target_dim(), order));
        }
        let subs: Vec<_> = inner.components.iter().map(|c| c.with_order(order)).collect();
        let components = self.components.iter().map(|c| c.compose(&subs)).collect();
        Ok(MapGerm { source_dim: inner.source_dim, order, components })
    }

    /// Degree-one coefficient matrix (`t` rows, `s` columns).
    pub fn linear_matrix(&self) -> Vec<Vec<S>> {
        self.components.iter().map(JetPoly::linear_coeffs).collect()
    }

    /// Jacobian matrix of jets (`t` rows, `s` columns).
    pub fn jacobian(&self) -> Vec<Vec<JetPoly<S>>> {
        self.components.iter().map(|c| (0..self.source_dim).map(|i| c.derivative(i)).collect()).collect()
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> MapGerm<T> {
        MapGerm {
            source_dim: self.source_dim,
            order: self.order,
            components: self.components.iter().map(|c| c.convert(f)).collect(),
        }
    }

    /// Stacks the components of `self` and `other` (same source).
    pub fn concat(&self, other: &MapGerm<S>) -> Result<Self> {
        if self.source_dim != other.source_dim {
            return Err(Error::DimensionMismatch("concatenated germs need the same source".into()));
        }
        let order = self.order.min(other.order);
        let components = self.components.iter().chain(&other.components).map(|c| c.with_order(order)).collect();
        Ok(MapGerm { source_dim: self.source_dim, order, components })
    }

    /// Re-expresses the germ in `new_dim` source variables (see [`JetPoly::embed`]).
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> Self {
        MapGerm {
            source_dim: new_dim,
            order: self.order,
            components: self.components.iter().map(|c| c.embed(new_dim, map)).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        MapGerm {
            source_dim: self.source_dim,
            order: self.order,
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn sub(&self, other: &MapGerm<S>) -> Result<Self> {
        if self.source_dim != other.source_dim || self.target_dim() != other.target_dim() {
            return Err(Error::DimensionMismatch("subtracting germs of different shape".into()));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect();
        Ok(MapGerm { source_dim: self.source_dim, order: self.order.min(other.order), components })
    }
}

impl<S: Scalar> fmt::Display for MapGerm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Shorthand for building exact jets in tests and normal forms:
/// `poly(2, 12, &[(1, &[2, 0]), (-1, &[0, 3])])` is `y1^2 - y2^3`.
pub fn poly<S: Scalar>(nvars: usize, order: usize, terms: &[(i64, &[u16])]) -> JetPoly<S> {
    JetPoly::from_terms(
        nvars,
        order,
        terms.iter().map(|(c, e)| (Monomial(e.to_vec()), S::from_i64(*c).expect("integer coefficient"))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn p(nvars: usize, order: usize, terms: &[(i64, &[u16])]) -> JetPoly<Rational> {
        poly(nvars, order, terms)
    }

    #[test]
    fn truncation_is_applied_on_products() {
        let a = p(1, 3, &[(1, &[1]), (1, &[2])]);
        let sq = &a * &a;
        assert_eq!(sq, p(1, 3, &[(1, &[2]), (2, &[3])]));
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let a = p(2, 4, &[(1, &[1, 1]), (-1, &[1, 1])]);
        assert!(a.is_zero());
        assert_eq!(a.num_terms(), 0);
    }

    #[test]
    fn derivative_and_display() {
        let f = p(2, 6, &[(1, &[2, 1]), (1, &[0, 3])]);
        assert_eq!(f.derivative(1), p(2, 5, &[(1, &[2, 0]), (3, &[0, 2])]));
        assert_eq!(f.to_string(), "y1^2*y2 + y2^3");
    }

    #[test]
    fn nonzero_constant_rejected() {
        let c = p(1, 3, &[(1, &[0])]);
        assert_eq!(MapGerm::new(1, 3, vec![c]), Err(Error::NonzeroConstant(0)));
    }

    #[test]
    fn sin_cos_match_libm() {
        let x = JetPoly::<f64>::from_terms(1, 8, [(Monomial(vec![0]), 0.3), (Monomial(vec![1]), 1.0)]);
        let (s, c) = x.sin_cos();
        for (k, fact) in [(0u16, 1.0), (1, 1.0), (2, 2.0), (3, 6.0)] {
            let ds = match k % 4 {
                0 => 0.3f64.sin(),
                1 => 0.3f64.cos(),
                2 => -0.3f64.sin(),
                _ => -0.3f64.cos(),
            };
            let dc = match k % 4 {
                0 => 0.3f64.cos(),
                1 => -0.3f64.sin(),
                2 => -0.3f64.cos(),
                _ => 0.3f64.sin(),
            };
            assert!((s.coeff(&Monomial(vec![k])) - ds / fact).abs() < 1e-14);
            assert!((c.coeff(&Monomial(vec![k])) - dc / fact).abs() < 1e-14);
        }
    }
}
