//! Local algebras and contact tangent spaces of map-germs, computed on
//! truncated jets.
//!
//! Everything reduces to one primitive: the quotient of `E_s^t` by the
//! submodule spanned by all monomial multiples of a few generator tuples,
//! taken modulo `m^{M+1}`. Columns are ordered by degree, then exponent
//! tuple, then component, and every row pivots on its lowest column, so the
//! non-pivot columns are a monomial basis of the quotient and their count
//! per degree is the Hilbert function of the associated graded module.
//!
//! Finiteness is decided by Nakayama: if the truncated dimensions agree at
//! orders `N` and `N + 1`, then `m^{N+1} E^t` lies in the module and the
//! value is exact. When no agreement is reached up to the cap, the quotient
//! is reported as [`Codim::Infinite`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{JetPoly, MapGerm, Monomial};
use crate::linalg::{determinant, rref, symmetric_signature, Echelon, MonomialIndex, SparseRow};
use crate::scalar::Scalar;

/// Finite dimension or the `INFINITE` marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Codim {
    Finite(usize),
    Infinite,
}

impl Codim {
    pub fn finite(self) -> Option<usize> {
        match self {
            Codim::Finite(d) => Some(d),
            Codim::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Codim::Finite(_))
    }
}

impl fmt::Display for Codim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Codim::Finite(d) => write!(f, "{d}"),
            Codim::Infinite => write!(f, "INFINITE"),
        }
    }
}

/// Default truncation cap by source dimension.
pub fn default_order(source_dim: usize) -> usize {
    match source_dim {
        0..=2 => 12,
        3 => 8,
        _ => 6,
    }
}

/// Non-pivot column of a truncated quotient: a monomial in one component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisElement {
    pub monomial: Monomial,
    pub component: usize,
}

/// `E_s^t / (module + m^{M+1} E_s^t)` in echelon form.
#[derive(Clone, Debug)]
pub struct TruncatedQuotient<S> {
    nvars: usize,
    ncomp: usize,
    max_degree: usize,
    index: Arc<MonomialIndex>,
    echelon: Echelon<S>,
}

impl<S: Scalar> TruncatedQuotient<S> {
    /// Quotient by the submodule spanned by `monomial * g` for every generator
    /// tuple `g` (length `ncomp`, jets in `nvars` variables) and every monomial.
    pub fn new(nvars: usize, ncomp: usize, generators: &[Vec<JetPoly<S>>], max_degree: usize) -> Self {
        let index = MonomialIndex::get(nvars, max_degree);
        let mut echelon = Echelon::new(index.len() * ncomp);
        let gens: Vec<(usize, &Vec<JetPoly<S>>)> = generators
            .iter()
            .filter_map(|g| {
                debug_assert_eq!(g.len(), ncomp);
                let ord = g.iter().filter_map(JetPoly::min_degree).min()?;
                (ord <= max_degree).then_some((ord, g))
            })
            .collect();
        // low-degree multipliers first
        for d in 0..=max_degree {
            for &(ord, g) in &gens {
                if ord + d > max_degree {
                    continue;
                }
                for mi in index.degree_range(d) {
                    let m = index.monomial(mi);
                    let row = Self::row_of(&index, ncomp, max_degree, g, m);
                    echelon.insert(row);
                }
            }
        }
        TruncatedQuotient { nvars, ncomp, max_degree, index, echelon }
    }

    fn row_of(index: &MonomialIndex, ncomp: usize, max_degree: usize, g: &[JetPoly<S>], m: &Monomial) -> SparseRow<S> {
        let shift = m.degree();
        let mut row: SparseRow<S> = Vec::new();
        for (c, comp) in g.iter().enumerate() {
            for (e, coeff) in comp.terms() {
                if e.degree() + shift > max_degree {
                    continue;
                }
                let i = index.index_of(&e.mul(m)).expect("monomial within truncation");
                row.push((i * ncomp + c, coeff.clone()));
            }
        }
        row.sort_by_key(|e| e.0);
        row
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Quotient dimension modulo `m^{n+1}` for `n <= max_degree`.
    pub fn dim_up_to(&self, n: usize) -> usize {
        let cols = self.index.count_up_to(n) * self.ncomp;
        (0..cols).filter(|&c| !self.echelon.is_pivot(c)).count()
    }

    /// Basis counts per degree `0..=n`.
    pub fn hilbert_up_to(&self, n: usize) -> Vec<usize> {
        (0..=n.min(self.max_degree))
            .map(|d| {
                self.index
                    .degree_range(d)
                    .flat_map(|i| (0..self.ncomp).map(move |c| i * self.ncomp + c))
                    .filter(|&c| !self.echelon.is_pivot(c))
                    .count()
            })
            .collect()
    }

    /// Monomial basis elements of degree at most `n`.
    pub fn basis_up_to(&self, n: usize) -> Vec<BasisElement> {
        let cols = self.index.count_up_to(n) * self.ncomp;
        (0..cols)
            .filter(|&c| !self.echelon.is_pivot(c))
            .map(|c| BasisElement { monomial: self.index.monomial(c / self.ncomp).clone(), component: c % self.ncomp })
            .collect()
    }

    /// Smallest `n < max_degree` with `dim_up_to(n) == dim_up_to(n + 1)`.
    pub fn stable_order(&self) -> Option<usize> {
        let dims: Vec<usize> = (0..=self.max_degree).map(|n| self.dim_up_to(n)).collect();
        (0..self.max_degree).find(|&n| dims[n] == dims[n + 1])
    }

    /// Sparse vector of a tuple of jets (terms above `max_degree` dropped).
    pub fn vector(&self, tuple: &[JetPoly<S>]) -> SparseRow<S> {
        Self::row_of(&self.index, self.ncomp, self.max_degree, tuple, &Monomial::one(self.nvars))
    }

    /// Coordinates of `tuple` on the monomial basis.
    pub fn normal_form(&self, tuple: &[JetPoly<S>]) -> Vec<(BasisElement, S)> {
        self.echelon
            .reduce(&self.vector(tuple))
            .into_iter()
            .map(|(c, v)| {
                (BasisElement { monomial: self.index.monomial(c / self.ncomp).clone(), component: c % self.ncomp }, v)
            })
            .collect()
    }

    /// Whether `tuple` lies in the module modulo `m^{max_degree+1}`.
    pub fn contains(&self, tuple: &[JetPoly<S>]) -> bool {
        self.echelon.reduce(&self.vector(tuple)).is_empty()
    }
}

/// Outcome of the adaptive computation.
#[derive(Clone, Debug)]
pub struct Stabilized<S> {
    pub quotient: TruncatedQuotient<S>,
    /// Order at which the dimension stopped growing, if it did.
    pub stable_at: Option<usize>,
    pub cap: usize,
}

impl<S: Scalar> Stabilized<S> {
    pub fn codim(&self) -> Codim {
        match self.stable_at {
            Some(n) => Codim::Finite(self.quotient.dim_up_to(n)),
            None => Codim::Infinite,
        }
    }

    /// Order used for the reported Hilbert function and basis.
    pub fn report_order(&self) -> usize {
        self.stable_at.unwrap_or(self.cap)
    }
}

/// Computes the truncated quotient at orders 4, 5, .. until two consecutive
/// truncations agree or `cap + 2` is reached. The smallest sufficient order
/// is used because exact elimination cost grows quickly with the order.
pub fn stabilize<S: Scalar>(nvars: usize, ncomp: usize, generators: &[Vec<JetPoly<S>>], cap: usize) -> Stabilized<S> {
    let last = cap + 2;
    let mut m = 4.min(last);
    loop {
        let quotient = TruncatedQuotient::new(nvars, ncomp, generators, m);
        let stable_at = quotient.stable_order().filter(|&n| n <= cap + 1);
        if stable_at.is_some() || m >= last {
            return Stabilized { quotient, stable_at, cap };
        }
        m += 1;
    }
}

/// Local algebra `E_s / <f_1, .., f_t>`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalAlgebraReport {
    pub dimension: Codim,
    /// Basis count per degree; truncated at the cap when the dimension is infinite.
    pub hilbert: Vec<usize>,
    pub basis: Vec<Monomial>,
    pub stabilized: bool,
    pub order: usize,
}

fn ideal_generators<S: Scalar>(f: &MapGerm<S>) -> Vec<Vec<JetPoly<S>>> {
    f.components().iter().map(|c| vec![c.clone()]).collect()
}

pub fn local_algebra<S: Scalar>(f: &MapGerm<S>) -> LocalAlgebraReport {
    local_algebra_at(f, default_order(f.source_dim()))
}

/// [`local_algebra`] with an explicit truncation cap.
pub fn local_algebra_at<S: Scalar>(f: &MapGerm<S>, cap: usize) -> LocalAlgebraReport {
    let st = stabilize(f.source_dim(), 1, &ideal_generators(f), cap);
    report(&st)
}

fn report<S: Scalar>(st: &Stabilized<S>) -> LocalAlgebraReport {
    let order = st.report_order();
    LocalAlgebraReport {
        dimension: st.codim(),
        hilbert: st.quotient.hilbert_up_to(order),
        basis: st.quotient.basis_up_to(order).into_iter().map(|b| b.monomial).collect(),
        stabilized: st.stable_at.is_some(),
        order,
    }
}

/// Dimension and Hilbert function of `E_s / (f*(m_t) + m^{n+1})` at a fixed order.
pub fn truncated_local_algebra<S: Scalar>(f: &MapGerm<S>, n: usize) -> (usize, Vec<usize>) {
    let q = TruncatedQuotient::new(f.source_dim(), 1, &ideal_generators(f), n);
    (q.dim_up_to(n), q.hilbert_up_to(n))
}

/// Local algebra of an explicit ideal given by generators in `nvars` variables.
pub fn ideal_quotient<S: Scalar>(nvars: usize, generators: &[JetPoly<S>], cap: usize) -> LocalAlgebraReport {
    let gens: Vec<Vec<JetPoly<S>>> = generators.iter().map(|g| vec![g.clone()]).collect();
    report(&stabilize(nvars, 1, &gens, cap))
}

/// Source dimension minus the rank of the linear part.
pub fn corank<S: Scalar>(f: &MapGerm<S>) -> usize {
    let lin = f.linear_matrix();
    f.source_dim() - crate::linalg::rank(&lin)
}

/// Generators of the extended contact tangent space: the partial-derivative
/// columns and every `f_j` placed in every component.
fn tangent_generators<S: Scalar>(f: &MapGerm<S>) -> Vec<Vec<JetPoly<S>>> {
    let (s, t) = (f.source_dim(), f.target_dim());
    let mut gens = Vec::with_capacity(s + t * t);
    for i in 0..s {
        gens.push(f.components().iter().map(|c| c.derivative(i)).collect());
    }
    for fj in f.components() {
        for c in 0..t {
            let mut tuple = vec![JetPoly::zero(s, fj.order()); t];
            tuple[c] = fj.clone();
            gens.push(tuple);
        }
    }
    gens
}

fn tangent_space<S: Scalar>(f: &MapGerm<S>, cap: usize) -> Stabilized<S> {
    stabilize(f.source_dim(), f.target_dim(), &tangent_generators(f), cap)
}

/// K_e-codimension of `f`.
pub fn ke_codimension<S: Scalar>(f: &MapGerm<S>) -> Codim {
    ke_codimension_at(f, default_order(f.source_dim()))
}

pub fn ke_codimension_at<S: Scalar>(f: &MapGerm<S>, cap: usize) -> Codim {
    if f.target_dim() == 0 {
        return Codim::Finite(0);
    }
    tangent_space(f, cap).codim()
}

/// Monomial `t`-tuples spanning a complement of the extended tangent space.
/// Tuples may have a constant term, so they are returned as plain jet lists.
pub fn miniversal_basis<S: Scalar>(f: &MapGerm<S>) -> Result<Vec<Vec<JetPoly<S>>>> {
    let st = tangent_space(f, default_order(f.source_dim()));
    let Some(n) = st.stable_at else {
        return Err(Error::Infinite);
    };
    let (s, t) = (f.source_dim(), f.target_dim());
    Ok(st
        .quotient
        .basis_up_to(n)
        .into_iter()
        .map(|b| {
            let mut tuple = vec![JetPoly::zero(s, f.order()); t];
            tuple[b.component] = JetPoly::monomial(s, f.order(), b.monomial, S::one());
            tuple
        })
        .collect())
}

/// Truncated composition `f ∘ g`.
pub fn jet_compose<S: Scalar>(f: &MapGerm<S>, g: &MapGerm<S>) -> Result<MapGerm<S>> {
    f.compose(g)
}

/// Splits off the regular part of `f`: returns a germ
/// `(R^{s-r}, 0) -> (R^{t-r}, 0)` with zero linear part and the same local
/// algebra, where `r` is the rank of the linear part. A submersion gives
/// [`Error::Regular`].
pub fn rank0_reduce<S: Scalar>(f: &MapGerm<S>) -> Result<MapGerm<S>> {
    let (s, t, order) = (f.source_dim(), f.target_dim(), f.order());
    // target row operations: [L | I] -> [rref(L) | T]
    let lin = f.linear_matrix();
    let mut aug: Vec<Vec<S>> = lin
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..t).map(|j| if i == j { S::one() } else { S::zero() }));
            r
        })
        .collect();
    let pivots: Vec<usize> = rref(&mut aug).into_iter().filter(|&c| c < s).collect();
    let r = pivots.len();
    if r == t {
        return Err(Error::Regular);
    }
    let g: Vec<JetPoly<S>> = aug
        .iter()
        .map(|row| {
            let mut acc = JetPoly::zero(s, order);
            for (j, coeff) in row[s..].iter().enumerate() {
                if !coeff.is_negligible() {
                    acc = &acc + &f.component(j).scale(coeff);
                }
            }
            acc
        })
        .collect();
    let free: Vec<usize> = (0..s).filter(|j| !pivots.contains(j)).collect();
    let w = free.len();
    let mut solved: Vec<JetPoly<S>> = vec![JetPoly::zero(w, order); r];
    let substitution = |solved: &[JetPoly<S>]| -> Vec<JetPoly<S>> {
        (0..s)
            .map(|j| match pivots.iter().position(|&p| p == j) {
                Some(i) => solved[i].clone(),
                None => JetPoly::var(w, order, free.iter().position(|&c| c == j).expect("free variable")),
            })
            .collect()
    };
    // fixed point of y_p = y_p - g_p(y_p, w); each pass fixes one more degree
    for _ in 0..=order {
        let subs = substitution(&solved);
        let next: Vec<JetPoly<S>> = (0..r).map(|i| &solved[i] - &g[i].compose(&subs)).collect();
        if next == solved {
            break;
        }
        solved = next;
    }
    let subs = substitution(&solved);
    let theta: Vec<JetPoly<S>> = g[r..].iter().map(|gi| gi.compose(&subs)).collect();
    MapGerm::new(w, order, theta)
}

/// Contact move `f ↦ A · (f ∘ φ)` with `φ` a jet diffeomorphism fixing the
/// origin and `A` a matrix of function germs invertible at 0.
#[derive(Clone, Debug)]
pub struct KMove<S> {
    pub phi: MapGerm<S>,
    pub a: Vec<Vec<JetPoly<S>>>,
}

impl<S: Scalar> KMove<S> {
    pub fn identity(s: usize, t: usize, order: usize) -> Self {
        let a = (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| if i == j { JetPoly::constant(s, order, S::one()) } else { JetPoly::zero(s, order) })
                    .collect()
            })
            .collect();
        KMove { phi: MapGerm::identity(s, order), a }
    }

    /// Deterministic random move with small integer coefficients.
    pub fn random(s: usize, t: usize, order: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi_lin = random_invertible(s, &mut rng);
        let a0 = random_invertible(t, &mut rng);
        let int = |v: i64| S::from_i64(v).expect("small integer");
        let quadratic = MonomialIndex::get(s, 3);
        let phi: Vec<JetPoly<S>> = (0..s)
            .map(|i| {
                let mut terms: Vec<(Monomial, S)> =
                    (0..s).map(|j| (Monomial::var(s, j), int(phi_lin[i][j]))).collect();
                for d in 2..=3 {
                    for mi in quadratic.degree_range(d) {
                        if rng.gen_bool(0.4) {
                            terms.push((quadratic.monomial(mi).clone(), int(rng.gen_range(-2..=2))));
                        }
                    }
                }
                JetPoly::from_terms(s, order, terms)
            })
            .collect();
        let a = (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| {
                        let mut terms = vec![(Monomial::one(s), int(a0[i][j]))];
                        for d in 1..=2 {
                            for mi in quadratic.degree_range(d) {
                                if rng.gen_bool(0.4) {
                                    terms.push((quadratic.monomial(mi).clone(), int(rng.gen_range(-2..=2))));
                                }
                            }
                        }
                        JetPoly::from_terms(s, order, terms)
                    })
                    .collect()
            })
            .collect();
        KMove { phi: MapGerm::new(s, order, phi).expect("origin preserving"), a }
    }

    pub fn apply(&self, f: &MapGerm<S>) -> Result<MapGerm<S>> {
        let g = f.compose(&self.phi)?;
        let (s, t) = (g.source_dim(), g.target_dim());
        if self.a.len() != t {
            return Err(Error::DimensionMismatch(format!("move acts on {} components, germ has {t}", self.a.len())));
        }
        let comps = self
            .a
            .iter()
            .map(|row| {
                row.iter().zip(g.components()).fold(JetPoly::zero(s, g.order()), |acc, (aij, gj)| &acc + &(aij * gj))
            })
            .collect();
        MapGerm::new(s, g.order(), comps)
    }
}

/// Product of unit lower and unit upper triangular integer matrices with a
/// diagonal of ±1 and 2 in between.
fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut lower = vec![vec![0i64; n]; n];
    let mut upper = vec![vec![0i64; n]; n];
    for i in 0..n {
        lower[i][i] = 1;
        upper[i][i] = [1, -1, 2][rng.gen_range(0..3)];
        for j in 0..i {
            lower[i][j] = rng.gen_range(-1..=1);
        }
        for j in i + 1..n {
            upper[i][j] = rng.gen_range(-1..=1);
        }
    }
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| lower[i][k] * upper[k][j]).sum()).collect()).collect()
}

/// `f` after a seeded random contact move, truncated at `f.order()`.
pub fn random_k_move<S: Scalar>(f: &MapGerm<S>, seed: u64) -> MapGerm<S> {
    KMove::random(f.source_dim(), f.target_dim(), f.order(), seed).apply(f).expect("shapes agree")
}

/// Signature of the bilinear form `φ(ab)` on `Q = E_s / <generators>`, where
/// `φ` is a linear functional positive on the class of `socle`. For `s`
/// generators with finite quotient and `socle` their Jacobian determinant,
/// the signature is the local degree of the generator map.
pub fn ekl_signature<S: Scalar>(nvars: usize, generators: &[JetPoly<S>], socle: &JetPoly<S>, cap: usize) -> Option<i64> {
    let gens: Vec<Vec<JetPoly<S>>> = generators.iter().map(|g| vec![g.clone()]).collect();
    let st = stabilize(nvars, 1, &gens, cap);
    let n = st.stable_at?;
    // m^{n+1} lies in the ideal, so a quotient truncated at n + 1 is exact
    let q = if st.quotient.max_degree() > n { st.quotient } else { TruncatedQuotient::new(nvars, 1, &gens, n + 1) };
    let basis: Vec<Monomial> = q.basis_up_to(n).into_iter().map(|b| b.monomial).collect();
    let order = q.max_degree();
    let coords = |p: &JetPoly<S>| q.normal_form(&[p.with_order(order)]);
    let socle_nf = coords(socle);
    let (key, lead) = socle_nf.iter().max_by_key(|(b, _)| b.clone())?.clone();
    let sign = if lead > S::zero() { S::one() } else { -S::one() };
    let functional = |p: &JetPoly<S>| -> S {
        coords(p).into_iter().find(|(b, _)| *b == key).map(|(_, v)| v * sign.clone()).unwrap_or_else(S::zero)
    };
    let dim = basis.len();
    let mut form = vec![vec![S::zero(); dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let prod = JetPoly::monomial(nvars, order, basis[i].mul(&basis[j]), S::one());
            let v = functional(&prod);
            form[i][j] = v.clone();
            form[j][i] = v;
        }
    }
    Some(symmetric_signature(&form))
}

/// Local degree of an equidimensional germ with finite local algebra.
pub fn local_degree<S: Scalar>(f: &MapGerm<S>) -> Option<i64> {
    let s = f.source_dim();
    if f.target_dim() != s {
        return None;
    }
    let jac = f.jacobian();
    let det = poly_determinant(&jac, s, f.order());
    ekl_signature(s, f.components(), &det, default_order(s))
}

/// Index of the gradient field of a function germ at an isolated critical point.
pub fn gradient_index<S: Scalar>(f: &JetPoly<S>) -> Option<i64> {
    let s = f.nvars();
    let grad: Vec<JetPoly<S>> = (0..s).map(|i| f.derivative(i)).collect();
    let hess: Vec<Vec<JetPoly<S>>> = grad.iter().map(|g| (0..s).map(|j| g.derivative(j)).collect()).collect();
    let det = poly_determinant(&hess, s, f.order());
    ekl_signature(s, &grad, &det, default_order(s))
}

/// Determinant of a square matrix of jets by cofactor expansion.
pub fn poly_determinant<S: Scalar>(m: &[Vec<JetPoly<S>>], nvars: usize, order: usize) -> JetPoly<S> {
    let n = m.len();
    if n == 0 {
        return JetPoly::constant(nvars, order, S::one());
    }
    if n == 1 {
        return m[0][0].with_order(order);
    }
    let mut acc = JetPoly::zero(nvars, order);
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<JetPoly<S>>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()).collect();
        let term = entry * &poly_determinant(&minor, nvars, order);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Symmetric matrix of the quadratic part of a jet (`q(y) = y^T H y`).
pub fn quadratic_form<S: Scalar>(p: &JetPoly<S>) -> Vec<Vec<S>> {
    let s = p.nvars();
    let two = S::one() + S::one();
    let mut h = vec![vec![S::zero(); s]; s];
    for (m, c) in p.terms() {
        if m.degree() != 2 {
            continue;
        }
        let idx: Vec<usize> = m.exponents().iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            h[i][i] = c.clone();
        } else {
            h[i][j] = c.clone() / two.clone();
            h[j][i] = c.clone() / two.clone();
        }
    }
    h
}

/// Corank of the Hessian of a function germ (quadratic part).
pub fn hessian_corank<S: Scalar>(p: &JetPoly<S>) -> usize {
    p.nvars() - crate::linalg::rank(&quadratic_form(p))
}

pub fn matrix_determinant<S: Scalar>(m: &[Vec<S>]) -> S {
    determinant(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::poly;
    use crate::{Germ, Jet, Rational};

    fn germ(s: usize, order: usize, comps: &[&[(i64, &[u16])]]) -> Germ {
        MapGerm::new(s, order, comps.iter().map(|c| poly(s, order, c)).collect()).unwrap()
    }

    fn a_mu(mu: usize) -> Germ {
        germ(1, 12, &[&[(1, &[(mu + 1) as u16])]])
    }

    #[test]
    fn compose_examples() {
        let f = germ(1, 3, &[&[(1, &[2])]]);
        let g = germ(1, 3, &[&[(1, &[1]), (1, &[2])]]);
        assert_eq!(jet_compose(&f, &g).unwrap(), germ(1, 3, &[&[(1, &[2]), (2, &[3])]]));
        let f = germ(1, 4, &[&[(1, &[3])]]);
        let g = germ(1, 4, &[&[(2, &[1])]]);
        assert_eq!(jet_compose(&f, &g).unwrap(), germ(1, 4, &[&[(8, &[3])]]));
        let id = MapGerm::identity(2, 5);
        let g = germ(2, 4, &[&[(1, &[1, 1]), (3, &[0, 3])], &[(1, &[1, 0])]]);
        assert_eq!(jet_compose(&id, &g).unwrap(), g);
        assert!(jet_compose(&f, &id).is_err());
    }

    #[test]
    fn local_algebra_examples() {
        let r = local_algebra(&germ(1, 12, &[&[(1, &[3])]]));
        assert_eq!(r.dimension, Codim::Finite(3));
        assert_eq!(r.basis, vec![Monomial(vec![0]), Monomial(vec![1]), Monomial(vec![2])]);
        assert!(r.stabilized);
        let r = local_algebra(&germ(2, 12, &[&[(1, &[1, 1])], &[(1, &[2, 0]), (1, &[0, 2])]]));
        assert_eq!(r.dimension, Codim::Finite(4));
        let shown: Vec<Vec<u16>> = r.basis.iter().map(|m| m.0.clone()).collect();
        assert_eq!(shown, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![2, 0]]);
        assert_eq!(r.hilbert, vec![1, 2, 1]);
        let r = local_algebra(&germ(1, 12, &[&[]]));
        assert_eq!(r.dimension, Codim::Infinite);
        assert!(!r.stabilized);
    }

    #[test]
    fn corank_examples() {
        assert_eq!(corank(&germ(2, 6, &[&[(1, &[1, 1])], &[(1, &[2, 0]), (-1, &[0, 2])]])), 2);
        assert_eq!(corank(&germ(2, 6, &[&[(1, &[1, 0])], &[(1, &[0, 3])]])), 1);
        assert_eq!(corank(&MapGerm::<Rational>::identity(3, 4)), 0);
    }

    #[test]
    fn codimension_examples() {
        assert_eq!(ke_codimension(&a_mu(1)), Codim::Finite(1));
        assert_eq!(ke_codimension(&a_mu(2)), Codim::Finite(2));
        let d4 = germ(2, 12, &[&[(1, &[2, 1]), (1, &[0, 3])]]);
        assert_eq!(ke_codimension(&d4), Codim::Finite(4));
        for mu in 1..=8 {
            assert_eq!(ke_codimension(&a_mu(mu)), Codim::Finite(mu), "A{mu}");
        }
        assert_eq!(ke_codimension(&germ(2, 12, &[&[(1, &[2, 0])]])), Codim::Infinite);
    }

    #[test]
    fn miniversal_bases_complement_the_tangent_space() {
        let y2 = miniversal_basis(&a_mu(1)).unwrap();
        assert_eq!(y2.len(), 1);
        assert_eq!(y2[0][0], Jet::constant(1, 12, Rational::from_integer(1.into())));
        let y3 = miniversal_basis(&a_mu(2)).unwrap();
        assert_eq!(y3.len(), 2);
        let c22 = germ(2, 12, &[&[(1, &[1, 1])], &[(1, &[2, 0]), (1, &[0, 2])]]);
        let basis = miniversal_basis(&c22).unwrap();
        assert_eq!(basis.len(), 4);
        // tangent space plus basis spans everything modulo m^6
        let mut gens = tangent_generators(&c22);
        let q = TruncatedQuotient::new(2, 2, &gens, 6);
        assert_eq!(q.dim_up_to(6), 4);
        for b in &basis {
            assert!(!q.contains(b));
        }
        gens.extend(basis.iter().map(|b| b.iter().map(|p| p.with_order(6)).collect()));
        // constants are not multiplied by monomials here: only their span is added
        let mut e = q.echelon.clone();
        for b in &basis {
            e.insert(q.vector(b));
        }
        assert_eq!(e.rank(), q.index.len() * 2);
        assert!(miniversal_basis(&germ(2, 12, &[&[(1, &[2, 0])]])).is_err());
    }

    #[test]
    fn rank0_reduce_examples() {
        let f = germ(2, 10, &[&[(1, &[1, 0])], &[(1, &[0, 3])]]);
        assert_eq!(rank0_reduce(&f).unwrap(), germ(1, 10, &[&[(1, &[3])]]));
        let f = germ(2, 10, &[&[(1, &[1, 0]), (1, &[0, 2])], &[(1, &[0, 3])]]);
        let theta = rank0_reduce(&f).unwrap();
        assert_eq!(theta.source_dim(), 1);
        assert_eq!(local_algebra(&theta).dimension, Codim::Finite(3));
        assert_eq!(rank0_reduce(&MapGerm::<Rational>::identity(2, 5)), Err(Error::Regular));
        // second component depends on the eliminated variable
        let f = germ(2, 10, &[&[(1, &[1, 0]), (-1, &[0, 2])], &[(1, &[2, 0]), (1, &[0, 3])]]);
        // y1 = y2^2, so theta = y2^4 + y2^3
        assert_eq!(rank0_reduce(&f).unwrap(), germ(1, 10, &[&[(1, &[3]), (1, &[4])]]));
    }

    #[test]
    fn k_move_identity_and_scaling() {
        let f = germ(1, 8, &[&[(1, &[3])]]);
        let mut mv = KMove::identity(1, 1, 8);
        mv.a[0][0] = Jet::constant(1, 8, Rational::from_integer(2.into()));
        assert_eq!(mv.apply(&f).unwrap(), germ(1, 8, &[&[(2, &[3])]]));
        let moved = random_k_move(&f, 7);
        assert_eq!(moved, random_k_move(&f, 7));
        assert_eq!(ke_codimension(&moved), Codim::Finite(2));
    }

    #[test]
    fn local_degree_of_simple_maps() {
        // z -> z^2 on C = R^2 has degree 2
        let sq = germ(2, 12, &[&[(1, &[2, 0]), (-1, &[0, 2])], &[(2, &[1, 1])]]);
        assert_eq!(local_degree(&sq).map(i64::abs), Some(2));
        // gradient of x^2 - y^2 has index -1, of x^2 + y^2 index 1
        assert_eq!(gradient_index(&poly::<Rational>(2, 12, &[(1, &[2, 0]), (-1, &[0, 2])])), Some(-1));
        assert_eq!(gradient_index(&poly::<Rational>(2, 12, &[(1, &[2, 0]), (1, &[0, 2])])), Some(1));
        // x^3 has index 0
        assert_eq!(gradient_index(&poly::<Rational>(1, 12, &[(1, &[3])])), Some(0));
    }
}
