//! Linear algebra over a [`Scalar`] field: sparse incremental echelon forms,
//! dense row reduction, congruence diagonalization and exact univariate
//! polynomials with Sturm root counting.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};


use crate::jet::Monomial;
use crate::scalar::{approximate_rational, to_f64, Scalar};
use num_rational::BigRational;
use num_traits::Zero;

/// Sparse row: strictly increasing column indices with nonzero values.
pub type SparseRow<S> = Vec<(usize, S)>;

/// `scale * row - factor * pivot_row` for sparse rows.
pub fn combine_generic<S: Scalar>(scale: &S, row: &[(usize, S)], factor: &S, pivot_row: &[(usize, S)]) -> SparseRow<S> {
    // scale * row - factor * pivot_row; the leading entries cancel
    let unit = scale.is_one();
    let mut out = Vec::with_capacity(row.len() + pivot_row.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot_row.len() {
        let ci = row.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cj = pivot_row.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        if ci < cj {
            let v = if unit { row[i].1.clone() } else { scale.clone() * row[i].1.clone() };
            out.push((ci, v));
            i += 1;
        } else if cj < ci {
            out.push((cj, -(factor.clone() * pivot_row[j].1.clone())));
            j += 1;
        } else {
            let v = if unit { row[i].1.clone() } else { scale.clone() * row[i].1.clone() } - factor.clone() * pivot_row[j].1.clone();
            if !v.is_negligible() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Row echelon form built one row at a time. The pivot of a row is its
/// lowest column; pivot rows are kept in the form chosen by
/// [`Scalar::normalize_row`].
#[derive(Clone, Debug)]
pub struct Echelon<S> {
    ncols: usize,
    pivot_of_col: Vec<Option<usize>>,
    rows: Vec<SparseRow<S>>,
}

impl<S: Scalar> Echelon<S> {
    pub fn new(ncols: usize) -> Self {
        Echelon { ncols, pivot_of_col: vec![None; ncols], rows: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivot_of_col[col].is_some()
    }

    /// Reduces the leading entries of `row` against existing pivots and keeps
    /// it if anything survives. Returns whether the rank grew.
    pub fn insert(&mut self, mut row: SparseRow<S>) -> bool {
        if S::EXACT && !row.is_empty() {
            S::normalize_row(&mut row);
        }
        loop {
            let Some((col, lead)) = row.first().cloned() else {
                return false;
            };
            match self.pivot_of_col[col] {
                Some(p) => {
                    let prow = &self.rows[p];
                    row = S::combine_rows(&prow[0].1, &row, &lead, prow);
                    if !row.is_empty() && S::EXACT {
                        S::normalize_row(&mut row);
                    }
                }
                None => {
                    S::normalize_row(&mut row);
                    self.pivot_of_col[col] = Some(self.rows.len());
                    self.rows.push(row);
                    return true;
                }
            }
        }
    }

    /// Eliminates every pivot column from `row`, leaving a combination of
    /// non-pivot columns only.
    pub fn reduce(&self, row: &SparseRow<S>) -> SparseRow<S> {
        let mut work: BTreeMap<usize, S> = row.iter().cloned().collect();
        let mut cursor = 0usize;
        loop {
            let next = work.range(cursor..).map(|(c, _)| *c).find(|c| self.pivot_of_col[*c].is_some());
            let Some(col) = next else { break };
            let prow = &self.rows[self.pivot_of_col[col].expect("pivot")];
            let factor = work.remove(&col).expect("present") / prow[0].1.clone();
            for (c, v) in prow.iter().skip(1) {
                let entry = work.entry(*c).or_insert_with(S::zero);
                *entry = entry.clone() - factor.clone() * v.clone();
                if entry.is_negligible() {
                    work.remove(c);
                }
            }
            cursor = col + 1;
        }
        work.into_iter().collect()
    }

    /// Columns that carry no pivot, in increasing order.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|&c| self.pivot_of_col[c].is_none()).collect()
    }
}

/// Monomials in `nvars` variables of degree at most `max_degree`, ordered by
/// degree and then by exponent tuple ascending.
#[derive(Debug)]
pub struct MonomialIndex {
    nvars: usize,
    max_degree: usize,
    monomials: Vec<Monomial>,
    degree_start: Vec<usize>,
    lookup: HashMap<Monomial, usize>,
}

impl MonomialIndex {
    fn build(nvars: usize, max_degree: usize) -> Self {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(max_degree + 2);
        for d in 0..=max_degree {
            degree_start.push(monomials.len());
            let mut level = Vec::new();
            exponents_of_degree(nvars, d, &mut vec![0; nvars], 0, &mut level);
            level.sort();
            monomials.extend(level.into_iter().map(Monomial));
        }
        degree_start.push(monomials.len());
        let lookup = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        MonomialIndex { nvars, max_degree, monomials, degree_start, lookup }
    }

    /// Shared index for `(nvars, max_degree)`.
    pub fn get(nvars: usize, max_degree: usize) -> Arc<MonomialIndex> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialIndex>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("monomial index cache poisoned");
        guard.entry((nvars, max_degree)).or_insert_with(|| Arc::new(MonomialIndex::build(nvars, max_degree))).clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    /// Number of monomials of degree at most `d`.
    pub fn count_up_to(&self, d: usize) -> usize {
        self.degree_start[(d + 1).min(self.max_degree + 1)]
    }

    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

fn exponents_of_degree(nvars: usize, remaining: usize, current: &mut Vec<u16>, pos: usize, out: &mut Vec<Vec<u16>>) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == nvars - 1 {
        current[pos] = remaining as u16;
        out.push(current.clone());
        return;
    }
    for e in 0..=remaining {
        current[pos] = e as u16;
        exponents_of_degree(nvars, remaining - e, current, pos + 1, out);
    }
    current[pos] = 0;
}

/// Reduced row echelon form with largest-magnitude pivoting.
/// Returns the pivot columns.
pub fn rref<S: Scalar>(m: &mut [Vec<S>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .filter(|&i| !m[i][c].is_negligible())
            .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap_or(std::cmp::Ordering::Equal));
        let Some(p) = best else { continue };
        m.swap(r, p);
        let inv = S::one() / m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_negligible() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = f.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<S: Scalar>(m: &[Vec<S>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse<S: Scalar>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let mut aug: Vec<Vec<S>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn determinant<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = S::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_negligible()) else {
            return S::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = det * a[c][c].clone();
        for i in c + 1..n {
            if a[i][c].is_negligible() {
                continue;
            }
            let f = a[i][c].clone() / a[c][c].clone();
            for j in c..n {
                let sub = f.clone() * a[c][j].clone();
                a[i][j] = a[i][j].clone() - sub;
            }
        }
    }
    det
}

/// `(positive, negative, zero)` eigenvalue counts of a symmetric matrix,
/// computed by congruence diagonalization.
pub fn inertia<S: Scalar>(m: &[Vec<S>]) -> (usize, usize, usize) {
    let n = m.len();
    let mut a = m.to_vec();
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // pick a nonzero diagonal entry, or create one from an off-diagonal pair
        let diag = active.iter().copied().find(|&i| !a[i][i].is_negligible());
        let k = match diag {
            Some(k) => k,
            None => {
                let pair = active
                    .iter()
                    .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                    .find(|&(i, j)| i < j && !a[i][j].is_negligible());
                let Some((i, j)) = pair else { break };
                // row/col i += row/col j makes a[i][i] = 2 a[i][j]
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[i][c] = a[i][c].clone() + v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][i] = a[r][i].clone() + v;
                }
                i
            }
        };
        let pivot = a[k][k].clone();
        if pivot > S::zero() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&i| i != k);
        for &i in &active {
            if a[i][k].is_negligible() {
                continue;
            }
            let f = a[i][k].clone() / pivot.clone();
            for c in 0..n {
                let sub = f.clone() * a[k][c].clone();
                a[i][c] = a[i][c].clone() - sub;
            }
            for r in 0..n {
                let sub = f.clone() * a[r][k].clone();
                a[r][i] = a[r][i].clone() - sub;
            }
        }
    }
    (pos, neg, n - pos - neg)
}

/// Signature (positive minus negative count) of a symmetric matrix.
pub fn symmetric_signature<S: Scalar>(m: &[Vec<S>]) -> i64 {
    let (p, n, _) = inertia(m);
    p as i64 - n as i64
}

/// Dense univariate polynomial, coefficients by ascending power, no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly<S>(Vec<S>);

impl<S: Scalar> UniPoly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_negligible()) {
            coeffs.pop();
        }
        UniPoly(coeffs)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn lead(&self) -> S {
        self.0.last().cloned().unwrap_or_else(S::zero)
    }

    pub fn derivative(&self) -> Self {
        UniPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * S::from_usize(i).expect("small degree"))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return UniPoly(Vec::new());
        }
        let mut out = vec![S::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        UniPoly::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        UniPoly::new(
            (0..n)
                .map(|i| {
                    self.0.get(i).cloned().unwrap_or_else(S::zero) + other.0.get(i).cloned().unwrap_or_else(S::zero)
                })
                .collect(),
        )
    }

    pub fn scale(&self, c: &S) -> Self {
        UniPoly::new(self.0.iter().map(|v| v.clone() * c.clone()).collect())
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.0.len() - 1;
        let lead = divisor.lead();
        let mut rem = self.0.clone();
        if rem.len() <= dd {
            return (UniPoly(Vec::new()), self.clone());
        }
        let mut quot = vec![S::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            if c.is_negligible() {
                continue;
            }
            for (j, d) in divisor.0.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - c.clone() * d.clone();
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.lead();
        a.scale(&(S::one() / lead))
    }

    pub fn eval(&self, x: &S) -> S {
        self.0.iter().rev().fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    fn sign_at_pos_inf(&self) -> i32 {
        sign_of(&self.lead())
    }

    fn sign_at_neg_inf(&self) -> i32 {
        let s = sign_of(&self.lead());
        if self.degree().unwrap_or(0).is_multiple_of(2) {
            s
        } else {
            -s
        }
    }

    /// Number of distinct real roots (Sturm sequence over the whole line).
    pub fn count_real_roots(&self) -> usize {
        if self.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            let r = seq[n - 2].div_rem(&seq[n - 1]).1;
            if r.is_zero() {
                break;
            }
            seq.push(r.scale(&-S::one()));
        }
        let changes = |signs: Vec<i32>| {
            let nz: Vec<i32> = signs.into_iter().filter(|&s| s != 0).collect();
            nz.windows(2).filter(|w| w[0] != w[1]).count()
        };
        let at_neg = changes(seq.iter().map(UniPoly::sign_at_neg_inf).collect());
        let at_pos = changes(seq.iter().map(UniPoly::sign_at_pos_inf).collect());
        at_neg - at_pos
    }

    /// Square-free factors `(p_i, i)` with `self = c * Π p_i^i`.
    pub fn squarefree_decomposition(&self) -> Vec<(UniPoly<S>, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        // Yun's algorithm
        let f = self.clone();
        let fp = f.derivative();
        let a0 = f.gcd(&fp);
        let mut b = f.div_rem(&a0).0;
        let mut c = fp.div_rem(&a0).0;
        let mut d = c.add(&b.derivative().scale(&-S::one()));
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = d.div_rem(&a).0;
            d = c.add(&b.derivative().scale(&-S::one()));
            i += 1;
        }
        out
    }
}

fn sign_of<S: Scalar>(v: &S) -> i32 {
    if v.is_negligible() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// Multiplicities of the distinct real roots of `p` (sorted ascending) and the
/// number of non-real roots counted with multiplicity.
/// Rational roots of a squarefree polynomial with rational coefficients,
/// found numerically and confirmed by exact evaluation.
pub fn rational_roots(p: &UniPoly<BigRational>) -> Vec<BigRational> {
    let Some(deg) = p.degree() else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = p.coeffs()[deg].clone();
    let monic: Vec<f64> = p.coeffs().iter().map(|c| to_f64(&(c / &lead))).collect();
    let companion = nalgebra::DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -monic[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<BigRational> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * z.re.abs().max(1.0))
        .map(|z| approximate_rational(z.re, 1e-9, 1_000_000))
        .filter(|r| p.eval(r).is_zero())
        .collect();
    roots.sort();
    roots.dedup();
    roots
}

pub fn real_root_pattern<S: Scalar>(p: &UniPoly<S>) -> (Vec<usize>, usize) {
    let mut mults = Vec::new();
    let mut complex = 0;
    for (factor, m) in p.squarefree_decomposition() {
        let real = factor.count_real_roots();
        mults.extend(std::iter::repeat_n(m, real));
        complex += (factor.degree().unwrap_or(0) - real) * m;
    }
    mults.sort_unstable();
    (mults, complex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn mat(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
    }

    #[test]
    fn monomial_order_is_graded_then_lexicographic() {
        let idx = MonomialIndex::get(2, 2);
        let shown: Vec<Vec<u16>> = idx.monomials().iter().map(|m| m.0.clone()).collect();
        assert_eq!(shown, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(idx.count_up_to(1), 3);
    }

    #[test]
    fn echelon_rank_and_reduction() {
        let mut e = Echelon::<Rational>::new(3);
        assert!(e.insert(vec![(0, q(1)), (1, q(2))]));
        assert!(e.insert(vec![(0, q(2)), (1, q(4)), (2, q(1))]));
        assert!(!e.insert(vec![(0, q(1)), (1, q(2)), (2, q(1))].into_iter().map(|(c, v)| (c, v * q(3))).collect()));
        assert_eq!(e.rank(), 2);
        assert_eq!(e.free_columns(), vec![1]);
        assert_eq!(e.reduce(&vec![(0, q(1)), (2, q(5))]), vec![(1, q(-2))]);
    }

    #[test]
    fn rank_inverse_determinant() {
        let m = mat(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(rank(&m), 2);
        assert_eq!(determinant(&m), q(0));
        let a = mat(&[&[2, 1], &[1, 1]]);
        assert_eq!(inverse(&a), Some(mat(&[&[1, -1], &[-1, 2]])));
        assert_eq!(determinant(&a), q(1));
    }

    #[test]
    fn inertia_handles_zero_diagonal() {
        assert_eq!(inertia(&mat(&[&[0, 1], &[1, 0]])), (1, 1, 0));
        assert_eq!(inertia(&mat(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, -3]])), (1, 1, 1));
        assert_eq!(symmetric_signature(&mat(&[&[2, 1], &[1, 2]])), 2);
    }

    #[test]
    fn sturm_and_squarefree() {
        // (x - 1)^2 (x + 2) (x^2 + 1)
        let p = UniPoly::new(vec![q(-1), q(1)])
            .mul(&UniPoly::new(vec![q(-1), q(1)]))
            .mul(&UniPoly::new(vec![q(2), q(1)]))
            .mul(&UniPoly::new(vec![q(1), q(0), q(1)]));
        assert_eq!(p.count_real_roots(), 2);
        assert_eq!(real_root_pattern(&p), (vec![1, 2], 2));
    }
}
