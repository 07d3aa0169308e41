//! Numerical side: parametrized closed submanifolds, weakly parallel pairs,
//! continuation of the pair set of a plane curve and singularities of the
//! traced λ-equidistants.
//!
//! Parameters of periodic manifolds live on `[0, 2π)` per coordinate and all
//! distances between parameters are toroidal.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::classify::{recognize, GermClass};
use crate::contact::{contact_map, reduce_to_theta, GraphPair};
use crate::error::{Error, Result};
use crate::jet::{JetPoly, MapGerm, Monomial};
use crate::linalg::MonomialIndex;
use crate::scalar::approximate_rational;
use crate::{Germ, Rational};

/// Relative singular value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-8;
/// Largest accepted condition number of the adapted frame.
pub const COND_LIMIT: f64 = 1e8;
/// Relative size below which Taylor coefficients of θ are snapped to zero.
pub const SNAP_TOL: f64 = 1e-6;
/// Highest derivative order available for sampled curves.
pub const MAX_SAMPLE_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldKind {
    /// `(a cos θ, b sin θ)`.
    Ellipse { a: f64, b: f64 },
    /// Polar curve `r(θ) = 1 + Σ_j a_j cos(jθ) + b_j sin(jθ)`, `j = 1, 2, ..`
    /// (`a[0]` is the coefficient of `cos θ`).
    FourierOval { a: Vec<f64>, b: Vec<f64> },
    /// Torus of revolution in `R^3`.
    Torus { major: f64, minor: f64 },
    /// Graph `x ↦ (x, f(x))` over `[-1, 1]^n`.
    Graph { f: Vec<JetPoly<f64>> },
    /// Closed curve sampled at `2π i / N`.
    Samples { points: Vec<Vec<f64>> },
}

/// Immersion `R^n -> R^q` with exact derivatives for the builtin families.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricManifold {
    n: usize,
    q: usize,
    kind: ManifoldKind,
    // nodal derivatives of sampled curves, indexed [order][node]
    sample_derivs: Vec<Vec<Vec<f64>>>,
}

fn dcos(x: f64, m: usize) -> f64 {
    (x + m as f64 * FRAC_PI_2).cos()
}

fn dsin(x: f64, m: usize) -> f64 {
    (x + m as f64 * FRAC_PI_2).sin()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_dims(n: usize, q: usize) -> Result<()> {
    if q <= n || q > 2 * n {
        return Err(Error::Domain(format!("need n < q <= 2n, got n = {n}, q = {q}")));
    }
    Ok(())
}

impl ParametricManifold {
    fn build(n: usize, q: usize, kind: ManifoldKind) -> Result<Self> {
        check_dims(n, q)?;
        Ok(ParametricManifold { n, q, kind, sample_derivs: Vec::new() })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain("ellipse semi-axes must be positive".into()));
        }
        Self::build(1, 2, ManifoldKind::Ellipse { a, b })
    }

    pub fn circle(r: f64) -> Result<Self> {
        Self::ellipse(r, r)
    }

    pub fn fourier_oval(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let m = Self::build(1, 2, ManifoldKind::FourierOval { a, b })?;
        let positive = (0..720).all(|i| m.radius(TAU * i as f64 / 720.0, 0) > 0.0);
        if !positive {
            return Err(Error::Domain("fourier oval radius must stay positive".into()));
        }
        Ok(m)
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(major > minor && minor > 0.0) {
            return Err(Error::Domain("torus needs major > minor > 0".into()));
        }
        Self::build(2, 3, ManifoldKind::Torus { major, minor })
    }

    /// Graph of polynomial functions of `n` variables.
    pub fn graph(f: Vec<JetPoly<f64>>) -> Result<Self> {
        let n = f.first().map(JetPoly::nvars).ok_or_else(|| Error::Domain("graph needs a function".into()))?;
        if f.iter().any(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch("graph functions must share their variables".into()));
        }
        // keep every term: the jets are polynomials, not truncations
        let f = f.into_iter().map(|p| p.with_order(p.max_degree().unwrap_or(0).max(1) + 8)).collect::<Vec<_>>();
        Self::build(n, n + f.len(), ManifoldKind::Graph { f })
    }

    /// Closed curve from uniform periodic samples. Derivatives at the nodes
    /// come from the five-point stencil
    /// `f'(s_i) ≈ (f_{i-2} - 8 f_{i-1} + 8 f_{i+1} - f_{i+2}) / (12 h)`
    /// applied repeatedly; values between nodes use four-point Lagrange
    /// interpolation.
    pub fn samples(points: Vec<Vec<f64>>) -> Result<Self> {
        let count = points.len();
        if count < 8 {
            return Err(Error::Domain("need at least 8 samples".into()));
        }
        let q = points[0].len();
        if points.iter().any(|p| p.len() != q) {
            return Err(Error::DimensionMismatch("samples must have equal length".into()));
        }
        let mut m = Self::build(1, q, ManifoldKind::Samples { points: points.clone() })?;
        let h = TAU / count as f64;
        let mut derivs = vec![points];
        for _ in 0..MAX_SAMPLE_ORDER {
            let prev = derivs.last().expect("nonempty");
            let at = |i: isize| &prev[i.rem_euclid(count as isize) as usize];
            let next: Vec<Vec<f64>> = (0..count as isize)
                .map(|i| {
                    (0..q)
                        .map(|c| (at(i - 2)[c] - 8.0 * at(i - 1)[c] + 8.0 * at(i + 1)[c] - at(i + 2)[c]) / (12.0 * h))
                        .collect()
                })
                .collect();
            derivs.push(next);
        }
        m.sample_derivs = derivs;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    /// Per-coordinate periodicity of the parameter domain.
    pub fn periodic(&self) -> Vec<bool> {
        let p = !matches!(self.kind, ManifoldKind::Graph { .. });
        vec![p; self.n]
    }

    /// Parameter box; periodic coordinates use `[0, 2π)`.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        self.periodic().iter().map(|&p| if p { (0.0, TAU) } else { (-1.0, 1.0) }).collect()
    }

    fn radius(&self, theta: f64, m: usize) -> f64 {
        let ManifoldKind::FourierOval { a, b } = &self.kind else {
            return 0.0;
        };
        let mut r = if m == 0 { 1.0 } else { 0.0 };
        for (i, c) in a.iter().enumerate() {
            let j = (i + 1) as f64;
            r += c * j.powi(m as i32) * dcos(j * theta, m);
        }
        for (i, c) in b.iter().enumerate() {
            let j = (i + 1) as f64;
            r += c * j.powi(m as i32) * dsin(j * theta, m);
        }
        r
    }

    /// Mixed partial derivative `∂^alpha ι(p)`; `alpha = 0` gives the point.
    pub fn derivative(&self, p: &[f64], alpha: &[usize]) -> Vec<f64> {
        debug_assert_eq!(p.len(), self.n);
        match &self.kind {
            ManifoldKind::Ellipse { a, b } => vec![a * dcos(p[0], alpha[0]), b * dsin(p[0], alpha[0])],
            ManifoldKind::FourierOval { .. } => {
                let m = alpha[0];
                let (mut x, mut y) = (0.0, 0.0);
                for i in 0..=m {
                    let w = binomial(m, i) * self.radius(p[0], i);
                    x += w * dcos(p[0], m - i);
                    y += w * dsin(p[0], m - i);
                }
                vec![x, y]
            }
            ManifoldKind::Torus { major, minor } => {
                let (i, j) = (alpha[0], alpha[1]);
                let ring = if j == 0 { *major } else { 0.0 } + minor * dcos(p[1], j);
                let z = if i == 0 { minor * dsin(p[1], j) } else { 0.0 };
                vec![dcos(p[0], i) * ring, dsin(p[0], i) * ring, z]
            }
            ManifoldKind::Graph { f } => {
                let total: usize = alpha.iter().sum();
                let mut out: Vec<f64> = (0..self.n)
                    .map(|i| match total {
                        0 => p[i],
                        1 if alpha[i] == 1 => 1.0,
                        _ => 0.0,
                    })
                    .collect();
                for g in f {
                    let mut d = g.clone();
                    for (i, &e) in alpha.iter().enumerate() {
                        for _ in 0..e {
                            d = d.derivative(i).with_order(g.order());
                        }
                    }
                    out.push(d.eval(p));
                }
                out
            }
            ManifoldKind::Samples { points } => {
                let m = alpha[0];
                if m > MAX_SAMPLE_ORDER {
                    return vec![0.0; self.q];
                }
                let count = points.len();
                let nodal = &self.sample_derivs[m];
                let x = p[0].rem_euclid(TAU) / TAU * count as f64;
                let base = x.floor() as isize;
                let frac = x - base as f64;
                let mut out = vec![0.0; self.q];
                // four-point Lagrange on nodes base-1 .. base+2
                for (k, off) in (-1isize..=2).enumerate() {
                    let nodes = [-1.0, 0.0, 1.0, 2.0];
                    let w: f64 = (0..4).filter(|&o| o != k).map(|o| (frac - nodes[o]) / (nodes[k] - nodes[o])).product();
                    let v = &nodal[(base + off).rem_euclid(count as isize) as usize];
                    for c in 0..self.q {
                        out[c] += w * v[c];
                    }
                }
                out
            }
        }
    }

    pub fn point(&self, p: &[f64]) -> Vec<f64> {
        self.derivative(p, &vec![0; self.n])
    }

    fn unit(&self, i: usize, order: usize) -> Vec<usize> {
        let mut a = vec![0; self.n];
        a[i] = order;
        a
    }

    /// Taylor expansion of `ι(p + h) - ι(p)` in `h`, one jet per ambient coordinate.
    pub fn taylor(&self, p: &[f64], order: usize) -> Vec<JetPoly<f64>> {
        let index = MonomialIndex::get(self.n, order);
        let mut coeffs: Vec<Vec<(Monomial, f64)>> = vec![Vec::new(); self.q];
        for m in index.monomials().iter().skip(1) {
            let alpha: Vec<usize> = m.exponents().iter().map(|&e| e as usize).collect();
            let fact: f64 = alpha.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
            let d = self.derivative(p, &alpha);
            for c in 0..self.q {
                coeffs[c].push((m.clone(), d[c] / fact));
            }
        }
        coeffs.into_iter().map(|terms| JetPoly::from_terms(self.n, order, terms)).collect()
    }
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn numerical_rank(sv: &[f64]) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// `n × q` matrix whose rows are the partial derivatives at `p`.
pub fn tangent_frame(m: &ParametricManifold, p: &[f64]) -> Result<DMatrix<f64>> {
    if p.len() != m.n {
        return Err(Error::DimensionMismatch(format!("expected {} parameters, got {}", m.n, p.len())));
    }
    let rows: Vec<Vec<f64>> = (0..m.n).map(|i| m.derivative(p, &m.unit(i, 1))).collect();
    let frame = DMatrix::from_fn(m.n, m.q, |i, j| rows[i][j]);
    if numerical_rank(&singular_values(&frame)) < m.n {
        return Err(Error::ImmersionFailure(p.to_vec()));
    }
    Ok(frame)
}

fn stacked(m: &ParametricManifold, s: &[f64], t: &[f64]) -> Result<DMatrix<f64>> {
    let (fa, fb) = (tangent_frame(m, s)?, tangent_frame(m, t)?);
    Ok(DMatrix::from_fn(2 * m.n, m.q, |i, j| if i < m.n { fa[(i, j)] } else { fb[(i - m.n, j)] }))
}

/// Toroidal distance between parameter points.
pub fn param_distance(m: &ParametricManifold, s: &[f64], t: &[f64]) -> f64 {
    let periodic = m.periodic();
    s.iter()
        .zip(t)
        .zip(periodic)
        .map(|((a, b), p)| {
            let d = (a - b).abs();
            let d = if p { d.rem_euclid(TAU).min(TAU - d.rem_euclid(TAU)) } else { d };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Degree of parallelism `k` and weak-parallelism codimension of the pair
/// `(ι(s), ι(t))`, from the numerical rank `r` of the stacked frames:
/// `k = 2n - r`, `codim = q - r`.
pub fn parallelism(m: &ParametricManifold, s: &[f64], t: &[f64]) -> Result<(usize, usize)> {
    if param_distance(m, s, t) <= 1e-12 {
        return Err(Error::Domain("a pair needs two distinct parameters".into()));
    }
    let r = numerical_rank(&singular_values(&stacked(m, s, t)?));
    let (k, codim) = (2 * m.n - r, m.q - r);
    debug_assert_eq!(2 * m.n - k, m.q - codim);
    Ok((k, codim))
}

/// Point of the weakly parallel set.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPoint {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub deg_k: usize,
    pub codim: usize,
    /// Norm of the vector of maximal minors of the stacked frames.
    pub residual: f64,
}

impl PairPoint {
    pub fn new(m: &ParametricManifold, s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let (deg_k, codim) = parallelism(m, &s, &t)?;
        let residual = norm(&minors(m, &s, &t)?);
        Ok(PairPoint { a: m.point(&s), b: m.point(&t), s, t, deg_k, codim, residual })
    }

    /// `λ a + (1 - λ) b`.
    pub fn lambda_point(&self, lambda: f64) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// All `q × q` minors of the stacked `2n × q` frame; they vanish exactly on
/// the weakly parallel pairs.
pub fn minors(m: &ParametricManifold, s: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let st = stacked_raw(m, s, t);
    Ok(combinations(2 * m.n, m.q)
        .into_iter()
        .map(|rows| DMatrix::from_fn(m.q, m.q, |i, j| st[(rows[i], j)]).determinant())
        .collect())
}

// stacked frame without the immersion check, for inner loops
fn stacked_raw(m: &ParametricManifold, s: &[f64], t: &[f64]) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..m.n)
        .map(|i| m.derivative(s, &m.unit(i, 1)))
        .chain((0..m.n).map(|i| m.derivative(t, &m.unit(i, 1))))
        .collect();
    DMatrix::from_fn(2 * m.n, m.q, |i, j| rows[i][j])
}

/// `g(s, t) = det[T(s); T(t)]` for a plane curve with its gradient.
fn curve_g(m: &ParametricManifold, s: f64, t: f64) -> (f64, f64, f64) {
    let (ts, tt) = (m.derivative(&[s], &[1]), m.derivative(&[t], &[1]));
    let (as_, at) = (m.derivative(&[s], &[2]), m.derivative(&[t], &[2]));
    let det = |u: &[f64], v: &[f64]| u[0] * v[1] - u[1] * v[0];
    (det(&ts, &tt), det(&as_, &tt), det(&ts, &at))
}

// distance on the (s, t) torus of a closed curve
fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = |x: f64| {
        let x = x.rem_euclid(TAU);
        x.min(TAU - x)
    };
    d(a[0] - b[0]).hypot(d(a[1] - b[1]))
}

fn band_distance(m: &ParametricManifold, s: f64, t: f64) -> f64 {
    param_distance(m, &[s], &[t])
}

fn gauss_newton(m: &ParametricManifold, start: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = m.n;
    let f = |x: &[f64]| minors(m, &x[..n], &x[n..]).ok();
    let mut x = start;
    for _ in 0..30 {
        let r = f(&x)?;
        if norm(&r) < tol {
            return Some(x);
        }
        let h = 1e-6;
        let jac = DMatrix::from_fn(r.len(), 2 * n, |_, _| 0.0);
        let mut jac = jac;
        for j in 0..2 * n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (f(&xp)?, f(&xm)?);
            for i in 0..r.len() {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let step = jac.svd(true, true).solve(&DVector::from_vec(r.clone()), 1e-10).ok()?;
        for j in 0..2 * n {
            x[j] -= step[j];
        }
    }
    let r = f(&x)?;
    (norm(&r) < tol).then_some(x)
}

/// Weakly parallel pairs found on a `grid^(2n)` parameter grid outside the
/// diagonal band of width ten grid spacings, refined to `|residual| < tol`.
/// Plane curves use sign changes of `g` along grid edges; surfaces use
/// Gauss-Newton on the maximal minors from grid points of small residual.
pub fn find_parallel_pairs(m: &ParametricManifold, grid: usize, tol: f64) -> Result<Vec<PairPoint>> {
    if grid < 8 {
        return Err(Error::Domain("grid density must be at least 8".into()));
    }
    match m.n {
        1 => {
            let h = TAU / grid as f64;
            let pts = curve_seeds(m, grid, 10.0 * h, tol)?;
            pts.into_iter().map(|(s, t)| PairPoint::new(m, vec![s], vec![t])).collect()
        }
        2 => surface_pairs(m, grid, tol),
        _ => Err(Error::Domain("pair search is implemented for n = 1 and n = 2".into())),
    }
}

fn curve_seeds(m: &ParametricManifold, grid: usize, delta: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    let h = TAU / grid as f64;
    let params: Vec<f64> = (0..grid).map(|i| i as f64 * h).collect();
    let frames: Vec<Vec<f64>> = params.iter().map(|&s| m.derivative(&[s], &[1])).collect();
    for (s, f) in params.iter().zip(&frames) {
        if norm(f) <= 1e-12 {
            return Err(Error::ImmersionFailure(vec![*s]));
        }
    }
    let g = |i: usize, j: usize| frames[i % grid][0] * frames[j % grid][1] - frames[i % grid][1] * frames[j % grid][0];
    let scale = frames.iter().map(|f| norm(f)).fold(0.0, f64::max).powi(2);
    let mut out = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            for (i2, j2) in [(i + 1, j), (i, j + 1)] {
                let (p0, p1) = ((params[i], params[j]), (i2 as f64 * h, j2 as f64 * h));
                if band_distance(m, p0.0, p0.1) < delta || band_distance(m, p1.0, p1.1) < delta {
                    continue;
                }
                let (g0, g1) = (g(i, j), g(i2, j2));
                if g0 == 0.0 {
                    out.push(p0);
                    continue;
                }
                if g0 * g1 >= 0.0 {
                    continue;
                }
                let (mut lo, mut hi, mut glo) = (0.0, 1.0, g0);
                let at = |w: f64| (p0.0 + w * (p1.0 - p0.0), p0.1 + w * (p1.1 - p0.1));
                let mut mid = 0.5;
                for _ in 0..80 {
                    mid = 0.5 * (lo + hi);
                    let (s, t) = at(mid);
                    let gm = curve_g(m, s, t).0;
                    if gm.abs() <= tol * scale {
                        break;
                    }
                    if gm * glo < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        glo = gm;
                    }
                }
                let (s, t) = at(mid);
                out.push((s.rem_euclid(TAU), t.rem_euclid(TAU)));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out.dedup_by(|a, b| band_distance(m, a.0, b.0).hypot(band_distance(m, a.1, b.1)) < 1e-9);
    Ok(out)
}

fn surface_pairs(m: &ParametricManifold, grid: usize, tol: f64) -> Result<Vec<PairPoint>> {
    let dom = m.domain();
    let periodic = m.periodic();
    let axis = |c: usize| -> Vec<f64> {
        let (lo, hi) = dom[c];
        let count = if periodic[c] { grid } else { grid + 1 };
        let h = (hi - lo) / grid as f64;
        (0..count).map(|i| lo + i as f64 * h).collect()
    };
    let (u, v) = (axis(0), axis(1));
    let spacing = (dom[0].1 - dom[0].0) / grid as f64;
    let delta = 10.0 * spacing;
    let nodes: Vec<Vec<f64>> = u.iter().flat_map(|&a| v.iter().map(move |&b| vec![a, b])).collect();
    let frames: Vec<DMatrix<f64>> =
        nodes.iter().map(|p| tangent_frame(m, p)).collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    for (i, p) in nodes.iter().enumerate() {
        for (j, r) in nodes.iter().enumerate() {
            if param_distance(m, p, r) < delta {
                continue;
            }
            let st = DMatrix::from_fn(4, m.q, |a, b| if a < 2 { frames[i][(a, b)] } else { frames[j][(a - 2, b)] });
            let sv = singular_values(&st);
            let ratio = sv[m.q - 1] / sv[0];
            if ratio < 0.5 * spacing {
                candidates.push((ratio, p.clone(), r.clone()));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<PairPoint> = Vec::new();
    for (_, p, r) in candidates {
        let start: Vec<f64> = p.iter().chain(&r).copied().collect();
        let Some(x) = gauss_newton(m, start, tol) else { continue };
        let (s, t) = (wrap(m, &x[..2]), wrap(m, &x[2..]));
        let inside = s.iter().chain(&t).zip(dom.iter().chain(&dom)).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi);
        if !inside || param_distance(m, &s, &t) < delta {
            continue;
        }
        let near = |q: &PairPoint| param_distance(m, &q.s, &s).hypot(param_distance(m, &q.t, &t)) < 0.5 * spacing;
        if out.iter().any(near) {
            continue;
        }
        out.push(PairPoint::new(m, s, t)?);
    }
    out.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap_or(std::cmp::Ordering::Equal).then(a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal)));
    Ok(out)
}

fn wrap(m: &ParametricManifold, x: &[f64]) -> Vec<f64> {
    x.iter().zip(m.periodic()).map(|(v, p)| if p { v.rem_euclid(TAU) } else { *v }).collect()
}

/// How a traced branch ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The branch returned to its starting pair.
    Closed,
    /// Both ends reached the diagonal exclusion band.
    Band,
    /// The corrector failed even at the smallest step.
    StepFailure,
    /// Step budget exhausted.
    MaxSteps,
    /// Unordered point cloud from grid sampling (surfaces).
    Cloud,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularityLabel {
    A1Node,
    A2Cusp,
    Higher,
    Unresolved,
}

impl SingularityLabel {
    pub fn tag(self) -> &'static str {
        match self {
            SingularityLabel::A1Node => "A1_node",
            SingularityLabel::A2Cusp => "A2_cusp",
            SingularityLabel::Higher => "higher",
            SingularityLabel::Unresolved => "UNRESOLVED",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    /// Sample index at the start of the segment holding the singular point.
    pub index: usize,
    pub label: SingularityLabel,
    /// Refined pair and λ-point of the singularity.
    pub pair: PairPoint,
    pub x: Vec<f64>,
    /// Other branch and segment for nodes.
    pub partner: Option<(usize, usize)>,
    /// Class found by the contact pipeline, when it resolved.
    pub cross_check: Option<GermClass>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSample {
    pub pair: PairPoint,
    /// Arclength along the branch in the `(s, t)` parameter plane.
    pub sigma: f64,
    pub x: Vec<f64>,
    /// Unit tangent of the pair curve in `(s, t)`.
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquidistantBranch {
    pub lambda: f64,
    pub samples: Vec<BranchSample>,
    pub closed: bool,
    pub termination: Termination,
    /// All λ-points coincide (centrally symmetric input at λ = 1/2).
    pub degenerate: bool,
    pub annotations: Vec<Annotation>,
}

impl EquidistantBranch {
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn cusp_count(&self) -> usize {
        self.annotations.iter().filter(|a| a.label == SingularityLabel::A2Cusp).count()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda.abs() < 1e-12 || (1.0 - lambda).abs() < 1e-12 {
        return Err(Error::InvalidLambda);
    }
    Ok(())
}

struct Tracer<'a> {
    m: &'a ParametricManifold,
    step: f64,
    delta: f64,
    tol: f64,
}

impl Tracer<'_> {
    fn grad(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let (g, gs, gt) = curve_g(self.m, p[0], p[1]);
        (g, [gs, gt])
    }

    fn tangent(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let (_, d) = self.grad(p);
        let len = d[0].hypot(d[1]);
        (len > 1e-14).then(|| [-d[1] / len, d[0] / len])
    }

    fn correct(&self, pred: [f64; 2], tau: [f64; 2]) -> Option<[f64; 2]> {
        let mut p = pred;
        for _ in 0..12 {
            let (g, d) = self.grad(p);
            if g.abs() <= self.tol {
                return Some(p);
            }
            let c = tau[0] * (p[0] - pred[0]) + tau[1] * (p[1] - pred[1]);
            let det = d[0] * tau[1] - d[1] * tau[0];
            if det.abs() < 1e-14 {
                return None;
            }
            let ds = (-g * tau[1] + c * d[1]) / det;
            let dt = (-d[0] * c + tau[0] * g) / det;
            p = [p[0] + ds, p[1] + dt];
        }
        (self.grad(p).0.abs() <= self.tol * 10.0).then_some(p)
    }

    fn dist(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        torus_distance(a, b)
    }

    // point of the pair curve on the band boundary between p and one step ahead
    fn land_on_band(&self, p: [f64; 2], tau: [f64; 2], h: f64) -> Option<([f64; 2], [f64; 2])> {
        let at = |w: f64| self.correct([p[0] + w * tau[0], p[1] + w * tau[1]], tau);
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let q = at(mid)?;
            if band_distance(self.m, q[0], q[1]) < self.delta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let q = at(lo)?;
        let t = self.tangent(q)?;
        let t = if t[0] * tau[0] + t[1] * tau[1] < 0.0 { [-t[0], -t[1]] } else { t };
        (lo > 1e-9 * h).then_some((q, t))
    }

    /// Follows the pair curve from `start` along `sign * tangent`.
    fn run(&self, start: [f64; 2], sign: f64, budget: usize) -> (Vec<([f64; 2], [f64; 2])>, Termination) {
        let Some(t0) = self.tangent(start) else {
            return (vec![(start, [1.0, 0.0])], Termination::StepFailure);
        };
        let mut tau = [sign * t0[0], sign * t0[1]];
        let mut path = vec![(start, tau)];
        let mut p = start;
        let mut h = self.step;
        let min_h = self.step / 512.0;
        let mut travelled = 0.0;
        for _ in 0..budget {
            let pred = [p[0] + h * tau[0], p[1] + h * tau[1]];
            let next = self.correct(pred, tau).and_then(|q| {
                let t = self.tangent(q)?;
                let t = if t[0] * tau[0] + t[1] * tau[1] < 0.0 { [-t[0], -t[1]] } else { t };
                let turn = (t[0] * tau[0] + t[1] * tau[1]).clamp(-1.0, 1.0).acos();
                (turn < 0.2 && self.dist(q, p) < 2.0 * h).then_some((q, t))
            });
            let Some((q, t)) = next else {
                if h <= min_h {
                    return (path, Termination::StepFailure);
                }
                h *= 0.5;
                continue;
            };
            if band_distance(self.m, q[0], q[1]) < self.delta {
                if let Some(edge) = self.land_on_band(p, tau, h) {
                    path.push(edge);
                }
                return (path, Termination::Band);
            }
            travelled += self.dist(q, p);
            if travelled > 4.0 * self.step && self.dist(q, start) < 0.75 * h.max(self.step * 0.5) {
                return (path, Termination::Closed);
            }
            path.push((q, t));
            p = q;
            tau = t;
            h = (h * 1.5).min(self.step);
        }
        (path, Termination::MaxSteps)
    }
}

/// Traces the λ-equidistant of a plane curve by pseudo-arclength
/// continuation of `g(s, t) = 0` outside the band `|s - t| < delta_diag`.
/// Surfaces are routed to [`sample_equidistant`] with a grid matching `step`.
pub fn trace_equidistant(
    m: &ParametricManifold,
    lambda: f64,
    step: f64,
    delta_diag: f64,
) -> Result<Vec<EquidistantBranch>> {
    check_lambda(lambda)?;
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Domain("step must lie in (0, 1)".into()));
    }
    if m.n != 1 || m.q != 2 {
        let grid = ((TAU / step).ceil() as usize).clamp(8, 64);
        return Ok(vec![sample_equidistant(m, lambda, grid, 1e-10)?]);
    }
    let grid = ((TAU / step).ceil() as usize).max(64);
    let scale = (0..grid).map(|i| norm(&m.derivative(&[TAU * i as f64 / grid as f64], &[1]))).fold(0.0, f64::max);
    let tracer = Tracer { m, step, delta: delta_diag, tol: 1e-13 * scale * scale };
    let seeds = curve_seeds(m, grid, delta_diag, 1e-14)?;
    let budget = (200.0 * TAU / step) as usize;
    let mut traced: Vec<Vec<([f64; 2], [f64; 2])>> = Vec::new();
    let mut terminations = Vec::new();
    for (s, t) in seeds {
        let Some(seed) = tracer.correct([s, t], tracer.tangent([s, t]).unwrap_or([1.0, 0.0])) else { continue };
        let half = (lambda - 0.5).abs() < 1e-12;
        let covered = traced.iter().flatten().any(|(p, _)| {
            tracer.dist(*p, seed) < 1.5 * step || (half && tracer.dist(*p, [seed[1], seed[0]]) < 1.5 * step)
        });
        if covered {
            continue;
        }
        let (forward, end) = tracer.run(seed, 1.0, budget);
        if end == Termination::Closed {
            traced.push(forward);
            terminations.push(end);
            continue;
        }
        let (backward, end_back) = tracer.run(seed, -1.0, budget);
        let mut path: Vec<([f64; 2], [f64; 2])> =
            backward.iter().skip(1).rev().map(|(p, t)| (*p, [-t[0], -t[1]])).collect();
        path.extend(forward);
        let end = if end == Termination::Band && end_back == Termination::Band { Termination::Band } else if end == Termination::Band { end_back } else { end };
        traced.push(path);
        terminations.push(end);
    }
    let mut branches = Vec::new();
    for (path, end) in traced.into_iter().zip(terminations) {
        branches.push(build_branch(m, lambda, path, end)?);
    }
    Ok(branches)
}

fn build_branch(
    m: &ParametricManifold,
    lambda: f64,
    mut path: Vec<([f64; 2], [f64; 2])>,
    end: Termination,
) -> Result<EquidistantBranch> {
    let closed = end == Termination::Closed;
    // at λ = 1/2 the swapped pair gives the same point; keep one period
    if closed && (lambda - 0.5).abs() < 1e-12 && path.len() > 8 {
        let start = path[0].0;
        let swapped = [start[1], start[0]];
        let best = (path.len() / 4..path.len() * 3 / 4)
            .min_by(|&i, &j| {
                torus_distance(path[i].0, swapped).total_cmp(&torus_distance(path[j].0, swapped))
            })
            .expect("nonempty range");
        let spacing = torus_distance(path[best].0, path[best + 1].0);
        if torus_distance(path[best].0, swapped) < 2.0 * spacing {
            path.truncate(best);
        }
    }
    let mut samples = Vec::with_capacity(path.len());
    let mut sigma = 0.0;
    for (i, (p, dir)) in path.iter().enumerate() {
        if i > 0 {
            sigma += torus_distance(path[i - 1].0, *p);
        }
        let pair = PairPoint::new(m, vec![p[0].rem_euclid(TAU)], vec![p[1].rem_euclid(TAU)])?;
        let x = pair.lambda_point(lambda);
        samples.push(BranchSample { pair, sigma, x, direction: dir.to_vec() });
    }
    let diameter = samples
        .iter()
        .flat_map(|a| samples.iter().map(move |b| norm(&sub(&a.x, &b.x))))
        .fold(0.0, f64::max);
    let size = samples.iter().map(|s| norm(&s.pair.a)).fold(0.0, f64::max).max(1.0);
    let degenerate = samples.len() > 1 && diameter < 1e-7 * size;
    Ok(EquidistantBranch { lambda, samples, closed, termination: end, degenerate, annotations: Vec::new() })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// λ-points of the weakly parallel pairs found on a parameter grid. The
/// result is a single unordered cloud.
pub fn sample_equidistant(m: &ParametricManifold, lambda: f64, grid: usize, tol: f64) -> Result<EquidistantBranch> {
    check_lambda(lambda)?;
    let pairs = find_parallel_pairs(m, grid, tol)?;
    let samples = pairs
        .into_iter()
        .map(|pair| {
            let x = pair.lambda_point(lambda);
            BranchSample { pair, sigma: 0.0, x, direction: Vec::new() }
        })
        .collect();
    Ok(EquidistantBranch {
        lambda,
        samples,
        closed: false,
        termination: Termination::Cloud,
        degenerate: false,
        annotations: Vec::new(),
    })
}

// signed speed of the λ-point along the branch, measured against the unit
// tangent of M at a
fn signed_speed(m: &ParametricManifold, lambda: f64, p: [f64; 2], dir: [f64; 2]) -> f64 {
    let (ta, tb) = (m.derivative(&[p[0]], &[1]), m.derivative(&[p[1]], &[1]));
    let len = norm(&ta);
    (0..2).map(|c| (lambda * ta[c] * dir[0] + (1.0 - lambda) * tb[c] * dir[1]) * ta[c] / len).sum()
}

fn refine_cusp(m: &ParametricManifold, lambda: f64, a: &BranchSample, b: &BranchSample, tracer: &Tracer) -> Option<[f64; 2]> {
    let pa = [a.pair.s[0], a.pair.t[0]];
    let mut pb = [b.pair.s[0], b.pair.t[0]];
    // unwrap b next to a
    for c in 0..2 {
        while pb[c] - pa[c] > PI {
            pb[c] -= TAU;
        }
        while pa[c] - pb[c] > PI {
            pb[c] += TAU;
        }
    }
    let at = |w: f64| -> Option<([f64; 2], [f64; 2])> {
        let guess = [pa[0] + w * (pb[0] - pa[0]), pa[1] + w * (pb[1] - pa[1])];
        let chord = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = chord[0].hypot(chord[1]);
        let tau = [chord[0] / len, chord[1] / len];
        let q = tracer.correct(guess, tau)?;
        let t = tracer.tangent(q)?;
        let t = if t[0] * a.direction[0] + t[1] * a.direction[1] < 0.0 { [-t[0], -t[1]] } else { t };
        Some((q, t))
    };
    let speed = |w: f64| at(w).map(|(q, t)| signed_speed(m, lambda, q, t));
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut slo = speed(lo)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let sm = speed(mid)?;
        if sm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if sm * slo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            slo = sm;
        }
    }
    at(0.5 * (lo + hi)).map(|(q, _)| [q[0].rem_euclid(TAU), q[1].rem_euclid(TAU)])
}

fn segments_cross(p1: &[f64], p2: &[f64], q1: &[f64], q2: &[f64]) -> Option<(f64, f64)> {
    let d = |a: &[f64], b: &[f64]| [b[0] - a[0], b[1] - a[1]];
    let cross = |u: [f64; 2], v: [f64; 2]| u[0] * v[1] - u[1] * v[0];
    let (r, s) = (d(p1, p2), d(q1, q2));
    let denom = cross(r, s);
    if denom.abs() < 1e-300 {
        return None;
    }
    let qp = d(p1, q1);
    let (u, v) = (cross(qp, s) / denom, cross(qp, r) / denom);
    let inside = |x: f64| x > 0.0 && x < 1.0;
    (inside(u) && inside(v)).then_some((u, v))
}

/// Annotates cusps (sign changes of the signed speed) and transverse
/// self-intersections of traced plane-curve branches. When `cross_check`
/// is set each annotation is also classified through the contact pipeline.
pub fn detect_singularities(
    m: &ParametricManifold,
    branches: &mut [EquidistantBranch],
    cross_check: bool,
) -> Result<()> {
    if m.n != 1 || m.q != 2 {
        return Ok(());
    }
    let scale = (0..256).map(|i| norm(&m.derivative(&[TAU * i as f64 / 256.0], &[1]))).fold(0.0, f64::max);
    let tracer = Tracer { m, step: 0.0, delta: 0.0, tol: 1e-13 * scale * scale };
    for br in branches.iter_mut() {
        br.annotations.clear();
        if br.degenerate || br.termination == Termination::Cloud || br.samples.len() < 3 {
            continue;
        }
        let lambda = br.lambda;
        let len = br.samples.len();
        let speeds: Vec<f64> = br
            .samples
            .iter()
            .map(|s| signed_speed(m, lambda, [s.pair.s[0], s.pair.t[0]], [s.direction[0], s.direction[1]]))
            .collect();
        let last = if br.closed { len } else { len - 1 };
        let mut cusps = Vec::new();
        for i in 0..last {
            let j = (i + 1) % len;
            if speeds[i] * speeds[j] >= 0.0 {
                continue;
            }
            // direction of a half-period branch flips at the wrap point
            if br.closed && j == 0 && (lambda - 0.5).abs() < 1e-12 {
                continue;
            }
            let label_pair = match refine_cusp(m, lambda, &br.samples[i], &br.samples[j], &tracer) {
                Some(p) => (SingularityLabel::A2Cusp, PairPoint::new(m, vec![p[0]], vec![p[1]])?),
                None => (SingularityLabel::Unresolved, br.samples[i].pair.clone()),
            };
            cusps.push((i, label_pair.0, label_pair.1));
        }
        // cusps closer than three samples merge into a higher singularity
        let mut merged: Vec<(usize, SingularityLabel, PairPoint)> = Vec::new();
        for c in cusps {
            if let Some(prev) = merged.last_mut() {
                if c.0 - prev.0 <= 3 {
                    prev.1 = SingularityLabel::Higher;
                    continue;
                }
            }
            merged.push(c);
        }
        for (index, label, pair) in merged {
            let x = pair.lambda_point(lambda);
            br.annotations.push(Annotation { index, label, pair, x, partner: None, cross_check: None });
        }
    }
    find_nodes(m, branches)?;
    if cross_check {
        for br in branches.iter_mut() {
            let lambda = br.lambda;
            for ann in br.annotations.iter_mut() {
                ann.cross_check = classify_pair(m, &ann.pair, lambda, 6).ok();
            }
        }
    }
    Ok(())
}

fn find_nodes(m: &ParametricManifold, branches: &mut [EquidistantBranch]) -> Result<()> {
    struct Seg {
        branch: usize,
        index: usize,
        lo: f64,
        hi: f64,
    }
    let mut segs = Vec::new();
    for (b, br) in branches.iter().enumerate() {
        if br.degenerate || br.termination == Termination::Cloud {
            continue;
        }
        let len = br.samples.len();
        let count = if br.closed { len } else { len.saturating_sub(1) };
        for i in 0..count {
            let (p, q) = (&br.samples[i].x, &br.samples[(i + 1) % len].x);
            segs.push(Seg { branch: b, index: i, lo: p[0].min(q[0]), hi: p[0].max(q[0]) });
        }
    }
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let near_cusp = |b: usize, i: usize| {
        let br = &branches[b];
        let len = br.samples.len();
        br.annotations.iter().any(|a| {
            let d = a.index.abs_diff(i);
            d.min(len - d) <= 3
        })
    };
    let mut nodes = Vec::new();
    for (k, s1) in segs.iter().enumerate() {
        for s2 in segs[k + 1..].iter().take_while(|s| s.lo <= s1.hi) {
            if s1.branch == s2.branch {
                let len = branches[s1.branch].samples.len();
                let d = s1.index.abs_diff(s2.index);
                if d.min(len - d) <= 3 {
                    continue;
                }
            }
            if near_cusp(s1.branch, s1.index) || near_cusp(s2.branch, s2.index) {
                continue;
            }
            let seg = |s: &Seg| {
                let br = &branches[s.branch];
                let len = br.samples.len();
                (br.samples[s.index].x.clone(), br.samples[(s.index + 1) % len].x.clone())
            };
            let ((p1, p2), (q1, q2)) = (seg(s1), seg(s2));
            if let Some((u, _)) = segments_cross(&p1, &p2, &q1, &q2) {
                let dir1 = sub(&p2, &p1);
                let dir2 = sub(&q2, &q1);
                let sin = (dir1[0] * dir2[1] - dir1[1] * dir2[0]).abs() / (norm(&dir1) * norm(&dir2));
                let label = if sin > 1e-3 { SingularityLabel::A1Node } else { SingularityLabel::Unresolved };
                let x: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + u * (b - a)).collect();
                nodes.push((s1.branch, s1.index, s2.branch, s2.index, label, x));
            }
        }
    }
    for (b1, i1, b2, i2, label, x) in nodes {
        for (b, i, other) in [(b1, i1, (b2, i2)), (b2, i2, (b1, i1))] {
            let pair = branches[b].samples[i].pair.clone();
            branches[b].annotations.push(Annotation { index: i, label, pair, x: x.clone(), partner: Some(other), cross_check: None });
        }
    }
    let _ = m;
    Ok(())
}

fn dual_basis(columns: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let q = columns.len();
    let basis = DMatrix::from_fn(q, q, |i, j| columns[j][i]);
    let sv = singular_values(&basis);
    let cond = sv[0] / sv[q - 1].max(1e-300);
    if cond > COND_LIMIT {
        return Err(Error::IllConditioned(cond));
    }
    basis.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))
}

/// Orthonormal basis of the span of `rows` (as vectors), largest directions first.
fn span_basis(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() || dim == 0 {
        return Vec::new();
    }
    let q = rows[0].len();
    let mat = DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]);
    let svd = mat.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.into_iter().take(dim).map(|r| vt.row(r).iter().copied().collect()).collect()
}

/// Orthonormal basis of the orthogonal complement of the span of `rows`.
fn complement_basis(rows: &[Vec<f64>], q: usize) -> Vec<Vec<f64>> {
    let mut full = DMatrix::<f64>::zeros(q.max(rows.len()), q);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..q {
            full[(i, j)] = r[j];
        }
    }
    let svd = full.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    order.into_iter().take(q - rows.len()).map(|r| vt.row(r).iter().copied().collect()).collect()
}

fn project_out(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for b in basis {
        let c: f64 = out.iter().zip(b).map(|(x, y)| x * y).sum();
        for (o, y) in out.iter_mut().zip(b) {
            *o -= c * y;
        }
    }
    out
}

/// Inverse of a germ `R^n -> R^n` with invertible linear part.
fn invert_series(f: &MapGerm<f64>) -> Result<MapGerm<f64>> {
    let n = f.source_dim();
    let order = f.order();
    let lin = DMatrix::from_fn(n, n, |i, j| f.linear_matrix()[i][j]);
    let inv = lin.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
    let nonlinear: Vec<JetPoly<f64>> = f
        .components()
        .iter()
        .map(|c| {
            let lin_part = c.homogeneous_part(1);
            c - &lin_part
        })
        .collect();
    let nonlinear = MapGerm::new(n, order, nonlinear)?;
    let apply_inv = |v: &[JetPoly<f64>]| -> Vec<JetPoly<f64>> {
        (0..n)
            .map(|i| (0..n).fold(JetPoly::zero(n, order), |acc, j| &acc + &v[j].scale(&inv[(i, j)])))
            .collect()
    };
    let ident = MapGerm::identity(n, order);
    let mut g = MapGerm::new(n, order, apply_inv(ident.components()))?;
    for _ in 0..order {
        let ng = nonlinear.compose(&g)?;
        let diff: Vec<JetPoly<f64>> = ident.components().iter().zip(ng.components()).map(|(a, b)| a - b).collect();
        g = MapGerm::new(n, order, apply_inv(&diff))?;
    }
    Ok(g)
}

fn drop_low_degrees(p: &JetPoly<f64>) -> JetPoly<f64> {
    let low = &p.homogeneous_part(0) + &p.homogeneous_part(1);
    p - &low
}

fn pick(coords: &[JetPoly<f64>], idx: std::ops::Range<usize>) -> Vec<JetPoly<f64>> {
    coords[idx].to_vec()
}

/// Taylor germs of `M` at `a = ι(s)` and `b = ι(t)` in adapted coordinates
/// `(y, z, u, v)`: `y` spans `T_aM ∩ T_bM`, `(y, z)` spans `T_aM`, `(y, v)`
/// spans `T_bM` and `u` completes an orthonormal frame. The germ at `b` is
/// centred at `b` and already carries the λ-reflection, so the contact map
/// of the returned pair is the λ-contact germ of the pair.
pub fn taylor_germ_at_pair(
    m: &ParametricManifold,
    pair: &PairPoint,
    lambda: f64,
    order: usize,
) -> Result<GraphPair<f64>> {
    check_lambda(lambda)?;
    let (n, q) = (m.n, m.q);
    let (fa, fb) = (tangent_frame(m, &pair.s)?, tangent_frame(m, &pair.t)?);
    let (k, _) = parallelism(m, &pair.s, &pair.t)?;
    if k == 0 {
        return Err(Error::Domain("pair is not weakly parallel".into()));
    }
    let rows = |f: &DMatrix<f64>| -> Vec<Vec<f64>> { (0..n).map(|i| f.row(i).iter().copied().collect()).collect() };
    let (ra, rb) = (rows(&fa), rows(&fb));
    let ta = span_basis(&ra, n);
    let tb = span_basis(&rb, n);
    // intersection: directions of T_a closest to T_b
    let mut cross = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cross[(i, j)] = ta[i].iter().zip(&tb[j]).map(|(x, y)| x * y).sum();
        }
    }
    let svd = cross.svd(true, false);
    let uu = svd.u.expect("requested");
    let mut order_sv: Vec<usize> = (0..n).collect();
    order_sv.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let y: Vec<Vec<f64>> = order_sv
        .iter()
        .take(k)
        .map(|&c| (0..q).map(|d| (0..n).map(|i| uu[(i, c)] * ta[i][d]).sum()).collect())
        .collect();
    let z = span_basis(&ta.iter().map(|v| project_out(v, &y)).collect::<Vec<_>>(), n - k);
    let v = span_basis(&tb.iter().map(|w| project_out(w, &y)).collect::<Vec<_>>(), n - k);
    let spanned: Vec<Vec<f64>> = y.iter().chain(&z).chain(&v).cloned().collect();
    let u = complement_basis(&spanned, q);
    let l0 = q + k - 2 * n;
    if u.len() != l0 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let columns: Vec<Vec<f64>> = y.iter().chain(&z).chain(&u).chain(&v).cloned().collect();
    let dual = dual_basis(&columns)?;
    let coords = |jets: Vec<JetPoly<f64>>| -> Vec<JetPoly<f64>> {
        (0..q)
            .map(|i| (0..q).fold(JetPoly::zero(n, order), |acc, j| &acc + &jets[j].scale(&dual[(i, j)])))
            .collect()
    };
    let ca = coords(m.taylor(&pair.s, order));
    let cb = coords(m.taylor(&pair.t, order));
    let (yz, zu, uv) = (0..n, n..n + l0, n + l0..q);
    // M+: (y, z) are local coordinates
    let chart_a = invert_series(&MapGerm::new(n, order, pick(&ca, yz))?)?;
    let graph_a = |cs: Vec<JetPoly<f64>>| -> Result<MapGerm<f64>> {
        let g = MapGerm::new(n, order, cs)?.compose(&chart_a)?;
        MapGerm::new(n, order, g.components().iter().map(drop_low_degrees).collect())
    };
    let phi = graph_a(pick(&ca, zu.clone()))?;
    let psi = graph_a(pick(&ca, uv.clone()))?;
    // M-: (y, v) are local coordinates
    let mut yv = pick(&cb, 0..k);
    yv.extend(pick(&cb, uv));
    let chart_b = invert_series(&MapGerm::new(n, order, yv)?)?;
    let graph_b = |cs: Vec<JetPoly<f64>>| -> Result<MapGerm<f64>> {
        let g = MapGerm::new(n, order, cs)?.compose(&chart_b)?;
        MapGerm::new(n, order, g.components().iter().map(drop_low_degrees).collect())
    };
    let eta = graph_b(pick(&cb, k..n))?;
    let zeta = graph_b(pick(&cb, zu))?;
    GraphPair::new(n, q, k, phi, psi, eta, zeta)?.reflected(&lambda)
}

/// Exact germ from a numerical one: coefficients below `SNAP_TOL` times the
/// largest coefficient become zero, the rest become nearby small rationals.
pub fn snap_germ(f: &MapGerm<f64>) -> Germ {
    let top = f.components().iter().flat_map(|c| c.terms().map(|(_, v)| v.abs())).fold(0.0, f64::max);
    let comps = f
        .components()
        .iter()
        .map(|c| {
            JetPoly::from_terms(
                c.nvars(),
                c.order(),
                c.terms()
                    .filter(|(_, v)| v.abs() > SNAP_TOL * top)
                    .map(|(mono, v)| (mono.clone(), approximate_rational(*v / top, 1e-9, 1_000_000))),
            )
        })
        .collect();
    MapGerm::new(f.source_dim(), f.order(), comps).expect("snapped germ keeps zero constants")
}

/// Class of the λ-contact germ at a pair: numeric Taylor germs, contact map
/// and rank-0 reduction, then snapping to rationals and exact recognition.
pub fn classify_pair(m: &ParametricManifold, pair: &PairPoint, lambda: f64, order: usize) -> Result<GermClass> {
    let gp = taylor_germ_at_pair(m, pair, lambda, order)?;
    let kappa = contact_map(&gp);
    let top = kappa.components().iter().flat_map(|c| c.terms().map(|(_, v)| v.abs())).fold(0.0, f64::max);
    let kappa = MapGerm::new(
        kappa.source_dim(),
        kappa.order(),
        kappa
            .components()
            .iter()
            .map(|c| JetPoly::from_terms(c.nvars(), c.order(), c.terms().filter(|(_, v)| v.abs() > SNAP_TOL * top).map(|(m, v)| (m.clone(), *v))))
            .collect(),
    )?;
    let theta = reduce_to_theta(&kappa, m.n, m.q)?;
    let exact: MapGerm<Rational> = snap_germ(&theta);
    if exact.components().iter().all(JetPoly::is_zero) {
        return Err(Error::Infinite);
    }
    recognize(&exact)
}

/// Smallest and largest singular value of the Jacobian of
/// `(s, t) ↦ λ ι(s) + (1 - λ) ι(t)`.
pub fn lambda_map_singular_values(m: &ParametricManifold, s: &[f64], t: &[f64], lambda: f64) -> (f64, f64) {
    let st = stacked_raw(m, s, t);
    let jac = DMatrix::from_fn(m.q, 2 * m.n, |i, j| if j < m.n { lambda * st[(j, i)] } else { (1.0 - lambda) * st[(j, i)] });
    let sv = singular_values(&jac);
    let smallest = if 2 * m.n > m.q { sv[m.q - 1] } else { *sv.last().unwrap_or(&0.0) };
    (smallest, sv[0])
}

/// Distance from `x` to the union of traced branches. The nearest polyline
/// segment is refined on the pair curve itself, so the result is accurate
/// to the corrector tolerance rather than the sampling step.
pub fn distance_to_branches(m: &ParametricManifold, x: &[f64], branches: &[EquidistantBranch]) -> f64 {
    let mut best = f64::INFINITY;
    let mut segs = Vec::new();
    for (b, br) in branches.iter().enumerate() {
        let len = br.samples.len();
        if len == 1 {
            best = best.min(norm(&sub(x, &br.samples[0].x)));
        }
        let count = if br.closed { len } else { len.saturating_sub(1) };
        for i in 0..count {
            let (p, q) = (&br.samples[i].x, &br.samples[(i + 1) % len].x);
            segs.push((segment_distance(x, p, q), norm(&sub(p, q)), b, i));
        }
    }
    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(&(nearest, _, _, _)) = segs.first() else { return best };
    best = best.min(nearest);
    if m.n != 1 || m.q != 2 {
        return best;
    }
    // the exact curve deviates from its chords by less than a chord length
    let margin = segs.iter().map(|s| s.1).fold(0.0, f64::max);
    for &(_, _, b, i) in segs.iter().take_while(|s| s.0 <= nearest + margin) {
        best = best.min(refine_on_branch(m, x, &branches[b], i));
    }
    best
}

// minimum distance from x to the exact pair curve around segment i
fn refine_on_branch(m: &ParametricManifold, x: &[f64], br: &EquidistantBranch, i: usize) -> f64 {
    let len = br.samples.len();
    let lambda = br.lambda;
    let scale = norm(&m.derivative(&[0.0], &[1])).max(1e-12);
    let tracer = Tracer { m, step: 0.0, delta: 0.0, tol: 1e-13 * scale * scale };
    let at = |j: isize| -> &BranchSample {
        if br.closed {
            &br.samples[j.rem_euclid(len as isize) as usize]
        } else {
            &br.samples[j.clamp(0, len as isize - 1) as usize]
        }
    };
    let mut best = f64::INFINITY;
    // each segment of the window separately: the pair curve is nearly straight there
    for j in (i as isize - 1)..=(i as isize + 1) {
        let (sa, sb) = (at(j), at(j + 1));
        let pa = [sa.pair.s[0], sa.pair.t[0]];
        let mut pb = [sb.pair.s[0], sb.pair.t[0]];
        for c in 0..2 {
            pb[c] = pa[c] + (pb[c] - pa[c] + PI).rem_euclid(TAU) - PI;
        }
        let chord = [pb[0] - pa[0], pb[1] - pa[1]];
        let clen = chord[0].hypot(chord[1]);
        if clen < 1e-300 {
            continue;
        }
        let tau = [chord[0] / clen, chord[1] / clen];
        let f = |w: f64| -> f64 {
            match tracer.correct([pa[0] + w * chord[0], pa[1] + w * chord[1]], tau) {
                Some(p) => {
                    let (a, b) = (m.point(&[p[0]]), m.point(&[p[1]]));
                    let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
                    norm(&sub(x, &y))
                }
                None => f64::INFINITY,
            }
        };
        let scan: Vec<f64> = (0..=16).map(|k| f(k as f64 / 16.0)).collect();
        best = best.min(scan.iter().copied().fold(f64::INFINITY, f64::min));
        // near cusps the distance along a segment has several local minima
        let minima = (0..=16).filter(|&k| (k == 0 || scan[k] <= scan[k - 1]) && (k == 16 || scan[k] <= scan[k + 1]));
        for k in minima {
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut d) = ((k as f64 - 1.0).max(0.0) / 16.0, (k as f64 + 1.0).min(16.0) / 16.0);
            let (mut b1, mut c1) = (d - g * (d - a), a + g * (d - a));
            let (mut fb, mut fc) = (f(b1), f(c1));
            for _ in 0..60 {
                if fb < fc {
                    d = c1;
                    c1 = b1;
                    fc = fb;
                    b1 = d - g * (d - a);
                    fb = f(b1);
                } else {
                    a = b1;
                    b1 = c1;
                    fb = fc;
                    c1 = a + g * (d - a);
                    fc = f(c1);
                }
            }
            best = best.min(fb).min(fc);
        }
    }
    best
}

fn segment_distance(x: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let d = sub(q, p);
    let len2: f64 = d.iter().map(|v| v * v).sum();
    let w = if len2 > 0.0 { (sub(x, p).iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / len2).clamp(0.0, 1.0) } else { 0.0 };
    let foot: Vec<f64> = p.iter().zip(&d).map(|(p, d)| p + w * d).collect();
    norm(&sub(x, &foot))
}

/// Symmetric Hausdorff distance between the λ-points of two traced branch
/// sets, with distances measured to the refined curves.
pub fn branch_hausdorff(m: &ParametricManifold, a: &[EquidistantBranch], b: &[EquidistantBranch]) -> f64 {
    let one_way = |p: &[EquidistantBranch], q: &[EquidistantBranch]| {
        p.iter()
            .flat_map(|br| br.samples.iter())
            .map(|s| distance_to_branches(m, &s.x, q))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one_way = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| q.iter().map(|y| norm(&sub(x, y))).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_of_builtin_families() {
        let c = ParametricManifold::circle(1.0).unwrap();
        let f = tangent_frame(&c, &[0.3]).unwrap();
        assert!((f[(0, 0)] + 0.3f64.sin()).abs() < 1e-15 && (f[(0, 1)] - 0.3f64.cos()).abs() < 1e-15);
        let e = ParametricManifold::ellipse(2.0, 1.0).unwrap();
        let f = tangent_frame(&e, &[0.0]).unwrap();
        assert!(f[(0, 0)].abs() < 1e-15 && (f[(0, 1)] - 1.0).abs() < 1e-15);
        let g = ParametricManifold::graph(vec![crate::jet::poly(2, 4, &[(1, &[2, 0]), (3, &[1, 1])])]).unwrap();
        let f = tangent_frame(&g, &[0.5, -1.0]).unwrap();
        // f_x = 2x + 3y, f_y = 3x
        assert_eq!(f.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, -2.0]);
        assert_eq!(f.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 1.5]);
    }

    #[test]
    fn fourier_derivatives_match_differences() {
        let m = ParametricManifold::fourier_oval(vec![0.0, 0.1, 0.2], vec![0.05]).unwrap();
        let h = 1e-5;
        for order in 0..3 {
            let num: Vec<f64> = (0..2)
                .map(|c| (m.derivative(&[0.7 + h], &[order])[c] - m.derivative(&[0.7 - h], &[order])[c]) / (2.0 * h))
                .collect();
            let exact = m.derivative(&[0.7], &[order + 1]);
            for c in 0..2 {
                assert!((num[c] - exact[c]).abs() < 1e-6, "order {order}");
            }
        }
    }

    #[test]
    fn torus_derivatives_match_differences() {
        let m = ParametricManifold::torus(2.0, 0.5).unwrap();
        let h = 1e-5;
        let p = [0.4, 1.1];
        let num: Vec<f64> =
            (0..3).map(|c| (m.point(&[p[0], p[1] + h])[c] - m.point(&[p[0], p[1] - h])[c]) / (2.0 * h)).collect();
        let exact = m.derivative(&p, &[0, 1]);
        for c in 0..3 {
            assert!((num[c] - exact[c]).abs() < 1e-8);
        }
    }

    #[test]
    fn parallelism_examples() {
        let c = ParametricManifold::circle(1.0).unwrap();
        assert_eq!(parallelism(&c, &[0.4], &[0.4 + PI]).unwrap(), (1, 1));
        assert_eq!(parallelism(&c, &[0.4], &[0.4 + FRAC_PI_2]).unwrap(), (0, 0));
        let e = ParametricManifold::ellipse(2.0, 1.0).unwrap();
        assert_eq!(parallelism(&e, &[1.0], &[1.0 + PI]).unwrap(), (1, 1));
        assert!(parallelism(&e, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn series_inversion() {
        let f = MapGerm::new(1, 6, vec![crate::jet::poly::<f64>(1, 6, &[(2, &[1]), (1, &[2])])]).unwrap();
        let g = invert_series(&f).unwrap();
        let id = f.compose(&g).unwrap();
        let expect = JetPoly::var(1, 6, 0);
        let diff = id.component(0) - &expect;
        assert!(diff.terms().all(|(_, c)| c.abs() < 1e-12));
    }

    #[test]
    fn samples_reproduce_circle() {
        let pts: Vec<Vec<f64>> = (0..400).map(|i| {
            let s = TAU * i as f64 / 400.0;
            vec![s.cos(), s.sin()]
        }).collect();
        let m = ParametricManifold::samples(pts).unwrap();
        let d = m.derivative(&[0.33], &[1]);
        assert!((d[0] + 0.33f64.sin()).abs() < 1e-5 && (d[1] - 0.33f64.cos()).abs() < 1e-5);
    }

    #[test]
    fn circle_pair_is_symmetric() {
        let c = ParametricManifold::circle(1.0).unwrap();
        let pair = PairPoint::new(&c, vec![-FRAC_PI_2], vec![FRAC_PI_2]).unwrap();
        let gp = taylor_germ_at_pair(&c, &pair, 0.5, 6).unwrap();
        let (phi, zeta) = (gp.phi().component(0), gp.zeta().component(0));
        let y2 = Monomial(vec![2]);
        assert!((phi.coeff(&y2).abs() - 0.5).abs() < 1e-12);
        assert!((phi - zeta).terms().all(|(_, c)| c.abs() < 1e-12));
        assert_eq!(classify_pair(&c, &pair, 0.5, 6), Err(Error::Infinite));
    }

    #[test]
    fn ellipse_vertex_is_a1() {
        let e = ParametricManifold::ellipse(2.0, 1.0).unwrap();
        let pair = PairPoint::new(&e, vec![0.0], vec![PI]).unwrap();
        assert_eq!(classify_pair(&e, &pair, 0.4, 6).unwrap().to_string(), "A1");
    }
}
