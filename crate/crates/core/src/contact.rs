//! Contact-side description of equidistant singularities.
//!
//! Two k-tangent germs of n-dimensional submanifolds of `R^q` are written in
//! adapted coordinates `(y, z, u, v)` with blocks of sizes `k`, `n - k`,
//! `q + k - 2n`, `n - k`:
//!
//! * `M+ = { u = φ(y, z), v = ψ(y, z) }`
//! * `M- = { z = η(y, v), u = ζ(y, v) }`
//!
//! The contact map between them is `κ(y, z) = (z - η(y, ψ), φ - ζ(y, ψ))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{corank, rank0_reduce, Codim, TruncatedQuotient};
use crate::error::{Error, Result};
use crate::jet::{JetPoly, MapGerm, Monomial};
use crate::linalg::MonomialIndex;
use crate::scalar::Scalar;

/// Germs of two k-tangent submanifolds in adapted coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPair<S> {
    n: usize,
    q: usize,
    k: usize,
    phi: MapGerm<S>,
    psi: MapGerm<S>,
    eta: MapGerm<S>,
    zeta: MapGerm<S>,
}

fn in_square_of_maximal_ideal<S: Scalar>(g: &MapGerm<S>) -> bool {
    g.components().iter().all(|c| c.min_degree().is_none_or(|d| d >= 2))
}

impl<S: Scalar> GraphPair<S> {
    pub fn new(
        n: usize,
        q: usize,
        k: usize,
        phi: MapGerm<S>,
        psi: MapGerm<S>,
        eta: MapGerm<S>,
        zeta: MapGerm<S>,
    ) -> Result<Self> {
        if q > 2 * n || q <= n {
            return Err(Error::Domain(format!("need n < q <= 2n, got n = {n}, q = {q}")));
        }
        // q + k = 2n is the transversal boundary case (empty u block)
        if k == 0 || k > n || q + k < 2 * n {
            return Err(Error::Domain(format!("parallelism degree {k} out of range for n = {n}, q = {q}")));
        }
        let (l0, m) = (q + k - 2 * n, n - k);
        for (name, g, t) in [("phi", &phi, l0), ("psi", &psi, m), ("eta", &eta, m), ("zeta", &zeta, l0)] {
            if g.source_dim() != n || g.target_dim() != t {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must map R^{n} to R^{t}, got R^{} to R^{}",
                    g.source_dim(),
                    g.target_dim()
                )));
            }
            if !in_square_of_maximal_ideal(g) {
                return Err(Error::Domain(format!("{name} has a nonzero linear part")));
            }
        }
        Ok(GraphPair { n, q, k, phi, psi, eta, zeta })
    }

    /// Pair with all four families zero.
    pub fn flat(n: usize, q: usize, k: usize, order: usize) -> Result<Self> {
        let l0 = (q + k).saturating_sub(2 * n);
        let m = n.saturating_sub(k);
        Self::new(
            n,
            q,
            k,
            MapGerm::zero(n, l0, order),
            MapGerm::zero(n, m, order),
            MapGerm::zero(n, m, order),
            MapGerm::zero(n, l0, order),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn phi(&self) -> &MapGerm<S> {
        &self.phi
    }
    pub fn psi(&self) -> &MapGerm<S> {
        &self.psi
    }
    pub fn eta(&self) -> &MapGerm<S> {
        &self.eta
    }
    pub fn zeta(&self) -> &MapGerm<S> {
        &self.zeta
    }

    /// Size of the `u` block.
    pub fn codim(&self) -> usize {
        self.q + self.k - 2 * self.n
    }

    pub fn order(&self) -> usize {
        [&self.phi, &self.psi, &self.eta, &self.zeta].iter().map(|g| g.order()).min().unwrap_or(0)
    }

    /// Exchanges the roles of the two submanifolds (swap the `z` and `v` blocks).
    pub fn swapped(&self) -> Self {
        GraphPair {
            n: self.n,
            q: self.q,
            k: self.k,
            phi: self.zeta.clone(),
            psi: self.eta.clone(),
            eta: self.psi.clone(),
            zeta: self.phi.clone(),
        }
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> GraphPair<T> {
        GraphPair {
            n: self.n,
            q: self.q,
            k: self.k,
            phi: self.phi.convert(f),
            psi: self.psi.convert(f),
            eta: self.eta.convert(f),
            zeta: self.zeta.convert(f),
        }
    }

    /// `(y, ψ(y, z))` as a germ `R^n -> R^n`.
    fn y_psi(&self) -> MapGerm<S> {
        let (n, k, order) = (self.n, self.k, self.order());
        let mut comps: Vec<JetPoly<S>> = (0..k).map(|i| JetPoly::var(n, order, i)).collect();
        comps.extend(self.psi.components().iter().map(|c| c.with_order(order)));
        MapGerm::new(n, order, comps).expect("valid substitution")
    }

    /// Copy with `η`, `ζ` replaced by their images under the λ-reflection
    /// through the origin: `η_λ(y, v) = -c η(-y/c, -v/c)`, `c = (1-λ)/λ`.
    pub fn reflected(&self, lambda: &S) -> Result<Self> {
        check_lambda(lambda)?;
        let c = (S::one() - lambda.clone()) / lambda.clone();
        let scale = -(S::one() / c.clone());
        let inner = MapGerm::identity(self.n, self.order()).scale(&scale);
        let outer = -c;
        let eta = self.eta.compose(&inner)?.scale(&outer);
        let zeta = self.zeta.compose(&inner)?.scale(&outer);
        Ok(GraphPair { eta, zeta, ..self.clone() })
    }
}

fn check_lambda<S: Scalar>(lambda: &S) -> Result<()> {
    if lambda.is_negligible() || (S::one() - lambda.clone()).is_negligible() {
        return Err(Error::InvalidLambda);
    }
    Ok(())
}

/// `(1/λ) a - ((1-λ)/λ) x`.
pub fn lambda_reflection<S: Scalar>(a: &[S], lambda: &S, x: &[S]) -> Result<Vec<S>> {
    check_lambda(lambda)?;
    if a.len() != x.len() {
        return Err(Error::DimensionMismatch(format!("points of length {} and {}", a.len(), x.len())));
    }
    let inv = S::one() / lambda.clone();
    let c = (S::one() - lambda.clone()) / lambda.clone();
    Ok(a.iter().zip(x).map(|(ai, xi)| inv.clone() * ai.clone() - c.clone() * xi.clone()).collect())
}

/// Contact map `κ: (R^n, 0) -> (R^{q-n}, 0)`.
pub fn contact_map<S: Scalar>(gp: &GraphPair<S>) -> MapGerm<S> {
    let (n, k, order) = (gp.n, gp.k, gp.order());
    let inner = gp.y_psi();
    let eta = gp.eta.compose(&inner).expect("dimensions checked");
    let zeta = gp.zeta.compose(&inner).expect("dimensions checked");
    let mut comps = Vec::with_capacity(gp.q - n);
    for (j, e) in eta.components().iter().enumerate() {
        comps.push(&JetPoly::var(n, order, k + j) - e);
    }
    for (p, z) in gp.phi.components().iter().zip(zeta.components()) {
        comps.push(&p.with_order(order) - z);
    }
    MapGerm::new(n, order, comps).expect("zero constant terms")
}

/// Contact map between `M+` and the λ-reflection of `M-` through the origin.
pub fn lambda_contact_from_pair<S: Scalar>(gp: &GraphPair<S>, lambda: &S) -> Result<MapGerm<S>> {
    Ok(contact_map(&gp.reflected(lambda)?))
}

/// Rank-0 reduced contact germ `θ: (R^k, 0) -> (R^{k-(2n-q)}, 0)`.
pub fn reduce_to_theta<S: Scalar>(kappa: &MapGerm<S>, n: usize, q: usize) -> Result<MapGerm<S>> {
    if kappa.source_dim() != n || kappa.target_dim() + n != q {
        return Err(Error::DimensionMismatch(format!(
            "contact map must go from R^{n} to R^{}, got R^{} to R^{}",
            q.saturating_sub(n),
            kappa.source_dim(),
            kappa.target_dim()
        )));
    }
    let theta = rank0_reduce(kappa)?;
    debug_assert_eq!(theta.source_dim() + q, theta.target_dim() + 2 * n);
    Ok(theta)
}

/// Local form of the λ-point map on `M+ × M-` in variables `(y, z, ỹ, v)`.
pub fn pi_tilde_local<S: Scalar>(gp: &GraphPair<S>, lambda: &S) -> Result<MapGerm<S>> {
    check_lambda(lambda)?;
    let (n, k, order) = (gp.n, gp.k, gp.order());
    let m = n - k;
    let dim = 2 * n;
    let mu = S::one() - lambda.clone();
    let var = |i: usize| JetPoly::var(dim, order, i);
    // (y, z) occupy 0..n, (ỹ, v) occupy n..2n
    let plus: Vec<usize> = (0..n).collect();
    let minus: Vec<usize> = (n..dim).collect();
    let on_plus = |p: &JetPoly<S>| p.with_order(order).embed(dim, &plus);
    let on_minus = |p: &JetPoly<S>| p.with_order(order).embed(dim, &minus);
    let mut comps = Vec::with_capacity(gp.q);
    for i in 0..k {
        comps.push(&var(i).scale(lambda) + &var(n + i).scale(&mu));
    }
    for j in 0..m {
        comps.push(&var(k + j).scale(lambda) + &on_minus(gp.eta.component(j)).scale(&mu));
    }
    for (p, z) in gp.phi.components().iter().zip(gp.zeta.components()) {
        comps.push(&on_plus(p).scale(lambda) + &on_minus(z).scale(&mu));
    }
    for j in 0..m {
        comps.push(&on_plus(gp.psi.component(j)).scale(lambda) + &var(n + k + j).scale(&mu));
    }
    MapGerm::new(dim, order, comps)
}

/// Truncated local ring of one germ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDim {
    /// Finite when the truncated dimension stabilized below the order.
    pub dimension: Codim,
    /// Dimension modulo `m^{N+1}`.
    pub truncated: usize,
    pub hilbert: Vec<usize>,
}

fn ring_dim<S: Scalar>(f: &MapGerm<S>, order: usize) -> RingDim {
    let gens: Vec<Vec<JetPoly<S>>> = f.components().iter().map(|c| vec![c.clone()]).collect();
    let q = TruncatedQuotient::new(f.source_dim(), 1, &gens, order);
    let dimension = match q.stable_order() {
        Some(n) => Codim::Finite(q.dim_up_to(n)),
        None => Codim::Infinite,
    };
    RingDim { dimension, truncated: q.dim_up_to(order), hilbert: q.hilbert_up_to(order) }
}

/// Local rings of `π̃_λ`, `κ_λ` and `θ_λ` at a fixed truncation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDims {
    pub pi: RingDim,
    pub kappa: RingDim,
    pub theta: RingDim,
}

impl RingDims {
    /// All three truncated dimensions and Hilbert functions coincide.
    pub fn agree(&self) -> bool {
        self.pi == self.kappa && self.kappa == self.theta
    }
}

pub fn local_ring_dims<S: Scalar>(gp: &GraphPair<S>, lambda: &S, order: usize) -> Result<RingDims> {
    let pi = pi_tilde_local(gp, lambda)?;
    let kappa = lambda_contact_from_pair(gp, lambda)?;
    let theta = match reduce_to_theta(&kappa, gp.n, gp.q) {
        Ok(t) => t,
        Err(Error::Regular) => MapGerm::zero(gp.k, 0, kappa.order()),
        Err(e) => return Err(e),
    };
    Ok(RingDims { pi: ring_dim(&pi, order), kappa: ring_dim(&kappa, order), theta: ring_dim(&theta, order) })
}

/// Seeded random pair with small integer coefficients in degrees 2 to 4.
/// With probability 1/4 a component loses its quadratic part.
pub fn random_graph_pair<S: Scalar>(n: usize, q: usize, k: usize, order: usize, seed: u64) -> Result<GraphPair<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = MonomialIndex::get(n, 4);
    let l0 = (q + k).saturating_sub(2 * n);
    let m = n.saturating_sub(k);
    let family = |t: usize, rng: &mut ChaCha8Rng| -> MapGerm<S> {
        let comps = (0..t)
            .map(|_| {
                let skip_quadratic = rng.gen_ratio(1, 4);
                let mut terms: Vec<(Monomial, S)> = Vec::new();
                for d in 2..=4usize {
                    if d == 2 && skip_quadratic {
                        continue;
                    }
                    for mi in index.degree_range(d) {
                        if rng.gen_bool(0.6) {
                            let c: i64 = rng.gen_range(-3..=3);
                            terms.push((index.monomial(mi).clone(), S::from_i64(c).expect("small integer")));
                        }
                    }
                }
                JetPoly::from_terms(n, order, terms)
            })
            .collect();
        MapGerm::new(n, order, comps).expect("no constant terms")
    };
    let phi = family(l0, &mut rng);
    let psi = family(m, &mut rng);
    let eta = family(m, &mut rng);
    let zeta = family(l0, &mut rng);
    GraphPair::new(n, q, k, phi, psi, eta, zeta)
}

/// Corank of the contact map; equals `k` for every valid pair.
pub fn contact_corank<S: Scalar>(gp: &GraphPair<S>) -> usize {
    corank(&contact_map(gp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{local_algebra, Codim};
    use crate::jet::poly;
    use crate::{Germ, Pair, Rational};

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    fn germ(s: usize, comps: &[&[(i64, &[u16])]]) -> Germ {
        MapGerm::new(s, 8, comps.iter().map(|c| poly(s, 8, c)).collect()).unwrap()
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(lambda_reflection(&[q(0, 1), q(0, 1)], &q(1, 2), &[q(1, 1), q(2, 1)]).unwrap(), vec![q(-1, 1), q(-2, 1)]);
        let lam = q(1, 3);
        assert_eq!(lambda_reflection(&[q(1, 1), q(2, 1)], &lam, &[q(0, 1), q(3, 1)]).unwrap(), vec![q(3, 1), q(0, 1)]);
        let a = [q(5, 7), q(-1, 2)];
        let x = [q(2, 3), q(9, 4)];
        let once = lambda_reflection(&a, &lam, &x).unwrap();
        assert_eq!(lambda_reflection(&a, &(q(1, 1) - lam), &once).unwrap(), x.to_vec());
        assert_eq!(lambda_reflection(&a, &q(1, 1), &x), Err(Error::InvalidLambda));
        assert_eq!(lambda_reflection(&a, &q(0, 1), &x), Err(Error::InvalidLambda));
    }

    #[test]
    fn contact_map_examples() {
        let flat = Pair::flat(2, 3, 1, 6).unwrap();
        let kappa = contact_map(&flat);
        assert_eq!(kappa.target_dim(), 1);
        assert_eq!(corank(&kappa), 1);
        let curves = Pair::new(1, 2, 1, germ(1, &[&[(1, &[2])]]), germ(1, &[]), germ(1, &[]), germ(1, &[&[(-1, &[2])]]))
            .unwrap();
        assert_eq!(contact_map(&curves), germ(1, &[&[(2, &[2])]]));
        assert_eq!(local_algebra(&contact_map(&curves)).dimension, Codim::Finite(2));
        let surfaces = Pair::new(
            2,
            4,
            2,
            germ(2, &[&[(1, &[1, 1])], &[(1, &[2, 0])]]),
            germ(2, &[]),
            germ(2, &[]),
            germ(2, &[&[], &[(-1, &[0, 2])]]),
        )
        .unwrap();
        assert_eq!(contact_map(&surfaces), germ(2, &[&[(1, &[1, 1])], &[(1, &[2, 0]), (1, &[0, 2])]]));
    }

    #[test]
    fn rejects_linear_terms_and_bad_blocks() {
        let bad = Pair::new(1, 2, 1, germ(1, &[&[(1, &[1])]]), germ(1, &[]), germ(1, &[]), germ(1, &[&[]]));
        assert!(matches!(bad, Err(Error::Domain(_))));
        assert!(Pair::flat(2, 3, 0, 4).is_err());
        assert!(Pair::flat(3, 4, 1, 4).is_err());
        assert!(Pair::flat(3, 4, 2, 4).is_ok());
    }

    #[test]
    fn reduce_to_theta_examples() {
        // kappa(y, z) = (z, y^3) has two components, so q - n = 2
        let kappa = germ(2, &[&[(1, &[0, 1])], &[(1, &[3, 0])]]);
        assert_eq!(reduce_to_theta(&kappa, 2, 4).unwrap(), germ(1, &[&[(1, &[3])]]));
        assert!(reduce_to_theta(&kappa, 2, 3).is_err());
        let flat = Pair::flat(2, 3, 1, 6).unwrap();
        assert_eq!(reduce_to_theta(&contact_map(&flat), 2, 3), Err(Error::Regular));
    }

    #[test]
    fn pi_tilde_examples() {
        let curves = Pair::new(1, 2, 1, germ(1, &[&[(1, &[2])]]), germ(1, &[]), germ(1, &[]), germ(1, &[&[(1, &[2])]]))
            .unwrap();
        let pi = pi_tilde_local(&curves, &q(1, 2)).unwrap();
        let half = q(1, 2);
        let expected = MapGerm::new(
            2,
            8,
            vec![
                crate::jet::JetPoly::from_terms(2, 8, [(Monomial(vec![1, 0]), half.clone()), (Monomial(vec![0, 1]), half.clone())]),
                crate::jet::JetPoly::from_terms(2, 8, [(Monomial(vec![2, 0]), half.clone()), (Monomial(vec![0, 2]), half.clone())]),
            ],
        )
        .unwrap();
        assert_eq!(pi, expected);
        for (n, qq, k) in [(1, 2, 1), (2, 3, 1), (2, 3, 2), (2, 4, 1), (3, 5, 2)] {
            let flat = Pair::flat(n, qq, k, 5).unwrap();
            let pi = pi_tilde_local(&flat, &q(2, 5)).unwrap();
            assert_eq!(crate::linalg::rank(&pi.linear_matrix()), 2 * n - k);
        }
    }

    #[test]
    fn lambda_contact_scaling() {
        let pair = Pair::new(1, 2, 1, germ(1, &[&[(1, &[2])]]), germ(1, &[]), germ(1, &[]), germ(1, &[&[(1, &[2]), (1, &[3])]]))
            .unwrap();
        // λ = 1/2: ζ_λ(y) = -ζ(-y) = -y^2 + y^3
        let k = lambda_contact_from_pair(&pair, &q(1, 2)).unwrap();
        assert_eq!(k, germ(1, &[&[(2, &[2]), (-1, &[3])]]));
        // λ = 1/3: c = 2, ζ_λ(y) = -2 ζ(-y/2) = -y^2/2 + y^3/4
        let k = lambda_contact_from_pair(&pair, &q(1, 3)).unwrap();
        let expected = MapGerm::new(
            1,
            8,
            vec![crate::jet::JetPoly::from_terms(1, 8, [(Monomial(vec![2]), q(3, 2)), (Monomial(vec![3]), q(-1, 4))])],
        )
        .unwrap();
        assert_eq!(k, expected);
        let flat = Pair::flat(2, 4, 1, 6).unwrap();
        assert_eq!(lambda_contact_from_pair(&flat, &q(1, 3)).unwrap(), contact_map(&flat));
        assert_eq!(lambda_contact_from_pair(&flat, &q(1, 1)), Err(Error::InvalidLambda));
    }

    #[test]
    fn curve_cusp_ring_dims_agree() {
        // ζ_λ(y) = -ζ(-y) = y^2 cancels the quadratic part of φ, leaving κ = y^3
        let pair = Pair::new(1, 2, 1, germ(1, &[&[(1, &[2]), (1, &[3])]]), germ(1, &[]), germ(1, &[]), germ(1, &[&[(-1, &[2])]]))
            .unwrap();
        let dims = local_ring_dims(&pair, &q(1, 2), 6).unwrap();
        assert!(dims.agree());
        assert_eq!(dims.theta.dimension, Codim::Finite(3));
    }
}
