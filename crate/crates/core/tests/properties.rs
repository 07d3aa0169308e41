use equidistants::algebra::{corank, default_order, ke_codimension, random_k_move};
use equidistants::classify::{normal_form, recognize, GermClass};
use equidistants::contact::{lambda_reflection, local_ring_dims, random_graph_pair};
use equidistants::io::{germ_from_json, germ_to_json, graph_pair_from_json, graph_pair_to_json};
use equidistants::jet::{JetPoly, MapGerm, Monomial};
use equidistants::{Germ, Rational};
use num_bigint::BigInt;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| q(n, d))
}

fn nonzero_lambda() -> impl Strategy<Value = Rational> {
    rational().prop_filter("lambda must differ from 0 and 1", |l| *l != q(0, 1) && *l != q(1, 1))
}

/// Germ in `nvars` variables without constant terms; degrees 1 to 3.
fn germ(nvars: usize, ncomp: usize, order: usize) -> impl Strategy<Value = Germ> {
    let term = (prop::collection::vec(0u16..=2, nvars), -4i64..=4)
        .prop_filter("no constant term", |(e, _)| e.iter().any(|&x| x > 0));
    prop::collection::vec(prop::collection::vec(term, 0..5), ncomp).prop_map(move |comps| {
        let comps = comps
            .into_iter()
            .map(|terms| {
                let terms = terms.into_iter().map(|(e, c)| (Monomial(e), q(c, 1)));
                JetPoly::from_terms(nvars, order, terms)
            })
            .collect();
        MapGerm::new(nvars, order, comps).expect("no constants")
    })
}

const SIMPLE: [&str; 9] = ["A1", "A2", "A3", "A4", "D4+", "D4-", "D5+", "C2,2+", "C2,2-"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn k_moves_preserve_class(idx in 0usize..SIMPLE.len(), seed in any::<u64>()) {
        let class: GermClass = SIMPLE[idx].parse().unwrap();
        let nf = normal_form(&class, class.intrinsic_source()).unwrap();
        let moved = random_k_move(&nf, seed);
        prop_assert_eq!(ke_codimension(&moved), ke_codimension(&nf));
        prop_assert_eq!(corank(&moved), corank(&nf));
        let found = recognize(&moved).unwrap();
        prop_assert!(found.same_type(&class), "{} recognized as {}", class, found);
    }

    #[test]
    fn reduction_keeps_local_ring(seed in 0u64..10_000, which in 0usize..2) {
        let (n, q_dim, k) = [(1, 2, 1), (2, 4, 2)][which];
        let order = default_order(2 * n);
        let gp = random_graph_pair::<Rational>(n, q_dim, k, order, seed).unwrap();
        let dims = local_ring_dims(&gp, &q(1, 3), order).unwrap();
        prop_assert_eq!(&dims.kappa.hilbert, &dims.theta.hilbert);
        prop_assert_eq!(&dims.pi.hilbert, &dims.kappa.hilbert);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_is_associative(f in germ(2, 2, 5), g in germ(2, 2, 5), h in germ(2, 2, 5)) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn identity_is_neutral(f in germ(3, 2, 4)) {
        let id = MapGerm::identity(3, 4);
        prop_assert_eq!(f.compose(&id).unwrap(), f.clone());
        let id2 = MapGerm::identity(2, 4);
        prop_assert_eq!(id2.compose(&f).unwrap(), f);
    }

    #[test]
    fn reflection_recovers_partner(
        a in prop::collection::vec(rational(), 3),
        b in prop::collection::vec(rational(), 3),
        lambda in nonzero_lambda(),
    ) {
        let one = q(1, 1);
        let p: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| &lambda * x + (&one - &lambda) * y).collect();
        prop_assert_eq!(lambda_reflection(&p, &lambda, &b).unwrap(), a.clone());
        // the same point seen from the other end with 1 - λ
        let mu = &one - &lambda;
        if mu != q(0, 1) {
            prop_assert_eq!(lambda_reflection(&p, &mu, &a).unwrap(), b);
        }
    }

    #[test]
    fn germ_json_round_trip(f in germ(3, 2, 6)) {
        prop_assert_eq!(germ_from_json(&germ_to_json(&f)).unwrap(), f);
    }

    #[test]
    fn graph_pair_json_round_trip(seed in any::<u64>(), which in 0usize..3, lambda in nonzero_lambda()) {
        let (n, q_dim, k) = [(1, 2, 1), (2, 3, 2), (3, 5, 2)][which];
        let gp = random_graph_pair::<Rational>(n, q_dim, k, 6, seed).unwrap();
        let (back, l) = graph_pair_from_json(&graph_pair_to_json(&gp, Some(&lambda))).unwrap();
        prop_assert_eq!(back, gp);
        prop_assert_eq!(l, Some(lambda));
    }
}
