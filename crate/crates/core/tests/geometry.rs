use std::f64::consts::{PI, TAU};

use equidistants::geometry::{
    detect_singularities, find_parallel_pairs, lambda_map_singular_values, parallelism, trace_equidistant,
    PairPoint, ParametricManifold, SingularityLabel, RANK_TOL,
};
use proptest::prelude::*;

const BAND: f64 = 10.0 * TAU / 512.0;

fn gap(s: f64, t: f64) -> f64 {
    let d = (s - t).rem_euclid(TAU);
    d.min(TAU - d)
}

fn det_tangents(m: &ParametricManifold, s: f64, t: f64) -> f64 {
    let (a, b) = (m.derivative(&[s], &[1]), m.derivative(&[t], &[1]));
    a[0] * b[1] - a[1] * b[0]
}

fn curvature(m: &ParametricManifold, s: f64) -> f64 {
    let d1 = m.derivative(&[s], &[1]);
    let d2 = m.derivative(&[s], &[2]);
    (d1[0] * d2[1] - d1[1] * d2[0]) / d1[0].hypot(d1[1]).powi(3)
}

/// Cusp count by brute force: sign changes of `λκ(t) + (1-λ)σκ(s)` along the
/// zero set of `det[ι'(s), ι'(t)]`, found by marching squares.
fn brute_force_cusps(m: &ParametricManifold, lambda: f64, grid: usize) -> usize {
    let h = TAU / grid as f64;
    let f = |s: f64, t: f64| {
        let (a, b) = (m.derivative(&[s], &[1]), m.derivative(&[t], &[1]));
        let sigma = (a[0] * b[0] + a[1] * b[1]).signum();
        lambda * curvature(m, t) + (1.0 - lambda) * sigma * curvature(m, s)
    };
    let mut count = 0;
    for i in 0..grid {
        for j in 0..grid {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(a, b)| (a as f64 * h, b as f64 * h));
            let v = c.map(|(s, t)| det_tangents(m, s, t));
            let mut cross = Vec::new();
            for e in 0..4 {
                let (v0, v1) = (v[e], v[(e + 1) % 4]);
                if (v0 < 0.0) != (v1 < 0.0) {
                    let w = v0 / (v0 - v1);
                    let (p, q) = (c[e], c[(e + 1) % 4]);
                    cross.push((p.0 + w * (q.0 - p.0), p.1 + w * (q.1 - p.1)));
                }
            }
            for seg in cross.chunks(2) {
                if let [p, q] = seg {
                    if gap(p.0, p.1) > BAND && gap(q.0, q.1) > BAND && (f(p.0, p.1) < 0.0) != (f(q.0, q.1) < 0.0) {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

#[test]
fn ellipse_pairs_are_antipodal() {
    let m = ParametricManifold::ellipse(2.0, 1.0).unwrap();
    let pairs = find_parallel_pairs(&m, 256, 1e-10).unwrap();
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert!((gap(p.s[0], p.t[0]) - PI).abs() < 1e-8, "pair {:?}", (p.s[0], p.t[0]));
    }
    // independent scan: every zero of det[ι'(s), ι'(·)] off the band sits at s + π
    let n = 720;
    for i in 0..n {
        let s = TAU * i as f64 / n as f64;
        for j in 0..4 * n {
            let (t0, t1) = (TAU * j as f64 / (4 * n) as f64, TAU * (j + 1) as f64 / (4 * n) as f64);
            if gap(s, t0) > BAND && (det_tangents(&m, s, t0) < 0.0) != (det_tangents(&m, s, t1) < 0.0) {
                assert!((gap(s, t0) - PI).abs() < 0.01, "zero at {s}, {t0}");
            }
        }
    }
}

#[test]
fn ellipse_wigner_caustic_is_degenerate() {
    let m = ParametricManifold::ellipse(3.0, 1.0).unwrap();
    let branches = trace_equidistant(&m, 0.5, 0.05, BAND).unwrap();
    assert!(!branches.is_empty());
    for b in &branches {
        assert!(b.degenerate);
        assert!(b.points().iter().all(|x| x[0].hypot(x[1]) < 1e-9));
    }
}

#[test]
fn cusps_match_brute_force_away_from_half() {
    let m = ParametricManifold::fourier_oval(vec![0.0, 0.0, 0.2], vec![]).unwrap();
    for lambda in [0.3, 0.4] {
        let mut branches = trace_equidistant(&m, lambda, 0.05, BAND).unwrap();
        detect_singularities(&m, &mut branches, false).unwrap();
        let traced: usize = branches.iter().map(|b| b.cusp_count()).sum();
        assert_eq!(traced, brute_force_cusps(&m, lambda, 768), "lambda {lambda}");
    }
}

#[test]
fn ellipse_equidistants_are_smooth() {
    let m = ParametricManifold::ellipse(2.0, 1.0).unwrap();
    for lambda in [0.3, 0.4] {
        let mut branches = trace_equidistant(&m, lambda, 0.05, BAND).unwrap();
        detect_singularities(&m, &mut branches, false).unwrap();
        assert_eq!(brute_force_cusps(&m, lambda, 512), 0);
        assert!(branches.iter().all(|b| b.closed && b.annotations.is_empty()));
    }
}

#[test]
fn nodes_and_cusps_carry_expected_classes() {
    let m = ParametricManifold::fourier_oval(vec![0.0, 0.0, 0.2], vec![]).unwrap();
    let mut branches = trace_equidistant(&m, 0.4, 0.05, BAND).unwrap();
    detect_singularities(&m, &mut branches, true).unwrap();
    let mut nodes = 0;
    for a in branches.iter().flat_map(|b| &b.annotations) {
        let want = match a.label {
            SingularityLabel::A2Cusp => "A2",
            SingularityLabel::A1Node => {
                nodes += 1;
                "A1"
            }
            other => panic!("unexpected label {other:?}"),
        };
        assert_eq!(a.cross_check.as_ref().map(|c| c.to_string()).as_deref(), Some(want));
    }
    assert!(nodes > 0);
}

#[test]
fn non_parallel_pairs_are_regular_points() {
    let m = ParametricManifold::fourier_oval(vec![0.0, 0.1, 0.15], vec![0.05]).unwrap();
    let mut checked = 0;
    for i in 0..60 {
        for j in 0..60 {
            let (s, t) = (0.1 + TAU * i as f64 / 60.0, 0.37 + TAU * j as f64 / 60.0);
            let (a, b) = (m.derivative(&[s], &[1]), m.derivative(&[t], &[1]));
            let sine = det_tangents(&m, s, t) / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
            if sine.abs() > 1e-2 && gap(s, t) > BAND {
                let (lo, hi) = lambda_map_singular_values(&m, &[s], &[t], 0.4);
                assert!(lo / hi > 10.0 * RANK_TOL, "({s}, {t})");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn traced_points_are_critical() {
    let m = ParametricManifold::fourier_oval(vec![0.0, 0.1, 0.15], vec![0.05]).unwrap();
    for lambda in [0.25, 0.5, 0.7] {
        for b in trace_equidistant(&m, lambda, 0.05, BAND).unwrap() {
            for s in &b.samples {
                let (lo, hi) = lambda_map_singular_values(&m, &s.pair.s, &s.pair.t, lambda);
                assert!(lo / hi < RANK_TOL);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swapped_pairs_give_the_complementary_equidistant(
        a2 in -0.1f64..0.1, a3 in -0.1f64..0.1, b2 in -0.1f64..0.1,
        lambda in 0.05f64..0.95,
    ) {
        let m = ParametricManifold::fourier_oval(vec![0.0, a2, a3], vec![0.0, b2]).unwrap();
        let pairs = find_parallel_pairs(&m, 64, 1e-10).unwrap();
        prop_assert!(!pairs.is_empty());
        for p in pairs.iter().take(4) {
            let (k1, _) = parallelism(&m, &p.s, &p.t).unwrap();
            let (k2, _) = parallelism(&m, &p.t, &p.s).unwrap();
            prop_assert_eq!(k1, k2);
            let swapped = PairPoint::new(&m, p.t.clone(), p.s.clone()).unwrap();
            let x = p.lambda_point(lambda);
            let y = swapped.lambda_point(1.0 - lambda);
            prop_assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() < 1e-12));
        }
    }
}
