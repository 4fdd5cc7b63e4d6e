use greedyjump::geometry::{block_decrease_check, monotone_pairs_check};
use greedyjump::radial::reachable;
use greedyjump::*;
use proptest::prelude::*;

fn vector(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d).prop_filter("norm range", move |v| {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        n >= lo && n <= hi
    })
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..7).prop_flat_map(|d| (vector(d, 0.5, 10.0), vector(d, 0.1, 10.0)))
}

proptest! {
    #[test]
    fn sign_minimizes_norm((x, v) in pair()) {
        let (xp, vp) = (Point::new(x.clone()).unwrap(), Point::new(v.clone()).unwrap());
        if let Step::Moved(o) = greedy_step(&xp, &vp, &TiePolicy::halt()).unwrap() {
            let plus = xp.add_scaled(&vp, 1.0).norm();
            let minus = xp.add_scaled(&vp, -1.0).norm();
            prop_assert_eq!(o.next.norm(), plus.min(minus));
        }
    }

    #[test]
    fn norm_identity((x, v) in pair()) {
        let (xp, vp) = (Point::new(x).unwrap(), Point::new(v).unwrap());
        if let Step::Moved(o) = greedy_step(&xp, &vp, &TiePolicy::halt()).unwrap() {
            let lhs = o.next.norm().powi(2);
            let rhs = xp.norm().powi(2) - 2.0 * xp.dot(&vp).abs() + vp.norm().powi(2);
            let scale = xp.norm().powi(2) + vp.norm().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn jumps_are_bounded((x, v) in pair()) {
        let (xp, vp) = (Point::new(x).unwrap(), Point::new(v).unwrap());
        if let Step::Moved(o) = greedy_step(&xp, &vp, &TiePolicy::halt()).unwrap() {
            prop_assert!((o.next.norm() - xp.norm()).abs() <= vp.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn walk_is_centrally_symmetric(x in -20.0..20.0f64, y in -20.0..20.0f64, seed in any::<u64>(), which in 0usize..3) {
        let kind: SourceKind = ["kronecker:alpha=1.0415*sqrt2", "vdc:b=3", "polyphase:c=sqrt2:p=3"][which].parse().unwrap();
        let mut a = DirectionSource::new(kind.clone()).unwrap();
        let mut b = DirectionSource::new(kind).unwrap();
        let z = Point::xy(x, y);
        let fwd = simulate(&z, &mut a, 300, TiePolicy::halt()).unwrap();
        let back = simulate(&-&z, &mut b, 300, TiePolicy::halt()).unwrap();
        prop_assert_eq!(back, fwd.negated());
        let mut s1 = DirectionSource::sphere(3, seed).unwrap();
        let mut s2 = DirectionSource::sphere(3, seed).unwrap();
        let z3 = Point::new(vec![x, y, 1.0]).unwrap();
        let fwd = simulate(&z3, &mut s1, 100, TiePolicy::halt()).unwrap();
        let back = simulate(&-&z3, &mut s2, 100, TiePolicy::halt()).unwrap();
        prop_assert_eq!(back, fwd.negated());
    }

    #[test]
    fn norms_follow_states(x in -5.0..5.0f64, y in -5.0..5.0f64, seed in any::<u64>()) {
        let mut src = DirectionSource::sphere(2, seed).unwrap();
        let t = simulate(&Point::xy(x, y), &mut src, 200, TiePolicy::choose_plus()).unwrap();
        for (k, s) in t.states().enumerate() {
            prop_assert_eq!(Point::new(s.to_vec()).unwrap().norm(), t.norms()[k]);
        }
    }

    #[test]
    fn vdc_pairs_are_antipodal(n in 0u64..1 << 40) {
        let (a, b) = (vdc(2 * n, 2).unwrap(), vdc(2 * n + 1, 2).unwrap());
        prop_assert_eq!(b, a + 0.5);
    }

    #[test]
    fn vdc_blocks_are_rotated_copies(k in 0u64..1 << 30, base in 2u64..12) {
        let shift = vdc(k, base).unwrap() / base as f64;
        for j in 0..base {
            let got = vdc(k * base + j, base).unwrap();
            prop_assert!((got - (shift + j as f64 / base as f64)).abs() < 1e-15);
        }
        prop_assert!(vdc(k, base).unwrap() < 1.0);
    }

    #[test]
    fn sphere_streams_repeat(seed in any::<u64>(), d in 2usize..9) {
        let a: Vec<Point> = DirectionSource::sphere(d, seed).unwrap().take(50).collect();
        let b: Vec<Point> = DirectionSource::sphere(d, seed).unwrap().take(50).collect();
        prop_assert_eq!(&a, &b);
        for p in &a {
            prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn source_specs_round_trip(base in 2u64..1000, p in 1u32..6, c in 0.01..100.0f64, d in 2usize..50, seed in any::<u64>()) {
        for kind in [
            SourceKind::VanDerCorput { base },
            SourceKind::UniformSphere { dim: d, seed: Some(seed) },
            format!("polyphase:c={c}:p={p}").parse().unwrap(),
            format!("kronecker:alpha={c}").parse().unwrap(),
        ] {
            let back: SourceKind = kind.to_string().parse().unwrap();
            prop_assert_eq!(back, kind);
        }
    }

    #[test]
    fn radial_jumps_stay_in_support(r in 0.0..50.0f64, u in 0.0..=1.0f64) {
        let next = radial_step(r, u);
        let (lo, hi) = reachable(r);
        prop_assert!(next >= lo - 1e-12 && next <= hi + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn base2_runs_shrink(x in -60.0..60.0f64, y in -60.0..60.0f64) {
        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(x, y), &mut src, 20_000, TiePolicy::halt()).unwrap();
        prop_assert!(monotone_pairs_check(&t, 1e-9).unwrap().is_empty());
        prop_assert!(block_decrease_check(&t, 1e-9).unwrap().violations.is_empty());
    }
}
