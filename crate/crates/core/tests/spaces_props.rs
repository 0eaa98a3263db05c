use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use representer_core::spaces::{
    dual_norm, duality_map, in_duality_set, lp_norm, norm, pair, DualFunctional, Monotone, PrimalVector, SpaceSpec,
    TailRule,
};

fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 1.25, 1.5, 2.0, 3.0, 4.0])
}

fn dense(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

/// Random valid rational rule `(αn+β)/(γn+δ)` starting at 1 with `γ > 0`.
fn rational_rule() -> impl Strategy<Value = TailRule> {
    (-4.0f64..4.0, -4.0f64..4.0, 0.1f64..3.0, 0.0f64..5.0).prop_filter_map("valid rule", |(a, b, c, d)| {
        let det = a * d - b * c;
        if det.abs() < 1e-6 {
            return None;
        }
        let mono = if det > 0.0 { Monotone::Increasing } else { Monotone::Decreasing };
        TailRule::rational(a, b, c, d, 1, mono).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn duality_definition_finite(p in exponent(), x in dense(5), seed in any::<u64>()) {
        let s = SpaceSpec::finite(p, 5).unwrap();
        let f = PrimalVector::from_dense(&x);
        prop_assume!(!f.is_zero());
        let r = norm(&s, &f).unwrap();
        let desc = duality_map(&s, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let l = desc.sample_member(&mut rng);
            prop_assert!(in_duality_set(&desc, &l, 1e-12));
            prop_assert!((pair(&l, &f) - r * r).abs() <= 1e-9 * (1.0 + r * r));
            prop_assert!((s.dual_norm_of(&l) - r).abs() <= 1e-9 * (1.0 + r));
        }
    }

    #[test]
    fn duality_definition_sequence(
        entries in prop::collection::btree_map(1usize..40, -3.0f64..3.0, 1..6),
        seed in any::<u64>(),
    ) {
        let f = PrimalVector::new(entries.into_iter().collect()).unwrap();
        prop_assume!(!f.is_zero());
        let s = SpaceSpec::SequenceL1;
        let r = norm(&s, &f).unwrap();
        let desc = duality_map(&s, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let l = desc.sample_member(&mut rng);
            prop_assert!((pair(&l, &f) - r * r).abs() <= 1e-9 * (1.0 + r * r));
            prop_assert!((dual_norm(&l).value - r).abs() <= 1e-9 * (1.0 + r));
        }
    }

    #[test]
    fn positive_homogeneity(p in exponent(), x in dense(4), alpha in 0.01f64..50.0) {
        let s = SpaceSpec::finite(p, 4).unwrap();
        let f = PrimalVector::from_dense(&x);
        prop_assume!(!f.is_zero());
        let scaled = duality_map(&s, &f.scale(alpha)).unwrap();
        let want = duality_map(&s, &f).unwrap().scale(alpha);
        let tol = 1e-12 * (1.0 + want.radius);
        prop_assert!((scaled.radius - want.radius).abs() <= tol);
        prop_assert!((scaled.box_bound - want.box_bound).abs() <= tol);
        prop_assert_eq!(scaled.fixed.len(), want.fixed.len());
        for (a, b) in scaled.fixed.iter().zip(&want.fixed) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 - b.1).abs() <= tol);
        }
    }

    #[test]
    fn gradient_of_half_norm_squared(p in prop::sample::select(vec![1.25, 1.5, 2.0, 3.0, 4.0]), x in dense(4)) {
        prop_assume!(x.iter().all(|v| v.abs() > 1e-3));
        let s = SpaceSpec::finite(p, 4).unwrap();
        let l = duality_map(&s, &PrimalVector::from_dense(&x)).unwrap().smooth_point.unwrap();
        let g = |v: &[f64]| 0.5 * lp_norm(v, p).powi(2);
        let h = 1e-6;
        for i in 0..4 {
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (g(&up) - g(&dn)) / (2.0 * h);
            prop_assert!((fd - l.value(i + 1)).abs() <= 1e-4, "coordinate {}: {} vs {}", i, fd, l.value(i + 1));
        }
    }

    #[test]
    fn serde_round_trip(x in prop::collection::vec(-5.0f64..5.0, 0..5), rule in rational_rule()) {
        let l = DualFunctional::new(x.clone(), rule).unwrap();
        let back: DualFunctional = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        prop_assert_eq!(&l, &back);
        let f = PrimalVector::from_dense(&x);
        let back: PrimalVector = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(f, back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Exact sup against a scan of the first million terms, within the
    /// distance of the last scanned term to the limit.
    #[test]
    fn dual_norm_matches_scan(prefix in prop::collection::vec(-2.0f64..2.0, 0..4), rule in rational_rule()) {
        let start = prefix.len() + 1;
        let rule = match rule {
            TailRule::Rational { alpha, beta, gamma, delta, monotone, .. } => {
                match TailRule::rational(alpha, beta, gamma, delta, start, monotone) {
                    Ok(r) => r,
                    Err(_) => return Ok(()),
                }
            }
            other => other,
        };
        let l = DualFunctional::new(prefix, rule).unwrap();
        let dn = dual_norm(&l);
        const K: usize = 1_000_000;
        let scan = (1..=K).map(|n| l.value(n).abs()).fold(0.0, f64::max);
        let tail_bound = (l.value(K).abs() - l.tail().limit().abs()).abs();
        let ulps = 1e-12 * (1.0 + dn.value);
        prop_assert!(scan <= dn.value + ulps);
        prop_assert!(dn.value - scan <= tail_bound + ulps, "sup {} scan {} bound {}", dn.value, scan, tail_bound);
        if let Some(w) = dn.witness {
            prop_assert!(dn.attained);
            prop_assert_eq!(l.value(w).abs(), dn.value);
        }
    }
}

#[test]
fn duality_examples() {
    let s = SpaceSpec::finite(2.0, 2).unwrap();
    let desc = duality_map(&s, &PrimalVector::from_dense(&[3.0, 4.0])).unwrap();
    assert!(in_duality_set(&desc, &DualFunctional::finite(vec![3.0, 4.0]), 1e-12));
    assert!(!in_duality_set(&desc, &DualFunctional::finite(vec![4.0, 3.0]), 1e-12));

    let s = SpaceSpec::finite(1.0, 3).unwrap();
    let desc = duality_map(&s, &PrimalVector::from_dense(&[1.0, 0.0, -1.0])).unwrap();
    assert_eq!(desc.fixed, vec![(1, 2.0), (3, -2.0)]);
    assert_eq!(desc.box_bound, 2.0);
    assert!(in_duality_set(&desc, &DualFunctional::finite(vec![2.0, -1.5, -2.0]), 1e-12));
    assert!(!in_duality_set(&desc, &DualFunctional::finite(vec![2.0, 2.5, -2.0]), 1e-12));
}
