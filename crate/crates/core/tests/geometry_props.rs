use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use representer_core::geometry::{exposed_face, face_min, kernel_basis, tangent_sample};
use representer_core::regularizer::RegularizerSpec;
use representer_core::spaces::{lp_norm, norm, pair, DualFunctional, Monotone, PrimalVector, SpaceSpec, TailRule};

/// `ℓ¹ₙ` functional whose maximal coordinates are tied: entries with
/// `|v| ≥ 0.7` are snapped to `±1`.
fn tied_functional(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_map(|mut v| {
        v[0] = if v[0] < 0.0 { -1.0 } else { 1.0 };
        for x in v.iter_mut() {
            if x.abs() >= 0.7 {
                *x = x.signum();
            }
        }
        v
    })
}

fn random_sphere_point(rng: &mut ChaCha8Rng, n: usize, p: f64, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = lp_norm(&v, p);
        if s > 1e-3 {
            return v.iter().map(|x| radius * x / s).collect();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_face_properties(vals in tied_functional(4), radius in 0.1f64..5.0, seed in any::<u64>()) {
        let s = SpaceSpec::finite(1.0, 4).unwrap();
        let l = DualFunctional::finite(vals.clone());
        let face = exposed_face(&s, &l, radius).unwrap();
        let top = radius;
        for x in &face.extreme_points {
            prop_assert!((pair(&l, x) - top).abs() <= 1e-9);
            prop_assert!((norm(&s, x).unwrap() - radius).abs() <= 1e-12);
        }
        let on_face: Vec<usize> = (0..4).filter(|&i| vals[i].abs() == 1.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tested = 0;
        while tested < 100 {
            let scale = if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.2..1.0) };
            let y = random_sphere_point(&mut rng, 4, 1.0, radius * scale);
            // off the face: some mass on a non-maximal coordinate, or sign disagreement, or interior
            let on = (norm(&s, &PrimalVector::from_dense(&y)).unwrap() - radius).abs() < 1e-12
                && (0..4).all(|i| y[i] == 0.0 || (on_face.contains(&i) && y[i].signum() == vals[i].signum()));
            if on {
                continue;
            }
            tested += 1;
            prop_assert!(pair(&l, &PrimalVector::from_dense(&y)) < top);
        }
    }

    #[test]
    fn smooth_face_properties(p in prop::sample::select(vec![1.5, 2.0, 3.0]), vals in prop::collection::vec(-1.0f64..1.0, 3), radius in 0.1f64..5.0, seed in any::<u64>()) {
        let l = DualFunctional::finite(vals.clone());
        prop_assume!(!l.is_zero());
        let s = SpaceSpec::finite(p, 3).unwrap();
        let face = exposed_face(&s, &l, radius).unwrap();
        prop_assert!(face.is_point);
        let x = &face.extreme_points[0];
        let top = pair(&l, x);
        prop_assert!((top - radius * s.dual_norm_of(&l)).abs() <= 1e-9 * (1.0 + top.abs()));
        let xd = x.to_dense(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let y = random_sphere_point(&mut rng, 3, p, radius);
            let gap: f64 = y.iter().zip(&xd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap < 1e-3 * radius {
                continue;
            }
            prop_assert!(pair(&l, &PrimalVector::from_dense(&y)) < top);
        }
    }

    #[test]
    fn tangent_samples_are_exact(vals in prop::collection::vec(-5.0f64..5.0, 1..7), seed in any::<u64>()) {
        let n = vals.len();
        let l = DualFunctional::finite(vals);
        for s in [SpaceSpec::finite(1.0, n).unwrap(), SpaceSpec::finite(2.0, n).unwrap(), SpaceSpec::finite(3.0, n).unwrap()] {
            let ft = tangent_sample(&l, &s, seed);
            prop_assert_eq!(pair(&l, &ft), 0.0);
            prop_assert!(ft.max_index() <= n);
        }
    }

    #[test]
    fn tangent_samples_exact_on_sequences(prefix in prop::collection::vec(-3.0f64..3.0, 0..5), seed in any::<u64>()) {
        let start = prefix.len() + 1;
        let tail = TailRule::rational(1.0, 0.0, 1.0, 1.0, start, Monotone::Increasing).unwrap();
        let l = DualFunctional::new(prefix, tail).unwrap();
        let ft = tangent_sample(&l, &SpaceSpec::SequenceL1, seed);
        prop_assert_eq!(pair(&l, &ft), 0.0);
    }

    #[test]
    fn kernel_basis_annihilated(rows in prop::collection::vec(prop::collection::vec(-2i32..=2, 5), 1..4)) {
        let s = SpaceSpec::finite(2.0, 5).unwrap();
        let ls: Vec<DualFunctional> = rows.iter().map(|r| DualFunctional::finite(r.iter().map(|&v| v as f64).collect())).collect();
        let z = kernel_basis(&s, &ls, None).unwrap();
        prop_assert_eq!(z.basis.len() + z.rank, 5);
        for b in &z.basis {
            for l in &ls {
                prop_assert!(pair(l, b).abs() <= 1e-12);
            }
        }
    }

    /// Face minimum against every extreme point and 1000 random face points,
    /// within the Lipschitz bound of the barycentric grid.
    #[test]
    fn face_min_is_minimal(vals in tied_functional(3), radius in 0.2f64..2.0, seed in any::<u64>()) {
        let s = SpaceSpec::finite(1.0, 3).unwrap();
        let l = DualFunctional::finite(vals);
        let face = exposed_face(&s, &l, radius).unwrap();
        let omega = RegularizerSpec::custom("(x1 - 0.3)^2 + abs(x2) + x3^3").unwrap();
        let grid = 12;
        let fm = face_min(&face, &omega, grid);
        let k = face.extreme_points.len();
        let lip = 2.0 * (radius + 0.3) + 1.0 + 3.0 * radius * radius;
        let bound = lip * radius * k as f64 / grid as f64;
        for x in &face.extreme_points {
            prop_assert!(fm.value <= omega.eval(&s, x) + 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let w: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
            let total: f64 = w.iter().sum();
            let mut y = PrimalVector::zero();
            for (wi, v) in w.iter().zip(&face.extreme_points) {
                y = y.axpy(wi / total, v);
            }
            prop_assert!(fm.value <= omega.eval(&s, &y) + bound);
        }
        prop_assert!((omega.eval(&s, &fm.point) - fm.value).abs() <= 1e-12);
    }
}
