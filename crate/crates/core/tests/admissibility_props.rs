use proptest::prelude::*;

use representer_core::admissibility::{
    admissibility_verdict, check_radial_face_monotone, check_tangential_bound, default_radii, Budget, Witness,
};
use representer_core::par::Execution;
use representer_core::regularizer::{Mollifier, Profile, RegularizerSpec};
use representer_core::spaces::{pair, SpaceSpec};

fn space() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        (2usize..=4).prop_map(|n| SpaceSpec::finite(1.0, n).unwrap()),
        (2usize..=3).prop_map(|n| SpaceSpec::finite(2.0, n).unwrap()),
        Just(SpaceSpec::finite(3.0, 3).unwrap()),
        Just(SpaceSpec::SequenceL1),
    ]
}

/// Nondecreasing table: positive increments with occasional upward jumps.
fn monotone_table() -> impl Strategy<Value = RegularizerSpec> {
    prop::collection::vec((0.1f64..2.0, 0.0f64..1.0, prop::bool::ANY), 1..6).prop_map(|steps| {
        let mut pts = vec![[0.0, 0.0]];
        let (mut r, mut v) = (0.0, 0.0);
        for (dr, dv, jump) in steps {
            r += dr;
            v += dv;
            pts.push([r, v]);
            if jump {
                v += 0.5;
                pts.push([r, v]);
            }
        }
        RegularizerSpec::radial(Profile::table(pts).unwrap()).unwrap()
    })
}

fn arbitrary_omega() -> impl Strategy<Value = RegularizerSpec> {
    prop::sample::select(vec![
        "x1",
        "x1^2 - x2",
        "norm^2 - 3*abs(x1)",
        "(norm - 1)^2",
        "max(abs(x1), abs(x2)) * 2 - norm",
        "exp(-norm)",
    ])
    .prop_map(|src| RegularizerSpec::custom(src).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radial_monotone_always_passes(om in monotone_table(), s in space(), seed in any::<u64>()) {
        let tang = check_tangential_bound(&om, &s, 100, seed, 1e-9, Execution::Parallel);
        prop_assert!(tang.passed, "{:?}", tang.witness);
        let rad = check_radial_face_monotone(&om, &s, 4, &default_radii(), seed, 1e-9, Execution::Parallel);
        prop_assert!(rad.passed, "{:?}", rad.witness);
    }

    #[test]
    fn failures_reverify_standalone(om in arbitrary_omega(), s in space(), seed in any::<u64>()) {
        let b = Budget { n_samples: 100, n_faces: 4, seed, tol: 1e-9 };
        let v = admissibility_verdict(&om, &s, &b, Execution::Parallel);
        for rep in [&v.tangential, &v.radial] {
            prop_assert_eq!(rep.passed, rep.witness.is_none());
            if let Some(w) = &rep.witness {
                let back: Witness = serde_json::from_str(&serde_json::to_string(w).unwrap()).unwrap();
                prop_assert!(back.reverify(&om, &s, 1e-9));
                if let Witness::Tangential { l, f_t, f, .. } = &back {
                    prop_assert_eq!(pair(l, f_t), 0.0);
                    prop_assert!(om.eval(&s, &f.add(f_t)) < om.eval(&s, f) - 1e-9);
                }
            }
        }
    }

    #[test]
    fn mollification_preserves_passing(om in monotone_table(), s in space(), seed in any::<u64>()) {
        let smooth = om.with_mollifier(Mollifier::uniform(32)).unwrap();
        let tang = check_tangential_bound(&smooth, &s, 60, seed, 1e-8, Execution::Parallel);
        prop_assert!(tang.passed, "{:?}", tang.witness);
        let rad = check_radial_face_monotone(&smooth, &s, 3, &default_radii(), seed, 1e-8, Execution::Parallel);
        prop_assert!(rad.passed, "{:?}", rad.witness);
    }

    #[test]
    fn reports_are_deterministic(om in arbitrary_omega(), s in space(), seed in any::<u64>()) {
        let b = Budget { n_samples: 50, n_faces: 3, seed, tol: 1e-9 };
        let a = serde_json::to_string(&admissibility_verdict(&om, &s, &b, Execution::Parallel)).unwrap();
        let c = serde_json::to_string(&admissibility_verdict(&om, &s, &b, Execution::Sequential)).unwrap();
        let d = serde_json::to_string(&admissibility_verdict(&om, &s, &b, Execution::Parallel)).unwrap();
        prop_assert_eq!(&a, &c);
        prop_assert_eq!(&a, &d);
    }
}

#[test]
fn known_verdicts() {
    let s = SpaceSpec::finite(1.0, 3).unwrap();
    let b = Budget {
        n_samples: 100,
        n_faces: 6,
        ..Budget::default()
    };
    let norm = admissibility_verdict(&RegularizerSpec::norm(), &s, &b, Execution::Parallel);
    assert!(norm.consistent(), "{}", norm.text);
    let bad = admissibility_verdict(&RegularizerSpec::custom("x1").unwrap(), &s, &b, Execution::Parallel);
    assert!(!bad.consistent());
    assert!(bad.first_witness.unwrap().reverify(&RegularizerSpec::custom("x1").unwrap(), &s, 1e-9));
}
