use proptest::prelude::*;

use representer_core::par::Execution;
use representer_core::proximinality::{
    image_ball_closed, kernel_proximinal_single, reflexivity_note, Conclusion, Method, ProxWitness,
};
use representer_core::spaces::{dual_norm, DualFunctional, Monotone, SpaceSpec, TailRule};

/// Prefix plus a one-signed rational tail, so `|Lₙ|` is monotone on the tail.
fn functional() -> impl Strategy<Value = DualFunctional> {
    (
        prop::collection::vec(-3.0f64..3.0, 0..4),
        -4.0f64..4.0,
        -4.0f64..4.0,
        0.2f64..3.0,
        0.0f64..4.0,
    )
        .prop_filter_map("valid rule", |(prefix, a, b, c, d)| {
            let det = a * d - b * c;
            if det.abs() < 1e-6 {
                return None;
            }
            let mono = if det > 0.0 { Monotone::Increasing } else { Monotone::Decreasing };
            let tail = TailRule::rational(a, b, c, d, prefix.len() + 1, mono).ok()?;
            let (first, lim) = (tail.value(prefix.len() + 1), tail.limit());
            (first * lim > 0.0).then_some(())?;
            DualFunctional::new(prefix, tail).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Proximinal exactly when the truncated minimum `1/max_{n≤N}|Lₙ|`
    /// stabilizes; checked up to `N = 10⁴`.
    #[test]
    fn single_verdict_matches_truncations(l in functional()) {
        let rep = kernel_proximinal_single(&SpaceSpec::SequenceL1, &l).unwrap();
        let mut running = 0.0f64;
        let values: Vec<f64> = (1..=10_000).map(|n| { running = running.max(l.value(n).abs()); 1.0 / running }).collect();
        let last = values[values.len() - 1];
        let settles_at = values.iter().position(|v| *v == last).unwrap();
        let stable = settles_at < values.len() - 1;
        match rep.conclusion {
            Conclusion::Proximinal => {
                prop_assert!(stable);
                let Some(ProxWitness::AttainingIndex { index }) = rep.witness else {
                    return Err(TestCaseError::fail("missing attaining index"));
                };
                prop_assert_eq!(l.value(index).abs(), dual_norm(&l).value);
                prop_assert!(values[index - 1..].iter().all(|v| *v == values[index - 1]));
            }
            Conclusion::NotProximinal => {
                prop_assert!(!stable);
                let Some(ProxWitness::NonAttained(note)) = &rep.witness else {
                    return Err(TestCaseError::fail("missing analytic note"));
                };
                prop_assert!(note.verify(std::slice::from_ref(&l)));
                prop_assert!(note.sup > note.prefix_max);
            }
            Conclusion::Inconclusive => prop_assert!(false, "single functionals are always decided"),
        }
    }

    #[test]
    fn finite_sets_are_proximinal(
        n in 1usize..6,
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 1..4),
    ) {
        let s = SpaceSpec::finite(1.0, n).unwrap();
        let ls: Vec<DualFunctional> = rows.iter().map(|r| DualFunctional::finite(r[..n].to_vec())).collect();
        let r = image_ball_closed(&s, &ls, &[], 0, Execution::Sequential).unwrap();
        prop_assert_eq!(r.conclusion, Conclusion::Proximinal);
        prop_assert_eq!(r.method, Method::FiniteDimCompactness);
    }

    /// Hull evidence alone never decides; a NotProximinal answer always
    /// carries a note that checks out.
    #[test]
    fn not_proximinal_always_justified(l in functional(), head in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let ls = vec![l, DualFunctional::finite(head)];
        let r = image_ball_closed(&SpaceSpec::SequenceL1, &ls, &[8, 32], 0, Execution::Sequential).unwrap();
        match r.conclusion {
            Conclusion::NotProximinal => {
                let Some(ProxWitness::NonAttained(note)) = &r.witness else {
                    return Err(TestCaseError::fail("NotProximinal without a note"));
                };
                prop_assert!(note.verify(&ls));
            }
            Conclusion::Proximinal | Conclusion::Inconclusive => {
                prop_assert!(!matches!(r.witness, Some(ProxWitness::NonAttained(_))));
            }
        }
    }
}

#[test]
fn reflexivity_notes() {
    assert_ne!(reflexivity_note(&SpaceSpec::finite(2.0, 1).unwrap()), reflexivity_note(&SpaceSpec::SequenceL1));
}
