//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use thermosmc::model::Support;
use thermosmc::parallel::partition;
use thermosmc::smc::{effective_size, weights_from_energies};

proptest! {
    #[test]
    fn bijections_round_trip(q in -30.0f64..30.0) {
        for support in [Support::Real, Support::Positive] {
            let back = support.from_support(support.to_support(q));
            prop_assert!((back - q).abs() < 1e-10, "{support:?}: {q} -> {back}");
        }
    }

    // Past |q| ~ 13 the logistic saturates: rounding sigmoid(q) to f64 already
    // loses more than 1e-10 of the logit, so the contract is scoped to the
    // representable regime.
    #[test]
    fn interval_bijection_round_trips(q in -12.0f64..12.0) {
        let back = Support::UnitInterval.from_support(Support::UnitInterval.to_support(q));
        prop_assert!((back - q).abs() < 1e-10, "{q} -> {back}");
    }

    #[test]
    fn unit_interval_map_is_monotone(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        prop_assume!(a < b);
        prop_assert!(Support::UnitInterval.to_support(a) < Support::UnitInterval.to_support(b));
        let xa = Support::UnitInterval.to_support(a);
        prop_assert!(0.0 < xa && xa < 1.0);
    }

    #[test]
    fn weights_normalize_and_ignore_energy_origin(
        energies in prop::collection::vec(-50.0f64..400.0, 1..40),
        shift in -1e4f64..1e4,
        temperature in 0.05f64..50.0,
    ) {
        let weights = weights_from_energies(&energies, temperature, 1.0).unwrap();
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);

        let moved: Vec<f64> = energies.iter().map(|e| e + shift).collect();
        let shifted = weights_from_energies(&moved, temperature, 1.0).unwrap();
        for (w, v) in weights.iter().zip(&shifted) {
            prop_assert!((w - v).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_size_stays_in_range(
        energies in prop::collection::vec(0.0f64..200.0, 1..40),
        temperature in 0.05f64..50.0,
    ) {
        let weights = weights_from_energies(&energies, temperature, 1.0).unwrap();
        let ess = effective_size(&weights).unwrap();
        let n = weights.len() as f64;
        prop_assert!(ess >= 1.0 - 1e-9 && ess <= n + 1e-9, "ess {ess} for n {n}");
    }

    #[test]
    fn uniform_weights_reach_the_upper_ess_bound(n in 1usize..200) {
        let weights = vec![1.0 / n as f64; n];
        let ess = effective_size(&weights).unwrap();
        prop_assert!((ess - n as f64).abs() < 1e-9);
    }

    #[test]
    fn partitions_cover_disjointly_and_balanced(n in 1usize..5000, w in 1usize..64) {
        prop_assume!(w <= n);
        let plan = partition(n, w).unwrap();
        let mut cursor = 0;
        for range in plan.ranges() {
            prop_assert_eq!(range.start, cursor);
            cursor = range.end;
        }
        prop_assert_eq!(cursor, n);
        let sizes: Vec<usize> = plan.ranges().iter().map(|r| r.len()).collect();
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
    }
}
