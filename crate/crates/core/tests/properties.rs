//! Property tests for the structural invariants of the library.

use proptest::prelude::*;
use std::f64::consts::TAU;

use sqrs_core::inference::{
    circular_convolve, lambda_dispersion, n_effective, rescale_sum_to_theta, LikelihoodGrid,
};
use sqrs_core::qstate::{
    separable_outcome_prob, state_vector_oracle, Basis, EncodingPhase, PhaseAngle,
    ProbePreparation,
};

fn basis_strategy() -> impl Strategy<Value = Basis> {
    prop_oneof![Just(Basis::X), Just(Basis::Y)]
}

fn grid_strategy(k: usize) -> impl Strategy<Value = LikelihoodGrid> {
    proptest::collection::vec(0.0f64..1.0, k)
        .prop_map(|bins| LikelihoodGrid::from_bins(bins).into_normalized())
}

proptest! {
    #[test]
    fn phase_angle_always_canonical(x in -1e6f64..1e6) {
        let p = PhaseAngle::new(x);
        prop_assert!(p.radians() >= 0.0);
        prop_assert!(p.radians() < TAU);
        let q = PhaseAngle::new(0.25);
        let sum = p + q;
        prop_assert!(sum.radians() >= 0.0 && sum.radians() < TAU);
        let diff = p - q;
        prop_assert!(diff.radians() >= 0.0 && diff.radians() < TAU);
    }

    #[test]
    fn outcome_law_is_a_probability_and_matches_oracle(
        chi in 0.0f64..TAU,
        phi in 0.0f64..TAU,
        basis in basis_strategy(),
    ) {
        let p = separable_outcome_prob(PhaseAngle::new(chi), PhaseAngle::new(phi), basis);
        prop_assert!((0.0..=1.0).contains(&p));
        // Fold the continuous χ into the applied phase on a χ = 0 probe.
        let dist = state_vector_oracle(
            &ProbePreparation::Separable(vec![EncodingPhase::ZERO]),
            &[Some(PhaseAngle::new(chi + phi))],
            &[basis],
        ).unwrap();
        prop_assert!((dist[0] - p).abs() < 1e-12);
    }

    #[test]
    fn dispersion_stays_in_range(grid in grid_strategy(128), truth in 0.0f64..TAU) {
        let lam = lambda_dispersion(&grid, PhaseAngle::new(truth)).unwrap();
        prop_assert!(lam >= 0.0);
        prop_assert!(lam <= 2.0 + 1e-12);
    }

    #[test]
    fn convolution_is_order_invariant(
        a in grid_strategy(64),
        b in grid_strategy(64),
        c in grid_strategy(64),
    ) {
        let abc = circular_convolve(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let cba = circular_convolve(&[c, b, a]).unwrap();
        for (x, y) in abc.bins().iter().zip(cba.bins()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rescale_is_periodic_for_divisors(grid in grid_strategy(64), q in 1usize..=8) {
        prop_assume!(64 % q == 0);
        let out = rescale_sum_to_theta(&grid, q).unwrap();
        let period = 64 / q;
        for j in 0..64 {
            prop_assert!((out.bins()[j] - out.bins()[(j + period) % 64]).abs() < 1e-12);
        }
    }

    #[test]
    fn n_effective_bounded_by_smallest_count(counts in proptest::collection::vec(0usize..50, 1..6)) {
        let n_eff = n_effective(&counts).unwrap();
        let min = *counts.iter().min().unwrap();
        prop_assert!(n_eff <= min as f64 + 1e-12);
        prop_assert!(n_eff >= 0.0);
        if counts.iter().all(|&c| c > 0) {
            prop_assert!(n_eff > 0.0);
        } else {
            prop_assert!(n_eff == 0.0);
        }
    }

    #[test]
    fn normalization_mass_is_one(grid in grid_strategy(256)) {
        prop_assert!((grid.mass() - 1.0).abs() < 1e-9);
    }
}
