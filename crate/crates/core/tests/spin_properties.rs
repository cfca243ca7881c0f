use cr_orient::spin_lift::{lifts_to_spin, winding_number, SoLoop};
use cr_orient::unitary::boundary_loop;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn perturb(lp: &SoLoop, size: f64, seed: u64) -> SoLoop {
    lp.perturbed(size, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn base_loop(n: usize, turns: i64) -> SoLoop {
    SoLoop::planar_rotation(n, turns, 96).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perturbations_keep_winding_and_lift(n in 2usize..=5, turns in -3i64..=3, seed in any::<u64>()) {
        let lp = base_loop(n, turns);
        let q = perturb(&lp, 0.05, seed);
        prop_assert_eq!(lifts_to_spin(&q).unwrap().lifts, lifts_to_spin(&lp).unwrap().lifts);
        if n == 2 {
            prop_assert_eq!(winding_number(&q).unwrap(), turns);
        }
    }

    #[test]
    fn winding_adds_under_concatenation(a in -3i64..=3, b in -3i64..=3) {
        let cat = base_loop(2, a).concat(&base_loop(2, b)).unwrap();
        prop_assert_eq!(winding_number(&cat).unwrap(), a + b);
    }

    #[test]
    fn squares_always_lift(n in 2usize..=6, turns in -3i64..=3, seed in any::<u64>()) {
        // the pointwise square turns twice as fast, so sample finer
        let lp = perturb(&SoLoop::planar_rotation(n, turns, 256).unwrap(), 0.05, seed);
        prop_assert!(lifts_to_spin(&lp.pointwise(&lp).unwrap()).unwrap().lifts);
        prop_assert!(lifts_to_spin(&lp.concat(&lp).unwrap()).unwrap().lifts);
    }

    #[test]
    fn reversal_negates_winding(turns in -3i64..=3, n in 3usize..=5) {
        let lp = base_loop(2, turns);
        prop_assert_eq!(winding_number(&lp.reversed()).unwrap(), -turns);
        let big = base_loop(n, turns);
        prop_assert_eq!(
            lifts_to_spin(&big.reversed()).unwrap().lifts,
            lifts_to_spin(&big).unwrap().lifts
        );
    }

    #[test]
    fn block_embedding_lifts_iff_winding_even(turns in -4i64..=4, extra in 1usize..=6) {
        let lp = base_loop(2, turns).pad(extra);
        prop_assert_eq!(lifts_to_spin(&lp).unwrap().lifts, turns % 2 == 0);
    }
}

#[test]
fn winding_gauge_boundary_loop() {
    let w = cr_orient::analytic_oracles::winding_gauge_field();
    let lp = SoLoop::new(boundary_loop(&*w, 128)).unwrap();
    assert_eq!(winding_number(&lp).unwrap(), 1);
    assert!(!lifts_to_spin(&lp.pad(1)).unwrap().lifts);
    assert!(lifts_to_spin(&lp.pad(1).pointwise(&lp.pad(1)).unwrap()).unwrap().lifts);
}
