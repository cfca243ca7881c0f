use std::f64::consts::PI;

use cr_orient::symplectic_path::{endpoint_determinant, rotation_path, DEGENERACY_THRESHOLD};
use cr_orient::{conley_zehnder_index, integrate_symplectic_path, SymmetricLoop, SymplecticPath};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `S(t) = A + B cos 2 pi t + C sin 2 pi t` with symmetric 2x2 blocks, sampled.
fn trig_loop(coef: &[f64; 9], samples: usize) -> SymmetricLoop {
    let sym = |a: f64, b: f64, c: f64| DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
    let (a, b, c) = (
        sym(coef[0], coef[1], coef[2]),
        sym(coef[3], coef[4], coef[5]),
        sym(coef[6], coef[7], coef[8]),
    );
    SymmetricLoop::sampled(
        (0..samples)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / samples as f64;
                &a + &b * x.cos() + &c * x.sin()
            })
            .collect(),
    )
    .unwrap()
}

fn coefficients() -> impl Strategy<Value = [f64; 9]> {
    prop::array::uniform9(-6.0..6.0f64)
}

/// Keeps the endpoint well away from degenerate, so refinement cannot flip it.
fn robust(path: &SymplecticPath) -> bool {
    endpoint_determinant(path) > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn index_stable_under_refinement(coef in coefficients()) {
        let lp = trig_loop(&coef, 64);
        let coarse = integrate_symplectic_path(&lp, 256).unwrap();
        prop_assume!(robust(&coarse));
        let mu = conley_zehnder_index(&coarse).unwrap().value;
        for steps in [512, 1024] {
            let p = integrate_symplectic_path(&lp, steps).unwrap();
            prop_assert_eq!(conley_zehnder_index(&p).unwrap().value, mu);
        }
    }

    #[test]
    fn symplectic_at_fine_resolution(coef in coefficients()) {
        let p = integrate_symplectic_path(&trig_loop(&coef, 64), 1024).unwrap();
        prop_assert!(p.symplecticity_defect() <= 1e-8);
    }

    #[test]
    fn index_additive_under_direct_sum(a in coefficients(), b in coefficients()) {
        let (la, lb) = (trig_loop(&a, 32), trig_loop(&b, 32));
        let pa = integrate_symplectic_path(&la, 512).unwrap();
        let pb = integrate_symplectic_path(&lb, 512).unwrap();
        prop_assume!(robust(&pa) && robust(&pb));
        let sum = integrate_symplectic_path(&la.direct_sum(&lb), 512).unwrap();
        prop_assert!(endpoint_determinant(&sum) > DEGENERACY_THRESHOLD);
        prop_assert_eq!(
            conley_zehnder_index(&sum).unwrap().value,
            conley_zehnder_index(&pa).unwrap().value + conley_zehnder_index(&pb).unwrap().value
        );
    }

    #[test]
    fn full_loops_shift_index_by_twice_the_winding(coef in coefficients(), k in -3i64..=3) {
        let steps = 1024;
        let p = integrate_symplectic_path(&trig_loop(&coef, 64), steps).unwrap();
        prop_assume!(robust(&p));
        let shifted = p.left_multiply(&rotation_path(2.0 * PI * k as f64, steps)).unwrap();
        prop_assert_eq!(
            conley_zehnder_index(&shifted).unwrap().value,
            conley_zehnder_index(&p).unwrap().value + 2 * k
        );
    }
}

#[test]
fn scalar_loops_follow_the_rotation_count() {
    // exp(c t J0) with c in (2 pi m, 2 pi (m + 1)) has index 2m + 1
    for m in -3i64..=2 {
        let c = 2.0 * PI * m as f64 + PI;
        let p = rotation_path(c, 512);
        assert_eq!(conley_zehnder_index(&p).unwrap().value, 2 * m + 1, "c = {c}");
    }
}
