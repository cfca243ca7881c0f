use std::sync::Arc;

use cr_orient::analytic_oracles::{minus_pi_field, winding_gauge_field, winding_gauge_squared};
use cr_orient::cr_operator::{Discretization, TolPolicy};
use cr_orient::orientation::{conjugation_sign, predict_sign};
use cr_orient::unitary::{PadIdentity, Product, RotationBump};
use cr_orient::SharedUnitary;

fn disc() -> Discretization {
    Discretization::new(6, 5.0, 64).unwrap()
}

fn sign(u: &SharedUnitary, steps: usize) -> i8 {
    conjugation_sign(u, &minus_pi_field(u.n()), &disc(), steps, &TolPolicy::default())
        .unwrap()
        .sign
}

#[test]
fn signs_multiply_under_products() {
    let w = winding_gauge_field();
    let v: SharedUnitary = Arc::new(RotationBump { amplitude: 1.0 });
    let vw: SharedUnitary = Arc::new(Product::new(v.clone(), w.clone()).unwrap());
    let (sv, sw) = (sign(&v, 64), sign(&w, 64));
    assert_eq!(sign(&vw, 64), sv * sw);
    assert_eq!(sign(&winding_gauge_squared(), 64), sw * sw);
}

#[test]
fn signs_stable_under_grid_refinement() {
    let w = winding_gauge_field();
    let padded: SharedUnitary = Arc::new(PadIdentity { inner: w.clone(), extra: 1 });
    for u in [w, padded] {
        let s = sign(&u, 32);
        assert_eq!(sign(&u, 64), s);
        assert_eq!(s, predict_sign(&*u).unwrap());
    }
}

#[test]
fn unsuitable_gauges_are_rejected() {
    let phase: SharedUnitary = Arc::new(cr_orient::unitary::PhaseRamp { turns: 1 });
    // dimension of the gauge must match the base
    assert!(conjugation_sign(&phase, &minus_pi_field(2), &disc(), 8, &TolPolicy::default()).is_err());
}
