use std::sync::Arc;

use finsler_core::jet::{jet_matrix_inverse, Jet, JetMatrix, JetSpace};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn space(dim: usize, order: usize) -> Arc<JetSpace> {
    Arc::new(JetSpace::new(dim, order).unwrap())
}

fn jet_in(s: Arc<JetSpace>, order: usize) -> impl Strategy<Value = Jet> {
    let len = s.len();
    prop::collection::vec(-2.0f64..2.0, len).prop_map(move |c| Jet::from_coeffs(&s, order, c).unwrap())
}

fn jet_strategy(dim: usize, order: usize) -> impl Strategy<Value = Jet> {
    jet_in(space(dim, order), order)
}

fn triple() -> impl Strategy<Value = (Jet, Jet, Jet)> {
    (1usize..=3, 1usize..=5).prop_flat_map(|(d, k)| {
        let s = space(d, k);
        (jet_in(s.clone(), k), jet_in(s.clone(), k), jet_in(s, k))
    })
}

proptest! {
    #[test]
    fn ring_axioms((a, b, c) in triple()) {
        prop_assert!((&a + &b).max_coeff_diff(&(&b + &a)) < TOL);
        prop_assert!((&a * &b).max_coeff_diff(&(&b * &a)) < TOL);
        prop_assert!((&(&a + &b) + &c).max_coeff_diff(&(&a + &(&b + &c))) < TOL);
        prop_assert!((&(&a * &b) * &c).max_coeff_diff(&(&a * &(&b * &c))) < 1e-9);
        prop_assert!((&a * &(&b + &c)).max_coeff_diff(&(&(&a * &b) + &(&a * &c))) < 1e-9);
        prop_assert!((&a - &a).coeffs().iter().all(|v| *v == 0.0));
        let one = Jet::constant(a.space(), 1.0);
        prop_assert!((&a * &one).max_coeff_diff(&a) < TOL);
    }

    #[test]
    fn reciprocal_and_roots(mut a in (1usize..=3, 1usize..=6).prop_flat_map(|(d, k)| jet_strategy(d, k))) {
        a = a.add_constant(3.0 - a.value());
        let one = Jet::constant(a.space(), 1.0);
        prop_assert!((&a * &a.recip().unwrap()).max_coeff_diff(&one) < 1e-9);
        let r = a.sqrt().unwrap();
        prop_assert!((&r * &r).max_coeff_diff(&a) < 1e-9);
        prop_assert!(a.ln().unwrap().exp().unwrap().max_coeff_diff(&a) < 1e-8);
        let s = a.sin().unwrap();
        let c = a.cos().unwrap();
        prop_assert!((&(&s * &s) + &(&c * &c)).max_coeff_diff(&one) < 1e-9);
    }

    #[test]
    fn derivative_lowers_order(a in jet_strategy(2, 5)) {
        let d = a.derivative(0).unwrap();
        prop_assert_eq!(d.order(), 4);
        prop_assert!((d.partial(&[1]).unwrap() - a.partial(&[0, 1]).unwrap()).abs() < TOL);
    }
}

#[test]
fn exp_derivatives_at_point() {
    let s = space(1, 6);
    let x = Jet::variable(&s, 0.7, 0).unwrap();
    let e = x.exp().unwrap();
    for k in 0..=6u8 {
        let d = e.extract(&[k]).unwrap();
        assert!((d - 0.7f64.exp()).abs() / 0.7f64.exp() < 1e-12);
    }
}

#[test]
fn cube_extract() {
    let s = space(1, 3);
    let x = Jet::variable(&s, 2.0, 0).unwrap();
    assert_eq!((&(&x * &x) * &x).extract(&[3]).unwrap(), 6.0);
}

#[test]
fn matrix_inverse_identity_in_every_coefficient() {
    let s = space(3, 4);
    let x = Jet::variable(&s, 0.4, 0).unwrap();
    let y = Jet::variable(&s, -0.3, 1).unwrap();
    let z = Jet::variable(&s, 0.9, 2).unwrap();
    let a = (&(&x * &x) + 2.0).sqrt().unwrap();
    let b = &(&y * &z) * 0.3;
    let c = (&z * 0.5).exp().unwrap();
    let m = JetMatrix::from_rows(vec![vec![a.clone(), b.clone()], vec![b, c]]).unwrap();
    let inv = jet_matrix_inverse(&m).unwrap();
    let p = m.try_mul(&inv).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let expected = Jet::constant(&s, if i == j { 1.0 } else { 0.0 });
            assert!(p.get(i, j).max_coeff_diff(&expected) < 1e-10);
        }
    }
}

#[test]
fn singular_matrix_rejected() {
    let s = space(1, 2);
    let x = Jet::variable(&s, 1.0, 0).unwrap();
    let m = JetMatrix::from_rows(vec![vec![x.clone(), x.clone()], vec![x.clone(), x]]).unwrap();
    assert!(jet_matrix_inverse(&m).is_err());
}
