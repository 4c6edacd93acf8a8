use std::sync::Arc;

use finsler_core::expr::{BinaryOp, Expr, Function, Node};
use finsler_core::jet::{Jet, JetSpace};
use finsler_core::oracle::{partial, FdConfig};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x1", "x2", "x3"];

fn c(v: f64) -> Box<Node> {
    Box::new(Node::Const(v))
}

fn bin(op: BinaryOp, a: Node, b: Node) -> Node {
    Node::Binary(op, Box::new(a), Box::new(b))
}

fn square(u: &Node) -> Node {
    Node::Pow(Box::new(u.clone()), 2)
}

/// Expressions whose complex singularities stay well away from the sampled box.
fn node(depth: u32) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![(0usize..3).prop_map(Node::Var), (-1.0f64..1.0).prop_map(Node::Const)];
    // arguments of log, sqrt and division stay affine so their singularities keep a distance of 2
    let affine = (0usize..3, -1.0f64..1.0).prop_map(|(i, b)| bin(BinaryOp::Add, Node::Var(i), Node::Const(b)));
    leaf.prop_recursive(depth, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinaryOp::Mul, a, b)),
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Node::Call(Function::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Node::Call(Function::Cos, Box::new(a))),
            inner.clone().prop_map(|a| Node::Call(Function::Exp, Box::new(bin(BinaryOp::Mul, Node::Const(0.3), a)))),
            affine.clone().prop_map(|a| Node::Call(Function::Log, Box::new(bin(BinaryOp::Add, Node::Const(4.0), square(&a))))),
            affine.clone().prop_map(|a| Node::Call(Function::Sqrt, Box::new(bin(BinaryOp::Add, Node::Const(4.0), square(&a))))),
            (inner.clone(), affine.clone())
                .prop_map(|(a, b)| bin(BinaryOp::Div, a, Node::Binary(BinaryOp::Add, c(4.0), Box::new(square(&b))))),
            (inner, 2i32..=2).prop_map(|(a, k)| Node::Pow(Box::new(a), k)),
        ]
    })
}

fn expr(depth: u32) -> impl Strategy<Value = Expr> {
    node(depth).prop_map(|n| Expr::from_node(n, VARS.iter().map(|s| s.to_string()).collect()).unwrap())
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5f64..0.5, 3)
}

fn schedule(order: usize) -> FdConfig {
    match order {
        0..=2 => FdConfig::new(0.1, 5),
        3..=4 => FdConfig::new(0.2, 4),
        _ => FdConfig::new(0.25, 3),
    }
}

fn check_partials(e: &Expr, x: &[f64], orders: std::ops::RangeInclusive<usize>, tol: f64) -> Result<(), TestCaseError> {
    let order = 6;
    let space = Arc::new(JetSpace::new(3, order).unwrap());
    let vars: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(&space, v, i).unwrap()).collect();
    let jet = e.eval(&vars[0], &vars).unwrap();
    let f = |z: &[f64]| e.eval_f64(z).map_err(finsler_core::metric::MetricError::Jet);
    // stencil errors scale with the function's derivatives, so the largest partial of order
    // up to k bounds the denominator from below
    let mut scale = vec![1.0f64; order + 1];
    for index in 0..space.len() {
        let k = space.degree(index);
        let v = jet.extract(space.exponents(index)).unwrap().abs();
        for s in &mut scale[k..] {
            *s = s.max(v);
        }
    }
    for index in 0..space.len() {
        let alpha = space.exponents(index).to_vec();
        let k = space.degree(index);
        if !orders.contains(&k) {
            continue;
        }
        let dirs: Vec<usize> = alpha.iter().enumerate().flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize)).collect();
        let fd = partial(&f, x, &dirs, &vec![1.0; k], schedule(k)).unwrap();
        let exact = jet.extract(&alpha).unwrap();
        prop_assert!((exact - fd).abs() <= tol * scale[k], "{e} alpha={alpha:?} jet={exact} fd={fd}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partials_through_order_four(e in expr(3), x in point()) {
        check_partials(&e, &x, 1..=4, 1e-6)?;
    }

    #[test]
    fn partials_of_order_five_and_six(e in expr(2), x in point()) {
        check_partials(&e, &x, 5..=6, 1e-4)?;
    }

    #[test]
    fn display_round_trips(e in expr(3), x in point()) {
        let text = e.to_string();
        let back = Expr::parse(&text, &VARS).unwrap();
        let (a, b) = (e.eval_f64(&x).unwrap(), back.eval_f64(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{text}");
    }
}

#[test]
fn log_one_plus_square_fourth_order() {
    let e = Expr::parse("log(1 + x1*x1)", &["x1"]).unwrap();
    let space = Arc::new(JetSpace::new(1, 4).unwrap());
    let x = Jet::variable(&space, 0.5, 0).unwrap();
    let jet = e.eval(&x, std::slice::from_ref(&x)).unwrap();
    let f = |z: &[f64]| e.eval_f64(z).map_err(finsler_core::metric::MetricError::Jet);
    for k in 1..=4usize {
        let fd = partial(&f, &[0.5], &vec![0; k], &vec![1.0; k], schedule(k)).unwrap();
        let exact = jet.extract(&[k as u8]).unwrap();
        assert!((exact - fd).abs() / exact.abs() < 1e-6, "k={k}");
    }
}

#[test]
fn sin_plus_cos_squared() {
    let e = Expr::parse("sin(x1)+cos(x1)^2", &["x1"]).unwrap();
    let space = Arc::new(JetSpace::new(1, 4).unwrap());
    let x = Jet::variable(&space, 0.4, 0).unwrap();
    let jet = e.eval(&x, std::slice::from_ref(&x)).unwrap();
    let f = |z: &[f64]| e.eval_f64(z).map_err(finsler_core::metric::MetricError::Jet);
    for k in 1..=4usize {
        let fd = partial(&f, &[0.4], &vec![0; k], &vec![1.0; k], schedule(k)).unwrap();
        let exact = jet.extract(&[k as u8]).unwrap();
        assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "k={k}");
    }
}
