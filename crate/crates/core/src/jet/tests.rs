use proptest::prelude::*;

use super::*;

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn p(src: &str, n: usize) -> ScalarField {
    parse(src, &names(n)).unwrap()
}

#[test]
fn evaluate_examples() {
    assert_eq!(p("x1^2 + x2^2", 2).evaluate(&[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(p("exp(x1)", 1).evaluate(&[1.0]).unwrap(), std::f64::consts::E);
    let t = parse("tanh(t / sqrt(2))", &["t"]).unwrap();
    let v = t.evaluate(&[2f64.sqrt()]).unwrap();
    // tanh(1) from its exponential definition
    let e2 = (2.0f64).exp();
    let oracle = (e2 - 1.0) / (e2 + 1.0);
    assert!((v - oracle).abs() < 1e-15);
    assert!((v - 0.761_594_155_955_764_9).abs() < 1e-15);
}

#[test]
fn evaluate_domain_errors() {
    assert_eq!(
        p("log(x1)", 1).evaluate(&[0.0]),
        Err(DomainError::LogNonPositive(0.0))
    );
    assert_eq!(p("1 / x1", 1).evaluate(&[0.0]), Err(DomainError::DivisionByZero));
    assert_eq!(
        p("sqrt(x1)", 1).evaluate(&[-1.0]),
        Err(DomainError::SqrtNegative(-1.0))
    );
    assert_eq!(
        p("x1^-2", 1).evaluate(&[0.0]),
        Err(DomainError::ZeroNegativePower(-2))
    );
    assert!(matches!(
        p("x1 * x3", 3).evaluate(&[1.0, 2.0]),
        Err(DomainError::Dimension { need: 3, got: 2 })
    ));
}

#[test]
fn partial_examples() {
    let f = p("x1^2", 1);
    assert_eq!(f.partial(0).evaluate(&[3.0]).unwrap(), 6.0);

    let h = p("x1 * x2", 2);
    let a = h.partial(0).partial(1);
    let b = h.partial(1).partial(0);
    for pt in [[0.3, -1.2], [5.0, 2.0]] {
        assert_eq!(a.evaluate(&pt).unwrap(), 1.0);
        assert_eq!(b.evaluate(&pt).unwrap(), 1.0);
    }

    // u * x1^2 with u at index 0 and x1 at index 1
    let g = parse("u * x1^2", &["u", "x1"]).unwrap();
    assert!(g.partials(&[0, 1, 1, 1]).is_zero());
    assert_eq!(g.partials(&[0, 1, 1]).evaluate(&[0.7, -3.0]).unwrap(), 2.0);
}

#[test]
fn derivative_in_absent_coordinate_is_literal_zero() {
    let f = p("exp(x1) * sin(x2) + log(x2)", 3);
    let d = f.partial(2);
    assert!(d.is_zero());
    assert_eq!(d.evaluate(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
}

#[test]
fn constant_folding_is_limited_to_literals() {
    let x = ScalarField::coordinate(0);
    assert!((&x * 0.0).is_zero());
    assert!((&x * 1.0).ptr_eq(&x));
    assert!((&x + 0.0).ptr_eq(&x));
    assert!((&x / 1.0).ptr_eq(&x));
    assert_eq!((2.0 * ScalarField::constant(3.0)).as_constant(), Some(6.0));
    // No algebraic cancellation beyond identical operands.
    let y = &x + 1.0;
    assert!((&y - &y).is_zero());
    assert!((&y - &(&x + 1.0)).as_constant().is_none());
}

#[test]
fn tape_shares_common_subexpressions() {
    let x = ScalarField::coordinate(0);
    let a = (&x + 1.0).exp();
    let b = (&x + 1.0).exp();
    let tape = Tape::compile(&[a * 2.0, b * 3.0]);
    // x, 1, x+1, exp, 2, mul, 3, mul
    assert_eq!(tape.len(), 8);
    assert_eq!(tape.evaluate(&[0.0]).unwrap(), vec![2.0 * 1f64.exp(), 3.0 * 1f64.exp()]);
}

#[test]
fn evaluation_is_bit_reproducible() {
    let f = p("sinh(x1) * cosh(x2) / (1 + tanh(x1 * x2)^2) - sqrt(x1^2 + x2^2)", 2);
    let d = f.partials(&[0, 1, 1]);
    let v1 = d.evaluate(&[0.3, 0.7]).unwrap();
    let v2 = d.evaluate(&[0.3, 0.7]).unwrap();
    assert_eq!(v1.to_bits(), v2.to_bits());
}

#[test]
fn parse_errors() {
    assert!(parse("x1 +", &["x1"]).is_err());
    assert!(parse("foo(x1)", &["x1"]).is_err());
    assert!(parse("y", &["x1"]).is_err());
    assert!(parse("x1^1.5", &["x1"]).is_err());
    assert!(parse("(x1", &["x1"]).is_err());
}

#[test]
fn printer_output_examples() {
    let n = names(2);
    let show = |s: &str| p(s, 2).display_with(&n).to_string();
    assert_eq!(show("x1 - 2"), "x1 - 2");
    assert_eq!(show("-(x1 + x2)"), "-(x1 + x2)");
    assert_eq!(show("x1 - (x2 - x1)"), "x1 - (x2 - x1)");
    assert_eq!(show("(x1 + 1)^-2"), "(x1 + 1)^-2");
    assert_eq!(show("x1 / (x2 * x1)"), "x1 / (x2 * x1)");
    assert_eq!(show("-x1^2"), "-x1^2");
    assert_eq!(show("(-x1)^2"), "(-x1)^2");
}

#[test]
fn pi_constant() {
    let f = parse("sin(pi / 2)", &["u"]).unwrap();
    assert_eq!(f.as_constant(), Some(1.0));
}

/// Evaluation points kept inside the domain of every generated node.
fn safe_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..1.2, 3)
}

/// Random expressions over three coordinates whose values stay finite and
/// in-domain on (0.2, 1.2)^3.
fn arb_expr() -> impl Strategy<Value = ScalarField> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(ScalarField::coordinate),
        (0.5f64..2.0).prop_map(ScalarField::constant),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            // Denominators and log/sqrt arguments are kept positive.
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.powi(2) + 1.0)),
            inner.clone().prop_map(|a| -a),
            (inner.clone(), -2i32..4).prop_map(|(a, n)| (a.powi(2) + 0.5).powi(n)),
            inner.clone().prop_map(|a| (a.powi(2) + 0.1).log()),
            inner.clone().prop_map(|a| (a.powi(2) + 0.1).sqrt()),
            inner.clone().prop_map(|a| a.tanh().exp()),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.tanh().tan()),
            inner.clone().prop_map(|a| a.tanh().sinh()),
            inner.clone().prop_map(|a| a.tanh().cosh()),
            inner.prop_map(|a| a.tanh()),
        ]
    })
}

fn central_difference(f: &ScalarField, point: &[f64], axis: usize) -> f64 {
    let h = 1e-5;
    let mut a = point.to_vec();
    let mut b = point.to_vec();
    a[axis] += h;
    b[axis] -= h;
    (f.evaluate(&a).unwrap() - f.evaluate(&b).unwrap()) / (2.0 * h)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn partial_matches_finite_differences(f in arb_expr(), pt in safe_point(), axis in 0usize..3) {
        let exact = f.partial(axis).evaluate(&pt).unwrap();
        let fd = central_difference(&f, &pt, axis);
        prop_assert!(rel_close(exact, fd, 1e-6), "exact {exact} fd {fd} for {f:?}");
    }

    #[test]
    fn partial_is_linear(f in arb_expr(), g in arb_expr(), pt in safe_point(),
                         alpha in -3.0f64..3.0, beta in -3.0f64..3.0, axis in 0usize..3) {
        let combo = alpha * &f + beta * &g;
        let lhs = combo.partial(axis).evaluate(&pt).unwrap();
        let df = f.partial(axis).evaluate(&pt).unwrap();
        let dg = g.partial(axis).evaluate(&pt).unwrap();
        let rhs = alpha * df + beta * dg;
        let scale = (alpha * df).abs() + (beta * dg).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn mixed_partials_commute_to_order_four(f in arb_expr(), pt in safe_point(),
                                            order in prop::collection::vec(0usize..3, 2..=4)) {
        let mut reversed = order.clone();
        reversed.reverse();
        let a = f.partials(&order).evaluate(&pt).unwrap();
        let b = f.partials(&reversed).evaluate(&pt).unwrap();
        prop_assert!(rel_close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn print_then_parse_is_structural_identity(f in arb_expr()) {
        let n = names(3);
        let text = f.display_with(&n).to_string();
        let back = parse(&text, &n).unwrap();
        prop_assert_eq!(&back, &f, "{}", text);
        prop_assert_eq!(back.display_with(&n).to_string(), text);
    }
}
