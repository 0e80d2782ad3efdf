use proptest::prelude::*;

use super::*;

fn chart(names: &[&str]) -> Arc<Chart> {
    Chart::uniform(names, (-1.0, 1.0)).unwrap()
}

fn c(v: f64) -> ScalarField {
    ScalarField::constant(v)
}

fn pp_wave(h: &str) -> MetricField {
    let ch = chart(&["u", "v", "x1", "x2"]);
    let hf = ch.parse(h).unwrap();
    MetricField::from_fn(ch, Signature::Lorentzian, |a, b| match (a, b) {
        (0, 0) => hf.clone(),
        (0, 1) => c(1.0),
        (i, j) if i == j && i >= 2 => c(1.0),
        _ => c(0.0),
    })
    .unwrap()
}

#[test]
fn chart_validation() {
    assert!(Chart::uniform(&["t"], (0.0, 1.0)).is_err());
    assert!(Chart::uniform(&["x", "x"], (0.0, 1.0)).is_err());
    let ch = chart(&["u", "v", "x1"]);
    assert_eq!(ch.n(), 1);
    assert_eq!(ch.index_of("x1"), Some(2));
}

#[test]
fn inverse_of_minkowski() {
    let g = MetricField::diagonal(chart(&["t", "x", "y"]), Signature::Lorentzian, vec![c(-1.0), c(1.0), c(1.0)])
        .unwrap();
    let inv = metric_inverse(&g, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(inv, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0])));
}

#[test]
fn inverse_of_pp_wave_block() {
    let g = pp_wave("u * x1^2 + x2");
    let pt = [0.4, -0.3, 0.8, 0.5];
    let h = 0.4 * 0.64 + 0.5;
    let inv = metric_inverse(&g, &pt).unwrap();
    // Hand inversion of [[H,1],[1,0]] gives [[0,1],[1,-H]].
    assert_eq!(inv[(0, 0)], 0.0);
    assert_eq!(inv[(0, 1)], 1.0);
    assert!((inv[(1, 1)] + h).abs() < 1e-14);
    assert_eq!(inv[(2, 2)], 1.0);
    let sym: Vec<f64> = g.inverse_tensor().evaluate(&pt).unwrap();
    for (k, v) in sym.iter().enumerate() {
        assert!((v - inv[(k / 4, k % 4)]).abs() < 1e-14);
    }
    let m = DMatrix::from_row_slice(4, 4, &g.evaluate(&pt).unwrap());
    let id = m * inv;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((id[(a, b)] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn degenerate_metric_is_rejected() {
    let g = MetricField::diagonal(chart(&["x", "y"]), Signature::Riemannian, vec![c(0.0), c(1.0)]).unwrap();
    assert!(matches!(metric_inverse(&g, &[0.0, 0.0]), Err(Error::DegenerateMetric { .. })));
    assert!(matches!(g.check_point(&[0.0, 0.0]), Err(Error::DegenerateMetric { .. })));
}

#[test]
fn signature_is_checked() {
    let g = MetricField::diagonal(chart(&["x", "y"]), Signature::Lorentzian, vec![c(1.0), c(1.0)]).unwrap();
    assert!(g.check_point(&[0.0, 0.0]).is_err());
    assert!(pp_wave("x1^2").check_point(&[0.1, 0.2, 0.3, 0.4]).is_ok());
}

#[test]
fn asymmetric_components_are_rejected() {
    let ch = chart(&["x", "y"]);
    let x = ScalarField::coordinate(0);
    let comps = vec![c(1.0), x, c(0.0), c(1.0)];
    assert!(MetricField::new(ch, comps, Signature::Riemannian).is_err());
}

#[test]
fn symbolic_inverse_matches_numeric_for_dense_metric() {
    let ch = chart(&["a", "b", "c"]);
    let src = [["2 + a^2", "a * b", "sin(c)"], ["a * b", "3 + b^2", "0"], ["sin(c)", "0", "4 + cos(a)"]];
    let comps = src.iter().flatten().map(|s| ch.parse(s).unwrap()).collect();
    let g = MetricField::new(ch, comps, Signature::Riemannian).unwrap();
    let pt = [0.3, -0.7, 0.9];
    let inv = metric_inverse(&g, &pt).unwrap();
    let sym = g.inverse_tensor().evaluate(&pt).unwrap();
    for k in 0..9 {
        assert!((sym[k] - inv[(k / 3, k % 3)]).abs() < 1e-13);
    }
    let det = g.determinant().evaluate(&pt).unwrap();
    let m = DMatrix::from_row_slice(3, 3, &g.evaluate(&pt).unwrap());
    assert!((det - m.determinant()).abs() < 1e-12);
}

#[test]
fn raise_then_lower_is_identity() {
    let g = pp_wave("x1^2 * u + x2^3");
    let ch = Arc::clone(g.chart());
    let t = TensorField::from_fn(ch, vec![Slot::Lower, Slot::Lower], |i| {
        c((i[0] * 4 + i[1]) as f64) * ScalarField::coordinate(i[0]).sin()
    });
    let back = lower_index(&raise_index(&t, &g, 1).unwrap(), &g, 1).unwrap();
    let pt = [0.2, 0.4, -0.5, 0.7];
    let a = t.evaluate(&pt).unwrap();
    let b = back.evaluate(&pt).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(raise_index(&back.transpose(0, 1), &g, 0).is_ok());
    assert!(lower_index(&t, &g, 0).is_err());
}

#[test]
fn flat_raise_flips_timelike_slot() {
    let g = MetricField::diagonal(chart(&["t", "x"]), Signature::Lorentzian, vec![c(-1.0), c(1.0)]).unwrap();
    let w = TensorField::covector(Arc::clone(g.chart()), vec![c(2.0), c(3.0)]).unwrap();
    let up = raise_index(&w, &g, 0).unwrap();
    assert_eq!(up.evaluate(&[0.0, 0.0]).unwrap(), vec![-2.0, 3.0]);
}

#[test]
fn kulkarni_nomizu_examples() {
    let g = pp_wave("x1 * x2 + u^2");
    let gt = g.as_tensor();
    let kn = kulkarni_nomizu(&gt, &gt).unwrap();
    let pt = [0.5, 0.1, -0.4, 0.9];
    let gv = g.evaluate(&pt).unwrap();
    let kv = kn.evaluate(&pt).unwrap();
    for x in 0..4 {
        for y in 0..4 {
            // Direct substitution into the product formula.
            let want = 2.0 * (gv[x * 4 + x] * gv[y * 4 + y] - gv[x * 4 + y].powi(2));
            assert!((kv[kn.flat_index(&[x, y, x, y])] - want).abs() < 1e-12);
            assert!((kv[kn.flat_index(&[x, y, y, x])] + want).abs() < 1e-12);
        }
    }
}

fn arb_sym(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |mut v| {
        for a in 0..d {
            for b in 0..a {
                v[a * d + b] = v[b * d + a];
            }
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kulkarni_nomizu_has_curvature_symmetries(a in arb_sym(4), b in arb_sym(4)) {
        let ch = chart(&["p", "q", "r", "s"]);
        let ta = TensorField::new(Arc::clone(&ch), vec![Slot::Lower; 2], a.into_iter().map(c).collect()).unwrap();
        let tb = TensorField::new(ch, vec![Slot::Lower; 2], b.into_iter().map(c).collect()).unwrap();
        let ab = kulkarni_nomizu(&ta, &tb).unwrap().evaluate(&[0.0; 4]).unwrap();
        let ba = kulkarni_nomizu(&tb, &ta).unwrap().evaluate(&[0.0; 4]).unwrap();
        let at = |x: usize, y: usize, z: usize, w: usize| ab[((x * 4 + y) * 4 + z) * 4 + w];
        for x in 0..4 { for y in 0..4 { for z in 0..4 { for w in 0..4 {
            let r = at(x, y, z, w);
            prop_assert!((r + at(y, x, z, w)).abs() < 1e-12);
            prop_assert!((r + at(x, y, w, z)).abs() < 1e-12);
            prop_assert!((r - at(z, w, x, y)).abs() < 1e-12);
            let bianchi = r + at(y, z, x, w) + at(z, x, y, w);
            prop_assert!(bianchi.abs() < 1e-12);
        }}}}
        for (p, q) in ab.iter().zip(&ba) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn raise_lower_round_trip_random(v in prop::collection::vec(-3.0f64..3.0, 3),
                                     pt in prop::collection::vec(-1.0f64..1.0, 3)) {
        let g = pp_wave("x1^2 - x2^2 * u");
        let ch = Arc::clone(g.chart());
        let x = ScalarField::coordinate(2);
        let w = TensorField::covector(ch, vec![c(v[0]) * &x, c(v[1]), c(v[2]), x.exp()]).unwrap();
        let back = lower_index(&raise_index(&w, &g, 0).unwrap(), &g, 0).unwrap();
        let pt = [pt[0], 0.0, pt[1], pt[2]];
        let a = w.evaluate(&pt).unwrap();
        let b = back.evaluate(&pt).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn descriptor_round_trip_is_bit_exact() {
    let text = r#"{
  "coordinates": ["u", "v", "x1"],
  "signature": "lorentzian",
  "components": [["x1^2 * sin(u) + 0.1", "1", "0"], ["1", "0", "0"], ["0", "0", "1"]],
  "sampling_box": [[-1.25, 0.3333333333333333], [-1.0, 1.0], [0.1, 2.0]]
}"#;
    let d = MetricDescriptor::from_json(text).unwrap();
    let json = d.to_json();
    let d2 = MetricDescriptor::from_json(&json).unwrap();
    assert_eq!(d, d2);
    assert_eq!(d2.to_json(), json);
    for (a, b) in d.sampling_box.iter().zip(&d2.sampling_box) {
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    let g = d.build().unwrap();
    let out = MetricDescriptor::from_metric(&g).unwrap();
    let g2 = out.build().unwrap();
    assert_eq!(MetricDescriptor::from_metric(&g2).unwrap(), out);
    assert_eq!(g.components(), g2.components());
}

#[test]
fn descriptor_rejects_bad_shapes() {
    let text = r#"{"coordinates": ["x", "y"], "signature": "riemannian",
        "components": [["1", "0"]], "sampling_box": [[0, 1], [0, 1]]}"#;
    assert!(MetricDescriptor::from_json(text).unwrap().build().is_err());
    assert!(MetricDescriptor::from_json(r#"{"coordinates": []}"#).is_err());
}
