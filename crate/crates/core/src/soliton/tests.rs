use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::geometry::{Chart, Signature};

fn c(v: f64) -> ScalarField {
    ScalarField::constant(v)
}

fn pp_wave(h: &str, n: usize, interval: (f64, f64)) -> Arc<Curvature> {
    let mut names = vec!["u".to_string(), "v".to_string()];
    names.extend((1..=n).map(|i| format!("x{i}")));
    let ch = Chart::new(names, vec![interval; n + 2]).unwrap();
    let hf = ch.parse(h).unwrap();
    let g = MetricField::from_fn(ch, Signature::Lorentzian, |a, b| match (a, b) {
        (0, 0) => hf.clone(),
        (0, 1) => c(1.0),
        (i, j) if i == j && i >= 2 => c(1.0),
        _ => c(0.0),
    })
    .unwrap();
    Arc::new(Curvature::new(g))
}

fn gaussian(d: usize, lambda: f64) -> SolitonInstance {
    let names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let ch = Chart::new(names, vec![(-2.0, 2.0); d]).unwrap();
    let mut diag = vec![c(-1.0)];
    diag.extend((1..d).map(|_| c(1.0)));
    let g = MetricField::diagonal(Arc::clone(&ch), Signature::Lorentzian, diag).unwrap();
    let q = -ScalarField::coordinate(0).powi(2) + ScalarField::sum((1..d).map(|i| ScalarField::coordinate(i).powi(2)));
    SolitonInstance::gradient(Arc::new(Curvature::new(g)), 0.5 * lambda * q, lambda).unwrap()
}

fn cigar_tanh() -> SolitonInstance {
    let ch = Chart::new(vec!["t".into(), "s".into()], vec![(0.1, 2.0), (-2.0, 2.0)]).unwrap();
    let w = ch.parse("sqrt(2) * tanh(t / sqrt(2))").unwrap();
    let f = ch.parse("-2 * log(cosh(t / sqrt(2)))").unwrap();
    let g = MetricField::diagonal(ch, Signature::Lorentzian, vec![c(-1.0), w.powi(2)]).unwrap();
    SolitonInstance::gradient(Arc::new(Curvature::new(g)), f, 0.0).unwrap()
}

fn cflat(a: &str, f: &str) -> SolitonInstance {
    let h = format!("({a}) * (x1^2 + x2^2)");
    let curv = pp_wave(&h, 2, (-2.0, 2.0));
    let f = curv.metric().chart().parse(f).unwrap();
    SolitonInstance::gradient(curv, f, 0.0).unwrap()
}

fn grid(chart: &Chart, count: usize) -> Vec<Vec<f64>> {
    let bx = chart.sampling_box();
    (0..count)
        .map(|k| {
            bx.iter()
                .enumerate()
                .map(|(i, &(lo, hi))| {
                    let s = ((k * (2 * i + 3) + i) % 17) as f64 / 16.0;
                    lo + (hi - lo) * (0.03 + 0.94 * s)
                })
                .collect()
        })
        .collect()
}

fn field_max(t: &TensorField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flat_map(|p| t.evaluate(p).unwrap())
        .fold(0.0, |m, x| m.max(x.abs()))
}

fn scalar_spread(f: &ScalarField, points: &[Vec<f64>]) -> f64 {
    let v: Vec<f64> = points.iter().map(|p| f.evaluate(p).unwrap()).collect();
    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
}

#[test]
fn gaussian_is_a_soliton_for_every_lambda() {
    for lambda in [-1.0, 0.0, 1.0, 2.0] {
        let inst = gaussian(3, lambda);
        let pts = grid(inst.chart(), 20);
        assert_eq!(field_max(&gradient_soliton_residual(&inst).unwrap(), &pts), 0.0);
        let lemma = lemma_identities(&inst).unwrap();
        assert_eq!(field_max(&lemma.gradient, &pts), 0.0);
        assert!(scalar_spread(&lemma.conserved, &pts) < 1e-12);
        assert!(scalar_spread(&trace_residual(&inst).unwrap(), &pts) < 1e-12);
        assert!(trace_residual(&inst).unwrap().evaluate(&pts[3]).unwrap().abs() < 1e-12);
        assert_eq!(inst.kind(), SolitonKind::of(lambda));
    }
    assert_eq!(gaussian(3, 1.0).kind(), SolitonKind::Shrinking);
    assert_eq!(gaussian(3, -2.0).kind(), SolitonKind::Expanding);
}

#[test]
fn wrong_constant_leaves_minus_g() {
    let inst = gaussian(3, 1.0).with_lambda(2.0).unwrap();
    let res = gradient_soliton_residual(&inst).unwrap();
    let g = inst.metric().as_tensor();
    let diff = res.add(&g).unwrap();
    assert_eq!(field_max(&diff, &grid(inst.chart(), 10)), 0.0);
    assert!(SolitonInstance::gradient(Arc::clone(inst.curvature()), c(0.0), f64::NAN).is_err());
}

#[test]
fn gradient_and_vector_residuals_agree() {
    for inst in [gaussian(4, -1.5), cigar_tanh(), cflat("exp(u)", "2 * exp(u)")] {
        let a = gradient_soliton_residual(&inst).unwrap();
        let b = ricci_soliton_residual(&inst.as_vector_instance().unwrap()).unwrap();
        let pts = grid(inst.chart(), 15);
        assert!(field_max(&a.sub(&b).unwrap(), &pts) < 1e-10);
    }
}

#[test]
fn causal_character_of_the_gaussian() {
    let inst = gaussian(3, 1.0);
    assert_eq!(causal_character(&inst, &[1.0, 0.0, 0.0]).unwrap(), CausalCharacter::Timelike);
    assert_eq!(causal_character(&inst, &[1.0, 1.0, 0.0]).unwrap(), CausalCharacter::Null);
    assert_eq!(causal_character(&inst, &[0.0, 1.0, 0.0]).unwrap(), CausalCharacter::Spacelike);
    assert_eq!(causal_character(&inst, &[0.0, 0.0, 0.0]).unwrap(), CausalCharacter::Zero);
    // g(∇f,∇f) = λ²(−x1² + x2² + x3²)
    let n2 = gradient_norm_squared(&inst).unwrap();
    assert_eq!(n2.evaluate(&[1.0, 0.0, 0.0]).unwrap(), -1.0);
}

#[test]
fn cflat_pp_wave_soliton_structure() {
    // a = 1, n = 2: f0'' = n a = 2.
    let inst = cflat("1", "u^2");
    let pts = grid(inst.chart(), 30);
    assert!(field_max(&gradient_soliton_residual(&inst).unwrap(), &pts) < 1e-12);
    let lemma = lemma_identities(&inst).unwrap();
    assert!(field_max(&lemma.gradient, &pts) < 1e-12);
    assert!(scalar_spread(&lemma.conserved, &pts) < 1e-12);
    assert!(field_max(&curv_identity_residual(&inst).unwrap(), &pts) < 1e-12);
    assert!(field_max(&codazzi_schouten_residual(inst.curvature()).unwrap(), &pts) < 1e-12);
    assert!(field_max(&ricci_squared(inst.curvature()), &pts) < 1e-12);
    assert!(field_max(inst.curvature().weyl().unwrap(), &pts) < 1e-12);

    let ev = ricci_eigenvector_check(&inst, &pts).unwrap();
    assert!(ev.max_residual < 1e-12);
    assert_eq!(ev.checked + ev.skipped.len(), pts.len());

    let v = inst.soliton_vector();
    let rep = wave_structure_check(inst.curvature(), &v, &pts).unwrap();
    assert!(rep.pr_wave && rep.recurrent);
    for p in &rep.points {
        let scale = p.rho_uu.abs().max(1.0);
        assert!((p.sigma_u + p.rho_uu).abs() / scale < 1e-10);
        assert!(p.sigma_v.abs() < 1e-10);
        assert!(p.sigma_e.iter().all(|s| s.abs() < 1e-10));
    }
}

#[test]
fn cflat_shrinking_soliton_vector() {
    // a = 1, b = c = 0, λ = 1, n = 2: X = (2u + 2v)∂v + x1∂1 + x2∂2.
    let curv = pp_wave("x1^2 + x2^2", 2, (-2.0, 2.0));
    let ch = Arc::clone(curv.metric().chart());
    let comps = ["0", "2 * u + 2 * v", "x1", "x2"].map(|s| ch.parse(s).unwrap()).to_vec();
    let x = TensorField::vector(ch, comps).unwrap();
    let inst = SolitonInstance::vector(curv, x, 1.0).unwrap();
    let res = ricci_soliton_residual(&inst).unwrap();
    assert!(field_max(&res, &grid(inst.chart(), 20)) < 1e-12);
    assert!(gradient_soliton_residual(&inst).is_err());
    assert!(lemma_identities(&inst).is_err());
}

#[test]
fn two_dimensional_identities() {
    let inst = cigar_tanh();
    let pts = grid(inst.chart(), 25);
    assert!(field_max(&gradient_soliton_residual(&inst).unwrap(), &pts) < 1e-8);
    assert!(field_max(&curv_identity_residual(&inst).unwrap(), &pts) < 1e-8);
    assert!(matches!(
        codazzi_schouten_residual(inst.curvature()),
        Err(Error::Dimension(_))
    ));
    let ev = ricci_eigenvector_check(&inst, &pts).unwrap();
    assert!(ev.max_residual < 1e-8);
}

#[test]
fn type_one_recurrent_gradient_is_spacelike() {
    let curv = pp_wave("exp(x1)", 2, (-2.0, 2.0));
    let f = curv.metric().chart().parse("x1").unwrap();
    let inst = SolitonInstance::gradient(curv, f, 0.0).unwrap();
    let pts = grid(inst.chart(), 20);
    assert!(field_max(&gradient_soliton_residual(&inst).unwrap(), &pts) < 1e-12);
    assert!(ricci_eigenvector_check(&inst, &pts).unwrap().max_residual < 1e-8);
    for p in &pts {
        assert_eq!(causal_character(&inst, p).unwrap(), CausalCharacter::Spacelike);
    }
    assert_eq!(gradient_norm_squared(&inst).unwrap().evaluate(&pts[0]).unwrap(), 1.0);
}

#[test]
fn eigenvector_check_skips_critical_points() {
    let inst = gaussian(3, 1.0);
    let pts = vec![vec![0.0, 0.0, 0.0], vec![0.3, -0.2, 1.0]];
    let rep = ricci_eigenvector_check(&inst, &pts).unwrap();
    assert_eq!(rep.skipped, vec![0]);
    assert_eq!(rep.checked, 1);
    assert!(matches!(
        ricci_eigenvector_residual(&inst, &pts[0]),
        Err(Error::ZeroGradient(_))
    ));
}

#[test]
fn codazzi_detects_non_conformally_flat_three_metric() {
    let curv = pp_wave("x1^4", 1, (-2.0, 2.0));
    let pts = grid(curv.metric().chart(), 30);
    assert!(field_max(&codazzi_schouten_residual(&curv).unwrap(), &pts) > 1e-3);

    let lcf = pp_wave("u^3 * x1^2 + sin(u) * x1", 1, (-2.0, 2.0));
    assert!(field_max(&codazzi_schouten_residual(&lcf).unwrap(), &pts) < 1e-12);
}

fn lorentzian_space_form(k: f64, d: usize) -> Arc<Curvature> {
    let names: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    let ch = Chart::new(names, vec![(-0.5, 0.5); d]).unwrap();
    let eta: Vec<f64> = (0..d).map(|i| if i == 0 { -1.0 } else { 1.0 }).collect();
    let q = ScalarField::sum((0..d).map(|i| eta[i] * ScalarField::coordinate(i).powi(2)));
    let conf = (1.0 + (k / 4.0) * q).powi(-2);
    let diag = eta.iter().map(|&e| e * &conf).collect();
    Arc::new(Curvature::new(MetricField::diagonal(ch, Signature::Lorentzian, diag).unwrap()))
}

#[test]
fn wave_structure_on_space_forms() {
    let curv = lorentzian_space_form(1.0, 3);
    let ch = Arc::clone(curv.metric().chart());
    let pts = grid(&ch, 10);
    let r = curv.riemann();
    let ks = kulkarni_nomizu_half(&curv);
    assert!(field_max(&r.sub(&ks).unwrap(), &pts) < 1e-12);

    let v = TensorField::vector(Arc::clone(&ch), vec![c(1.0), c(1.0), c(0.0)]).unwrap();
    let rep = wave_structure_check(&curv, &v, &pts).unwrap();
    assert!(!rep.pr_wave);
    assert!(rep.max_pr > 1e-3);

    let t = TensorField::vector(ch, vec![c(1.0), c(0.0), c(0.0)]).unwrap();
    assert!(matches!(wave_structure_check(&curv, &t, &pts), Err(Error::NotNull(_))));

    let flat = pp_wave("0", 2, (-1.0, 1.0));
    let dv = TensorField::vector(Arc::clone(flat.metric().chart()), vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
    let rep = wave_structure_check(&flat, &dv, &grid(flat.metric().chart(), 5)).unwrap();
    assert!(rep.pr_wave && rep.recurrent);
}

fn kulkarni_nomizu_half(curv: &Curvature) -> TensorField {
    let g = curv.metric().as_tensor();
    crate::geometry::kulkarni_nomizu(&g, &g).unwrap().scale(0.5)
}

#[test]
fn pp_wave_parallel_null_field() {
    let curv = pp_wave("u * x1^3 - x2^2 * x1", 2, (-1.0, 1.0));
    let dv = TensorField::vector(Arc::clone(curv.metric().chart()), vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
    let rep = wave_structure_check(&curv, &dv, &grid(curv.metric().chart(), 12)).unwrap();
    assert!(rep.pr_wave && rep.recurrent);
    assert!(rep.points.iter().all(|p| p.sigma_u.abs() < 1e-14));
}

#[test]
fn recurrence_classes() {
    let curv = pp_wave("exp(u) * (x1^2 + x2^2)", 2, (-1.0, 1.0));
    let pts = grid(curv.metric().chart(), 15);
    let rep = recurrence_check(&curv, curv.ricci(), &pts).unwrap();
    assert_eq!(rep.class, RecurrenceClass::Recurrent);
    for p in &rep.points {
        let s = p.sigma.as_ref().unwrap();
        assert!((s[0] - 1.0).abs() < 1e-10);
        assert!(s[1..].iter().all(|x| x.abs() < 1e-10));
    }

    let sf = lorentzian_space_form(-0.7, 3);
    let rep = recurrence_check(&sf, sf.riemann(), &grid(sf.metric().chart(), 8)).unwrap();
    assert_eq!(rep.class, RecurrenceClass::Parallel);

    // Two-symmetric profile with b ≠ 0.
    let ts = pp_wave("(u + 1) * x1^2 + 2 * u * x2^2", 2, (-1.0, 1.0));
    let rep = recurrence_check(&ts, ts.riemann(), &pts).unwrap();
    assert_eq!(rep.class, RecurrenceClass::Neither);
    let nn = ts.covariant_derivative(&ts.covariant_derivative(ts.riemann()));
    assert!(field_max(&nn, &pts) < 1e-12);

    let flat = pp_wave("x1 + u", 2, (-1.0, 1.0));
    assert!(matches!(recurrence_check(&flat, flat.riemann(), &pts), Err(Error::ZeroTensor)));
}

#[test]
fn sampling_is_seeded_and_resamples() {
    let inst = gaussian(3, 1.0);
    let a = sample_points(inst.metric(), &[], 50, 7);
    let b = sample_points(inst.metric(), &[], 50, 7);
    let other = sample_points(inst.metric(), &[], 50, 8);
    assert_eq!(a.points, b.points);
    assert_ne!(a.points, other.points);
    assert!(a.points.iter().flatten().all(|x| (-2.0..2.0).contains(x)));

    // log(x1) fails on half the box, so some draws are replaced.
    let lg = inst.chart().parse("log(x1)").unwrap();
    let s = sample_points(inst.metric(), &[&lg], 200, 3);
    assert!(s.points.iter().all(|p| p[0] > 0.0));
    assert_eq!(s.points.len() + s.rejected.len(), 200);
    // Probability 1/16 per index of exhausting the draws.
    assert!(!s.rejected.is_empty() && s.rejected.len() < 40);

    let never = inst.chart().parse("log(-x1^2)").unwrap();
    let s = sample_points(inst.metric(), &[&never], 4, 3);
    assert!(s.points.is_empty());
    assert_eq!(s.rejected.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
}

#[test]
fn checks_report_bounds_and_offenders() {
    let inst = gaussian(3, 1.0).with_lambda(2.0).unwrap();
    let pts = grid(inst.chart(), 10);
    let res = gradient_soliton_residual(&inst).unwrap();
    let check = Check::at_most("soliton", "Hes f + Ric - lambda g", Probe::Field(res.clone()), 1e-8);
    let r = run_check(&check, &pts);
    assert!(!r.passed);
    assert_eq!(r.value, Some(1.0));
    assert_eq!(r.points, 10);
    let w = r.worst.unwrap();
    assert_eq!(w.component, "(x1,x1)");

    let r = run_check(&Check::at_least("soliton.nonzero", "", Probe::Field(res), 0.5), &pts);
    assert!(r.passed);

    let lemma = lemma_identities(&gaussian(3, 1.0)).unwrap();
    let r = run_check(&Check::at_most("lemma.conserved", "", Probe::Spread(lemma.conserved), 1e-8), &pts);
    assert!(r.passed && r.value.unwrap() < 1e-12);

    let lg = inst.chart().parse("log(x1)").unwrap();
    let r = run_check(&Check::at_most("bad", "", Probe::Spread(lg), 1.0), &[vec![-1.0, 0.0, 0.0]]);
    assert!(!r.passed && r.value.is_none());
    assert_eq!(r.errors.len(), 1);

    let skip = Check::pointwise("skip", "", 1.0, |p: &[f64]| {
        if p[0] < 0.0 {
            Err(Error::ZeroGradient(p.to_vec()))
        } else {
            Ok(vec![("x".into(), p[0])])
        }
    });
    let r = run_check(&skip, &[vec![-1.0], vec![0.5]]);
    assert!(r.passed);
    assert_eq!((r.points, r.skipped), (1, 1));

    let nan = Check::pointwise("nan", "", 1.0, |_: &[f64]| Ok(vec![("x".into(), f64::NAN)]));
    let r = run_check(&nan, &[vec![0.0]]);
    assert!(!r.passed);
}

#[test]
fn report_serialization_round_trip() {
    let inst = gaussian(3, 1.0);
    let pts = grid(inst.chart(), 5);
    let checks = vec![
        Check::at_most("soliton", "", Probe::Field(gradient_soliton_residual(&inst).unwrap()), 1e-8),
        Check::at_least("never", "", Probe::Field(inst.metric().as_tensor()), 10.0),
    ];
    let results = run_checks(&checks, &pts);
    let report = VerificationReport {
        schema_version: SCHEMA_VERSION,
        family: "minkowski_gaussian".into(),
        parameters: [("dim".to_string(), "3".to_string())].into(),
        lambda: Some(1.0),
        kind: Some(inst.kind()),
        seed: 1,
        requested_points: 5,
        coordinates: inst.chart().coordinates().to_vec(),
        sampling_box: inst.chart().sampling_box().iter().map(|&(a, b)| [a, b]).collect(),
        rejected_points: vec![],
        passed: results.iter().all(|r| r.passed),
        checks: results,
        generated_at: 0,
    };
    let json = report.to_json().unwrap();
    assert!(json.contains("\"schema_version\": 1"));
    assert_eq!(VerificationReport::from_json(&json).unwrap(), report);
    let csv = report.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("minkowski_gaussian,soliton,at_most,"));
    let text = report.to_text();
    assert!(text.contains("PASS soliton"));
    assert!(text.contains("FAIL never"));
    assert!(text.contains("worst"));
    let bumped = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(VerificationReport::from_json(&bumped).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn traced_equation_on_certified_instances(lambda in -3.0f64..3.0, x in prop::array::uniform4(-2.0f64..2.0)) {
        let inst = gaussian(4, lambda);
        let res = trace_residual(&inst).unwrap().evaluate(&x).unwrap();
        prop_assert!(res.abs() < 1e-8);
        let cig = cigar_tanh();
        let t = 0.1 + (x[0] + 2.0) / 4.0 * 1.9;
        prop_assert!(trace_residual(&cig).unwrap().evaluate(&[t, x[1]]).unwrap().abs() < 1e-8);
    }

    #[test]
    fn isotropic_cflat_has_nilpotent_ricci(k in 0.2f64..3.0, x in prop::array::uniform4(-2.0f64..2.0)) {
        let inst = cflat(&format!("{k} * exp(u / 3)"), &format!("{} * exp(u / 3)", 18.0 * k));
        prop_assert!(inst.curvature().scalar_curvature().evaluate(&x).unwrap().abs() < 1e-10);
        let r2 = ricci_squared(inst.curvature()).evaluate(&x).unwrap();
        prop_assert!(r2.iter().all(|v| v.abs() < 1e-8));
        let n2 = gradient_norm_squared(&inst).unwrap().evaluate(&x).unwrap();
        prop_assert!(n2.abs() < 1e-10);
        let res = gradient_soliton_residual(&inst).unwrap().evaluate(&x).unwrap();
        prop_assert!(res.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn steady_causal_character_is_scale_invariant(s in 0.05f64..20.0, x in prop::array::uniform4(-2.0f64..2.0)) {
        let curv = pp_wave("exp(x1)", 2, (-2.0, 2.0));
        let f = curv.metric().chart().parse("x1 + u").unwrap();
        let a = SolitonInstance::gradient(Arc::clone(&curv), f.clone(), 0.0).unwrap();
        let b = SolitonInstance::gradient(curv, s * f, 0.0).unwrap();
        prop_assert_eq!(causal_character(&a, &x).unwrap(), causal_character(&b, &x).unwrap());

        let cig = cigar_tanh();
        let scaled = SolitonInstance::gradient(
            Arc::clone(cig.curvature()),
            s * cig.potential_function().unwrap(),
            0.0,
        ).unwrap();
        let p = [0.1 + (x[0] + 2.0) / 4.0 * 1.9, x[1]];
        prop_assert_eq!(causal_character(&cig, &p).unwrap(), causal_character(&scaled, &p).unwrap());
    }
}
