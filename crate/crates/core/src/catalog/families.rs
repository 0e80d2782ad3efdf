// SPDX-License-Identifier: Apache-2.0

//! Family constructors.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::Arc;

use super::boxes::{avoid, check_clear, conformal_half_width, scan_singular, DEFAULT_INTERVAL};
use super::params::{ParamKind, ParamSpec, Resolver};
use super::{parallel_check, scalars_probe, BoxOverrides, Family, Instance, Traits};
use crate::analysis::{completeness_classify, solve_f0, solve_functcond, Completeness, FunctcondProblem, OdeSolution};
use crate::curvature::Curvature;
use crate::error::{Error, Result};
use crate::geometry::{kulkarni_nomizu, Chart, MetricField, Signature, TensorField};
use crate::jet::{ScalarField, Tape};
use crate::soliton::{
    causal_character, ricci_squared, sample_points, Bound, CausalCharacter, Check, Measured, Probe, Recurrence,
    SolitonInstance, WaveStructure, WAVE_TOLERANCE,
};

use ParamKind::{Choice, Expr, Integer, Real};

const U: &[&str] = &["u"];
const T: &[&str] = &["t"];
const SIGNS: &[&str] = &["1", "-1"];
/// Tolerance for comparisons against closed forms that involve no ODE solve.
const CLOSED_FORM: f64 = 1e-10;

pub(super) static REGISTRY: &[Family] = &[
    Family {
        id: "minkowski_gaussian",
        summary: "flat Lorentzian space with the quadratic Gaussian potential",
        origin: "Lorentzian analog of the Gaussian soliton on Minkowski space",
        params: &[
            ParamSpec::scalar("dim", Integer, "3", "dimension, at least 2"),
            ParamSpec::scalar("lambda", Real, "1", "soliton constant"),
        ],
        builder: minkowski_gaussian,
    },
    Family {
        id: "cigar_2d",
        summary: "two-dimensional Lorentzian warped steady solitons -dt^2 + w(t)^2 ds^2",
        origin: "steady gradient solitons on Lorentzian surfaces, flat, tan and tanh cases",
        params: &[
            ParamSpec::scalar("case", Choice(&["tanh", "tan", "flat"]), "tanh", "which solution branch"),
            ParamSpec::scalar("a", Real, "1", "slope of the argument"),
            ParamSpec::scalar("b", Real, "0", "offset of the argument"),
            ParamSpec::scalar("r", Real, "1", "curvature scale, positive"),
            ParamSpec::scalar("d", Real, "0", "additive constant of the potential"),
        ],
        builder: cigar_2d,
    },
    Family {
        id: "einstein_brinkmann",
        summary: "warped product e dt^2 + f'(t)^2 g_N over a space form, f quadratic",
        origin: "Einstein gradient solitons with non-null potential: warped products over a constant-curvature fiber",
        params: &[
            ParamSpec::scalar("epsilon", Choice(SIGNS), "1", "sign of dt^2"),
            ParamSpec::scalar("lambda", Real, "1", "soliton constant"),
            ParamSpec::scalar("a", Real, "1", "linear coefficient of f"),
            ParamSpec::scalar("b", Real, "0", "constant term of f"),
            ParamSpec::scalar("fiber_dim", Integer, "2", "fiber dimension, 1 to 4"),
        ],
        builder: einstein_brinkmann,
    },
    Family {
        id: "einstein_null",
        summary: "2 du dv + sum dx_i^2 with an affine potential f(u)",
        origin: "Einstein gradient solitons with null potential in Brinkmann coordinates, flat transverse metric",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates"),
            ParamSpec::scalar("f", Expr(U), "u", "potential, must satisfy f'' = 0"),
        ],
        builder: einstein_null,
    },
    Family {
        id: "pp_wave",
        summary: "pp-wave 2 du dv + H(u,x) du^2 + sum dx_i^2, metric only",
        origin: "pp-wave metrics in Brinkmann coordinates",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::scalar("H", Expr(&["u", "x1", "x2", "x3", "x4"]), "x1^4", "profile, independent of v"),
        ],
        builder: pp_wave,
    },
    Family {
        id: "plane_wave",
        summary: "plane wave H = sum a_ij(u) x_i x_j with steady potential f0(u)",
        origin: "steady isotropic solitons on plane waves",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::matrix("a", Expr(U), "identity", "symmetric profile matrix"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: plane_wave,
    },
    Family {
        id: "cflat_pp_wave",
        summary: "conformally flat pp-wave H = a(u) sum x_i^2 + sum b_i(u) x_i + c(u)",
        origin: "steady isotropic solitons on locally conformally flat pp-waves",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::scalar("a", Expr(U), "1", "quadratic coefficient"),
            ParamSpec::list("b", Expr(U), "0", "linear coefficients"),
            ParamSpec::scalar("c", Expr(U), "0", "constant term"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: cflat_pp_wave,
    },
    Family {
        id: "recurrent_type1",
        summary: "pp-wave H = exp(k x1) h0(u)/k^2 + h1(u) + x1 h2(u), f = f0(u) + k x1",
        origin: "steady solitons with spacelike gradient on pp-waves with recurrent curvature, first type",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::scalar("kappa", Real, "1", "nonzero slope of f in x1"),
            ParamSpec::scalar("h0", Expr(U), "1", "nonvanishing amplitude"),
            ParamSpec::scalar("h1", Expr(U), "0", "constant term"),
            ParamSpec::scalar("h2", Expr(U), "0", "linear term"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: recurrent_type1,
    },
    Family {
        id: "recurrent_type2",
        summary: "pp-wave H = a(u) sum b_i x_i^2, f = f0(u) + sum k_i x_i",
        origin: "steady solitons on pp-waves with recurrent curvature, second type",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 2 to 4"),
            ParamSpec::scalar("a", Expr(U), "u", "amplitude with a' != 0"),
            ParamSpec::list("b", Real, "n+1-i", "coefficients, |b1| >= ... >= |bn|, b2 != 0"),
            ParamSpec::list("kappa", Real, "0", "slopes of f, zero wherever b_i != 0"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: recurrent_type2,
    },
    Family {
        id: "two_symmetric",
        summary: "pp-wave H = sum (a_ij u + b_ij) x_i x_j with diagonal a",
        origin: "steady isotropic solitons on two-symmetric pp-waves",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::matrix("a", Real, "diag(1..n)", "diagonal, nonzero, a11 <= ... <= ann"),
            ParamSpec::matrix("b", Real, "0", "symmetric"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: two_symmetric,
    },
    Family {
        id: "conformally_symmetric",
        summary: "pp-wave H = a(u) sum x_i^2 + sum b_ij x_i x_j with b traceless",
        origin: "steady isotropic solitons on conformally symmetric pp-waves",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 2 to 4"),
            ParamSpec::scalar("a", Expr(U), "u", "quadratic coefficient"),
            ParamSpec::matrix("b", Real, "diag(1,-1,0,..)", "symmetric, nonzero, traceless"),
            ParamSpec::scalar("f0", Real, "0", "f0(u0)"),
            ParamSpec::scalar("df0", Real, "0", "f0'(u0)"),
        ],
        builder: conformally_symmetric,
    },
    Family {
        id: "cflat_soliton_vector",
        summary: "non-gradient Ricci solitons on conformally flat pp-waves",
        origin: "Ricci soliton vector fields on locally conformally flat pp-waves, any lambda",
        params: &[
            ParamSpec::scalar("n", Integer, "2", "number of transverse coordinates, 1 to 4"),
            ParamSpec::scalar("a", Expr(U), "1", "quadratic coefficient"),
            ParamSpec::list("b", Expr(U), "0", "linear coefficients"),
            ParamSpec::scalar("c", Expr(U), "0", "constant term"),
            ParamSpec::scalar("lambda", Real, "1", "soliton constant"),
            ParamSpec::list("q0", Real, "0", "q_i(u0)"),
            ParamSpec::list("dq0", Real, "0", "q_i'(u0)"),
            ParamSpec::scalar("p0", Real, "0", "p(u0)"),
        ],
        builder: cflat_soliton_vector,
    },
    Family {
        id: "warped_rw",
        summary: "e dt^2 + psi(t)^2 g_N over a space form with a potential f(t)",
        origin: "Robertson-Walker type warped products over a constant-curvature fiber",
        params: &[
            ParamSpec::scalar("epsilon", Choice(SIGNS), "-1", "sign of dt^2"),
            ParamSpec::scalar("psi", Expr(T), "sqrt(2)*tanh(t/sqrt(2))", "warping function"),
            ParamSpec::scalar("c", Real, "0", "fiber curvature"),
            ParamSpec::scalar("fiber_dim", Integer, "1", "fiber dimension, 1 to 4"),
            ParamSpec::scalar("f", Expr(T), "-2*log(cosh(t/sqrt(2)))", "potential"),
            ParamSpec::scalar("lambda", Real, "0", "soliton constant"),
        ],
        builder: warped_rw,
    },
    Family {
        id: "space_form",
        summary: "constant curvature c in the conformal chart, trivial Einstein soliton",
        origin: "space forms, used as controls for curvature closed forms and wave structure",
        params: &[
            ParamSpec::scalar("dim", Integer, "3", "dimension, 2 to 5"),
            ParamSpec::scalar("c", Real, "1", "sectional curvature"),
            ParamSpec::scalar("signature", Choice(&["riemannian", "lorentzian"]), "riemannian", "metric signature"),
        ],
        builder: space_form,
    },
];

// ---- sampling boxes ----

/// Interval for axis `name`: the user's, checked against `singular`, or the
/// default shrunk away from it.
fn axis(boxes: &BoxOverrides, name: &str, singular: impl Fn((f64, f64)) -> Vec<f64>) -> Result<(f64, f64)> {
    match boxes.get(name) {
        Some(&(lo, hi)) => {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Parameter(format!("sampling interval {name} = [{lo}, {hi}] is empty")));
            }
            check_clear(name, (lo, hi), &singular((lo, hi)))
        }
        None => avoid(DEFAULT_INTERVAL, &singular(DEFAULT_INTERVAL)),
    }
}

fn free_axis(boxes: &BoxOverrides, name: &str) -> Result<(f64, f64)> {
    axis(boxes, name, |_| Vec::new())
}

/// Axes of a conformal space-form chart; user intervals must keep the conformal factor finite.
fn conformal_axes(boxes: &BoxOverrides, names: &[String], c: f64, eta: &[f64]) -> Result<Vec<(f64, f64)>> {
    let half = conformal_half_width(c, eta)?;
    let bad = eta.iter().filter(|&&e| c * e < 0.0).count();
    let limit = if bad == 0 { f64::INFINITY } else { 2.0 / (c.abs() * bad as f64).sqrt() };
    names
        .iter()
        .map(|name| match boxes.get(name) {
            Some(&(lo, hi)) => {
                if !(lo < hi) || lo.abs().max(hi.abs()) >= limit {
                    return Err(Error::Parameter(format!(
                        "sampling interval {name} = [{lo}, {hi}] must be nonempty and inside |y| < {limit}"
                    )));
                }
                Ok((lo, hi))
            }
            None => Ok((-half, half)),
        })
        .collect()
}

fn u0_in(span: (f64, f64)) -> f64 {
    if span.0 <= 0.0 && 0.0 <= span.1 {
        0.0
    } else {
        span.0
    }
}

fn coordinate_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn is_ode_fed(sol: &OdeSolution) -> bool {
    sol.polynomial().is_none()
}

/// Constant-curvature metric `η / (1 + (c/4) η(y,y))^2` on coordinates starting at `first`.
fn conformal_fiber(c: f64, eta: &[f64], first: usize) -> (ScalarField, Vec<ScalarField>) {
    let q = ScalarField::sum(eta.iter().enumerate().map(|(i, e)| *e * ScalarField::coordinate(first + i).powi(2)));
    let factor = (1.0 + (c / 4.0) * q).powi(-2);
    let diag = eta.iter().map(|e| *e * &factor).collect();
    (factor, diag)
}

// ---- simple families ----

fn minkowski_gaussian(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let dim = r.count("dim", 2, 16)?;
    let lambda = r.real("lambda")?;
    let names = coordinate_names("x", dim);
    let iv = names.iter().map(|n| free_axis(boxes, n)).collect::<Result<Vec<_>>>()?;
    let chart = Chart::new(names, iv)?;
    let diag = (0..dim).map(|i| ScalarField::constant(if i == 0 { -1.0 } else { 1.0 })).collect();
    let g = MetricField::diagonal(Arc::clone(&chart), Signature::Lorentzian, diag)?;
    let q = ScalarField::sum((0..dim).map(|i| {
        let x2 = ScalarField::coordinate(i).powi(2);
        if i == 0 {
            -x2
        } else {
            x2
        }
    }));
    let f = (lambda / 2.0) * q;
    let c = Arc::new(Curvature::new(g));
    let s = SolitonInstance::gradient(Arc::clone(&c), f, lambda)?;
    let mut extra = vec![Check::at_most(
        "closed_form.riemann",
        "max |R| for the flat metric",
        Probe::Field(c.riemann().clone()),
        CLOSED_FORM,
    )];
    if lambda != 0.0 {
        extra.push(causal_map(&s, dim));
    }
    let traits = Traits {
        lcf: Some(true),
        ..Traits::default()
    };
    Ok(Instance::new("minkowski_gaussian", c, Some(s), traits).with_checks(extra))
}

/// Timelike, null and spacelike gradient at `(1,0,..)`, `(1,1,0,..)`, `(0,1,0,..)`.
fn causal_map(s: &SolitonInstance, dim: usize) -> Check {
    let s = s.clone();
    Check::global(
        "causal.map",
        "number of wrong causal verdicts at (1,0,..), (1,1,0,..), (0,1,0,..)",
        Bound::AtMost,
        0.0,
        move |_| {
            let expected = [
                (vec![1.0, 0.0], CausalCharacter::Timelike),
                (vec![1.0, 1.0], CausalCharacter::Null),
                (vec![0.0, 1.0], CausalCharacter::Spacelike),
            ];
            let mut wrong = 0;
            let mut seen = Vec::new();
            for (head, want) in expected {
                let mut p = head;
                p.resize(dim, 0.0);
                let got = causal_character(&s, &p)?;
                if got != want {
                    wrong += 1;
                }
                seen.push(format!("{got:?}").to_lowercase());
            }
            Ok(Measured {
                value: wrong as f64,
                component: "verdicts".into(),
                point: None,
                detail: Some(seen.join("/")),
            })
        },
    )
}

fn cigar_2d(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let case = r.choice("case")?;
    let a = r.real("a")?;
    let b = r.real("b")?;
    let rr = r.real("r")?;
    let d = r.real("d")?;
    if case != "flat" && rr <= 0.0 {
        return Err(Error::Parameter(format!("cigar_2d: r must be positive, got {rr}")));
    }
    let t = ScalarField::coordinate(0);
    let theta = (rr / SQRT_2) * (a * &t + b);
    let k = a * SQRT_2 / rr;
    let (omega, f, tau) = match case.as_str() {
        "tan" => (
            k * theta.tan(),
            d - theta.cos().powi(2).log(),
            2.0 * a * a * rr * rr * theta.cos().powi(-2),
        ),
        "tanh" => (
            k * theta.tanh(),
            d - 2.0 * theta.cosh().log(),
            -2.0 * a * a * rr * rr * theta.cosh().powi(-2),
        ),
        _ => (a * &t + b, ScalarField::constant(d), ScalarField::zero()),
    };
    if omega.as_constant() == Some(0.0) {
        return Err(Error::Parameter("cigar_2d: warping function vanishes identically".into()));
    }
    let t_iv = axis(boxes, "t", |iv| scan_singular(&omega, 0, iv))?;
    let s_iv = free_axis(boxes, "s")?;
    let chart = Chart::new(vec!["t".into(), "s".into()], vec![t_iv, s_iv])?;
    let g = MetricField::diagonal(chart, Signature::Lorentzian, vec![ScalarField::constant(-1.0), omega.powi(2)])?;
    let c = Arc::new(Curvature::new(g));
    let chart = Arc::clone(c.metric().chart());
    let s = SolitonInstance::gradient(Arc::clone(&c), f, 0.0)?;
    let mut extra = vec![Check::at_most(
        "closed_form.tau",
        "max |tau - tau_expected|",
        Probe::Field(TensorField::scalar(chart, c.scalar_curvature() - tau)),
        1e-8,
    )];
    if let Some(check) = cigar_completeness(&case, a, b, rr, omega.clone(), t_iv)? {
        extra.push(check);
    }
    let traits = Traits {
        lcf: Some(true),
        ..Traits::default()
    };
    Ok(Instance::new("cigar_2d", c, Some(s), traits).with_checks(extra))
}

/// Completeness verdict on the maximal pole-free interval around the box.
/// The tanh branch and constant warping are complete, the tan branch is not.
fn cigar_completeness(case: &str, a: f64, b: f64, r: f64, omega: ScalarField, t_iv: (f64, f64)) -> Result<Option<Check>> {
    let gamma = 0.5 * (t_iv.0 + t_iv.1);
    let (interval, expected) = match case {
        _ if a == 0.0 => ((f64::NEG_INFINITY, f64::INFINITY), Completeness::Complete),
        "tanh" => ((f64::NEG_INFINITY, f64::INFINITY), Completeness::Complete),
        "tan" => {
            let theta = r * (a * gamma + b) / SQRT_2;
            let k = (theta / PI).round();
            let to_t = |th: f64| (th * SQRT_2 / r - b) / a;
            let (x, y) = (to_t(k * PI - FRAC_PI_2), to_t(k * PI + FRAC_PI_2));
            ((x.min(y), x.max(y)), Completeness::Incomplete)
        }
        _ => return Ok(None),
    };
    Ok(Some(Check::global(
        "completeness",
        "verdict of the warped-product completeness integral (0 when as expected)",
        Bound::AtMost,
        0.0,
        move |_| {
            let rep = completeness_classify(&omega, 0, interval, gamma)?;
            Ok(Measured {
                value: if rep.verdict == expected { 0.0 } else { 1.0 },
                component: "verdict".into(),
                point: None,
                detail: Some(format!(
                    "{:?} on ({}, {}), expected {:?}",
                    rep.verdict, interval.0, interval.1, expected
                )),
            })
        },
    )))
}

fn einstein_brinkmann(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let eps: f64 = if r.choice("epsilon")? == "1" { 1.0 } else { -1.0 };
    let lambda = r.real("lambda")?;
    let a = r.real("a")?;
    let b = r.real("b")?;
    let m = r.count("fiber_dim", 1, 4)?;
    if lambda == 0.0 && a == 0.0 {
        return Err(Error::Parameter("einstein_brinkmann: f' vanishes identically".into()));
    }
    let t = ScalarField::coordinate(0);
    let psi = eps * lambda * &t + a;
    let f = eps * (lambda / 2.0) * t.powi(2) + a * &t + b;
    let t_iv = axis(boxes, "t", |_| if lambda != 0.0 { vec![-a / (eps * lambda)] } else { vec![] })?;
    let curv = eps * lambda * lambda;
    let eta: Vec<f64> = (0..m).map(|i| if i == 0 && eps > 0.0 { -1.0 } else { 1.0 }).collect();
    let fiber_names = coordinate_names("y", m);
    let mut iv = vec![t_iv];
    iv.extend(conformal_axes(boxes, &fiber_names, curv, &eta)?);
    let mut names = vec!["t".to_string()];
    names.extend(fiber_names.iter().cloned());
    let chart = Chart::new(names, iv.clone())?;
    let (_, fiber) = conformal_fiber(curv, &eta, 1);
    let mut diag = vec![ScalarField::constant(eps)];
    diag.extend(fiber.iter().map(|h| psi.powi(2) * h));
    let g = MetricField::diagonal(Arc::clone(&chart), Signature::Lorentzian, diag)?;
    let c = Arc::new(Curvature::new(g));
    let s = SolitonInstance::gradient(Arc::clone(&c), f, lambda)?;
    let mut extra = vec![Check::at_most(
        "closed_form.ricci",
        "max |Ric| (the metric is Ricci flat)",
        Probe::Field(c.ricci().clone()),
        1e-8,
    )];
    if m >= 2 {
        let fchart = Chart::new(fiber_names, iv[1..].to_vec())?;
        let (_, fdiag) = conformal_fiber(curv, &eta, 0);
        let sig = if eps > 0.0 { Signature::Lorentzian } else { Signature::Riemannian };
        let gn = MetricField::diagonal(fchart, sig, fdiag)?;
        let expected = (m * (m - 1)) as f64 * curv;
        let tape = Tape::compile(&[Curvature::new(gn).scalar_curvature() - expected]);
        extra.push(Check::pointwise(
            "closed_form.fiber_tau",
            "max |tau_N - n(n+1) e lambda^2| on the fiber",
            1e-8,
            move |p: &[f64]| Ok(vec![("tau_N".into(), tape.evaluate(&p[1..])?[0])]),
        ));
    }
    let traits = Traits {
        lcf: Some(true),
        ..Traits::default()
    };
    Ok(Instance::new("einstein_brinkmann", c, Some(s), traits).with_checks(extra))
}

fn warped_rw(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let eps: f64 = if r.choice("epsilon")? == "1" { 1.0 } else { -1.0 };
    let psi = r.expr("psi")?;
    let curv = r.real("c")?;
    let m = r.count("fiber_dim", 1, 4)?;
    let f = r.expr("f")?;
    let lambda = r.real("lambda")?;
    if psi.as_constant() == Some(0.0) {
        return Err(Error::Parameter("warped_rw: psi vanishes identically".into()));
    }
    let t_iv = axis(boxes, "t", |iv| scan_singular(&psi, 0, iv))?;
    let eta: Vec<f64> = (0..m).map(|i| if i == 0 && eps > 0.0 { -1.0 } else { 1.0 }).collect();
    let fiber_names = coordinate_names("y", m);
    let mut iv = vec![t_iv];
    iv.extend(conformal_axes(boxes, &fiber_names, curv, &eta)?);
    let mut names = vec!["t".to_string()];
    names.extend(fiber_names);
    let chart = Chart::new(names, iv)?;
    let (_, fiber) = conformal_fiber(curv, &eta, 1);
    let mut diag = vec![ScalarField::constant(eps)];
    diag.extend(fiber.iter().map(|h| psi.powi(2) * h));
    let g = MetricField::diagonal(chart, Signature::Lorentzian, diag)?;
    let c = Arc::new(Curvature::new(g));
    let s = SolitonInstance::gradient(Arc::clone(&c), f, lambda)?;
    let traits = Traits {
        lcf: Some(true),
        ..Traits::default()
    };
    Ok(Instance::new("warped_rw", c, Some(s), traits))
}

fn space_form(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let dim = r.count("dim", 2, 5)?;
    let curv = r.real("c")?;
    let lorentzian = r.choice("signature")? == "lorentzian";
    let eta: Vec<f64> = (0..dim).map(|i| if i == 0 && lorentzian { -1.0 } else { 1.0 }).collect();
    let names = coordinate_names("x", dim);
    let iv = conformal_axes(boxes, &names, curv, &eta)?;
    let chart = Chart::new(names, iv)?;
    let (_, diag) = conformal_fiber(curv, &eta, 0);
    let sig = if lorentzian { Signature::Lorentzian } else { Signature::Riemannian };
    let g = MetricField::diagonal(Arc::clone(&chart), sig, diag)?;
    let gt = g.as_tensor();
    let c = Arc::new(Curvature::new(g));
    let lambda = curv * (dim - 1) as f64;
    let s = SolitonInstance::gradient(Arc::clone(&c), ScalarField::zero(), lambda)?;
    let expected_r = kulkarni_nomizu(&gt, &gt)?.scale(curv / 2.0);
    let tau = c.scalar_curvature() - curv * (dim * (dim - 1)) as f64;
    let mut extra = vec![
        Check::at_most(
            "closed_form.riemann",
            "max |R - (c/2) g (.) g|",
            Probe::Field(c.riemann().sub(&expected_r)?),
            1e-8,
        ),
        Check::at_most(
            "closed_form.tau",
            "max |tau - c dim (dim - 1)|",
            Probe::Field(TensorField::scalar(chart, tau)),
            1e-8,
        ),
        parallel_check("recurrence.riemann", "max |nabla R|", &c, c.riemann()),
    ];
    if lorentzian && curv != 0.0 {
        let v = TensorField::vector(
            Arc::clone(c.metric().chart()),
            (0..dim).map(|i| ScalarField::constant(if i < 2 { 1.0 } else { 0.0 })).collect(),
        )?;
        let ws = WaveStructure::new(&c, &v)?;
        extra.push(Check::new(
            "wave_structure.pr",
            "R(V^perp, V^perp, ., .) for the null field d1 + d2, expected nonzero",
            Probe::Pointwise(Arc::new(move |p: &[f64]| Ok(vec![("pr".into(), ws.at(p)?.pr_residual)]))),
            Bound::AtLeast,
            super::PRESENCE_THRESHOLD,
        ));
    }
    let traits = Traits {
        lcf: Some(true),
        ..Traits::default()
    };
    Ok(Instance::new("space_form", c, Some(s), traits).with_checks(extra))
}

// ---- pp-waves ----

/// A pp-wave on coordinates `(u, v, x1..xn)`.
struct PpWave {
    n: usize,
    h: ScalarField,
    curvature: Arc<Curvature>,
    u_span: (f64, f64),
}

fn x(i: usize) -> ScalarField {
    ScalarField::coordinate(2 + i)
}

fn pp_names(n: usize) -> Vec<String> {
    let mut names = vec!["u".to_string(), "v".to_string()];
    names.extend(coordinate_names("x", n));
    names
}

/// Builds the metric; `u_singular` lists values of `u` the box must avoid.
fn pp_metric(n: usize, h: ScalarField, boxes: &BoxOverrides, u_singular: impl Fn((f64, f64)) -> Vec<f64>) -> Result<PpWave> {
    if h.depends_on(1) {
        return Err(Error::Parameter("pp-wave profile must not depend on v".into()));
    }
    let names = pp_names(n);
    let u_span = axis(boxes, "u", u_singular)?;
    let mut iv = vec![u_span];
    for name in &names[1..] {
        iv.push(free_axis(boxes, name)?);
    }
    let chart = Chart::new(names, iv)?;
    let g = MetricField::from_fn(chart, Signature::Lorentzian, |a, b| match (a, b) {
        (0, 0) => h.clone(),
        (0, 1) => ScalarField::one(),
        (a, b) if a == b && a >= 2 => ScalarField::one(),
        _ => ScalarField::zero(),
    })?;
    Ok(PpWave {
        n,
        h,
        curvature: Arc::new(Curvature::new(g)),
        u_span,
    })
}

impl PpWave {
    fn chart(&self) -> Arc<Chart> {
        Arc::clone(self.curvature.metric().chart())
    }

    fn hxx(&self, i: usize, j: usize) -> ScalarField {
        self.curvature.partial(&self.curvature.partial(&self.h, 2 + i), 2 + j)
    }

    /// Numerical test of the conformally flat shape: `∂_i∂_j H = s(u) δ_ij`.
    fn is_conformally_flat(&self) -> bool {
        let n = self.n;
        let mut defects = Vec::new();
        for i in 0..n {
            defects.push(self.hxx(i, i) - self.hxx(0, 0));
            for j in i + 1..n {
                defects.push(self.hxx(i, j));
            }
            for j in 0..n {
                defects.push(self.curvature.partial(&self.hxx(i, i), 2 + j));
            }
        }
        let tape = Tape::compile(&defects);
        let sample = sample_points(self.curvature.metric(), &[], 32, 0);
        sample.points.iter().all(|p| match tape.evaluate(p) {
            Ok(vals) => vals.iter().all(|v| v.abs() < 1e-9),
            Err(_) => false,
        })
    }

    /// Christoffel symbols, curvature, Ricci, τ and Ric² against the closed forms.
    fn closed_form_checks(&self) -> Result<Vec<Check>> {
        let c = &self.curvature;
        let chart = self.chart();
        let d = 2 + self.n;
        let dh = |k: usize| c.partial(&self.h, k);
        let is_x = |k: usize| k >= 2;
        let gamma = TensorField::from_fn(Arc::clone(&chart), c.christoffel().slots().to_vec(), |idx| {
            match (idx[0], idx[1], idx[2]) {
                (1, 0, 0) => 0.5 * dh(0),
                (k, 0, 0) if is_x(k) => -0.5 * dh(k),
                (1, 0, j) if is_x(j) => 0.5 * dh(j),
                (1, i, 0) if is_x(i) => 0.5 * dh(i),
                _ => ScalarField::zero(),
            }
        });
        let riemann = TensorField::from_fn(Arc::clone(&chart), c.riemann().slots().to_vec(), |idx| {
            let (a, b, cc, e) = (idx[0], idx[1], idx[2], idx[3]);
            let h2 = |i: usize, j: usize| self.hxx(i - 2, j - 2);
            if a == 0 && cc == 0 && is_x(b) && is_x(e) {
                -0.5 * h2(b, e)
            } else if b == 0 && e == 0 && is_x(a) && is_x(cc) {
                -0.5 * h2(a, cc)
            } else if a == 0 && e == 0 && is_x(b) && is_x(cc) {
                0.5 * h2(b, cc)
            } else if b == 0 && cc == 0 && is_x(a) && is_x(e) {
                0.5 * h2(a, e)
            } else {
                ScalarField::zero()
            }
        });
        let lap = ScalarField::sum((0..self.n).map(|i| self.hxx(i, i)));
        let ricci = TensorField::from_fn(Arc::clone(&chart), c.ricci().slots().to_vec(), |idx| {
            if idx == [0, 0] {
                -0.5 * &lap
            } else {
                ScalarField::zero()
            }
        });
        debug_assert_eq!(c.metric().dim(), d);
        Ok(vec![
            Check::at_most(
                "closed_form.christoffel",
                "max |Gamma - Gamma_pp|",
                Probe::Field(c.christoffel().sub(&gamma)?),
                CLOSED_FORM,
            ),
            Check::at_most(
                "closed_form.riemann",
                "max |R - R_pp|, R_uiuj = -H_ij/2",
                Probe::Field(c.riemann().sub(&riemann)?),
                CLOSED_FORM,
            ),
            Check::at_most(
                "closed_form.ricci",
                "max |Ric - Ric_pp|, rho_uu = -Lap H/2",
                Probe::Field(c.ricci().sub(&ricci)?),
                CLOSED_FORM,
            ),
            Check::at_most(
                "closed_form.tau",
                "max |tau|",
                Probe::Field(TensorField::scalar(Arc::clone(&chart), c.scalar_curvature().clone())),
                CLOSED_FORM,
            ),
            Check::at_most("closed_form.ric2", "max |Ric o Ric|", Probe::Field(ricci_squared(c)), 1e-8),
        ])
    }

    /// `∂_v` is parallel and satisfies the pr-wave conditions.
    fn null_field_checks(&self) -> Result<Vec<Check>> {
        let d = 2 + self.n;
        let dv = TensorField::vector(
            self.chart(),
            (0..d).map(|i| ScalarField::constant(if i == 1 { 1.0 } else { 0.0 })).collect(),
        )?;
        let ws = WaveStructure::new(&self.curvature, &dv)?;
        Ok(vec![
            parallel_check("wave_structure.dv_parallel", "max |nabla d_v|", &self.curvature, &dv),
            Check::pointwise(
                "wave_structure.dv_pr",
                "R(V^perp, V^perp, ., .) and R(V, V^perp, ., .) for V = d_v",
                WAVE_TOLERANCE,
                move |p: &[f64]| {
                    let w = ws.at(p)?;
                    Ok(vec![("pr".into(), w.pr_residual), ("axis".into(), w.axis_residual)])
                },
            ),
        ])
    }

    /// Steady soliton with `f = f0(u) + Σ κ_i x_i`, where `f0'' = rhs`.
    fn soliton(
        self,
        family: &'static str,
        rhs: &ScalarField,
        kappa: &[f64],
        (f0, df0): (f64, f64),
        conformal: bool,
    ) -> Result<Instance> {
        let sol = solve_f0(rhs, 0, u0_in(self.u_span), f0, df0, self.u_span)?;
        let f = sol.field() + ScalarField::sum(kappa.iter().enumerate().map(|(i, k)| *k * x(i)));
        let c = Arc::clone(&self.curvature);
        let s = SolitonInstance::gradient(Arc::clone(&c), f.clone(), 0.0)?;
        let lcf = self.is_conformally_flat();
        let mut extra = self.closed_form_checks()?;
        extra.push(potential_shape(&c, &f, self.n));
        extra.extend(self.null_field_checks()?);
        let traits = Traits {
            lcf: conformal.then_some(lcf),
            isotropic: kappa.iter().all(|k| *k == 0.0),
            ode_fed: is_ode_fed(&sol),
        };
        Ok(Instance::new(family, c, Some(s), traits).with_checks(extra))
    }
}

/// `f` has the shape `f0(u) + Σ κ_i x_i`: no `v` dependence and no second
/// derivatives involving the transverse coordinates.
fn potential_shape(c: &Curvature, f: &ScalarField, n: usize) -> Check {
    let mut labels = vec!["d_v f".to_string()];
    let mut fields = vec![c.partial(f, 1)];
    for i in 0..n {
        let fi = c.partial(f, 2 + i);
        labels.push(format!("d_u d_x{} f", i + 1));
        fields.push(c.partial(&fi, 0));
        for j in i..n {
            labels.push(format!("d_x{} d_x{} f", i + 1, j + 1));
            fields.push(c.partial(&fi, 2 + j));
        }
    }
    Check::new(
        "closed_form.potential",
        "f = f0(u) + sum k_i x_i",
        scalars_probe(labels, fields),
        Bound::AtMost,
        CLOSED_FORM,
    )
}

fn pp_n(r: &mut Resolver, lo: usize) -> Result<usize> {
    r.count("n", lo, 4)
}

fn f0_data(r: &mut Resolver) -> Result<(f64, f64)> {
    Ok((r.real("f0")?, r.real("df0")?))
}

fn pp_wave(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let names = pp_names(n);
    let h = r.expr_in("H", &names.iter().map(String::as_str).collect::<Vec<_>>())?;
    let pp = pp_metric(n, h, boxes, |_| Vec::new())?;
    let lcf = pp.is_conformally_flat();
    let mut extra = pp.closed_form_checks()?;
    extra.extend(pp.null_field_checks()?);
    let traits = Traits {
        lcf: Some(lcf),
        ..Traits::default()
    };
    Ok(Instance::new("pp_wave", Arc::clone(&pp.curvature), None, traits).with_checks(extra))
}

fn plane_wave(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let a = r.matrix_expr("a", n, |i, j| if i == j { "1" } else { "0" })?;
    let data = f0_data(r)?;
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            terms.push(&a[i][j] * x(i) * x(j));
        }
    }
    let h = ScalarField::sum(terms);
    let rhs = ScalarField::sum((0..n).map(|i| a[i][i].clone()));
    pp_metric(n, h, boxes, |_| Vec::new())?.soliton("plane_wave", &rhs, &[], data, true)
}

fn cflat_profile(r: &mut Resolver, n: usize) -> Result<(ScalarField, Vec<ScalarField>, ScalarField, ScalarField)> {
    let a = r.expr("a")?;
    let b = r.list_expr("b", n, "0")?;
    let c = r.expr("c")?;
    let h = &a * ScalarField::sum((0..n).map(|i| x(i).powi(2)))
        + ScalarField::sum(b.iter().enumerate().map(|(i, bi)| bi * x(i)))
        + &c;
    Ok((a, b, c, h))
}

fn cflat_pp_wave(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let (a, _, _, h) = cflat_profile(r, n)?;
    let data = f0_data(r)?;
    let rhs = n as f64 * &a;
    let pp = pp_metric(n, h, boxes, |_| Vec::new())?;
    let c = Arc::clone(&pp.curvature);
    // ∇ρ = σ ⊗ ρ with σ = (ln a)' du.
    let da = c.partial(&a, 0);
    let sigma = expected_sigma(&c, vec![(0, &da / &a)]);
    let rec = recurrence_against(&c, c.ricci(), "recurrence.ricci", "nabla Ric = sigma (x) Ric, sigma = (ln a)' du", sigma);
    let inst = pp.soliton("cflat_pp_wave", &rhs, &[], data, true)?;
    Ok(inst.with_checks(vec![rec]))
}

fn expected_sigma(c: &Curvature, entries: Vec<(usize, ScalarField)>) -> Vec<ScalarField> {
    let mut sigma = vec![ScalarField::zero(); c.metric().dim()];
    for (k, s) in entries {
        sigma[k] = s;
    }
    sigma
}

/// `∇T = σ ⊗ T` with the given `σ`: relative residual and `|σ - σ_expected|`.
/// Points where `T` vanishes are skipped.
fn recurrence_against(c: &Curvature, t: &TensorField, name: &str, description: &str, expected: Vec<ScalarField>) -> Check {
    let rec = Recurrence::new(c, t);
    let tape = Tape::compile(&expected);
    Check::pointwise(name, description, 1e-6, move |p: &[f64]| {
        let pt = rec.at(p)?;
        let Some(sigma) = pt.sigma else {
            return Err(Error::ZeroGradient(p.to_vec()));
        };
        let want = tape.evaluate(p)?;
        let mut out = vec![("relative residual".to_string(), pt.relative_residual)];
        for (k, (s, w)) in sigma.iter().zip(&want).enumerate() {
            out.push((format!("sigma_{k} - expected"), (s - w) / w.abs().max(1.0)));
        }
        Ok(out)
    })
}

fn norm_check(s: &SolitonInstance, expected: f64) -> Result<Check> {
    let q = crate::soliton::gradient_norm_squared(s)? - expected;
    Ok(Check::at_most(
        "closed_form.norm",
        "max |g(grad f, grad f) - sum k_i^2|",
        Probe::Field(TensorField::scalar(Arc::clone(s.chart()), q)),
        1e-8,
    ))
}

fn causal_everywhere(s: &SolitonInstance, want: CausalCharacter) -> Check {
    let s = s.clone();
    Check::pointwise(
        "causal.gradient",
        "points where grad f has the wrong causal character",
        0.0,
        move |p: &[f64]| {
            let got = causal_character(&s, p)?;
            Ok(vec![(format!("{got:?}").to_lowercase(), if got == want { 0.0 } else { 1.0 })])
        },
    )
}

fn recurrent_type1(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let kappa = r.real("kappa")?;
    if kappa == 0.0 {
        return Err(Error::Parameter("recurrent_type1: kappa must be nonzero".into()));
    }
    let h0 = r.expr("h0")?;
    let h1 = r.expr("h1")?;
    let h2 = r.expr("h2")?;
    let data = f0_data(r)?;
    let h = (kappa * x(0)).exp() * &h0 / (kappa * kappa) + &h1 + x(0) * &h2;
    let rhs = (-kappa / 2.0) * &h2;
    let pp = pp_metric(n, h, boxes, |iv| scan_singular(&h0, 0, iv))?;
    let c = Arc::clone(&pp.curvature);
    let sigma = expected_sigma(&c, vec![(0, c.partial(&h0, 0) / &h0), (2, ScalarField::constant(kappa))]);
    let rec = recurrence_against(
        &c,
        c.riemann(),
        "recurrence.riemann",
        "nabla R = sigma (x) R, sigma = k dx1 + (h0'/h0) du",
        sigma,
    );
    let mut k = vec![0.0; n];
    k[0] = kappa;
    let inst = pp.soliton("recurrent_type1", &rhs, &k, data, true)?;
    let s = inst.soliton().expect("gradient instance").clone();
    let extra = vec![rec, norm_check(&s, kappa * kappa)?, causal_everywhere(&s, CausalCharacter::Spacelike)];
    Ok(inst.with_checks(extra))
}

fn recurrent_type2(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 2)?;
    let a = r.expr("a")?;
    let b = r.list_real("b", n, |i| (n + 1 - i) as f64)?;
    let kappa = r.list_real("kappa", n, |_| 0.0)?;
    let data = f0_data(r)?;
    if b.windows(2).any(|w| w[0].abs() < w[1].abs()) {
        return Err(Error::Parameter(format!(
            "recurrent_type2: b must satisfy |b1| >= ... >= |bn|, got {b:?}"
        )));
    }
    if b[1] == 0.0 {
        return Err(Error::Parameter("recurrent_type2: b2 must be nonzero".into()));
    }
    if let Some(i) = (0..n).find(|&i| b[i] != 0.0 && kappa[i] != 0.0) {
        return Err(Error::Parameter(format!(
            "recurrent_type2: kappa{} must vanish because b{} != 0",
            i + 1,
            i + 1
        )));
    }
    let da = a.partial(0);
    if da.as_constant() == Some(0.0) {
        return Err(Error::Parameter("recurrent_type2: a'(u) must not vanish".into()));
    }
    let h = &a * ScalarField::sum((0..n).map(|i| b[i] * x(i).powi(2)));
    let rhs = b.iter().sum::<f64>() * &a;
    let pp = pp_metric(n, h, boxes, |iv| scan_singular(&da, 0, iv))?;
    let c = Arc::clone(&pp.curvature);
    let sigma = expected_sigma(&c, vec![(0, &da / &a)]);
    let rec = recurrence_against(&c, c.riemann(), "recurrence.riemann", "nabla R = sigma (x) R, sigma = (a'/a) du", sigma);
    let norm: f64 = kappa.iter().map(|k| k * k).sum();
    let inst = pp.soliton("recurrent_type2", &rhs, &kappa, data, true)?;
    let s = inst.soliton().expect("gradient instance").clone();
    let mut extra = vec![rec, norm_check(&s, norm)?];
    if norm > 0.0 {
        extra.push(causal_everywhere(&s, CausalCharacter::Spacelike));
    }
    Ok(inst.with_checks(extra))
}

fn two_symmetric(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let a = r.matrix_real("a", n, |i, j| if i == j { i as f64 } else { 0.0 })?;
    let b = r.matrix_real("b", n, |_, _| 0.0)?;
    let data = f0_data(r)?;
    for i in 0..n {
        if a[i][i] == 0.0 {
            return Err(Error::Parameter(format!("two_symmetric: a{0}{0} must be nonzero", i + 1)));
        }
        if i > 0 && a[i - 1][i - 1] > a[i][i] {
            return Err(Error::Parameter("two_symmetric: need a11 <= ... <= ann".into()));
        }
        if let Some(j) = (0..n).find(|&j| j != i && a[i][j] != 0.0) {
            return Err(Error::Parameter(format!("two_symmetric: a must be diagonal, a{}{} != 0", i + 1, j + 1)));
        }
    }
    let u = ScalarField::coordinate(0);
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            terms.push((a[i][j] * &u + b[i][j]) * x(i) * x(j));
        }
    }
    let h = ScalarField::sum(terms);
    let rhs = ScalarField::sum((0..n).map(|i| b[i][i] + a[i][i] * &u));
    let pp = pp_metric(n, h, boxes, |_| Vec::new())?;
    let c = Arc::clone(&pp.curvature);
    let nr = c.covariant_derivative(c.riemann());
    let extra = vec![
        Check::at_most(
            "two_symmetric.nabla2",
            "max |nabla nabla R|",
            Probe::Field(c.covariant_derivative(&nr)),
            1e-8,
        ),
        Check::at_least("two_symmetric.nabla", "max |nabla R|", Probe::Field(nr), 0.1),
    ];
    Ok(pp.soliton("two_symmetric", &rhs, &[], data, true)?.with_checks(extra))
}

fn conformally_symmetric(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 2)?;
    let a = r.expr("a")?;
    let b = r.matrix_real("b", n, |i, j| match (i, j) {
        (1, 1) => 1.0,
        (2, 2) => -1.0,
        _ => 0.0,
    })?;
    let data = f0_data(r)?;
    let trace: f64 = (0..n).map(|i| b[i][i]).sum();
    if trace.abs() > 1e-12 {
        return Err(Error::Parameter(format!("conformally_symmetric: b must be traceless, trace = {trace}")));
    }
    if b.iter().flatten().all(|v| *v == 0.0) {
        return Err(Error::Parameter("conformally_symmetric: b must be nonzero".into()));
    }
    let mut terms = vec![&a * ScalarField::sum((0..n).map(|i| x(i).powi(2)))];
    for i in 0..n {
        for j in 0..n {
            terms.push(b[i][j] * x(i) * x(j));
        }
    }
    let h = ScalarField::sum(terms);
    let rhs = n as f64 * &a;
    let pp = pp_metric(n, h, boxes, |_| Vec::new())?;
    let c = Arc::clone(&pp.curvature);
    let w = c.weyl()?.clone();
    let extra = vec![
        Check::at_most(
            "conformally_symmetric.nabla_weyl",
            "max |nabla W|",
            Probe::Field(c.covariant_derivative(&w)),
            1e-8,
        ),
        Check::at_least("conformally_symmetric.weyl", "max |W|", Probe::Field(w), 0.1),
    ];
    Ok(pp.soliton("conformally_symmetric", &rhs, &[], data, false)?.with_checks(extra))
}

fn einstein_null(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = r.count("n", 1, 4)?;
    let f = r.expr("f")?;
    let pp = pp_metric(n, ScalarField::zero(), boxes, |_| Vec::new())?;
    let f2 = f.partial(0).partial(0);
    let (lo, hi) = pp.u_span;
    let bent = (0..=64).map(|k| lo + (hi - lo) * k as f64 / 64.0).find(|&u| {
        f2.evaluate(&[u]).map_or(true, |v| v.abs() > 1e-12)
    });
    if let Some(u) = bent {
        return Err(Error::Parameter(format!("einstein_null: f'' must vanish, but not at u = {u}")));
    }
    let c = Arc::clone(&pp.curvature);
    let s = SolitonInstance::gradient(Arc::clone(&c), f.clone(), 0.0)?;
    let mut extra = pp.closed_form_checks()?;
    extra.push(potential_shape(&c, &f, n));
    extra.extend(pp.null_field_checks()?);
    let traits = Traits {
        lcf: Some(true),
        isotropic: true,
        ode_fed: false,
    };
    Ok(Instance::new("einstein_null", c, Some(s), traits).with_checks(extra))
}

fn cflat_soliton_vector(r: &mut Resolver, boxes: &BoxOverrides) -> Result<Instance> {
    let n = pp_n(r, 1)?;
    let (a, b, cc, h) = cflat_profile(r, n)?;
    let lambda = r.real("lambda")?;
    let q0 = r.list_real("q0", n, |_| 0.0)?;
    let dq0 = r.list_real("dq0", n, |_| 0.0)?;
    let p0 = r.real("p0")?;
    let pp = pp_metric(n, h, boxes, |_| Vec::new())?;
    let sol = solve_functcond(&FunctcondProblem {
        variable: 0,
        a,
        b,
        c: cc,
        lambda,
        n,
        u0: u0_in(pp.u_span),
        q0,
        dq0,
        p0,
        span: pp.u_span,
    })?;
    let ode_fed = sol.q.iter().chain([&sol.p]).any(is_ode_fed);
    let v = ScalarField::coordinate(1);
    let mut xv = vec![ScalarField::zero(); 2 + n];
    xv[1] = sol.p.field() - ScalarField::sum(sol.q.iter().enumerate().map(|(i, q)| q.field().partial(0) * x(i)))
        + 2.0 * lambda * v;
    for (i, q) in sol.q.iter().enumerate() {
        xv[2 + i] = q.field() + lambda * x(i);
    }
    let c = Arc::clone(&pp.curvature);
    let field = TensorField::vector(pp.chart(), xv)?;
    let s = SolitonInstance::vector(Arc::clone(&c), field, lambda)?;
    let mut extra = pp.closed_form_checks()?;
    extra.extend(pp.null_field_checks()?);
    let traits = Traits {
        lcf: Some(pp.is_conformally_flat()),
        isotropic: false,
        ode_fed,
    };
    Ok(Instance::new("cflat_soliton_vector", c, Some(s), traits).with_checks(extra))
}
