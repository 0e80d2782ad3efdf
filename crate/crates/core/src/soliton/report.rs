// SPDX-License-Identifier: Apache-2.0

//! Named checks, seeded point sampling and verification reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolitonKind;
use crate::error::{Error, Result};
use crate::geometry::{MetricField, TensorField};
use crate::jet::ScalarField;

pub const SCHEMA_VERSION: u32 = 1;
/// Extra draws allowed for a sample point that falls outside the domain.
pub const MAX_RESAMPLES: usize = 3;
const MAX_RECORDED_ERRORS: usize = 5;

/// Labelled values produced at one point. `Err(ZeroGradient)` skips the point.
pub type PointProbe = Arc<dyn Fn(&[f64]) -> Result<Vec<(String, f64)>> + Send + Sync>;

/// One value computed from the whole point set.
pub type GlobalProbe = Arc<dyn Fn(&[Vec<f64>]) -> Result<Measured> + Send + Sync>;

#[derive(Debug, Clone)]
pub struct Measured {
    pub value: f64,
    pub component: String,
    pub point: Option<Vec<f64>>,
    pub detail: Option<String>,
}

/// What a check measures.
#[derive(Clone)]
pub enum Probe {
    /// Largest absolute component over all points.
    Field(TensorField),
    /// Largest minus smallest value over all points.
    Spread(ScalarField),
    Pointwise(PointProbe),
    Global(GlobalProbe),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when the measured value is at most the tolerance.
    AtMost,
    /// Passes when the measured value is at least the threshold.
    AtLeast,
}

#[derive(Clone)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub probe: Probe,
    pub bound: Bound,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: &str, description: &str, probe: Probe, bound: Bound, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            description: description.to_string(),
            probe,
            bound,
            tolerance,
        }
    }

    pub fn at_most(name: &str, description: &str, probe: Probe, tolerance: f64) -> Self {
        Self::new(name, description, probe, Bound::AtMost, tolerance)
    }

    pub fn at_least(name: &str, description: &str, probe: Probe, threshold: f64) -> Self {
        Self::new(name, description, probe, Bound::AtLeast, threshold)
    }

    pub fn pointwise(
        name: &str,
        description: &str,
        tolerance: f64,
        f: impl Fn(&[f64]) -> Result<Vec<(String, f64)>> + Send + Sync + 'static,
    ) -> Self {
        Self::at_most(name, description, Probe::Pointwise(Arc::new(f)), tolerance)
    }

    pub fn global(
        name: &str,
        description: &str,
        bound: Bound,
        tolerance: f64,
        f: impl Fn(&[Vec<f64>]) -> Result<Measured> + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, description, Probe::Global(Arc::new(f)), bound, tolerance)
    }

    /// The group a check belongs to: the name up to the first dot.
    pub fn group(&self) -> &str {
        self.name.split('.').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub component: String,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub index: usize,
    pub point: Vec<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub description: String,
    pub bound: Bound,
    pub tolerance: f64,
    /// Measured value; absent when nothing could be evaluated.
    pub value: Option<f64>,
    pub passed: bool,
    pub points: usize,
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub worst: Option<Worst>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<PointError>,
}

struct Accumulator {
    best: Option<Worst>,
    points: usize,
    skipped: usize,
    errors: Vec<PointError>,
    error_count: usize,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            best: None,
            points: 0,
            skipped: 0,
            errors: Vec::new(),
            error_count: 0,
        }
    }

    fn offer(&mut self, component: &str, point: &[f64], value: f64) {
        let v = value.abs();
        let better = match &self.best {
            None => true,
            Some(w) => v > w.value || (v.is_nan() && !w.value.is_nan()),
        };
        if better {
            self.best = Some(Worst {
                component: component.to_string(),
                point: point.to_vec(),
                value: v,
            });
        }
    }

    fn error(&mut self, index: usize, point: &[f64], e: &Error) {
        self.error_count += 1;
        if self.errors.len() < MAX_RECORDED_ERRORS {
            self.errors.push(PointError {
                index,
                point: point.to_vec(),
                message: e.to_string(),
            });
        }
    }
}

fn finish(check: &Check, mut acc: Accumulator, mut detail: Option<String>) -> CheckResult {
    if let Some(w) = acc.best.as_mut().filter(|w| !w.value.is_finite()) {
        detail.get_or_insert_with(|| format!("non-finite value {} at {}", w.value, format_point(&w.point)));
        w.value = f64::MAX;
        acc.error_count += 1;
    }
    let value = acc.best.as_ref().map(|w| w.value).filter(|v| v.is_finite());
    let within = match (value, check.bound) {
        (Some(v), Bound::AtMost) => v <= check.tolerance,
        (Some(v), Bound::AtLeast) => v >= check.tolerance,
        (None, _) => false,
    };
    CheckResult {
        name: check.name.clone(),
        description: check.description.clone(),
        bound: check.bound,
        tolerance: check.tolerance,
        value,
        passed: within && acc.error_count == 0,
        points: acc.points,
        skipped: acc.skipped,
        worst: acc.best,
        detail,
        errors: acc.errors,
    }
}

/// Evaluates one check over `points`.
pub fn run_check(check: &Check, points: &[Vec<f64>]) -> CheckResult {
    let mut acc = Accumulator::new();
    let mut detail = None;
    match &check.probe {
        Probe::Field(t) => {
            for (i, p) in points.iter().enumerate() {
                match t.evaluate(p) {
                    Ok(vals) => {
                        acc.points += 1;
                        let mut top = (0, 0.0f64);
                        for (k, v) in vals.iter().enumerate() {
                            if v.abs() > top.1 || v.is_nan() {
                                top = (k, v.abs());
                            }
                        }
                        if vals.is_empty() {
                            continue;
                        }
                        acc.offer(&t.label(top.0), p, top.1);
                    }
                    Err(e) => acc.error(i, p, &e.into()),
                }
            }
        }
        Probe::Spread(f) => {
            let mut lo: Option<(f64, usize)> = None;
            let mut hi: Option<(f64, usize)> = None;
            for (i, p) in points.iter().enumerate() {
                match f.evaluate(p) {
                    Ok(v) => {
                        acc.points += 1;
                        if lo.is_none_or(|(m, _)| v < m) {
                            lo = Some((v, i));
                        }
                        if hi.is_none_or(|(m, _)| v > m) {
                            hi = Some((v, i));
                        }
                    }
                    Err(e) => acc.error(i, p, &e.into()),
                }
            }
            if let (Some((a, ia)), Some((b, ib))) = (lo, hi) {
                acc.offer("max - min", &points[ib], b - a);
                detail = Some(format!("min {a:e} at point {ia}, max {b:e} at point {ib}"));
            }
        }
        Probe::Pointwise(f) => {
            for (i, p) in points.iter().enumerate() {
                match f(p) {
                    Ok(vals) => {
                        acc.points += 1;
                        for (label, v) in vals {
                            acc.offer(&label, p, v);
                        }
                    }
                    Err(Error::ZeroGradient(_)) => acc.skipped += 1,
                    Err(e) => acc.error(i, p, &e),
                }
            }
        }
        Probe::Global(f) => match f(points) {
            Ok(m) => {
                acc.points = points.len();
                acc.best = Some(Worst {
                    component: m.component,
                    point: m.point.unwrap_or_default(),
                    value: m.value,
                });
                detail = m.detail;
            }
            Err(e) => {
                acc.error_count += 1;
                detail = Some(e.to_string());
            }
        },
    }
    finish(check, acc, detail)
}

pub fn run_checks(checks: &[Check], points: &[Vec<f64>]) -> Vec<CheckResult> {
    checks.iter().map(|c| run_check(c, points)).collect()
}

/// Sample points and the indices that could not be placed inside the domain.
#[derive(Debug, Clone)]
pub struct Sample {
    pub points: Vec<Vec<f64>>,
    pub rejected: Vec<PointError>,
}

/// Draws `count` points uniformly from the chart's box with ChaCha8 seeded by
/// `seed`. A point where the metric degenerates or any of `fields` fails to
/// evaluate is redrawn up to [`MAX_RESAMPLES`] times, then recorded as rejected.
pub fn sample_points(g: &MetricField, fields: &[&ScalarField], count: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = g.chart().sampling_box().to_vec();
    let mut sample = Sample {
        points: Vec::with_capacity(count),
        rejected: Vec::new(),
    };
    for index in 0..count {
        let mut last = None;
        for _ in 0..=MAX_RESAMPLES {
            let p: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| if lo < hi { rng.random_range(lo..hi) } else { lo })
                .collect();
            let ok = g.check_point(&p).and_then(|_| {
                fields
                    .iter()
                    .try_for_each(|f| f.evaluate(&p).map(|_| ()).map_err(Error::from))
            });
            match ok {
                Ok(()) => {
                    sample.points.push(p);
                    last = None;
                    break;
                }
                Err(e) => last = Some((p, e)),
            }
        }
        if let Some((point, e)) = last {
            sample.rejected.push(PointError {
                index,
                point,
                message: e.to_string(),
            });
        }
    }
    sample
}

/// Result of running a check suite on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub family: String,
    pub parameters: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<SolitonKind>,
    pub seed: u64,
    pub requested_points: usize,
    pub coordinates: Vec<String>,
    pub sampling_box: Vec<[f64; 2]>,
    pub rejected_points: Vec<PointError>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    /// Seconds since the Unix epoch; not covered by the determinism guarantee.
    pub generated_at: u64,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let report: VerificationReport = serde_json::from_str(src)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// One row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "family",
            "check",
            "bound",
            "value",
            "tolerance",
            "passed",
            "points",
            "skipped",
            "worst_component",
            "worst_point",
        ])?;
        for c in &self.checks {
            let (component, point) = match &c.worst {
                Some(w) => (w.component.clone(), format_point(&w.point)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                self.family.clone(),
                c.name.clone(),
                bound_name(c.bound).to_string(),
                c.value.map(|v| format!("{v:e}")).unwrap_or_default(),
                format!("{:e}", c.tolerance),
                c.passed.to_string(),
                c.points.to_string(),
                c.skipped.to_string(),
                component,
                point,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "{} [{}]", self.family, params.join(", "));
        if let (Some(l), Some(k)) = (self.lambda, self.kind) {
            let _ = writeln!(s, "lambda = {l} ({})", serde_json::to_value(k).unwrap().as_str().unwrap());
        }
        let _ = writeln!(s, "seed {}, {} points requested", self.seed, self.requested_points);
        for r in &self.rejected_points {
            let _ = writeln!(s, "  rejected point {} at {}: {}", r.index, format_point(&r.point), r.message);
        }
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(s, "{status} {:<28} {value} {op} {:.1e}", c.name, c.tolerance);
            if !c.passed {
                if let Some(w) = &c.worst {
                    let _ = writeln!(s, "     worst {} = {:.3e} at {}", w.component, w.value, format_point(&w.point));
                }
                if let Some(d) = &c.detail {
                    let _ = writeln!(s, "     {d}");
                }
                for e in &c.errors {
                    let _ = writeln!(s, "     point {} {}: {}", e.index, format_point(&e.point), e.message);
                }
            }
        }
        let _ = writeln!(s, "{}", if self.passed { "all checks passed" } else { "some checks failed" });
        s
    }
}

fn bound_name(b: Bound) -> &'static str {
    match b {
        Bound::AtMost => "at_most",
        Bound::AtLeast => "at_least",
    }
}

pub(crate) fn format_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}
