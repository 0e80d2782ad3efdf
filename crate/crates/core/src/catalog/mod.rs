// SPDX-License-Identifier: Apache-2.0

//! Registry of metric families with ready-to-verify soliton instances.

mod boxes;
mod families;
mod params;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::curvature::Curvature;
use crate::error::{Error, Result};
use crate::geometry::{Chart, MetricDescriptor, MetricField, TensorField};
use crate::jet::{ScalarField, Tape};
use crate::soliton::{
    codazzi_schouten_residual, curv_identity_residual, gradient_norm_squared, gradient_soliton_residual,
    lemma_identities, ricci_eigenvector_residual, ricci_soliton_residual, ricci_squared, trace_residual, Bound,
    Check, Measured, Potential, Probe, SolitonInstance, VerificationReport,
    run_checks, sample_points, SCHEMA_VERSION, WaveStructure, PARALLEL_TOLERANCE, WAVE_TOLERANCE,
};

pub use boxes::{avoid, check_clear, conformal_half_width, scan_singular, DEFAULT_INTERVAL, MARGIN};
pub use params::{ParamKind, ParamSpec, Params, Resolver, Shape};

/// Default tolerance of closed-form soliton residuals.
pub const SOLITON_TOLERANCE: f64 = 1e-8;
/// Tolerance when the potential or soliton field comes from a numerical ODE solve.
pub const ODE_TOLERANCE: f64 = 1e-6;
pub const WEYL_TOLERANCE: f64 = 1e-9;
pub const CODAZZI_TOLERANCE: f64 = 1e-8;
/// Lower bound used when a structure is expected to be genuinely present.
pub const PRESENCE_THRESHOLD: f64 = 1e-3;

/// Check groups accepted by `--checks`.
pub const CHECK_GROUPS: &[&str] = &[
    "soliton",
    "trace",
    "lemma",
    "eigenvector",
    "curv_identity",
    "weyl",
    "codazzi",
    "isotropic",
    "wave_structure",
    "recurrence",
    "two_symmetric",
    "conformally_symmetric",
    "closed_form",
    "completeness",
    "causal",
];

pub type Builder = fn(&mut Resolver, &BoxOverrides) -> Result<Instance>;

/// User-supplied sampling intervals by coordinate name.
pub type BoxOverrides = BTreeMap<String, (f64, f64)>;

pub struct Family {
    pub id: &'static str,
    pub summary: &'static str,
    /// The mathematical construction the family comes from.
    pub origin: &'static str,
    pub params: &'static [ParamSpec],
    builder: Builder,
}

#[derive(Serialize)]
pub struct FamilySchema {
    pub id: &'static str,
    pub summary: &'static str,
    pub origin: &'static str,
    pub params: &'static [ParamSpec],
}

impl Family {
    pub fn build(&self, params: &Params) -> Result<Instance> {
        self.build_with_boxes(params, &BoxOverrides::new())
    }

    pub fn build_with_boxes(&self, params: &Params, boxes: &BoxOverrides) -> Result<Instance> {
        let mut r = Resolver::new(self.id, self.params, params);
        let mut inst = (self.builder)(&mut r, boxes)?;
        inst.parameters = r.finish()?;
        for name in boxes.keys() {
            if inst.chart().index_of(name).is_none() {
                return Err(Error::Parameter(format!("{}: no coordinate named '{name}'", self.id)));
            }
        }
        Ok(inst)
    }

    pub fn schema(&self) -> FamilySchema {
        FamilySchema {
            id: self.id,
            summary: self.summary,
            origin: self.origin,
            params: self.params,
        }
    }

    pub fn signature(&self) -> String {
        let parts: Vec<String> = self.params.iter().map(ParamSpec::signature).collect();
        parts.join("; ")
    }
}

pub fn families() -> &'static [Family] {
    families::REGISTRY
}

pub fn family(id: &str) -> Result<&'static Family> {
    families()
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| Error::Parameter(format!("unknown family '{id}'")))
}

/// Builds a family instance from `key=value` parameters.
pub fn build(id: &str, params: &Params) -> Result<Instance> {
    family(id)?.build(params)
}

/// Which generic check groups apply to an instance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Traits {
    /// Locally conformally flat (`Some(true)`), known not to be (`Some(false)`),
    /// or no conformal checks wanted (`None`).
    pub lcf: Option<bool>,
    /// Steady with a null gradient on a metric carrying a parallel null field.
    pub isotropic: bool,
    /// The potential or soliton field came from a numerical ODE solve.
    pub ode_fed: bool,
}

/// A constructed family member: metric, optional soliton and its checks.
#[derive(Clone)]
pub struct Instance {
    family: &'static str,
    parameters: BTreeMap<String, String>,
    curvature: Arc<Curvature>,
    soliton: Option<SolitonInstance>,
    traits: Traits,
    extra: Vec<Check>,
}

impl Instance {
    fn new(family: &'static str, curvature: Arc<Curvature>, soliton: Option<SolitonInstance>, traits: Traits) -> Self {
        Instance {
            family,
            parameters: BTreeMap::new(),
            curvature,
            soliton,
            traits,
            extra: Vec::new(),
        }
    }

    fn with_checks(mut self, checks: Vec<Check>) -> Self {
        self.extra.extend(checks);
        self
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn parameters(&self) -> &BTreeMap<String, String> {
        &self.parameters
    }

    pub fn curvature(&self) -> &Arc<Curvature> {
        &self.curvature
    }

    pub fn metric(&self) -> &MetricField {
        self.curvature.metric()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric().chart()
    }

    pub fn soliton(&self) -> Option<&SolitonInstance> {
        self.soliton.as_ref()
    }

    pub fn traits(&self) -> Traits {
        self.traits
    }

    /// Replaces the soliton constant, keeping metric and potential.
    pub fn with_lambda(&self, lambda: f64) -> Result<Instance> {
        let s = self
            .soliton
            .as_ref()
            .ok_or_else(|| Error::Parameter(format!("{} has no soliton to rescale", self.family)))?;
        let mut out = self.clone();
        out.soliton = Some(s.with_lambda(lambda)?);
        Ok(out)
    }

    /// Fields that must evaluate at every sample point.
    pub fn sampling_fields(&self) -> Vec<ScalarField> {
        match self.soliton.as_ref().map(SolitonInstance::potential) {
            Some(Potential::Function(f)) => vec![f.clone()],
            Some(Potential::Vector(x)) => x.components().to_vec(),
            None => Vec::new(),
        }
    }

    /// Every applicable check, generic ones first.
    pub fn checks(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        if let Some(s) = &self.soliton {
            out.extend(soliton_checks(s, self.traits)?);
        }
        if let Some(lcf) = self.traits.lcf {
            out.extend(conformal_checks(&self.curvature, lcf)?);
        }
        if let Some(s) = self.soliton.as_ref().filter(|_| self.traits.isotropic) {
            if s.potential_function().is_some_and(|f| f.as_constant().is_none()) {
                out.extend(isotropic_checks(s)?);
            }
        }
        out.extend(self.extra.iter().cloned());
        Ok(out)
    }

    /// Samples `count` points with `seed` and runs `checks` on them.
    pub fn run(&self, checks: &[Check], count: usize, seed: u64) -> VerificationReport {
        let fields = self.sampling_fields();
        let refs: Vec<&ScalarField> = fields.iter().collect();
        let sample = sample_points(self.metric(), &refs, count, seed);
        let results = run_checks(checks, &sample.points);
        let passed = results.iter().all(|r| r.passed);
        let chart = self.chart();
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            family: self.family.to_string(),
            parameters: self.parameters.clone(),
            lambda: self.soliton.as_ref().map(SolitonInstance::lambda),
            kind: self.soliton.as_ref().map(SolitonInstance::kind),
            seed,
            requested_points: count,
            coordinates: chart.coordinates().to_vec(),
            sampling_box: chart.sampling_box().iter().map(|&(a, b)| [a, b]).collect(),
            rejected_points: sample.rejected,
            checks: results,
            passed,
            generated_at: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn descriptor(&self) -> Result<MetricDescriptor> {
        MetricDescriptor::from_metric(self.metric())
    }

    /// Metric descriptor plus parameters and potential.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let names = self.chart().coordinates().to_vec();
        let mut v = serde_json::json!({
            "family": self.family,
            "parameters": self.parameters,
            "metric": self.descriptor()?,
        });
        if let Some(s) = &self.soliton {
            v["lambda"] = serde_json::json!(s.lambda());
            match s.potential() {
                Potential::Function(f) => v["potential"] = serde_json::json!(f.display_with(&names).to_string()),
                Potential::Vector(x) => {
                    let comps: Vec<String> = x.components().iter().map(|c| c.display_with(&names).to_string()).collect();
                    v["soliton_vector"] = serde_json::json!(comps);
                }
            }
        }
        Ok(v)
    }
}

/// Pointwise probe reporting a list of labelled scalar fields.
pub fn scalars_probe(labels: Vec<String>, fields: Vec<ScalarField>) -> Probe {
    let tape = Tape::compile(&fields);
    Probe::Pointwise(Arc::new(move |p: &[f64]| {
        let vals = tape.evaluate(p)?;
        Ok(labels.iter().cloned().zip(vals).collect())
    }))
}

fn scalar_field(chart: &Arc<Chart>, f: ScalarField) -> TensorField {
    TensorField::scalar(Arc::clone(chart), f)
}

fn soliton_checks(s: &SolitonInstance, traits: Traits) -> Result<Vec<Check>> {
    let tol = if traits.ode_fed { ODE_TOLERANCE } else { SOLITON_TOLERANCE };
    let chart = s.chart();
    let Some(f) = s.potential_function() else {
        return Ok(vec![Check::at_most(
            "soliton",
            "max |1/2 L_X g + Ric - lambda g|",
            Probe::Field(ricci_soliton_residual(s)?),
            ODE_TOLERANCE,
        )]);
    };
    let lemma = lemma_identities(s)?;
    let mut out = vec![
        Check::at_most(
            "soliton",
            "max |Hes f + Ric - lambda g|",
            Probe::Field(gradient_soliton_residual(s)?),
            tol,
        ),
        Check::at_most(
            "trace",
            "max |Lap f + tau - dim lambda|",
            Probe::Field(scalar_field(chart, trace_residual(s)?)),
            tol,
        ),
        Check::at_most(
            "lemma.gradient",
            "max |grad tau - 2 Ric(grad f)|",
            Probe::Field(lemma.gradient),
            tol,
        ),
        Check::at_most(
            "lemma.conserved",
            "spread of tau + g(grad f, grad f) - 2 lambda f",
            Probe::Spread(lemma.conserved),
            tol,
        ),
    ];
    // A constant potential has no gradient direction to test.
    if f.as_constant().is_none() {
        let inst = s.clone();
        out.push(Check::pointwise(
            "eigenvector",
            "max |Ric(Y, grad f)| over Y orthogonal to grad f",
            tol,
            move |p: &[f64]| Ok(vec![("rho(Y,grad f)".into(), ricci_eigenvector_residual(&inst, p)?)]),
        ));
    }
    if traits.lcf == Some(true) {
        out.push(Check::at_most(
            "curv_identity",
            "R(X,Y,Z,grad f) against the Ricci contraction formula",
            Probe::Field(curv_identity_residual(s)?),
            tol,
        ));
    }
    Ok(out)
}

/// Weyl and Schouten-Codazzi checks. In dimension 3 the Weyl tensor always
/// vanishes and Codazzi decides conformal flatness; from dimension 4 on the
/// Weyl tensor decides it.
fn conformal_checks(c: &Curvature, lcf: bool) -> Result<Vec<Check>> {
    let d = c.metric().dim();
    let mut out = Vec::new();
    if d < 3 {
        return Ok(out);
    }
    let weyl = Probe::Field(c.weyl()?.clone());
    if lcf || d == 3 {
        out.push(Check::at_most("weyl", "max |W|", weyl, WEYL_TOLERANCE));
    } else {
        out.push(Check::at_least("weyl", "max |W|", weyl, PRESENCE_THRESHOLD));
    }
    let codazzi = Probe::Field(codazzi_schouten_residual(c)?);
    let desc = "max |(nabla_a C)_bc - (nabla_b C)_ac|";
    if lcf {
        out.push(Check::at_most("codazzi", desc, codazzi, CODAZZI_TOLERANCE));
    } else if d == 3 {
        out.push(Check::at_least("codazzi", desc, codazzi, PRESENCE_THRESHOLD));
    }
    Ok(out)
}

fn isotropic_checks(s: &SolitonInstance) -> Result<Vec<Check>> {
    let c = s.curvature();
    let chart = s.chart();
    let lambda = s.lambda();
    let mut out = vec![
        Check::global("isotropic.lambda", "|lambda|", Bound::AtMost, 0.0, move |_| {
            Ok(Measured {
                value: lambda.abs(),
                component: "lambda".into(),
                point: None,
                detail: None,
            })
        }),
        Check::at_most(
            "isotropic.tau",
            "max |tau|",
            Probe::Field(scalar_field(chart, c.scalar_curvature().clone())),
            1e-10,
        ),
        Check::at_most("isotropic.ric2", "max |Ric o Ric|", Probe::Field(ricci_squared(c)), 1e-8),
        Check::at_most(
            "isotropic.norm",
            "max |g(grad f, grad f)|",
            Probe::Field(scalar_field(chart, gradient_norm_squared(s)?)),
            1e-10,
        ),
    ];
    let ws = Arc::new(WaveStructure::new(c, &s.soliton_vector())?);
    let w = Arc::clone(&ws);
    out.push(Check::pointwise(
        "wave_structure.pr",
        "R(V^perp, V^perp, ., .) and R(V, V^perp, ., .) for V = grad f",
        WAVE_TOLERANCE,
        move |p: &[f64]| {
            let r = w.at(p)?;
            Ok(vec![("pr".into(), r.pr_residual), ("axis".into(), r.axis_residual)])
        },
    ));
    let w = Arc::clone(&ws);
    out.push(Check::pointwise(
        "wave_structure.recurrence",
        "relative |nabla V - sigma (x) V| for V = grad f",
        WAVE_TOLERANCE,
        move |p: &[f64]| Ok(vec![("nabla V".into(), w.at(p)?.recurrence_residual)]),
    ));
    out.push(Check::pointwise(
        "wave_structure.sigma",
        "sigma(U) + rho(U,U), sigma(V), sigma(E_i) on a null frame",
        1e-6,
        move |p: &[f64]| {
            let r = ws.at(p)?;
            let scale = r.rho_uu.abs().max(1.0);
            let mut vals = vec![
                ("sigma(U)+rho(U,U)".into(), (r.sigma_u + r.rho_uu) / scale),
                ("sigma(V)".into(), r.sigma_v / scale),
            ];
            vals.extend(r.sigma_e.iter().enumerate().map(|(i, s)| (format!("sigma(E{})", i + 1), s / scale)));
            Ok(vals)
        },
    ));
    Ok(out)
}

/// `max |∇T|` as a field check.
fn parallel_check(name: &str, description: &str, c: &Curvature, t: &TensorField) -> Check {
    Check::at_most(name, description, Probe::Field(c.covariant_derivative(t)), PARALLEL_TOLERANCE)
}
