// SPDX-License-Identifier: Apache-2.0

//! Soliton instances, their residual fields and structural predicates.

mod frame;
mod report;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::Curvature;
use crate::error::{Error, Result};
use crate::geometry::{raise_index, Chart, MetricField, Slot, TensorField};
use crate::jet::ScalarField;

pub use frame::{
    causal_character, null_frame, recurrence_check, ricci_eigenvector_check, ricci_eigenvector_residual,
    wave_structure_check, CausalCharacter, EigenvectorReport, NullFrame, Recurrence, RecurrenceClass,
    RecurrencePoint, RecurrenceReport, WaveStructure, WaveStructurePoint, WaveStructureReport, NULL_BAND,
    PARALLEL_TOLERANCE, RECURRENT_TOLERANCE, SIGMA_FLOOR, WAVE_TOLERANCE, ZERO_TENSOR,
};
pub use report::{
    run_check, run_checks, sample_points, Bound, Check, CheckResult, Measured, PointError, PointProbe, Probe,
    Sample, VerificationReport, Worst, MAX_RESAMPLES, SCHEMA_VERSION,
};

/// Shrinking, steady or expanding by the sign of λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonKind {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonKind {
    pub fn of(lambda: f64) -> SolitonKind {
        if lambda > 0.0 {
            SolitonKind::Shrinking
        } else if lambda < 0.0 {
            SolitonKind::Expanding
        } else {
            SolitonKind::Steady
        }
    }
}

/// Potential function for the gradient case, or a vector field otherwise.
#[derive(Debug, Clone)]
pub enum Potential {
    Function(ScalarField),
    Vector(TensorField),
}

/// A metric together with a soliton potential and constant.
#[derive(Clone)]
pub struct SolitonInstance {
    curvature: Arc<Curvature>,
    potential: Potential,
    lambda: f64,
    null_band: f64,
}

impl SolitonInstance {
    pub fn gradient(curvature: Arc<Curvature>, f: ScalarField, lambda: f64) -> Result<Self> {
        if f.min_dimension() > curvature.metric().dim() {
            return Err(Error::Dimension("potential uses coordinates outside the chart".into()));
        }
        Self::build(curvature, Potential::Function(f), lambda)
    }

    pub fn vector(curvature: Arc<Curvature>, x: TensorField, lambda: f64) -> Result<Self> {
        if x.slots() != [Slot::Upper] || x.dim() != curvature.metric().dim() {
            return Err(Error::Dimension("soliton field must be a vector field on the chart".into()));
        }
        Self::build(curvature, Potential::Vector(x), lambda)
    }

    fn build(curvature: Arc<Curvature>, potential: Potential, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Parameter(format!("soliton constant must be finite, got {lambda}")));
        }
        Ok(SolitonInstance {
            curvature,
            potential,
            lambda,
            null_band: NULL_BAND,
        })
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

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kind(&self) -> SolitonKind {
        SolitonKind::of(self.lambda)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn potential_function(&self) -> Option<&ScalarField> {
        match &self.potential {
            Potential::Function(f) => Some(f),
            Potential::Vector(_) => None,
        }
    }

    fn require_function(&self) -> Result<&ScalarField> {
        self.potential_function()
            .ok_or_else(|| Error::Parameter("instance has a soliton vector field, not a potential".into()))
    }

    pub fn null_band(&self) -> f64 {
        self.null_band
    }

    pub fn with_null_band(mut self, band: f64) -> Self {
        self.null_band = band;
        self
    }

    /// Same metric and potential with another soliton constant.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::build(Arc::clone(&self.curvature), self.potential.clone(), lambda)
            .map(|s| s.with_null_band(self.null_band))
    }

    /// `X`, or `∇f` in the gradient case.
    pub fn soliton_vector(&self) -> TensorField {
        match &self.potential {
            Potential::Function(f) => self.curvature.gradient(f),
            Potential::Vector(x) => x.clone(),
        }
    }

    /// The same soliton described by the vector field `∇f`.
    pub fn as_vector_instance(&self) -> Result<Self> {
        Self::vector(Arc::clone(&self.curvature), self.soliton_vector(), self.lambda)
    }
}

/// `Hes_f + ρ − λg`.
pub fn gradient_soliton_residual(inst: &SolitonInstance) -> Result<TensorField> {
    let f = inst.require_function()?;
    let c = inst.curvature();
    let lhs = c.hessian(f).add(c.ricci())?;
    lhs.sub(&inst.metric().as_tensor().scale(inst.lambda))
}

/// `½ L_X g + ρ − λg`, with `X = ∇f` for gradient instances.
pub fn ricci_soliton_residual(inst: &SolitonInstance) -> Result<TensorField> {
    let c = inst.curvature();
    let lie = c.lie_derivative_metric(&inst.soliton_vector())?;
    lie.scale(0.5).add(c.ricci())?.sub(&inst.metric().as_tensor().scale(inst.lambda))
}

/// `Δf + τ − dim·λ`, the trace of the gradient soliton equation.
pub fn trace_residual(inst: &SolitonInstance) -> Result<ScalarField> {
    let f = inst.require_function()?;
    let c = inst.curvature();
    let d = inst.metric().dim() as f64;
    Ok(c.laplacian(f) + c.scalar_curvature() - d * inst.lambda)
}

/// `g(∇f, ∇f)`.
pub fn gradient_norm_squared(inst: &SolitonInstance) -> Result<ScalarField> {
    let f = inst.require_function()?;
    let c = inst.curvature();
    let grad = c.gradient(f);
    let d = inst.metric().dim();
    Ok(ScalarField::sum((0..d).map(|a| c.partial(f, a) * grad.get(&[a]))))
}

/// Residual fields of the two first-order consequences of a gradient soliton.
pub struct LemmaIdentities {
    /// `∇τ − 2 Ric(∇f)` as a vector field.
    pub gradient: TensorField,
    /// `τ + g(∇f,∇f) − 2λf`, constant on a soliton.
    pub conserved: ScalarField,
}

pub fn lemma_identities(inst: &SolitonInstance) -> Result<LemmaIdentities> {
    let f = inst.require_function()?;
    let c = inst.curvature();
    let g = inst.metric();
    let d = g.dim();
    let tau = c.scalar_curvature();
    let grad_f = c.gradient(f);
    let rho = c.ricci();
    let ric_grad = TensorField::from_fn(Arc::clone(g.chart()), vec![Slot::Lower], |i| {
        ScalarField::sum((0..d).map(|b| rho.get(&[i[0], b]) * grad_f.get(&[b])))
    });
    let ric_grad = raise_index(&ric_grad, g, 0)?;
    let gradient = c.gradient(tau).sub(&ric_grad.scale(2.0))?;
    let conserved = tau + gradient_norm_squared(inst)? - 2.0 * inst.lambda * f;
    Ok(LemmaIdentities { gradient, conserved })
}

/// `R(X,Y,Z,∇f) + k ρ(X,∇f) g(Y,Z) − k ρ(Y,∇f) g(X,Z)` with `k = 1/(dim − 1)`,
/// indexed by `(X, Y, Z)`; vanishes on locally conformally flat gradient solitons.
pub fn curv_identity_residual(inst: &SolitonInstance) -> Result<TensorField> {
    let f = inst.require_function()?;
    let c = inst.curvature();
    let g = inst.metric();
    let d = g.dim();
    let grad_f = c.gradient(f);
    let r = c.riemann();
    let rho = c.ricci();
    let rho_grad: Vec<ScalarField> = (0..d)
        .map(|x| ScalarField::sum((0..d).map(|a| rho.get(&[x, a]) * grad_f.get(&[a]))))
        .collect();
    let k = 1.0 / (d as f64 - 1.0);
    Ok(TensorField::from_fn(Arc::clone(g.chart()), vec![Slot::Lower; 3], |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        let mut terms: Vec<ScalarField> = (0..d).map(|a| r.get(&[x, y, z, a]) * grad_f.get(&[a])).collect();
        terms.push(k * &rho_grad[x] * g.get(y, z));
        terms.push(-k * &rho_grad[y] * g.get(x, z));
        ScalarField::sum(terms)
    }))
}

/// `(∇_a C)_bc − (∇_b C)_ac` for the Schouten tensor `C`.
pub fn codazzi_schouten_residual(c: &Curvature) -> Result<TensorField> {
    if c.metric().dim() < 3 {
        return Err(Error::Dimension("Codazzi test needs dimension at least 3".into()));
    }
    let nc = c.covariant_derivative(c.schouten()?);
    nc.sub(&nc.transpose(0, 1))
}

/// `ρ_ac g^cd ρ_db`, the lowered square of the Ricci operator.
pub fn ricci_squared(c: &Curvature) -> TensorField {
    let g = c.metric();
    let d = g.dim();
    let rho = c.ricci();
    let ginv = g.inverse();
    TensorField::from_fn(Arc::clone(g.chart()), vec![Slot::Lower; 2], |i| {
        ScalarField::sum(
            (0..d)
                .flat_map(|p| (0..d).map(move |q| (p, q)))
                .map(|(p, q)| rho.get(&[i[0], p]) * &ginv[p * d + q] * rho.get(&[q, i[1]])),
        )
    })
}

#[cfg(test)]
mod tests;
