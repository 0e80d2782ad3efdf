// SPDX-License-Identifier: Apache-2.0

//! Pointwise numeric predicates: causal character, Ricci eigenvectors,
//! null frames and recurrence.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::SolitonInstance;
use crate::curvature::Curvature;
use crate::error::{Error, Result};
use crate::geometry::{metric_inverse, MetricField, Slot, TensorField};

/// Dead-band separating round-off from a genuine causal character.
pub const NULL_BAND: f64 = 1e-10;
/// Tolerance of the curvature annihilation and `∇V ∝ V` tests.
pub const WAVE_TOLERANCE: f64 = 1e-8;
pub const PARALLEL_TOLERANCE: f64 = 1e-8;
pub const RECURRENT_TOLERANCE: f64 = 1e-6;
pub const SIGMA_FLOOR: f64 = 1e-8;
pub const ZERO_TENSOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Timelike,
    Null,
    Spacelike,
    Zero,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

fn matrix(g: &MetricField, point: &[f64]) -> Result<DMatrix<f64>> {
    let d = g.dim();
    Ok(DMatrix::from_row_slice(d, d, &g.evaluate(point)?))
}

fn vector(t: &TensorField, point: &[f64]) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(t.evaluate(point)?))
}

/// Sign of `g(∇f, ∇f)` at `point`.
pub fn causal_character(inst: &SolitonInstance, point: &[f64]) -> Result<CausalCharacter> {
    let f = inst.require_function()?;
    let gm = matrix(inst.metric(), point)?;
    let v = vector(&inst.curvature().gradient(f), point)?;
    let band = inst.null_band();
    if max_abs(v.iter().copied()) < band {
        return Ok(CausalCharacter::Zero);
    }
    let q = v.dot(&(&gm * &v));
    Ok(if q.abs() < band {
        CausalCharacter::Null
    } else if q < 0.0 {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Spacelike
    })
}

/// Numeric data needed for the Ricci eigenvector test of one instance.
struct GradientData {
    g: MetricField,
    grad: TensorField,
    ricci: TensorField,
    lambda: f64,
    band: f64,
}

impl GradientData {
    fn new(inst: &SolitonInstance) -> Result<Self> {
        let f = inst.require_function()?;
        Ok(GradientData {
            g: inst.metric().clone(),
            grad: inst.curvature().gradient(f),
            ricci: inst.curvature().ricci().clone(),
            lambda: inst.lambda(),
            band: inst.null_band(),
        })
    }

    fn residual(&self, point: &[f64]) -> Result<f64> {
        let d = self.g.dim();
        let gm = matrix(&self.g, point)?;
        let v = vector(&self.grad, point)?;
        if max_abs(v.iter().copied()) < self.band {
            return Err(Error::ZeroGradient(point.to_vec()));
        }
        let rho = DMatrix::from_row_slice(d, d, &self.ricci.evaluate(point)?);
        let w = &gm * &v;
        let rho_v = &rho * &v;
        // Basis e_j − (w_j / w_k) e_k of ∇f^⊥, pivoting on the largest |w_k|.
        let k = w.iamax();
        let mut worst: f64 = 0.0;
        for j in (0..d).filter(|&j| j != k) {
            let r = rho_v[j] - w[j] / w[k] * rho_v[k];
            worst = worst.max(r.abs());
        }
        if v.dot(&w).abs() < self.band {
            let ric_v = metric_inverse(&self.g, point)? * &rho_v;
            worst = worst.max(max_abs((ric_v - self.lambda * &v).iter().copied()));
        }
        Ok(worst)
    }
}

/// Largest `|ρ(Y, ∇f)|` over a basis `Y` of `∇f^⊥` at `point`; at null
/// gradients also `|Ric(∇f) − λ∇f|`. Fails with `ZeroGradient` where `∇f = 0`.
pub fn ricci_eigenvector_residual(inst: &SolitonInstance, point: &[f64]) -> Result<f64> {
    GradientData::new(inst)?.residual(point)
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvectorReport {
    pub max_residual: f64,
    pub checked: usize,
    /// Indices of points where the gradient vanished.
    pub skipped: Vec<usize>,
}

pub fn ricci_eigenvector_check(inst: &SolitonInstance, points: &[Vec<f64>]) -> Result<EigenvectorReport> {
    let data = GradientData::new(inst)?;
    let mut report = EigenvectorReport {
        max_residual: 0.0,
        checked: 0,
        skipped: Vec::new(),
    };
    for (i, p) in points.iter().enumerate() {
        match data.residual(p) {
            Ok(r) => {
                report.max_residual = report.max_residual.max(r);
                report.checked += 1;
            }
            Err(Error::ZeroGradient(_)) => report.skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Pseudo-orthonormal frame adapted to a null vector `v`:
/// `g(u,v) = 1`, `g(u,u) = 0`, and `e` orthonormal spacelike, orthogonal to both.
#[derive(Debug, Clone)]
pub struct NullFrame {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub e: Vec<DVector<f64>>,
}

pub fn null_frame(gm: &DMatrix<f64>, v: &DVector<f64>, band: f64) -> Result<NullFrame> {
    let d = v.len();
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(gm * b));
    let gv = gm * v;
    let q = v.dot(&gv);
    if q.abs() >= band {
        return Err(Error::NotNull(q));
    }
    if max_abs(gv.iter().copied()) < band {
        return Err(Error::ZeroTensor);
    }
    let k = gv.iamax();
    let w = DVector::from_fn(d, |i, _| if i == k { 1.0 / gv[k] } else { 0.0 });
    let u = &w - 0.5 * ip(&w, &w) * v;
    let mut e: Vec<DVector<f64>> = Vec::with_capacity(d - 2);
    for j in (0..d).filter(|&j| j != k) {
        if e.len() == d - 2 {
            break;
        }
        let unit = DVector::from_fn(d, |i, _| if i == j { 1.0 } else { 0.0 });
        let scale = gm[(j, j)].abs().max(1.0);
        let mut x = &unit - ip(&unit, v) * &u - ip(&unit, &u) * v;
        for b in &e {
            x -= ip(&x, b) * b;
        }
        let n2 = ip(&x, &x);
        if n2 < -1e-8 * scale {
            return Err(Error::Parameter("metric is not Lorentzian on the null frame complement".into()));
        }
        if n2 > 1e-8 * scale {
            e.push(x / n2.sqrt());
        }
    }
    if e.len() != d - 2 {
        return Err(Error::Dimension("could not complete the null frame".into()));
    }
    Ok(NullFrame { u, v: v.clone(), e })
}

/// Pointwise outcome of the wave-structure test.
#[derive(Debug, Clone, Serialize)]
pub struct WaveStructurePoint {
    /// `max |R(A, B, ∂_c, ∂_d)|` over `A, B` in a basis of `V^⊥`.
    pub pr_residual: f64,
    /// `max |R(V, A, ∂_c, ∂_d)|` over `A` in a basis of `V^⊥`.
    pub axis_residual: f64,
    /// `max |∇_c V − σ_c V|`, relative to `max(1, max |∇V|)`.
    pub recurrence_residual: f64,
    /// `σ` evaluated on the null frame.
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub sigma_e: Vec<f64>,
    /// `ρ(U, U)` on the same frame.
    pub rho_uu: f64,
}

/// Precomputed fields for testing a null vector field against the pr-wave conditions.
pub struct WaveStructure {
    g: MetricField,
    v: TensorField,
    nabla_v: TensorField,
    riemann: TensorField,
    ricci: TensorField,
    band: f64,
}

impl WaveStructure {
    pub fn new(c: &Curvature, v: &TensorField) -> Result<Self> {
        if v.slots() != [Slot::Upper] {
            return Err(Error::Dimension("wave structure needs a vector field".into()));
        }
        Ok(WaveStructure {
            g: c.metric().clone(),
            v: v.clone(),
            nabla_v: c.covariant_derivative(v),
            riemann: c.riemann().clone(),
            ricci: c.ricci().clone(),
            band: NULL_BAND,
        })
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = band;
        self
    }

    pub fn at(&self, point: &[f64]) -> Result<WaveStructurePoint> {
        let d = self.g.dim();
        let gm = matrix(&self.g, point)?;
        let v = vector(&self.v, point)?;
        let frame = match null_frame(&gm, &v, self.band) {
            Err(Error::ZeroTensor) => return Err(Error::ZeroGradient(point.to_vec())),
            other => other?,
        };
        let r = self.riemann.evaluate(point)?;
        let rv = |a: &DVector<f64>, b: &DVector<f64>| {
            let mut m: f64 = 0.0;
            for c in 0..d {
                for e in 0..d {
                    let mut s = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            s += a[i] * b[j] * r[((i * d + j) * d + c) * d + e];
                        }
                    }
                    m = m.max(s.abs());
                }
            }
            m
        };
        let mut perp = vec![frame.v.clone()];
        perp.extend(frame.e.iter().cloned());
        let mut pr: f64 = 0.0;
        let mut axis: f64 = 0.0;
        for (i, a) in perp.iter().enumerate() {
            axis = axis.max(rv(&frame.v, a));
            for b in &perp[i + 1..] {
                pr = pr.max(rv(a, b));
            }
        }
        pr = pr.max(axis);

        // (∇_c V)^a at row c.
        let nv = DMatrix::from_row_slice(d, d, &self.nabla_v.evaluate(point)?);
        let vv = v.dot(&v);
        let sigma = DVector::from_fn(d, |c, _| nv.row(c).transpose().dot(&v) / vv);
        let mut rec: f64 = 0.0;
        for c in 0..d {
            for a in 0..d {
                rec = rec.max((nv[(c, a)] - sigma[c] * v[a]).abs());
            }
        }
        let scale = max_abs(nv.iter().copied()).max(1.0);
        let rho = DMatrix::from_row_slice(d, d, &self.ricci.evaluate(point)?);
        Ok(WaveStructurePoint {
            pr_residual: pr,
            axis_residual: axis,
            recurrence_residual: rec / scale,
            sigma_u: sigma.dot(&frame.u),
            sigma_v: sigma.dot(&frame.v),
            sigma_e: frame.e.iter().map(|e| sigma.dot(e)).collect(),
            rho_uu: frame.u.dot(&(&rho * &frame.u)),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveStructureReport {
    pub points: Vec<WaveStructurePoint>,
    pub max_pr: f64,
    pub max_axis: f64,
    pub max_recurrence: f64,
    /// Indices of points where `V` vanished.
    pub skipped: Vec<usize>,
    pub pr_wave: bool,
    pub recurrent: bool,
}

/// Tests `R(V^⊥, V^⊥, ·, ·) = 0`, `R(V, V^⊥, ·, ·) = 0` and `∇V = σ ⊗ V` at each
/// point where `V ≠ 0`.
pub fn wave_structure_check(c: &Curvature, v: &TensorField, points: &[Vec<f64>]) -> Result<WaveStructureReport> {
    let ws = WaveStructure::new(c, v)?;
    let mut pts = Vec::with_capacity(points.len());
    let mut skipped = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match ws.at(p) {
            Ok(w) => pts.push(w),
            Err(Error::ZeroGradient(_)) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    let max_pr = max_abs(pts.iter().map(|p| p.pr_residual));
    let max_axis = max_abs(pts.iter().map(|p| p.axis_residual));
    let max_recurrence = max_abs(pts.iter().map(|p| p.recurrence_residual));
    Ok(WaveStructureReport {
        points: pts,
        max_pr,
        max_axis,
        max_recurrence,
        skipped,
        pr_wave: max_pr < WAVE_TOLERANCE,
        recurrent: max_recurrence < WAVE_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecurrenceClass {
    Parallel,
    Recurrent,
    Neither,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrencePoint {
    pub tensor_max: f64,
    pub nabla_max: f64,
    /// Least-squares `σ`; absent where `T` vanishes.
    pub sigma: Option<Vec<f64>>,
    /// `max |∇T − σ ⊗ T| / max |∇T|`.
    pub relative_residual: f64,
}

/// `T` and `∇T` prepared for pointwise least-squares solves of `∇T = σ ⊗ T`.
pub struct Recurrence {
    t: TensorField,
    nabla: TensorField,
}

impl Recurrence {
    pub fn new(c: &Curvature, t: &TensorField) -> Self {
        Recurrence {
            t: t.clone(),
            nabla: c.covariant_derivative(t),
        }
    }

    pub fn nabla(&self) -> &TensorField {
        &self.nabla
    }

    pub fn at(&self, point: &[f64]) -> Result<RecurrencePoint> {
        let t = self.t.evaluate(point)?;
        let nt = self.nabla.evaluate(point)?;
        let m = t.len();
        let d = nt.len() / m.max(1);
        let tensor_max = max_abs(t.iter().copied());
        let nabla_max = max_abs(nt.iter().copied());
        if tensor_max < ZERO_TENSOR {
            let relative_residual = if nabla_max < PARALLEL_TOLERANCE { 0.0 } else { 1.0 };
            return Ok(RecurrencePoint {
                tensor_max,
                nabla_max,
                sigma: None,
                relative_residual,
            });
        }
        let tt: f64 = t.iter().map(|x| x * x).sum();
        let sigma: Vec<f64> = (0..d)
            .map(|c| (0..m).map(|i| nt[c * m + i] * t[i]).sum::<f64>() / tt)
            .collect();
        let mut res: f64 = 0.0;
        for c in 0..d {
            for i in 0..m {
                res = res.max((nt[c * m + i] - sigma[c] * t[i]).abs());
            }
        }
        let relative_residual = if nabla_max > 0.0 { res / nabla_max } else { 0.0 };
        Ok(RecurrencePoint {
            tensor_max,
            nabla_max,
            sigma: Some(sigma),
            relative_residual,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub class: RecurrenceClass,
    pub max_tensor: f64,
    pub max_nabla: f64,
    pub max_relative_residual: f64,
    pub points: Vec<RecurrencePoint>,
}

/// Classifies `T` as parallel, recurrent (`∇T = σ ⊗ T`, `σ ≠ 0`) or neither.
pub fn recurrence_check(c: &Curvature, t: &TensorField, points: &[Vec<f64>]) -> Result<RecurrenceReport> {
    let rec = Recurrence::new(c, t);
    let pts = points.iter().map(|p| rec.at(p)).collect::<Result<Vec<_>>>()?;
    let max_tensor = max_abs(pts.iter().map(|p| p.tensor_max));
    if max_tensor < ZERO_TENSOR {
        return Err(Error::ZeroTensor);
    }
    let max_nabla = max_abs(pts.iter().map(|p| p.nabla_max));
    let max_relative_residual = max_abs(pts.iter().map(|p| p.relative_residual));
    let sigma_seen = pts
        .iter()
        .filter_map(|p| p.sigma.as_ref())
        .any(|s| s.iter().any(|x| x.abs() > SIGMA_FLOOR));
    let class = if max_nabla < PARALLEL_TOLERANCE {
        RecurrenceClass::Parallel
    } else if max_relative_residual < RECURRENT_TOLERANCE && sigma_seen {
        RecurrenceClass::Recurrent
    } else {
        RecurrenceClass::Neither
    };
    Ok(RecurrenceReport {
        class,
        max_tensor,
        max_nabla,
        max_relative_residual,
        points: pts,
    })
}

