// SPDX-License-Identifier: Apache-2.0

//! Charts, metric fields and dense tensor fields.
//!
//! All components are symbolic [`ScalarField`]s. Numeric values come from
//! evaluating a tensor at a point through its cached [`Tape`].

mod descriptor;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{DomainError, ScalarField, Tape};

pub use descriptor::MetricDescriptor;

/// Coordinate system with a default sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coordinates: Vec<String>,
    sampling_box: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(coordinates: Vec<String>, sampling_box: Vec<(f64, f64)>) -> Result<Arc<Chart>> {
        if coordinates.len() < 2 {
            return Err(Error::Dimension(format!(
                "chart needs at least 2 coordinates, got {}",
                coordinates.len()
            )));
        }
        if coordinates.len() > crate::jet::MAX_COORDINATES {
            return Err(Error::Dimension("too many coordinates".into()));
        }
        for (i, c) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(c) {
                return Err(Error::Dimension(format!("duplicate coordinate name '{c}'")));
            }
        }
        if sampling_box.len() != coordinates.len() {
            return Err(Error::Dimension("sampling box does not match chart dimension".into()));
        }
        if sampling_box.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::Parameter("sampling box interval must satisfy lo <= hi".into()));
        }
        Ok(Arc::new(Chart {
            coordinates,
            sampling_box,
        }))
    }

    /// Chart with the given names and the same interval on every axis.
    pub fn uniform(coordinates: &[&str], interval: (f64, f64)) -> Result<Arc<Chart>> {
        let names = coordinates.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let n = names.len();
        Chart::new(names, vec![interval; n])
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    /// `dim - 2`, the integer written as `n` in the soliton formulas.
    pub fn n(&self) -> usize {
        self.dim() - 2
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn sampling_box(&self) -> &[(f64, f64)] {
        &self.sampling_box
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coordinates.iter().position(|c| c == name)
    }

    pub fn coordinate(&self, name: &str) -> Result<ScalarField> {
        self.index_of(name)
            .map(ScalarField::coordinate)
            .ok_or_else(|| Error::Parameter(format!("unknown coordinate '{name}'")))
    }

    pub fn parse(&self, src: &str) -> Result<ScalarField> {
        Ok(crate::jet::parse(src, &self.coordinates)?)
    }

    pub fn with_box(&self, sampling_box: Vec<(f64, f64)>) -> Result<Arc<Chart>> {
        Chart::new(self.coordinates.clone(), sampling_box)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Riemannian,
    Lorentzian,
}

impl Signature {
    pub fn negative_count(self) -> usize {
        match self {
            Signature::Riemannian => 0,
            Signature::Lorentzian => 1,
        }
    }
}

/// Symmetric metric tensor field `g_ab`.
#[derive(Debug, Clone)]
pub struct MetricField {
    chart: Arc<Chart>,
    components: Vec<ScalarField>,
    signature: Signature,
    inverse: OnceLock<Vec<ScalarField>>,
    tape: OnceLock<Tape>,
}

impl MetricField {
    /// `components` is the full `dim x dim` matrix in row-major order and must
    /// be structurally symmetric.
    pub fn new(chart: Arc<Chart>, components: Vec<ScalarField>, signature: Signature) -> Result<Self> {
        let d = chart.dim();
        if components.len() != d * d {
            return Err(Error::Dimension(format!(
                "metric needs {} components, got {}",
                d * d,
                components.len()
            )));
        }
        for a in 0..d {
            for b in 0..a {
                if components[a * d + b] != components[b * d + a] {
                    return Err(Error::Parameter(format!("metric component ({a},{b}) is not symmetric")));
                }
            }
        }
        for c in &components {
            if c.min_dimension() > d {
                return Err(Error::Dimension("metric component references coordinate outside chart".into()));
            }
        }
        Ok(MetricField {
            chart,
            components,
            signature,
            inverse: OnceLock::new(),
            tape: OnceLock::new(),
        })
    }

    /// Builds from the upper triangle `entry(a, b)` with `a <= b`.
    pub fn from_fn(
        chart: Arc<Chart>,
        signature: Signature,
        mut entry: impl FnMut(usize, usize) -> ScalarField,
    ) -> Result<Self> {
        let d = chart.dim();
        let mut comps = vec![ScalarField::zero(); d * d];
        for a in 0..d {
            for b in a..d {
                let e = entry(a, b);
                comps[a * d + b] = e.clone();
                comps[b * d + a] = e;
            }
        }
        MetricField::new(chart, comps, signature)
    }

    pub fn diagonal(chart: Arc<Chart>, signature: Signature, diag: Vec<ScalarField>) -> Result<Self> {
        if diag.len() != chart.dim() {
            return Err(Error::Dimension("diagonal length does not match chart".into()));
        }
        MetricField::from_fn(chart, signature, |a, b| {
            if a == b {
                diag[a].clone()
            } else {
                ScalarField::zero()
            }
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn get(&self, a: usize, b: usize) -> &ScalarField {
        &self.components[a * self.dim() + b]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn as_tensor(&self) -> TensorField {
        TensorField::new(
            Arc::clone(&self.chart),
            vec![Slot::Lower, Slot::Lower],
            self.components.clone(),
        )
        .expect("metric has dim^2 components")
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|a| (0..d).all(|b| a == b || self.get(a, b).is_zero()))
    }

    /// Numeric components at `point`, row-major.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>, DomainError> {
        self.tape
            .get_or_init(|| Tape::compile(&self.components))
            .evaluate(point)
    }

    /// Symbolic determinant.
    pub fn determinant(&self) -> ScalarField {
        let d = self.dim();
        let all = (1u64 << d) - 1;
        Minors::new(self).det(all, all)
    }

    /// Symbolic inverse `g^ab`, computed once via the adjugate.
    pub fn inverse(&self) -> &[ScalarField] {
        self.inverse.get_or_init(|| self.compute_inverse())
    }

    pub fn inverse_get(&self, a: usize, b: usize) -> &ScalarField {
        &self.inverse()[a * self.dim() + b]
    }

    pub fn inverse_tensor(&self) -> TensorField {
        TensorField::new(
            Arc::clone(&self.chart),
            vec![Slot::Upper, Slot::Upper],
            self.inverse().to_vec(),
        )
        .expect("inverse has dim^2 components")
    }

    fn compute_inverse(&self) -> Vec<ScalarField> {
        let d = self.dim();
        if self.is_diagonal() {
            let mut inv = vec![ScalarField::zero(); d * d];
            for a in 0..d {
                inv[a * d + a] = 1.0 / self.get(a, a);
            }
            return inv;
        }
        let all = (1u64 << d) - 1;
        let mut minors = Minors::new(self);
        let det = minors.det(all, all);
        let mut inv = vec![ScalarField::zero(); d * d];
        for a in 0..d {
            for b in a..d {
                // g^{ab} = (-1)^{a+b} M_{ba} / det, with M_{ba} dropping row b and column a.
                let m = minors.det(all & !(1 << b), all & !(1 << a));
                let cof = if (a + b) % 2 == 0 { m } else { -m };
                let e = cof / &det;
                inv[a * d + b] = e.clone();
                inv[b * d + a] = e;
            }
        }
        inv
    }

    /// Checks symmetry, nondegeneracy and signature at `point`.
    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        let d = self.dim();
        let v = self.evaluate(point)?;
        let m = DMatrix::from_row_slice(d, d, &v);
        for a in 0..d {
            for b in 0..a {
                if (m[(a, b)] - m[(b, a)]).abs() > 1e-12 {
                    return Err(Error::Parameter(format!("metric not symmetric at {point:?}")));
                }
            }
        }
        let det = m.clone().determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::DegenerateMetric {
                det,
                point: point.to_vec(),
            });
        }
        let eig = nalgebra::SymmetricEigen::new(m);
        let negatives = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
        if negatives != self.signature.negative_count() {
            return Err(Error::Parameter(format!(
                "metric has {negatives} negative eigenvalues at {point:?}, expected {}",
                self.signature.negative_count()
            )));
        }
        Ok(())
    }
}

/// Numeric inverse of the metric at `point`.
pub fn metric_inverse(g: &MetricField, point: &[f64]) -> Result<DMatrix<f64>> {
    let d = g.dim();
    let m = DMatrix::from_row_slice(d, d, &g.evaluate(point)?);
    let det = m.clone().determinant();
    if !(det.abs() > 1e-12) {
        return Err(Error::DegenerateMetric {
            det,
            point: point.to_vec(),
        });
    }
    m.try_inverse().ok_or(Error::DegenerateMetric {
        det,
        point: point.to_vec(),
    })
}

/// Memoized Laplace expansion over row/column subsets.
struct Minors<'a> {
    g: &'a MetricField,
    memo: HashMap<(u64, u64), ScalarField>,
}

impl<'a> Minors<'a> {
    fn new(g: &'a MetricField) -> Self {
        Minors {
            g,
            memo: HashMap::new(),
        }
    }

    fn det(&mut self, rows: u64, cols: u64) -> ScalarField {
        if rows == 0 {
            return ScalarField::one();
        }
        if let Some(v) = self.memo.get(&(rows, cols)) {
            return v.clone();
        }
        let r = rows.trailing_zeros() as usize;
        let mut terms = Vec::new();
        let mut position = 0;
        for c in 0..self.g.dim() {
            if cols & (1 << c) == 0 {
                continue;
            }
            let entry = self.g.get(r, c);
            if !entry.is_zero() {
                let sub = self.det(rows & !(1 << r), cols & !(1 << c));
                let term = entry * sub;
                terms.push(if position % 2 == 0 { term } else { -term });
            }
            position += 1;
        }
        let v = ScalarField::sum(terms);
        self.memo.insert((rows, cols), v.clone());
        v
    }
}

/// Position of a tensor index: covariant (lower) or contravariant (upper).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Lower,
    Upper,
}

/// Dense tensor field with `dim^rank` symbolic components in row-major order.
#[derive(Debug, Clone)]
pub struct TensorField {
    chart: Arc<Chart>,
    slots: Vec<Slot>,
    components: Vec<ScalarField>,
    tape: OnceLock<Tape>,
}

impl TensorField {
    pub fn new(chart: Arc<Chart>, slots: Vec<Slot>, components: Vec<ScalarField>) -> Result<Self> {
        let expected = chart.dim().pow(slots.len() as u32);
        if components.len() != expected {
            return Err(Error::Dimension(format!(
                "tensor of rank {} needs {expected} components, got {}",
                slots.len(),
                components.len()
            )));
        }
        Ok(TensorField {
            chart,
            slots,
            components,
            tape: OnceLock::new(),
        })
    }

    pub fn from_fn(chart: Arc<Chart>, slots: Vec<Slot>, mut f: impl FnMut(&[usize]) -> ScalarField) -> Self {
        let d = chart.dim();
        let rank = slots.len();
        let count = d.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut components = Vec::with_capacity(count);
        for flat in 0..count {
            unflatten(flat, d, &mut idx);
            components.push(f(&idx));
        }
        TensorField {
            chart,
            slots,
            components,
            tape: OnceLock::new(),
        }
    }

    pub fn scalar(chart: Arc<Chart>, f: ScalarField) -> Self {
        TensorField::from_fn(chart, vec![], |_| f.clone())
    }

    pub fn vector(chart: Arc<Chart>, components: Vec<ScalarField>) -> Result<Self> {
        TensorField::new(chart, vec![Slot::Upper], components)
    }

    pub fn covector(chart: Arc<Chart>, components: Vec<ScalarField>) -> Result<Self> {
        TensorField::new(chart, vec![Slot::Lower], components)
    }

    pub fn zeros(chart: Arc<Chart>, slots: Vec<Slot>) -> Self {
        TensorField::from_fn(chart, slots, |_| ScalarField::zero())
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim() + i)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        unflatten(flat, self.dim(), &mut idx);
        idx
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarField {
        &self.components[self.flat_index(idx)]
    }

    /// Human-readable component label such as `uiuj` or `(u,x1,u,x2)`.
    pub fn label(&self, flat: usize) -> String {
        let names = self.chart.coordinates();
        let idx = self.multi_index(flat);
        let parts: Vec<&str> = idx.iter().map(|&i| names[i].as_str()).collect();
        format!("({})", parts.join(","))
    }

    pub fn tape(&self) -> &Tape {
        self.tape.get_or_init(|| Tape::compile(&self.components))
    }

    /// All components at `point`, row-major.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>, DomainError> {
        self.tape().evaluate(point)
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> TensorField {
        TensorField::new(
            Arc::clone(&self.chart),
            self.slots.clone(),
            self.components.iter().map(f).collect(),
        )
        .unwrap()
    }

    fn zip(&self, other: &TensorField, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Result<TensorField> {
        if self.slots != other.slots || self.dim() != other.dim() {
            return Err(Error::Dimension("tensor shapes differ".into()));
        }
        TensorField::new(
            Arc::clone(&self.chart),
            self.slots.clone(),
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> TensorField {
        let k = ScalarField::constant(c);
        self.map(|a| &k * a)
    }

    pub fn scale_by(&self, f: &ScalarField) -> TensorField {
        self.map(|a| f * a)
    }

    /// Outer product `self ⊗ other`, slots of `self` first.
    pub fn tensor_product(&self, other: &TensorField) -> TensorField {
        let n = other.components.len();
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut components = Vec::with_capacity(self.components.len() * n);
        for a in &self.components {
            for b in &other.components {
                components.push(a * b);
            }
        }
        TensorField::new(Arc::clone(&self.chart), slots, components).unwrap()
    }

    /// Swaps two slots.
    pub fn transpose(&self, s: usize, t: usize) -> TensorField {
        let mut slots = self.slots.clone();
        slots.swap(s, t);
        TensorField::from_fn(Arc::clone(&self.chart), slots, |idx| {
            let mut src = idx.to_vec();
            src.swap(s, t);
            self.get(&src).clone()
        })
    }
}

fn unflatten(mut flat: usize, d: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
}

fn check_slot(t: &TensorField, slot: usize, want: Slot) -> Result<()> {
    match t.slots.get(slot) {
        Some(s) if *s == want => Ok(()),
        Some(_) => Err(Error::Dimension(format!("slot {slot} is not {want:?}"))),
        None => Err(Error::Dimension(format!("slot {slot} out of range for rank {}", t.rank()))),
    }
}

fn musical(t: &TensorField, slot: usize, matrix: &[ScalarField], new: Slot) -> TensorField {
    let d = t.dim();
    let mut slots = t.slots.clone();
    slots[slot] = new;
    TensorField::from_fn(Arc::clone(&t.chart), slots, |idx| {
        let mut src = idx.to_vec();
        let a = idx[slot];
        ScalarField::sum((0..d).map(|b| {
            src[slot] = b;
            &matrix[a * d + b] * t.get(&src)
        }))
    })
}

/// Raises a covariant slot with `g^ab`.
pub fn raise_index(t: &TensorField, g: &MetricField, slot: usize) -> Result<TensorField> {
    check_slot(t, slot, Slot::Lower)?;
    Ok(musical(t, slot, g.inverse(), Slot::Upper))
}

/// Lowers a contravariant slot with `g_ab`.
pub fn lower_index(t: &TensorField, g: &MetricField, slot: usize) -> Result<TensorField> {
    check_slot(t, slot, Slot::Upper)?;
    Ok(musical(t, slot, g.components(), Slot::Lower))
}

/// `(A ⊙ B)(x,y,z,w) = A(x,z)B(y,w) + A(y,w)B(x,z) - A(x,w)B(y,z) - A(y,z)B(x,w)`.
pub fn kulkarni_nomizu(a: &TensorField, b: &TensorField) -> Result<TensorField> {
    for t in [a, b] {
        if t.slots != [Slot::Lower, Slot::Lower] {
            return Err(Error::Dimension("Kulkarni-Nomizu product needs covariant 2-tensors".into()));
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::Dimension("tensor dimensions differ".into()));
    }
    let slots = vec![Slot::Lower; 4];
    Ok(TensorField::from_fn(Arc::clone(&a.chart), slots, |i| {
        let (x, y, z, w) = (i[0], i[1], i[2], i[3]);
        let pos = a.get(&[x, z]) * b.get(&[y, w]) + a.get(&[y, w]) * b.get(&[x, z]);
        let negs = a.get(&[x, w]) * b.get(&[y, z]) + a.get(&[y, z]) * b.get(&[x, w]);
        pos - negs
    }))
}

#[cfg(test)]
mod tests;
