// SPDX-License-Identifier: Apache-2.0

//! Levi-Civita connection and curvature of a [`MetricField`].
//!
//! Conventions:
//! - `Γ^k_ij` is stored at index `(k, i, j)`.
//! - `R_abcd = g(R(∂_a, ∂_b)∂_d, ∂_c)` with `R(X, Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`,
//!   so a round sphere has `R_abab > 0`.
//! - `ρ_bd = g^ac R_abcd` and `τ = g^bd ρ_bd`.
//! - `∇T` puts the differentiating slot first: `(∇T)_{c a1 … ar} = (∇_c T)_{a1 … ar}`.

use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::{kulkarni_nomizu, MetricField, Slot, TensorField};
use crate::jet::{Differentiator, ScalarField};

/// Caches every curvature quantity of one metric.
pub struct Curvature {
    g: MetricField,
    diff: Mutex<Differentiator>,
    metric_partials: OnceLock<Vec<ScalarField>>,
    christoffel: OnceLock<TensorField>,
    riemann: OnceLock<TensorField>,
    ricci: OnceLock<TensorField>,
    scalar: OnceLock<ScalarField>,
    schouten: OnceLock<TensorField>,
    weyl: OnceLock<TensorField>,
}

impl Curvature {
    pub fn new(g: MetricField) -> Self {
        Curvature {
            g,
            diff: Mutex::new(Differentiator::new()),
            metric_partials: OnceLock::new(),
            christoffel: OnceLock::new(),
            riemann: OnceLock::new(),
            ricci: OnceLock::new(),
            scalar: OnceLock::new(),
            schouten: OnceLock::new(),
            weyl: OnceLock::new(),
        }
    }

    pub fn metric(&self) -> &MetricField {
        &self.g
    }

    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn slots(&self, rank: usize) -> Vec<Slot> {
        vec![Slot::Lower; rank]
    }

    fn chart(&self) -> Arc<crate::geometry::Chart> {
        Arc::clone(self.g.chart())
    }

    /// Exact partial derivative sharing the engine's derivative cache.
    pub fn partial(&self, f: &ScalarField, coordinate: usize) -> ScalarField {
        self.diff.lock().unwrap().partial(f, coordinate)
    }

    /// `∂_c g_ab` at flat index `(c * d + a) * d + b`.
    fn dg(&self) -> &[ScalarField] {
        self.metric_partials.get_or_init(|| {
            let d = self.dim();
            let mut diff = self.diff.lock().unwrap();
            let mut out = Vec::with_capacity(d * d * d);
            for c in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        out.push(diff.partial(self.g.get(a, b), c));
                    }
                }
            }
            out
        })
    }

    /// `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
    pub fn christoffel(&self) -> &TensorField {
        self.christoffel.get_or_init(|| {
            let d = self.dim();
            let dg = self.dg();
            let at = |c: usize, a: usize, b: usize| &dg[(c * d + a) * d + b];
            let mut first = Vec::with_capacity(d * d * d);
            for l in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let s = ScalarField::sum([at(i, j, l).clone(), at(j, i, l).clone(), -at(l, i, j)]);
                        first.push(0.5 * s);
                    }
                }
            }
            let ginv = self.g.inverse();
            TensorField::from_fn(self.chart(), vec![Slot::Upper, Slot::Lower, Slot::Lower], |idx| {
                let (k, i, j) = (idx[0], idx[1], idx[2]);
                // Same expression for (i, j) and (j, i), so Γ is symmetric structurally.
                let (i, j) = (i.min(j), i.max(j));
                ScalarField::sum((0..d).map(|l| &ginv[k * d + l] * &first[(l * d + i) * d + j]))
            })
        })
    }

    fn gamma(&self, k: usize, i: usize, j: usize) -> &ScalarField {
        let d = self.dim();
        &self.christoffel().components()[(k * d + i) * d + j]
    }

    /// Fully covariant Riemann tensor `R_abcd`.
    pub fn riemann(&self) -> &TensorField {
        self.riemann.get_or_init(|| {
            let d = self.dim();
            self.christoffel();
            let mut comps = vec![ScalarField::zero(); d.pow(4)];
            let flat = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
            let mut diff = self.diff.lock().unwrap();
            for a in 0..d {
                for b in a + 1..d {
                    // R^e_{dab} for fixed (a, b)
                    let mut mixed = vec![ScalarField::zero(); d * d];
                    for e in 0..d {
                        for dd in 0..d {
                            let mut terms = vec![
                                diff.partial(self.gamma(e, b, dd), a),
                                -diff.partial(self.gamma(e, a, dd), b),
                            ];
                            for m in 0..d {
                                terms.push(self.gamma(e, a, m) * self.gamma(m, b, dd));
                                terms.push(-(self.gamma(e, b, m) * self.gamma(m, a, dd)));
                            }
                            mixed[e * d + dd] = ScalarField::sum(terms);
                        }
                    }
                    for c in 0..d {
                        for dd in 0..d {
                            let r = ScalarField::sum((0..d).map(|e| self.g.get(c, e) * &mixed[e * d + dd]));
                            comps[flat(b, a, c, dd)] = -&r;
                            comps[flat(a, b, c, dd)] = r;
                        }
                    }
                }
            }
            TensorField::new(self.chart(), self.slots(4), comps).unwrap()
        })
    }

    /// Ricci tensor `ρ_bd = g^ac R_abcd`.
    pub fn ricci(&self) -> &TensorField {
        self.ricci.get_or_init(|| {
            let d = self.dim();
            let r = self.riemann();
            let ginv = self.g.inverse();
            TensorField::from_fn(self.chart(), self.slots(2), |idx| {
                let (b, dd) = (idx[0], idx[1]);
                ScalarField::sum(
                    (0..d).flat_map(|a| (0..d).map(move |c| (a, c))).map(|(a, c)| &ginv[a * d + c] * r.get(&[a, b, c, dd])),
                )
            })
        })
    }

    /// Scalar curvature `τ`.
    pub fn scalar_curvature(&self) -> &ScalarField {
        self.scalar.get_or_init(|| self.trace(self.ricci()))
    }

    /// `g^ab T_ab` for a covariant 2-tensor.
    pub fn trace(&self, t: &TensorField) -> ScalarField {
        let d = self.dim();
        let ginv = self.g.inverse();
        ScalarField::sum((0..d * d).map(|k| &ginv[k] * &t.components()[k]))
    }

    fn n(&self) -> Result<usize> {
        match self.g.chart().n() {
            0 => Err(Error::Dimension("Schouten and Weyl tensors need dimension at least 3".into())),
            n => Ok(n),
        }
    }

    /// Schouten tensor `C = (ρ − τ/(2(n+1)) g) / n` with `n = dim − 2`.
    pub fn schouten(&self) -> Result<&TensorField> {
        let n = self.n()? as f64;
        Ok(self.schouten.get_or_init(|| {
            let k = self.scalar_curvature() / (2.0 * (n + 1.0));
            let rho = self.ricci();
            TensorField::from_fn(self.chart(), self.slots(2), |idx| {
                (rho.get(idx) - &k * self.g.get(idx[0], idx[1])) / n
            })
        }))
    }

    /// Weyl tensor `W = R − C ⊙ g`.
    pub fn weyl(&self) -> Result<&TensorField> {
        let c = self.schouten()?;
        Ok(self.weyl.get_or_init(|| {
            let cg = kulkarni_nomizu(c, &self.g.as_tensor()).unwrap();
            self.riemann().sub(&cg).unwrap()
        }))
    }

    /// Covariant derivative; the new covariant slot is first.
    pub fn covariant_derivative(&self, t: &TensorField) -> TensorField {
        let d = self.dim();
        self.christoffel();
        let mut slots = vec![Slot::Lower];
        slots.extend_from_slice(t.slots());
        let mut diff = self.diff.lock().unwrap();
        TensorField::from_fn(self.chart(), slots, |idx| {
            let c = idx[0];
            let a = &idx[1..];
            let mut terms = vec![diff.partial(t.get(a), c)];
            let mut src = a.to_vec();
            for (s, slot) in t.slots().iter().enumerate() {
                for m in 0..d {
                    src[s] = m;
                    let comp = t.get(&src);
                    if comp.is_zero() {
                        continue;
                    }
                    match slot {
                        Slot::Lower => terms.push(-(self.gamma(m, c, a[s]) * comp)),
                        Slot::Upper => terms.push(self.gamma(a[s], c, m) * comp),
                    }
                }
                src[s] = a[s];
            }
            ScalarField::sum(terms)
        })
    }

    /// `∇f` as a vector field, `(∇f)^a = g^ab ∂_b f`.
    pub fn gradient(&self, f: &ScalarField) -> TensorField {
        let d = self.dim();
        let df: Vec<ScalarField> = (0..d).map(|b| self.partial(f, b)).collect();
        let ginv = self.g.inverse();
        TensorField::from_fn(self.chart(), vec![Slot::Upper], |idx| {
            ScalarField::sum((0..d).map(|b| &ginv[idx[0] * d + b] * &df[b]))
        })
    }

    /// `Hes_f(∂_a, ∂_b) = ∂_a ∂_b f − Γ^k_ab ∂_k f`.
    pub fn hessian(&self, f: &ScalarField) -> TensorField {
        let d = self.dim();
        self.christoffel();
        let df: Vec<ScalarField> = (0..d).map(|b| self.partial(f, b)).collect();
        let mut diff = self.diff.lock().unwrap();
        TensorField::from_fn(self.chart(), self.slots(2), |idx| {
            let (a, b) = (idx[0], idx[1]);
            let mut terms = vec![diff.partial(&df[b], a)];
            terms.extend((0..d).map(|k| -(self.gamma(k, a, b) * &df[k])));
            ScalarField::sum(terms)
        })
    }

    /// `Δf = tr_g Hes_f`.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.trace(&self.hessian(f))
    }

    /// `(L_X g)_ab = X^c ∂_c g_ab + g_cb ∂_a X^c + g_ac ∂_b X^c`.
    pub fn lie_derivative_metric(&self, x: &TensorField) -> Result<TensorField> {
        if x.slots() != [Slot::Upper] {
            return Err(Error::Dimension("Lie derivative needs a vector field".into()));
        }
        let d = self.dim();
        let dg = self.dg();
        let mut diff = self.diff.lock().unwrap();
        let dx: Vec<ScalarField> = (0..d)
            .flat_map(|a| (0..d).map(move |c| (a, c)))
            .map(|(a, c)| diff.partial(x.get(&[c]), a))
            .collect();
        Ok(TensorField::from_fn(self.chart(), self.slots(2), |idx| {
            let (a, b) = (idx[0], idx[1]);
            ScalarField::sum((0..d).flat_map(|c| {
                [
                    x.get(&[c]) * &dg[(c * d + a) * d + b],
                    self.g.get(c, b) * &dx[a * d + c],
                    self.g.get(a, c) * &dx[b * d + c],
                ]
            }))
        }))
    }

    /// Divergence of a covariant 2-tensor, `(div T)_a = g^bc (∇_b T)_ca`.
    pub fn divergence(&self, t: &TensorField) -> Result<TensorField> {
        if t.slots() != [Slot::Lower, Slot::Lower] {
            return Err(Error::Dimension("divergence needs a covariant 2-tensor".into()));
        }
        let d = self.dim();
        let nt = self.covariant_derivative(t);
        let ginv = self.g.inverse();
        Ok(TensorField::from_fn(self.chart(), self.slots(1), |idx| {
            ScalarField::sum(
                (0..d)
                    .flat_map(|b| (0..d).map(move |c| (b, c)))
                    .map(|(b, c)| &ginv[b * d + c] * nt.get(&[b, c, idx[0]])),
            )
        }))
    }

    /// Differential of a scalar as a covector.
    pub fn differential(&self, f: &ScalarField) -> TensorField {
        TensorField::from_fn(self.chart(), self.slots(1), |idx| self.partial(f, idx[0]))
    }
}

pub fn christoffel(g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).christoffel().clone()
}

pub fn riemann(g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).riemann().clone()
}

pub fn ricci(g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).ricci().clone()
}

pub fn scalar_curvature(g: &MetricField) -> ScalarField {
    Curvature::new(g.clone()).scalar_curvature().clone()
}

pub fn schouten(g: &MetricField) -> Result<TensorField> {
    Curvature::new(g.clone()).schouten().cloned()
}

pub fn weyl(g: &MetricField) -> Result<TensorField> {
    Curvature::new(g.clone()).weyl().cloned()
}

pub fn gradient(f: &ScalarField, g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).gradient(f)
}

pub fn hessian(f: &ScalarField, g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).hessian(f)
}

pub fn laplacian(f: &ScalarField, g: &MetricField) -> ScalarField {
    Curvature::new(g.clone()).laplacian(f)
}

pub fn lie_derivative_metric(x: &TensorField, g: &MetricField) -> Result<TensorField> {
    Curvature::new(g.clone()).lie_derivative_metric(x)
}

pub fn covariant_derivative(t: &TensorField, g: &MetricField) -> TensorField {
    Curvature::new(g.clone()).covariant_derivative(t)
}
