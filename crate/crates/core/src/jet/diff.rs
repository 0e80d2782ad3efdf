// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::{add, div, mul, neg, Func, Op, ScalarField};

/// Symbolic differentiation with a derivative cache.
///
/// The cache is keyed by node identity and coordinate, so a shared subtree
/// is differentiated once no matter how many parents reference it. Reusing
/// one differentiator across related fields (all components of a tensor)
/// keeps the derivative DAG linear in the size of the input DAG.
#[derive(Default)]
pub struct Differentiator {
    // The key field is held so its address cannot be reused while cached.
    memo: HashMap<(usize, usize), (ScalarField, ScalarField)>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn partial(&mut self, field: &ScalarField, coordinate: usize) -> ScalarField {
        if !field.depends_on(coordinate) {
            return ScalarField::zero();
        }
        let key = (field.ptr_id(), coordinate);
        if let Some((_, d)) = self.memo.get(&key) {
            return d.clone();
        }
        let d = self.rule(field, coordinate);
        self.memo.insert(key, (field.clone(), d.clone()));
        d
    }

    fn rule(&mut self, field: &ScalarField, x: usize) -> ScalarField {
        match field.op() {
            Op::Const(_) => ScalarField::zero(),
            Op::Var(i) => {
                if *i == x {
                    ScalarField::one()
                } else {
                    ScalarField::zero()
                }
            }
            Op::Neg(a) => neg(&self.partial(a, x)),
            Op::Add(a, b) => {
                let da = self.partial(a, x);
                let db = self.partial(b, x);
                add(&da, &db)
            }
            Op::Mul(a, b) => {
                let da = self.partial(a, x);
                let db = self.partial(b, x);
                add(&mul(&da, b), &mul(a, &db))
            }
            Op::Div(a, b) => {
                // (a/b)' = (a' - (a/b) b') / b
                let da = self.partial(a, x);
                let db = self.partial(b, x);
                div(&add(&da, &neg(&mul(field, &db))), b)
            }
            Op::Powi(a, n) => {
                let da = self.partial(a, x);
                let inner = mul(&ScalarField::constant(*n as f64), &a.powi(n - 1));
                mul(&inner, &da)
            }
            Op::Func(func, a) => {
                let da = self.partial(a, x);
                if da.is_zero() {
                    return ScalarField::zero();
                }
                let outer = match func {
                    Func::Exp => field.clone(),
                    Func::Log => return div(&da, a),
                    Func::Sqrt => return div(&da, &mul(&ScalarField::constant(2.0), field)),
                    Func::Sin => a.cos(),
                    Func::Cos => neg(&a.sin()),
                    Func::Tan => add(&ScalarField::one(), &field.powi(2)),
                    Func::Sinh => a.cosh(),
                    Func::Cosh => a.sinh(),
                    Func::Tanh => add(&ScalarField::one(), &neg(&field.powi(2))),
                };
                mul(&outer, &da)
            }
            Op::Table(table, index) => {
                if table.variable() == x {
                    table.derivative_field(*index)
                } else {
                    ScalarField::zero()
                }
            }
        }
    }
}
