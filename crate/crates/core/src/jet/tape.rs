// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::sync::Arc;

use super::{DomainError, Func, Op, ScalarField, Table};

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Var(usize),
    Neg(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Powi(u32, i32),
    Func(Func, u32),
    Table(Arc<Table>, usize),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Var(usize),
    Neg(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Powi(u32, i32),
    Func(Func, u32),
    Table(usize, usize),
}

/// A set of fields flattened into one instruction list.
///
/// Children always precede parents, and structurally identical
/// subexpressions share a slot. Evaluation is a single forward sweep.
#[derive(Debug, Clone)]
pub struct Tape {
    instrs: Vec<Instr>,
    outputs: Vec<u32>,
    min_dimension: usize,
}

impl Tape {
    pub fn compile(roots: &[ScalarField]) -> Tape {
        let mut instrs = Vec::new();
        let mut by_ptr: HashMap<usize, u32> = HashMap::new();
        let mut by_key: HashMap<Key, u32> = HashMap::new();
        let mut outputs = Vec::with_capacity(roots.len());
        let mut mask = 0u64;

        for root in roots {
            mask |= root.variable_mask();
            // Iterative post-order: (node, children_pushed)
            let mut stack: Vec<(ScalarField, bool)> = vec![(root.clone(), false)];
            while let Some((node, expanded)) = stack.pop() {
                if by_ptr.contains_key(&node.ptr_id()) {
                    continue;
                }
                if !expanded {
                    stack.push((node.clone(), true));
                    match node.op() {
                        Op::Neg(a) | Op::Powi(a, _) | Op::Func(_, a) => {
                            stack.push((a.clone(), false));
                        }
                        Op::Add(a, b) | Op::Mul(a, b) | Op::Div(a, b) => {
                            stack.push((b.clone(), false));
                            stack.push((a.clone(), false));
                        }
                        Op::Const(_) | Op::Var(_) | Op::Table(..) => {}
                    }
                    continue;
                }
                let slot = |f: &ScalarField| by_ptr[&f.ptr_id()];
                let (key, instr) = match node.op() {
                    Op::Const(c) => (Key::Const(c.to_bits()), Instr::Const(*c)),
                    Op::Var(i) => (Key::Var(*i), Instr::Var(*i)),
                    Op::Neg(a) => (Key::Neg(slot(a)), Instr::Neg(slot(a))),
                    Op::Add(a, b) => {
                        // Addition and multiplication commute; canonical order improves sharing.
                        let (x, y) = ordered(slot(a), slot(b));
                        (Key::Add(x, y), Instr::Add(x, y))
                    }
                    Op::Mul(a, b) => {
                        let (x, y) = ordered(slot(a), slot(b));
                        (Key::Mul(x, y), Instr::Mul(x, y))
                    }
                    Op::Div(a, b) => (Key::Div(slot(a), slot(b)), Instr::Div(slot(a), slot(b))),
                    Op::Powi(a, n) => (Key::Powi(slot(a), *n), Instr::Powi(slot(a), *n)),
                    Op::Func(f, a) => (Key::Func(*f, slot(a)), Instr::Func(*f, slot(a))),
                    Op::Table(t, i) => (
                        Key::Table(Arc::as_ptr(t) as usize, *i),
                        Instr::Table(Arc::clone(t), *i),
                    ),
                };
                let id = *by_key.entry(key).or_insert_with(|| {
                    instrs.push(instr);
                    (instrs.len() - 1) as u32
                });
                by_ptr.insert(node.ptr_id(), id);
            }
            outputs.push(by_ptr[&root.ptr_id()]);
        }
        let min_dimension = (64 - mask.leading_zeros()) as usize;
        Tape {
            instrs,
            outputs,
            min_dimension,
        }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Values of every root field at `point`, in compile order.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>, DomainError> {
        let mut scratch = Vec::new();
        self.evaluate_into(point, &mut scratch)?;
        Ok(self.outputs.iter().map(|&o| scratch[o as usize]).collect())
    }

    fn evaluate_into(&self, point: &[f64], v: &mut Vec<f64>) -> Result<(), DomainError> {
        if point.len() < self.min_dimension {
            return Err(DomainError::Dimension {
                need: self.min_dimension,
                got: point.len(),
            });
        }
        v.clear();
        v.reserve(self.instrs.len());
        for instr in &self.instrs {
            let x = match instr {
                Instr::Const(c) => *c,
                Instr::Var(i) => point[*i],
                Instr::Neg(a) => -v[*a as usize],
                Instr::Add(a, b) => v[*a as usize] + v[*b as usize],
                Instr::Mul(a, b) => v[*a as usize] * v[*b as usize],
                Instr::Div(a, b) => {
                    let d = v[*b as usize];
                    if d == 0.0 {
                        return Err(DomainError::DivisionByZero);
                    }
                    v[*a as usize] / d
                }
                Instr::Powi(a, n) => {
                    let base = v[*a as usize];
                    if base == 0.0 && *n < 0 {
                        return Err(DomainError::ZeroNegativePower(*n));
                    }
                    base.powi(*n)
                }
                Instr::Func(f, a) => f.apply(v[*a as usize])?,
                Instr::Table(t, i) => t.interpolate(*i, point[t.variable()])?,
            };
            v.push(x);
        }
        Ok(())
    }
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
