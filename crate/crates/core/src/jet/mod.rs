// SPDX-License-Identifier: Apache-2.0

//! Exact scalar fields over chart coordinates.
//!
//! A [`ScalarField`] is an immutable expression DAG. Nodes are reference
//! counted, so derivatives share structure with their sources instead of
//! copying it. Constructors fold literal zeros and ones and nothing else.
//!
//! Evaluation goes through a [`Tape`], a flattened instruction list with
//! common subexpressions merged. Evaluating a whole tensor through one tape
//! visits every shared node once per point.

mod diff;
mod parse;
mod table;
mod tape;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use diff::Differentiator;
pub use parse::{parse, ParseError};
pub use table::{Derivative, Table, TableFunction};
pub use tape::Tape;

/// Raised when a sub-expression is evaluated outside its real domain.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("sqrt of negative value {0}")]
    SqrtNegative(f64),
    #[error("zero raised to negative power {0}")]
    ZeroNegativePower(i32),
    #[error("point has {got} coordinates, field needs at least {need}")]
    Dimension { need: usize, got: usize },
    #[error("coordinate value {value} outside tabulated range [{lo}, {hi}]")]
    OutsideTable { value: f64, lo: f64, hi: f64 },
}

/// Elementary functions available as unary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub(crate) fn apply(self, x: f64) -> Result<f64, DomainError> {
        Ok(match self {
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(DomainError::LogNonPositive(x));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(DomainError::SqrtNegative(x));
                }
                x.sqrt()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        })
    }
}

#[derive(Debug)]
pub(crate) enum Op {
    Const(f64),
    Var(usize),
    Neg(ScalarField),
    Add(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Powi(ScalarField, i32),
    Func(Func, ScalarField),
    Table(Arc<Table>, usize),
}

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) op: Op,
    /// Bit `i` is set when coordinate `i` occurs in the subtree.
    pub(crate) vars: u64,
}

/// Closed-form real function of chart coordinates.
#[derive(Clone)]
pub struct ScalarField(pub(crate) Arc<Node>);

/// Largest number of coordinates a field may reference.
pub const MAX_COORDINATES: usize = 64;

impl ScalarField {
    fn from_op(op: Op) -> Self {
        let vars = match &op {
            Op::Const(_) => 0,
            Op::Var(i) => 1u64 << i,
            Op::Neg(a) | Op::Powi(a, _) | Op::Func(_, a) => a.0.vars,
            Op::Add(a, b) | Op::Mul(a, b) | Op::Div(a, b) => a.0.vars | b.0.vars,
            Op::Table(t, _) => 1u64 << t.variable(),
        };
        ScalarField(Arc::new(Node { op, vars }))
    }

    pub fn constant(value: f64) -> Self {
        Self::from_op(Op::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The coordinate with position `index` in the chart.
    pub fn coordinate(index: usize) -> Self {
        assert!(index < MAX_COORDINATES, "coordinate index {index} out of range");
        Self::from_op(Op::Var(index))
    }

    pub(crate) fn op(&self) -> &Op {
        &self.0.op
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.0.op {
            Op::Const(c) => Some(c),
            _ => None,
        }
    }

    /// True when the node is the literal zero. Fields that merely evaluate
    /// to zero are not detected.
    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    /// Coordinates the field mentions, as a bit mask.
    pub fn variable_mask(&self) -> u64 {
        self.0.vars
    }

    pub fn depends_on(&self, coordinate: usize) -> bool {
        coordinate < MAX_COORDINATES && self.0.vars & (1u64 << coordinate) != 0
    }

    /// Smallest point dimension accepted by [`ScalarField::evaluate`].
    pub fn min_dimension(&self) -> usize {
        (MAX_COORDINATES as u32 - self.0.vars.leading_zeros()) as usize
    }

    pub(crate) fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_constant() {
            let v = c.powi(n);
            if v.is_finite() {
                return Self::constant(v);
            }
        }
        Self::from_op(Op::Powi(self.clone(), n))
    }

    pub fn apply(&self, func: Func) -> Self {
        if let Some(c) = self.as_constant() {
            if let Ok(v) = func.apply(c) {
                if v.is_finite() {
                    return Self::constant(v);
                }
            }
        }
        Self::from_op(Op::Func(func, self.clone()))
    }

    pub fn exp(&self) -> Self {
        self.apply(Func::Exp)
    }
    pub fn log(&self) -> Self {
        self.apply(Func::Log)
    }
    pub fn sqrt(&self) -> Self {
        self.apply(Func::Sqrt)
    }
    pub fn sin(&self) -> Self {
        self.apply(Func::Sin)
    }
    pub fn cos(&self) -> Self {
        self.apply(Func::Cos)
    }
    pub fn tan(&self) -> Self {
        self.apply(Func::Tan)
    }
    pub fn sinh(&self) -> Self {
        self.apply(Func::Sinh)
    }
    pub fn cosh(&self) -> Self {
        self.apply(Func::Cosh)
    }
    pub fn tanh(&self) -> Self {
        self.apply(Func::Tanh)
    }

    /// Evaluates at `point`, whose entries are indexed by coordinate position.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, DomainError> {
        let tape = Tape::compile(std::slice::from_ref(self));
        Ok(tape.evaluate(point)?[0])
    }

    /// Exact partial derivative with respect to coordinate `index`.
    pub fn partial(&self, index: usize) -> ScalarField {
        Differentiator::new().partial(self, index)
    }

    /// Successive partial derivatives, applied left to right.
    pub fn partials(&self, indices: &[usize]) -> ScalarField {
        let mut d = Differentiator::new();
        indices
            .iter()
            .fold(self.clone(), |acc, &i| d.partial(&acc, i))
    }

    /// Sum of a sequence of fields, built as a balanced tree.
    pub fn sum<I: IntoIterator<Item = ScalarField>>(terms: I) -> ScalarField {
        let mut terms: Vec<ScalarField> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        if terms.is_empty() {
            return ScalarField::zero();
        }
        while terms.len() > 1 {
            let mut next = Vec::with_capacity(terms.len().div_ceil(2));
            let mut it = terms.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(add(&a, &b)),
                    None => next.push(a),
                }
            }
            terms = next;
        }
        terms.pop().unwrap()
    }

    /// Polynomial coefficients in `variable`, lowest degree first, when the
    /// field is built from constants, that coordinate, `+`, `-`, `*`,
    /// non-negative integer powers and division by constants.
    pub fn polynomial_coefficients(&self, variable: usize) -> Option<Vec<f64>> {
        fn mul_poly(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        fn walk(f: &ScalarField, v: usize, memo: &mut HashMap<usize, Option<Vec<f64>>>) -> Option<Vec<f64>> {
            if let Some(hit) = memo.get(&f.ptr_id()) {
                return hit.clone();
            }
            let out = match f.op() {
                Op::Const(c) => Some(vec![*c]),
                Op::Var(i) if *i == v => Some(vec![0.0, 1.0]),
                Op::Var(_) | Op::Func(..) | Op::Table(..) => None,
                Op::Neg(a) => walk(a, v, memo).map(|p| p.iter().map(|x| -x).collect()),
                Op::Add(a, b) => {
                    let (p, q) = (walk(a, v, memo)?, walk(b, v, memo)?);
                    let mut out = vec![0.0; p.len().max(q.len())];
                    for (i, x) in p.iter().enumerate() {
                        out[i] += x;
                    }
                    for (i, x) in q.iter().enumerate() {
                        out[i] += x;
                    }
                    Some(out)
                }
                Op::Mul(a, b) => Some(mul_poly(&walk(a, v, memo)?, &walk(b, v, memo)?)),
                Op::Div(a, b) => {
                    let c = b.as_constant()?;
                    walk(a, v, memo).map(|p| p.iter().map(|x| x / c).collect())
                }
                Op::Powi(a, n) if *n >= 0 => {
                    let p = walk(a, v, memo)?;
                    let mut out = vec![1.0];
                    for _ in 0..*n {
                        if out.len() + p.len() > 64 {
                            return None;
                        }
                        out = mul_poly(&out, &p);
                    }
                    Some(out)
                }
                Op::Powi(..) => None,
            };
            memo.insert(f.ptr_id(), out.clone());
            out
        }
        let mut coeffs = walk(self, variable, &mut HashMap::new())?;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Some(coeffs)
    }

    /// `Σ c_k x^k` in coordinate `variable`.
    pub fn polynomial(variable: usize, coefficients: &[f64]) -> ScalarField {
        let x = ScalarField::coordinate(variable);
        ScalarField::sum(
            coefficients
                .iter()
                .enumerate()
                .map(|(k, &c)| ScalarField::constant(c) * x.powi(k as i32)),
        )
    }

    /// Renders the field in the plain-text grammar using `names` for coordinates.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        parse::Printer { field: self, names }
    }

    /// Number of distinct nodes reachable from this field.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.ptr_id()) {
                continue;
            }
            match f.op() {
                Op::Neg(a) | Op::Powi(a, _) | Op::Func(_, a) => stack.push(a.clone()),
                Op::Add(a, b) | Op::Mul(a, b) | Op::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Op::Const(_) | Op::Var(_) | Op::Table(..) => {}
            }
        }
        seen.len()
    }

    pub(crate) fn table(table: Arc<Table>, function: usize) -> Self {
        Self::from_op(Op::Table(table, function))
    }
}

pub(crate) fn add(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => ScalarField::constant(x + y),
        (Some(x), _) if x == 0.0 => b.clone(),
        (_, Some(y)) if y == 0.0 => a.clone(),
        _ => ScalarField::from_op(Op::Add(a.clone(), b.clone())),
    }
}

pub(crate) fn neg(a: &ScalarField) -> ScalarField {
    match a.op() {
        Op::Const(c) => ScalarField::constant(-c),
        Op::Neg(inner) => inner.clone(),
        _ => ScalarField::from_op(Op::Neg(a.clone())),
    }
}

pub(crate) fn sub(a: &ScalarField, b: &ScalarField) -> ScalarField {
    if a.ptr_eq(b) {
        return ScalarField::zero();
    }
    add(a, &neg(b))
}

pub(crate) fn mul(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => ScalarField::constant(x * y),
        (Some(x), _) if x == 0.0 => ScalarField::zero(),
        (_, Some(y)) if y == 0.0 => ScalarField::zero(),
        (Some(x), _) if x == 1.0 => b.clone(),
        (_, Some(y)) if y == 1.0 => a.clone(),
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => ScalarField::from_op(Op::Mul(a.clone(), b.clone())),
    }
}

pub(crate) fn div(a: &ScalarField, b: &ScalarField) -> ScalarField {
    if b.is_one() {
        return a.clone();
    }
    if a.is_zero() {
        return ScalarField::zero();
    }
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) if y != 0.0 => ScalarField::constant(x / y),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => ScalarField::from_op(Op::Div(a.clone(), b.clone())),
    }
}

macro_rules! binary_ops {
    ($trait:ident, $method:ident, $func:ident) => {
        impl $trait<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(self, rhs)
            }
        }
        impl $trait<ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(&self, &rhs)
            }
        }
        impl $trait<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(&self, rhs)
            }
        }
        impl $trait<ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(self, &rhs)
            }
        }
        impl $trait<f64> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: f64) -> ScalarField {
                $func(self, &ScalarField::constant(rhs))
            }
        }
        impl $trait<f64> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: f64) -> ScalarField {
                $func(&self, &ScalarField::constant(rhs))
            }
        }
        impl $trait<&ScalarField> for f64 {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(&ScalarField::constant(self), rhs)
            }
        }
        impl $trait<ScalarField> for f64 {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(&ScalarField::constant(self), &rhs)
            }
        }
    };
}

binary_ops!(Add, add, add);
binary_ops!(Sub, sub, sub);
binary_ops!(Mul, mul, mul);
binary_ops!(Div, div, div);

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        neg(self)
    }
}

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        neg(&self)
    }
}

impl From<f64> for ScalarField {
    fn from(value: f64) -> Self {
        ScalarField::constant(value)
    }
}

/// Structural equality. Table nodes compare by table identity.
impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (self.op(), other.op()) {
            (Op::Const(a), Op::Const(b)) => a.to_bits() == b.to_bits(),
            (Op::Var(a), Op::Var(b)) => a == b,
            (Op::Neg(a), Op::Neg(b)) => a == b,
            (Op::Add(a, b), Op::Add(c, d))
            | (Op::Mul(a, b), Op::Mul(c, d))
            | (Op::Div(a, b), Op::Div(c, d)) => a == c && b == d,
            (Op::Powi(a, n), Op::Powi(b, m)) => n == m && a == b,
            (Op::Func(f, a), Op::Func(g, b)) => f == g && a == b,
            (Op::Table(t, i), Op::Table(s, j)) => Arc::ptr_eq(t, s) && i == j,
            _ => false,
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.min_dimension()).map(|i| format!("x{i}")).collect();
        let shown = self.display_with(&names).to_string();
        f.write_str(&shown)
    }
}

#[cfg(test)]
mod tests;
