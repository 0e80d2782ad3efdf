// SPDX-License-Identifier: Apache-2.0

//! Tabulated one-variable functions produced by the ODE solvers.
//!
//! A table stores values and slopes on a sorted grid and interpolates with
//! cubic Hermite polynomials. Each function also carries a symbolic rule for
//! its derivative, so tabulated fields stay differentiable: the derivative is
//! either another function of the same table or an affine combination of
//! table functions with closed-form coefficients.

use std::sync::Arc;

use super::{DomainError, ScalarField};

#[derive(Debug, Clone)]
pub enum Derivative {
    /// The derivative is the table function with this index.
    Function(usize),
    /// The derivative is `source + sum(coef * function)`.
    Affine {
        terms: Vec<(usize, ScalarField)>,
        source: ScalarField,
    },
}

#[derive(Debug, Clone)]
pub struct TableFunction {
    pub name: String,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub derivative: Derivative,
}

#[derive(Debug)]
pub struct Table {
    variable: usize,
    grid: Vec<f64>,
    functions: Vec<TableFunction>,
}

impl Table {
    /// Panics if the grid is unsorted, too short, or column lengths differ.
    /// Affine coefficients must not reference other tables' functions through
    /// this table, which the constructor cannot check; the ODE module is the
    /// only producer.
    pub fn new(variable: usize, grid: Vec<f64>, functions: Vec<TableFunction>) -> Arc<Table> {
        assert!(grid.len() >= 2, "table grid needs at least two nodes");
        assert!(grid.windows(2).all(|w| w[0] < w[1]), "table grid must be increasing");
        for f in &functions {
            assert_eq!(f.values.len(), grid.len());
            assert_eq!(f.slopes.len(), grid.len());
        }
        Arc::new(Table {
            variable,
            grid,
            functions,
        })
    }

    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn functions(&self) -> &[TableFunction] {
        &self.functions
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Field view of function `index`.
    pub fn field(self: &Arc<Self>, index: usize) -> ScalarField {
        assert!(index < self.functions.len());
        ScalarField::table(Arc::clone(self), index)
    }

    pub(crate) fn derivative_field(self: &Arc<Self>, index: usize) -> ScalarField {
        match &self.functions[index].derivative {
            Derivative::Function(j) => self.field(*j),
            Derivative::Affine { terms, source } => {
                let parts = terms
                    .iter()
                    .map(|(j, coef)| coef * self.field(*j))
                    .chain(std::iter::once(source.clone()));
                ScalarField::sum(parts)
            }
        }
    }

    /// Cubic Hermite interpolation of function `index` at `x`.
    pub fn interpolate(&self, index: usize, x: f64) -> Result<f64, DomainError> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(DomainError::OutsideTable { value: x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let k = match self.grid.partition_point(|&g| g <= x) {
            0 => 0,
            p if p >= self.grid.len() => self.grid.len() - 2,
            p => p - 1,
        };
        let f = &self.functions[index];
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        if x == x0 {
            return Ok(f.values[k]);
        }
        let h = x1 - x0;
        let s = (x - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * f.values[k] + h10 * h * f.slopes[k] + h01 * f.values[k + 1] + h11 * h * f.slopes[k + 1])
    }
}
