// SPDX-License-Identifier: Apache-2.0

//! Family parameters: `key=value` maps, schemas and typed resolution.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{parse, ScalarField};

/// Raw `key=value` parameters as given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `k=v,k=v`. Commas inside parentheses belong to the value.
    pub fn parse(src: &str) -> Result<Params> {
        let mut p = Params::new();
        p.extend_from(src)?;
        Ok(p)
    }

    pub fn extend_from(&mut self, src: &str) -> Result<()> {
        for item in split_top_level(src) {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{item}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::Parameter(format!("expected key=value, got '{item}'")));
            }
            if self.values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parameter(format!("parameter '{k}' given twice")));
            }
        }
        Ok(())
    }

    pub fn set(mut self, key: &str, value: &str) -> Self {
        self.values.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

fn split_top_level(src: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&src[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&src[start..]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Real,
    Integer,
    /// Closed-form expression in the listed variables.
    Expr(&'static [&'static str]),
    Choice(&'static [&'static str]),
}

/// Scalars are given as `name=…`, lists as `name1=…`, matrices as `name12=…`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Scalar,
    List,
    Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub shape: Shape,
    pub default: &'static str,
    pub doc: &'static str,
}

impl ParamSpec {
    pub const fn scalar(name: &'static str, kind: ParamKind, default: &'static str, doc: &'static str) -> Self {
        ParamSpec {
            name,
            kind,
            shape: Shape::Scalar,
            default,
            doc,
        }
    }

    pub const fn list(name: &'static str, kind: ParamKind, default: &'static str, doc: &'static str) -> Self {
        ParamSpec {
            name,
            kind,
            shape: Shape::List,
            default,
            doc,
        }
    }

    pub const fn matrix(name: &'static str, kind: ParamKind, default: &'static str, doc: &'static str) -> Self {
        ParamSpec {
            name,
            kind,
            shape: Shape::Matrix,
            default,
            doc,
        }
    }

    /// Compact signature such as `a11..ann: expr(u)`.
    pub fn signature(&self) -> String {
        let name = match self.shape {
            Shape::Scalar => self.name.to_string(),
            Shape::List => format!("{0}1..{0}n", self.name),
            Shape::Matrix => format!("{0}11..{0}nn", self.name),
        };
        let kind = match self.kind {
            ParamKind::Real => "real".to_string(),
            ParamKind::Integer => "integer".to_string(),
            ParamKind::Expr(vars) => format!("expr({})", vars.join(",")),
            ParamKind::Choice(opts) => opts.join("|"),
        };
        format!("{name}: {kind} = {}", self.default)
    }
}

/// Typed access to parameters with defaults; records every resolved value.
pub struct Resolver<'a> {
    family: &'static str,
    specs: &'static [ParamSpec],
    given: &'a Params,
    consumed: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(family: &'static str, specs: &'static [ParamSpec], given: &'a Params) -> Self {
        Resolver {
            family,
            specs,
            given,
            consumed: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    fn spec(&self, name: &str) -> &'static ParamSpec {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("family {} has no parameter {name}", self.family))
    }

    fn raw(&mut self, key: &str, default: &str) -> (String, bool) {
        let (value, given) = match self.given.get(key) {
            Some(v) => (v.to_string(), true),
            None => (default.to_string(), false),
        };
        self.consumed.insert(key.to_string());
        self.resolved.insert(key.to_string(), value.clone());
        (value, given)
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Parameter(format!("{}: parameter '{key}': {msg}", self.family))
    }

    fn number(&self, key: &str, src: &str) -> Result<f64> {
        let e = parse::<&str>(src, &[]).map_err(|e| self.bad(key, e))?;
        let v = e.evaluate(&[]).map_err(|e| self.bad(key, e))?;
        if !v.is_finite() {
            return Err(self.bad(key, "value is not finite"));
        }
        Ok(v)
    }

    pub fn real(&mut self, name: &str) -> Result<f64> {
        let spec = self.spec(name);
        let (v, _) = self.raw(name, spec.default);
        self.number(name, &v)
    }

    pub fn integer(&mut self, name: &str) -> Result<i64> {
        let spec = self.spec(name);
        let (v, _) = self.raw(name, spec.default);
        v.trim().parse::<i64>().map_err(|_| self.bad(name, format!("expected an integer, got '{v}'")))
    }

    /// Integer in `lo..=hi`.
    pub fn count(&mut self, name: &str, lo: usize, hi: usize) -> Result<usize> {
        let v = self.integer(name)?;
        if v < lo as i64 || v > hi as i64 {
            return Err(self.bad(name, format!("must lie in {lo}..={hi}, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn choice(&mut self, name: &str) -> Result<String> {
        let spec = self.spec(name);
        let (v, _) = self.raw(name, spec.default);
        match spec.kind {
            ParamKind::Choice(opts) if opts.contains(&v.as_str()) => Ok(v),
            ParamKind::Choice(opts) => Err(self.bad(name, format!("expected one of {}", opts.join(", ")))),
            _ => Ok(v),
        }
    }

    fn expression(&mut self, key: &str, vars: &[&str], default: &str) -> Result<ScalarField> {
        let (v, _) = self.raw(key, default);
        parse(&v, vars).map_err(|e| self.bad(key, e))
    }

    pub fn expr(&mut self, name: &str) -> Result<ScalarField> {
        let spec = self.spec(name);
        let vars = match spec.kind {
            ParamKind::Expr(vars) => vars,
            _ => &[],
        };
        self.expression(name, vars, spec.default)
    }

    /// Expression in explicitly given variables, overriding the schema.
    pub fn expr_in(&mut self, name: &str, vars: &[&str]) -> Result<ScalarField> {
        let spec = self.spec(name);
        self.expression(name, vars, spec.default)
    }

    /// Entries `name1..namen`; `default(i)` is the value for entry `i` (1-based) when absent.
    pub fn list_real(&mut self, name: &str, n: usize, default: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
        (1..=n)
            .map(|i| {
                let key = format!("{name}{i}");
                let (v, given) = self.raw(&key, &fmt_num(default(i)));
                if given {
                    self.number(&key, &v)
                } else {
                    Ok(default(i))
                }
            })
            .collect()
    }

    pub fn list_expr(&mut self, name: &str, n: usize, default: &str) -> Result<Vec<ScalarField>> {
        let vars = match self.spec(name).kind {
            ParamKind::Expr(vars) => vars,
            _ => &[],
        };
        (1..=n).map(|i| self.expression(&format!("{name}{i}"), vars, default)).collect()
    }

    /// Symmetric matrix from entries `nameij`; either of `ij`, `ji` may be given.
    pub fn matrix_real(&mut self, name: &str, n: usize, default: impl Fn(usize, usize) -> f64) -> Result<Vec<Vec<f64>>> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 1..=n {
            for j in i..=n {
                let v = match self.symmetric_entry(name, i, j)? {
                    Some((key, src)) => self.number(&key, &src)?,
                    None => default(i, j),
                };
                self.record_entry(name, i, j, &fmt_num(v));
                m[i - 1][j - 1] = v;
                m[j - 1][i - 1] = v;
            }
        }
        Ok(m)
    }

    pub fn matrix_expr(&mut self, name: &str, n: usize, default: impl Fn(usize, usize) -> &'static str) -> Result<Vec<Vec<ScalarField>>> {
        let vars = match self.spec(name).kind {
            ParamKind::Expr(vars) => vars,
            _ => &[],
        };
        let mut m = vec![vec![ScalarField::zero(); n]; n];
        for i in 1..=n {
            for j in i..=n {
                let src = match self.symmetric_entry(name, i, j)? {
                    Some((_, src)) => src,
                    None => default(i, j).to_string(),
                };
                self.record_entry(name, i, j, &src);
                let key = format!("{name}{i}{j}");
                let e = parse(&src, vars).map_err(|e| self.bad(&key, e))?;
                m[i - 1][j - 1] = e.clone();
                m[j - 1][i - 1] = e;
            }
        }
        Ok(m)
    }

    fn symmetric_entry(&mut self, name: &str, i: usize, j: usize) -> Result<Option<(String, String)>> {
        if i > 9 || j > 9 {
            return Err(self.bad(name, "matrix parameters support n <= 9"));
        }
        let k1 = format!("{name}{i}{j}");
        let k2 = format!("{name}{j}{i}");
        self.consumed.insert(k1.clone());
        self.consumed.insert(k2.clone());
        match (self.given.get(&k1), self.given.get(&k2)) {
            (Some(a), Some(b)) if i != j && a != b => Err(self.bad(&k1, format!("matrix must be symmetric, {k2} = {b}"))),
            (Some(a), _) => Ok(Some((k1, a.to_string()))),
            (None, Some(b)) => Ok(Some((k2, b.to_string()))),
            (None, None) => Ok(None),
        }
    }

    fn record_entry(&mut self, name: &str, i: usize, j: usize, value: &str) {
        self.resolved.insert(format!("{name}{i}{j}"), value.to_string());
    }

    /// Fails on parameters that no resolver call consumed.
    pub fn finish(self) -> Result<BTreeMap<String, String>> {
        let unknown: Vec<&str> = self.given.keys().filter(|k| !self.consumed.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Parameter(format!(
                "{}: unknown parameter(s) {}",
                self.family,
                unknown.join(", ")
            )));
        }
        Ok(self.resolved)
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v}")
}
