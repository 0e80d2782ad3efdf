// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Chart, MetricField, Signature};
use crate::error::{Error, Result};

/// JSON form of a metric: coordinate names, signature, component strings
/// and sampling box.
///
/// ```json
/// {
///   "coordinates": ["u", "v", "x1"],
///   "signature": "lorentzian",
///   "components": [["x1^2", "1", "0"], ["1", "0", "0"], ["0", "0", "1"]],
///   "sampling_box": [[-1.0, 1.0], [-1.0, 1.0], [-2.0, 2.0]]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDescriptor {
    pub coordinates: Vec<String>,
    pub signature: Signature,
    pub components: Vec<Vec<String>>,
    pub sampling_box: Vec<[f64; 2]>,
}

impl MetricDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    pub fn build(&self) -> Result<MetricField> {
        let chart = Chart::new(
            self.coordinates.clone(),
            self.sampling_box.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
        )?;
        let d = chart.dim();
        if self.components.len() != d || self.components.iter().any(|row| row.len() != d) {
            return Err(Error::Descriptor(format!("components must be a {d}x{d} array")));
        }
        let mut comps = Vec::with_capacity(d * d);
        for row in &self.components {
            for entry in row {
                comps.push(chart.parse(entry)?);
            }
        }
        MetricField::new(chart, comps, self.signature)
    }

    /// Fails for metrics containing tabulated ODE solutions, which have no
    /// text form.
    pub fn from_metric(g: &MetricField) -> Result<Self> {
        let chart = g.chart();
        let names = chart.coordinates();
        let d = chart.dim();
        let mut components = Vec::with_capacity(d);
        for a in 0..d {
            let mut row = Vec::with_capacity(d);
            for b in 0..d {
                let text = g.get(a, b).display_with(names).to_string();
                if text.contains('@') {
                    return Err(Error::Descriptor(
                        "metric contains tabulated functions and cannot be written as text".into(),
                    ));
                }
                row.push(text);
            }
            components.push(row);
        }
        Ok(MetricDescriptor {
            coordinates: names.to_vec(),
            signature: g.signature(),
            components,
            sampling_box: chart.sampling_box().iter().map(|&(lo, hi)| [lo, hi]).collect(),
        })
    }
}
