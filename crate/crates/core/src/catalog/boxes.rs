// SPDX-License-Identifier: Apache-2.0

//! Sampling intervals that stay clear of singular loci.

use crate::error::{Error, Result};
use crate::jet::ScalarField;

pub const DEFAULT_INTERVAL: (f64, f64) = (-2.0, 2.0);
/// Distance kept from every singular point.
pub const MARGIN: f64 = 0.1;

const SCAN_SAMPLES: usize = 4000;

/// Largest piece of `interval` that keeps `MARGIN` away from every point of
/// `singular`. Ties go to the rightmost piece.
pub fn avoid(interval: (f64, f64), singular: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = interval;
    let mut cuts: Vec<f64> = singular
        .iter()
        .copied()
        .filter(|s| *s > lo - MARGIN && *s < hi + MARGIN)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    let mut left_cut: Option<f64> = None;
    for piece_end in cuts.iter().copied().map(Some).chain([None]) {
        let a = match left_cut {
            Some(s) => (s + MARGIN).max(lo),
            None => lo,
        };
        let b = match piece_end {
            Some(s) => (s - MARGIN).min(hi),
            None => hi,
        };
        if b > a && best.is_none_or(|(x, y)| b - a >= y - x) {
            best = Some((a, b));
        }
        left_cut = piece_end.or(left_cut);
    }
    best.ok_or_else(|| {
        Error::Parameter(format!(
            "no part of [{lo}, {hi}] stays {MARGIN} away from the singular points {cuts:?}"
        ))
    })
}

/// Accepts a user interval only if it contains no singular point.
pub fn check_clear(name: &str, interval: (f64, f64), singular: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = interval;
    if let Some(s) = singular.iter().find(|s| **s >= lo && **s <= hi) {
        return Err(Error::Parameter(format!(
            "sampling interval {name} = [{lo}, {hi}] touches the singular point {s}"
        )));
    }
    Ok(interval)
}

/// Zeros and non-evaluable points of a one-variable field on `interval`
/// widened by the margin, located by a fine scan and bisection.
pub fn scan_singular(f: &ScalarField, variable: usize, interval: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = (interval.0 - MARGIN, interval.1 + MARGIN);
    let eval = |x: f64| {
        let mut p = vec![0.0; variable + 1];
        p[variable] = x;
        f.evaluate(&p).ok().filter(|v| v.is_finite())
    };
    let xs: Vec<f64> = (0..=SCAN_SAMPLES)
        .map(|k| lo + (hi - lo) * k as f64 / SCAN_SAMPLES as f64)
        .collect();
    let vs: Vec<Option<f64>> = xs.iter().map(|&x| eval(x)).collect();
    let mut out = Vec::new();
    for k in 0..xs.len() {
        match vs[k] {
            None => out.push(xs[k]),
            Some(v) if v == 0.0 => out.push(xs[k]),
            Some(v) => {
                if let Some(Some(w)) = vs.get(k + 1) {
                    if v * w < 0.0 {
                        out.push(bisect(&eval, xs[k], xs[k + 1], v));
                    }
                }
            }
        }
    }
    out
}

fn bisect(eval: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, fa: f64) -> f64 {
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        match eval(m) {
            Some(v) if v * fa > 0.0 => a = m,
            Some(_) => b = m,
            None => return m,
        }
    }
    0.5 * (a + b)
}

/// Half-width `L ≤ 2` of a cube on which `1 + (c/4) Σ η_i y_i² > 0`, keeping the margin.
pub fn conformal_half_width(c: f64, eta: &[f64]) -> Result<f64> {
    let bad = eta.iter().filter(|&&e| c * e < 0.0).count();
    if bad == 0 {
        return Ok(DEFAULT_INTERVAL.1);
    }
    let limit = 2.0 / (c.abs() * bad as f64).sqrt();
    let l = (limit - MARGIN).min(DEFAULT_INTERVAL.1);
    if l <= 0.0 {
        return Err(Error::Parameter(format!(
            "curvature {c} leaves no room for the conformal chart"
        )));
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::parse;

    #[test]
    fn shrinks_to_largest_piece() {
        assert_eq!(avoid((-2.0, 2.0), &[]).unwrap(), (-2.0, 2.0));
        let (a, b) = avoid((-2.0, 2.0), &[-1.0]).unwrap();
        assert!((a + 0.9).abs() < 1e-15 && b == 2.0);
        // Equal halves: the right one wins.
        assert_eq!(avoid((-2.0, 2.0), &[0.0]).unwrap(), (0.1, 2.0));
        // A point just outside still pulls the end in.
        assert!((avoid((-2.0, 2.0), &[2.05]).unwrap().1 - 1.95).abs() < 1e-12);
        assert!(avoid((-2.0, 2.0), &[-2.0, -1.9, -1.8]).unwrap().0 > -1.8);
        let many: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1).collect();
        assert!(avoid((-2.0, 2.0), &many).is_err());
    }

    #[test]
    fn user_interval_must_be_clear() {
        assert!(check_clear("t", (0.5, 2.0), &[-1.0]).is_ok());
        assert!(check_clear("t", (-1.0, 2.0), &[-1.0]).is_err());
    }

    #[test]
    fn scan_finds_zeros_and_holes() {
        let f = parse("(t - 0.5) * (t + 1.25)", &["t"]).unwrap();
        let z = scan_singular(&f, 0, (-2.0, 2.0));
        assert_eq!(z.len(), 2);
        assert!((z[0] + 1.25).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-12);
        let g = parse("log(t)", &["t"]).unwrap();
        let z = scan_singular(&g, 0, (-2.0, 2.0));
        assert!(z.iter().all(|&x| x <= 1.0 + 1e-9));
        assert!(z.iter().any(|&x| (x - 1.0).abs() < 1e-9));
    }

    #[test]
    fn conformal_box() {
        assert_eq!(conformal_half_width(0.5, &[1.0, 1.0]).unwrap(), 2.0);
        let l = conformal_half_width(-1.0, &[1.0, 1.0]).unwrap();
        assert!((l - (2f64.sqrt() - 0.1)).abs() < 1e-15);
        assert!(conformal_half_width(-1e4, &[1.0; 3]).is_err());
    }
}
