//! Boundary interaction strength `sigma(y)` on `[0, d]`.
//!
//! Positive values are attractive (they lower the quadratic form), negative
//! values repulsive. The same profile acts on both axis legs: on `x = 0` it
//! is evaluated at `y`, on `y = 0` at `x`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaProfile {
    Constant { value: f64 },
    /// `values.len() == breakpoints.len() + 1`; piece `k` covers
    /// `[breakpoints[k-1], breakpoints[k])`.
    PiecewiseConstant { d: f64, breakpoints: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation between `(y, value)` samples spanning `[0, d]`.
    SampledTable { samples: Vec<(f64, f64)> },
}

impl SigmaProfile {
    pub fn constant(value: f64) -> Self {
        SigmaProfile::Constant { value }
    }

    pub fn piecewise(d: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b < d) {
                return Err(Error::InvalidInput(format!(
                    "breakpoints must increase strictly inside (0, {d})"
                )));
            }
            prev = b;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("profile values must be finite".into()));
        }
        Ok(SigmaProfile::PiecewiseConstant { d, breakpoints, values })
    }

    pub fn sampled(samples: Vec<(f64, f64)>, d: f64) -> Result<Self> {
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::NonMonotoneSamples { line: k + 2 });
            }
        }
        let (lo, hi) = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) if samples.len() >= 2 => (a.0, b.0),
            _ => {
                return Err(Error::InvalidInput(
                    "a sampled profile needs at least two samples".into(),
                ))
            }
        };
        let tol = 1e-12 * d.max(1.0);
        if lo.abs() > tol || (hi - d).abs() > tol {
            return Err(Error::RangeMismatch { lo, hi, d });
        }
        if samples.iter().any(|s| !s.1.is_finite()) {
            return Err(Error::InvalidInput("profile values must be finite".into()));
        }
        Ok(SigmaProfile::SampledTable { samples })
    }

    /// Right end of the interval the profile is defined on, if it carries one.
    pub(crate) fn extent(&self) -> Option<f64> {
        match self {
            SigmaProfile::Constant { .. } => None,
            SigmaProfile::PiecewiseConstant { d, .. } => Some(*d),
            SigmaProfile::SampledTable { samples } => samples.last().map(|s| s.0),
        }
    }

    /// `sigma(y)` for `y` in `[0, d]`.
    pub fn eval(&self, y: f64, d: f64) -> Result<f64> {
        let d = self.extent().unwrap_or(d);
        let tol = 1e-12 * d.max(1.0);
        if !(y >= -tol && y <= d + tol) {
            return Err(Error::OutOfDomain { y, d });
        }
        Ok(self.eval_clamped(y.clamp(0.0, d)))
    }

    pub(crate) fn eval_clamped(&self, y: f64) -> f64 {
        match self {
            SigmaProfile::Constant { value } => *value,
            SigmaProfile::PiecewiseConstant { breakpoints, values, .. } => {
                let k = breakpoints.partition_point(|&b| b <= y);
                values[k]
            }
            SigmaProfile::SampledTable { samples } => {
                let k = samples.partition_point(|s| s.0 <= y);
                if k == 0 {
                    return samples[0].1;
                }
                if k == samples.len() {
                    return samples[k - 1].1;
                }
                let (y0, v0) = samples[k - 1];
                let (y1, v1) = samples[k];
                v0 + (v1 - v0) * (y - y0) / (y1 - y0)
            }
        }
    }

    /// Points strictly inside `(a, b)` where the profile is not smooth.
    pub(crate) fn kinks_between(&self, a: f64, b: f64) -> Vec<f64> {
        let inner = |y: &f64| *y > a && *y < b;
        match self {
            SigmaProfile::Constant { .. } => Vec::new(),
            SigmaProfile::PiecewiseConstant { breakpoints, .. } => {
                breakpoints.iter().copied().filter(inner).collect()
            }
            SigmaProfile::SampledTable { samples } => {
                samples.iter().map(|s| s.0).filter(inner).collect()
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            SigmaProfile::Constant { value } => value.abs(),
            SigmaProfile::PiecewiseConstant { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
            SigmaProfile::SampledTable { samples } => {
                samples.iter().fold(0.0, |m, s| m.max(s.1.abs()))
            }
        }
    }

    /// Multiply every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            SigmaProfile::Constant { value } => SigmaProfile::Constant { value: value * factor },
            SigmaProfile::PiecewiseConstant { d, breakpoints, values } => {
                SigmaProfile::PiecewiseConstant {
                    d: *d,
                    breakpoints: breakpoints.clone(),
                    values: values.iter().map(|v| v * factor).collect(),
                }
            }
            SigmaProfile::SampledTable { samples } => SigmaProfile::SampledTable {
                samples: samples.iter().map(|&(y, v)| (y, v * factor)).collect(),
            },
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            SigmaProfile::Constant { value } => *value >= 0.0,
            SigmaProfile::PiecewiseConstant { values, .. } => values.iter().all(|v| *v >= 0.0),
            SigmaProfile::SampledTable { samples } => samples.iter().all(|s| s.1 >= 0.0),
        }
    }
}

/// Parse a two-column `y value` table covering `[0, d]`. Blank lines and
/// `#` comments are skipped.
pub fn parse_profile(text: &str, d: f64) -> Result<SigmaProfile> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: k + 1,
                msg: format!("{s:?}: {e}"),
            })
        };
        samples.push((parse(cols[0])?, parse(cols[1])?));
        lines.push(k + 1);
    }
    for (w, line) in samples.windows(2).zip(&lines[1..]) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::NonMonotoneSamples { line: *line });
        }
    }
    SigmaProfile::sampled(samples, d)
}

pub fn load_profile(path: impl AsRef<Path>, d: f64) -> Result<SigmaProfile> {
    let text = std::fs::read_to_string(path)?;
    parse_profile(&text, d)
}
