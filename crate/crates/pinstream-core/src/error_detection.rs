//! Rule-based detection of four common bowling errors by comparing a throw
//! against template statistics: gait speed off (E1), backswing amplitude off
//! (E2), and arm/leg desynchronization at the final (E3) or an early (E4)
//! foot contact. A flag raises only when the deviation strictly exceeds its
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::Template;
use crate::segment::ThrowRecord;

/// Per-error deviation limits; the coach owns these, so they travel with the
/// template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorThresholds {
    /// Max allowed per-stride average-velocity deviation, m/s.
    pub eps1: f64,
    /// Max allowed backswing-peak deviation, rad.
    pub eps2: f64,
    /// Max allowed swing-angle deviation at the last stride's contact, rad.
    pub eps3: f64,
    /// Max allowed swing-angle deviation at the designated early contact, rad.
    pub eps4: f64,
    /// 1-based ordinal of the stride whose contact E4 inspects; the third
    /// step of the five-step approach corresponds to the second detected
    /// stride.
    pub error4_stride: usize,
}

impl Default for ErrorThresholds {
    fn default() -> Self {
        ErrorThresholds { eps1: 0.3, eps2: 0.17, eps3: 0.15, eps4: 0.15, error4_stride: 2 }
    }
}

/// Outcome of the four detectors with the measured deviations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorFlags {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e4: bool,
    /// Per-stride velocity deviations behind E1.
    pub d1: Vec<f64>,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl ErrorFlags {
    pub fn any(&self) -> bool {
        self.e1 || self.e2 || self.e3 || self.e4
    }
}

fn mean<'a, I: Iterator<Item = &'a f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in iter {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Runs all four detectors for one throw against the template set. Every
/// template must have the throw's stride count; deviations compare against
/// the mean template statistic.
pub fn detect_all(
    rec: &ThrowRecord,
    templates: &[Template],
    thresholds: &ErrorThresholds,
    unwrap_margin: f64,
) -> Result<ErrorFlags> {
    if templates.is_empty() {
        return Err(Error::InvalidInput("no templates".into()));
    }
    let strides = rec.gait.strides.len();
    for t in templates {
        if t.strides.len() != strides {
            return Err(Error::DimensionMismatch { left: t.strides.len(), right: strides });
        }
    }
    if thresholds.error4_stride == 0 || thresholds.error4_stride > strides {
        return Err(Error::InvalidInput(format!(
            "error4 stride ordinal {} outside 1..={strides}",
            thresholds.error4_stride
        )));
    }

    // E1: per-stride average velocity vs the template mean.
    let mut d1 = Vec::with_capacity(strides);
    for k in 0..strides {
        let tpl = mean(templates.iter().map(|t| &t.strides[k].avg_velocity));
        d1.push((rec.gait.avg_velocity[k] - tpl).abs());
    }
    let e1 = d1.iter().any(|&d| d > thresholds.eps1);

    let centered = rec.centered_swing(unwrap_margin);

    // E2: backswing peak (maximum swing angle of the throw).
    let a_max = centered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d2 = (a_max - mean(templates.iter().map(|t| &t.a_max))).abs();
    let e2 = d2 > thresholds.eps2;

    // E3: swing angle at the final stride's initial contact.
    let last = strides - 1;
    let d3 = contact_deviation(rec, templates, &centered, last)?;
    let e3 = d3 > thresholds.eps3;

    // E4: same measurement at the designated early stride.
    let d4 = contact_deviation(rec, templates, &centered, thresholds.error4_stride - 1)?;
    let e4 = d4 > thresholds.eps4;

    Ok(ErrorFlags { e1, e2, e3, e4, d1, d2, d3, d4 })
}

fn contact_deviation(
    rec: &ThrowRecord,
    templates: &[Template],
    centered: &[f64],
    k: usize,
) -> Result<f64> {
    let ic = rec.gait.strides[k].ic_idx;
    if ic >= centered.len() {
        return Err(Error::Internal("contact index outside segment".into()));
    }
    let tpl = mean(templates.iter().map(|t| &t.strides[k].a_contact));
    Ok((centered[ic] - tpl).abs())
}
