//! The 21-dimensional feature vector fed to the skill classifier: four
//! statistics over three throw signals plus per-stride timing, and the
//! z-score scaler persisted with trained models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::ThrowRecord;

pub const FEATURE_COUNT: usize = 21;

/// Column order is part of the on-disk schema; do not reorder.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "swing_max",
    "swing_mean",
    "swing_std",
    "swing_rms",
    "accel_max",
    "accel_mean",
    "accel_std",
    "accel_rms",
    "velocity_max",
    "velocity_mean",
    "velocity_std",
    "velocity_rms",
    "stride1_swing_s",
    "stride1_stance_s",
    "stride1_ratio",
    "stride2_swing_s",
    "stride2_stance_s",
    "stride2_ratio",
    "stride3_swing_s",
    "stride3_stance_s",
    "stride3_ratio",
];

/// Skill classes in their fixed order (also the tie-break order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillLabel {
    Novice,
    Intermediate,
    Expert,
}

pub const ALL_LABELS: [SkillLabel; 3] =
    [SkillLabel::Novice, SkillLabel::Intermediate, SkillLabel::Expert];

impl SkillLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkillLabel::Novice => "novice",
            SkillLabel::Intermediate => "intermediate",
            SkillLabel::Expert => "expert",
        }
    }
}

impl std::str::FromStr for SkillLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "novice" => Ok(SkillLabel::Novice),
            "intermediate" => Ok(SkillLabel::Intermediate),
            "expert" => Ok(SkillLabel::Expert),
            other => Err(Error::InvalidInput(format!("unknown skill label `{other}`"))),
        }
    }
}

impl std::fmt::Display for SkillLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled feature row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRow {
    pub features: Vec<f64>,
    pub label: SkillLabel,
    pub athlete_id: String,
}

fn stats(x: &[f64]) -> [f64; 4] {
    let n = x.len() as f64;
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = x.iter().sum::<f64>() / n;
    // Population standard deviation: divide by N, square inside the sum.
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    [max, mean, var.sqrt(), rms]
}

/// Extracts the 21 features of one segmented throw: max/mean/std/RMS over the
/// swing angle, the raw acceleration magnitude and the concatenated
/// per-stride velocity traces, then swing period, stance period and their
/// ratio for each of the three strides.
pub fn extract(rec: &ThrowRecord, unwrap_margin: f64) -> Result<Vec<f64>> {
    let swing = rec.centered_swing(unwrap_margin);
    if swing.is_empty() {
        return Err(Error::EmptySeries);
    }
    let velocity: Vec<f64> = rec.gait.velocity.iter().flatten().cloned().collect();
    if velocity.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    out.extend_from_slice(&stats(&swing));
    out.extend_from_slice(&stats(&rec.gait.mag));
    out.extend_from_slice(&stats(&velocity));
    for k in 0..3 {
        out.push(rec.gait.swing_period[k]);
        out.push(rec.gait.stance_period[k]);
        out.push(rec.gait.ratio[k]);
    }
    debug_assert_eq!(out.len(), FEATURE_COUNT);
    for (i, v) in out.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::CorruptSample {
                index: i,
                reason: format!("feature {} is not finite", FEATURE_NAMES[i]),
            });
        }
    }
    Ok(out)
}

/// Per-column z-score parameters. A zero-variance column keeps `std = 0` as a
/// sentinel and passes through unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Scaler> {
        let dim = rows.first().ok_or(Error::EmptySeries)?.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { left: r.len(), right: dim });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
        }
        Ok(Scaler { mean, std })
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { left: row.len(), right: self.mean.len() });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s == 0.0 { *v } else { (v - m) / s })
            .collect())
    }

    pub fn inverse(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { left: row.len(), right: self.mean.len() });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s == 0.0 { *v } else { v * s + m })
            .collect())
    }
}
