//! Throw quality: dynamic time warping between swing-angle segments and the
//! per-phase quality degree against one or more coach templates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_detection::ErrorThresholds;
use crate::segment::ThrowRecord;

/// Local cost between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LocalCost {
    #[default]
    L1,
    L2,
}

impl LocalCost {
    fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            LocalCost::L1 => (a - b).abs(),
            LocalCost::L2 => (a - b) * (a - b),
        }
    }
}

/// Classic O(N·M) dynamic time warping distance with match/insert/delete
/// steps, no windowing constraint unless `band` is given (|i−j| ≤ band), and
/// no path normalization.
pub fn dtw(a: &[f64], b: &[f64], cost: LocalCost, band: Option<usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, &ai) in a.iter().enumerate() {
        for j in 0..m {
            if let Some(w) = band {
                if i.abs_diff(j) > w {
                    cur[j] = f64::INFINITY;
                    continue;
                }
            }
            let c = cost.eval(ai, b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut v = f64::INFINITY;
                if i > 0 {
                    v = v.min(prev[j]);
                }
                if j > 0 {
                    v = v.min(cur[j - 1]);
                }
                if i > 0 && j > 0 {
                    v = v.min(prev[j - 1]);
                }
                v
            };
            cur[j] = c + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[m - 1];
    if !d.is_finite() {
        return Err(Error::InvalidInput("band too narrow for series lengths".into()));
    }
    Ok(d)
}

/// One stride of a coach template.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateStride {
    /// Swing-angle segment over [IS, IC], radians (re-centered representation).
    pub angle: Vec<f64>,
    pub avg_velocity: f64,
    /// Swing angle at the stride's initial contact.
    pub a_contact: f64,
    /// Mean DTW distance between this segment and simulator perturbations of
    /// it; calibrates single-template quality degrees. Unset means the
    /// template was never calibrated.
    pub ad_ref: Option<f64>,
}

/// Coach throw template: per-stride angle segments plus the summary stats the
/// error detectors compare against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Template {
    pub style: String,
    pub strides: Vec<TemplateStride>,
    /// Maximum swing angle over the whole template throw.
    pub a_max: f64,
    pub thresholds: ErrorThresholds,
}

impl Template {
    /// Builds a template from an analyzed coach throw.
    pub fn from_throw(rec: &ThrowRecord, unwrap_margin: f64, thresholds: ErrorThresholds) -> Self {
        let centered = rec.centered_swing(unwrap_margin);
        let a_max = centered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let strides = rec
            .gait
            .strides
            .iter()
            .enumerate()
            .map(|(k, s)| TemplateStride {
                angle: rec.phase_angles(k, unwrap_margin),
                avg_velocity: rec.gait.avg_velocity[k],
                a_contact: centered[s.ic_idx],
                ad_ref: None,
            })
            .collect();
        Template { style: "five-step".into(), strides, a_max, thresholds }
    }

    pub fn phase_count(&self) -> usize {
        self.strides.len()
    }
}

/// Quality degree of one phase given distances to S templates.
///
/// For S ≥ 2 the best template is set aside and the score compares it with
/// the mean of the rest: QD = (AD − MD)/AD × 100. For S = 1 the calibrated
/// reference distance stands in for AD.
pub fn quality_degree(distances: &[f64], ad_ref: Option<f64>) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::EmptySeries);
    }
    let qd = if distances.len() == 1 {
        let ad = ad_ref.ok_or(Error::MissingCalibration)?;
        if ad <= 0.0 {
            return Err(Error::InvalidInput("AD_ref must be positive".into()));
        }
        (1.0 - distances[0] / ad) * 100.0
    } else {
        let min_pos = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let md = distances[min_pos];
        let rest: f64 = distances
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != min_pos)
            .map(|(_, d)| d)
            .sum();
        let ad = rest / (distances.len() - 1) as f64;
        if ad <= 0.0 {
            // Every distance is zero: the throw reproduces the templates.
            100.0
        } else {
            (ad - md) / ad * 100.0
        }
    };
    Ok(qd.clamp(0.0, 100.0))
}

/// Per-phase quality assessment of one throw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    /// Quality degree per phase, 0–100.
    pub qd: Vec<f64>,
    /// DTW distance per phase per template.
    pub distances: Vec<Vec<f64>>,
    pub template_count: usize,
}

/// Scores every phase of `rec` against the template set. All templates must
/// have the same phase count as the throw; with a single template its strides
/// must carry AD_ref calibration.
pub fn assess_throw(
    rec: &ThrowRecord,
    templates: &[Template],
    cost: LocalCost,
    band: Option<usize>,
    unwrap_margin: f64,
) -> Result<QualityReport> {
    if templates.is_empty() {
        return Err(Error::InvalidInput("no templates".into()));
    }
    let phases = rec.phase_bounds.len();
    for t in templates {
        if t.phase_count() != phases {
            return Err(Error::DimensionMismatch { left: t.phase_count(), right: phases });
        }
    }
    let mut qd = Vec::with_capacity(phases);
    let mut all = Vec::with_capacity(phases);
    for k in 0..phases {
        let user = rec.phase_angles(k, unwrap_margin);
        let mut distances = Vec::with_capacity(templates.len());
        for t in templates {
            distances.push(dtw(&user, &t.strides[k].angle, cost, band)?);
        }
        let ad_ref = if templates.len() == 1 { templates[0].strides[k].ad_ref } else { None };
        qd.push(quality_degree(&distances, ad_ref)?);
        all.push(distances);
    }
    Ok(QualityReport { qd, distances: all, template_count: templates.len() })
}

/// Mean DTW distance of a template segment to a set of perturbed variants;
/// the AD_ref calibration constant stored at template install time.
pub fn calibrate_ad_ref(
    template_angle: &[f64],
    perturbations: &[Vec<f64>],
    cost: LocalCost,
    band: Option<usize>,
) -> Result<f64> {
    if perturbations.is_empty() {
        return Err(Error::InvalidInput("no perturbations for calibration".into()));
    }
    let mut sum = 0.0;
    for p in perturbations {
        sum += dtw(template_angle, p, cost, band)?;
    }
    Ok(sum / perturbations.len() as f64)
}
