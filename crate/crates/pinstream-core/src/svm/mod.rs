//! RBF-kernel support vector machines trained from scratch with sequential
//! minimal optimization, combined one-vs-one for the three skill classes.

mod grid;
mod metrics;
mod smo;

pub use grid::{
    grid_search_cv, stratified_folds, train_skill_model, train_test_split, CvCell,
    GridSearchParams, GridSearchResult, TrainOutcome,
};
pub use metrics::{metrics, ClassMetrics, MetricsReport};
pub use smo::{smo_train, SmoModel, SmoParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Scaler, SkillLabel};

/// Gaussian radial basis kernel exp(−γ‖x−y‖²).
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { left: x.len(), right: y.len() });
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d2).exp())
}

/// The fixed pairing order of the three one-vs-one classifiers. The first
/// label of each pair is the positive class.
pub const PAIRS: [(SkillLabel, SkillLabel); 3] = [
    (SkillLabel::Novice, SkillLabel::Intermediate),
    (SkillLabel::Novice, SkillLabel::Expert),
    (SkillLabel::Intermediate, SkillLabel::Expert),
];

/// One trained binary classifier over scaled features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarySvm {
    pub pos: SkillLabel,
    pub neg: SkillLabel,
    pub gamma: f64,
    pub c: f64,
    /// Decision bias; f(x) = Σ coeffᵢ·k(svᵢ, x) − bias.
    pub bias: f64,
    /// λᵢyᵢ per support vector.
    pub coeffs: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
}

impl BinarySvm {
    /// Trains on pre-scaled rows; `y` holds ±1 aligned with `rows`.
    pub fn train(
        rows: &[Vec<f64>],
        y: &[f64],
        pos: SkillLabel,
        neg: SkillLabel,
        c: f64,
        gamma: f64,
        params: &SmoParams,
    ) -> Result<BinarySvm> {
        let sol = smo_train(rows, y, c, gamma, params)?;
        let mut coeffs = Vec::new();
        let mut support_vectors = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 1e-12 {
                coeffs.push(a * y[i]);
                support_vectors.push(rows[i].clone());
            }
        }
        Ok(BinarySvm { pos, neg, gamma, c, bias: sol.bias, coeffs, support_vectors })
    }

    /// Decision value f(x) = Σ λᵢyᵢ k(xᵢ, x) − b.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let mut f = -self.bias;
        for (c, sv) in self.coeffs.iter().zip(&self.support_vectors) {
            f += c * rbf_kernel(sv, x, self.gamma)?;
        }
        Ok(f)
    }

    /// Positive side is the first class of the pair; a tie goes to the other.
    pub fn predict(&self, x: &[f64]) -> Result<SkillLabel> {
        Ok(if self.decision(x)? > 0.0 { self.pos } else { self.neg })
    }
}

/// Full skill model: persisted scaler plus the three pairwise classifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub scaler: Scaler,
    pub classifiers: Vec<BinarySvm>,
    pub c: f64,
    pub gamma: f64,
}

impl SvmModel {
    pub fn predict(&self, features: &[f64]) -> Result<SkillLabel> {
        let x = self.scaler.transform(features)?;
        ovo_predict(&self.classifiers, &x)
    }
}

/// Trains the three pairwise classifiers on pre-scaled rows.
pub fn train_ovo(
    rows: &[Vec<f64>],
    labels: &[SkillLabel],
    c: f64,
    gamma: f64,
    params: &SmoParams,
) -> Result<Vec<BinarySvm>> {
    let mut out = Vec::with_capacity(PAIRS.len());
    for &(pos, neg) in &PAIRS {
        let mut sub = Vec::new();
        let mut y = Vec::new();
        for (r, &l) in rows.iter().zip(labels) {
            if l == pos || l == neg {
                sub.push(r.clone());
                y.push(if l == pos { 1.0 } else { -1.0 });
            }
        }
        out.push(BinarySvm::train(&sub, &y, pos, neg, c, gamma, params)?);
    }
    Ok(out)
}

/// Majority vote over the pairwise classifiers. A full three-way tie falls
/// back to the largest sum of absolute decision values among the votes cast
/// for each label, then to the fixed label order.
pub fn ovo_predict(classifiers: &[BinarySvm], x: &[f64]) -> Result<SkillLabel> {
    use crate::features::ALL_LABELS;
    let mut votes = [0usize; 3];
    let mut weight = [0.0f64; 3];
    for clf in classifiers {
        let f = clf.decision(x)?;
        let label = if f > 0.0 { clf.pos } else { clf.neg };
        let slot = ALL_LABELS.iter().position(|&l| l == label).unwrap();
        votes[slot] += 1;
        weight[slot] += f.abs();
    }
    let best = (0..3)
        .max_by(|&a, &b| {
            votes[a]
                .cmp(&votes[b])
                .then(weight[a].partial_cmp(&weight[b]).unwrap())
                // Fixed label order wins exact ties; earlier label preferred.
                .then(b.cmp(&a))
        })
        .unwrap();
    Ok(ALL_LABELS[best])
}
