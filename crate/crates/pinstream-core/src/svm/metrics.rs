//! Classification metrics: per-class one-vs-rest precision/recall/F1, macro
//! and support-weighted averages, confusion matrix. Undefined ratios score 0
//! and raise a warning flag instead of poisoning the averages with NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SkillLabel, ALL_LABELS};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SkillLabel,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    /// confusion[actual][predicted], rows/columns in fixed label order.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// Set when any precision/recall/F1 denominator was zero.
    pub zero_division: bool,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(actual: &[SkillLabel], predicted: &[SkillLabel]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch { left: actual.len(), right: predicted.len() });
    }
    if actual.is_empty() {
        return Err(Error::EmptySeries);
    }
    let idx = |l: SkillLabel| ALL_LABELS.iter().position(|&x| x == l).unwrap();
    let mut confusion = vec![vec![0usize; 3]; 3];
    for (&a, &p) in actual.iter().zip(predicted) {
        confusion[idx(a)][idx(p)] += 1;
    }

    let mut zero_division = false;
    let mut per_class = Vec::with_capacity(3);
    for (k, &label) in ALL_LABELS.iter().enumerate() {
        let tp = confusion[k][k];
        let fp: usize = (0..3).filter(|&r| r != k).map(|r| confusion[r][k]).sum();
        let fn_: usize = (0..3).filter(|&c| c != k).map(|c| confusion[k][c]).sum();
        let support = tp + fn_;
        let precision = ratio(tp, tp + fp, &mut zero_division);
        let recall = ratio(tp, tp + fn_, &mut zero_division);
        let f1 = if precision + recall == 0.0 {
            zero_division = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics { label, support, tp, fp, fn_, precision, recall, f1 });
    }

    let n = actual.len() as f64;
    let correct: usize = (0..3).map(|k| confusion[k][k]).sum();
    let total_support: f64 = per_class.iter().map(|c| c.support as f64).sum();
    let macro_of = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    let weighted_of = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total_support
    };
    Ok(MetricsReport {
        confusion,
        accuracy: correct as f64 / n,
        macro_precision: macro_of(|c| c.precision),
        macro_recall: macro_of(|c| c.recall),
        macro_f1: macro_of(|c| c.f1),
        weighted_precision: weighted_of(|c| c.precision),
        weighted_recall: weighted_of(|c| c.recall),
        weighted_f1: weighted_of(|c| c.f1),
        per_class,
        zero_division,
    })
}
