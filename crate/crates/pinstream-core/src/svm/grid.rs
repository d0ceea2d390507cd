//! Model selection: seeded stratified k-fold cross validation over the
//! (C, γ) grid scored by mean macro-F1, and the end-to-end training pipeline
//! with a held-out stratified test split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Scaler, SkillLabel};

use super::{metrics, train_ovo, MetricsReport, SmoParams, SvmModel};

#[derive(Debug, Clone)]
pub struct GridSearchParams {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub smo: SmoParams,
}

impl Default for GridSearchParams {
    fn default() -> Self {
        GridSearchParams {
            c_grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0],
            gamma_grid: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            folds: 10,
            seed: 42,
            smo: SmoParams::default(),
        }
    }
}

/// One grid cell of the cross-validation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCell {
    pub c: f64,
    pub gamma: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
    /// Folds whose optimizer did not converge; they score 0.
    pub failed_folds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub table: Vec<CvCell>,
    pub best_c: f64,
    pub best_gamma: f64,
}

fn group_by_label(labels: &[SkillLabel]) -> Vec<(SkillLabel, Vec<usize>)> {
    use crate::features::ALL_LABELS;
    ALL_LABELS
        .iter()
        .map(|&l| (l, labels.iter().enumerate().filter(|(_, &x)| x == l).map(|(i, _)| i).collect()))
        .filter(|(_, v): &(_, Vec<usize>)| !v.is_empty())
        .collect()
}

/// Seeded stratified folds: indices of each class are shuffled and dealt
/// round-robin. A fold missing a class triggers a reshuffle with a derived
/// seed, at most 5 attempts.
pub fn stratified_folds(labels: &[SkillLabel], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || labels.len() < k {
        return Err(Error::InvalidInput(format!("cannot make {k} folds from {} rows", labels.len())));
    }
    let groups = group_by_label(labels);
    const MAX_ATTEMPTS: usize = 5;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut folds = vec![Vec::new(); k];
        for (_, idxs) in &groups {
            let mut shuffled = idxs.clone();
            shuffled.shuffle(&mut rng);
            for (pos, &i) in shuffled.iter().enumerate() {
                folds[pos % k].push(i);
            }
        }
        let complete = folds.iter().all(|fold| {
            groups.iter().all(|(l, _)| fold.iter().any(|&i| labels[i] == *l))
        });
        if complete {
            for f in &mut folds {
                f.sort_unstable();
            }
            return Ok(folds);
        }
    }
    Err(Error::StratificationFailure {
        attempts: MAX_ATTEMPTS,
        reason: "a fold never received every class".into(),
    })
}

/// Stratified train/test split; per class, round(n·test_fraction) indices go
/// to the test side after a seeded shuffle.
pub fn train_test_split(
    labels: &[SkillLabel],
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, idxs) in group_by_label(labels) {
        let mut shuffled = idxs;
        shuffled.shuffle(&mut rng);
        let n_test = (shuffled.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&shuffled[..n_test]);
        train.extend_from_slice(&shuffled[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn take<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn fold_score(
    rows: &[Vec<f64>],
    labels: &[SkillLabel],
    train_idx: &[usize],
    val_idx: &[usize],
    c: f64,
    gamma: f64,
    smo: &SmoParams,
) -> Result<Option<f64>> {
    let train_rows = take(rows, train_idx);
    let scaler = Scaler::fit(&train_rows)?;
    let scaled: Vec<Vec<f64>> =
        train_rows.iter().map(|r| scaler.transform(r)).collect::<Result<_>>()?;
    let train_labels = take(labels, train_idx);
    let classifiers = match train_ovo(&scaled, &train_labels, c, gamma, smo) {
        Ok(c) => c,
        Err(Error::ConvergenceFailure { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut predicted = Vec::with_capacity(val_idx.len());
    for &i in val_idx {
        let x = scaler.transform(&rows[i])?;
        predicted.push(super::ovo_predict(&classifiers, &x)?);
    }
    let actual = take(labels, val_idx);
    Ok(Some(metrics(&actual, &predicted)?.macro_f1))
}

/// Exhaustive grid search; cells are independent and evaluated in parallel,
/// the result is a function of (rows, labels, params) alone.
pub fn grid_search_cv(
    rows: &[Vec<f64>],
    labels: &[SkillLabel],
    params: &GridSearchParams,
) -> Result<GridSearchResult> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: rows.len(), right: labels.len() });
    }
    let folds = stratified_folds(labels, params.folds, params.seed)?;
    let cells: Vec<(f64, f64)> = params
        .c_grid
        .iter()
        .flat_map(|&c| params.gamma_grid.iter().map(move |&g| (c, g)))
        .collect();

    let table: Vec<CvCell> = cells
        .par_iter()
        .map(|&(c, gamma)| -> Result<CvCell> {
            let mut scores = Vec::with_capacity(folds.len());
            let mut failed = 0usize;
            for f in 0..folds.len() {
                let val_idx = &folds[f];
                let train_idx: Vec<usize> = folds
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != f)
                    .flat_map(|(_, x)| x.iter().copied())
                    .collect();
                match fold_score(rows, labels, &train_idx, val_idx, c, gamma, &params.smo)? {
                    Some(s) => scores.push(s),
                    None => {
                        failed += 1;
                        scores.push(0.0);
                    }
                }
            }
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            Ok(CvCell { c, gamma, mean_macro_f1: mean, std_macro_f1: var.sqrt(), failed_folds: failed })
        })
        .collect::<Result<_>>()?;

    let best = table
        .iter()
        .max_by(|a, b| {
            a.mean_macro_f1
                .partial_cmp(&b.mean_macro_f1)
                .unwrap()
                // On equal score prefer smaller C, then smaller gamma.
                .then(b.c.partial_cmp(&a.c).unwrap())
                .then(b.gamma.partial_cmp(&a.gamma).unwrap())
        })
        .ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
    Ok(GridSearchResult { best_c: best.c, best_gamma: best.gamma, table })
}

/// Result of the full training pipeline.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub grid: GridSearchResult,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Metrics of the final model on the held-out split.
    pub holdout: MetricsReport,
}

/// Stratified 80/20 split, grid search with k-fold CV on the training side,
/// final model fit at the winning (C, γ), evaluation on the held-out side.
pub fn train_skill_model(
    rows: &[Vec<f64>],
    labels: &[SkillLabel],
    params: &GridSearchParams,
    test_fraction: f64,
) -> Result<TrainOutcome> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: rows.len(), right: labels.len() });
    }
    let (train_idx, test_idx) = train_test_split(labels, test_fraction, params.seed);
    let train_rows = take(rows, &train_idx);
    let train_labels = take(labels, &train_idx);
    let grid = grid_search_cv(&train_rows, &train_labels, params)?;

    let scaler = Scaler::fit(&train_rows)?;
    let scaled: Vec<Vec<f64>> =
        train_rows.iter().map(|r| scaler.transform(r)).collect::<Result<_>>()?;
    let classifiers =
        train_ovo(&scaled, &train_labels, grid.best_c, grid.best_gamma, &params.smo)?;
    let model = SvmModel { scaler, classifiers, c: grid.best_c, gamma: grid.best_gamma };

    let mut predicted = Vec::with_capacity(test_idx.len());
    for &i in &test_idx {
        predicted.push(model.predict(&rows[i])?);
    }
    let holdout = metrics(&take(labels, &test_idx), &predicted)?;
    Ok(TrainOutcome { model, grid, train_idx, test_idx, holdout })
}
