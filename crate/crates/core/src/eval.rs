//! Metrics: optimal-solution approximation error, test accuracy with a
//! confusion matrix, and R^2.

use serde::{Deserialize, Serialize};

use crate::data::{Coreset, Dataset, Query, Task};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::losses::{eval_loss_column, LossFunction};
use crate::rng::rng_from_seed;
use crate::sampling::uniform_indices;
use crate::solvers::{solve_weighted, SolverConfig};
use crate::vsum::Backend;

/// Total loss of `query` over the whole dataset.
pub fn total_loss(dataset: &Dataset, loss: &dyn LossFunction, query: &Query) -> Result<f64> {
    Ok(eval_loss_column(loss, dataset, query)?.iter().sum())
}

/// Full-data solution `x*_P` and its total loss.
pub fn full_data_reference(dataset: &Dataset, loss: &dyn LossFunction, task: Task, config: &SolverConfig) -> Result<(Query, f64)> {
    let out = solve_weighted(task, dataset, &Coreset::identity(dataset.n(), Backend::Uniform), config)?;
    let total = total_loss(dataset, loss, &out.query)?;
    Ok((out.query, total))
}

/// `|sum_i f(p_i, x*_I) - sum_i f(p_i, x*_P)|` with both solutions scored on
/// the full data and solved with the same configuration.
pub fn approximation_error(
    dataset: &Dataset,
    loss: &dyn LossFunction,
    task: Task,
    coreset: &Coreset,
    config: &SolverConfig,
) -> Result<f64> {
    let (_, reference) = full_data_reference(dataset, loss, task, config)?;
    approximation_error_against(dataset, loss, task, coreset, config, reference)
}

/// As [`approximation_error`], with the full-data total loss precomputed.
pub fn approximation_error_against(
    dataset: &Dataset,
    loss: &dyn LossFunction,
    task: Task,
    coreset: &Coreset,
    config: &SolverConfig,
    reference: f64,
) -> Result<f64> {
    let out = solve_weighted(task, dataset, coreset, config)?;
    Ok((total_loss(dataset, loss, &out.query)? - reference).abs())
}

/// Sign prediction of a linear classifier; a zero score predicts +1.
pub fn predict_sign(query: &Query, point: &[f64]) -> f64 {
    if dot(query.weights(), point) + query.intercept() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// Rows are the actual class, columns the predicted one, ordered (-1, +1):
    /// `[[TN, FP], [FN, TP]]`.
    pub confusion: [[u64; 2]; 2],
}

pub fn classification_metrics(test: &Dataset, query: &Query) -> Result<ClassificationReport> {
    if !query.kind.is_classification() {
        return Err(Error::WrongTask { task: query.kind.to_string(), what: "classification metrics".into() });
    }
    test.check_task(query.kind)?;
    let mut confusion = [[0u64; 2]; 2];
    for (i, p) in test.points().enumerate() {
        let actual = usize::from(test.label(i).unwrap_or(0.0) > 0.0);
        let predicted = usize::from(predict_sign(query, p) > 0.0);
        confusion[actual][predicted] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(ClassificationReport { accuracy: correct as f64 / test.n() as f64, confusion })
}

/// Coefficient of determination `1 - SS_res / SS_tot` of a linear model.
pub fn r_squared(test: &Dataset, query: &Query) -> Result<f64> {
    if query.kind != Task::LinearRegression {
        return Err(Error::WrongTask { task: query.kind.to_string(), what: "R^2".into() });
    }
    let labels = test.labels().ok_or_else(|| Error::InvalidDataset("R^2 needs labels".into()))?;
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    let ss_tot: f64 = labels.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidDataset("labels have zero variance".into()));
    }
    let ss_res: f64 = test
        .points()
        .zip(labels)
        .map(|(p, y)| (dot(query.weights(), p) + query.intercept() - y).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean and population standard deviation of per-trial values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Summary { values, mean: f64::NAN, std: f64::NAN };
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k).sqrt();
        Summary { values, mean, std }
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        if k == 0 {
            f64::NAN
        } else if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        }
    }
}

/// Seeded 80/20 train/test split, stratified by label for classification.
pub fn train_test_split(dataset: &Dataset, task: Task, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let n = dataset.n();
    let mut rng = rng_from_seed(seed);
    let mut test = Vec::new();
    match dataset.labels() {
        Some(labels) if task.is_classification() => {
            for class in [-1.0, 1.0] {
                let members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                let k = (members.len() as f64 * test_fraction).round() as usize;
                test.extend(uniform_indices(members.len(), k, &mut rng).into_iter().map(|j| members[j]));
            }
            test.sort_unstable();
        }
        _ => {
            let k = (n as f64 * test_fraction).round() as usize;
            test = uniform_indices(n, k, &mut rng);
        }
    }
    let mut in_test = vec![false; n];
    test.iter().for_each(|&i| in_test[i] = true);
    let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    (dataset.subset(&train), dataset.subset(&test))
}
