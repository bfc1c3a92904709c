//! Importance sampling by 1-mean sensitivities, and plain uniform sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::{finish, mean_row, Backend};
use crate::data::{Coreset, RowMatrix};
use crate::linalg::sq_dist;
use crate::rng::rng_from_seed;
use crate::sampling::uniform_indices;

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities {
    pub scores: Vec<f64>,
    pub total: f64,
}

/// `s_i = 1/n + ||u_i - mu||^2 / sum_j ||u_j - mu||^2`; the second term is
/// dropped when every row equals the mean.
pub fn one_mean_sensitivities(matrix: &RowMatrix) -> Sensitivities {
    let n = matrix.n_rows();
    let mu = mean_row(matrix);
    let dev: Vec<f64> = matrix.rows().iter().map(|r| sq_dist(r, &mu)).collect();
    let spread: f64 = dev.iter().sum();
    let base = 1.0 / n as f64;
    let scores: Vec<f64> = if spread > 0.0 {
        dev.iter().map(|d| base + d / spread).collect()
    } else {
        vec![base; n]
    };
    let total = scores.iter().sum();
    Sensitivities { scores, total }
}

/// `tau` i.i.d. draws with probability `s_i / t`; each draw of row `j` adds
/// `t / (tau s_j)` to its weight, making the weighted row sum unbiased.
pub fn sensitivity_sampling(matrix: &RowMatrix, tau: usize, _delta: f64, seed: u64) -> Coreset {
    let sens = one_mean_sensitivities(matrix);
    let mut rng = rng_from_seed(seed);
    let dist = WeightedIndex::new(&sens.scores).expect("sensitivities are positive");
    let draws: Vec<(usize, f64)> = (0..tau)
        .map(|_| {
            let j = dist.sample(&mut rng);
            (j, sens.total / (tau as f64 * sens.scores[j]))
        })
        .collect();
    finish(matrix, Coreset::from_pairs(draws, Backend::Sensitivity))
}

/// `tau` distinct rows drawn uniformly, each weighted `n / tau`.
pub fn uniform_sampling(matrix: &RowMatrix, tau: usize, seed: u64) -> Coreset {
    let n = matrix.n_rows();
    let tau = tau.clamp(1, n);
    let w = n as f64 / tau as f64;
    let idx = uniform_indices(n, tau, &mut rng_from_seed(seed));
    finish(matrix, Coreset::from_pairs(idx.into_iter().map(|i| (i, w)), Backend::Uniform))
}
