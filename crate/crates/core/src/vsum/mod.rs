//! Vector summarization: pick a weighted subset of matrix rows whose
//! weighted sum approximates the sum of all rows.
//!
//! Five interchangeable backends are provided. All of them take the matrix
//! by rows and return a [`Coreset`] whose `vsum_error` is the squared
//! Euclidean distance between the full and the weighted row sums.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::data::{Coreset, RowMatrix};
use crate::error::{Error, Result};

mod caratheodory;
mod frank_wolfe;
mod median_of_means;
mod sensitivity;

pub use caratheodory::caratheodory;
pub use frank_wolfe::frank_wolfe;
pub use median_of_means::{geometric_median, median_of_means};
pub use sensitivity::{one_mean_sensitivities, sensitivity_sampling, uniform_sampling, Sensitivities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Caratheodory,
    FrankWolfe,
    MedianOfMeans,
    Sensitivity,
    Uniform,
}

impl Backend {
    pub const ALL: [Backend; 5] = [
        Backend::Caratheodory,
        Backend::FrankWolfe,
        Backend::MedianOfMeans,
        Backend::Sensitivity,
        Backend::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Caratheodory => "caratheodory",
            Backend::FrankWolfe => "frank_wolfe",
            Backend::MedianOfMeans => "median_of_means",
            Backend::Sensitivity => "sensitivity",
            Backend::Uniform => "uniform",
        }
    }

    /// Backends whose output depends on a random draw.
    pub fn is_randomized(self) -> bool {
        matches!(self, Backend::MedianOfMeans | Backend::Sensitivity | Backend::Uniform)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown backend `{s}`")))
    }
}

/// Parameters for one summarization call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsumRequest {
    pub backend: Backend,
    /// Target coreset size. Caratheodory ignores it: its size is at most
    /// `columns + 1`.
    pub tau: usize,
    /// Approximation goal; recorded, not enforced.
    pub epsilon: f64,
    /// Failure probability for randomized backends.
    pub delta: f64,
    pub seed: u64,
}

impl VsumRequest {
    pub fn new(backend: Backend, tau: usize, seed: u64) -> Self {
        VsumRequest { backend, tau, epsilon: 0.0, delta: 0.1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::Config("tau must be >= 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        if self.backend.is_randomized() && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Run the requested backend and record the measured error on the coreset.
pub fn summarize(matrix: &RowMatrix, request: &VsumRequest) -> Result<Coreset> {
    request.validate()?;
    if matrix.n_cols() == 0 {
        return Err(Error::Config("cannot summarize a matrix without columns".into()));
    }
    let tau = request.tau;
    let coreset = match request.backend {
        Backend::Caratheodory => caratheodory(matrix, request.seed),
        Backend::FrankWolfe => frank_wolfe(matrix, tau),
        Backend::MedianOfMeans => median_of_means(matrix, tau, request.delta, request.seed),
        Backend::Sensitivity => sensitivity_sampling(matrix, tau, request.delta, request.seed),
        Backend::Uniform => uniform_sampling(matrix, tau, request.seed),
    };
    Ok(coreset)
}

/// `|| sum_i M_i - sum_{j in I} v_j M_j ||^2`.
pub fn vsum_error(matrix: &RowMatrix, coreset: &Coreset) -> f64 {
    let full = matrix.row_sum();
    let diff: Vec<f64> = full.iter().zip(weighted_row_sum(matrix, coreset)).map(|(a, b)| a - b).collect();
    crate::linalg::sq_norm(&diff)
}

/// Weighted sum of the selected rows.
pub fn weighted_row_sum(matrix: &RowMatrix, coreset: &Coreset) -> Vec<f64> {
    let mut acc = vec![0.0; matrix.n_cols()];
    for (i, w) in coreset.iter() {
        for (a, v) in acc.iter_mut().zip(matrix.row(i)) {
            *a += w * v;
        }
    }
    acc
}

pub(crate) fn finish(matrix: &RowMatrix, mut coreset: Coreset) -> Coreset {
    coreset.vsum_error = vsum_error(matrix, &coreset);
    coreset
}

pub(crate) fn mean_row(matrix: &RowMatrix) -> Vec<f64> {
    let n = matrix.n_rows() as f64;
    matrix.row_sum().into_iter().map(|s| s / n).collect()
}
