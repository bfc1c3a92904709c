//! The AutoCoreset loop.
//!
//! A loss matrix is seeded with the loss columns of `m` cheap approximate
//! solutions. Each iteration summarizes the current matrix rows into a
//! coreset of target size `tau`, solves the task on that coreset, and appends
//! the new solution's loss column. The loop stops once `patience`
//! consecutive columns fail to beat the smallest column sum seen so far.

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::data::{Coreset, Dataset, IterationRecord, LossMatrix, Query, RowMatrix, RunTrace, StopReason, Task};
use crate::error::{Error, Result};
use crate::losses::{eval_loss_column, multiplicative_transform, LossFunction};
use crate::rng::{derive_seed, rng_from_seed};
use crate::solvers::{initial_solutions, solve_weighted, SolverConfig};
use crate::vsum::{summarize, vsum_error, Backend, VsumRequest};

/// Which coreset the run returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoresetMode {
    /// The coreset whose solution produced the smallest column sum.
    Optimal,
    /// The coreset of the final iteration.
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    Additive,
    /// Summarize columns rescaled by `1/sqrt(column sum)`.
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoConfig {
    pub tau: usize,
    pub m: usize,
    pub patience: usize,
    pub max_iterations: usize,
    pub backend: Backend,
    pub mode: CoresetMode,
    pub error_mode: ErrorMode,
    /// Failure probability handed to randomized backends.
    pub delta: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl AutoConfig {
    /// Defaults: 10 initial solutions, patience 7, at most 200 iterations,
    /// optimal-coreset mode, additive error.
    pub fn new(task: Task, backend: Backend, tau: usize) -> Self {
        AutoConfig {
            tau,
            m: 10,
            patience: 7,
            max_iterations: 200,
            backend,
            mode: CoresetMode::Optimal,
            error_mode: ErrorMode::Additive,
            delta: 0.1,
            seed: 0,
            solver: SolverConfig::for_task(task),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau),
            ("m", self.m),
            ("patience", self.patience),
            ("max_iterations", self.max_iterations),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        self.solver.validate()
    }
}

/// Patience bookkeeping over the sums of appended columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingState {
    pub best_sum: f64,
    /// Position (0-based) of the best sum among the observed sums.
    pub best_iteration: Option<usize>,
    pub counter: usize,
    /// Number of sums observed so far.
    pub observed: usize,
}

impl Default for StoppingState {
    fn default() -> Self {
        StoppingState { best_sum: f64::INFINITY, best_iteration: None, counter: 0, observed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// A strictly smaller sum resets the counter and becomes the best; anything
/// else increments it. Stop once the counter reaches `patience`.
pub fn stopping_update(state: StoppingState, new_sum: f64, patience: usize) -> (StoppingState, Decision) {
    let mut next = state;
    if new_sum < state.best_sum {
        next.best_sum = new_sum;
        next.best_iteration = Some(state.observed);
        next.counter = 0;
    } else {
        next.counter += 1;
    }
    next.observed += 1;
    let decision = if next.counter >= patience { Decision::Stop } else { Decision::Continue };
    (next, decision)
}

/// Output of [`autocoreset`].
#[derive(Debug, Clone)]
pub struct AutoResult {
    pub coreset: Coreset,
    pub query: Query,
    pub trace: RunTrace,
    /// Raw losses, one column per initial or discovered query.
    pub losses: LossMatrix,
    /// The matrix that was summarized: `losses` itself in additive mode, the
    /// rescaled columns in multiplicative mode.
    pub summarized: RowMatrix,
    /// Number of leading columns the returned coreset was built on.
    pub coreset_columns: usize,
}

impl AutoResult {
    /// The matrix prefix the returned coreset summarizes.
    pub fn coreset_matrix(&self) -> RowMatrix {
        self.summarized.prefix(self.coreset_columns)
    }
}

fn vsum_seed(seed: u64, iteration: usize) -> u64 {
    derive_seed(seed, &[1, iteration as u64])
}

fn solve_seed(seed: u64, iteration: usize) -> u64 {
    derive_seed(seed, &[2, iteration as u64])
}

/// Run the full loop on `dataset` with loss `loss`.
pub fn autocoreset(dataset: &Dataset, loss: &dyn LossFunction, task: Task, config: &AutoConfig) -> Result<AutoResult> {
    config.validate()?;
    if loss.task() != task {
        return Err(Error::WrongTask { task: loss.task().to_string(), what: task.to_string() });
    }
    dataset.check_task(task)?;
    let n = dataset.n();
    let multiplicative = config.error_mode == ErrorMode::Multiplicative;

    let mut losses = LossMatrix::new(n);
    let mut summarized = RowMatrix::empty(n);
    let push = |losses: &mut LossMatrix, summarized: &mut RowMatrix, col: Vec<f64>, q: Query| -> Result<f64> {
        let sum: f64 = col.iter().sum();
        if multiplicative {
            summarized.push_column(&multiplicative_transform(&col))?;
        } else {
            summarized.push_column(&col)?;
        }
        losses.append_column(&col, q)?;
        Ok(sum)
    };

    for q in initial_solutions(task, dataset, config.m, &config.solver, derive_seed(config.seed, &[0])) {
        let col = eval_loss_column(loss, dataset, &q)?;
        push(&mut losses, &mut summarized, col, q)?;
    }

    let mut state = StoppingState::default();
    let mut records = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;
    for it in 0..config.max_iterations {
        let started = Instant::now();
        let request = VsumRequest {
            backend: config.backend,
            tau: config.tau,
            epsilon: 0.0,
            delta: config.delta,
            seed: vsum_seed(config.seed, it),
        };
        let coreset = summarize(&summarized, &request)?;
        let solver = SolverConfig { seed: solve_seed(config.seed, it), ..config.solver.clone() };
        let attempt = solve_weighted(task, dataset, &coreset, &solver)
            .and_then(|out| eval_loss_column(loss, dataset, &out.query).map(|col| (out, col)));
        let (query, col, converged, failed) = match attempt {
            Ok((out, col)) => (out.query, col, out.converged, false),
            Err(_) => {
                let j = losses.n_cols() - 1;
                (losses.queries()[j].clone(), losses.column(j), false, true)
            }
        };
        let sum = push(&mut losses, &mut summarized, col, query)?;
        let (next, decision) = stopping_update(state, sum, config.patience);
        state = next;
        records.push(IterationRecord {
            iteration: it,
            column_sum: sum,
            vsum_error: coreset.vsum_error,
            coreset_size: coreset.len(),
            patience_counter: state.counter,
            best_sum: state.best_sum,
            solver_converged: converged,
            solver_failed: failed,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if decision == Decision::Stop {
            stop_reason = StopReason::Patience;
            break;
        }
    }

    let chosen = match config.mode {
        CoresetMode::Optimal => state.best_iteration.unwrap_or(0),
        CoresetMode::Last => records.len() - 1,
    };
    let coreset_columns = config.m + chosen;
    let request = VsumRequest {
        backend: config.backend,
        tau: config.tau,
        epsilon: 0.0,
        delta: config.delta,
        seed: vsum_seed(config.seed, chosen),
    };
    let coreset = summarize(&summarized.prefix(coreset_columns), &request)?;
    let solver = SolverConfig { seed: solve_seed(config.seed, chosen), ..config.solver.clone() };
    let query = match solve_weighted(task, dataset, &coreset, &solver) {
        Ok(out) => out.query,
        Err(_) => losses.queries()[coreset_columns].clone(),
    };
    Ok(AutoResult {
        coreset,
        query,
        trace: RunTrace {
            initial_columns: config.m,
            records,
            best_iteration: state.best_iteration,
            stop_reason,
        },
        losses,
        summarized,
        coreset_columns,
    })
}

/// Largest per-column gap `|sum_i M_ij - sum_l v_l M_lj|` over all columns.
pub fn max_column_gap(matrix: &RowMatrix, coreset: &Coreset) -> f64 {
    let full = matrix.row_sum();
    let part = crate::vsum::weighted_row_sum(matrix, coreset);
    full.iter().zip(&part).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Every column of `matrix` is approximated within the coreset's measured
/// summarization error: `gap_j <= sqrt(vsum_error) + slack`.
pub fn column_bound_holds(matrix: &RowMatrix, coreset: &Coreset, slack: f64) -> bool {
    max_column_gap(matrix, coreset) <= vsum_error(matrix, coreset).sqrt() + slack
}

/// Nonnegative weights summing to one, one per matrix column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexWeights(Vec<f64>);

impl ConvexWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::NotOnSimplex("entries must be finite and >= 0".into()));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotOnSimplex(format!("entries sum to {total}")));
        }
        Ok(ConvexWeights(alpha))
    }

    /// Vertex `k` of the simplex in dimension `z`.
    pub fn vertex(z: usize, k: usize) -> Self {
        let mut a = vec![0.0; z];
        a[k] = 1.0;
        ConvexWeights(a)
    }

    pub fn uniform(z: usize) -> Self {
        ConvexWeights(vec![1.0 / z as f64; z])
    }

    /// A uniform draw from the simplex (normalized exponentials).
    pub fn sample(z: usize, rng: &mut crate::rng::Rng) -> Self {
        let e: Vec<f64> = (0..z).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = e.iter().sum();
        ConvexWeights(e.into_iter().map(|x| x / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// `|sum_i l_i - sum_j v_j l_j|` for each witness checked.
    pub gaps: Vec<f64>,
    pub vsum_error: f64,
    pub passed: bool,
}

/// Squared gap between the full and weighted sums of the synthetic column
/// `l_i = sum_k alpha_k M_ik`, together with a floating-point allowance for
/// the two summations.
fn witness_gap(matrix: &RowMatrix, coreset: &Coreset, alpha: &[f64]) -> (f64, f64) {
    let ell: Vec<f64> = matrix.rows().iter().map(|r| crate::linalg::dot(r, alpha)).collect();
    let full: f64 = ell.iter().sum();
    let part: f64 = coreset.iter().map(|(i, w)| w * ell[i]).sum();
    let magnitude = ell.iter().map(|v| v.abs()).sum::<f64>() + coreset.iter().map(|(i, w)| (w * ell[i]).abs()).sum::<f64>();
    let rounding = 4.0 * f64::EPSILON * (matrix.n_rows() + matrix.n_cols()) as f64 * magnitude;
    ((full - part).abs(), rounding)
}

/// Check `|sum l - sum v l|^2 <= vsum_error + 1e-9` for `alpha` and for
/// `trials` further simplex draws from `seed`. The bound also absorbs the
/// rounding of the two sums, so vertex witnesses (where the inequality is
/// tight) do not fail on the last few bits.
pub fn convex_witness_check(
    matrix: &RowMatrix,
    coreset: &Coreset,
    alpha: &ConvexWeights,
    trials: usize,
    seed: u64,
) -> Result<WitnessReport> {
    if alpha.as_slice().len() != matrix.n_cols() {
        return Err(Error::DimensionMismatch { expected: matrix.n_cols(), got: alpha.as_slice().len() });
    }
    coreset.validate(matrix.n_rows())?;
    let err = vsum_error(matrix, coreset);
    let mut rng = rng_from_seed(seed);
    let mut gaps = Vec::with_capacity(trials + 1);
    let mut passed = true;
    let mut check = |a: &ConvexWeights| {
        let (gap, rounding) = witness_gap(matrix, coreset, a.as_slice());
        let allowed = err + 1e-9 + 2.0 * gap * rounding + rounding * rounding;
        passed &= gap * gap <= allowed;
        gaps.push(gap);
    };
    check(alpha);
    for _ in 0..trials {
        check(&ConvexWeights::sample(matrix.n_cols(), &mut rng));
    }
    Ok(WitnessReport { gaps, vsum_error: err, passed })
}
