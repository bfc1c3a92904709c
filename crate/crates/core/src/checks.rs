//! Quick invariant suites behind the `check` subcommand. Each suite draws
//! its inputs from the given seed and reports the worst case it saw.

use rand::Rng;
use serde::Serialize;

use crate::autocore::{
    autocoreset, column_bound_holds, convex_witness_check, stopping_update, AutoConfig, ConvexWeights, Decision,
    ErrorMode, StoppingState,
};
use crate::data::{Coreset, Dataset, RowMatrix, Task};
use crate::error::Result;
use crate::experiment::{generate_synthetic, SyntheticSpec};
use crate::linalg::{sq_dist, sq_norm};
use crate::losses::BuiltinLoss;
use crate::rng::{derive_seed, rng_from_seed, Rng as SeededRng};
use crate::solvers::{expand_integer_weights, solve_weighted, SolverConfig};
use crate::vsum::{caratheodory, frank_wolfe, sensitivity_sampling, weighted_row_sum, Backend};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_matrix(rng: &mut SeededRng, n: usize, z: usize) -> RowMatrix {
    RowMatrix::from_rows((0..n).map(|_| (0..z).map(|_| rng.random::<f64>() * 10.0).collect()).collect())
        .expect("finite entries")
}

fn tasks_data(seed: u64) -> Result<Vec<(Task, Dataset)>> {
    let mk = |spec: &str, s: u64| -> Result<Dataset> { generate_synthetic(&spec.parse::<SyntheticSpec>()?, s) };
    Ok(vec![
        (Task::LinearRegression, mk("linear:n=300,d=4,noise=0.5", seed)?),
        (Task::LogisticRegression, mk("blobs:n=300,d=4,separation=2", seed)?),
        (Task::Svm, mk("blobs:n=300,d=4,separation=2", seed + 1)?),
        (Task::Kmeans, mk("gaussian-mixture-3:n=300,d=4", seed)?),
    ])
}

pub fn caratheodory_exactness(seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for t in 0..20 {
        let z = rng.random_range(1..=16);
        let n = rng.random_range(8..=256);
        let m = random_matrix(&mut rng, n, z);
        let c = caratheodory(&m, derive_seed(seed, &[t]));
        let ratio = c.vsum_error / (1e-9 * (1.0 + sq_norm(&m.row_sum())));
        worst = worst.max(ratio);
        passed &= c.len() <= z + 1 && ratio <= 1.0;
    }
    CheckResult { name: "caratheodory-exactness", passed, detail: format!("worst error / bound = {worst:.3e}") }
}

pub fn column_bound(seed: u64) -> Result<CheckResult> {
    let mut passed = true;
    let mut runs = 0;
    for (task, data) in tasks_data(seed)? {
        for backend in Backend::ALL {
            let cfg = AutoConfig { max_iterations: 12, ..AutoConfig::new(task, backend, 30) };
            let cfg = AutoConfig { seed: derive_seed(seed, &[backend as u64]), ..cfg };
            let res = autocoreset(&data, &BuiltinLoss(task), task, &cfg)?;
            passed &= column_bound_holds(&res.coreset_matrix(), &res.coreset, 1e-6);
            runs += 1;
        }
    }
    Ok(CheckResult { name: "per-column-bound", passed, detail: format!("{runs} runs") })
}

pub fn convex_witnesses(seed: u64) -> Result<CheckResult> {
    let mut passed = true;
    for (task, data) in tasks_data(seed)? {
        let cfg = AutoConfig { max_iterations: 12, seed, ..AutoConfig::new(task, Backend::Sensitivity, 40) };
        let res = autocoreset(&data, &BuiltinLoss(task), task, &cfg)?;
        let m = res.coreset_matrix();
        let report = convex_witness_check(&m, &res.coreset, &ConvexWeights::uniform(m.n_cols()), 100, seed)?;
        passed &= report.passed;
    }
    Ok(CheckResult { name: "convex-witnesses", passed, detail: "100 witnesses per task".into() })
}

pub fn multiplicative_exactness(seed: u64) -> Result<CheckResult> {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (task, data) in tasks_data(seed)? {
        let cfg = AutoConfig {
            max_iterations: 10,
            error_mode: ErrorMode::Multiplicative,
            seed,
            ..AutoConfig::new(task, Backend::Caratheodory, 10)
        };
        let res = autocoreset(&data, &BuiltinLoss(task), task, &cfg)?;
        let losses = res.losses.matrix().prefix(res.coreset_columns);
        let approx = weighted_row_sum(&losses, &res.coreset);
        for (j, s) in losses.row_sum().into_iter().enumerate() {
            if s > 1e-9 {
                let rel = (approx[j] - s).abs() / s;
                worst = worst.max(rel);
                passed &= rel <= 1e-6;
            }
        }
    }
    Ok(CheckResult { name: "multiplicative-exactness", passed, detail: format!("worst relative error {worst:.3e}") })
}

pub fn sensitivity_unbiased(seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed);
    let m = random_matrix(&mut rng, 60, 4);
    let target = m.row_sum();
    let draws = 500;
    let sums: Vec<Vec<f64>> =
        (0..draws).map(|s| weighted_row_sum(&m, &sensitivity_sampling(&m, 8, 0.1, derive_seed(seed, &[s])))).collect();
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        let mean = sums.iter().map(|v| v[j]).sum::<f64>() / draws as f64;
        let var = sums.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let z = (mean - target[j]).abs() / (var / draws as f64).sqrt().max(1e-300);
        worst = worst.max(z);
        passed &= z <= 3.0;
    }
    CheckResult { name: "sensitivity-unbiased", passed, detail: format!("largest |z| = {worst:.2}") }
}

pub fn stopping_rule(seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed);
    let mut passed = true;
    for _ in 0..200 {
        let patience = rng.random_range(1..=8);
        let sums: Vec<f64> = (0..40).map(|_| rng.random_range(0..6) as f64).collect();
        let mut state = StoppingState::default();
        let mut stopped_at = None;
        for (i, &s) in sums.iter().enumerate() {
            let (next, d) = stopping_update(state, s, patience);
            state = next;
            if d == Decision::Stop {
                stopped_at = Some(i);
                break;
            }
        }
        let seen = stopped_at.map_or(sums.len(), |i| i + 1);
        let min = sums[..seen].iter().cloned().fold(f64::INFINITY, f64::min);
        let first_min = sums.iter().position(|&s| s == min);
        passed &= state.best_iteration == first_min && state.best_sum == min;
        if let Some(i) = stopped_at {
            passed &= i - first_min.unwrap_or(0) == patience;
        }
    }
    CheckResult { name: "stopping-rule", passed, detail: "200 random sequences".into() }
}

pub fn frank_wolfe_bound(seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed);
    let mut passed = true;
    for _ in 0..5 {
        let n = rng.random_range(20..=120);
        let m = random_matrix(&mut rng, n, 3);
        let mut diam2: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diam2 = diam2.max(sq_dist(m.row(i), m.row(j)));
            }
        }
        let mut prev = f64::INFINITY;
        for tau in [1, 4, 16, 64] {
            let c = frank_wolfe(&m, tau);
            let bound = 4.0 * (n * n) as f64 * diam2 / (tau as f64 + 2.0);
            passed &= c.len() <= tau && c.vsum_error <= prev && c.vsum_error <= bound * (1.0 + 1e-12);
            prev = c.vsum_error;
        }
    }
    CheckResult { name: "frank-wolfe-bound", passed, detail: "5 matrices, tau in 1,4,16,64".into() }
}

pub fn duplication_equivalence(seed: u64) -> Result<CheckResult> {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (task, data) in tasks_data(seed)? {
        let small = data.subset(&(0..40).collect::<Vec<_>>());
        let weights: Vec<f64> = (0..40).map(|i| 1.0 + (i % 3) as f64).collect();
        let cs = Coreset::new((0..40).collect(), weights, Backend::Uniform)?;
        let dup = expand_integer_weights(&small, &cs)?;
        let cfg = SolverConfig { k: 3, ..SolverConfig::for_task(task) };
        let a = solve_weighted(task, &small, &cs, &cfg)?;
        let b = solve_weighted(task, &dup, &Coreset::identity(dup.n(), Backend::Uniform), &cfg)?;
        let rel = (a.objective - b.objective).abs() / (1.0 + b.objective.abs());
        worst = worst.max(rel);
        passed &= rel <= 1e-6;
    }
    Ok(CheckResult { name: "duplication-equivalence", passed, detail: format!("worst relative gap {worst:.3e}") })
}

/// Every suite in a fixed order.
pub fn run_checks(seed: u64) -> Result<Vec<CheckResult>> {
    Ok(vec![
        caratheodory_exactness(seed),
        column_bound(seed)?,
        convex_witnesses(seed)?,
        multiplicative_exactness(seed)?,
        sensitivity_unbiased(seed),
        stopping_rule(seed),
        frank_wolfe_bound(seed),
        duplication_equivalence(seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_checks(3).unwrap() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
