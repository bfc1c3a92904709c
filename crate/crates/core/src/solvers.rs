//! Weighted solvers for the built-in tasks, and the randomized initial
//! solutions that seed the loss matrix.
//!
//! Every solver minimizes `sum_i v_i f(p_i, x) + lambda * ||w||^2` over the
//! weighted points of a coreset. The intercept is never regularized.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Coreset, Dataset, Query, Task};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve, sq_dist, sq_norm};
use crate::losses::{hinge_loss, log1p_exp_neg, logistic_loss, squared_loss};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampling::{stratified_sample, uniform_indices};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Ridge coefficient on the weight vector.
    pub lambda: f64,
    /// Stopping tolerance: relative gradient norm for logistic regression,
    /// relative objective change for SVM.
    pub tolerance: f64,
    /// Number of centers for k-means.
    pub k: usize,
    pub seed: u64,
    /// Rows per initial-solution subset; `None` means `min(n, max(256, 10 d))`.
    #[serde(default)]
    pub init_subset_size: Option<usize>,
}

impl SolverConfig {
    /// Defaults per task. `lambda = 0.5` for the classifiers matches an
    /// inverse-regularization constant of 1 on `0.5 ||w||^2 + C sum loss`.
    pub fn for_task(task: Task) -> Self {
        SolverConfig {
            max_iterations: 1000,
            lambda: match task {
                Task::LogisticRegression | Task::Svm => 0.5,
                _ => 0.0,
            },
            tolerance: 1e-9,
            k: 3,
            seed: 0,
            init_subset_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("solver max_iterations must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("solver tolerance must be > 0".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub query: Query,
    /// Weighted regularized objective at `query`.
    pub objective: f64,
    pub converged: bool,
    /// Linear regression needed ridge jitter on a singular Gram matrix.
    pub jittered: bool,
    pub iterations: usize,
}

/// Points of `dataset` selected by `coreset`, with their weights.
struct Weighted<'a> {
    points: Vec<&'a [f64]>,
    labels: Vec<f64>,
    weights: Vec<f64>,
    d: usize,
}

impl<'a> Weighted<'a> {
    fn gather(task: Task, dataset: &'a Dataset, coreset: &Coreset) -> Result<Self> {
        if coreset.is_empty() {
            return Err(Error::InvalidCoreset("empty coreset".into()));
        }
        coreset.validate(dataset.n())?;
        if !coreset.weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidCoreset("all weights are zero".into()));
        }
        dataset.check_task(task)?;
        let mut out = Weighted { points: vec![], labels: vec![], weights: vec![], d: dataset.d() };
        for (i, w) in coreset.iter() {
            if w > 0.0 {
                out.points.push(dataset.point(i));
                out.labels.push(dataset.label(i).unwrap_or(0.0));
                out.weights.push(w);
            }
        }
        Ok(out)
    }

    fn len(&self) -> usize {
        self.points.len()
    }
}

/// `sum_i v_i f(p_i, query) + lambda ||w||^2` over the coreset.
pub fn weighted_objective(task: Task, dataset: &Dataset, coreset: &Coreset, query: &Query, lambda: f64) -> Result<f64> {
    let wp = Weighted::gather(task, dataset, coreset)?;
    query.validate(dataset.d())?;
    Ok(objective(task, &wp, query, lambda))
}

fn objective(task: Task, wp: &Weighted, query: &Query, lambda: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..wp.len() {
        let (p, y, v) = (wp.points[i], wp.labels[i], wp.weights[i]);
        total += v * match task {
            Task::LinearRegression => squared_loss(p, y, query),
            Task::LogisticRegression => logistic_loss(p, y, query),
            Task::Svm => hinge_loss(p, y, query),
            Task::Kmeans => query.center_rows(wp.d).map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min),
        };
    }
    if task.is_linear() {
        total += lambda * sq_norm(query.weights());
    }
    total
}

/// Minimize the weighted objective of `task` over the points of `coreset`.
///
/// Deterministic for a fixed `config.seed`. Iterative solvers that run out
/// of iterations return their best iterate with `converged = false`.
pub fn solve_weighted(task: Task, dataset: &Dataset, coreset: &Coreset, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let wp = Weighted::gather(task, dataset, coreset)?;
    match task {
        Task::LinearRegression => solve_linear(&wp, config),
        Task::LogisticRegression => Ok(solve_logistic(&wp, config)),
        Task::Svm => Ok(solve_svm(&wp, config)),
        Task::Kmeans => Ok(solve_kmeans(&wp, config)),
    }
}

fn solve_linear(wp: &Weighted, config: &SolverConfig) -> Result<SolveOutcome> {
    let p = wp.d + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for i in 0..wp.len() {
        row[..wp.d].copy_from_slice(wp.points[i]);
        row[wp.d] = 1.0;
        let v = wp.weights[i];
        for a in 0..p {
            let va = v * row[a];
            rhs[a] += va * wp.labels[i];
            for b in 0..p {
                gram[a * p + b] += va * row[b];
            }
        }
    }
    for a in 0..wp.d {
        gram[a * p + a] += config.lambda;
    }
    let mut jittered = false;
    let theta = match solve(&gram, &rhs, p, 1e-13) {
        Some(t) => t,
        None => {
            jittered = true;
            let scale = (0..p).map(|a| gram[a * p + a]).fold(1.0f64, f64::max);
            for a in 0..p {
                gram[a * p + a] += 1e-10 * scale;
            }
            solve(&gram, &rhs, p, 1e-16)
                .ok_or_else(|| Error::InvalidCoreset("singular normal equations".into()))?
        }
    };
    let query = Query { kind: Task::LinearRegression, params: theta };
    Ok(SolveOutcome {
        objective: objective(Task::LinearRegression, wp, &query, config.lambda),
        query,
        converged: true,
        jittered,
        iterations: 1,
    })
}

/// Objective and gradient of the weighted ridge-logistic problem.
fn logistic_value_grad(wp: &Weighted, theta: &[f64], lambda: f64, grad: &mut [f64]) -> f64 {
    let d = wp.d;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut f = 0.0;
    for i in 0..wp.len() {
        let (p, y, v) = (wp.points[i], wp.labels[i], wp.weights[i]);
        let t = y * (dot(&theta[..d], p) + theta[d]);
        f += v * log1p_exp_neg(t);
        // d/dt ln(1 + e^-t) = -1 / (1 + e^t)
        let s = -v * y / (1.0 + t.exp());
        for j in 0..d {
            grad[j] += s * p[j];
        }
        grad[d] += s;
    }
    for j in 0..d {
        f += lambda * theta[j] * theta[j];
        grad[j] += 2.0 * lambda * theta[j];
    }
    f
}

fn logistic_value(wp: &Weighted, theta: &[f64], lambda: f64) -> f64 {
    let d = wp.d;
    let mut f = 0.0;
    for i in 0..wp.len() {
        let t = wp.labels[i] * (dot(&theta[..d], wp.points[i]) + theta[d]);
        f += wp.weights[i] * log1p_exp_neg(t);
    }
    f + lambda * sq_norm(&theta[..d])
}

/// Hessian of the weighted ridge-logistic objective, row-major `(d+1)^2`.
fn logistic_hessian(wp: &Weighted, theta: &[f64], lambda: f64) -> Vec<f64> {
    let d = wp.d;
    let k = d + 1;
    let mut h = vec![0.0; k * k];
    for i in 0..wp.len() {
        let p = wp.points[i];
        let t = wp.labels[i] * (dot(&theta[..d], p) + theta[d]);
        let sig = 1.0 / (1.0 + (-t).exp());
        let c = wp.weights[i] * sig * (1.0 - sig);
        if c == 0.0 {
            continue;
        }
        for r in 0..k {
            let xr = if r < d { p[r] } else { 1.0 };
            for col in r..k {
                let xc = if col < d { p[col] } else { 1.0 };
                h[r * k + col] += c * xr * xc;
            }
        }
    }
    for r in 0..k {
        for col in 0..r {
            h[r * k + col] = h[col * k + r];
        }
    }
    for j in 0..d {
        h[j * k + j] += 2.0 * lambda;
    }
    h
}

/// Damped Newton from the origin with Armijo backtracking; a plain gradient
/// step is used whenever the Hessian cannot be solved.
fn solve_logistic(wp: &Weighted, config: &SolverConfig) -> SolveOutcome {
    let d = wp.d;
    let mut theta = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut f = logistic_value_grad(wp, &theta, config.lambda, &mut grad);
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; d + 1];
    for it in 0..config.max_iterations {
        iterations = it + 1;
        if sq_norm(&grad).sqrt() <= config.tolerance * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let h = logistic_hessian(wp, &theta, config.lambda);
        let mut dir = solve(&h, &neg, d + 1, 1e-14).unwrap_or_else(|| neg.clone());
        let mut slope = dot(&grad, &dir);
        if slope.is_nan() || slope >= 0.0 {
            dir = neg;
            slope = -sq_norm(&grad);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..=d {
                trial[j] = theta[j] + step * dir[j];
            }
            if logistic_value(wp, &trial, config.lambda) <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No representable decrease left.
            converged = true;
            break;
        }
        theta.copy_from_slice(&trial);
        f = logistic_value_grad(wp, &theta, config.lambda, &mut grad);
    }
    let query = Query { kind: Task::LogisticRegression, params: theta };
    SolveOutcome { objective: f, query, converged, jittered: false, iterations }
}

/// Full-batch Pegasos on the averaged objective
/// `(lambda'/2) ||w||^2 + (1/V) sum v_i hinge_i` with `lambda' = 2 lambda / V`,
/// which has the same minimizer as the weighted objective. Step `1/(lambda' t)`;
/// `w` is projected onto the ball of radius `1/sqrt(lambda')` and `b` onto
/// `|b| <= 1 + R/sqrt(lambda')`, both of which contain the optimum.
fn solve_svm(wp: &Weighted, config: &SolverConfig) -> SolveOutcome {
    let d = wp.d;
    let total: f64 = wp.weights.iter().sum();
    let lambda = if config.lambda > 0.0 { config.lambda } else { 1e-6 };
    let lam = 2.0 * lambda / total;
    let radius = 1.0 / lam.sqrt();
    let r_max = wp.points.iter().map(|p| sq_norm(p).sqrt()).fold(0.0, f64::max);
    let b_max = 1.0 + r_max * radius;

    let mut theta = vec![0.0; d + 1];
    let mut best = theta.clone();
    let mut best_f = objective(Task::Svm, wp, &Query { kind: Task::Svm, params: theta.clone() }, lambda);
    let mut grad = vec![0.0; d + 1];
    let mut converged = false;
    let mut iterations = 0;
    let mut last_f = best_f;
    let mut quiet = 0;
    for t in 1..=config.max_iterations {
        iterations = t;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..wp.len() {
            let (p, y, v) = (wp.points[i], wp.labels[i], wp.weights[i]);
            if y * (dot(&theta[..d], p) + theta[d]) < 1.0 {
                let s = -v * y / total;
                for j in 0..d {
                    grad[j] += s * p[j];
                }
                grad[d] += s;
            }
        }
        for j in 0..d {
            grad[j] += lam * theta[j];
        }
        let eta = 1.0 / (lam * t as f64);
        for j in 0..=d {
            theta[j] -= eta * grad[j];
        }
        let norm = sq_norm(&theta[..d]).sqrt();
        if norm > radius {
            let s = radius / norm;
            theta[..d].iter_mut().for_each(|w| *w *= s);
        }
        theta[d] = theta[d].clamp(-b_max, b_max);

        let f = objective(Task::Svm, wp, &Query { kind: Task::Svm, params: theta.clone() }, lambda);
        if f < best_f {
            best_f = f;
            best.copy_from_slice(&theta);
        }
        if (last_f - f).abs() <= config.tolerance * (1.0 + f.abs()) {
            quiet += 1;
            if quiet >= 10 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
        last_f = f;
    }
    SolveOutcome {
        query: Query { kind: Task::Svm, params: best },
        objective: best_f,
        converged,
        jittered: false,
        iterations,
    }
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let dist = sq_dist(p, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

/// Weighted k-means++ seeding: first center drawn proportionally to weight,
/// later ones proportionally to `weight * D^2`.
pub(crate) fn kmeans_plus_plus(points: &[&[f64]], weights: &[f64], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let first = WeightedIndex::new(weights).map(|w| w.sample(&mut rng)).unwrap_or(0);
    let mut centers = vec![points[first].to_vec()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = dist.iter().zip(weights).map(|(d, w)| d * w).collect();
        let next = match WeightedIndex::new(&scores) {
            Ok(w) => w.sample(&mut rng),
            // Every point already sits on a center.
            Err(_) => WeightedIndex::new(weights).map(|w| w.sample(&mut rng)).unwrap_or(0),
        };
        centers.push(points[next].to_vec());
        for (dv, p) in dist.iter_mut().zip(points) {
            *dv = dv.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Weighted cost of `points` against `centers`.
pub(crate) fn kmeans_cost(points: &[&[f64]], weights: &[f64], centers: &[Vec<f64>]) -> f64 {
    points.iter().zip(weights).map(|(p, w)| w * nearest(p, centers).1).sum()
}

fn solve_kmeans(wp: &Weighted, config: &SolverConfig) -> SolveOutcome {
    let d = wp.d;
    let mut centers = kmeans_plus_plus(&wp.points, &wp.weights, config.k, config.seed);
    let mut assign: Vec<usize> = wp.points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iterations {
        iterations = it + 1;
        let mut sums = vec![vec![0.0; d]; centers.len()];
        let mut mass = vec![0.0; centers.len()];
        for ((&a, &w), p) in assign.iter().zip(&wp.weights).zip(&wp.points) {
            mass[a] += w;
            for (s, x) in sums[a].iter_mut().zip(p.iter()) {
                *s += w * x;
            }
        }
        for (c, (s, m)) in centers.iter_mut().zip(sums.iter().zip(&mass)) {
            // Empty clusters keep their previous center.
            if *m > 0.0 {
                for j in 0..d {
                    c[j] = s[j] / m;
                }
            }
        }
        let next: Vec<usize> = wp.points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }
    let objective = kmeans_cost(&wp.points, &wp.weights, &centers);
    SolveOutcome { query: Query::centers(&centers), objective, converged, jittered: false, iterations }
}

/// Rows used per initial-solution subset.
pub fn init_subset_size(n: usize, d: usize, config: &SolverConfig) -> usize {
    config.init_subset_size.unwrap_or_else(|| n.min(256.max(10 * d))).clamp(1, n)
}

/// `m` randomized approximate solutions. Slot `s` solves `task` on an
/// independent random subset drawn with seed `derive_seed(seed, [s])`;
/// classification subsets are class-stratified with each class getting at
/// least `ceil(size / (2 * classes))` rows. A failed solve falls back to a
/// standard Gaussian query.
pub fn initial_solutions(task: Task, dataset: &Dataset, m: usize, config: &SolverConfig, seed: u64) -> Vec<Query> {
    let size = init_subset_size(dataset.n(), dataset.d(), config);
    (0..m)
        .into_par_iter()
        .map(|slot| {
            let slot_seed = derive_seed(seed, &[slot as u64]);
            let mut rng = rng_from_seed(slot_seed);
            let coreset = initial_subset(task, dataset, size, &mut rng);
            let cfg = SolverConfig { seed: derive_seed(slot_seed, &[1]), ..config.clone() };
            match solve_weighted(task, dataset, &coreset, &cfg) {
                Ok(out) => out.query,
                Err(_) => Query::random(task, dataset.d(), config.k, &mut rng),
            }
        })
        .collect()
}

fn initial_subset(task: Task, dataset: &Dataset, size: usize, rng: &mut crate::rng::Rng) -> Coreset {
    let n = dataset.n();
    let pairs: Vec<(usize, f64)> = match dataset.labels() {
        Some(labels) if task.is_classification() => {
            let classes = {
                let mut c = labels.to_vec();
                c.sort_by(f64::total_cmp);
                c.dedup();
                c.len()
            };
            let floor = size.div_ceil(2 * classes);
            stratified_sample(labels, size, floor, rng)
        }
        _ => {
            let w = n as f64 / size as f64;
            uniform_indices(n, size, rng).into_iter().map(|i| (i, w)).collect()
        }
    };
    Coreset::from_pairs(pairs, crate::vsum::Backend::Uniform)
}

/// A dataset with weighted rows expanded into repeated rows, for checking
/// weight/duplication equivalence. Weights must be positive integers.
pub fn expand_integer_weights(dataset: &Dataset, coreset: &Coreset) -> Result<Dataset> {
    let mut idx = Vec::new();
    for (i, w) in coreset.iter() {
        if w.fract() != 0.0 || w < 0.0 {
            return Err(Error::InvalidCoreset(format!("weight {w} is not a whole number")));
        }
        idx.extend(std::iter::repeat_n(i, w as usize));
    }
    Ok(dataset.subset(&idx))
}
