//! Per-point losses `f(p, x) >= 0`, the plug-in registry, and the
//! column rescaling that turns an additive summary into a relative one.

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::data::{Dataset, Query, Task};
use crate::error::{Error, Result};
use crate::linalg::{dot, sq_dist};
use crate::rng::{rng_from_seed, Rng};

/// A nonnegative loss over (point, label) pairs and queries of one task.
pub trait LossFunction: Send + Sync {
    fn task(&self) -> Task;

    fn name(&self) -> &str;

    /// Evaluate on a point whose query has already been validated.
    fn eval_unchecked(&self, point: &[f64], label: Option<f64>, query: &Query) -> f64;

    fn validate_query(&self, query: &Query, d: usize) -> Result<()> {
        if query.kind != self.task() {
            return Err(Error::InvalidQuery(format!(
                "{} query passed to a {} loss",
                query.kind,
                self.task()
            )));
        }
        query.validate(d)
    }
}

/// Squared residual `(w·p + b - y)^2`.
pub fn squared_loss(point: &[f64], label: f64, query: &Query) -> f64 {
    let r = dot(query.weights(), point) + query.intercept() - label;
    r * r
}

/// `ln(1 + exp(-t))` without overflow.
pub fn log1p_exp_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// Logistic loss `ln(1 + exp(-y (w·p + b)))`.
pub fn logistic_loss(point: &[f64], label: f64, query: &Query) -> f64 {
    log1p_exp_neg(label * (dot(query.weights(), point) + query.intercept()))
}

/// Hinge loss `max(0, 1 - y (w·p + b))`.
pub fn hinge_loss(point: &[f64], label: f64, query: &Query) -> f64 {
    (1.0 - label * (dot(query.weights(), point) + query.intercept())).max(0.0)
}

/// Squared distance to the nearest center.
pub fn kmeans_loss(point: &[f64], query: &Query) -> f64 {
    query
        .center_rows(point.len())
        .map(|c| sq_dist(point, c))
        .fold(f64::INFINITY, f64::min)
}

/// One of the four built-in losses. Regularization is not part of `f`; it
/// lives in the solver objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinLoss(pub Task);

impl LossFunction for BuiltinLoss {
    fn task(&self) -> Task {
        self.0
    }

    fn name(&self) -> &str {
        self.0.name()
    }

    fn eval_unchecked(&self, point: &[f64], label: Option<f64>, query: &Query) -> f64 {
        let y = label.unwrap_or(f64::NAN);
        match self.0 {
            Task::LinearRegression => squared_loss(point, y, query),
            Task::LogisticRegression => logistic_loss(point, y, query),
            Task::Svm => hinge_loss(point, y, query),
            Task::Kmeans => kmeans_loss(point, query),
        }
    }
}

type LossFn = dyn Fn(&[f64], Option<f64>, &Query) -> f64 + Send + Sync;

/// A user-supplied loss over the query space of an existing task.
#[derive(Clone)]
pub struct CustomLoss {
    name: String,
    task: Task,
    f: Arc<LossFn>,
}

impl CustomLoss {
    pub fn new(
        name: impl Into<String>,
        task: Task,
        f: impl Fn(&[f64], Option<f64>, &Query) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomLoss { name: name.into(), task, f: Arc::new(f) }
    }
}

impl LossFunction for CustomLoss {
    fn task(&self) -> Task {
        self.task
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval_unchecked(&self, point: &[f64], label: Option<f64>, query: &Query) -> f64 {
        (self.f)(point, label, query)
    }
}

fn checked(row: usize, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidEntry { row, value })
    }
}

/// `f(point, query)`, validating the query and the result.
pub fn eval_loss(loss: &dyn LossFunction, point: &[f64], label: Option<f64>, query: &Query) -> Result<f64> {
    loss.validate_query(query, point.len())?;
    if loss.task().needs_labels() && label.is_none() {
        return Err(Error::InvalidDataset(format!("{} needs a label", loss.task())));
    }
    checked(0, loss.eval_unchecked(point, label, query))
}

const PARALLEL_ROWS: usize = 4096;

/// Loss of every point of `dataset` under `query`, in row order.
pub fn eval_loss_column(loss: &dyn LossFunction, dataset: &Dataset, query: &Query) -> Result<Vec<f64>> {
    loss.validate_query(query, dataset.d())?;
    if loss.task().needs_labels() && dataset.labels().is_none() {
        return Err(Error::InvalidDataset(format!("{} needs labels", loss.task())));
    }
    let one = |i: usize| checked(i, loss.eval_unchecked(dataset.point(i), dataset.label(i), query));
    if dataset.n() >= PARALLEL_ROWS {
        (0..dataset.n()).into_par_iter().map(one).collect()
    } else {
        (0..dataset.n()).map(one).collect()
    }
}

/// Rescale a loss column by the square root of its sum, `g = f / sqrt(sum f)`.
/// A zero-sum column maps to zeros.
pub fn multiplicative_transform(column: &[f64]) -> Vec<f64> {
    let total: f64 = column.iter().sum();
    if total > 0.0 {
        let s = total.sqrt();
        column.iter().map(|v| v / s).collect()
    } else {
        vec![0.0; column.len()]
    }
}

const PROBE_SAMPLES: usize = 100;

/// Named losses. Registration probes a candidate on random (point, query)
/// pairs and refuses it if any value is negative or not finite.
pub struct LossRegistry {
    losses: BTreeMap<String, Arc<dyn LossFunction>>,
}

impl Default for LossRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl LossRegistry {
    pub fn empty() -> Self {
        LossRegistry { losses: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for task in Task::ALL {
            reg.losses.insert(task.name().to_string(), Arc::new(BuiltinLoss(task)));
        }
        reg
    }

    pub fn register(&mut self, loss: Arc<dyn LossFunction>, probe: &Dataset, seed: u64) -> Result<()> {
        let name = loss.name().to_string();
        if self.losses.contains_key(&name) {
            return Err(Error::Config(format!("loss `{name}` already registered")));
        }
        probe_loss(loss.as_ref(), probe, seed)?;
        self.losses.insert(name, loss);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn LossFunction>> {
        self.losses.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.losses.keys().map(String::as_str)
    }
}

/// Evaluate `loss` on random rows of `probe` against random queries.
pub fn probe_loss(loss: &dyn LossFunction, probe: &Dataset, seed: u64) -> Result<()> {
    use rand::Rng as _;
    let mut rng: Rng = rng_from_seed(seed);
    for _ in 0..PROBE_SAMPLES {
        let i = rng.random_range(0..probe.n());
        let k = rng.random_range(1..=3);
        let query = Query::random(loss.task(), probe.d(), k, &mut rng);
        let v = loss.eval_unchecked(probe.point(i), probe.label(i), &query);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::LossRejected(format!(
                "`{}` returned {v} on probe row {i}",
                loss.name()
            )));
        }
    }
    Ok(())
}
