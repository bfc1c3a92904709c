//! Value types shared across the crate: datasets, queries, loss matrices,
//! coresets and run traces.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::vsum::Backend;

/// The learning task a query belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    LinearRegression,
    LogisticRegression,
    Svm,
    Kmeans,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::LinearRegression,
        Task::LogisticRegression,
        Task::Svm,
        Task::Kmeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::LinearRegression => "linear-regression",
            Task::LogisticRegression => "logistic-regression",
            Task::Svm => "svm",
            Task::Kmeans => "kmeans",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Task::LogisticRegression | Task::Svm)
    }

    /// Linear models carry a weight vector and an intercept.
    pub fn is_linear(self) -> bool {
        !matches!(self, Task::Kmeans)
    }

    pub fn needs_labels(self) -> bool {
        self.is_linear()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-regression" | "linear" => Ok(Task::LinearRegression),
            "logistic-regression" | "logistic" => Ok(Task::LogisticRegression),
            "svm" => Ok(Task::Svm),
            "kmeans" | "k-means" => Ok(Task::Kmeans),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// `n` points in `d` dimensions, stored row-major, with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    points: Vec<f64>,
    labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let n = rows.len();
        let mut points = Vec::with_capacity(n * d);
        for r in &rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            points.extend_from_slice(r);
        }
        Self::from_flat(name, n, d, points, labels)
    }

    pub fn from_flat(
        name: impl Into<String>,
        n: usize,
        d: usize,
        points: Vec<f64>,
        labels: Option<Vec<f64>>,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset("need n >= 1 and d >= 1".into()));
        }
        if points.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: points.len() });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite feature at row {}", pos / d)));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.len() });
            }
            if let Some(pos) = l.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("non-finite label at row {pos}")));
            }
        }
        Ok(Dataset { name: name.into(), n, d, points, labels })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn label(&self, i: usize) -> Option<f64> {
        self.labels.as_ref().map(|l| l[i])
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Check that this dataset can be used for `task`.
    pub fn check_task(&self, task: Task) -> Result<()> {
        if !task.needs_labels() {
            return Ok(());
        }
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidDataset(format!("{task} requires labels")))?;
        if task.is_classification() {
            if let Some(pos) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::InvalidDataset(format!(
                    "{task} requires labels in {{-1, +1}}, row {pos} has {}",
                    labels[pos]
                )));
            }
        }
        Ok(())
    }

    /// Rows `indices` (in the given order) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut points = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            points.extend_from_slice(self.point(i));
        }
        Dataset {
            name: self.name.clone(),
            n: indices.len(),
            d: self.d,
            points,
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Zero-mean, unit-variance features (constant columns are only centered).
    pub fn standardized(&self) -> Dataset {
        let mut out = self.clone();
        for j in 0..self.d {
            let mean = self.points().map(|p| p[j]).sum::<f64>() / self.n as f64;
            let var = self.points().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / self.n as f64;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..self.n {
                out.points[i * self.d + j] = (self.points[i * self.d + j] - mean) / sd;
            }
        }
        out
    }
}

/// A candidate solution: `[w_1..w_d, b]` for linear models, `k` centers
/// flattened row-major for k-means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub kind: Task,
    pub params: Vec<f64>,
}

impl Query {
    pub fn linear(kind: Task, weights: &[f64], intercept: f64) -> Self {
        let mut params = weights.to_vec();
        params.push(intercept);
        Query { kind, params }
    }

    pub fn centers(centers: &[Vec<f64>]) -> Self {
        Query { kind: Task::Kmeans, params: centers.iter().flatten().copied().collect() }
    }

    /// Weight vector of a linear query.
    pub fn weights(&self) -> &[f64] {
        &self.params[..self.params.len() - 1]
    }

    pub fn intercept(&self) -> f64 {
        *self.params.last().unwrap_or(&0.0)
    }

    /// Centers of a k-means query in dimension `d`.
    pub fn center_rows(&self, d: usize) -> impl Iterator<Item = &[f64]> {
        self.params.chunks_exact(d)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if let Some(pos) = self.params.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidQuery(format!("non-finite parameter at {pos}")));
        }
        match self.kind {
            Task::Kmeans => {
                if self.params.is_empty() || !self.params.len().is_multiple_of(d) {
                    return Err(Error::InvalidQuery(format!(
                        "k-means query has {} parameters, not a positive multiple of d = {d}",
                        self.params.len()
                    )));
                }
            }
            _ => {
                if self.params.len() != d + 1 {
                    return Err(Error::DimensionMismatch { expected: d + 1, got: self.params.len() });
                }
            }
        }
        Ok(())
    }

    /// A query with standard Gaussian parameters; `k` centers for k-means.
    pub fn random(kind: Task, d: usize, k: usize, rng: &mut crate::rng::Rng) -> Self {
        use rand::Rng as _;
        let len = if kind == Task::Kmeans { k.max(1) * d } else { d + 1 };
        let params = (0..len).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        Query { kind, params }
    }

    /// Euclidean distance between parameter vectors.
    pub fn distance(&self, other: &Query) -> f64 {
        if self.params.len() != other.params.len() {
            return f64::INFINITY;
        }
        crate::linalg::sq_dist(&self.params, &other.params).sqrt()
    }
}

/// A dense real matrix addressed by rows, grown one column at a time.
///
/// Rows are stored as separate vectors: vector summarization reads whole rows
/// and appending a column is an amortized O(1) push per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    rows: Vec<Vec<f64>>,
    cols: usize,
}

impl RowMatrix {
    /// `n` rows and no columns.
    pub fn empty(n: usize) -> Self {
        RowMatrix { rows: vec![Vec::new(); n], cols: 0 }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDataset("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidEntry { row: i, value: *v });
            }
        }
        Ok(RowMatrix { rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Sum of all rows, i.e. the vector of column sums.
    pub fn row_sum(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for r in &self.rows {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        acc
    }

    pub fn push_column(&mut self, column: &[f64]) -> Result<()> {
        if column.len() != self.rows.len() {
            return Err(Error::DimensionMismatch { expected: self.rows.len(), got: column.len() });
        }
        if let Some(i) = column.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEntry { row: i, value: column[i] });
        }
        for (r, &v) in self.rows.iter_mut().zip(column) {
            r.push(v);
        }
        self.cols += 1;
        Ok(())
    }

    /// The first `z` columns.
    pub fn prefix(&self, z: usize) -> RowMatrix {
        let z = z.min(self.cols);
        RowMatrix { rows: self.rows.iter().map(|r| r[..z].to_vec()).collect(), cols: z }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&v| v == 0.0))
    }
}

/// Per-point losses, one column per discovered query.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    matrix: RowMatrix,
    queries: Vec<Query>,
}

impl LossMatrix {
    /// An `n × 0` matrix; columns arrive via [`LossMatrix::append_column`].
    pub fn new(n: usize) -> Self {
        LossMatrix { matrix: RowMatrix::empty(n), queries: Vec::new() }
    }

    pub fn matrix(&self) -> &RowMatrix {
        &self.matrix
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j)
    }

    /// Append the loss column of `query`. Entries must be finite and
    /// nonnegative; a bad entry is reported with its row index.
    pub fn append_column(&mut self, column: &[f64], query: Query) -> Result<()> {
        if column.len() != self.n_rows() {
            return Err(Error::DimensionMismatch { expected: self.n_rows(), got: column.len() });
        }
        if let Some(i) = column.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidEntry { row: i, value: column[i] });
        }
        self.matrix.push_column(column)?;
        self.queries.push(query);
        Ok(())
    }

    /// Non-mutating variant of [`LossMatrix::append_column`].
    pub fn with_column(&self, column: &[f64], query: Query) -> Result<LossMatrix> {
        let mut out = self.clone();
        out.append_column(column, query)?;
        Ok(out)
    }

    /// Sum of each column, in column order.
    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.row_sum()
    }

    pub fn prefix(&self, z: usize) -> LossMatrix {
        let z = z.min(self.n_cols());
        LossMatrix { matrix: self.matrix.prefix(z), queries: self.queries[..z].to_vec() }
    }
}

/// A weighted subset `(I, v)` of the rows of a matrix (or points of a dataset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coreset {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub source: Backend,
    /// Squared norm between full and weighted row sums on the matrix the
    /// coreset was built from (0 when not built from a matrix).
    pub vsum_error: f64,
    /// Set when a backend had to fall back from its normal procedure.
    #[serde(default)]
    pub flagged: bool,
}

impl Coreset {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>, source: Backend) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::InvalidCoreset(format!(
                "{} indices but {} weights",
                indices.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidCoreset(format!("weight {w} is negative or not finite")));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCoreset("duplicate index".into()));
        }
        Ok(Coreset { indices, weights, source, vsum_error: 0.0, flagged: false })
    }

    /// Every index `0..n` with weight 1.
    pub fn identity(n: usize, source: Backend) -> Self {
        Coreset {
            indices: (0..n).collect(),
            weights: vec![1.0; n],
            source,
            vsum_error: 0.0,
            flagged: false,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    /// Check the coreset against a ground set of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(i) = self.indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidCoreset(format!("index {i} out of range for n = {n}")));
        }
        Ok(())
    }

    /// Build a coreset from (index, weight) pairs, merging repeats and
    /// dropping zero weights. Output is sorted by index.
    pub(crate) fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>, source: Backend) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (i, w) in pairs {
            *map.entry(i).or_insert(0.0) += w;
        }
        let (indices, weights) = map.into_iter().filter(|(_, w)| *w > 0.0).unzip();
        Coreset { indices, weights, source, vsum_error: 0.0, flagged: false }
    }
}

/// Why the AutoCoreset loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxIterations,
}

/// One pass of the AutoCoreset loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Sum of the raw loss column appended in this iteration.
    pub column_sum: f64,
    pub vsum_error: f64,
    pub coreset_size: usize,
    pub patience_counter: usize,
    pub best_sum: f64,
    pub solver_converged: bool,
    /// The solve failed and the previous query was reused.
    pub solver_failed: bool,
    /// Wall-clock seconds; kept out of serialized reports.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial_columns: usize,
    pub records: Vec<IterationRecord>,
    /// Index into `records` of the smallest column sum seen.
    pub best_iteration: Option<usize>,
    pub stop_reason: StopReason,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn q() -> Query {
        Query::linear(Task::LinearRegression, &[1.0], 0.0)
    }

    fn two_col() -> LossMatrix {
        let mut m = LossMatrix::new(3);
        m.append_column(&[1.0, 2.0, 3.0], q()).unwrap();
        m.append_column(&[0.5, 0.0, 4.0], q()).unwrap();
        m
    }

    #[test]
    fn append_zero_column() {
        let m = two_col().with_column(&[0.0, 0.0, 0.0], q()).unwrap();
        assert_eq!(m.n_cols(), 3);
        assert_eq!(m.column(2), vec![0.0, 0.0, 0.0]);
        assert_eq!(m.queries().len(), 3);
    }

    #[test]
    fn append_wrong_length() {
        let err = two_col().with_column(&[0.0; 4], q()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, got: 4 }));
    }

    #[test]
    fn append_rejects_negative_and_nan_with_row() {
        let m = two_col();
        match m.with_column(&[0.0, -1.0, 0.0], q()).unwrap_err() {
            Error::InvalidEntry { row, .. } => assert_eq!(row, 1),
            e => panic!("{e}"),
        }
        match m.with_column(&[0.0, 0.0, f64::NAN], q()).unwrap_err() {
            Error::InvalidEntry { row, .. } => assert_eq!(row, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn append_round_trip_and_prefix_untouched() {
        let mut rng = crate::rng::rng_from_seed(7);
        let col: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 10.0).collect();
        let before = two_col();
        let after = before.with_column(&col, q()).unwrap();
        for i in 0..3 {
            assert_eq!(after.get(i, 2).to_bits(), col[i].to_bits());
            for j in 0..2 {
                assert_eq!(after.get(i, j).to_bits(), before.get(i, j).to_bits());
            }
        }
        assert_eq!(after.prefix(2), before);
    }

    #[test]
    fn column_sums_small() {
        let mut m = LossMatrix::new(4);
        for _ in 0..3 {
            m.append_column(&[0.0; 4], q()).unwrap();
        }
        assert_eq!(m.column_sums(), vec![0.0; 3]);
        let mut m = LossMatrix::new(2);
        m.append_column(&[1.0, 0.0], q()).unwrap();
        m.append_column(&[0.0, 1.0], q()).unwrap();
        assert_eq!(m.column_sums(), vec![1.0, 1.0]);
    }

    #[test]
    fn column_sums_match_per_column_accumulation() {
        let mut rng = crate::rng::rng_from_seed(11);
        let mut m = LossMatrix::new(50);
        let mut cols = Vec::new();
        for _ in 0..6 {
            let c: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
            m.append_column(&c, q()).unwrap();
            cols.push(c);
        }
        let sums = m.column_sums();
        for (j, c) in cols.iter().enumerate() {
            let mut oracle = 0.0;
            for v in c {
                oracle += v;
            }
            assert!((sums[j] - oracle).abs() <= 1e-12 * oracle.abs());
        }
    }

    #[test]
    fn coreset_rejects_bad_input() {
        assert!(Coreset::new(vec![0, 1], vec![1.0], Backend::Uniform).is_err());
        assert!(Coreset::new(vec![0], vec![-1.0], Backend::Uniform).is_err());
        assert!(Coreset::new(vec![0, 0], vec![1.0, 1.0], Backend::Uniform).is_err());
        let c = Coreset::new(vec![5], vec![1.0], Backend::Uniform).unwrap();
        assert!(c.validate(5).is_err());
        assert!(c.validate(6).is_ok());
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new("x", vec![], None).is_err());
        assert!(Dataset::new("x", vec![vec![1.0], vec![1.0, 2.0]], None).is_err());
        assert!(Dataset::new("x", vec![vec![f64::NAN]], None).is_err());
        assert!(Dataset::new("x", vec![vec![1.0]], Some(vec![1.0, 2.0])).is_err());
        let ds = Dataset::new("x", vec![vec![1.0], vec![2.0]], Some(vec![1.0, 0.5])).unwrap();
        assert!(ds.check_task(Task::LinearRegression).is_ok());
        assert!(ds.check_task(Task::Svm).is_err());
        assert!(ds.check_task(Task::Kmeans).is_ok());
    }
}
