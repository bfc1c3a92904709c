//! Multi-trial sweep comparing AutoCoreset backends against a uniform
//! sample of the raw data, with JSON and CSV reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::load_csv;
use super::synth::{generate_synthetic, SyntheticSpec};
use crate::autocore::{autocoreset, AutoConfig, CoresetMode, ErrorMode};
use crate::data::{Coreset, Dataset, Query, RunTrace, Task};
use crate::error::{Error, Result};
use crate::eval::{classification_metrics, full_data_reference, r_squared, total_loss, train_test_split, Summary};
use crate::losses::BuiltinLoss;
use crate::rng::{derive_seed, rng_from_seed, str_tag};
use crate::sampling::{stratified_sample, uniform_indices};
use crate::solvers::{solve_weighted, SolverConfig};
use crate::vsum::Backend;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const BASELINE: &str = "uniform_baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV input; exclusive with `synthetic`.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    pub task: Task,
    pub backends: Vec<Backend>,
    pub sizes: Vec<usize>,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::patience")]
    pub patience: usize,
    #[serde(default = "defaults::mode")]
    pub mode: CoresetMode,
    #[serde(default = "defaults::error_mode")]
    pub error_mode: ErrorMode,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub standardize: bool,
    /// Held-out share for accuracy / R^2. Zero scores on the training data.
    #[serde(default = "defaults::test_fraction")]
    pub test_fraction: f64,
    /// Regularization weight; the task default when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Number of centers for k-means.
    #[serde(default = "defaults::k")]
    pub k: usize,
}

mod defaults {
    use super::*;

    pub fn trials() -> usize {
        16
    }
    pub fn m() -> usize {
        10
    }
    pub fn patience() -> usize {
        7
    }
    pub fn mode() -> CoresetMode {
        CoresetMode::Optimal
    }
    pub fn error_mode() -> ErrorMode {
        ErrorMode::Additive
    }
    pub fn max_iterations() -> usize {
        200
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn test_fraction() -> f64 {
        0.2
    }
    pub fn k() -> usize {
        3
    }
}

impl ExperimentConfig {
    pub fn new(task: Task, synthetic: SyntheticSpec, backends: Vec<Backend>, sizes: Vec<usize>) -> Self {
        ExperimentConfig {
            dataset: None,
            label_column: None,
            synthetic: Some(synthetic),
            task,
            backends,
            sizes,
            trials: defaults::trials(),
            m: defaults::m(),
            patience: defaults::patience(),
            mode: defaults::mode(),
            error_mode: defaults::error_mode(),
            max_iterations: defaults::max_iterations(),
            seed: 0,
            output_dir: defaults::output_dir(),
            standardize: false,
            test_fraction: defaults::test_fraction(),
            lambda: None,
            k: defaults::k(),
        }
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => return Err(Error::Config("give either a dataset path or a synthetic spec, not both".into())),
            (None, None) => return Err(Error::Config("no dataset path or synthetic spec".into())),
            _ => {}
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("size sweep must be nonempty with every size >= 1".into()));
        }
        if self.backends.is_empty() {
            return Err(Error::Config("backend list is empty".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::Config("test_fraction must lie in [0, 1)".into()));
        }
        self.solver_config().validate()?;
        self.auto_config(self.backends[0], self.sizes[0], 0).validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::for_task(self.task);
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        cfg.k = self.k;
        cfg
    }

    pub fn auto_config(&self, backend: Backend, tau: usize, seed: u64) -> AutoConfig {
        AutoConfig {
            m: self.m,
            patience: self.patience,
            max_iterations: self.max_iterations,
            mode: self.mode,
            error_mode: self.error_mode,
            seed,
            solver: SolverConfig { seed, ..self.solver_config() },
            ..AutoConfig::new(self.task, backend, tau)
        }
    }

    /// Load or generate the data set, standardized if requested.
    pub fn load_data(&self) -> Result<Dataset> {
        let data = match (&self.dataset, &self.synthetic) {
            (Some(path), _) => load_csv(path, self.label_column.as_deref(), self.task)?,
            (None, Some(spec)) => generate_synthetic(spec, derive_seed(self.seed, &[str_tag("data")]))?,
            (None, None) => return Err(Error::Config("no dataset".into())),
        };
        data.check_task(self.task)?;
        Ok(if self.standardize { data.standardized() } else { data })
    }
}

/// Seed of one trial: a function of the master seed, method name, size and
/// trial index only.
pub fn trial_seed(master: u64, method: &str, tau: usize, trial: usize) -> u64 {
    derive_seed(master, &[str_tag(method), tau as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// `|loss(x*_coreset) - loss(x*_full)|` on the training data.
    pub approx_error: Option<f64>,
    pub accuracy: Option<f64>,
    pub confusion: Option<[[u64; 2]; 2]>,
    pub r2: Option<f64>,
    /// Mean per-point k-means cost on the test set.
    pub test_cost: Option<f64>,
    pub coreset_size: Option<usize>,
    pub total_weight: Option<f64>,
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    /// A backend name or `uniform_baseline`.
    pub method: String,
    pub tau: usize,
    pub completed: usize,
    pub failed: usize,
    pub approx_error: Summary,
    pub metric_name: String,
    pub metric: Summary,
    pub coreset_size: Summary,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub standardized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub query: Query,
    pub train_loss: f64,
    pub metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub generated_at_unix: u64,
    pub total_seconds: f64,
    /// Wall time per trial, in `results` order.
    pub trial_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config: ExperimentConfig,
    pub data: DataInfo,
    pub reference: Reference,
    pub results: Vec<MethodResult>,
    pub timing: Timing,
}

impl Report {
    pub fn all_completed(&self) -> bool {
        self.results.iter().all(|r| r.failed == 0)
    }

    /// One row per (method, size, metric).
    pub fn csv_rows(&self) -> Vec<(String, usize, String, f64, f64)> {
        let mut rows = Vec::new();
        for r in &self.results {
            rows.push((r.method.clone(), r.tau, "approx_error".to_string(), r.approx_error.mean, r.approx_error.std));
            rows.push((r.method.clone(), r.tau, r.metric_name.clone(), r.metric.mean, r.metric.std));
        }
        rows
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["backend", "tau", "metric", "mean", "std"])?;
        for (method, tau, metric, mean, std) in self.csv_rows() {
            w.write_record([method, tau.to_string(), metric, mean.to_string(), std.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct ExperimentOutput {
    pub report: Report,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    train: &'a Dataset,
    test: &'a Dataset,
    reference: f64,
    solver: SolverConfig,
}

impl Ctx<'_> {
    fn metric_name(&self) -> &'static str {
        match self.config.task {
            Task::LinearRegression => "r2",
            Task::LogisticRegression | Task::Svm => "accuracy",
            Task::Kmeans => "test_cost",
        }
    }

    fn score(&self, result: &mut TrialResult, query: &Query) -> Result<()> {
        let loss = BuiltinLoss(self.config.task);
        result.approx_error = Some((total_loss(self.train, &loss, query)? - self.reference).abs());
        match self.config.task {
            Task::LinearRegression => result.r2 = Some(r_squared(self.test, query)?),
            Task::LogisticRegression | Task::Svm => {
                let m = classification_metrics(self.test, query)?;
                result.accuracy = Some(m.accuracy);
                result.confusion = Some(m.confusion);
            }
            Task::Kmeans => result.test_cost = Some(total_loss(self.test, &loss, query)? / self.test.n() as f64),
        }
        Ok(())
    }

    fn metric_of(&self, r: &TrialResult) -> Option<f64> {
        match self.config.task {
            Task::LinearRegression => r.r2,
            Task::LogisticRegression | Task::Svm => r.accuracy,
            Task::Kmeans => r.test_cost,
        }
    }

    fn empty(trial: usize, seed: u64) -> TrialResult {
        TrialResult {
            trial,
            seed,
            approx_error: None,
            accuracy: None,
            confusion: None,
            r2: None,
            test_cost: None,
            coreset_size: None,
            total_weight: None,
            trace: None,
            error: None,
        }
    }

    fn run_backend(&self, backend: Backend, tau: usize, trial: usize) -> TrialResult {
        let seed = trial_seed(self.config.seed, backend.name(), tau, trial);
        let mut out = Self::empty(trial, seed);
        let attempt = autocoreset(self.train, &BuiltinLoss(self.config.task), self.config.task, &self.config.auto_config(backend, tau, seed))
            .and_then(|res| {
                out.coreset_size = Some(res.coreset.len());
                out.total_weight = Some(res.coreset.total_weight());
                out.trace = Some(res.trace);
                self.score(&mut out, &res.query)
            });
        if let Err(e) = attempt {
            out.error = Some(e.to_string());
        }
        out
    }

    fn run_baseline(&self, tau: usize, trial: usize) -> TrialResult {
        let seed = trial_seed(self.config.seed, BASELINE, tau, trial);
        let mut out = Self::empty(trial, seed);
        let attempt = uniform_baseline(self.train, self.config.task, tau, seed).and_then(|coreset| {
            out.coreset_size = Some(coreset.len());
            out.total_weight = Some(coreset.total_weight());
            let solver = SolverConfig { seed, ..self.solver.clone() };
            let q = solve_weighted(self.config.task, self.train, &coreset, &solver)?.query;
            self.score(&mut out, &q)
        });
        if let Err(e) = attempt {
            out.error = Some(e.to_string());
        }
        out
    }
}

/// Uniform sample of `tau` raw points weighted `n/tau`; per-class
/// proportional with a floor of one point per class for classification.
pub fn uniform_baseline(dataset: &Dataset, task: Task, tau: usize, seed: u64) -> Result<Coreset> {
    let n = dataset.n();
    let tau = tau.min(n);
    let mut rng = rng_from_seed(seed);
    match dataset.labels() {
        Some(labels) if task.is_classification() => {
            let pairs = stratified_sample(labels, tau, 1, &mut rng);
            Ok(Coreset::from_pairs(pairs, Backend::Uniform))
        }
        _ => {
            let idx = uniform_indices(n, tau, &mut rng);
            let w = n as f64 / tau as f64;
            let len = idx.len();
            Coreset::new(idx, vec![w; len], Backend::Uniform)
        }
    }
}

/// Run the sweep and write `report.json` and `summary.csv` under the
/// configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let report = build_report(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let json_path = config.output_dir.join("report.json");
    let csv_path = config.output_dir.join("summary.csv");
    report.write_json(&json_path)?;
    report.write_csv(&csv_path)?;
    Ok(ExperimentOutput { report, json_path, csv_path })
}

/// The sweep without touching the filesystem for output.
pub fn build_report(config: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    config.validate()?;
    let data = config.load_data()?;
    if let Some(&tau) = config.sizes.iter().find(|&&t| t > data.n()) {
        return Err(Error::Config(format!("coreset size {tau} exceeds n = {}", data.n())));
    }
    let (train, test) = if config.test_fraction > 0.0 {
        train_test_split(&data, config.task, config.test_fraction, derive_seed(config.seed, &[str_tag("split")]))
    } else {
        (data.clone(), data.clone())
    };
    let solver = config.solver_config();
    let (ref_query, ref_loss) = full_data_reference(&train, &BuiltinLoss(config.task), config.task, &solver)?;
    let ctx = Ctx { config, train: &train, test: &test, reference: ref_loss, solver };
    let ref_metric = {
        let mut r = Ctx::empty(0, 0);
        ctx.score(&mut r, &ref_query)?;
        ctx.metric_of(&r)
    };

    let mut backends = config.backends.clone();
    backends.sort();
    backends.dedup();
    let mut sizes = config.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    // (method, tau) -> trials; BTreeMap keeps a stable order, baseline last
    let mut jobs: Vec<(usize, Option<Backend>, usize, usize)> = Vec::new();
    for (rank, b) in backends.iter().enumerate() {
        for &tau in &sizes {
            jobs.extend((0..config.trials).map(|t| (rank, Some(*b), tau, t)));
        }
    }
    for &tau in &sizes {
        jobs.extend((0..config.trials).map(|t| (backends.len(), None, tau, t)));
    }
    let outcomes: Vec<(TrialResult, f64)> = jobs
        .par_iter()
        .map(|&(_, backend, tau, trial)| {
            let t0 = Instant::now();
            let r = match backend {
                Some(b) => ctx.run_backend(b, tau, trial),
                None => ctx.run_baseline(tau, trial),
            };
            (r, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut grouped: BTreeMap<(usize, usize), (String, Vec<TrialResult>)> = BTreeMap::new();
    let mut trial_seconds = Vec::with_capacity(jobs.len());
    for (&(rank, backend, tau, _), (result, secs)) in jobs.iter().zip(outcomes) {
        let name = backend.map_or(BASELINE.to_string(), |b| b.name().to_string());
        grouped.entry((rank, tau)).or_insert_with(|| (name, Vec::new())).1.push(result);
        trial_seconds.push(secs);
    }
    let results = grouped
        .into_iter()
        .map(|((_, tau), (method, trials))| {
            let ok: Vec<&TrialResult> = trials.iter().filter(|t| t.error.is_none()).collect();
            MethodResult {
                method,
                tau,
                completed: ok.len(),
                failed: trials.len() - ok.len(),
                approx_error: Summary::of(ok.iter().filter_map(|t| t.approx_error).collect()),
                metric_name: ctx.metric_name().to_string(),
                metric: Summary::of(ok.iter().filter_map(|t| ctx.metric_of(t)).collect()),
                coreset_size: Summary::of(ok.iter().filter_map(|t| t.coreset_size.map(|s| s as f64)).collect()),
                trials,
            }
        })
        .collect();

    Ok(Report {
        schema_version: SCHEMA_VERSION.to_string(),
        config: config.clone(),
        data: DataInfo {
            name: data.name().to_string(),
            n: data.n(),
            d: data.d(),
            n_train: train.n(),
            n_test: if config.test_fraction > 0.0 { test.n() } else { 0 },
            standardized: config.standardize,
        },
        reference: Reference { query: ref_query, train_loss: ref_loss, metric: ref_metric },
        results,
        timing: Timing {
            generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            total_seconds: started.elapsed().as_secs_f64(),
            trial_seconds,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(task: Task, spec: &str) -> ExperimentConfig {
        ExperimentConfig {
            trials: 1,
            max_iterations: 15,
            ..ExperimentConfig::new(task, spec.parse().unwrap(), vec![Backend::Caratheodory], vec![20])
        }
    }

    #[test]
    fn two_rows_for_one_backend_one_size() {
        let report = build_report(&small(Task::LogisticRegression, "blobs:n=200,d=3")).unwrap();
        assert_eq!(report.results.len(), 2);
        assert_eq!(report.results[0].method, "caratheodory");
        assert_eq!(report.results[1].method, BASELINE);
        assert!(report.all_completed());
    }

    #[test]
    fn defaults_echoed() {
        let cfg = ExperimentConfig::new(Task::Svm, "blobs:n=10,d=2".parse().unwrap(), vec![Backend::Uniform], vec![5]);
        assert_eq!((cfg.trials, cfg.m, cfg.patience), (16, 10, 7));
    }

    #[test]
    fn seeds_follow_lineage() {
        let cfg = ExperimentConfig { seed: 42, ..small(Task::LinearRegression, "linear:n=150,d=3,noise=0.5") };
        let report = build_report(&cfg).unwrap();
        for r in &report.results {
            for t in &r.trials {
                assert_eq!(t.seed, trial_seed(42, &r.method, r.tau, t.trial));
            }
        }
    }

    #[test]
    fn oversized_tau_rejected() {
        let cfg = ExperimentConfig { sizes: vec![500], ..small(Task::Svm, "blobs:n=100,d=2") };
        assert!(matches!(build_report(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn baseline_weights() {
        let ds = generate_synthetic(&"linear:n=100,d=2".parse().unwrap(), 1).unwrap();
        let cs = uniform_baseline(&ds, Task::LinearRegression, 10, 3).unwrap();
        assert_eq!(cs.len(), 10);
        assert!(cs.weights.iter().all(|&w| w == 10.0));
        let blobs = generate_synthetic(&"blobs:n=100,d=2,positive_fraction=0.02".parse().unwrap(), 1).unwrap();
        let cs = uniform_baseline(&blobs, Task::Svm, 10, 3).unwrap();
        let labels = blobs.labels().unwrap();
        assert!(cs.indices.iter().any(|&i| labels[i] == 1.0));
        assert!((cs.total_weight() - 100.0).abs() < 1e-9);
    }
}
