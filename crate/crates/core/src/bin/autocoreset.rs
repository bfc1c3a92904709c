use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use autocoreset::checks::run_checks;
use autocoreset::experiment::{generate_synthetic, run_experiment, write_csv, ExperimentConfig, SyntheticSpec};
use autocoreset::{Backend, Error, Task};

const OUT_DIR_ENV: &str = "AUTOCORESET_OUT_DIR";

#[derive(Parser)]
#[command(name = "autocoreset", version, about = "Data-driven coresets for arbitrary losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coreset-size sweep and write report.json and summary.csv.
    Run(Box<RunArgs>),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Run the invariant suites.
    Check(CheckArgs),
}

/// Every option may also come from the config file, but not from both.
#[derive(Args)]
struct RunArgs {
    /// TOML (or .json) experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Generator spec, e.g. `blobs:n=2000,d=5,separation=3`.
    #[arg(long)]
    synthetic: Option<SyntheticSpec>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long, value_delimiter = ',')]
    backends: Option<Vec<Backend>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of initial solutions.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// `optimal` or `last`.
    #[arg(long)]
    mode: Option<String>,
    /// `additive` or `multiplicative`.
    #[arg(long)]
    error_mode: Option<String>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overridden by AUTOCORESET_OUT_DIR.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    generator: SyntheticSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("flag values serialize")
}

impl RunArgs {
    fn flags(&self) -> Map<String, Value> {
        let mut map = Map::new();
        let mut put = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(key.to_string(), v);
            }
        };
        put("dataset", self.dataset.as_ref().map(json));
        put("label_column", self.label_column.as_ref().map(json));
        put("synthetic", self.synthetic.as_ref().map(json));
        put("task", self.task.as_ref().map(json));
        put("backends", self.backends.as_ref().map(json));
        put("sizes", self.sizes.as_ref().map(json));
        put("trials", self.trials.as_ref().map(json));
        put("m", self.m.as_ref().map(json));
        put("patience", self.patience.as_ref().map(json));
        put("mode", self.mode.as_ref().map(json));
        put("error_mode", self.error_mode.as_ref().map(json));
        put("max_iterations", self.max_iterations.as_ref().map(json));
        put("seed", self.seed.as_ref().map(json));
        put("output_dir", self.output_dir.as_ref().map(json));
        put("standardize", self.standardize.then_some(Value::Bool(true)));
        put("test_fraction", self.test_fraction.as_ref().map(json));
        put("lambda", self.lambda.as_ref().map(json));
        put("k", self.k.as_ref().map(json));
        map
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut merged = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let value: Value = if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text)?
                } else {
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                };
                match value {
                    Value::Object(map) => map,
                    _ => return Err(Error::Config("config file must be a table".into())),
                }
            }
            None => Map::new(),
        };
        for (key, value) in self.flags() {
            if merged.contains_key(&key) {
                return Err(Error::Config(format!("`{key}` is set both by flag and in the config file")));
            }
            merged.insert(key, value);
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            merged.insert("output_dir".into(), Value::String(dir));
        }
        let config: ExperimentConfig =
            serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match run_experiment(&config) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = &out.report;
    println!("{:<18} {:>6} {:>14} {:>14} {:>10} {:>10}", "method", "tau", "approx_err", "std", report.results.first().map_or("metric", |r| r.metric_name.as_str()), "failed");
    for r in &report.results {
        println!(
            "{:<18} {:>6} {:>14.6e} {:>14.6e} {:>10.4} {:>10}",
            r.method, r.tau, r.approx_error.mean, r.approx_error.std, r.metric.mean, r.failed
        );
    }
    println!("wrote {} and {}", out.json_path.display(), out.csv_path.display());
    if report.all_completed() {
        ExitCode::SUCCESS
    } else {
        for r in &report.results {
            for t in r.trials.iter().filter(|t| t.error.is_some()) {
                eprintln!("{} tau={} trial={}: {}", r.method, r.tau, t.trial, t.error.as_deref().unwrap_or(""));
            }
        }
        ExitCode::from(1)
    }
}

fn synth(args: &SynthArgs) -> ExitCode {
    let result = generate_synthetic(&args.generator, args.seed).and_then(|d| write_csv(&d, &args.out).map(|_| d));
    match result {
        Ok(d) => {
            println!("wrote {} rows x {} features to {}", d.n(), d.d(), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn check(args: &CheckArgs) -> ExitCode {
    match run_checks(args.seed) {
        Ok(results) => {
            let mut ok = true;
            for r in &results {
                println!("{} {:<26} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
        Command::Check(args) => check(args),
    }
}
