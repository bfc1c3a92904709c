//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails. All expectations are recomputed here
//! from first principles rather than through the library's own helpers.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use autocoreset::autocore::{convex_witness_check, stopping_update, ConvexWeights, Decision, StoppingState};
use autocoreset::experiment::{build_report, run_experiment, ExperimentConfig, BASELINE};
use autocoreset::vsum::{caratheodory, frank_wolfe, sensitivity_sampling, uniform_sampling};
use autocoreset::{
    autocoreset, generate_synthetic, solve_weighted, AutoConfig, AutoResult, Backend, BuiltinLoss, Coreset, Dataset,
    ErrorMode, Query, RowMatrix, SolverConfig, Task,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------- independent oracles ----------

fn oracle_loss(task: Task, x: &[f64], y: Option<f64>, q: &Query) -> f64 {
    let d = x.len();
    match task {
        Task::Kmeans => q
            .params
            .chunks(d)
            .map(|c| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min),
        _ => {
            let score = x.iter().zip(&q.params[..d]).map(|(a, b)| a * b).sum::<f64>() + q.params[d];
            let y = y.expect("labelled");
            match task {
                Task::LinearRegression => (score - y) * (score - y),
                Task::LogisticRegression => {
                    let t = y * score;
                    if t > 0.0 {
                        (-t).exp().ln_1p()
                    } else {
                        -t + t.exp().ln_1p()
                    }
                }
                Task::Svm => (1.0 - y * score).max(0.0),
                Task::Kmeans => unreachable!(),
            }
        }
    }
}

/// Loss matrix rebuilt from the stored queries: rows are points.
fn oracle_matrix(task: Task, data: &Dataset, queries: &[Query]) -> Vec<Vec<f64>> {
    (0..data.n())
        .map(|i| queries.iter().map(|q| oracle_loss(task, data.point(i), data.label(i), q)).collect())
        .collect()
}

fn column_sums(m: &[Vec<f64>], z: usize) -> Vec<f64> {
    (0..z).map(|j| m.iter().map(|r| r[j]).sum()).collect()
}

fn weighted_sums(m: &[Vec<f64>], z: usize, c: &Coreset) -> Vec<f64> {
    (0..z).map(|j| c.indices.iter().zip(&c.weights).map(|(&i, w)| w * m[i][j]).sum()).collect()
}

fn sq_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn synthetic(task: Task, seed: u64) -> Dataset {
    let spec = match task {
        Task::LinearRegression => "linear:n=400,d=4,noise=0.5",
        Task::LogisticRegression => "blobs:n=400,d=4,separation=2",
        Task::Svm => "blobs:n=400,d=4,separation=2.5,positive_fraction=0.3",
        Task::Kmeans => "gaussian-mixture-3:n=400,d=4",
    };
    generate_synthetic(&spec.parse().unwrap(), seed).unwrap()
}

fn timed(limit: Duration, started: Instant) -> Result<String, String> {
    let t = started.elapsed();
    ensure(t <= limit, || format!("took {t:.1?}, limit {limit:?}"))?;
    Ok(format!("{t:.1?}"))
}

// ---------- criteria ----------

fn c1_caratheodory_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst: f64 = 0.0;
    for t in 0..100u64 {
        let n = rng.random_range(8..=512);
        let z = rng.random_range(1..=32);
        let scale: f64 = (rng.sample::<f64, _>(StandardNormal) * 3.0).exp();
        let mut m: Vec<Vec<f64>> =
            (0..n).map(|_| (0..z).map(|_| scale * rng.sample::<f64, _>(StandardNormal).exp()).collect()).collect();
        if t % 5 == 0 && z > 1 {
            // rank-deficient: last column copies the first
            m.iter_mut().for_each(|r| r[z - 1] = r[0]);
        }
        if t % 7 == 0 {
            let r0 = m[0].clone();
            m.iter_mut().take(n / 2).for_each(|r| *r = r0.clone());
        }
        let c = caratheodory(&RowMatrix::from_rows(m.clone()).unwrap(), t);
        ensure(c.len() <= z + 1, || format!("matrix {t}: size {} > z+1 = {}", c.len(), z + 1))?;
        ensure(c.weights.iter().all(|&w| w >= 0.0), || format!("matrix {t}: negative weight"))?;
        let s = column_sums(&m, z);
        let err = sq_gap(&s, &weighted_sums(&m, z, &c));
        let bound = 1e-9 * (1.0 + s.iter().map(|v| v * v).sum::<f64>());
        worst = worst.max(err / bound);
        ensure(err <= bound, || format!("matrix {t}: error {err:e} > {bound:e}"))?;
    }
    Ok(format!("100 matrices, worst error/bound {worst:.2e}, {}", timed(Duration::from_secs(30), started)?))
}

struct Run {
    task: Task,
    data: Dataset,
    result: AutoResult,
}

fn lemma_runs() -> Vec<Run> {
    let tasks = [Task::LinearRegression, Task::LogisticRegression, Task::Svm, Task::Kmeans];
    let mut runs = Vec::new();
    for backend in Backend::ALL {
        for r in 0..20u64 {
            let task = tasks[r as usize % 4];
            let data = synthetic(task, 100 + r);
            let cfg = AutoConfig {
                seed: 7000 + 31 * r + backend as u64,
                max_iterations: 40,
                ..AutoConfig::new(task, backend, 24)
            };
            let result = autocoreset(&data, &BuiltinLoss(task), task, &cfg).unwrap();
            runs.push(Run { task, data, result });
        }
    }
    runs
}

fn c2_lemma_one(runs: &[Run], elapsed: Duration) -> Outcome {
    let started = Instant::now();
    let mut columns = 0;
    for (k, run) in runs.iter().enumerate() {
        let z = run.result.coreset_columns;
        let queries = &run.result.losses.queries()[..z];
        let m = oracle_matrix(run.task, &run.data, queries);
        let c = &run.result.coreset;
        let eps = sq_gap(&column_sums(&m, z), &weighted_sums(&m, z, c));
        let rel = (eps - c.vsum_error).abs() / (1.0 + eps);
        ensure(rel <= 1e-6, || format!("run {k}: reported vsum_error {} vs recomputed {eps}", c.vsum_error))?;
        let full = column_sums(&m, z);
        let approx = weighted_sums(&m, z, c);
        for j in 0..z {
            let gap = (full[j] - approx[j]).powi(2);
            ensure(gap <= c.vsum_error + 1e-6, || {
                format!("run {k} ({} {}), column {j}: {gap:e} > {:e}", run.task, c.source, c.vsum_error)
            })?;
            columns += 1;
        }
    }
    let total = elapsed + started.elapsed();
    ensure(total <= Duration::from_secs(300), || format!("took {total:.1?}"))?;
    Ok(format!("{} runs, {columns} columns, {total:.1?}", runs.len()))
}

fn c3_claim_two(runs: &[Run]) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut witnesses = 0;
    for (k, run) in runs.iter().enumerate() {
        let z = run.result.coreset_columns;
        let m = oracle_matrix(run.task, &run.data, &run.result.losses.queries()[..z]);
        let c = &run.result.coreset;
        let scale = m.iter().flatten().fold(0.0f64, |a, &b| a.max(b)) * m.len() as f64;
        for _ in 0..100 {
            let e: Vec<f64> = (0..z).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = e.iter().sum();
            let alpha: Vec<f64> = e.iter().map(|v| v / total).collect();
            let ell: Vec<Vec<f64>> = m.iter().map(|r| vec![r.iter().zip(&alpha).map(|(a, b)| a * b).sum()]).collect();
            let gap = sq_gap(&column_sums(&ell, 1), &weighted_sums(&ell, 1, c));
            // only roundoff of the synthetic column on top of the bound
            let rounding = 64.0 * f64::EPSILON * scale;
            ensure(gap <= c.vsum_error + 1e-6 + rounding * rounding + 2.0 * gap.sqrt() * rounding, || {
                format!("run {k}: witness gap {gap:e} > {:e}", c.vsum_error)
            })?;
            witnesses += 1;
        }
        let lib = convex_witness_check(
            &run.result.coreset_matrix(),
            c,
            &ConvexWeights::uniform(z),
            100,
            k as u64,
        )
        .map_err(|e| e.to_string())?;
        ensure(lib.passed, || format!("run {k}: library witness check failed"))?;
    }
    Ok(format!("{witnesses} witnesses, {}", timed(Duration::from_secs(60), started)?))
}

fn c4_multiplicative() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cols = 0;
    for (r, task) in [Task::LinearRegression, Task::LogisticRegression, Task::Svm, Task::Kmeans].into_iter().enumerate() {
        for rep in 0..3u64 {
            let data = synthetic(task, 300 + rep);
            let cfg = AutoConfig {
                error_mode: ErrorMode::Multiplicative,
                seed: 40 + rep + 10 * r as u64,
                max_iterations: 40,
                ..AutoConfig::new(task, Backend::Caratheodory, 24)
            };
            let res = autocoreset(&data, &BuiltinLoss(task), task, &cfg).map_err(|e| e.to_string())?;
            let z = res.coreset_columns;
            let m = oracle_matrix(task, &data, &res.losses.queries()[..z]);
            let full = column_sums(&m, z);
            let approx = weighted_sums(&m, z, &res.coreset);
            for j in 0..z {
                if full[j] > 1e-9 {
                    let rel = (full[j] - approx[j]).abs() / full[j];
                    worst = worst.max(rel);
                    ensure(rel <= 1e-6, || format!("{task} column {j}: relative error {rel:e}"))?;
                    cols += 1;
                }
            }
        }
    }
    Ok(format!("{cols} columns, worst relative error {worst:.2e}, {}", timed(Duration::from_secs(60), started)?))
}

fn c5_unbiasedness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let m: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random::<f64>() * 5.0).collect()).collect();
    let matrix = RowMatrix::from_rows(m.clone()).unwrap();
    let target = column_sums(&m, 4);
    let mut worst: f64 = 0.0;
    for backend in [Backend::Sensitivity, Backend::Uniform] {
        let draws: Vec<Vec<f64>> = (0..2000u64)
            .map(|s| {
                let c = match backend {
                    Backend::Sensitivity => sensitivity_sampling(&matrix, 8, 0.1, s),
                    _ => uniform_sampling(&matrix, 8, s),
                };
                weighted_sums(&m, 4, &c)
            })
            .collect();
        for j in 0..4 {
            let k = draws.len() as f64;
            let mean = draws.iter().map(|v| v[j]).sum::<f64>() / k;
            let sd = (draws.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
            let z = (mean - target[j]).abs() / (sd / k.sqrt());
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("{backend} coordinate {j}: |z| = {z:.2}"))?;
        }
    }
    Ok(format!("2000 seeds x 2 backends, largest |z| {worst:.2}, {}", timed(Duration::from_secs(60), started)?))
}

fn c6_dominance() -> Outcome {
    let started = Instant::now();
    let config = ExperimentConfig {
        trials: 16,
        test_fraction: 0.0,
        seed: 6,
        ..ExperimentConfig::new(
            Task::LogisticRegression,
            "blobs:n=20000,d=10".parse().unwrap(),
            vec![Backend::Caratheodory],
            vec![40, 80, 120, 160, 200],
        )
    };
    let report = build_report(&config).map_err(|e| e.to_string())?;
    ensure(report.data.n == 20000 && report.data.d == 10, || "wrong data shape".into())?;
    let data = config.load_data().map_err(|e| e.to_string())?;
    let reference: f64 =
        (0..data.n()).map(|i| oracle_loss(Task::LogisticRegression, data.point(i), data.label(i), &report.reference.query)).sum();
    ensure((reference - report.reference.train_loss).abs() <= 1e-9 * reference, || "reference loss mismatch".into())?;
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let k = v.len();
        0.5 * (v[(k - 1) / 2] + v[k / 2])
    };
    let mut wins = 0;
    let mut lines = Vec::new();
    for tau in &config.sizes {
        let pick = |method: &str| -> Vec<f64> {
            report
                .results
                .iter()
                .find(|r| r.method == method && r.tau == *tau)
                .map(|r| r.trials.iter().filter_map(|t| t.approx_error).collect())
                .unwrap_or_default()
        };
        let (mut a, mut b) = (pick("caratheodory"), pick(BASELINE));
        ensure(a.len() == 16 && b.len() == 16, || format!("tau {tau}: missing trials"))?;
        let (ma, mb) = (median(&mut a), median(&mut b));
        if ma < mb {
            wins += 1;
        }
        lines.push(format!("{tau}:{ma:.3e}/{mb:.3e}"));
    }
    ensure(wins >= 4, || format!("wins at {wins}/5 sizes [{}]", lines.join(" ")))?;
    Ok(format!("wins {wins}/5 [{}], {}", lines.join(" "), timed(Duration::from_secs(900), started)?))
}

fn c7_duplication() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for task in [Task::LinearRegression, Task::LogisticRegression, Task::Svm, Task::Kmeans] {
        let mut rng = ChaCha8Rng::seed_from_u64(70 + task as u64);
        let pts: Vec<Vec<f64>> = (0..10).map(|_| (0..2).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let labels: Option<Vec<f64>> = match task {
            Task::Kmeans => None,
            Task::LinearRegression => Some(pts.iter().map(|p| 2.0 * p[0] - p[1] + rng.sample::<f64, _>(StandardNormal)).collect()),
            _ => Some(pts.iter().map(|p| if p[0] + 0.3 * rng.sample::<f64, _>(StandardNormal) > 0.0 { 1.0 } else { -1.0 }).collect()),
        };
        let doubled = [1usize, 4, 7];
        let weights: Vec<f64> = (0..10).map(|i| if doubled.contains(&i) { 2.0 } else { 1.0 }).collect();
        let mut dup_pts = Vec::new();
        let mut dup_labels = Vec::new();
        for i in 0..10 {
            let copies = if doubled.contains(&i) { 2 } else { 1 };
            for _ in 0..copies {
                dup_pts.push(pts[i].clone());
                if let Some(l) = &labels {
                    dup_labels.push(l[i]);
                }
            }
        }
        let data = Dataset::new("ten", pts, labels.clone()).unwrap();
        let dup = Dataset::new("dup", dup_pts, labels.map(|_| dup_labels)).unwrap();
        let cfg = SolverConfig { k: 2, seed: 5, ..SolverConfig::for_task(task) };
        let a = solve_weighted(task, &data, &Coreset::new((0..10).collect(), weights, Backend::Uniform).unwrap(), &cfg)
            .map_err(|e| e.to_string())?;
        let b = solve_weighted(task, &dup, &Coreset::identity(13, Backend::Uniform), &cfg).map_err(|e| e.to_string())?;
        let dist = sq_gap(&a.query.params, &b.query.params).sqrt();
        worst = worst.max(dist);
        ensure(dist <= 1e-6, || format!("{task}: parameter distance {dist:e}"))?;
    }
    Ok(format!("4 tasks, worst distance {worst:.2e}, {}", timed(Duration::from_secs(10), started)?))
}

fn c8_stopping_replay() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in 0..1000 {
        let patience = rng.random_range(1..=10);
        let len = rng.random_range(1..=80);
        let mut level = 100.0;
        let sums: Vec<f64> = (0..len)
            .map(|_| {
                level += rng.random_range(-3i32..=3) as f64;
                level
            })
            .collect();

        // reference rule
        let (mut best, mut best_at, mut count, mut stop) = (f64::INFINITY, None, 0, None);
        for (i, &v) in sums.iter().enumerate() {
            if v < best {
                (best, best_at, count) = (v, Some(i), 0);
            } else {
                count += 1;
            }
            if count == patience {
                stop = Some(i);
                break;
            }
        }

        let mut state = StoppingState::default();
        let mut got = None;
        for (i, &v) in sums.iter().enumerate() {
            let (next, d) = stopping_update(state, v, patience);
            state = next;
            if d == Decision::Stop {
                got = Some(i);
                break;
            }
        }
        ensure(got == stop && state.best_iteration == best_at, || {
            format!("sequence {s}: stop {got:?} vs {stop:?}, best {:?} vs {best_at:?}", state.best_iteration)
        })?;
    }
    Ok(format!("1000 sequences, {}", timed(Duration::from_secs(5), started)?))
}

fn c9_frank_wolfe() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..20 {
        let n = rng.random_range(10..=300);
        let z = rng.random_range(1..=8);
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..z).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
        let matrix = RowMatrix::from_rows(m.clone()).unwrap();
        let mut diam2: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diam2 = diam2.max(sq_gap(&m[i], &m[j]));
            }
        }
        let full = column_sums(&m, z);
        let mut prev = f64::INFINITY;
        for tau in [1, 2, 3, 5, 8, 13, 21, 34, 55, 89] {
            let c = frank_wolfe(&matrix, tau);
            ensure(c.len() <= tau, || format!("matrix {t}: size {} > tau {tau}", c.len()))?;
            let err = sq_gap(&full, &weighted_sums(&m, z, &c));
            let bound = 4.0 * (n * n) as f64 * diam2 / (tau as f64 + 2.0);
            ensure(err <= prev * (1.0 + 1e-12) + 1e-12, || format!("matrix {t}: error rose at tau {tau}"))?;
            ensure(err <= bound, || format!("matrix {t}, tau {tau}: {err:e} > {bound:e}"))?;
            prev = err;
        }
    }
    Ok(format!("20 matrices, {}", timed(Duration::from_secs(30), started)?))
}

fn c10_determinism() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = ExperimentConfig {
        trials: 3,
        max_iterations: 30,
        seed: 10,
        output_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::new(
            Task::Svm,
            "blobs:n=1500,d=5,separation=2".parse().unwrap(),
            Backend::ALL.to_vec(),
            vec![30, 60],
        )
    };
    let strip = |text: String| -> Result<String, String> {
        let at = text.find("\n  \"timing\": ").ok_or("no timing field")?;
        ensure(!text[at + 1..].contains("\n  \""), || "timing is not the last field".into())?;
        Ok(text[..at].to_string())
    };
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = run_experiment(&config).map_err(|e| e.to_string())?;
        outputs.push(strip(std::fs::read_to_string(out.json_path).map_err(|e| e.to_string())?)?);
    }
    ensure(outputs[0] == outputs[1], || "reports differ".into())?;
    ensure(outputs[0].len() > 1000, || "report suspiciously small".into())?;
    Ok(format!("{} bytes identical, {}", outputs[0].len(), timed(Duration::from_secs(120), started)?))
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    let mut report = |n: usize, name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS  criterion {n:>2}  {name}: {detail}"),
            Ok(Err(why)) => {
                failures += 1;
                format!("FAIL  criterion {n:>2}  {name}: {why}")
            }
            Err(panic) => {
                failures += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("FAIL  criterion {n:>2}  {name}: panicked: {msg}")
            }
        };
        println!("{line}");
    };

    report(1, "caratheodory exactness", catch_unwind(c1_caratheodory_exactness));
    let t = Instant::now();
    match catch_unwind(lemma_runs) {
        Ok(runs) => {
            let elapsed = t.elapsed();
            report(2, "per-column bound", catch_unwind(AssertUnwindSafe(|| c2_lemma_one(&runs, elapsed))));
            report(3, "convex witnesses", catch_unwind(AssertUnwindSafe(|| c3_claim_two(&runs))));
        }
        Err(e) => {
            report(2, "per-column bound", Err(e));
            report(3, "convex witnesses", Ok(Err("no runs to check".into())));
        }
    }
    report(4, "multiplicative transform", catch_unwind(c4_multiplicative));
    report(5, "unbiasedness", catch_unwind(c5_unbiasedness));
    report(6, "dominance over uniform", catch_unwind(c6_dominance));
    report(7, "duplication equivalence", catch_unwind(c7_duplication));
    report(8, "stopping replay", catch_unwind(c8_stopping_replay));
    report(9, "frank-wolfe bound", catch_unwind(c9_frank_wolfe));
    report(10, "determinism", catch_unwind(c10_determinism));

    if failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
