//! Seeded synthetic datasets standing in for real benchmark data.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Generator description. Textual form: `name:key=value,key=value`, e.g.
/// `blobs:n=2000,d=5,separation=3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticSpec {
    /// Two Gaussian classes with means `+-(separation/2) (1,..,1)/sqrt(d)`.
    TwoGaussianBlobs {
        n: usize,
        d: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default = "default_noise")]
        noise: f64,
        /// Share of points labelled +1.
        #[serde(default = "default_balance")]
        positive_fraction: f64,
    },
    /// `y = w.x + b + noise * N(0,1)` with Gaussian features and a Gaussian `w`.
    LinearWithNoise {
        n: usize,
        d: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// `k` Gaussian clusters, centers drawn as `separation * N(0, I)`.
    GaussianMixture {
        n: usize,
        d: usize,
        k: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
}

fn default_separation() -> f64 {
    3.0
}

fn default_noise() -> f64 {
    1.0
}

fn default_balance() -> f64 {
    0.5
}

impl SyntheticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticSpec::TwoGaussianBlobs { .. } => "two-gaussian-blobs",
            SyntheticSpec::LinearWithNoise { .. } => "linear-with-noise",
            SyntheticSpec::GaussianMixture { .. } => "gaussian-mixture",
        }
    }
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut table = serde_json::Map::new();
        let generator = match name {
            "blobs" | "two-gaussian-blobs" => "two-gaussian-blobs",
            "linear" | "linear-with-noise" => "linear-with-noise",
            "mixture" | "gaussian-mixture" => "gaussian-mixture",
            other if other.starts_with("gaussian-mixture-") => {
                let k: usize = other["gaussian-mixture-".len()..]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad generator `{other}`")))?;
                table.insert("k".into(), k.into());
                "gaussian-mixture"
            }
            other => return Err(Error::Config(format!("unknown generator `{other}`"))),
        };
        table.insert("generator".into(), generator.into());
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
            let num: f64 = v.parse().map_err(|_| Error::Config(format!("`{k}` is not a number")))?;
            let value = if num.fract() == 0.0 && matches!(k, "n" | "d" | "k") {
                serde_json::Value::from(num as u64)
            } else {
                serde_json::Value::from(num)
            };
            table.insert(k.replace('-', "_"), value);
        }
        serde_json::from_value(serde_json::Value::Object(table)).map_err(|e| Error::Config(e.to_string()))
    }
}

fn normal(rng: &mut crate::rng::Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Build the dataset described by `spec` from `seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    match *spec {
        SyntheticSpec::TwoGaussianBlobs { n, d, separation, noise, positive_fraction } => {
            if !(0.0..=1.0).contains(&positive_fraction) {
                return Err(Error::Config("positive_fraction must lie in [0, 1]".into()));
            }
            let positives = (n as f64 * positive_fraction).round() as usize;
            let mut labels: Vec<f64> = (0..n).map(|i| if i < positives { 1.0 } else { -1.0 }).collect();
            labels.shuffle(&mut rng);
            let offset = 0.5 * separation / (d as f64).sqrt();
            let rows = labels
                .iter()
                .map(|&y| (0..d).map(|_| y * offset + noise * normal(&mut rng)).collect())
                .collect();
            Dataset::new(spec.name(), rows, Some(labels))
        }
        SyntheticSpec::LinearWithNoise { n, d, noise } => {
            let w: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
            let b = normal(&mut rng);
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let x: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
                labels.push(crate::linalg::dot(&w, &x) + b + noise * normal(&mut rng));
                rows.push(x);
            }
            Dataset::new(spec.name(), rows, Some(labels))
        }
        SyntheticSpec::GaussianMixture { n, d, k, separation, noise } => {
            if k == 0 {
                return Err(Error::Config("k must be >= 1".into()));
            }
            let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| separation * normal(&mut rng)).collect()).collect();
            let rows = (0..n)
                .map(|i| centers[i % k].iter().map(|c| c + noise * normal(&mut rng)).collect())
                .collect();
            Dataset::new(spec.name(), rows, None)
        }
    }
}
