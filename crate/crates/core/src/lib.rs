//! Data-driven coresets for arbitrary nonnegative losses.
//!
//! A dataset `P` and a loss `f(p, x)` induce a loss matrix whose column `j`
//! holds `f(p_i, x_j)` for a candidate solution `x_j`. A weighted subset
//! whose weighted row sum approximates the full row sum of that matrix
//! approximates every column total, and so every convex combination of the
//! candidate losses. [`autocore::autocoreset`] grows the matrix from
//! solutions found on its own coresets until the new solutions stop
//! improving.
//!
//! ```
//! use autocoreset::{autocoreset, generate_synthetic, AutoConfig, Backend, BuiltinLoss, Task};
//!
//! let data = generate_synthetic(&"blobs:n=400,d=3".parse().unwrap(), 1).unwrap();
//! let task = Task::LogisticRegression;
//! let config = AutoConfig::new(task, Backend::Caratheodory, 40);
//! let run = autocoreset(&data, &BuiltinLoss(task), task, &config).unwrap();
//! assert!(run.coreset.len() <= run.coreset_columns + 1);
//! ```

pub mod autocore;
pub mod checks;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub(crate) mod linalg;
pub mod losses;
pub mod rng;
pub mod sampling;
pub mod solvers;
pub mod vsum;

pub use autocore::{autocoreset, AutoConfig, AutoResult, CoresetMode, ErrorMode};
pub use data::{Coreset, Dataset, LossMatrix, Query, RowMatrix, Task};
pub use error::{Error, Result};
pub use experiment::{generate_synthetic, load_csv, run_experiment, ExperimentConfig, SyntheticSpec};
pub use losses::{BuiltinLoss, CustomLoss, LossFunction};
pub use solvers::{solve_weighted, SolverConfig};
pub use vsum::{summarize, Backend, VsumRequest};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/loss-matrix.md")]
    mod loss_matrix {}
    #[doc = include_str!("../../../book/src/vector-summarization.md")]
    mod vector_summarization {}
    #[doc = include_str!("../../../book/src/construction-loop.md")]
    mod construction_loop {}
    #[doc = include_str!("../../../book/src/guarantees.md")]
    mod guarantees {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
