//! Polynomial-model-based blackbox optimization.
//!
//! The optimizer fits a polynomial surrogate over a downward-closed
//! multi-index set to the evaluations seen so far, grows the index set one
//! frontier node at a time using a bootstrap-variance acquisition, and
//! evaluates the surrogate's analytic minimizer to exploit the model.
//!
//! All optimizers work on the unit cube `[-1, 1]^m`; [`benchmarks::Objective`]
//! maps cube points into each test function's native box.
//!
//! ```
//! use pmbo::benchmarks::Objective;
//! use pmbo::optimizer::{run, PmboConfig};
//!
//! let objective = Objective::himmelblau2();
//! let mut config = PmboConfig::default();
//! config.max_evaluations = 80;
//! let trace = run(&objective, &config).unwrap();
//! assert!(trace.len() <= 80);
//! ```

pub mod acquisition;
pub mod baselines;
pub mod benchmarks;
mod error;
pub mod harness;
pub mod multiindex;
pub mod optimizer;
pub mod sampling;
pub mod surrogate;
pub mod trace;

pub use error::{Error, Result};
