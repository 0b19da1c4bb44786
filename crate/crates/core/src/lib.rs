//! Randomized maximum likelihood (RML) posterior sampling for Bayesian
//! inverse problems with expensive simulators.
//!
//! Every RML sample is the maximizer of a randomized log-posterior. This
//! crate maximizes all of those objectives jointly with high-dimensional
//! Bayesian optimization over a set of fixed random embeddings, reusing one
//! shared ensemble of simulator runs for every objective. Baselines and a
//! benchmark harness over synthetic ridge-structured simulators compare the
//! sampler under a fixed simulation budget.
//!
//! Module map:
//!
//! * [`probspec`]: simulators, priors and the Gaussian likelihood.
//! * [`linalg`]: Cholesky-backed SPD matrices.
//! * [`rml`]: randomized objectives, with the closed-form maximizer for
//!   linear simulators.
//! * [`gp`]: squared-exponential Gaussian process surrogate and GP-UCB.
//! * [`embedding`]: random embeddings and the low-dimensional search box.
//! * [`hdbo`]: the embedding-based Bayesian optimization loop over all
//!   randomized objectives.
//! * [`baselines`]: random design and per-objective simplex search.
//! * [`bench`](mod@bench): synthetic problems, mean return, budget curves and
//!   active-subspace projections.

pub mod baselines;
pub mod bench;
pub mod embedding;
pub mod error;
pub mod gp;
pub mod hdbo;
pub mod linalg;
pub mod probspec;
pub mod qmc;
pub mod rml;
pub mod seeding;

pub use error::{Error, Result};
