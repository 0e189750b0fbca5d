//! Smoothing accelerated proximal gradient methods for
//!
//! ```text
//! min_{x ∈ X}  c(x) + g(x)
//! ```
//!
//! where `c` is convex but nonsmooth and admits a smoothing function, `g` is
//! convex with a closed-form proximal step, and `X` is a box.
//!
//! * [`solver`]: SAPG (accelerated), SPG (no extrapolation) and ISAPG
//!   (fixed step, inexact gradients).
//! * [`smoothing`]: smoothable losses and their constants.
//! * [`prox`]: proximal steps over the box.
//! * [`diagnostics`]: Lyapunov energy and rate statistics along a run.
//! * [`datagen`], [`bench`]: seeded instances and the table/curve runner.
//! * [`checks`], [`cli`]: the property suites and the command-line front end.

pub mod bench;
pub mod checks;
pub mod cli;
pub mod datagen;
pub mod diagnostics;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod smoothing;
pub mod solver;

pub use linalg::{DenseMatrix, Vector};
pub use model::{default_config, CompositeProblem, SolveResult, SolverConfig, StopReason};
pub use solver::{isapg_solve, sapg_solve, spg_solve};
