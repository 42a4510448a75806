//! Condition numbers of standard-form linear programs.
//!
//! For data `d = (A, b, c)` with a unique optimal basis `B`, the distance to
//! ill-posedness is `h_B(d)`, the smallest distance to singularity over
//! `n + 1` square submatrices of `[A_B, b]` and `(A; c^T)`, with every norm
//! taken as the `l1 -> l2` operator norm. [`cond::kappa`] reports
//! `K(d) = |d|_12 / h_B(d)`.
//!
//! [`symmetry`] implements the sign-flip group used to symmetrize Gaussian
//! data, and [`mc`] runs seeded Monte Carlo experiments on top of it.

pub mod cond;
pub mod dense;
pub mod lp;
pub mod mc;
pub mod sampler;
pub mod symmetry;
pub mod verify;

pub use cond::{kappa, ConditionReport};
pub use lp::{Basis, BasisClass, DataTriple, Verdict};
pub use mc::{run_experiment, Experiment, McConfig, McResult};
pub use symmetry::SignVector;
