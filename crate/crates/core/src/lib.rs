//! Minimum time functions of differential inclusions, Pontryagin extremals,
//! attainable sets, and numerical certificates of their regularity.

pub mod error;
pub mod extremal;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod solver;
pub mod target;

pub use error::{Error, Result};
pub use model::{eval_argmax, eval_hamiltonian, Constants, InclusionModel};
pub use rng::SplitMix64;
pub use solver::{attainable_set, solve_min_time, Grid, ScalarField, SolveOptions};
pub use target::TargetSet;
