//! Estimates of the divergence functions: constrained minimization of
//! filling volumes, leaf slices of fillings, radius sweeps and growth
//! classification.
//!
//! Every volume reported here is an upper bound for the inner infimum; the
//! optimizer is local and makes no claim of reaching it.

mod growth;
mod optimize;
mod problem;
mod slice;

pub use growth::{
    antipodal_pair, estimate_divergence, fit_growth, sweep_fillings, FitLine, GrowthFit, GrowthKind, GrowthPoint,
    GrowthSeries, SphereGenerator, SweepEntry, SweepSettings, FIT_TIE,
};
pub use optimize::{optimize_filling, OptimizedFilling, GRADIENT_STEP};
pub use problem::{initial_filling, FillingProblem, OptimizerConfig, FILLING_LAYERS};
pub use slice::{leaf_slice, LeafSlice};
