//! Moment estimation, exact empirical Wasserstein distances, quadrature
//! reference moments and the invariant-bias step-size sweep.

mod bias;
mod moments;
mod reference;
mod wasserstein;

pub use bias::{
    bias_sweep, BiasSweep, BiasSweepConfig, BiasSweepRow, OrderFit, CONCLUSIVE_SE_RATIO,
};
pub use moments::{estimate_moments, BatchMeans, MomentReport, MIN_BATCHES};
pub use reference::{reference_moments, reference_moments_with, ReferenceMoments};
pub use wasserstein::{
    assignment_cost, wasserstein2_assignment, wasserstein2_exact, MAX_ASSIGNMENT_SIZE,
};
