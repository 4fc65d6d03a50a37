//! Radial solvers: the similarity-variable equation for `w` and the
//! physical-space equation for `u`, plus the comparison between them.

mod linalg;
pub mod similarity;

pub use similarity::{
    run_similarity, step_similarity, tune_level, Accumulated, Fault, InitialData, Manufactured, ProbeOutcome,
    SimilarityRunConfig, SimilaritySolver, DEFAULT_GRID_SIZE,
};
pub mod physical;

pub use physical::{
    fit_blowup_time, run_physical, step_physical, PhysicalControls, PhysicalGrid, PhysicalRun, PhysicalState,
};
pub mod cross;

pub use cross::{cross_check, transform, CrossCheckConfig, CrossCheckReport};
