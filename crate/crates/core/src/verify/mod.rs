//! Pass/fail and fitted-constant reports over trajectories and test fields.
//!
//! Every check is a pure function of its inputs, so suites may run them
//! concurrently.

pub mod criterion;
pub mod growth;
pub mod identities;
pub mod theorem1;
pub mod theorem2;

pub use criterion::{check_blowup_criterion, CriterionCase, CriterionClass, CriterionConfig, CriterionReport};
pub use growth::{
    check_boundary_dissipation, check_growth_hierarchy, growth_monitor, windowed_nonlinear_check, BoundaryReport,
    GrowthFit, GrowthModel, HierarchyReport, Quantity, WindowedReport,
};
pub use identities::{
    check_identity_multiplier, check_identity_pohozaev, hardy_suite, identity_suite, random_fields, HardySuiteReport,
    IdentityReport, IdentitySuiteReport,
};
pub use theorem1::{calibrate_theta1, check_theorem1, check_theorem1_with, IntervalSlack, MonotonicityReport};
pub use theorem2::{
    check_physical_theorem2, check_theorem2, check_theorem2_with, ode_fed_plateau, physical_scaled_norm,
    PlateauReport, Theorem2Report,
};

use crate::error::VerifyError;
use crate::record::{SnapshotRecord, TrajectoryRecord};

/// Default relative tolerance for trajectory-level inequalities.
pub const TRAJECTORY_TOL: f64 = 1e-3;

/// Snapshots at `start, start + 1, ...` up to the last recorded `s`.
pub(crate) fn unit_snapshots(rec: &TrajectoryRecord, start: f64) -> Result<Vec<&SnapshotRecord>, VerifyError> {
    let last = rec.snapshots.last().map(|r| r.s).ok_or(VerifyError::InsufficientSamples { needed: 2, got: 0 })?;
    let count = ((last - start) + 1e-9).floor();
    if count < 1.0 {
        return Err(VerifyError::InsufficientSamples { needed: 2, got: count.max(0.0) as usize + 1 });
    }
    (0..=count as usize)
        .map(|k| {
            let s = start + k as f64;
            rec.at(s, 1e-6).ok_or(VerifyError::MissingSnapshot(s))
        })
        .collect()
}

/// `∫_a^b` of a snapshot quantity by the trapezoid rule over the recorded
/// snapshots in `[a, b]`; both ends must be recorded.
pub(crate) fn trapezoid(rec: &TrajectoryRecord, a: f64, b: f64, q: &dyn Fn(&SnapshotRecord) -> f64) -> Result<f64, VerifyError> {
    rec.at(a, 1e-6).ok_or(VerifyError::MissingSnapshot(a))?;
    rec.at(b, 1e-6).ok_or(VerifyError::MissingSnapshot(b))?;
    let pts: Vec<&SnapshotRecord> = rec.snapshots.iter().filter(|r| r.s >= a - 1e-6 && r.s <= b + 1e-6).collect();
    Ok(pts.windows(2).map(|w| 0.5 * (w[1].s - w[0].s) * (q(w[0]) + q(w[1]))).sum())
}
