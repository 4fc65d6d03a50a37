//! Monotonicity and positivity of the Lyapunov functional
//! `L(s) = e^{(p+3)/√s} (E + J) + θ1/s` along a trajectory.

use serde::{Deserialize, Serialize};

use super::{unit_snapshots, TRAJECTORY_TOL};
use crate::error::VerifyError;
use crate::functionals::l_from_g;
use crate::record::{SnapshotRecord, TerminationCause, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSlack {
    pub s: f64,
    pub l_start: f64,
    pub l_end: f64,
    /// `D(s) = ∫_s^{s+1} ∫ (∂_s w)² ρ/(1-|y|²) dy dτ`
    pub dissipation: f64,
    /// `a(n-1)/(4(s+1)) e^{(p+3)/√(s+1)} D(s)`, nonpositive for `a < 0`.
    pub bound: f64,
    /// `L(s+1) - L(s) - bound`; must stay below the tolerance.
    pub slack: f64,
    /// `L(s+1) - L(s) + ∫_s^{s+1} α e^{(p+3)/√τ} ∫(∂_s w)² ρ/(1-|y|²)`, the
    /// sharper form with the exact weight; reported, not asserted.
    pub slack_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub theta1: f64,
    pub start: f64,
    pub tolerance: f64,
    /// `(s, L(s))` on every snapshot from `start` on.
    pub series: Vec<(f64, f64)>,
    /// `(s, D(s))` per unit interval.
    pub dissipation: Vec<(f64, f64)>,
    /// Unit intervals, plus a shorter final one if the run ended early.
    pub intervals: Vec<IntervalSlack>,
    pub max_slack: f64,
    pub min_l: f64,
    pub monotone: bool,
    pub positive: bool,
    pub termination: TerminationCause,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Options {
    pub theta1: f64,
    /// Tolerance relative to `|L(start)|`.
    pub rel_tol: f64,
    /// Checks start this far after the first snapshot.
    pub skip: f64,
}

impl Theorem1Options {
    pub fn new(theta1: f64) -> Self {
        Self { theta1, rel_tol: TRAJECTORY_TOL, skip: 1.0 }
    }
}

fn l_of(r: &SnapshotRecord, theta1: f64, rec: &TrajectoryRecord) -> f64 {
    l_from_g(r.functionals.g, r.s, theta1, &rec.params)
}

fn check_hypotheses(rec: &TrajectoryRecord) -> Result<f64, VerifyError> {
    if !rec.params.theorem_mode() {
        return Err(VerifyError::Hypothesis(format!("a = {} is not negative", rec.params.a())));
    }
    let s0 = rec.s0().ok_or(VerifyError::InsufficientSamples { needed: 2, got: 0 })?;
    let need = 6.0 + (-rec.t0.ln()).max(0.0);
    if s0 < need - 1e-9 {
        return Err(VerifyError::Hypothesis(format!("run starts at s = {s0}, frame T0 = {} needs s >= {need}", rec.t0)));
    }
    Ok(s0)
}

pub fn check_theorem1(rec: &TrajectoryRecord, theta1: f64) -> Result<MonotonicityReport, VerifyError> {
    check_theorem1_with(rec, &Theorem1Options::new(theta1))
}

pub fn check_theorem1_with(rec: &TrajectoryRecord, opts: &Theorem1Options) -> Result<MonotonicityReport, VerifyError> {
    let s0 = check_hypotheses(rec)?;
    let start = s0 + opts.skip;
    let clean = matches!(rec.termination, TerminationCause::Horizon);
    let mut units = match unit_snapshots(rec, start) {
        Ok(u) => u,
        // a run that ended early still gets a (failing) report
        Err(VerifyError::InsufficientSamples { .. }) if !clean => {
            rec.at(start, 1e-6).or(rec.snapshots.last()).into_iter().collect()
        }
        Err(e) => return Err(e),
    };
    // a run that stopped between unit snapshots contributes its last partial interval
    if let (Some(&u), Some(last)) = (units.last(), rec.snapshots.last()) {
        if last.s > u.s + 1e-6 {
            units.push(last);
        }
    }
    let params = rec.params;
    let (n, a, p) = (params.nf(), params.a(), params.p());
    let theta1 = opts.theta1;
    let tolerance = opts.rel_tol * l_of(units[0], theta1, rec).abs();

    let intervals: Vec<IntervalSlack> = units
        .windows(2)
        .map(|w| {
            let (r0, r1) = (w[0], w[1]);
            let (l_start, l_end) = (l_of(r0, theta1, rec), l_of(r1, theta1, rec));
            let dissipation = r1.dissipation_cum - r0.dissipation_cum;
            let sp = r1.s;
            let bound = a * (n - 1.0) / (4.0 * sp) * ((p + 3.0) / sp.sqrt()).exp() * dissipation;
            let alpha_part = r1.dissipation_alpha_cum - r0.dissipation_alpha_cum;
            IntervalSlack {
                s: r0.s,
                l_start,
                l_end,
                dissipation,
                bound,
                slack: l_end - l_start - bound,
                slack_alpha: l_end - l_start + alpha_part,
            }
        })
        .collect();
    let series: Vec<(f64, f64)> = rec
        .snapshots
        .iter()
        .filter(|r| r.s >= units[0].s - 1e-6)
        .map(|r| (r.s, l_of(r, theta1, rec)))
        .collect();
    let max_slack = intervals.iter().map(|i| i.slack).fold(f64::NEG_INFINITY, f64::max);
    let min_l = series.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let monotone = intervals.iter().all(|i| i.slack <= tolerance);
    let positive = series.iter().all(|x| x.1 >= -tolerance);
    Ok(MonotonicityReport {
        theta1,
        start,
        tolerance,
        dissipation: intervals.iter().map(|i| (i.s, i.dissipation)).collect(),
        series,
        intervals,
        max_slack,
        min_l,
        monotone,
        positive,
        termination: rec.termination,
        passed: monotone && positive && clean,
    })
}

/// Smallest `θ1 ∈ {1, 2, 4, ...}` keeping `L >= 0` on the calibration
/// trajectory from `s0 + skip` on.
pub fn calibrate_theta1(rec: &TrajectoryRecord, skip: f64) -> Result<f64, VerifyError> {
    let s0 = rec.s0().ok_or(VerifyError::InsufficientSamples { needed: 1, got: 0 })?;
    let snaps: Vec<&SnapshotRecord> = rec.snapshots.iter().filter(|r| r.s >= s0 + skip - 1e-6).collect();
    if snaps.is_empty() {
        return Err(VerifyError::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut theta1 = 1.0;
    for _ in 0..200 {
        if snaps.iter().all(|r| l_of(r, theta1, rec) >= 0.0) {
            return Ok(theta1);
        }
        theta1 *= 2.0;
    }
    Err(VerifyError::Hypothesis("no theta1 up to 2^200 makes L nonnegative".into()))
}
