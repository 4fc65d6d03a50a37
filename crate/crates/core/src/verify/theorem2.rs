//! Two-sided bounds on the `H¹(B) × L²(B)` size of a blow-up solution in
//! similarity variables, and their physical-space counterpart.

use serde::{Deserialize, Serialize};

use crate::error::{SolverError, VerifyError};
use crate::model::{kappa, ln_psi_tau, ModelParams, NonlinearityTable};
use crate::ode::{integrate_ode, similarity_data, state_at_tau, OdeControls};
use crate::pde::{InitialData, PhysicalState, SimilarityRunConfig, SimilaritySolver};
use crate::quad::{ball_volume, sphere_area};
use crate::record::{TerminationCause, TrajectoryRecord};

pub const DEFAULT_FLOOR_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    /// First `s` (or `t` for physical runs) of the verified window.
    pub window_start: f64,
    pub samples: Vec<(f64, f64)>,
    pub inf_norm: f64,
    pub sup_norm: f64,
    /// Candidate `ε₀` and `K`: the observed inf and sup.
    pub eps0_fit: f64,
    pub k_fit: f64,
    pub floor_ratio: f64,
    pub flags_ok: bool,
    pub passed: bool,
}

fn assemble(window_start: f64, samples: Vec<(f64, f64)>, floor_ratio: f64, flags_ok: bool, finite_run: bool) -> Theorem2Report {
    let inf_norm = samples.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let sup_norm = samples.iter().map(|x| x.1).fold(0.0f64, f64::max);
    let passed = flags_ok && finite_run && sup_norm.is_finite() && inf_norm > 0.0 && inf_norm >= floor_ratio * sup_norm;
    Theorem2Report { window_start, samples, inf_norm, sup_norm, eps0_fit: inf_norm, k_fit: sup_norm, floor_ratio, flags_ok, passed }
}

pub fn check_theorem2(rec: &TrajectoryRecord) -> Result<Theorem2Report, VerifyError> {
    check_theorem2_with(rec, DEFAULT_FLOOR_RATIO)
}

/// Norm series over `s >= 13 - ln T0`.
pub fn check_theorem2_with(rec: &TrajectoryRecord, floor_ratio: f64) -> Result<Theorem2Report, VerifyError> {
    let window_start = 13.0 - rec.t0.ln();
    let snaps: Vec<_> = rec.snapshots.iter().filter(|r| r.s >= window_start - 1e-9).collect();
    if snaps.len() < 2 {
        return Err(VerifyError::Hypothesis(format!(
            "run must cover s >= {window_start} (13 - ln T0); {} snapshots do",
            snaps.len()
        )));
    }
    let flags_ok = snaps.iter().all(|r| r.functionals.flags.ok());
    let samples = snaps.iter().map(|r| (r.s, r.functionals.components.h1l2_norm)).collect();
    let finite_run = rec.termination == TerminationCause::Horizon;
    Ok(assemble(window_start, samples, floor_ratio, flags_ok, finite_run))
}

/// `(1/ψ_T)(‖u‖/τ^{n/2} + ‖∂_t u‖/τ^{n/2-1} + ‖∇u‖/τ^{n/2-1})`, norms in
/// `L²(B(0, τ))`, `τ = T - t`.
pub fn physical_scaled_norm(state: &PhysicalState, t_blowup: f64) -> Result<f64, VerifyError> {
    let tau = t_blowup - state.t;
    let g = &state.grid;
    if !(tau > 0.0) || tau > g.radius {
        return Err(VerifyError::NoOverlap(format!("cone radius {tau} outside (0, {}]", g.radius)));
    }
    let m = g.len();
    let nf = g.n as f64;
    let u = &state.u;
    let ur: Vec<f64> = (0..m)
        .map(|i| {
            let left = if i == 0 { u[0] } else { u[i - 1] };
            if i + 1 == m {
                (u[i] - u[i - 1]) / g.dr
            } else {
                (u[i + 1] - left) / (2.0 * g.dr)
            }
        })
        .collect();
    let mut sums = [0.0; 3];
    for i in 0..m {
        let lo = i as f64 * g.dr;
        if lo >= tau {
            break;
        }
        let hi = ((i + 1) as f64 * g.dr).min(tau);
        let vol = sphere_area(g.n) * (hi.powf(nf) - lo.powf(nf)) / nf;
        sums[0] += vol * u[i] * u[i];
        sums[1] += vol * state.ut[i] * state.ut[i];
        sums[2] += vol * ur[i] * ur[i];
    }
    let psi = ln_psi_tau(tau, &state.params)?.exp();
    let half = 0.5 * nf;
    Ok((sums[0].sqrt() / tau.powf(half) + (sums[1].sqrt() + sums[2].sqrt()) / tau.powf(half - 1.0)) / psi)
}

/// Scaled-norm series over physical snapshots approaching `t_blowup`.
pub fn check_physical_theorem2(
    states: &[PhysicalState],
    t_blowup: f64,
    floor_ratio: f64,
) -> Result<Theorem2Report, VerifyError> {
    if states.len() < 2 {
        return Err(VerifyError::InsufficientSamples { needed: 2, got: states.len() });
    }
    let samples = states
        .iter()
        .map(|st| Ok((st.t, physical_scaled_norm(st, t_blowup)?)))
        .collect::<Result<Vec<_>, VerifyError>>()?;
    Ok(assemble(states[0].t, samples, floor_ratio, true, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub t_est: f64,
    /// `(s, ‖w‖_{H¹} + ‖∂_s w‖_{L²}) / (κ |B|^{1/2})`
    pub ratio: Vec<(f64, f64)>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub record: TrajectoryRecord,
    pub passed: bool,
}

/// Feeds the space-independent ODE blow-up at remaining time `e^{-s0}` into
/// the similarity solver and measures the norm plateau against `κ |B|^{1/2}`.
pub fn ode_fed_plateau(params: ModelParams, level: f64, s0: f64, s1: f64, grid_size: usize) -> Result<PlateauReport, VerifyError> {
    let traj = integrate_ode(level, 0.0, params, &OdeControls::default())?;
    let t_est = traj.t_est.ok_or_else(|| SolverError::Config(format!("ODE from v = {level} does not blow up")))?;
    let table = NonlinearityTable::new(params);
    let tau = (-s0).exp();
    let (v, dv) = state_at_tau(&traj, tau, &table)
        .ok_or_else(|| SolverError::Config(format!("ODE state at T - t = {tau:e} unavailable")))?;
    let (w, ws) = similarity_data(v, dv, tau, &params)
        .ok_or_else(|| SolverError::Config("similarity data of the ODE state overflowed".into()))?;
    let mut cfg = SimilarityRunConfig::starting_at(params, s0, s1);
    cfg.t0 = t_est.min(1.0).max((-s0).exp());
    cfg.s_floor = 0.0;
    cfg.grid_size = grid_size;
    let solver = SimilaritySolver::new(cfg)?;
    let nodes = solver.grid().len();
    let init = InitialData::Values { w: vec![w; nodes], dw_ds: vec![ws; nodes] };
    let record = solver.run(solver.initial_state(&init, 0.0)?)?;
    let scale = kappa(&params) * ball_volume(params.n()).sqrt();
    let ratio: Vec<(f64, f64)> = record.snapshots.iter().map(|r| (r.s, r.functionals.components.h1l2_norm / scale)).collect();
    let max_deviation = ratio.iter().map(|x| (x.1 - 1.0).abs()).fold(0.0, f64::max);
    let tolerance = 0.05;
    let passed = record.termination == TerminationCause::Horizon && max_deviation <= tolerance;
    Ok(PlateauReport { t_est, ratio, max_deviation, tolerance, record, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::PhysicalGrid;
    use std::sync::Arc;

    fn zero_run() -> TrajectoryRecord {
        let p = ModelParams::new(3, -1.0).unwrap();
        let mut cfg = SimilarityRunConfig::starting_at(p, 20.0, 22.0);
        cfg.t0 = (-7.0f64).exp();
        cfg.grid_size = 8;
        cfg.s_floor = 0.0;
        let solver = SimilaritySolver::new(cfg).unwrap();
        solver.run(solver.initial_state(&InitialData::Zero, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_trajectory_fails() {
        let r = check_theorem2(&zero_run()).unwrap();
        assert_eq!(r.inf_norm, 0.0);
        assert!(!r.passed);
    }

    #[test]
    fn window_must_be_covered() {
        let mut rec = zero_run();
        rec.t0 = 1e-6;
        assert!(matches!(check_theorem2(&rec), Err(VerifyError::Hypothesis(_))));
    }

    #[test]
    fn physical_norm_of_a_constant() {
        // u ≡ c, u_t ≡ 0: only the L² term survives, c |B|^{1/2} / ψ.
        let p = ModelParams::new(3, -1.0).unwrap();
        let g = Arc::new(PhysicalGrid::new(3, 1.0, 200).unwrap());
        let mut st = PhysicalState::from_fn(g, p, true, |_| 3.0, |_| 0.0);
        st.t = 0.25;
        let got = physical_scaled_norm(&st, 0.75).unwrap();
        let psi = ln_psi_tau(0.5, &p).unwrap().exp();
        let want = 3.0 * ball_volume(3).sqrt() / psi;
        assert!((got - want).abs() < 1e-12 * want);
    }
}
