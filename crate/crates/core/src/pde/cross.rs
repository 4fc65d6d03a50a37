//! Agreement between the physical and the similarity-variable solvers.
//!
//! A physical run is mapped to `w(y, s) = u(T - e^{-s}, y e^{-s}) / ψ_T` and
//! compared with a similarity run started from the first mapped state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::physical::{fit_blowup_time, run_physical, PhysicalControls, PhysicalGrid, PhysicalState};
use super::similarity::{InitialData, SimilarityRunConfig, SimilaritySolver};
use crate::error::{SolverError, VerifyError};
use crate::model::{ln_psi_tau, psi_log_derivative, ModelParams};
use crate::quad::{FieldState, RadialGrid};

/// `(w, ∂_s w)` on `grid` from a physical state at `t = t0 - e^{-s}`.
pub fn transform(state: &PhysicalState, t0: f64, s: f64, grid: &Arc<RadialGrid>) -> Result<FieldState, SolverError> {
    let tau = (-s).exp();
    if (state.t - (t0 - tau)).abs() > 1e-9 * tau.max(1e-300).min(1.0) + 1e-14 {
        return Err(SolverError::Config(format!("state is at t = {}, frame needs t = {}", state.t, t0 - tau)));
    }
    if tau > state.grid.radius {
        return Err(SolverError::Config(format!("cone radius {tau} exceeds the physical domain")));
    }
    let params = &state.params;
    let psi = ln_psi_tau(tau, params)?.exp();
    let dlog = psi_log_derivative(tau, params);
    let mut w = Vec::with_capacity(grid.len());
    let mut ws = Vec::with_capacity(grid.len());
    for &t in grid.t() {
        let r = t.sqrt() * tau;
        let (u, ur) = state.grid.sample(&state.u, r);
        let (ut, _) = state.grid.sample(&state.ut, r);
        w.push(u / psi);
        ws.push((tau * (ut - u * dlog) - r * ur) / psi);
    }
    Ok(FieldState::new(grid.clone(), *params, s, w, ws)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckConfig {
    pub params: ModelParams,
    /// `u0 = level` on `r < flat_radius`, Gaussian cutoff beyond; `u1 = velocity · u0/level`.
    pub level: f64,
    pub velocity: f64,
    pub flat_radius: f64,
    pub radius: f64,
    pub cells: usize,
    pub grid_size: usize,
    /// Window starts at `-ln T + offset` and lasts `window`.
    pub offset: f64,
    pub window: f64,
    pub cadence: f64,
    /// The control frame uses `control_factor · T_est`.
    pub control_factor: f64,
    pub tolerance: f64,
    /// `‖u‖∞` range used for the blow-up time fit, as multiples of `level`.
    pub fit_range: (f64, f64),
}

impl CrossCheckConfig {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            level: 8.0,
            velocity: 0.0,
            flat_radius: 2.0,
            radius: 4.0,
            cells: 400,
            grid_size: 16,
            offset: 0.8,
            window: 1.0,
            cadence: 0.1,
            control_factor: 1.1,
            tolerance: 0.01,
            fit_range: (1e3, 1e7),
        }
    }

    fn initial(&self, grid: Arc<PhysicalGrid>) -> PhysicalState {
        let (a, v, rf) = (self.level, self.velocity, self.flat_radius);
        let shape = move |r: f64| if r < rf { 1.0 } else { (-(r - rf).powi(2) * 16.0).exp() };
        PhysicalState::from_fn(grid, self.params, true, move |r| a * shape(r), move |r| v * shape(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub t_est: f64,
    pub t_control: f64,
    pub s_start: f64,
    pub s_end: f64,
    /// `(s, sup|w_phys - w_sim| / sup|w_sim|)`.
    pub series: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
    /// Same measure with the physical run mapped in the control frame.
    pub control: Vec<(f64, f64)>,
    pub control_grows: bool,
    pub tolerance: f64,
    pub passed: bool,
}

fn rel_sup_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Runs the physical solver to blow-up, fits `T`, and compares the mapped
/// run with a similarity run over the configured window.
pub fn cross_check(cfg: &CrossCheckConfig) -> Result<CrossCheckReport, VerifyError> {
    let pgrid = Arc::new(PhysicalGrid::new(cfg.params.n(), cfg.radius, cfg.cells)?);
    let controls = PhysicalControls { cfl: 0.5, t_end: 100.0, cap: 2.0 * cfg.fit_range.1 * cfg.level };
    let probe = run_physical(cfg.initial(pgrid.clone()), &controls, &[])?;
    if !probe.reached_cap {
        return Err(VerifyError::NoOverlap(format!("physical run did not blow up before t = {}", controls.t_end)));
    }
    let (lo, hi) = (cfg.fit_range.0 * cfg.level, cfg.fit_range.1 * cfg.level);
    let t_est = fit_blowup_time(&probe.sup_series, &cfg.params, lo, hi)?;
    let t_control = cfg.control_factor * t_est;

    let s_start = -t_est.ln() + cfg.offset;
    let s_end = s_start + cfg.window;
    let count = (cfg.window / cfg.cadence).round() as usize;
    let ss: Vec<f64> = (0..=count).map(|k| s_start + k as f64 * cfg.cadence).collect();
    if !(t_est < 1.0) || (-s_start).exp() > cfg.flat_radius - (t_est - (-s_start).exp()) {
        return Err(VerifyError::NoOverlap(format!(
            "backward cone of T = {t_est} leaves the flat region or T >= 1"
        )));
    }
    let t_ref: Vec<f64> = ss.iter().map(|s| t_est - (-s).exp()).collect();
    let t_ctl: Vec<f64> = ss.iter().map(|s| t_control - (-s).exp()).collect();
    if t_ref[0] < 0.0 || t_ctl.iter().any(|&t| t < 0.0 || t >= t_est) {
        return Err(VerifyError::NoOverlap("window maps outside [0, T)".into()));
    }
    let mut times: Vec<f64> = t_ref.iter().chain(&t_ctl).copied().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let run = run_physical(cfg.initial(pgrid), &PhysicalControls { t_end: times[times.len() - 1], ..controls }, &times)?;
    let at = |t: f64| -> &PhysicalState {
        let k = times.partition_point(|&x| x < t);
        &run.snapshots[k]
    };

    let grid = Arc::new(RadialGrid::new(cfg.params.n(), cfg.grid_size)?);
    let first = transform(at(t_ref[0]), t_est, s_start, &grid)?;
    let mut scfg = SimilarityRunConfig::new(cfg.params, t_est);
    scfg.s0 = s_start;
    scfg.s1 = s_end;
    scfg.s_floor = 0.0;
    scfg.cadence = cfg.cadence;
    scfg.grid_size = cfg.grid_size;
    scfg.store_states = true;
    scfg.blowup_cap = Some(1e6);
    let solver = SimilaritySolver::new(scfg)?;
    let init = InitialData::Values { w: first.w.clone(), dw_ds: first.dw_ds.clone() };
    let rec = solver.run(solver.initial_state(&init, 0.0)?)?;

    let mut series = Vec::with_capacity(ss.len());
    let mut control = Vec::with_capacity(ss.len());
    for (k, &s) in ss.iter().enumerate() {
        let snap = rec.at(s, 1e-9).ok_or(VerifyError::MissingSnapshot(s))?;
        let w_sim = snap.w.as_ref().ok_or(VerifyError::MissingSnapshot(s))?;
        let w_phys = transform(at(t_ref[k]), t_est, s, &grid)?;
        let w_ctl = transform(at(t_ctl[k]), t_control, s, &grid)?;
        series.push((s, rel_sup_diff(&w_phys.w, w_sim)));
        control.push((s, rel_sup_diff(&w_ctl.w, w_sim)));
    }
    let max_discrepancy = series.iter().fold(0.0f64, |m, d| m.max(d.1));
    let control_grows = control.windows(2).all(|w| w[1].1 > w[0].1);
    let control_exceeds = control.iter().skip(1).all(|d| d.1 > cfg.tolerance);
    Ok(CrossCheckReport {
        t_est,
        t_control,
        s_start,
        s_end,
        series,
        max_discrepancy,
        control,
        control_grows,
        tolerance: cfg.tolerance,
        passed: max_discrepancy <= cfg.tolerance && control_grows && control_exceeds,
    })
}
