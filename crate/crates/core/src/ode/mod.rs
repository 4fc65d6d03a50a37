//! The space-independent blow-up ODE `v'' = |v|^{p-1} v ln^a(v² + 2)`.
//!
//! Away from blow-up the system is integrated in `t` with an embedded
//! Dormand–Prince pair. Once `v v' > 0` and the kinetic term dominates, the
//! independent variable becomes `σ = ln|v|` with unknowns `(t, ln|v'|)`;
//! the right-hand side is then bounded and blow-up sits at `σ = ∞`, so the
//! solution can be followed to any cap without step collapse.
//!
//! The remaining time from a state `(v, v')` is known exactly through the
//! conserved energy `v'²/2 - F(v)`:
//! `τ = ∫_v^∞ dx / sqrt(v'² + 2(F(x) - F(v)))`. This gives the blow-up time
//! and, more usefully, `T - t` at every sample without subtracting two
//! nearly equal times.

mod dopri;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dopri::{Dopri5, Tolerances};

use crate::error::SolverError;
use crate::model::{kappa, ln_psi_tau, log_arg_from_ln, nonlinearity, psi_log_derivative, ModelParams, NonlinearityTable};
use crate::quad::JacobiRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeControls {
    pub rtol: f64,
    pub atol: f64,
    /// Integration stops when `|v|` reaches this value.
    pub cap: f64,
    /// Smallest `|v|` at which the log-variable phase may start.
    pub v_switch: f64,
    /// Horizon after which the run is declared non-blowing-up.
    pub t_max: f64,
    pub max_steps: usize,
}

impl Default for OdeControls {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, cap: 1e12, v_switch: 10.0, t_max: 1e4, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OdeOutcome {
    BlowUp,
    NoBlowUp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub params: ModelParams,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    /// `T_est - t`; exact-tail values in the log phase, NaN without blow-up.
    pub tau: Vec<f64>,
    /// Index of the first log-phase sample.
    pub log_phase_start: usize,
    pub outcome: OdeOutcome,
    pub t_est: Option<f64>,
    pub t_uncertainty: f64,
    pub steps: usize,
    pub rejected: usize,
}

/// Remaining time to blow-up from `(|v|, |v'|)` given as logarithms.
pub fn tail_time_ln(ln_v: f64, ln_dv: f64, table: &NonlinearityTable) -> f64 {
    let p = table.params().p();
    let e = 2.0 / (p - 1.0);
    let ln_fv = table.ln_f_ln(ln_v);
    // x = v z^{-e}; dyadic panels in z ∈ (0, 1]
    let h = |z: f64| -> f64 {
        let ln_x = ln_v - e * z.ln();
        let ln_fx = table.ln_f_ln(ln_x);
        let kinetic = (2.0 * ln_dv - ln_fx).exp();
        let gap = -2.0 * (ln_fv - ln_fx).exp_m1();
        let ln_den = 0.5 * ln_fx + 0.5 * (kinetic + gap).ln();
        (ln_v + e.ln() - (e + 1.0) * z.ln() - ln_den).exp()
    };
    let rule = gl20();
    let mut sum = 0.0;
    let mut hi = 1.0;
    for _ in 0..TAIL_PANELS {
        let lo = 0.5 * hi;
        sum += rule.integrate_on(lo, hi, h);
        hi = lo;
    }
    // slowly varying integrand on the last sliver
    sum + hi * h(hi)
}

const TAIL_PANELS: usize = 40;

fn gl20() -> &'static JacobiRule {
    static RULE: std::sync::OnceLock<JacobiRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| JacobiRule::legendre(20))
}

/// `T - t` from a state with `v v' > 0`.
pub fn tail_time(v: f64, dv: f64, table: &NonlinearityTable) -> Option<f64> {
    if v * dv <= 0.0 {
        return None;
    }
    Some(tail_time_ln(v.abs().ln(), dv.abs().ln(), table))
}

fn ln_g(sigma: f64, params: &ModelParams) -> f64 {
    params.p() * sigma + params.a() * log_arg_from_ln(sigma).ln()
}

pub fn integrate_ode(v0: f64, v1: f64, params: ModelParams, controls: &OdeControls) -> Result<OdeTrajectory, SolverError> {
    let table = Arc::new(NonlinearityTable::new(params));
    integrate_ode_with(v0, v1, &table, controls)
}

pub fn integrate_ode_with(
    v0: f64,
    v1: f64,
    table: &Arc<NonlinearityTable>,
    controls: &OdeControls,
) -> Result<OdeTrajectory, SolverError> {
    if v0 == 0.0 && v1 == 0.0 {
        return Err(SolverError::Config("the zero state is an equilibrium; v0 and v1 cannot both vanish".into()));
    }
    if !(v0.is_finite() && v1.is_finite()) {
        return Err(SolverError::NonFinite { s: 0.0, what: "initial data".into() });
    }
    let params = *table.params();
    let p = params.p();
    let tol = Tolerances { rtol: controls.rtol, atol: controls.atol };
    let mut t = Vec::new();
    let mut v = Vec::new();
    let mut dv = Vec::new();
    t.push(0.0);
    v.push(v0);
    dv.push(v1);
    let mut steps = 0;
    let mut rejected = 0;

    // phase 1: (v, v') in t
    let rhs = |_t: f64, y: &[f64; 2]| [y[1], nonlinearity(y[0], &params).unwrap_or(f64::INFINITY.copysign(y[0]))];
    let h0 = 1e-3 / (1.0 + v0.abs().max(v1.abs()).powf((p - 1.0) / 2.0));
    let mut stepper = Dopri5::<2>::new(tol, h0);
    let (mut x, mut y) = (0.0, [v0, v1]);
    let switch_ready = |y: &[f64; 2]| -> bool {
        let av = y[0].abs();
        y[0] * y[1] > 0.0 && av >= controls.v_switch && y[1] * y[1] >= table.f(av).unwrap_or(f64::INFINITY)
    };
    while !switch_ready(&y) {
        if x >= controls.t_max || steps >= controls.max_steps {
            return Ok(OdeTrajectory {
                params,
                tau: vec![f64::NAN; t.len()],
                t,
                v,
                dv,
                log_phase_start: usize::MAX,
                outcome: OdeOutcome::NoBlowUp,
                t_est: None,
                t_uncertainty: f64::NAN,
                steps,
                rejected: stepper.rejected,
            });
        }
        match stepper.advance(&rhs, x, &y, controls.t_max) {
            Some((nx, ny)) => {
                x = nx;
                y = ny;
            }
            None => return Err(SolverError::NonFinite { s: x, what: "ode step size collapsed".into() }),
        }
        steps += 1;
        t.push(x);
        v.push(y[0]);
        dv.push(y[1]);
    }
    rejected += stepper.rejected;

    // phase 2: (t, ln|v'|) in σ = ln|v|
    let sign = y[0].signum();
    let log_phase_start = t.len() - 1;
    let rhs2 = |sigma: f64, z: &[f64; 2]| [(sigma - z[1]).exp(), (ln_g(sigma, &params) + sigma - 2.0 * z[1]).exp()];
    let sigma_end = controls.cap.ln();
    let mut sigma = y[0].abs().ln();
    let mut z = [x, y[1].abs().ln()];
    let mut stepper2 = Dopri5::<2>::new(tol, 1e-2);
    while sigma < sigma_end {
        if steps >= controls.max_steps {
            return Err(SolverError::Config(format!("ode exceeded {} steps before reaching the cap", controls.max_steps)));
        }
        match stepper2.advance(&rhs2, sigma, &z, sigma_end) {
            Some((ns, nz)) => {
                sigma = ns;
                z = nz;
            }
            None => return Err(SolverError::NonFinite { s: sigma, what: "log-phase step size collapsed".into() }),
        }
        steps += 1;
        t.push(z[0]);
        v.push(sign * sigma.exp());
        dv.push(sign * z[1].exp());
    }
    rejected += stepper2.rejected;

    let ln_tail: Vec<f64> = (log_phase_start..t.len())
        .map(|k| tail_time_ln(v[k].abs().ln(), dv[k].abs().ln(), table))
        .collect();
    let estimates: Vec<f64> = ln_tail.iter().enumerate().map(|(i, tau)| t[log_phase_start + i] + tau).collect();
    let t_est = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let spread = estimates.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e))
        - estimates.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    let mut tau: Vec<f64> = t[..log_phase_start].iter().map(|&tk| t_est - tk).collect();
    tau.extend(ln_tail);
    Ok(OdeTrajectory {
        params,
        t,
        v,
        dv,
        tau,
        log_phase_start,
        outcome: OdeOutcome::BlowUp,
        t_est: Some(t_est),
        t_uncertainty: spread.max(4.0 * f64::EPSILON * t_est.abs()),
        steps,
        rejected,
    })
}

impl OdeTrajectory {
    pub fn blew_up(&self) -> bool {
        self.outcome == OdeOutcome::BlowUp
    }

    /// `ln|v|` at remaining time `τ` by cubic Hermite interpolation in `ln τ`,
    /// using `d ln v / d ln τ = -τ v'/v`.
    pub fn ln_v_at_tau(&self, tau: f64) -> Option<f64> {
        if !self.blew_up() || !(tau > 0.0) {
            return None;
        }
        let start = self.log_phase_start.min(self.tau.len() - 1);
        // τ is decreasing along the samples; only positive-τ samples with v v' > 0 are usable
        let idx: Vec<usize> =
            (0..self.tau.len()).filter(|&k| self.tau[k] > 0.0 && (k >= start || self.v[k] * self.dv[k] > 0.0)).collect();
        let pos = idx.windows(2).position(|w| self.tau[w[0]] >= tau && tau >= self.tau[w[1]])?;
        let (i, j) = (idx[pos], idx[pos + 1]);
        let x0 = self.tau[i].ln();
        let x1 = self.tau[j].ln();
        let y0 = self.v[i].abs().ln();
        let y1 = self.v[j].abs().ln();
        let m0 = -self.tau[i] * self.dv[i] / self.v[i];
        let m1 = -self.tau[j] * self.dv[j] / self.v[j];
        let h = x1 - x0;
        if h == 0.0 {
            return Some(y0);
        }
        let u = (tau.ln() - x0) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Some(h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1)
    }

    /// `v / (κ_a ψ_T)` at remaining time `τ < 1`.
    pub fn ratio_at(&self, tau: f64) -> Option<f64> {
        let ln_v = self.ln_v_at_tau(tau)?;
        let ln_psi = ln_psi_tau(tau, &self.params).ok()?;
        Some((ln_v - ln_psi - kappa(&self.params).ln()).exp())
    }

    /// Smallest remaining time covered by the samples.
    pub fn min_tau(&self) -> Option<f64> {
        if !self.blew_up() {
            return None;
        }
        self.tau.last().copied()
    }

    /// `max_k |H_k - H_0| / (|H_0| + F(v_k))` for `H = v'²/2 - F(v)`.
    pub fn energy_drift(&self, table: &NonlinearityTable) -> f64 {
        let f = |v: f64| table.f(v.abs()).unwrap_or(f64::INFINITY);
        let h0 = 0.5 * self.dv[0] * self.dv[0] - f(self.v[0]);
        self.v
            .iter()
            .zip(&self.dv)
            .map(|(&v, &d)| {
                let fv = f(v);
                ((0.5 * d * d - fv) - h0).abs() / (h0.abs() + fv)
            })
            .fold(0.0, f64::max)
    }
}

/// Log-spaced `(τ, v/(κ_a ψ_T))` pairs from `τ = 10^{-1}` down to the
/// smallest sampled `τ`, `per_decade` points per decade.
pub fn rate_ratio(traj: &OdeTrajectory, per_decade: usize) -> Vec<(f64, f64)> {
    let Some(min_tau) = traj.min_tau() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let tau = 10f64.powf(-1.0 - k as f64 / per_decade as f64);
        if tau < min_tau {
            break;
        }
        if let Some(r) = traj.ratio_at(tau) {
            out.push((tau, r));
        }
        k += 1;
    }
    out
}

/// `(v, v')` at remaining time `τ`, recovered from the nearest earlier
/// log-phase sample through the conserved energy. Works below the cap too.
pub fn state_at_tau(traj: &OdeTrajectory, tau: f64, table: &NonlinearityTable) -> Option<(f64, f64)> {
    if !traj.blew_up() || !(tau > 0.0) {
        return None;
    }
    let start = traj.log_phase_start;
    let k = (start..traj.tau.len()).rev().find(|&k| traj.tau[k] >= tau)?;
    let sign = traj.v[k].signum();
    let ln_vk = traj.v[k].abs().ln();
    let dvk2 = traj.dv[k] * traj.dv[k];
    let fk = table.f(traj.v[k].abs()).ok()?;
    let ln_dv_of = |ln_v: f64| -> f64 {
        // v'² = v_k'² + 2(F(v) - F(v_k)), formed in logs
        let ln_fv = table.ln_f_ln(ln_v);
        let ratio_k = (fk.ln() - ln_fv).exp();
        0.5 * (ln_fv + (dvk2 / ln_fv.exp() + 2.0 * (1.0 - ratio_k)).ln())
    };
    let mut lo = ln_vk;
    let mut hi = ln_vk + 1.0;
    while tail_time_ln(hi, ln_dv_of(hi), table) > tau {
        lo = hi;
        hi += 2.0 * (hi - ln_vk);
        if hi > 700.0 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_time_ln(mid, ln_dv_of(mid), table) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let ln_v = 0.5 * (lo + hi);
    Some((sign * ln_v.exp(), sign * ln_dv_of(ln_v).exp()))
}

/// Similarity data `(w, ∂_s w)` of a space-independent state at remaining
/// time `τ`: `w = v/ψ`, `∂_s w = τ (v' - v ψ'/ψ) / ψ`.
pub fn similarity_data(v: f64, dv: f64, tau: f64, params: &ModelParams) -> Option<(f64, f64)> {
    let psi = ln_psi_tau(tau, params).ok()?.exp();
    let w = v / psi;
    let ws = tau * (dv - v * psi_log_derivative(tau, params)) / psi;
    Some((w, ws))
}
