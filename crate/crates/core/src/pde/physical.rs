//! Radial solver for `u_tt = u_rr + (n-1)/r u_r + |u|^{p-1} u ln^a(u² + 2)` on `[0, R]`.
//!
//! Cell-centred finite volumes: cell `i` covers `[i dr, (i+1) dr]`, fluxes
//! use the face areas `r^{n-1}`, the flux through `r = 0` vanishes (parity)
//! and so does the flux through `r = R` (Neumann). The semi-discrete linear
//! energy is conserved exactly; time stepping is RK4.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::model::{ln_psi_tau, ModelParams, NonlinearityTable};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGrid {
    pub n: usize,
    pub radius: f64,
    pub dr: f64,
    /// Cell centres.
    pub r: Vec<f64>,
    /// `r^{n-1}` at the outer face of each cell; the last entry is the wall.
    face: Vec<f64>,
    /// Cell volumes `((i+1)^n - i^n) dr^n / n`, without the sphere factor.
    vol: Vec<f64>,
}

impl PhysicalGrid {
    pub fn new(n: usize, radius: f64, cells: usize) -> Result<Self, SolverError> {
        if cells < 4 || !(radius > 0.0) {
            return Err(SolverError::Config(format!("need >= 4 cells on a positive radius, got {cells} on {radius}")));
        }
        let dr = radius / cells as f64;
        let nf = n as f64;
        let r = (0..cells).map(|i| (i as f64 + 0.5) * dr).collect();
        let face = (0..cells).map(|i| ((i + 1) as f64 * dr).powi(n as i32 - 1)).collect();
        let vol = (0..cells)
            .map(|i| (((i + 1) as f64 * dr).powf(nf) - (i as f64 * dr).powf(nf)) / nf)
            .collect();
        Ok(Self { n, radius, dr, r, face, vol })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Gershgorin bound on the frequency of the discrete Laplacian.
    pub fn max_frequency(&self) -> f64 {
        let m = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let left = if i == 0 { 0.0 } else { self.face[i - 1] };
            let right = if i + 1 == m { 0.0 } else { self.face[i] };
            worst = worst.max(2.0 * (left + right) / (self.dr * self.vol[i]));
        }
        worst.sqrt()
    }

    fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let m = self.len();
        let mut flux_in = 0.0;
        for i in 0..m {
            let flux_out = if i + 1 == m { 0.0 } else { self.face[i] * (u[i + 1] - u[i]) / self.dr };
            out[i] = (flux_out - flux_in) / self.vol[i];
            flux_in = flux_out;
        }
    }

    /// Value and `r`-derivative of the cubic through the four nearest cells,
    /// using even reflection across `r = 0`.
    pub fn sample(&self, values: &[f64], x: f64) -> (f64, f64) {
        let m = self.len() as isize;
        let pos = x / self.dr - 0.5;
        let base = (pos.floor() as isize - 1).clamp(-3, m - 4);
        let mut v = 0.0;
        let mut d = 0.0;
        for a in 0..4 {
            let ia = base + a;
            let xa = (ia as f64 + 0.5) * self.dr;
            let fa = values[if ia < 0 { (-ia - 1) as usize } else { ia as usize }];
            let mut l = 1.0;
            let mut dl = 0.0;
            for b in 0..4 {
                if b == a {
                    continue;
                }
                let xb = ((base + b) as f64 + 0.5) * self.dr;
                let den = xa - xb;
                let mut term = 1.0 / den;
                for c in 0..4 {
                    if c != a && c != b {
                        let xc = ((base + c) as f64 + 0.5) * self.dr;
                        term *= (x - xc) / (xa - xc);
                    }
                }
                dl += term;
                l *= (x - xb) / den;
            }
            v += l * fa;
            d += dl * fa;
        }
        (v, d)
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalState {
    pub grid: Arc<PhysicalGrid>,
    pub params: ModelParams,
    pub table: Arc<NonlinearityTable>,
    pub nonlinear: bool,
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl PhysicalState {
    pub fn from_fn<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
        grid: Arc<PhysicalGrid>,
        params: ModelParams,
        nonlinear: bool,
        u0: F,
        u1: G,
    ) -> Self {
        let u = grid.r.iter().map(|&r| u0(r)).collect();
        let ut = grid.r.iter().map(|&r| u1(r)).collect();
        Self { grid, params, table: Arc::new(NonlinearityTable::new(params)), nonlinear, t: 0.0, u, ut }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `∫ (u_t² + u_r²) r^{n-1} dr` in its exactly conserved discrete form.
    pub fn linear_energy(&self) -> f64 {
        let g = &self.grid;
        let m = g.len();
        let kin: f64 = self.ut.iter().zip(&g.vol).map(|(v, w)| v * v * w).sum();
        let grad: f64 = (0..m - 1).map(|i| g.face[i] * (self.u[i + 1] - self.u[i]).powi(2) / g.dr).sum();
        kin + grad
    }

    fn force(&self, u: f64) -> f64 {
        if !self.nonlinear || u == 0.0 {
            return 0.0;
        }
        // `scaled_force` at s = 1, ln φ = 0 is exactly |u|^{p-1} u ln^a(u² + 2)
        self.table.scaled_force(u, 1.0, 0.0)
    }

    fn accel(&self, u: &[f64], out: &mut [f64]) {
        self.grid.laplacian(u, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o += self.force(v);
        }
    }

    /// RK4 stability limit, tightened by the nonlinear growth rate.
    pub fn stable_dt(&self) -> f64 {
        let mut jac: f64 = 0.0;
        if self.nonlinear {
            let p = self.params.p();
            for &v in &self.u {
                if v != 0.0 {
                    jac = jac.max(p * self.force(v) / v);
                }
            }
        }
        (2.8 / self.grid.max_frequency()).min(0.5 / jac.max(1e-300).sqrt())
    }
}

/// One RK4 step of the physical equation.
pub fn step_physical(state: &PhysicalState, dt: f64) -> Result<PhysicalState, SolverError> {
    let limit = state.stable_dt();
    if !(dt > 0.0) || dt > limit {
        return Err(SolverError::Cfl { ds: dt, limit });
    }
    step_unchecked(state, dt)
}

fn step_unchecked(state: &PhysicalState, dt: f64) -> Result<PhysicalState, SolverError> {
    let m = state.u.len();
    let u0 = &state.u;
    let v0 = &state.ut;
    let mut a1 = vec![0.0; m];
    let mut a2 = vec![0.0; m];
    let mut a3 = vec![0.0; m];
    let mut a4 = vec![0.0; m];
    let comb = |x: &[f64], c: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + c * b).collect() };

    state.accel(u0, &mut a1);
    let u2 = comb(u0, 0.5 * dt, v0);
    let v2 = comb(v0, 0.5 * dt, &a1);
    state.accel(&u2, &mut a2);
    let u3 = comb(u0, 0.5 * dt, &v2);
    let v3 = comb(v0, 0.5 * dt, &a2);
    state.accel(&u3, &mut a3);
    let u4 = comb(u0, dt, &v3);
    let v4 = comb(v0, dt, &a3);
    state.accel(&u4, &mut a4);

    let c = dt / 6.0;
    let mut u = Vec::with_capacity(m);
    let mut ut = Vec::with_capacity(m);
    for i in 0..m {
        u.push(u0[i] + c * (v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]));
        ut.push(v0[i] + c * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]));
    }
    if u.iter().chain(&ut).any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite { s: state.t + dt, what: "physical state".into() });
    }
    Ok(PhysicalState { u, ut, t: state.t + dt, ..state.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalControls {
    /// Fraction of the stability limit used per step.
    pub cfl: f64,
    pub t_end: f64,
    /// Stop once `‖u‖∞` exceeds this.
    pub cap: f64,
}

impl Default for PhysicalControls {
    fn default() -> Self {
        Self { cfl: 0.5, t_end: 10.0, cap: 1e8 }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalRun {
    /// `(t, ‖u‖∞)` after every step.
    pub sup_series: Vec<(f64, f64)>,
    /// States at the requested times, in the order requested.
    pub snapshots: Vec<PhysicalState>,
    pub final_state: PhysicalState,
    pub reached_cap: bool,
    pub steps: usize,
}

/// Integrates until `t_end` or the cap, landing exactly on `sample_times`
/// (which must be increasing).
pub fn run_physical(
    initial: PhysicalState,
    controls: &PhysicalControls,
    sample_times: &[f64],
) -> Result<PhysicalRun, SolverError> {
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolverError::Config("sample times must increase".into()));
    }
    let mut st = initial;
    let mut sup_series = vec![(st.t, st.sup_norm())];
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] <= st.t {
        snapshots.push(st.clone());
        next += 1;
    }
    let mut steps = 0;
    let mut reached_cap = false;
    while st.t < controls.t_end {
        let mut dt = controls.cfl * st.stable_dt();
        let mut stop = controls.t_end;
        if let Some(&ts) = sample_times.get(next) {
            stop = stop.min(ts);
        }
        let mut land = false;
        if st.t + dt >= stop {
            dt = stop - st.t;
            land = true;
        }
        st = step_unchecked(&st, dt)?;
        if land {
            st.t = stop;
        }
        steps += 1;
        sup_series.push((st.t, st.sup_norm()));
        while next < sample_times.len() && sample_times[next] <= st.t {
            snapshots.push(st.clone());
            next += 1;
        }
        if st.sup_norm() > controls.cap {
            reached_cap = true;
            break;
        }
    }
    Ok(PhysicalRun { sup_series, snapshots, final_state: st, reached_cap, steps })
}

/// Blow-up time from `(t, ‖u‖∞)` samples: golden-section search over `T`
/// for the least-squares fit `ln‖u‖∞ ≈ c + ln ψ_T(t)`, using samples with
/// `‖u‖∞` in `[lo, hi]`.
pub fn fit_blowup_time(series: &[(f64, f64)], params: &ModelParams, lo: f64, hi: f64) -> Result<f64, SolverError> {
    let pts: Vec<(f64, f64)> =
        series.iter().filter(|(_, u)| *u >= lo && *u <= hi).map(|&(t, u)| (t, u.ln())).collect();
    if pts.len() < 5 {
        return Err(SolverError::Config(format!("only {} samples in the fit window", pts.len())));
    }
    let t_last = pts.last().map(|p| p.0).unwrap_or(0.0);
    let t_first = pts[0].0;
    let residual = |big_t: f64| -> f64 {
        let mut diffs = Vec::with_capacity(pts.len());
        for &(t, lu) in &pts {
            match ln_psi_tau(big_t - t, params) {
                Ok(lp) => diffs.push(lu - lp),
                Err(_) => return f64::INFINITY,
            }
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        diffs.iter().map(|d| (d - mean).powi(2)).sum()
    };
    let (mut a, mut b) = (t_last + 1e-15 * t_last.abs().max(1.0), t_last + (t_last - t_first).max(1e-12));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = residual(x1);
    let mut f2 = residual(x2);
    for _ in 0..200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = residual(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = residual(x2);
        }
        if b - a < 1e-15 * b.abs() {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate_ode, OdeControls};

    fn grid(cells: usize) -> Arc<PhysicalGrid> {
        Arc::new(PhysicalGrid::new(3, 4.0, cells).unwrap())
    }

    fn params() -> ModelParams {
        ModelParams::new(3, -1.0).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let st = PhysicalState::from_fn(grid(64), params(), true, |_| 0.0, |_| 0.0);
        let run = run_physical(st, &PhysicalControls { t_end: 1.0, ..Default::default() }, &[]).unwrap();
        assert!(run.final_state.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_energy_is_conserved() {
        let bump = |r: f64| (-(r - 1.0).powi(2) * 8.0).exp();
        let st = PhysicalState::from_fn(grid(400), params(), false, bump, |_| 0.0);
        let e0 = st.linear_energy();
        let controls = PhysicalControls { cfl: 0.25, t_end: 2.0, cap: 1e8 };
        let run = run_physical(st, &controls, &[]).unwrap();
        let e1 = run.final_state.linear_energy();
        assert!(((e1 - e0) / e0).abs() < 1e-6, "{e0} {e1}");
    }

    #[test]
    fn constant_data_follows_the_ode() {
        // flat on r < 3, so the centre sees no cutoff before t = 3
        let u0 = |r: f64| if r < 3.0 { 1.0 } else { (-(r - 3.0).powi(2) * 20.0).exp() };
        let st = PhysicalState::from_fn(grid(200), params(), true, u0, |_| 0.0);
        let ode = integrate_ode(1.0, 0.0, params(), &OdeControls::default()).unwrap();
        let tend = 0.9 * ode.t_est.unwrap();
        let run = run_physical(st, &PhysicalControls { cfl: 0.5, t_end: tend, cap: 1e8 }, &[]).unwrap();
        let k = ode.t.partition_point(|&t| t < tend);
        // interpolate the dense ODE output linearly in t
        let (ta, tb) = (ode.t[k - 1], ode.t[k]);
        let v = ode.v[k - 1] + (ode.v[k] - ode.v[k - 1]) * (tend - ta) / (tb - ta);
        let u = run.final_state.u[0];
        assert!(((u - v) / v).abs() < 1e-3, "{u} {v}");
    }

    #[test]
    fn finite_speed_of_propagation() {
        let r1 = 1.0;
        let u0 = |r: f64| if r < r1 { (1.0 - (r / r1).powi(2)).powi(4) } else { 0.0 };
        let st = PhysicalState::from_fn(grid(400), params(), true, u0, |_| 0.0);
        let t = 1.0;
        let run = run_physical(st, &PhysicalControls { cfl: 0.5, t_end: t, cap: 1e8 }, &[]).unwrap();
        let g = &run.final_state.grid;
        let sup = run.final_state.sup_norm();
        for (r, u) in g.r.iter().zip(&run.final_state.u) {
            if *r > r1 + t + 10.0 * g.dr {
                assert!(u.abs() < 1e-6 * sup, "r = {r}: {u}");
            }
        }
    }

    #[test]
    fn sampling_reproduces_cubics() {
        let g = PhysicalGrid::new(3, 1.0, 20).unwrap();
        let f = |r: f64| 1.0 + r * r - 0.5 * r * r * r * r / 4.0;
        let vals: Vec<f64> = g.r.iter().map(|&r| 1.0 + r * r - 0.125 * r.powi(4)).collect();
        let (v, d) = g.sample(&vals, 0.4321);
        assert!((v - f(0.4321)).abs() < 1e-6);
        assert!((d - (2.0 * 0.4321 - 0.5 * 0.4321f64.powi(3))).abs() < 1e-4);
        // even extension near the centre
        let (v, d) = g.sample(&vals, 0.0);
        assert!((v - 1.0).abs() < 1e-5 && d.abs() < 1e-3);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let st = PhysicalState::from_fn(grid(64), params(), true, |_| 1.0, |_| 0.0);
        assert!(matches!(step_physical(&st, 1.0), Err(SolverError::Cfl { .. })));
    }
}
