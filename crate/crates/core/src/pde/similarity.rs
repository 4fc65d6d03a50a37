//! Radial solver for the similarity-variable equation
//!
//! `w_ss = Lw - c0 w + γ w - (d0 + 2α) w_s - 2 y·∇w_s + s^{-a}|w|^{p-1} w ln^a(φ² w² + 2)`
//!
//! in `t = |y|²`. The field is the degree `N-1` polynomial through the grid
//! nodes and the equation is imposed in weak form against the same
//! polynomials with the weight `ρ = (1-t)^{α(s)}`. The elliptic part then
//! becomes the symmetric form `-∫ 4t(1-t) φ_t w_t ρ` and no boundary
//! condition is needed at `|y| = 1`. Time stepping is classical RK4; the
//! dissipation integrals are carried along as extra RK4 components.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::linalg::Cholesky;
use crate::error::SolverError;
use crate::functionals::{FunctionalConstants, Functionals};
use crate::model::{kappa, ModelParams, NonlinearityTable};
use crate::quad::{sphere_area, BallRule, FieldState, RadialGrid};
use crate::record::{Diagnostics, SnapshotRecord, TerminationCause, TrajectoryRecord};
use crate::simvars::{alpha, gamma, ln_phi, S0_FLOOR};

pub const DEFAULT_GRID_SIZE: usize = 24;
/// Extent of RK4's stability region along the negative real axis.
const RK4_REACH: f64 = 2.78;
const SYSTEM_CACHE: usize = 4;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fault {
    #[default]
    None,
    /// Damping enters with the wrong sign.
    FlipDamping,
    /// Adds the source `amplitude (s - s0) t^6`, concentrated near `|y| = 1`.
    BoundaryForcing { amplitude: f64 },
}

/// Manufactured solution `w = g(s)(1 - t)` with `g = 1 + A sin(ω(s - s0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Manufactured {
    /// `(g, g', g'')` at `s`.
    pub fn g(&self, s: f64, s0: f64) -> (f64, f64, f64) {
        let x = self.frequency * (s - s0);
        let a = self.amplitude;
        let om = self.frequency;
        (1.0 + a * x.sin(), a * om * x.cos(), -a * om * om * x.sin())
    }

    pub fn state(&self, grid: Arc<RadialGrid>, params: ModelParams, s: f64, s0: f64) -> FieldState {
        let (g, dg, _) = self.g(s, s0);
        FieldState::from_fn(grid, params, s, |t| g * (1.0 - t), |t| dg * (1.0 - t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Zero,
    /// `w ≡ κ`, `∂_s w ≡ 0`.
    Kappa,
    /// `κ(1 + amplitude e^{-t/width²})`.
    KappaBump { amplitude: f64, width: f64 },
    /// `amplitude (1 - slope t)`; sign-changing for `slope > 1`.
    Profile { amplitude: f64, slope: f64 },
    Values { w: Vec<f64>, dw_ds: Vec<f64> },
}

impl InitialData {
    /// Initial state with `level_shift · κ` added to `w`.
    pub fn state(
        &self,
        grid: Arc<RadialGrid>,
        params: ModelParams,
        s0: f64,
        level_shift: f64,
    ) -> Result<FieldState, SolverError> {
        let k = kappa(&params);
        let c = level_shift * k;
        let st = match self {
            InitialData::Zero => FieldState::from_fn(grid, params, s0, |_| c, |_| 0.0),
            InitialData::Kappa => FieldState::from_fn(grid, params, s0, |_| k + c, |_| 0.0),
            InitialData::KappaBump { amplitude, width } => FieldState::from_fn(
                grid,
                params,
                s0,
                |t| k * (1.0 + amplitude * (-t / (width * width)).exp()) + c,
                |_| 0.0,
            ),
            InitialData::Profile { amplitude, slope } => {
                FieldState::from_fn(grid, params, s0, |t| amplitude * (1.0 - slope * t) + c, |_| 0.0)
            }
            InitialData::Values { w, dw_ds } => {
                let w = w.iter().map(|v| v + c).collect();
                FieldState::new(grid, params, s0, w, dw_ds.clone())?
            }
        };
        Ok(st)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRunConfig {
    pub params: ModelParams,
    /// Blow-up time of the frame; `s0 >= -ln t0` is required.
    pub t0: f64,
    pub grid_size: usize,
    pub s0: f64,
    pub s1: f64,
    pub s_floor: f64,
    pub cadence: f64,
    /// Fraction of the stability limit used per step.
    pub cfl: f64,
    /// Blow-up is declared when `‖w‖∞` exceeds this; defaults to `10 κ`.
    pub blowup_cap: Option<f64>,
    pub constants: FunctionalConstants,
    pub fault: Fault,
    pub nonlinear: bool,
    /// Evaluate `α`, `γ` and the weight at this fixed `s`.
    pub frozen_s: Option<f64>,
    pub manufactured: Option<Manufactured>,
    /// Keep nodal values in every snapshot.
    pub store_states: bool,
}

impl SimilarityRunConfig {
    pub fn new(params: ModelParams, t0: f64) -> Self {
        let s0 = crate::simvars::default_s0(t0);
        Self {
            params,
            t0,
            grid_size: DEFAULT_GRID_SIZE,
            s0,
            s1: s0 + 10.0,
            s_floor: S0_FLOOR,
            cadence: 0.1,
            cfl: 0.5,
            blowup_cap: None,
            constants: FunctionalConstants::default(),
            fault: Fault::None,
            nonlinear: true,
            frozen_s: None,
            manufactured: None,
            store_states: false,
        }
    }

    /// Frame whose `-ln T0` equals `s0`.
    pub fn starting_at(params: ModelParams, s0: f64, s1: f64) -> Self {
        let mut c = Self::new(params, (-s0).exp().max(f64::MIN_POSITIVE));
        c.s0 = s0;
        c.s1 = s1;
        c
    }

    pub fn cap(&self) -> f64 {
        self.blowup_cap.unwrap_or(10.0 * kappa(&self.params))
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(self.t0 > 0.0) {
            return bad(format!("t0 must be positive, got {}", self.t0));
        }
        if self.s0 < (-self.t0.ln()).max(self.s_floor) - 1e-12 {
            return bad(format!(
                "s0 = {} is below max(-ln T0, floor) = {}",
                self.s0,
                (-self.t0.ln()).max(self.s_floor)
            ));
        }
        if !(self.s0 > 0.0 && self.s1 > self.s0) {
            return bad(format!("need 0 < s0 < s1, got [{}, {}]", self.s0, self.s1));
        }
        if !(self.cadence > 0.0) {
            return bad("cadence must be positive".into());
        }
        let k = ((self.s1 - self.s0) / self.cadence).round();
        if (k * self.cadence - (self.s1 - self.s0)).abs() > 1e-9 * (self.s1 - self.s0) {
            return bad(format!("cadence {} does not divide the run length {}", self.cadence, self.s1 - self.s0));
        }
        if self.grid_size < 3 {
            return bad("grid needs at least 3 nodes".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if self.cap() <= 0.0 {
            return bad("blow-up cap must be positive".into());
        }
        self.constants.validate(&self.params)?;
        Ok(())
    }
}

/// Stage-integrated dissipation increments of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulated {
    /// `∫ ∫ (∂_s w)² ρ/(1-t) dy ds`.
    pub dissipation: f64,
    /// `∫ α e^{(p+3)/√s} ∫ (∂_s w)² ρ/(1-t) dy ds`.
    pub dissipation_alpha: f64,
    /// `∫ ∫_{∂B} (∂_s w)² dσ ds`.
    pub boundary: f64,
}

impl Accumulated {
    fn add(&mut self, o: &Accumulated, c: f64) {
        self.dissipation += c * o.dissipation;
        self.dissipation_alpha += c * o.dissipation_alpha;
        self.boundary += c * o.boundary;
    }
}

/// Galerkin matrices at one value of `s`.
#[derive(Debug)]
struct System {
    s: f64,
    alpha: f64,
    /// `-c0 + γ`
    shift: f64,
    /// `d0 + 2α`, sign-flipped under the damping fault.
    damping: f64,
    rule_t: Vec<f64>,
    rule_w: Vec<f64>,
    p: Vec<f64>,
    k: Vec<f64>,
    a: Vec<f64>,
    chol: Cholesky,
    diss: Option<(Vec<f64>, Vec<f64>)>,
    trace: Vec<f64>,
    exp_factor: f64,
}

#[derive(Debug)]
pub struct SimilaritySolver {
    cfg: SimilarityRunConfig,
    grid: Arc<RadialGrid>,
    table: Arc<NonlinearityTable>,
    cache: Mutex<VecDeque<Arc<System>>>,
}

impl SimilaritySolver {
    pub fn new(cfg: SimilarityRunConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let grid = Arc::new(RadialGrid::new(cfg.params.n(), cfg.grid_size)?);
        let table = Arc::new(NonlinearityTable::new(cfg.params));
        Ok(Self { cfg, grid, table, cache: Mutex::new(VecDeque::new()) })
    }

    pub fn config(&self) -> &SimilarityRunConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn table(&self) -> &Arc<NonlinearityTable> {
        &self.table
    }

    pub fn initial_state(&self, data: &InitialData, level_shift: f64) -> Result<FieldState, SolverError> {
        match self.cfg.manufactured {
            Some(m) => Ok(m.state(self.grid.clone(), self.cfg.params, self.cfg.s0, self.cfg.s0)),
            None => data.state(self.grid.clone(), self.cfg.params, self.cfg.s0, level_shift),
        }
    }

    fn system(&self, s: f64) -> Result<Arc<System>, SolverError> {
        let key = self.cfg.frozen_s.unwrap_or(s);
        {
            let cache = self.cache.lock().expect("system cache poisoned");
            if let Some(sys) = cache.iter().find(|c| c.s == key) {
                return Ok(sys.clone());
            }
        }
        let sys = Arc::new(self.build_system(key)?);
        let mut cache = self.cache.lock().expect("system cache poisoned");
        if cache.len() == SYSTEM_CACHE {
            cache.pop_front();
        }
        cache.push_back(sys.clone());
        Ok(sys)
    }

    fn build_system(&self, s: f64) -> Result<System, SolverError> {
        let params = &self.cfg.params;
        let g = &self.grid;
        let n = g.len();
        let al = alpha(s, params);
        let rule = BallRule::new(params.n(), n + 4, al)?;
        let q = rule.len();
        let p = g.interpolation_matrix(&rule.t);
        let pd = matmul_rect(&p, g.d1(), q, n);

        let mut m = vec![0.0; n * n];
        let mut k = vec![0.0; n * n];
        let mut a = vec![0.0; n * n];
        for r in 0..q {
            let t = rule.t[r];
            let wq = rule.weights[r];
            let pr = &p[r * n..(r + 1) * n];
            let dr = &pd[r * n..(r + 1) * n];
            let ck = wq * 4.0 * t * (1.0 - t);
            let ca = wq * 4.0 * t;
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += wq * pr[i] * pr[j];
                    k[i * n + j] += ck * dr[i] * dr[j];
                    a[i * n + j] += ca * pr[i] * dr[j];
                }
            }
        }
        let chol = Cholesky::factor(&m, n).ok_or(SolverError::Singular(s))?;

        let diss = if al > 0.0 {
            let dr = BallRule::new(params.n(), n + 2, al - 1.0)?;
            let dp = g.interpolation_matrix(&dr.t);
            Some((dr.weights, dp))
        } else {
            None
        };
        let damping = params.d0() + 2.0 * al;
        let damping = match self.cfg.fault {
            Fault::FlipDamping => -damping,
            _ => damping,
        };
        Ok(System {
            s,
            alpha: al,
            shift: -params.c0() + gamma(s, params),
            damping,
            rule_t: rule.t,
            rule_w: rule.weights,
            p,
            k,
            a,
            chol,
            diss,
            trace: g.interpolation_matrix(&[1.0]),
            exp_factor: ((params.p() + 3.0) / s.sqrt()).exp(),
        })
    }

    /// Weak-form source: nonlinearity, injected forcing and manufactured source.
    fn load(&self, sys: &System, s: f64, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        let q = sys.rule_t.len();
        let lnp = ln_phi(s, &self.cfg.params);
        let mut b = vec![0.0; n];
        for r in 0..q {
            let pr = &sys.p[r * n..(r + 1) * n];
            let t = sys.rule_t[r];
            let mut f = 0.0;
            if self.cfg.nonlinear {
                let wq: f64 = pr.iter().zip(w).map(|(a, b)| a * b).sum();
                f += self.table.scaled_force(wq, s, lnp);
            }
            if let Fault::BoundaryForcing { amplitude } = self.cfg.fault {
                f += amplitude * (s - self.cfg.s0) * t.powi(6);
            }
            if let Some(mms) = self.cfg.manufactured {
                f += self.manufactured_source(&mms, sys, s, t);
            }
            if f != 0.0 {
                let c = sys.rule_w[r] * f;
                for i in 0..n {
                    b[i] += c * pr[i];
                }
            }
        }
        b
    }

    fn manufactured_source(&self, mms: &Manufactured, sys: &System, s: f64, t: f64) -> f64 {
        let (g, dg, ddg) = mms.g(s, self.cfg.s0);
        let nf = self.cfg.params.nf();
        let lw = -g * (2.0 * nf * (1.0 - t) - 4.0 * t * (1.0 + sys.alpha));
        let rhs = lw + sys.shift * g * (1.0 - t) - sys.damping * dg * (1.0 - t) + 4.0 * t * dg;
        ddg * (1.0 - t) - rhs
    }

    /// `∂_s² w` and the dissipation integrands at `(s, w, v)`.
    fn accel(&self, s: f64, w: &[f64], v: &[f64]) -> Result<(Vec<f64>, Accumulated), SolverError> {
        let sys = self.system(s)?;
        let n = w.len();
        let mut r = self.load(&sys, s, w);
        for i in 0..n {
            let ki = &sys.k[i * n..(i + 1) * n];
            let ai = &sys.a[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += ki[j] * w[j] + ai[j] * v[j];
            }
            r[i] -= acc;
        }
        sys.chol.solve_in_place(&mut r);
        for i in 0..n {
            r[i] += sys.shift * w[i] - sys.damping * v[i];
        }
        let acc = self.integrands(&sys, v);
        Ok((r, acc))
    }

    fn integrands(&self, sys: &System, v: &[f64]) -> Accumulated {
        let n = v.len();
        let (d, da) = match &sys.diss {
            Some((wts, dp)) => {
                let mut d = 0.0;
                for (r, wq) in wts.iter().enumerate() {
                    let vq: f64 = dp[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
                    d += wq * vq * vq;
                }
                (d, sys.alpha * sys.exp_factor * d)
            }
            None => (f64::NAN, f64::NAN),
        };
        let tr: f64 = sys.trace.iter().zip(v).map(|(a, b)| a * b).sum();
        Accumulated { dissipation: d, dissipation_alpha: da, boundary: sphere_area(self.cfg.params.n()) * tr * tr }
    }

    /// Right-hand side `(∂_s w, ∂_s² w)` of the first-order system.
    pub fn rhs(&self, state: &FieldState) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let (acc, _) = self.accel(state.s, &state.w, &state.dw_ds)?;
        Ok((state.dw_ds.clone(), acc))
    }

    /// Largest stable step at `state`: the RK4 reach over an estimate of the
    /// spectral radius of the linear part, and a growth-rate limit from the
    /// linearised nonlinearity.
    pub fn stable_ds(&self, state: &FieldState) -> Result<f64, SolverError> {
        let sys = self.system(state.s)?;
        let rho = self.spectral_radius(&sys);
        let mut jac: f64 = 0.0;
        if self.cfg.nonlinear {
            let lnp = ln_phi(state.s, &self.cfg.params);
            let p = self.cfg.params.p();
            for &w in &state.w {
                if w != 0.0 {
                    jac = jac.max(p * self.table.scaled_force(w, state.s, lnp) / w);
                }
            }
        }
        let lin = RK4_REACH / rho.max(1e-12);
        let nl = 0.5 / (1.0 + jac).sqrt();
        Ok(self.cfg.cfl * lin.min(nl))
    }

    fn spectral_radius(&self, sys: &System) -> f64 {
        let n = self.grid.len();
        let mut x: Vec<f64> = (0..2 * n).map(|i| 1.0 + 0.37 * (i as f64).sin()).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let iters = 60;
        let tail = 30;
        let mut log_sum = 0.0;
        for it in 0..iters {
            let (w, v) = x.split_at(n);
            let mut r = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += sys.k[i * n + j] * w[j] + sys.a[i * n + j] * v[j];
                }
                r[i] = -acc;
            }
            sys.chol.solve_in_place(&mut r);
            let mut y = Vec::with_capacity(2 * n);
            y.extend_from_slice(v);
            for i in 0..n {
                y.push(r[i] + sys.shift * w[i] - sys.damping * v[i]);
            }
            let ny = norm(&y);
            if ny == 0.0 {
                return 0.0;
            }
            if it >= iters - tail {
                log_sum += ny.ln();
            }
            x = y.into_iter().map(|a| a / ny).collect();
        }
        // the averaged growth underestimates for complex pairs; pad it
        1.25 * (log_sum / tail as f64).exp()
    }

    /// One RK4 step, refusing steps above the stability limit.
    pub fn step(&self, state: &FieldState, ds: f64) -> Result<(FieldState, Accumulated), SolverError> {
        let limit = self.stable_ds(state)? / self.cfg.cfl;
        if !(ds > 0.0) || ds > limit * (1.0 + 1e-12) {
            return Err(SolverError::Cfl { ds, limit });
        }
        self.step_unchecked(state, ds)
    }

    fn step_unchecked(&self, state: &FieldState, ds: f64) -> Result<(FieldState, Accumulated), SolverError> {
        let s = state.s;
        let w0 = &state.w;
        let v0 = &state.dw_ds;
        let n = w0.len();
        let axpy = |x: &[f64], c: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + c * b).collect() };

        let (a1, i1) = self.accel(s, w0, v0)?;
        let w2 = axpy(w0, 0.5 * ds, v0);
        let v2 = axpy(v0, 0.5 * ds, &a1);
        let (a2, i2) = self.accel(s + 0.5 * ds, &w2, &v2)?;
        let w3 = axpy(w0, 0.5 * ds, &v2);
        let v3 = axpy(v0, 0.5 * ds, &a2);
        let (a3, i3) = self.accel(s + 0.5 * ds, &w3, &v3)?;
        let w4 = axpy(w0, ds, &v3);
        let v4 = axpy(v0, ds, &a3);
        let (a4, i4) = self.accel(s + ds, &w4, &v4)?;

        let c = ds / 6.0;
        let mut w = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            w.push(w0[i] + c * (v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]));
            v.push(v0[i] + c * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]));
        }
        let mut acc = Accumulated::default();
        acc.add(&i1, c);
        acc.add(&i2, 2.0 * c);
        acc.add(&i3, 2.0 * c);
        acc.add(&i4, c);
        let next = FieldState { grid: state.grid.clone(), params: state.params, s: s + ds, w, dw_ds: v };
        if !next.is_finite() {
            return Err(SolverError::NonFinite { s: s + ds, what: "similarity state".into() });
        }
        Ok((next, acc))
    }

    /// Largest step the run loop takes at `state`, capped by `max`.
    fn next_ds(&self, state: &FieldState, max: f64) -> Result<f64, SolverError> {
        Ok(self.stable_ds(state)?.min(max))
    }

    /// Classifies the fate of `initial` over `[s0, horizon]` without
    /// evaluating functionals.
    pub fn probe(&self, initial: &FieldState, horizon: f64, floor: f64) -> Result<ProbeOutcome, SolverError> {
        let cap = self.cfg.cap();
        let mut st = initial.clone();
        while st.s < horizon - 1e-12 {
            let ds = self.next_ds(&st, horizon - st.s)?;
            st = self.step_unchecked(&st, ds)?.0;
            let sup = st.sup_norm();
            if sup > cap {
                return Ok(ProbeOutcome::BlowUp(st.s));
            }
            if sup < floor {
                return Ok(ProbeOutcome::Decay(st.s));
            }
        }
        let mean_rate = st.dw_ds.iter().sum::<f64>() / st.dw_ds.len() as f64;
        Ok(ProbeOutcome::Survived { rising: mean_rate > 0.0 })
    }

    fn snapshot_record(
        &self,
        f: &Functionals,
        st: &FieldState,
        totals: &Accumulated,
    ) -> Result<SnapshotRecord, SolverError> {
        let functionals = f.snapshot(st)?;
        Ok(SnapshotRecord {
            s: st.s,
            sup_norm: st.sup_norm(),
            dissipation_cum: totals.dissipation,
            dissipation_alpha_cum: totals.dissipation_alpha,
            boundary_cum: totals.boundary,
            functionals,
            w: self.cfg.store_states.then(|| st.w.clone()),
            dw_ds: self.cfg.store_states.then(|| st.dw_ds.clone()),
        })
    }

    /// Integrates from `initial` (at `s0`) to `s1`, snapshotting at the cadence.
    pub fn run(&self, initial: FieldState) -> Result<TrajectoryRecord, SolverError> {
        let cfg = &self.cfg;
        if (initial.s - cfg.s0).abs() > 1e-12 {
            return Err(SolverError::Config(format!("initial state is at s = {}, run starts at {}", initial.s, cfg.s0)));
        }
        self.grid.check_len(&initial.w)?;
        let f = Functionals::new(self.table.clone(), cfg.constants.clone())?;
        let cap = cfg.cap();
        let count = ((cfg.s1 - cfg.s0) / cfg.cadence).round() as usize;
        let mut totals = Accumulated::default();
        let mut diag = Diagnostics { ds_min: f64::INFINITY, ..Default::default() };
        let mut snaps = vec![self.snapshot_record(&f, &initial, &totals)?];
        let mut st = initial;
        let mut termination = TerminationCause::Horizon;

        'outer: for k in 1..=count {
            let target = if k == count { cfg.s1 } else { cfg.s0 + k as f64 * cfg.cadence };
            while st.s < target {
                let remaining = target - st.s;
                let mut ds = match self.next_ds(&st, remaining) {
                    Ok(ds) => ds,
                    Err(e) => {
                        diag.message = Some(e.to_string());
                        termination = TerminationCause::Aborted;
                        break 'outer;
                    }
                };
                // avoid a sliver step before the snapshot
                if remaining - ds < 1e-3 * ds {
                    ds = remaining;
                }
                let (mut next, inc) = match self.step_unchecked(&st, ds) {
                    Ok(r) => r,
                    Err(e) => {
                        diag.message = Some(e.to_string());
                        termination = TerminationCause::Aborted;
                        break 'outer;
                    }
                };
                if ds == remaining {
                    next.s = target;
                }
                diag.steps += 1;
                diag.ds_min = diag.ds_min.min(ds);
                diag.ds_max = diag.ds_max.max(ds);
                totals.add(&inc, 1.0);
                st = next;
                if st.sup_norm() > cap {
                    termination = TerminationCause::BlowUp;
                    if let Ok(rec) = self.snapshot_record(&f, &st, &totals) {
                        snaps.push(rec);
                    }
                    break 'outer;
                }
            }
            let rec = self.snapshot_record(&f, &st, &totals)?;
            let divergent = rec.functionals.flags.divergent;
            snaps.push(rec);
            if divergent {
                termination = TerminationCause::DivergenceFlag;
                break;
            }
        }
        if diag.steps == 0 {
            diag.ds_min = 0.0;
        }
        Ok(TrajectoryRecord {
            manifest_id: None,
            params: cfg.params,
            t0: cfg.t0,
            grid_size: cfg.grid_size,
            termination_s: st.s,
            snapshots: snaps,
            diagnostics: diag,
            termination,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    BlowUp(f64),
    Decay(f64),
    /// Still in range at the horizon; `rising` gives the side it is leaving on.
    Survived { rising: bool },
}

/// One step of the similarity equation under `cfg`.
pub fn step_similarity(state: &FieldState, ds: f64, cfg: &SimilarityRunConfig) -> Result<FieldState, SolverError> {
    let mut cfg = cfg.clone();
    cfg.grid_size = state.grid.len();
    let solver = SimilaritySolver { grid: state.grid.clone(), ..SimilaritySolver::new(cfg)? };
    Ok(solver.step(state, ds)?.0)
}

pub fn run_similarity(cfg: &SimilarityRunConfig, initial: FieldState) -> Result<TrajectoryRecord, SolverError> {
    let mut cfg = cfg.clone();
    cfg.grid_size = initial.grid.len();
    let solver = SimilaritySolver { grid: initial.grid.clone(), ..SimilaritySolver::new(cfg)? };
    solver.run(initial)
}

/// Level shift `c` (in units of κ) that keeps the trajectory of
/// `data + cκ` between `κ/2` and the blow-up cap up to `horizon`, bisected
/// to machine precision.
///
/// Shifting the level is how a perturbation of `κ` is placed in the frame of
/// its own blow-up time: a shift that is too large blows up in finite `s`,
/// one that is too small decays.
pub fn tune_level(
    solver: &SimilaritySolver,
    data: &InitialData,
    horizon: f64,
    bracket: (f64, f64),
) -> Result<f64, SolverError> {
    let floor = 0.5 * kappa(&solver.cfg.params);
    let fate = |c: f64| -> Result<ProbeOutcome, SolverError> {
        let st = solver.initial_state(data, c)?;
        solver.probe(&st, horizon, floor)
    };
    let (mut lo, mut hi) = bracket;
    let is_blowup = |o: ProbeOutcome| matches!(o, ProbeOutcome::BlowUp(_) | ProbeOutcome::Survived { rising: true });
    if is_blowup(fate(lo)?) || !is_blowup(fate(hi)?) {
        return Err(SolverError::Config(format!("level bracket [{lo}, {hi}] does not straddle the blow-up threshold")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match fate(mid)? {
            ProbeOutcome::BlowUp(_) | ProbeOutcome::Survived { rising: true } => hi = mid,
            ProbeOutcome::Decay(_) | ProbeOutcome::Survived { rising: false } => lo = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

fn matmul_rect(a: &[f64], b: &[f64], rows: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * n];
    for r in 0..rows {
        for k in 0..n {
            let x = a[r * n + k];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[r * n + j] += x * b[k * n + j];
            }
        }
    }
    out
}
