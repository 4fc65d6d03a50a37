//! Energy, Lyapunov and auxiliary functionals of the similarity formulation,
//! evaluated on a radial [`FieldState`].
//!
//! Every functional is a linear combination of a handful of weighted
//! moments `∫ g(w, ∂_s w, ∇w) (1-|y|²)^e dy`. Moments are computed once per
//! weight exponent on a Gauss–Jacobi rule of order `m` and again at `2m`; the
//! difference is the convergence flag carried by the snapshot.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, QuadError};
use crate::model::{ModelParams, NonlinearityTable};
use crate::par;
use crate::quad::matvec;
use crate::quad::{sphere_area, BallRule, FieldState, RadialGrid};
use crate::simvars::{alpha, gamma, ln_phi};

/// Relative doubling error accepted before a moment is flagged.
pub const QUAD_TOL: f64 = 1e-7;

/// Constants that the theory only fixes as "large enough" or "small enough".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalConstants {
    pub theta1: f64,
    pub theta2: f64,
    pub theta4: f64,
    pub nu: f64,
    pub etas: Vec<f64>,
}

impl Default for FunctionalConstants {
    fn default() -> Self {
        Self { theta1: 1.0, theta2: 1.0, theta4: 1.0, nu: 0.005, etas: vec![0.1, 0.25, 0.5] }
    }
}

impl FunctionalConstants {
    pub fn validate(&self, params: &ModelParams) -> Result<(), ModelError> {
        let nu_max = (params.p() - 1.0) / 160.0;
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(ModelError::Domain(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        if params.theorem_mode() && self.nu >= nu_max {
            return Err(ModelError::Domain(format!("nu = {} exceeds (p-1)/160 = {nu_max}", self.nu)));
        }
        if let Some(e) = self.etas.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(ModelError::Domain(format!("eta must lie in (0, 1), got {e}")));
        }
        if ![self.theta1, self.theta2, self.theta4].iter().all(|t| t.is_finite() && *t >= 0.0) {
            return Err(ModelError::Domain("theta constants must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFlags {
    pub converged: bool,
    pub divergent: bool,
    /// Largest relative doubling error among the moments used.
    #[serde(with = "crate::record::nonfinite")]
    pub max_rel_error: f64,
}

impl QuadFlags {
    pub fn clean() -> Self {
        Self { converged: true, divergent: false, max_rel_error: 0.0 }
    }

    pub fn ok(&self) -> bool {
        self.converged && !self.divergent
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            converged: self.converged && o.converged,
            divergent: self.divergent || o.divergent,
            max_rel_error: self.max_rel_error.max(o.max_rel_error),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flags: QuadFlags,
}

/// Weighted moments of a radial state for one weight exponent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `∫ (∂_s w)²`
    pub kin: f64,
    /// `∫ |∇w|²`
    pub grad: f64,
    /// `∫ (y·∇w)²`
    pub radial_sq: f64,
    /// `∫ w²`
    pub w2: f64,
    /// `∫ w ∂_s w`
    pub w_ws: f64,
    /// `∫ (y·∇w) ∂_s w`
    pub ydw_ws: f64,
    /// `∫ w (y·∇w)`
    pub w_ydw: f64,
    /// `∫ e^{-2(p+1)s/(p-1)} s^{2a/(p-1)} f(φ w)`
    pub nl_potential: f64,
    /// `∫ s^{-a} |w|^{p+1} ln^a(φ²w²+2)`
    pub nl_log_power: f64,
}

impl Moments {
    fn as_array(&self) -> [f64; 9] {
        [
            self.kin,
            self.grad,
            self.radial_sq,
            self.w2,
            self.w_ws,
            self.ydw_ws,
            self.w_ydw,
            self.nl_potential,
            self.nl_log_power,
        ]
    }

    fn scale(&self) -> f64 {
        self.kin + self.grad + self.w2 + self.nl_log_power.abs()
    }
}

/// Values of `w`, `∂_s w`, `∂_t w` at the nodes of a ball rule.
struct Sampled {
    rule: BallRule,
    w: Vec<f64>,
    v: Vec<f64>,
    wt: Vec<f64>,
}

fn sample(state: &FieldState, wt_nodes: &[f64], exponent: f64, m: usize) -> Result<Sampled, QuadError> {
    let g: &RadialGrid = &state.grid;
    let rule = BallRule::new(g.dimension(), m, exponent)?;
    let p = g.interpolation_matrix(&rule.t);
    Ok(Sampled { w: matvec(&p, &state.w), v: matvec(&p, &state.dw_ds), wt: matvec(&p, wt_nodes), rule })
}

fn moments_at(smp: &Sampled, s: f64, lnp: f64, table: &NonlinearityTable) -> Moments {
    let mut m = Moments::default();
    for (k, (&t, &wgt)) in smp.rule.t.iter().zip(&smp.rule.weights).enumerate() {
        let (w, v, wt) = (smp.w[k], smp.v[k], smp.wt[k]);
        // y·∇w = 2t ∂_t w and |∇w|² = 4t (∂_t w)² for radial w
        let ydw = 2.0 * t * wt;
        m.kin += wgt * v * v;
        m.grad += wgt * 4.0 * t * wt * wt;
        m.radial_sq += wgt * ydw * ydw;
        m.w2 += wgt * w * w;
        m.w_ws += wgt * w * v;
        m.ydw_ws += wgt * ydw * v;
        m.w_ydw += wgt * w * ydw;
        m.nl_potential += wgt * table.scaled_potential(w, s, lnp);
        m.nl_log_power += wgt * table.scaled_log_power(w, s, lnp);
    }
    m
}

/// Moments for `(1-|y|²)^exponent` with a doubling error estimate.
pub fn weighted_moments(
    state: &FieldState,
    table: &NonlinearityTable,
    exponent: f64,
) -> Result<Flagged<Moments>, QuadError> {
    if exponent <= -1.0 {
        let inf = f64::INFINITY;
        let m = Moments {
            kin: inf,
            grad: inf,
            radial_sq: inf,
            w2: inf,
            w_ws: f64::NAN,
            ydw_ws: f64::NAN,
            w_ydw: f64::NAN,
            nl_potential: inf,
            nl_log_power: inf,
        };
        return Ok(Flagged { value: m, flags: QuadFlags { converged: false, divergent: true, max_rel_error: inf } });
    }
    let g = &state.grid;
    let wt = g.derivative(&state.w);
    let lnp = ln_phi(state.s, &state.params);
    let m = g.len() + 8;
    let lo = moments_at(&sample(state, &wt, exponent, m)?, state.s, lnp, table);
    let hi = moments_at(&sample(state, &wt, exponent, 2 * m)?, state.s, lnp, table);
    let scale = hi.scale();
    let mut worst: f64 = 0.0;
    for (a, b) in lo.as_array().iter().zip(hi.as_array()) {
        let denom = b.abs().max(scale);
        if denom > 0.0 {
            worst = worst.max((a - b).abs() / denom);
        }
    }
    let flags = QuadFlags { converged: worst <= QUAD_TOL && hi.scale().is_finite(), divergent: false, max_rel_error: worst };
    Ok(Flagged { value: hi, flags })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaFamily {
    pub eta: f64,
    #[serde(rename = "E_eta")]
    pub e_eta: f64,
    #[serde(rename = "I_eta")]
    pub i_eta: f64,
    #[serde(rename = "H_eta")]
    pub h_eta: f64,
    #[serde(rename = "curlyE_eta")]
    pub curly_e_eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevFamily {
    pub eta: f64,
    #[serde(rename = "M_eta")]
    pub m_eta: f64,
    #[serde(rename = "J_eta_singular")]
    pub j_eta_singular: f64,
    #[serde(rename = "curlyL_eta")]
    pub curly_l_eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyFamily {
    #[serde(rename = "F_poly")]
    pub f_poly: f64,
    #[serde(rename = "P_poly")]
    pub p_poly: f64,
    #[serde(rename = "curlyF")]
    pub curly_f: f64,
}

/// Per-η values in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaValues {
    pub eta: f64,
    #[serde(rename = "E_eta")]
    pub e_eta: f64,
    #[serde(rename = "I_eta")]
    pub i_eta: f64,
    #[serde(rename = "H_eta")]
    pub h_eta: f64,
    #[serde(rename = "curlyE_eta")]
    pub curly_e_eta: f64,
    #[serde(rename = "M_eta")]
    pub m_eta: f64,
    #[serde(rename = "J_eta_singular")]
    pub j_eta_singular: f64,
    #[serde(rename = "curlyL_eta")]
    pub curly_l_eta: f64,
    #[serde(rename = "N_eta")]
    pub n_eta: f64,
    /// `s^{-a} ∫ |w|^{p+1} ln^a(φ²w²+2) ρ_η/√(1-|y|²)`
    pub singular_nonlinear: f64,
    /// `∫ |∇_θ w|² ρ_η/√(1-|y|²)`; zero for radial states.
    pub tangential_singular: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    /// `½ ∫ (∂_s w)² ρ`
    pub kinetic: f64,
    /// `½ ∫ (|∇w|² - (y·∇w)²) ρ`
    pub gradient: f64,
    /// `(c1 - γ/2) ∫ w² ρ`
    pub potential: f64,
    /// `∫ e^{-2(p+1)s/(p-1)} s^{2a/(p-1)} f(φw) ρ`
    pub nonlinear_potential: f64,
    /// `(∂_s w)²` extrapolated to `|y| = 1`.
    pub boundary_trace_sq: f64,
    /// `∫ (∂_s w)² ρ/(1-|y|²)`, the instantaneous interior dissipation.
    #[serde(with = "crate::record::nonfinite")]
    pub dissipation: f64,
    /// `‖w‖_{H¹(B)} + ‖∂_s w‖_{L²(B)}` with the unweighted measure.
    pub h1l2_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSnapshot {
    pub s: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "F_poly")]
    pub f_poly: f64,
    #[serde(rename = "P_poly")]
    pub p_poly: f64,
    #[serde(rename = "curlyF")]
    pub curly_f: f64,
    pub boundary_dissipation: f64,
    pub eta: Vec<EtaValues>,
    pub components: Components,
    pub constants: FunctionalConstants,
    pub flags: QuadFlags,
    pub boundary_flagged: bool,
}

/// Evaluates functionals for one parameter set.
#[derive(Debug, Clone)]
pub struct Functionals {
    table: Arc<NonlinearityTable>,
    constants: FunctionalConstants,
}

fn e_combination(m: &Moments, s: f64, params: &ModelParams) -> f64 {
    0.5 * m.kin + 0.5 * (m.grad - m.radial_sq) + (params.c1() - 0.5 * gamma(s, params)) * m.w2 - m.nl_potential
}

impl Functionals {
    pub fn new(table: Arc<NonlinearityTable>, constants: FunctionalConstants) -> Result<Self, ModelError> {
        constants.validate(table.params())?;
        Ok(Self { table, constants })
    }

    pub fn for_params(params: ModelParams, constants: FunctionalConstants) -> Result<Self, ModelError> {
        Self::new(Arc::new(NonlinearityTable::new(params)), constants)
    }

    pub fn table(&self) -> &Arc<NonlinearityTable> {
        &self.table
    }

    pub fn constants(&self) -> &FunctionalConstants {
        &self.constants
    }

    pub fn with_theta1(&self, theta1: f64) -> Self {
        let mut c = self.constants.clone();
        c.theta1 = theta1;
        Self { table: self.table.clone(), constants: c }
    }

    pub fn moments(&self, state: &FieldState, exponent: f64) -> Result<Flagged<Moments>, QuadError> {
        weighted_moments(state, &self.table, exponent)
    }

    fn rho_moments(&self, state: &FieldState) -> Result<Flagged<Moments>, QuadError> {
        self.moments(state, state.alpha())
    }

    pub fn eval_e(&self, state: &FieldState) -> Result<Flagged<f64>, QuadError> {
        let m = self.rho_moments(state)?;
        Ok(Flagged { value: e_combination(&m.value, state.s, &state.params), flags: m.flags })
    }

    pub fn eval_j(&self, state: &FieldState) -> Result<Flagged<f64>, QuadError> {
        let m = self.rho_moments(state)?;
        Ok(Flagged { value: j_combination(&m.value, state.s, &state.params), flags: m.flags })
    }

    pub fn eval_l(&self, state: &FieldState, theta1: f64) -> Result<Flagged<f64>, QuadError> {
        let m = self.rho_moments(state)?;
        let g = e_combination(&m.value, state.s, &state.params) + j_combination(&m.value, state.s, &state.params);
        Ok(Flagged { value: l_from_g(g, state.s, theta1, &state.params), flags: m.flags })
    }

    pub fn eval_e0(&self, state: &FieldState) -> Result<Flagged<f64>, QuadError> {
        let m = self.moments(state, 0.0)?;
        Ok(Flagged { value: e_combination(&m.value, state.s, &state.params), flags: m.flags })
    }

    pub fn eval_eta_family(&self, state: &FieldState, eta: f64, theta2: f64) -> Result<Flagged<EtaFamily>, QuadError> {
        let m = self.moments(state, eta)?;
        Ok(Flagged { value: eta_family(&m.value, state, eta, theta2), flags: m.flags })
    }

    pub fn eval_pohozaev_family(&self, state: &FieldState, eta: f64) -> Result<Flagged<PohozaevFamily>, QuadError> {
        let at_eta = self.moments(state, eta)?;
        let shifted = self.moments(state, 0.5 + eta)?;
        let singular = self.moments(state, eta - 0.5)?;
        let flags = at_eta.flags.merge(shifted.flags).merge(singular.flags);
        let n = state.params.nf();
        let m_eta = m_combination(&at_eta.value);
        let j_sing = j_singular(&singular.value, n);
        let curly_l = m_combination(&shifted.value) + (0.5 + eta) * j_sing;
        Ok(Flagged { value: PohozaevFamily { eta, m_eta, j_eta_singular: j_sing, curly_l_eta: curly_l }, flags })
    }

    pub fn eval_n_eta(&self, state: &FieldState, eta: f64) -> Result<Flagged<f64>, QuadError> {
        let m = self.moments(state, eta)?;
        Ok(Flagged { value: n_combination(&m.value), flags: m.flags })
    }

    pub fn eval_poly_family(&self, state: &FieldState, nu: f64, theta4: f64) -> Result<Flagged<PolyFamily>, QuadError> {
        let m = self.rho_moments(state)?;
        let e = e_combination(&m.value, state.s, &state.params);
        Ok(Flagged { value: poly_family(&m.value, e, state, nu, theta4), flags: m.flags })
    }

    /// Full snapshot; the η sweep runs through [`par::map`].
    pub fn snapshot(&self, state: &FieldState) -> Result<FunctionalSnapshot, QuadError> {
        let s = state.s;
        let params = &state.params;
        let c = &self.constants;
        let rho = self.rho_moments(state)?;
        let flat = self.moments(state, 0.0)?;
        let diss = self.moments(state, state.alpha() - 1.0)?;
        let m = &rho.value;

        let e = e_combination(m, s, params);
        let j = j_combination(m, s, params);
        let g = e + j;
        let l = l_from_g(g, s, c.theta1, params);
        let e0 = e_combination(&flat.value, s, params);
        let poly = poly_family(m, e, state, c.nu, c.theta4);
        let (bd, boundary_flagged) = boundary_dissipation(state);

        let per_eta: Vec<Result<(EtaValues, QuadFlags), QuadError>> =
            par::map(&c.etas, |&eta| self.eta_values(state, eta, c.theta2));
        let mut eta = Vec::with_capacity(per_eta.len());
        // the dissipation moment diverges for α ≤ 0 and is informational only
        let mut flags = rho.flags.merge(flat.flags);
        for r in per_eta {
            let (v, f) = r?;
            flags = flags.merge(f);
            eta.push(v);
        }
        let fl = &flat.value;
        let components = Components {
            kinetic: 0.5 * m.kin,
            gradient: 0.5 * (m.grad - m.radial_sq),
            potential: (params.c1() - 0.5 * gamma(s, params)) * m.w2,
            nonlinear_potential: m.nl_potential,
            boundary_trace_sq: bd / sphere_area(params.n()),
            dissipation: diss.value.kin,
            h1l2_norm: (fl.w2 + fl.grad).sqrt() + fl.kin.sqrt(),
        };
        Ok(FunctionalSnapshot {
            s,
            e,
            j,
            g,
            l,
            e0,
            f_poly: poly.f_poly,
            p_poly: poly.p_poly,
            curly_f: poly.curly_f,
            boundary_dissipation: bd,
            eta,
            components,
            constants: c.clone(),
            flags,
            boundary_flagged,
        })
    }

    fn eta_values(&self, state: &FieldState, eta: f64, theta2: f64) -> Result<(EtaValues, QuadFlags), QuadError> {
        let at_eta = self.moments(state, eta)?;
        let po = self.eval_pohozaev_family(state, eta)?;
        let singular = self.moments(state, eta - 0.5)?;
        let fam = eta_family(&at_eta.value, state, eta, theta2);
        let v = EtaValues {
            eta,
            e_eta: fam.e_eta,
            i_eta: fam.i_eta,
            h_eta: fam.h_eta,
            curly_e_eta: fam.curly_e_eta,
            m_eta: po.value.m_eta,
            j_eta_singular: po.value.j_eta_singular,
            curly_l_eta: po.value.curly_l_eta,
            n_eta: n_combination(&at_eta.value),
            singular_nonlinear: singular.value.nl_log_power,
            tangential_singular: 0.0,
        };
        Ok((v, at_eta.flags.merge(po.flags)))
    }
}

fn j_combination(m: &Moments, s: f64, params: &ModelParams) -> f64 {
    (-m.w_ws + 0.5 * params.nf() * m.w2) / (s * s.sqrt())
}

/// `exp((p+3)/√s) G + θ1/s`
pub fn l_from_g(g: f64, s: f64, theta1: f64, params: &ModelParams) -> f64 {
    ((params.p() + 3.0) / s.sqrt()).exp() * g + theta1 / s
}

fn m_combination(m: &Moments) -> f64 {
    m.ydw_ws + m.radial_sq
}

fn j_singular(m: &Moments, n: f64) -> f64 {
    -(m.w_ws + 2.0 * m.w_ydw) - 0.5 * n * m.w2
}

fn n_combination(m: &Moments) -> f64 {
    m.grad + m.kin + m.w2 + m.nl_log_power
}

fn eta_family(m: &Moments, state: &FieldState, eta: f64, theta2: f64) -> EtaFamily {
    let s = state.s;
    let params = &state.params;
    let al = alpha(s, params);
    let e_eta = e_combination(m, s, params);
    let i_eta = -(eta - al) * m.w_ws + 0.5 * (params.nf() - 2.0 * al) * (eta - al) * m.w2;
    let h_eta = e_eta + i_eta;
    let decay = (-eta * (params.p() + 3.0) * s / 2.0).exp();
    EtaFamily { eta, e_eta, i_eta, h_eta, curly_e_eta: h_eta * decay + theta2 * decay }
}

fn poly_family(m: &Moments, e: f64, state: &FieldState, nu: f64, theta4: f64) -> PolyFamily {
    let s = state.s;
    let params = &state.params;
    let al = alpha(s, params);
    let f_poly = -al * m.w_ws + 0.5 * al * params.nf() * m.w2;
    let p_poly = e + nu * f_poly;
    let k = params.a() * params.nf() * nu / 2.0;
    PolyFamily { f_poly, p_poly, curly_f: s.powf(k) * p_poly + theta4 * s.powf(k - 5.0) }
}

/// `∫_{∂B} (∂_s w)² dσ` from the extrapolated trace, with the order-disagreement flag.
pub fn boundary_dissipation(state: &FieldState) -> (f64, bool) {
    let tr = state.grid.boundary_trace(&state.dw_ds);
    (sphere_area(state.grid.dimension()) * tr.value * tr.value, tr.flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kappa;
    use approx::assert_relative_eq;

    fn setup(size: usize) -> (Functionals, Arc<RadialGrid>, ModelParams) {
        let params = ModelParams::new(3, -1.0).unwrap();
        let f = Functionals::for_params(params, FunctionalConstants::default()).unwrap();
        (f, Arc::new(RadialGrid::new(3, size).unwrap()), params)
    }

    #[test]
    fn zero_state_values() {
        let (f, g, params) = setup(10);
        let st = FieldState::zero(g, params, 20.0);
        let snap = f.snapshot(&st).unwrap();
        assert_eq!((snap.e, snap.j, snap.e0, snap.f_poly, snap.p_poly), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(snap.l, 1.0 / 20.0, max_relative = 1e-15);
        for ev in &snap.eta {
            assert_eq!((ev.e_eta, ev.i_eta, ev.h_eta, ev.m_eta, ev.n_eta), (0.0, 0.0, 0.0, 0.0, 0.0));
            assert_relative_eq!(ev.curly_e_eta, (-ev.eta * 6.0 * 10.0).exp(), max_relative = 1e-15);
        }
        let k = -1.0 * 3.0 * 0.005 / 2.0;
        assert_relative_eq!(snap.curly_f, 20f64.powf(k - 5.0), max_relative = 1e-14);
        assert_eq!(snap.boundary_dissipation, 0.0);
        assert!(snap.flags.ok());
    }

    #[test]
    fn recombinations_are_exact() {
        let (f, g, params) = setup(12);
        let st = FieldState::from_fn(g, params, 22.0, |t| 2.0 + 0.3 * (1.0 - t) * t, |t| 0.1 * t - 0.05);
        let snap = f.snapshot(&st).unwrap();
        assert_eq!(snap.g, snap.e + snap.j);
        assert_eq!(snap.p_poly, snap.e + f.constants().nu * snap.f_poly);
        for ev in &snap.eta {
            assert_eq!(ev.h_eta, ev.e_eta + ev.i_eta);
        }
    }

    #[test]
    fn constant_state_j_and_i_eta() {
        let (f, g, params) = setup(8);
        let c = kappa(&params);
        let s = 20.0;
        let st = FieldState::from_fn(g, params, s, |_| c, |_| 0.0);
        let al = alpha(s, &params);
        let rho_mass = BallRule::new(3, 20, al).unwrap().integrate(|_| 1.0);
        let j = f.eval_j(&st).unwrap().value;
        assert_relative_eq!(j, 3.0 / (2.0 * s * s.sqrt()) * c * c * rho_mass, max_relative = 1e-12);
        let eta = 0.25;
        let eta_mass = BallRule::new(3, 20, eta).unwrap().integrate(|_| 1.0);
        let fam = f.eval_eta_family(&st, eta, 1.0).unwrap().value;
        assert_relative_eq!(fam.i_eta, (3.0 - 2.0 * al) * (eta - al) * c * c * eta_mass / 2.0, max_relative = 1e-12);
        assert!(fam.i_eta > 0.0);
        let po = f.eval_pohozaev_family(&st, eta).unwrap().value;
        assert!(po.m_eta.abs() < 1e-24);
        let sing_mass = BallRule::new(3, 20, eta - 0.5).unwrap().integrate(|_| 1.0);
        assert_relative_eq!(po.j_eta_singular, -1.5 * c * c * sing_mass, max_relative = 1e-12);
    }

    #[test]
    fn e0_equals_e_when_weight_is_flat() {
        let params = ModelParams::exploratory(3, 0.0).unwrap();
        let f = Functionals::for_params(params, FunctionalConstants::default()).unwrap();
        let g = Arc::new(RadialGrid::new(3, 10).unwrap());
        let st = FieldState::from_fn(g, params, 5.0, |t| 1.0 - 0.4 * t, |t| t);
        assert_eq!(f.eval_e(&st).unwrap().value, f.eval_e0(&st).unwrap().value);
    }

    #[test]
    fn nu_bound_enforced_in_theorem_mode() {
        let params = ModelParams::new(3, -1.0).unwrap();
        let c = FunctionalConstants { nu: 0.02, ..Default::default() };
        assert!(Functionals::for_params(params, c).is_err());
    }

    #[test]
    fn boundary_dissipation_examples() {
        let (_, g, params) = setup(12);
        let st = FieldState::from_fn(g.clone(), params, 20.0, |_| 1.0, |_| 0.7);
        let (bd, flagged) = boundary_dissipation(&st);
        assert_relative_eq!(bd, 4.0 * std::f64::consts::PI * 0.49, max_relative = 1e-10);
        assert!(!flagged);
        let st = FieldState::from_fn(g, params, 20.0, |_| 1.0, |t| 1.0 - t);
        assert!(boundary_dissipation(&st).0 < 1e-20);
    }
}
