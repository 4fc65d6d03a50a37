//! Similarity variables `y = (x - x0)/(T0 - t)`, `s = -ln(T0 - t)`,
//! `u = ψ_{T0}(t) w(y, s)`, and the scalar weights that appear in the
//! similarity equation.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{ln_psi_tau, psi_log_derivative, ModelParams};

/// Floor on the first similarity time of a run.
pub const S0_FLOOR: f64 = 15.0;

fn require_positive_s(s: f64) -> Result<(), ModelError> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("similarity time must be positive, got {s}")))
    }
}

/// `α(s) = -a/((p-1)s)`, without the domain check.
pub fn alpha(s: f64, params: &ModelParams) -> f64 {
    -params.a() / ((params.p() - 1.0) * s)
}

pub fn weight_alpha(s: f64, params: &ModelParams) -> Result<f64, ModelError> {
    require_positive_s(s)?;
    Ok(alpha(s, params))
}

/// `γ(s) = a(p+3)/((p-1)² s) - a(p+a-1)/((p-1)² s²)`, unchecked.
///
/// This is the coefficient produced by the change of variables itself: for
/// `w` independent of `y`, `u = φ(s) w(s)` solves `u'' = F(u)` exactly when
/// the `w` coefficient is `-(φ'' + φ')/φ = -c0 + γ`. The commonly quoted
/// form with `p+5` ([`gamma_as_printed`]) does not pass that check.
pub fn gamma(s: f64, params: &ModelParams) -> f64 {
    let a = params.a();
    let p = params.p();
    let d = (p - 1.0) * (p - 1.0);
    a * (p + 3.0) / (d * s) - a * (p + a - 1.0) / (d * s * s)
}

/// `a(p+5)/((p-1)² s) - a(p+a-1)/((p-1)² s²)`, kept for comparison only.
pub fn gamma_as_printed(s: f64, params: &ModelParams) -> f64 {
    gamma(s, params) + 2.0 * params.a() / ((params.p() - 1.0).powi(2) * s)
}

pub fn weight_gamma(s: f64, params: &ModelParams) -> Result<f64, ModelError> {
    require_positive_s(s)?;
    Ok(gamma(s, params))
}

/// `ln φ(s) = 2s/(p-1) - (a/(p-1)) ln s`. Always finite for `s > 0`.
pub fn ln_phi(s: f64, params: &ModelParams) -> f64 {
    let pm1 = params.p() - 1.0;
    2.0 * s / pm1 - params.a() / pm1 * s.ln()
}

/// `φ(s) = e^{2s/(p-1)} s^{-a/(p-1)}`; saturates rather than returning infinity.
pub fn weight_phi(s: f64, params: &ModelParams) -> Result<f64, ModelError> {
    if !(s >= 1.0) {
        return Err(ModelError::Domain(format!("phi is used for s >= 1, got {s}")));
    }
    let v = ln_phi(s, params).exp();
    if !v.is_finite() {
        return Err(ModelError::Saturated { what: "phi", arg: s });
    }
    Ok(v)
}

/// `(1 - r²)^{α(s)}`, or `(1 - r²)^η` when `eta` is given.
pub fn weight_rho(r: f64, s: f64, eta: Option<f64>, params: &ModelParams) -> Result<f64, ModelError> {
    if !(0.0..1.0).contains(&r.abs()) {
        return Err(ModelError::Domain(format!("rho needs |y| < 1, got {r}")));
    }
    let e = match eta {
        Some(e) => e,
        None => weight_alpha(s, params)?,
    };
    Ok((1.0 - r * r).powf(e))
}

/// `max(-ln T0, 15)`.
pub fn default_s0(t0: f64) -> f64 {
    (-t0.ln()).max(S0_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFrame {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub delta0: f64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPoint {
    pub y: Vec<f64>,
    pub s: f64,
    pub w: f64,
    pub dw_ds: f64,
    pub grad_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPoint {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: f64,
    pub du_dt: f64,
    pub grad_u: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl SimilarityFrame {
    pub fn new(x0: Vec<f64>, t0: f64, delta0: f64, params: ModelParams) -> Result<Self, ModelError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(ModelError::Domain(format!("T0 must be positive, got {t0}")));
        }
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(ModelError::Domain(format!("delta0 must lie in (0, 1), got {delta0}")));
        }
        Ok(Self { x0, t0, delta0, params })
    }

    /// Radial frame centred at the origin.
    pub fn radial(t0: f64, params: ModelParams) -> Result<Self, ModelError> {
        Self::new(vec![0.0], t0, 0.5, params)
    }

    pub fn s_min(&self) -> f64 {
        -self.t0.ln()
    }

    pub fn default_s0(&self) -> f64 {
        default_s0(self.t0)
    }

    pub fn s_of(&self, t: f64) -> Result<f64, ModelError> {
        if !(t < self.t0) {
            return Err(ModelError::Domain(format!("t = {t} is not before T0 = {}", self.t0)));
        }
        Ok(-(self.t0 - t).ln())
    }

    pub fn t_of(&self, s: f64) -> f64 {
        self.t0 - (-s).exp()
    }

    /// `(x, t, u, u_t, ∇u) -> (y, s, w, ∂_s w, ∇_y w)`.
    ///
    /// `∂_s w = τ (u_t - y·∇u)/ψ - w (2/(p-1) - a/((p-1)s))` with `τ = T0 - t`.
    pub fn to_similarity(
        &self,
        x: &[f64],
        t: f64,
        u: f64,
        du_dt: f64,
        grad_u: &[f64],
    ) -> Result<SimilarityPoint, ModelError> {
        self.check_dim(x)?;
        let s = self.s_of(t)?;
        let tau = self.t0 - t;
        if tau >= 1.0 {
            return Err(ModelError::Domain(format!("T0 - t = {tau} must be below 1")));
        }
        let y: Vec<f64> = x.iter().zip(&self.x0).map(|(xi, x0i)| (xi - x0i) / tau).collect();
        if !(norm(&y) < 1.0) {
            return Err(ModelError::Domain(format!("x = {x:?} lies outside the backward cone at t = {t}")));
        }
        let psi = ln_psi_tau(tau, &self.params)?.exp();
        let w = u / psi;
        let y_dot_grad: f64 = y.iter().zip(grad_u).map(|(a, b)| a * b).sum();
        let g = tau * psi_log_derivative(tau, &self.params);
        let dw_ds = tau * (du_dt - y_dot_grad) / psi - g * w;
        let grad_w = grad_u.iter().map(|gu| gu * tau / psi).collect();
        Ok(SimilarityPoint { y, s, w, dw_ds, grad_w })
    }

    /// Inverse of [`Self::to_similarity`].
    pub fn from_similarity(
        &self,
        y: &[f64],
        s: f64,
        w: f64,
        dw_ds: f64,
        grad_w: &[f64],
    ) -> Result<PhysicalPoint, ModelError> {
        self.check_dim(y)?;
        require_positive_s(s)?;
        if !(norm(y) < 1.0) {
            return Err(ModelError::Domain(format!("|y| must be below 1, got {y:?}")));
        }
        let tau = (-s).exp();
        let t = self.t0 - tau;
        let psi = ln_psi_tau(tau, &self.params)?.exp();
        let x = y.iter().zip(&self.x0).map(|(yi, x0i)| x0i + yi * tau).collect();
        let grad_u: Vec<f64> = grad_w.iter().map(|gw| gw * psi / tau).collect();
        let y_dot_grad: f64 = y.iter().zip(&grad_u).map(|(a, b)| a * b).sum();
        let g = tau * psi_log_derivative(tau, &self.params);
        let du_dt = psi * (dw_ds + g * w) / tau + y_dot_grad;
        Ok(PhysicalPoint { x, t, u: psi * w, du_dt, grad_u })
    }

    /// `T*(x) = T0 - δ0 |x - x0|`.
    pub fn t_star(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        let d: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        let dist = norm(&d);
        if dist > self.t0 / self.delta0 {
            return Err(ModelError::Domain(format!("|x - x0| = {dist} exceeds T0/delta0")));
        }
        Ok(self.t0 - self.delta0 * dist)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.x0.len() {
            return Err(ModelError::Domain(format!(
                "point has {} coordinates, frame has {}",
                x.len(),
                self.x0.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m31() -> ModelParams {
        ModelParams::new(3, -1.0).unwrap()
    }

    #[test]
    fn gamma_matches_the_change_of_variables() {
        // -(φ'' + φ')/φ + c0 by central differences of ln φ
        for (n, a) in [(3, -1.0), (2, -0.5), (4, -2.0)] {
            let m = ModelParams::new(n, a).unwrap();
            for s in [3.0, 10.0, 40.0] {
                let h = 1e-3;
                let l = |x: f64| ln_phi(x, &m);
                let d1 = (l(s + h) - l(s - h)) / (2.0 * h);
                let d2 = (l(s + h) - 2.0 * l(s) + l(s - h)) / (h * h);
                let want = -(d2 + d1 * d1 + d1) + m.c0();
                assert_relative_eq!(gamma(s, &m), want, max_relative = 1e-5);
                assert!((gamma_as_printed(s, &m) - want).abs() > 1e-3 / s);
            }
        }
    }

    #[test]
    fn alpha_gamma_phi_examples() {
        let m = m31();
        assert_relative_eq!(weight_alpha(10.0, &m).unwrap(), 0.05, max_relative = 1e-15);
        assert!(weight_alpha(0.0, &m).is_err());
        assert_eq!(weight_alpha(4.0, &ModelParams::exploratory(3, 0.0).unwrap()).unwrap(), 0.0);
        assert_relative_eq!(weight_gamma(10.0, &m).unwrap(), -0.1475, max_relative = 1e-14);
        assert_relative_eq!(gamma_as_printed(10.0, &m), -0.1975, max_relative = 1e-14);
        assert_eq!(weight_gamma(3.0, &ModelParams::exploratory(3, 0.0).unwrap()).unwrap(), 0.0);
        // e^10 · 10^{1/2}
        assert_relative_eq!(weight_phi(10.0, &m).unwrap(), 10f64.exp() * 10f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            weight_phi(1.0, &ModelParams::exploratory(3, 0.0).unwrap()).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
        assert!(matches!(weight_phi(800.0, &m), Err(ModelError::Saturated { .. })));
        assert!(ln_phi(800.0, &m).is_finite());
    }

    #[test]
    fn rho_examples() {
        let m = m31();
        assert_eq!(weight_rho(0.0, 10.0, None, &m).unwrap(), 1.0);
        assert_relative_eq!(weight_rho(0.6, 10.0, None, &m).unwrap(), 0.64f64.powf(0.05), max_relative = 1e-15);
        assert!((weight_rho(0.6, 10.0, None, &m).unwrap() - 0.977933).abs() < 1e-6);
        assert_relative_eq!(weight_rho(0.9, 10.0, Some(1.0), &m).unwrap(), 0.19, max_relative = 1e-14);
        assert!(weight_rho(1.0, 10.0, None, &m).is_err());
    }

    #[test]
    fn t_star_examples() {
        let f = SimilarityFrame::new(vec![0.0], 0.1, 0.5, m31()).unwrap();
        assert_eq!(f.t_star(&[0.0]).unwrap(), 0.1);
        assert_relative_eq!(f.t_star(&[0.1]).unwrap(), 0.05, max_relative = 1e-15);
        assert!(f.t_star(&[0.05]).unwrap() > f.t_star(&[0.07]).unwrap());
        assert!(f.t_star(&[0.3]).is_err());
    }

    #[test]
    fn unit_profile_at_base_point() {
        let m = m31();
        let f = SimilarityFrame::radial(0.2, m).unwrap();
        let t = 0.1;
        let psi = crate::model::psi(t, 0.2, &m).unwrap();
        let p = f.to_similarity(&[0.0], t, psi, 0.0, &[0.0]).unwrap();
        assert_relative_eq!(p.w, 1.0, max_relative = 1e-15);
        assert_eq!(p.y, vec![0.0]);
        assert!(f.to_similarity(&[0.2], t, 1.0, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn default_s0_floor() {
        assert_eq!(default_s0(0.5), 15.0);
        assert_relative_eq!(default_s0((-20f64).exp()), 20.0, max_relative = 1e-15);
    }
}
