//! Weighted Hardy inequality on the ball,
//! `∫ h² |y|² ρ_η/(1-|y|²) <= η⁻² ∫ |∇h|² (1-|y|²) ρ_η + (n/η) ∫ h² ρ_η`,
//! and its corollary with `|y|²` dropped on the left and `n/η + 1` on the right.

use serde::{Deserialize, Serialize};

use super::{ball_points, integrate_radial, RadialGrid, TestField, Weight};
use crate::error::QuadError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub corollary_lhs: f64,
    pub corollary_rhs: f64,
    pub corollary_slack: f64,
    pub converged: bool,
}

fn assemble(eta: f64, n: f64, lhs: f64, lhs2: f64, grad: f64, l2: f64, converged: bool) -> HardyReport {
    let rhs = grad / (eta * eta) + n / eta * l2;
    let rhs2 = grad / (eta * eta) + (n / eta + 1.0) * l2;
    HardyReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        corollary_lhs: lhs2,
        corollary_rhs: rhs2,
        corollary_slack: rhs2 - lhs2,
        converged,
    }
}

/// Hardy check for a radial field given on `grid`.
pub fn hardy_check(h: &[f64], eta: f64, grid: &RadialGrid) -> Result<HardyReport, QuadError> {
    grid.check_len(h)?;
    let n = grid.dimension();
    let m = grid.len() + 8;
    let ht = grid.derivative(h);
    let hv = |t: f64| grid.interpolate(h, t);
    let dv = |t: f64| grid.interpolate(&ht, t);
    let tol = 1e-10;
    let lhs = integrate_radial(|t| hv(t).powi(2) * t, Weight::RhoEtaOver1my2(eta), 0.0, n, m, tol)?;
    let lhs2 = integrate_radial(|t| hv(t).powi(2), Weight::RhoEtaOver1my2(eta), 0.0, n, m, tol)?;
    let grad = integrate_radial(|t| 4.0 * t * dv(t).powi(2), Weight::RhoEta(eta + 1.0), 0.0, n, m, tol)?;
    let l2 = integrate_radial(|t| hv(t).powi(2), Weight::RhoEta(eta), 0.0, n, m, tol)?;
    let converged = lhs.ok() && lhs2.ok() && grad.ok() && l2.ok();
    Ok(assemble(eta, n as f64, lhs.value, lhs2.value, grad.value, l2.value, converged))
}

/// Hardy check for a closed-form field; angular modes use a tensor rule.
pub fn hardy_check_field(field: &TestField, eta: f64, m_t: usize) -> Result<HardyReport, QuadError> {
    let angular = field.m > 0;
    let m_theta = 4 * (field.m as usize + 2);
    let integrate = |exponent: f64, order: usize, g: &dyn Fn(&[f64]) -> f64| -> Result<f64, QuadError> {
        let pts = ball_points(field.n, angular, exponent, order, m_theta)?;
        Ok(pts.iter().map(|p| p.weight * g(&p.y)).sum())
    };
    let t_of = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>();
    let h2 = |y: &[f64]| field.value(y).powi(2);
    let h2t = |y: &[f64]| field.value(y).powi(2) * t_of(y);
    let g2 = |y: &[f64]| field.gradient(y).iter().map(|v| v * v).sum::<f64>();
    let mut vals = [[0.0; 4]; 2];
    for (k, order) in [m_t, 2 * m_t].into_iter().enumerate() {
        vals[k] = [
            integrate(eta - 1.0, order, &h2t)?,
            integrate(eta - 1.0, order, &h2)?,
            integrate(eta + 1.0, order, &g2)?,
            integrate(eta, order, &h2)?,
        ];
    }
    let converged = (0..4).all(|i| (vals[1][i] - vals[0][i]).abs() <= 1e-10 * vals[1][i].abs().max(1e-300));
    let v = vals[1];
    Ok(assemble(eta, field.n as f64, v[0], v[1], v[2], v[3], converged))
}
