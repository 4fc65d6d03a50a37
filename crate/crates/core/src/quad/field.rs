use std::sync::Arc;

use super::grid::matvec;
use super::{integrate_radial, IntegralEstimate, RadialGrid, Weight};
use crate::error::QuadError;
use crate::model::ModelParams;
use crate::simvars::alpha;

/// Radial similarity-variable state `(w, ∂_s w)` at time `s`.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub grid: Arc<RadialGrid>,
    pub params: ModelParams,
    pub s: f64,
    pub w: Vec<f64>,
    pub dw_ds: Vec<f64>,
}

impl FieldState {
    pub fn new(
        grid: Arc<RadialGrid>,
        params: ModelParams,
        s: f64,
        w: Vec<f64>,
        dw_ds: Vec<f64>,
    ) -> Result<Self, QuadError> {
        grid.check_len(&w)?;
        grid.check_len(&dw_ds)?;
        Ok(Self { grid, params, s, w, dw_ds })
    }

    pub fn zero(grid: Arc<RadialGrid>, params: ModelParams, s: f64) -> Self {
        let n = grid.len();
        Self { grid, params, s, w: vec![0.0; n], dw_ds: vec![0.0; n] }
    }

    /// Field given as functions of `t = |y|²`.
    pub fn from_fn<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
        grid: Arc<RadialGrid>,
        params: ModelParams,
        s: f64,
        w: F,
        dw_ds: G,
    ) -> Self {
        let wv = grid.t().iter().map(|&t| w(t)).collect();
        let dv = grid.t().iter().map(|&t| dw_ds(t)).collect();
        Self { grid, params, s, w: wv, dw_ds: dv }
    }

    pub fn alpha(&self) -> f64 {
        alpha(self.s, &self.params)
    }

    pub fn sup_norm(&self) -> f64 {
        self.w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.dw_ds).all(|v| v.is_finite())
    }

    /// Squared norm of the energy space:
    /// `∫ ((∂_s w)² + |∇w|²(1-|y|²) + w²) ρ dy`.
    pub fn h_norm_sq(&self) -> Result<IntegralEstimate, QuadError> {
        let g = &self.grid;
        let wt = g.derivative(&self.w);
        let integrand = |t: f64| {
            let w = g.interpolate(&self.w, t);
            let v = g.interpolate(&self.dw_ds, t);
            let d = g.interpolate(&wt, t);
            v * v + 4.0 * t * d * d * (1.0 - t) + w * w
        };
        integrate_radial(integrand, Weight::Rho, self.alpha(), g.dimension(), g.len() + 8, 1e-8)
    }
}

/// Radial and tangential parts of `∇w` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSplit {
    /// `∂_r w`; `∇_r w = ∂_r w · y/|y|`.
    pub radial: Vec<f64>,
    /// `|∇_θ w|²`; identically zero for radial fields.
    pub tangential_sq: Vec<f64>,
}

/// `∇w = ∇_r w + ∇_θ w` for a radial field on `grid`.
pub fn gradient_split(values: &[f64], grid: &RadialGrid) -> Result<GradientSplit, QuadError> {
    grid.check_len(values)?;
    let wt = grid.derivative(values);
    let radial: Vec<f64> = wt.iter().zip(grid.r()).map(|(d, r)| 2.0 * r * d).collect();
    Ok(GradientSplit { tangential_sq: vec![0.0; radial.len()], radial })
}

/// `(1/ρ) div(ρ∇w - ρ(y·∇w)y)` for radial `w` and `ρ = (1-|y|²)^e`, written in
/// `t = r²`: `4t(1-t) w_tt + (2n(1-t) - 4t(1+e)) w_t`.
pub fn elliptic_operator(values: &[f64], weight_exponent: f64, grid: &RadialGrid) -> Result<Vec<f64>, QuadError> {
    grid.check_len(values)?;
    let w1 = matvec(grid.d1(), values);
    let w2 = matvec(grid.d2(), values);
    let n = grid.dimension() as f64;
    Ok(grid
        .t()
        .iter()
        .enumerate()
        .map(|(k, &t)| 4.0 * t * (1.0 - t) * w2[k] + (2.0 * n * (1.0 - t) - 4.0 * t * (1.0 + weight_exponent)) * w1[k])
        .collect())
}
