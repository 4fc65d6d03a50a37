//! Quadrature on the unit ball and the radial discretization.
//!
//! Radial integrals are written in `t = |y|²`, where the ball measure is
//! `dy = (|S^{n-1}|/2) t^{(n-2)/2} dt` and every weight of the form
//! `(1 - |y|²)^e` becomes a Jacobi weight `(1 - t)^e`. A Gauss–Jacobi rule
//! built for the exact exponent therefore integrates smooth integrands
//! against the singular weights `ρ/(1-|y|²)` and `ρ_η/√(1-|y|²)` with
//! spectral accuracy.

mod field;
mod grid;
mod hardy;
mod jacobi;
mod modes;

pub use field::{elliptic_operator, gradient_split, FieldState, GradientSplit};
pub use grid::{BoundaryTrace, RadialGrid, DEFAULT_NODE_EXPONENT};
pub(crate) use grid::matvec;
pub use hardy::{hardy_check, hardy_check_field, HardyReport};
pub use jacobi::JacobiRule;
pub use modes::{ball_points, BallPoint, TestField};

use statrs::function::gamma::gamma;

use crate::error::QuadError;

/// `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Radial weight families; the Jacobi exponent at `t = 1` is [`Weight::exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    One,
    /// `ρ = (1-|y|²)^{α(s)}`
    Rho,
    /// `ρ_η = (1-|y|²)^η`
    RhoEta(f64),
    /// `ρ/(1-|y|²)`
    RhoOver1my2,
    /// `ρ_η/√(1-|y|²)`
    RhoEtaOverSqrt(f64),
    /// `ρ_η/(1-|y|²)`
    RhoEtaOver1my2(f64),
}

impl Weight {
    pub fn exponent(&self, alpha: f64) -> f64 {
        match *self {
            Weight::One => 0.0,
            Weight::Rho => alpha,
            Weight::RhoEta(e) => e,
            Weight::RhoOver1my2 => alpha - 1.0,
            Weight::RhoEtaOverSqrt(e) => e - 0.5,
            Weight::RhoEtaOver1my2(e) => e - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    /// `|Q_{2m} - Q_m|`
    pub error: f64,
    pub converged: bool,
    /// The weight is not integrable at `|y| = 1`.
    pub divergent: bool,
}

impl IntegralEstimate {
    fn divergent() -> Self {
        Self { value: f64::INFINITY, error: f64::INFINITY, converged: false, divergent: true }
    }

    pub fn ok(&self) -> bool {
        self.converged && !self.divergent
    }
}

/// Nodes and weights for `∫_B g(|y|²) (1-|y|²)^e dy`, radial integrands only.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub exponent: f64,
}

impl BallRule {
    pub fn new(n: usize, m: usize, exponent: f64) -> Result<Self, QuadError> {
        let rule = JacobiRule::new(m, (n as f64 - 2.0) / 2.0, exponent)?;
        let c = sphere_area(n) / 2.0;
        Ok(Self {
            t: rule.nodes().to_vec(),
            weights: rule.weights().iter().map(|w| w * c).collect(),
            exponent,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.t.iter().zip(&self.weights).map(|(&t, &w)| w * g(t)).sum()
    }

    /// Weighted sum of precomputed samples at this rule's nodes.
    pub fn sum(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.weights).map(|(g, w)| g * w).sum()
    }
}

/// `∫_B g(|y|²) W(y) dy` for a radial integrand given as a function of `t`,
/// with an error estimate from rules of order `m` and `2m`.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    g: F,
    weight: Weight,
    alpha: f64,
    n: usize,
    m: usize,
    rel_tol: f64,
) -> Result<IntegralEstimate, QuadError> {
    let e = weight.exponent(alpha);
    if e <= -1.0 {
        return Ok(IntegralEstimate::divergent());
    }
    let lo = BallRule::new(n, m, e)?.integrate(&g);
    let hi = BallRule::new(n, 2 * m, e)?.integrate(&g);
    let error = (hi - lo).abs();
    Ok(IntegralEstimate { value: hi, error, converged: error <= rel_tol * hi.abs().max(1e-300) || error < 1e-300, divergent: false })
}

/// `∫_B field W dy` for a field given by its values on `grid`.
pub fn integrate_ball(
    values: &[f64],
    weight: Weight,
    alpha: f64,
    grid: &RadialGrid,
    rel_tol: f64,
) -> Result<IntegralEstimate, QuadError> {
    grid.check_len(values)?;
    let m = grid.len() + 8;
    integrate_radial(|t| grid.interpolate(values, t), weight, alpha, grid.dimension(), m, rel_tol)
}
