//! Integration-by-parts identities for the Pohozaev multiplier `y·∇w` and the
//! multiplier `w/√(1-|y|²)`, plus the randomized field corpus they and the
//! Hardy inequality are checked on.
//!
//! Both sides are evaluated by quadrature on closed-form fields. The left side
//! uses the divergence of `V = ρ_η ∇w - ρ_η (y·∇w) y` expanded by the product
//! rule only, so it shares no algebra with the right side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::QuadError;
use crate::par;
use crate::quad::{ball_points, hardy_check_field, HardyReport, TestField};

pub const IDENTITY_TOL: f64 = 1e-8;
pub const HARDY_TOL: f64 = 1e-8;
const BASE_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Individual right-hand terms in display order.
    pub terms: Vec<f64>,
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)`
    pub residual: f64,
    pub converged: bool,
    pub passed: bool,
}

impl IdentityReport {
    fn new(lhs: f64, terms: Vec<f64>, converged: bool) -> Self {
        let rhs: f64 = terms.iter().sum();
        let residual = (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0);
        Self { lhs, rhs, terms, residual, converged, passed: converged && residual <= IDENTITY_TOL }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `div V / ρ_η` at `y`, with `V = ρ_η (∇w - (y·∇w) y)`.
fn div_v_over_rho(field: &TestField, eta: f64, y: &[f64]) -> f64 {
    let n = y.len();
    let t = dot(y, y);
    let gw = field.gradient(y);
    let h = field.hessian(y);
    let g = dot(y, &gw);
    let lap: f64 = (0..n).map(|i| h[i][i]).sum();
    // ∇g = ∇w + H y
    let grad_g: Vec<f64> = (0..n).map(|i| gw[i] + dot(&h[i], y)).collect();
    let div_gy = n as f64 * g + dot(y, &grad_g);
    let field_part: Vec<f64> = (0..n).map(|i| gw[i] - g * y[i]).collect();
    // ∇ρ_η / ρ_η = -2η y / (1 - |y|²)
    let drho = -2.0 * eta / (1.0 - t) * dot(y, &field_part);
    drho + lap - div_gy
}

/// Integrates `f(y) (1-|y|²)^exponent` over the ball at orders `m` and `2m`;
/// returns the finer value and whether the two agree.
fn integrate(field: &TestField, exponent: f64, f: &dyn Fn(&[f64]) -> f64) -> Result<(f64, bool), QuadError> {
    let angular = field.m > 0;
    let m_theta = 8 * (field.m as usize + 2);
    let mut vals = [0.0; 2];
    for (k, order) in [BASE_ORDER, 2 * BASE_ORDER].into_iter().enumerate() {
        let pts = ball_points(field.n, angular, exponent, order, m_theta)?;
        vals[k] = pts.iter().map(|p| p.weight * f(&p.y)).sum();
    }
    let ok = (vals[1] - vals[0]).abs() <= 1e-11 * (vals[1].abs() + 1.0);
    Ok((vals[1], ok))
}

fn tangential_sq(field: &TestField, y: &[f64]) -> Result<f64, QuadError> {
    let (_, gt) = field.gradient_split(y)?;
    Ok(dot(&gt, &gt))
}

fn radial_sq(field: &TestField, y: &[f64]) -> Result<f64, QuadError> {
    let (gr, _) = field.gradient_split(y)?;
    Ok(dot(&gr, &gr))
}

/// Quadrature nodes never sit at the origin, so the split cannot fail there;
/// any other failure is reported through the flag.
fn split_or_nan(v: Result<f64, QuadError>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// `∫ (y·∇w) div V dy` against
/// `-η∫|∇_θw|² |y|²ρ_η/(1-|y|²) - η∫(y·∇w)²ρ_η + (n/2)∫(|∇w|² - (y·∇w)²)ρ_η - ∫|∇w|²ρ_η`.
pub fn check_identity_pohozaev(field: &TestField, eta: f64) -> Result<IdentityReport, QuadError> {
    if !(eta > 0.0) {
        return Err(QuadError::BadExponent { left: 0.0, right: eta });
    }
    let n = field.n as f64;
    let g = |y: &[f64]| dot(y, &field.gradient(y));
    let grad2 = |y: &[f64]| {
        let gw = field.gradient(y);
        dot(&gw, &gw)
    };
    let (lhs, c0) = integrate(field, eta, &|y| g(y) * div_v_over_rho(field, eta, y))?;
    let (tang, c1) = integrate(field, eta - 1.0, &|y| split_or_nan(tangential_sq(field, y)) * dot(y, y))?;
    let (g2, c2) = integrate(field, eta, &|y| g(y).powi(2))?;
    let (mixed, c3) = integrate(field, eta, &|y| grad2(y) - g(y).powi(2))?;
    let (full, c4) = integrate(field, eta, &grad2)?;
    let terms = vec![-eta * tang, -eta * g2, 0.5 * n * mixed, -full];
    let finite = lhs.is_finite() && terms.iter().all(|v| v.is_finite());
    Ok(IdentityReport::new(lhs, terms, finite && c0 && c1 && c2 && c3 && c4))
}

/// `-∫ div V · w/√(1-|y|²) dy` against
/// `∫|∇_θw|² ρ_η/√(1-|y|²) + ∫|∇_r w|² ρ_{η+½} + ∫ w (y·∇w) ρ_η/√(1-|y|²)`.
pub fn check_identity_multiplier(field: &TestField, eta: f64) -> Result<IdentityReport, QuadError> {
    if !(eta > 0.0) {
        return Err(QuadError::BadExponent { left: 0.0, right: eta });
    }
    let g = |y: &[f64]| dot(y, &field.gradient(y));
    let (lhs, c0) = integrate(field, eta - 0.5, &|y| -div_v_over_rho(field, eta, y) * field.value(y))?;
    let (tang, c1) = integrate(field, eta - 0.5, &|y| split_or_nan(tangential_sq(field, y)))?;
    let (rad, c2) = integrate(field, eta + 0.5, &|y| split_or_nan(radial_sq(field, y)))?;
    let (cross, c3) = integrate(field, eta - 0.5, &|y| field.value(y) * g(y))?;
    let terms = vec![tang, rad, cross];
    let finite = lhs.is_finite() && terms.iter().all(|v| v.is_finite());
    Ok(IdentityReport::new(lhs, terms, finite && c0 && c1 && c2 && c3))
}

/// Seeded random fields `P(|y|²) Re((y₁+iy₂)^m)`: dimension and mode cycle
/// through `(2,0), (2,1), (2,2), (3,0)`, `deg P <= 3`, coefficients in `[-1, 1]`.
pub fn random_fields(seed: u64, count: usize) -> Vec<TestField> {
    const SHAPES: [(usize, u32); 4] = [(2, 0), (2, 1), (2, 2), (3, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (n, m) = SHAPES[k % SHAPES.len()];
            let degree = rng.random_range(0..=3usize);
            let coeffs = (0..=degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
            TestField { n, m, coeffs }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub field: TestField,
    pub eta: f64,
    pub pohozaev: IdentityReport,
    pub multiplier: IdentityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub seed: u64,
    pub cases: Vec<IdentityCase>,
    pub max_residual: f64,
    pub passed: bool,
}

/// Both identities on every field of the corpus at every `eta`.
pub fn identity_suite(seed: u64, count: usize, etas: &[f64]) -> Result<IdentitySuiteReport, QuadError> {
    let jobs: Vec<(TestField, f64)> = random_fields(seed, count)
        .into_iter()
        .flat_map(|f| etas.iter().map(move |&e| (f.clone(), e)))
        .collect();
    let cases = par::map(&jobs, |(field, eta)| -> Result<IdentityCase, QuadError> {
        Ok(IdentityCase {
            field: field.clone(),
            eta: *eta,
            pohozaev: check_identity_pohozaev(field, *eta)?,
            multiplier: check_identity_multiplier(field, *eta)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let max_residual = cases.iter().map(|c| c.pohozaev.residual.max(c.multiplier.residual)).fold(0.0, f64::max);
    let passed = cases.iter().all(|c| c.pohozaev.passed && c.multiplier.passed);
    Ok(IdentitySuiteReport { seed, cases, max_residual, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyCase {
    pub field: TestField,
    pub eta: f64,
    pub report: HardyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardySuiteReport {
    pub seed: u64,
    pub cases: Vec<HardyCase>,
    pub min_slack: f64,
    pub min_corollary_slack: f64,
    pub passed: bool,
}

/// Hardy inequality and its corollary over the random corpus.
pub fn hardy_suite(seed: u64, count: usize, etas: &[f64]) -> Result<HardySuiteReport, QuadError> {
    let jobs: Vec<(TestField, f64)> = random_fields(seed, count)
        .into_iter()
        .flat_map(|f| etas.iter().map(move |&e| (f.clone(), e)))
        .collect();
    let cases = par::map(&jobs, |(field, eta)| -> Result<HardyCase, QuadError> {
        Ok(HardyCase { field: field.clone(), eta: *eta, report: hardy_check_field(field, *eta, 16)? })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let min_slack = cases.iter().map(|c| c.report.slack).fold(f64::INFINITY, f64::min);
    let min_corollary_slack = cases.iter().map(|c| c.report.corollary_slack).fold(f64::INFINITY, f64::min);
    let passed = cases.iter().all(|c| c.report.converged) && min_slack >= -HARDY_TOL && min_corollary_slack >= -HARDY_TOL;
    Ok(HardySuiteReport { seed, cases, min_slack, min_corollary_slack, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_is_trivial() {
        let f = TestField::radial(3, vec![2.5]);
        let p = check_identity_pohozaev(&f, 0.5).unwrap();
        let m = check_identity_multiplier(&f, 0.5).unwrap();
        assert!(p.lhs.abs() < 1e-14 && p.rhs.abs() < 1e-14 && p.passed);
        assert!(m.lhs.abs() < 1e-14 && m.rhs.abs() < 1e-14 && m.passed);
    }

    #[test]
    fn spec_examples() {
        let radial = TestField::radial(3, vec![1.0, -1.0]);
        let r = check_identity_pohozaev(&radial, 0.5).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.terms[0], 0.0);
        let rc = TestField::new(2, 1, vec![1.0]).unwrap();
        let r = check_identity_pohozaev(&rc, 0.5).unwrap();
        assert!(r.passed && r.terms[0].abs() > 1e-3, "{r:?}");
        let sq = TestField::radial(3, vec![1.0, -2.0, 1.0]);
        assert!(check_identity_multiplier(&sq, 0.5).unwrap().passed);
        let c2 = TestField::new(2, 2, vec![1.0]).unwrap();
        let r = check_identity_multiplier(&c2, 0.5).unwrap();
        assert!(r.passed && r.terms[0].abs() > 1e-3, "{r:?}");
    }

    #[test]
    fn r_cos_theta_closed_form() {
        // w = y₁ in 2D, η = 1: |∇_θ w|² = y₂²/|y|², so the tangential term
        // is -∫ y₂² dy = -π/4.
        let f = TestField::new(2, 1, vec![1.0]).unwrap();
        let r = check_identity_pohozaev(&f, 1.0).unwrap();
        assert!((r.terms[0] + PI / 4.0).abs() < 1e-12, "{:?}", r.terms);
    }

    #[test]
    fn broken_identity_is_detected() {
        // Dropping one term must break the balance for a generic field.
        let f = TestField::new(2, 1, vec![0.3, -0.7, 0.2]).unwrap();
        let r = check_identity_pohozaev(&f, 0.5).unwrap();
        let without = r.rhs - r.terms[0];
        assert!((r.lhs - without).abs() / (r.lhs.abs() + without.abs() + 1.0) > 1e-4);
    }

    #[test]
    fn corpus_is_seeded() {
        assert_eq!(random_fields(7, 10), random_fields(7, 10));
        assert_ne!(random_fields(7, 10), random_fields(8, 10));
        assert!(random_fields(1, 8).iter().any(|f| f.m == 2));
    }
}
