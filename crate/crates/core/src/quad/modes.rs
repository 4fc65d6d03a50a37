//! Closed-form test fields `w(y) = P(|y|²) Re((y₁ + i y₂)^m)` with exact
//! gradients and Hessians, and point sets for integrating them over the ball.
//! Mode `m > 0` is only used in two dimensions; it is what exercises the
//! tangential gradient.

use serde::{Deserialize, Serialize};

use super::{BallRule, JacobiRule};
use crate::error::QuadError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub n: usize,
    pub m: u32,
    /// `P(t) = Σ c_k t^k`
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    pub y: Vec<f64>,
    pub weight: f64,
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cpow(z: (f64, f64), k: u32) -> (f64, f64) {
    (0..k).fold((1.0, 0.0), |acc, _| cmul(acc, z))
}

impl TestField {
    pub fn new(n: usize, m: u32, coeffs: Vec<f64>) -> Result<Self, QuadError> {
        if m > 0 && n != 2 {
            return Err(QuadError::BadExponent { left: n as f64, right: m as f64 });
        }
        Ok(Self { n, m, coeffs })
    }

    pub fn radial(n: usize, coeffs: Vec<f64>) -> Self {
        Self { n, m: 0, coeffs }
    }

    fn poly(&self, t: f64) -> (f64, f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * t + 2.0 * dp;
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp, ddp)
    }

    /// `(h, ∇h, ∇²h)` for the harmonic factor, embedded in `n` dimensions.
    fn harmonic(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        let mut g = vec![0.0; n];
        let mut hh = vec![vec![0.0; n]; n];
        if self.m == 0 {
            return (1.0, g, hh);
        }
        let m = self.m as f64;
        let z = (y[0], y[1]);
        let h = cpow(z, self.m).0;
        let z1 = cpow(z, self.m - 1);
        g[0] = m * z1.0;
        g[1] = -m * z1.1;
        if self.m >= 2 {
            let z2 = cpow(z, self.m - 2);
            let c = m * (m - 1.0);
            hh[0][0] = c * z2.0;
            hh[0][1] = -c * z2.1;
            hh[1][0] = hh[0][1];
            hh[1][1] = -hh[0][0];
        }
        (h, g, hh)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let t: f64 = y.iter().map(|v| v * v).sum();
        self.poly(t).0 * self.harmonic(y).0
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let t: f64 = y.iter().map(|v| v * v).sum();
        let (p, dp, _) = self.poly(t);
        let (h, gh, _) = self.harmonic(y);
        (0..self.n).map(|i| 2.0 * dp * h * y[i] + p * gh[i]).collect()
    }

    pub fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let t: f64 = y.iter().map(|v| v * v).sum();
        let (p, dp, ddp) = self.poly(t);
        let (h, gh, hh) = self.harmonic(y);
        let n = self.n;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i][j] = 2.0 * dp * h * delta
                    + 4.0 * ddp * h * y[i] * y[j]
                    + 2.0 * dp * (y[i] * gh[j] + y[j] * gh[i])
                    + p * hh[i][j];
            }
        }
        out
    }

    /// `(∇_r w, ∇_θ w)` with `∇_r w = (y·∇w / |y|²) y`.
    pub fn gradient_split(&self, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
        let g = self.gradient(y);
        let t: f64 = y.iter().map(|v| v * v).sum();
        if t == 0.0 {
            if g.iter().any(|v| v.abs() > 0.0) {
                return Err(QuadError::OriginSingularity);
            }
            return Ok((vec![0.0; self.n], vec![0.0; self.n]));
        }
        let q: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
        let gr: Vec<f64> = y.iter().map(|v| q / t * v).collect();
        let gt = g.iter().zip(&gr).map(|(a, b)| a - b).collect();
        Ok((gr, gt))
    }
}

/// Quadrature points for `∫_B g(y) (1-|y|²)^e dy`. With `angular = false` the
/// integrand must be rotation invariant and points lie on the first axis;
/// with `angular = true` (n = 2 only) a tensor rule in `(|y|², θ)` is used.
pub fn ball_points(n: usize, angular: bool, exponent: f64, m_t: usize, m_theta: usize) -> Result<Vec<BallPoint>, QuadError> {
    if !angular {
        let rule = BallRule::new(n, m_t, exponent)?;
        return Ok(rule
            .t
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let mut y = vec![0.0; n];
                y[0] = t.sqrt();
                BallPoint { y, weight: w }
            })
            .collect());
    }
    if n != 2 {
        return Err(QuadError::BadExponent { left: n as f64, right: exponent });
    }
    let rule = JacobiRule::new(m_t, 0.0, exponent)?;
    let dth = 2.0 * std::f64::consts::PI / m_theta as f64;
    let mut out = Vec::with_capacity(m_t * m_theta);
    for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
        let r = t.sqrt();
        for k in 0..m_theta {
            let th = dth * (k as f64 + 0.5);
            out.push(BallPoint { y: vec![r * th.cos(), r * th.sin()], weight: 0.5 * wt * dth });
        }
    }
    Ok(out)
}
