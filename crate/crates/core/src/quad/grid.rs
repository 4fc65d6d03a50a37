//! Collocation grid in `t = r²` on the open interval `(0, 1)`.
//!
//! A field is the degree `N-1` polynomial in `t` through its values at the
//! nodes. Polynomials in `r²` are automatically even in `r`, so regularity
//! at the origin needs no extra condition. Nodes are Gauss–Jacobi points for
//! `t^{(n-2)/2}(1-t)^e`, which cluster towards `|y| = 1`; the largest node
//! stays strictly inside the ball.

use super::JacobiRule;
use crate::error::QuadError;

pub const DEFAULT_NODE_EXPONENT: f64 = 0.5;
const DEFAULT_EXTRAPOLATION_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    node_exponent: f64,
    extrapolation_order: usize,
    t: Vec<f64>,
    r: Vec<f64>,
    bary: Vec<f64>,
    /// `d/dt` on nodal values, row-major.
    d1: Vec<f64>,
    /// `d²/dt²`, row-major.
    d2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTrace {
    pub value: f64,
    /// Trace from an extrapolant one order lower.
    pub lower_order: f64,
    pub flagged: bool,
}

impl RadialGrid {
    pub fn new(n: usize, size: usize) -> Result<Self, QuadError> {
        Self::with_exponent(n, size, DEFAULT_NODE_EXPONENT, DEFAULT_EXTRAPOLATION_ORDER)
    }

    pub fn with_exponent(
        n: usize,
        size: usize,
        node_exponent: f64,
        extrapolation_order: usize,
    ) -> Result<Self, QuadError> {
        let rule = JacobiRule::new(size, (n as f64 - 2.0) / 2.0, node_exponent)?;
        let t = rule.nodes().to_vec();
        let r = t.iter().map(|x| x.sqrt()).collect();
        let bary = barycentric_weights(&t);
        let d1 = differentiation_matrix(&t, &bary);
        let d2 = matmul(&d1, &d1, size);
        Ok(Self {
            n,
            node_exponent,
            extrapolation_order: extrapolation_order.clamp(1, size.saturating_sub(1).max(1)),
            t,
            r,
            bary,
            d1,
            d2,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn node_exponent(&self) -> f64 {
        self.node_exponent
    }

    pub fn extrapolation_order(&self) -> usize {
        self.extrapolation_order
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn check_len(&self, values: &[f64]) -> Result<(), QuadError> {
        if values.len() != self.len() {
            return Err(QuadError::LengthMismatch { expected: self.len(), got: values.len() });
        }
        Ok(())
    }

    /// Values of the interpolant at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&tj, &lj), &vj) in self.t.iter().zip(&self.bary).zip(values) {
            let d = x - tj;
            if d == 0.0 {
                return vj;
            }
            let c = lj / d;
            num += c * vj;
            den += c;
        }
        num / den
    }

    /// Row-major `points.len() × N` matrix mapping nodal values to values at `points`.
    pub fn interpolation_matrix(&self, points: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; points.len() * n];
        for (k, &x) in points.iter().enumerate() {
            let row = &mut out[k * n..(k + 1) * n];
            if let Some(j) = self.t.iter().position(|&tj| tj == x) {
                row[j] = 1.0;
                continue;
            }
            let mut den = 0.0;
            for j in 0..n {
                let c = self.bary[j] / (x - self.t[j]);
                row[j] = c;
                den += c;
            }
            for v in row.iter_mut() {
                *v /= den;
            }
        }
        out
    }

    /// `d/dt` of a nodal field.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        matvec(&self.d1, values)
    }

    pub fn second_derivative(&self, values: &[f64]) -> Vec<f64> {
        matvec(&self.d2, values)
    }

    /// Value at `t = 1` by local extrapolation from the outermost nodes, with
    /// a cross-check one order lower.
    pub fn boundary_trace(&self, values: &[f64]) -> BoundaryTrace {
        let q = self.extrapolation_order;
        let hi = extrapolate_to_one(&self.t, values, q + 1);
        let lo = extrapolate_to_one(&self.t, values, q);
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = (hi - lo).abs();
        let flagged = diff > 0.05 * hi.abs().max(1e-8 * scale) && diff > 1e-12 * scale.max(1e-300);
        BoundaryTrace { value: hi, lower_order: lo, flagged }
    }
}

fn extrapolate_to_one(t: &[f64], v: &[f64], points: usize) -> f64 {
    let k = points.min(t.len());
    let start = t.len() - k;
    let xs = &t[start..];
    let ys = &v[start..];
    let mut acc = 0.0;
    for i in 0..k {
        let mut l = 1.0;
        for j in 0..k {
            if i != j {
                l *= (1.0 - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += l * ys[i];
    }
    acc
}

fn barycentric_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    // log-magnitudes avoid underflow for large N
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let d = t[j] - t[k];
                logs[j] -= d.abs().ln();
                if d < 0.0 {
                    signs[j] = -signs[j];
                }
            }
        }
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().zip(&signs).map(|(l, s)| s * (l - max).exp()).collect()
}

fn differentiation_matrix(t: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bary[j] / bary[i] / (t[i] - t[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub(crate) fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let rows = a.len() / n;
    (0..rows).map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn open_grid_inside_unit_interval() {
        let g = RadialGrid::new(3, 24).unwrap();
        assert!(g.t()[0] > 0.0);
        assert!(*g.t().last().unwrap() < 1.0);
        assert!(g.r().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn differentiation_exact_on_polynomials() {
        let g = RadialGrid::new(3, 10).unwrap();
        let f: Vec<f64> = g.t().iter().map(|t| t.powi(9) - 3.0 * t.powi(4) + 1.0).collect();
        let d = g.derivative(&f);
        let d2 = g.second_derivative(&f);
        for (k, &t) in g.t().iter().enumerate() {
            assert_relative_eq!(d[k], 9.0 * t.powi(8) - 12.0 * t.powi(3), epsilon = 1e-9);
            assert_relative_eq!(d2[k], 72.0 * t.powi(7) - 36.0 * t * t, epsilon = 1e-7);
        }
    }

    #[test]
    fn interpolation_and_trace() {
        let g = RadialGrid::new(2, 16).unwrap();
        let f: Vec<f64> = g.t().iter().map(|t| (2.0 * t).cos()).collect();
        assert_relative_eq!(g.interpolate(&f, 0.37), (0.74f64).cos(), epsilon = 1e-12);
        let m = g.interpolation_matrix(&[0.0, 0.5, 1.0]);
        let vals = matvec(&m, &f);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 2f64.cos(), epsilon = 1e-11);
        let tr = g.boundary_trace(&f);
        // local fourth-order extrapolation, not spectral
        assert_relative_eq!(tr.value, 2f64.cos(), epsilon = 1e-6);
        assert!(!tr.flagged);
    }
}
