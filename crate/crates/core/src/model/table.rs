//! Tabulated antiderivative `f(u) = ∫_0^u |v|^{p-1} v ln^a(v² + 2) dv`.
//!
//! The table stores the normalized ratio
//! `R(u) = (p+1) f(u) / (|u|^{p+1} ln^a(u² + 2))`, which tends to 1 at both
//! ends and is smooth in between, as one Chebyshev interpolant per dyadic
//! panel `[2^k, 2^{k+1}]`. Node values come from composite Gauss–Legendre
//! accumulation of the defining integral. Beyond `u_switch` the integral is
//! continued exactly: with `y = (p+1) ln v` and `ln(v²+2) = 2 ln v` (to
//! rounding) the integrand becomes `K e^y y^a`, whose antiderivative is
//! `e^y y^a S(y)` with the optimally truncated series
//! `S(y) = Σ_k (-1)^k a(a-1)…(a-k+1) / y^k`. Because the tail only needs
//! `ln u`, the ratio stays available far past the point where `f` itself
//! overflows.

use super::{log_arg, log_arg_from_ln, ModelParams};
use crate::error::ModelError;
use crate::quad::JacobiRule;

const DEGREE: usize = 24;
const K_MIN: i32 = -30;
const K_MAX: i32 = 26; // u_switch = 2^26
const PANEL_GAUSS_POINTS: usize = 30;

#[derive(Debug, Clone)]
pub struct NonlinearityTable {
    params: ModelParams,
    /// Chebyshev coefficients of `R` on each panel, `K_MIN..K_MAX`.
    panels: Vec<[f64; DEGREE + 1]>,
    /// `f(u_switch) - K G(y_switch)`; the constant in `f = c + K G(y)` past the seam.
    tail_constant: f64,
}

impl NonlinearityTable {
    pub fn new(params: ModelParams) -> Self {
        let p = params.p();
        let a = params.a();
        let integrand = |v: f64| v.powf(p) * log_arg(v).powf(a);
        let gl = JacobiRule::legendre(PANEL_GAUSS_POINTS);
        let cheb_x: Vec<f64> = (0..=DEGREE)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / (DEGREE as f64 + 1.0)).cos())
            .collect();

        let u_min = 2f64.powi(K_MIN);
        let mut f_left = small_u_antiderivative(u_min, &params);
        let mut panels = Vec::with_capacity((K_MAX - K_MIN) as usize);
        for k in K_MIN..K_MAX {
            let lo = 2f64.powi(k);
            let mut vals = [0.0; DEGREE + 1];
            for (j, &x) in cheb_x.iter().enumerate() {
                let u = lo * (1.5 + 0.5 * x);
                let fu = f_left + gl.integrate_on(lo, u, integrand);
                vals[j] = (p + 1.0) * fu / (u.powf(p + 1.0) * log_arg(u).powf(a));
            }
            panels.push(chebyshev_coefficients(&vals));
            f_left += gl.integrate_on(lo, 2.0 * lo, integrand);
        }
        let ln_us = K_MAX as f64 * std::f64::consts::LN_2;
        let tail_constant = f_left - tail_k(&params) * tail_g(ln_us, &params);
        Self { params, panels, tail_constant }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Magnitude past which the exact log-variable continuation is used.
    pub fn u_switch(&self) -> f64 {
        2f64.powi(K_MAX)
    }

    /// `R(u)` for finite `u`.
    pub fn ratio(&self, u: f64) -> f64 {
        let au = u.abs();
        if au == 0.0 {
            return 1.0;
        }
        self.ratio_ln(au.ln())
    }

    /// `R` as a function of `ln|u|`.
    pub fn ratio_ln(&self, ln_u: f64) -> f64 {
        1.0 + self.ratio_minus_one_ln(ln_u)
    }

    /// `R - 1`, evaluated without cancellation in the tail.
    pub fn ratio_minus_one_ln(&self, ln_u: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        if ln_u < K_MIN as f64 * ln2 {
            let u2 = (2.0 * ln_u).exp();
            return -self.params.a() * u2 / (ln2 * (self.params.p() + 3.0));
        }
        if ln_u < K_MAX as f64 * ln2 {
            let u = ln_u.exp();
            let k = (u.log2().floor() as i32).clamp(K_MIN, K_MAX - 1);
            let lo = 2f64.powi(k);
            let x = (2.0 * u / lo - 3.0).clamp(-1.0, 1.0);
            return clenshaw(&self.panels[(k - K_MIN) as usize], x) - 1.0;
        }
        let p = self.params.p();
        let a = self.params.a();
        let big_l = log_arg_from_ln(ln_u);
        let y = (p + 1.0) * ln_u;
        let s_minus_one = series_s(y, a) - 1.0;
        // ((2 ln u)/L)^a - 1, with L = 2 ln u + ln(1 + 2/u²)
        let q_minus_one = (a * (2.0 * ln_u / big_l).ln()).exp_m1();
        let constant_part = if self.tail_constant == 0.0 {
            0.0
        } else {
            let mag = ((p + 1.0) * self.tail_constant.abs()).ln() - (p + 1.0) * ln_u - a * big_l.ln();
            mag.exp().copysign(self.tail_constant)
        };
        s_minus_one + q_minus_one + s_minus_one * q_minus_one + constant_part
    }

    /// `|u|^{p+1} ln^a(u²+2)/(p+1)`: the leading part of `f`.
    pub fn leading(&self, u: f64) -> Result<f64, ModelError> {
        if u == 0.0 {
            return Ok(0.0);
        }
        let p1 = self.params.p() + 1.0;
        let v = (p1 * u.abs().ln() + self.params.a() * log_arg(u).ln()).exp() / p1;
        if !v.is_finite() {
            return Err(ModelError::Saturated { what: "leading term of f", arg: u });
        }
        Ok(v)
    }

    /// The antiderivative `f(u)`.
    pub fn f(&self, u: f64) -> Result<f64, ModelError> {
        if u == 0.0 {
            return Ok(0.0);
        }
        let v = self.leading(u).map_err(|_| ModelError::Saturated { what: "f", arg: u })? * self.ratio(u);
        Ok(v)
    }

    /// `ln f` as a function of `ln|u|`; finite far beyond the overflow of `f`.
    pub fn ln_f_ln(&self, ln_u: f64) -> f64 {
        let p1 = self.params.p() + 1.0;
        p1 * ln_u + self.params.a() * log_arg_from_ln(ln_u).ln() + self.ratio_ln(ln_u).ln() - p1.ln()
    }

    /// `f2 = f - |u|^{p+1} ln^a(u²+2)/(p+1) - f1`.
    pub fn f2(&self, u: f64) -> Result<f64, ModelError> {
        if u == 0.0 {
            return Ok(0.0);
        }
        let lead = self.leading(u).map_err(|_| ModelError::Saturated { what: "f2", arg: u })?;
        Ok(lead * self.f2_factor_ln(u.abs().ln()))
    }

    /// `f2 / leading = R - 1 + 2a/((p+1) ln(u²+2))`.
    pub fn f2_factor_ln(&self, ln_u: f64) -> f64 {
        let p1 = self.params.p() + 1.0;
        self.ratio_minus_one_ln(ln_u) + 2.0 * self.params.a() / (p1 * log_arg_from_ln(ln_u))
    }

    /// `s^{-a} |w|^{p-1} w ln^a(φ² w² + 2)`: the nonlinear term of the
    /// similarity equation, given `ln φ`.
    pub fn scaled_force(&self, w: f64, s: f64, ln_phi: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let p = self.params.p();
        let a = self.params.a();
        let aw = w.abs();
        let big_l = log_arg_from_ln(ln_phi + aw.ln());
        (aw.powf(p) * (big_l / s).powf(a)).copysign(w)
    }

    /// `s^{-a} |w|^{p+1} ln^a(φ² w² + 2)`.
    pub fn scaled_log_power(&self, w: f64, s: f64, ln_phi: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let aw = w.abs();
        let big_l = log_arg_from_ln(ln_phi + aw.ln());
        aw.powf(self.params.p() + 1.0) * (big_l / s).powf(self.params.a())
    }

    /// `e^{-2(p+1)s/(p-1)} s^{2a/(p-1)} f(φ w)`, the nonlinear potential in
    /// the energies. Algebraically equal to
    /// `s^{-a} |w|^{p+1} ln^a(φ²w²+2) R(φ w)/(p+1)`, which is how it is computed.
    pub fn scaled_potential(&self, w: f64, s: f64, ln_phi: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let ln_u = ln_phi + w.abs().ln();
        self.scaled_log_power(w, s, ln_phi) * self.ratio_ln(ln_u) / (self.params.p() + 1.0)
    }
}

/// `f(u)` for tiny `u`: `u^{p+1}(ln 2)^a/(p+1) · (1 + a(p+1)u²/(2 ln2 (p+3)))`.
fn small_u_antiderivative(u: f64, params: &ModelParams) -> f64 {
    let p = params.p();
    let a = params.a();
    let ln2 = std::f64::consts::LN_2;
    u.powf(p + 1.0) * ln2.powf(a) / (p + 1.0) * (1.0 + a * (p + 1.0) * u * u / (2.0 * ln2 * (p + 3.0)))
}

/// `K = 2^a (p+1)^{-a-1}`.
fn tail_k(params: &ModelParams) -> f64 {
    let p1 = params.p() + 1.0;
    2f64.powf(params.a()) * p1.powf(-params.a() - 1.0)
}

/// `G(y) = e^y y^a S(y)` at `y = (p+1) ln u`.
fn tail_g(ln_u: f64, params: &ModelParams) -> f64 {
    let y = (params.p() + 1.0) * ln_u;
    (y + params.a() * y.ln()).exp() * series_s(y, params.a())
}

/// Optimally truncated `Σ_k (-1)^k a(a-1)…(a-k+1)/y^k`.
fn series_s(y: f64, a: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 1.0f64;
    loop {
        let next = term * (-(a - k + 1.0) / y);
        if next == 0.0 || next.abs() >= term.abs() || next.abs() < 1e-18 * sum.abs() {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
        if k > 400.0 {
            break;
        }
    }
    sum
}

fn chebyshev_coefficients(vals: &[f64; DEGREE + 1]) -> [f64; DEGREE + 1] {
    let m = DEGREE + 1;
    let mut c = [0.0; DEGREE + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in vals.iter().enumerate() {
            acc += v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64).cos();
        }
        *ck = 2.0 * acc / m as f64;
    }
    c[0] *= 0.5;
    c
}

fn clenshaw(c: &[f64; DEGREE + 1], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}
