//! Elementary two-sided bounds on the nonlinear potential.
//!
//! Each bound has the shape `lhs(z, s) <= rhs(z, s; C)` with an unspecified
//! constant. [`appendix_bound_check`] evaluates both sides for a given
//! constant; [`fit_appendix_constant`] returns the smallest constant that
//! makes every sample admissible. Throughout, `X = |φz|^{p+1} ln^a(2 + φ²z²)`.

use serde::{Deserialize, Serialize};

use super::{log_arg_from_ln, ModelParams, NonlinearityTable};
use crate::error::ModelError;
use crate::simvars::ln_phi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AppendixBound {
    /// `C⁻¹ X <= C + f(φz)`.
    Equiv1Lower,
    /// `C + f(φz) <= C + C X`.
    Equiv1Upper,
    /// `f1(φz) <= C + (C/s) X`.
    Equiv2,
    /// `f2(φz) <= C + (C/s²) X`.
    Equiv3,
    /// `z² <= ε s^{-a} |z|^{p+1} ln^a(2 + φ²z²) + C(ε)`, additive constant.
    Equiv5 { eps: f64 },
    /// `s^{-a} |z|^{p+1} ln^a(2 + φ²z²) <= C |z|^{p+1} + C e^{-s}`.
    Equiv6,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub constant_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub which: AppendixBound,
    pub constant: f64,
    /// Sample attaining the constant.
    pub argmax: (f64, f64),
    pub samples: usize,
}

struct Pieces {
    ln_x: f64,
    /// `ln(2 + φ²z²)`
    big_l: f64,
    /// `ln |z|`
    ln_z: f64,
}

fn pieces(z: f64, s: f64, params: &ModelParams) -> Pieces {
    let ln_z = z.abs().ln();
    let ln_u = ln_phi(s, params) + ln_z;
    let big_l = log_arg_from_ln(ln_u);
    Pieces { ln_x: (params.p() + 1.0) * ln_u + params.a() * big_l.ln(), big_l, ln_z }
}

fn check_pre(s: f64, which: AppendixBound, params: &ModelParams) -> Result<(), ModelError> {
    if !(s >= 1.0) {
        return Err(ModelError::Domain(format!("appendix bounds need s >= 1, got {s}")));
    }
    if matches!(which, AppendixBound::Equiv5 { .. } | AppendixBound::Equiv6) && !(params.a() < 0.0) {
        return Err(ModelError::OutOfTheoremScope(params.a()));
    }
    Ok(())
}

/// Both sides of the selected bound with constant `c`.
pub fn appendix_bound_check(
    z: f64,
    s: f64,
    c: f64,
    which: AppendixBound,
    table: &NonlinearityTable,
) -> Result<BoundReport, ModelError> {
    let params = table.params();
    check_pre(s, which, params)?;
    let (lhs, rhs) = if z == 0.0 {
        match which {
            AppendixBound::Equiv1Lower => (0.0, c),
            AppendixBound::Equiv1Upper | AppendixBound::Equiv2 | AppendixBound::Equiv3 => (c, c),
            AppendixBound::Equiv5 { .. } => (0.0, c),
            AppendixBound::Equiv6 => (0.0, c * (-s).exp()),
        }
    } else {
        let pc = pieces(z, s, params);
        let x = pc.ln_x.exp();
        let u_ln = ln_phi(s, params) + pc.ln_z;
        let ratio = table.ratio_ln(u_ln);
        let p1 = params.p() + 1.0;
        let f = x * ratio / p1;
        match which {
            AppendixBound::Equiv1Lower => (x / c, c + f),
            AppendixBound::Equiv1Upper => (c + f, c + c * x),
            AppendixBound::Equiv2 => {
                let f1 = -2.0 * params.a() / (p1 * p1) * x / pc.big_l;
                (f1, c + c / s * x)
            }
            AppendixBound::Equiv3 => {
                let f2 = x / p1 * table.f2_factor_ln(u_ln);
                (f2, c + c / (s * s) * x)
            }
            AppendixBound::Equiv5 { eps } => {
                let zp = (p1 * pc.ln_z).exp();
                (z * z, eps * zp * (pc.big_l / s).powf(params.a()) + c)
            }
            AppendixBound::Equiv6 => {
                let zp = (p1 * pc.ln_z).exp();
                (zp * (pc.big_l / s).powf(params.a()), c * zp + c * (-s).exp())
            }
        }
    };
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(ModelError::Saturated { what: "appendix bound", arg: z });
    }
    Ok(BoundReport { lhs, rhs, slack: rhs - lhs, constant_used: c })
}

/// Smallest constant admissible at one sample, computed in a form that does
/// not overflow when `X` is huge.
fn minimal_constant(z: f64, s: f64, which: AppendixBound, table: &NonlinearityTable) -> f64 {
    let params = table.params();
    if z == 0.0 {
        return 0.0;
    }
    let pc = pieces(z, s, params);
    let p1 = params.p() + 1.0;
    let inv_x = (-pc.ln_x).exp();
    let u_ln = ln_phi(s, params) + pc.ln_z;
    let r = table.ratio_ln(u_ln) / p1; // f / X
    match which {
        AppendixBound::Equiv1Upper => r,
        AppendixBound::Equiv1Lower => {
            // C² + f C - X >= 0, scaled by X: c = C/√X solves c² + (f/√X) c - 1 >= 0
            let g = r * (0.5 * pc.ln_x).exp();
            let c_scaled = 2.0 / (g + (g * g + 4.0).sqrt());
            c_scaled * (0.5 * pc.ln_x).exp()
        }
        AppendixBound::Equiv2 => {
            let g = -2.0 * params.a() / (p1 * p1) / pc.big_l;
            (g / (inv_x + 1.0 / s)).max(0.0)
        }
        AppendixBound::Equiv3 => {
            let g = table.f2_factor_ln(u_ln) / p1;
            (g / (inv_x + 1.0 / (s * s))).max(0.0)
        }
        AppendixBound::Equiv5 { eps } => {
            let zp = (p1 * pc.ln_z).exp();
            (z * z - eps * zp * (pc.big_l / s).powf(params.a())).max(0.0)
        }
        AppendixBound::Equiv6 => {
            let ln_zp = p1 * pc.ln_z;
            let lhs_over_zp = (pc.big_l / s).powf(params.a());
            // lhs / (|z|^{p+1} + e^{-s})
            lhs_over_zp / (1.0 + (-s - ln_zp).exp())
        }
    }
}

/// Smallest constant making `slack >= 0` on every `(z, s)` sample.
pub fn fit_appendix_constant(
    samples: &[(f64, f64)],
    which: AppendixBound,
    table: &NonlinearityTable,
) -> Result<ConstantFit, ModelError> {
    let mut best = ConstantFit { which, constant: 0.0, argmax: (0.0, 0.0), samples: samples.len() };
    for &(z, s) in samples {
        check_pre(s, which, table.params())?;
        let c = minimal_constant(z, s, which, table);
        if !c.is_finite() {
            return Err(ModelError::Saturated { what: "appendix constant", arg: z });
        }
        if c > best.constant {
            best.constant = c;
            best.argmax = (z, s);
        }
    }
    Ok(best)
}
