//! Certified growth envelopes for unit-interval averages along a trajectory.
//!
//! A fit takes `C = max Q/m` over the first half of the samples and checks
//! that `Q <= (1 + GROWTH_TOL) C m` on the second half. The reported
//! constant is the envelope over all samples, so it always bounds the data;
//! whether the model *predicts* the data is what `passed` records.

use serde::{Deserialize, Serialize};

use super::{trapezoid, unit_snapshots};
use crate::error::VerifyError;
use crate::model::ModelParams;
use crate::record::TrajectoryRecord;

pub const GROWTH_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthModel {
    Exp { c: f64 },
    /// `s^{q+1}`
    Poly { q: f64 },
    Linear,
    Log,
    Const,
}

impl GrowthModel {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            GrowthModel::Exp { c } => (c * s).exp(),
            GrowthModel::Poly { q } => s.powf(q + 1.0),
            GrowthModel::Linear => s,
            GrowthModel::Log => s.ln(),
            GrowthModel::Const => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GrowthModel::Exp { .. } => "exp",
            GrowthModel::Poly { .. } => "poly",
            GrowthModel::Linear => "linear",
            GrowthModel::Log => "log",
            GrowthModel::Const => "const",
        }
    }

    /// Loosest to sharpest: `e^{η(p+3)s/2}`, `s^{3/2}`, `s`, `ln s`, `1`.
    pub fn hierarchy(params: &ModelParams, eta: f64) -> [GrowthModel; 5] {
        [
            GrowthModel::Exp { c: eta * (params.p() + 3.0) / 2.0 },
            GrowthModel::Poly { q: 0.5 },
            GrowthModel::Linear,
            GrowthModel::Log,
            GrowthModel::Const,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quantity {
    /// `∫_s^{s+1} N_η`
    NEtaAvg { eta_index: usize },
    /// `H_η(s)` at unit snapshots.
    HEtaLevel { eta_index: usize },
    SingularNonlinearAvg { eta_index: usize },
    TangentialSingularAvg { eta_index: usize },
    /// `∫_s^{s+1} (‖w‖_{H¹} + ‖∂_s w‖_{L²})`
    H1L2Avg,
    /// `D(s)` from the stepper accumulator.
    DissipationAvg,
    /// `∫_s^{s+1} ∫_{∂B} (∂_s w)²` from the stepper accumulator.
    BoundaryDissipation,
}

impl Quantity {
    pub fn name(&self) -> String {
        match self {
            Quantity::NEtaAvg { eta_index } => format!("n_eta_avg[{eta_index}]"),
            Quantity::HEtaLevel { eta_index } => format!("h_eta_level[{eta_index}]"),
            Quantity::SingularNonlinearAvg { eta_index } => format!("singular_nonlinear_avg[{eta_index}]"),
            Quantity::TangentialSingularAvg { eta_index } => format!("tangential_singular_avg[{eta_index}]"),
            Quantity::H1L2Avg => "h1l2_avg".into(),
            Quantity::DissipationAvg => "dissipation_avg".into(),
            Quantity::BoundaryDissipation => "boundary_dissipation".into(),
        }
    }

    fn eta_index(&self) -> Option<usize> {
        match *self {
            Quantity::NEtaAvg { eta_index }
            | Quantity::HEtaLevel { eta_index }
            | Quantity::SingularNonlinearAvg { eta_index }
            | Quantity::TangentialSingularAvg { eta_index } => Some(eta_index),
            _ => None,
        }
    }

    /// `η` the quantity refers to, if any.
    pub fn eta(&self, rec: &TrajectoryRecord) -> Option<f64> {
        let k = self.eta_index()?;
        rec.snapshots.first()?.functionals.eta.get(k).map(|e| e.eta)
    }

    /// `(s, Q(s))` per unit interval starting at the first snapshot.
    pub fn samples(&self, rec: &TrajectoryRecord) -> Result<Vec<(f64, f64)>, VerifyError> {
        let s0 = rec.s0().ok_or(VerifyError::InsufficientSamples { needed: 2, got: 0 })?;
        if let Some(k) = self.eta_index() {
            if rec.snapshots.iter().any(|r| r.functionals.eta.len() <= k) {
                return Err(VerifyError::NoOverlap(format!("snapshots carry no eta index {k}")));
            }
        }
        let units = unit_snapshots(rec, s0)?;
        units
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let v = match *self {
                    Quantity::NEtaAvg { eta_index: k } => trapezoid(rec, a.s, b.s, &|r| r.functionals.eta[k].n_eta)?,
                    Quantity::HEtaLevel { eta_index: k } => a.functionals.eta[k].h_eta,
                    Quantity::SingularNonlinearAvg { eta_index: k } => {
                        trapezoid(rec, a.s, b.s, &|r| r.functionals.eta[k].singular_nonlinear)?
                    }
                    Quantity::TangentialSingularAvg { eta_index: k } => {
                        trapezoid(rec, a.s, b.s, &|r| r.functionals.eta[k].tangential_singular)?
                    }
                    Quantity::H1L2Avg => trapezoid(rec, a.s, b.s, &|r| r.functionals.components.h1l2_norm)?,
                    Quantity::DissipationAvg => b.dissipation_cum - a.dissipation_cum,
                    Quantity::BoundaryDissipation => b.boundary_cum - a.boundary_cum,
                };
                Ok((a.s, v))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub quantity: String,
    pub model: GrowthModel,
    pub samples: Vec<(f64, f64)>,
    /// `max Q/m` over all samples.
    pub constant: f64,
    /// `max Q/(C₁ m)` over the second half, `C₁` fitted on the first half.
    pub max_residual_ratio: f64,
    /// `C m(s_last) / Q(s_last)`: how far above the data the envelope ends.
    pub looseness: f64,
    pub passed: bool,
}

/// Envelope fit of `samples` against `model`.
pub fn fit_envelope(quantity: String, samples: Vec<(f64, f64)>, model: GrowthModel) -> Result<GrowthFit, VerifyError> {
    if samples.len() < 4 {
        return Err(VerifyError::InsufficientSamples { needed: 4, got: samples.len() });
    }
    let ratio = |(s, q): (f64, f64)| q / model.eval(s);
    let half = samples.len().div_ceil(2);
    let c_first = samples[..half].iter().map(|&x| ratio(x)).fold(f64::NEG_INFINITY, f64::max);
    let constant = samples.iter().map(|&x| ratio(x)).fold(f64::NEG_INFINITY, f64::max);
    let max_residual_ratio = samples[half..]
        .iter()
        .map(|&x| {
            let r = ratio(x);
            if c_first > 0.0 {
                r / c_first
            } else if r <= c_first {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let (s_last, q_last) = samples[samples.len() - 1];
    let looseness = if q_last == 0.0 && constant == 0.0 { 1.0 } else { constant * model.eval(s_last) / q_last };
    let passed = max_residual_ratio <= 1.0 + GROWTH_TOL && constant.is_finite();
    Ok(GrowthFit { quantity, model, samples, constant, max_residual_ratio, looseness, passed })
}

pub fn growth_monitor(rec: &TrajectoryRecord, quantity: Quantity, model: GrowthModel) -> Result<GrowthFit, VerifyError> {
    fit_envelope(quantity.name(), quantity.samples(rec)?, model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    /// Loosest model first.
    pub fits: Vec<GrowthFit>,
    /// A sharper model passing implies every looser one passes, and the
    /// looseness never increases towards the sharper end.
    pub consistent: bool,
    /// Sharpest model whose envelope is validated.
    pub sharpest_passing: Option<GrowthModel>,
}

/// Fits the full model hierarchy to one quantity. `eta` sets the
/// exponential rate and defaults to the quantity's own `η` or `0.5`.
pub fn check_growth_hierarchy(rec: &TrajectoryRecord, quantity: Quantity, eta: Option<f64>) -> Result<HierarchyReport, VerifyError> {
    let eta = eta.or_else(|| quantity.eta(rec)).unwrap_or(0.5);
    let samples = quantity.samples(rec)?;
    let fits = GrowthModel::hierarchy(&rec.params, eta)
        .iter()
        .map(|&m| fit_envelope(quantity.name(), samples.clone(), m))
        .collect::<Result<Vec<_>, _>>()?;
    let implication = (0..fits.len()).all(|j| !fits[j].passed || fits[..j].iter().all(|f| f.passed));
    let ordered = fits.windows(2).all(|w| w[1].looseness <= w[0].looseness * (1.0 + 1e-12) || w[0].looseness.is_nan());
    let sharpest_passing = fits.iter().rev().find(|f| f.passed).map(|f| f.model);
    Ok(HierarchyReport { fits, consistent: implication && ordered, sharpest_passing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub const_fit: GrowthFit,
    /// `ln s` envelope, reported when the constant one fails.
    pub log_fit: Option<GrowthFit>,
    /// Some boundary trace disagreed between extrapolation orders.
    pub flagged: bool,
    pub passed: bool,
}

/// `∫_s^{s+1} ∫_{∂B} (∂_s w)² dσ dτ` must admit a constant envelope.
pub fn check_boundary_dissipation(rec: &TrajectoryRecord) -> Result<BoundaryReport, VerifyError> {
    let samples = Quantity::BoundaryDissipation.samples(rec)?;
    let name = Quantity::BoundaryDissipation.name();
    let const_fit = fit_envelope(name.clone(), samples.clone(), GrowthModel::Const)?;
    let log_fit = if const_fit.passed { None } else { Some(fit_envelope(name, samples, GrowthModel::Log)?) };
    let flagged = rec.snapshots.iter().any(|r| r.functionals.boundary_flagged);
    Ok(BoundaryReport { passed: const_fit.passed, const_fit, log_fit, flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedReport {
    pub eta: f64,
    /// `(s, ∫_s^{s+1} singular nonlinear, ∫_{s-2}^{s+3} N_η)`
    pub windows: Vec<(f64, f64, f64)>,
    /// Envelope of the ratio of the two, which must stay stable in `s`.
    pub ratio_fit: GrowthFit,
    pub passed: bool,
}

/// Unit-interval singular-weight nonlinear average against the five-unit
/// window average of `N_η` around it.
pub fn windowed_nonlinear_check(rec: &TrajectoryRecord, eta_index: usize) -> Result<WindowedReport, VerifyError> {
    let s0 = rec.s0().ok_or(VerifyError::InsufficientSamples { needed: 6, got: 0 })?;
    let units = unit_snapshots(rec, s0)?;
    let eta = Quantity::NEtaAvg { eta_index }
        .eta(rec)
        .ok_or_else(|| VerifyError::NoOverlap(format!("snapshots carry no eta index {eta_index}")))?;
    let last = units[units.len() - 1].s;
    let mut windows = Vec::new();
    for u in &units {
        let s = u.s;
        if s < s0 + 2.0 - 1e-9 || s + 3.0 > last + 1e-9 {
            continue;
        }
        let lhs = trapezoid(rec, s, s + 1.0, &|r| r.functionals.eta[eta_index].singular_nonlinear)?;
        let rhs = trapezoid(rec, s - 2.0, s + 3.0, &|r| r.functionals.eta[eta_index].n_eta)?;
        windows.push((s, lhs, rhs));
    }
    let ratios = windows.iter().map(|&(s, l, r)| (s, if r == 0.0 && l == 0.0 { 0.0 } else { l / r })).collect();
    let ratio_fit = fit_envelope(format!("windowed_ratio[{eta_index}]"), ratios, GrowthModel::Const)?;
    Ok(WindowedReport { eta, windows, passed: ratio_fit.passed, ratio_fit })
}
