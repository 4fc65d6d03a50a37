//! Blow-up criterion: data with `L(s0) < 0` must blow up in finite `s`.
//!
//! The sweep uses the profile `A (1 - slope |y|²)` over a range of amplitudes
//! `A`, classifies every case by the sign of `L(s0)` and runs it to the
//! horizon.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::functionals::{l_from_g, Functionals};
use crate::model::{kappa, ModelParams};
use crate::par;
use crate::pde::{InitialData, ProbeOutcome, SimilarityRunConfig, SimilaritySolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub params: ModelParams,
    pub s0: f64,
    pub horizon: f64,
    pub grid_size: usize,
    /// Amplitudes in units of `κ`.
    pub amplitudes: Vec<f64>,
    pub slope: f64,
    pub theta1: f64,
    /// Cases with `|L(s0)| <= margin` are indeterminate.
    pub margin: f64,
}

impl CriterionConfig {
    /// `A ∈ [0.5κ, 5κ]` in `count` equal steps.
    pub fn sweep(params: ModelParams, count: usize) -> Self {
        let count = count.max(2);
        let amplitudes = (0..count).map(|k| 0.5 + 4.5 * k as f64 / (count - 1) as f64).collect();
        Self { params, s0: 20.0, horizon: 35.0, grid_size: 16, amplitudes, slope: 0.3, theta1: 1.0, margin: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionClass {
    /// `L(s0) < -margin`
    MustBlowUp,
    /// Zero data, or `L(s0) > margin` with `sup|w| < κ`.
    MustNotBlowUp,
    /// `|L(s0)| <= margin`
    Indeterminate,
    /// `L(s0) > margin` and large data; the criterion says nothing.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionCase {
    /// In units of `κ`; zero for the zero-data case.
    pub amplitude: f64,
    pub l0: f64,
    pub class: CriterionClass,
    pub blowup_s: Option<f64>,
    /// `None` for indeterminate and informational cases.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub cases: Vec<CriterionCase>,
    pub zero: CriterionCase,
    /// Smallest amplitude with `L(s0) < -margin`.
    pub smallest_negative: Option<f64>,
    pub passed: bool,
}

fn run_case(
    cfg: &CriterionConfig,
    solver: &SimilaritySolver,
    f: &Functionals,
    amplitude: f64,
) -> Result<CriterionCase, VerifyError> {
    let k = kappa(&cfg.params);
    let data = if amplitude == 0.0 {
        InitialData::Zero
    } else {
        InitialData::Profile { amplitude: amplitude * k, slope: cfg.slope }
    };
    let st = solver.initial_state(&data, 0.0)?;
    let snap = f.snapshot(&st)?;
    let l0 = l_from_g(snap.g, cfg.s0, cfg.theta1, &cfg.params);
    let class = if amplitude == 0.0 || (l0 > cfg.margin && st.sup_norm() < k) {
        CriterionClass::MustNotBlowUp
    } else if l0 < -cfg.margin {
        CriterionClass::MustBlowUp
    } else if l0.abs() <= cfg.margin {
        CriterionClass::Indeterminate
    } else {
        CriterionClass::Informational
    };
    let blowup_s = match solver.probe(&st, cfg.horizon, 0.0)? {
        ProbeOutcome::BlowUp(s) => Some(s),
        _ => None,
    };
    let passed = match class {
        CriterionClass::MustBlowUp => Some(blowup_s.is_some()),
        CriterionClass::MustNotBlowUp => Some(blowup_s.is_none()),
        _ => None,
    };
    Ok(CriterionCase { amplitude, l0, class, blowup_s, passed })
}

pub fn check_blowup_criterion(cfg: &CriterionConfig) -> Result<CriterionReport, VerifyError> {
    if !cfg.params.theorem_mode() {
        return Err(VerifyError::Hypothesis(format!("a = {} is not negative", cfg.params.a())));
    }
    let mut rc = SimilarityRunConfig::starting_at(cfg.params, cfg.s0, cfg.horizon);
    rc.grid_size = cfg.grid_size;
    rc.s_floor = 0.0;
    let solver = SimilaritySolver::new(rc.clone())?;
    let f = Functionals::new(Arc::clone(solver.table()), rc.constants.clone())?;
    let mut amps = vec![0.0];
    amps.extend(cfg.amplitudes.iter().copied());
    let mut cases = par::map(&amps, |&a| run_case(cfg, &solver, &f, a)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let zero = cases.remove(0);
    let smallest_negative =
        cases.iter().filter(|c| c.class == CriterionClass::MustBlowUp).map(|c| c.amplitude).reduce(f64::min);
    let passed = zero.passed == Some(true) && cases.iter().all(|c| c.passed != Some(false));
    Ok(CriterionReport { cases, zero, smallest_negative, passed })
}
