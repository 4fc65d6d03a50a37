//! Flat run configuration: one TOML table, every key overridable with
//! `--set key=value`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use logwave_core::functionals::FunctionalConstants;
use logwave_core::ode::OdeControls;
use logwave_core::pde::{Fault, InitialData, SimilarityRunConfig};
use logwave_core::verify::CriterionConfig;
use logwave_core::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Zero,
    Kappa,
    KappaBump,
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    None,
    FlipDamping,
    BoundaryForcing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub a: f64,
    /// Allows `a >= 0`; reports are then out of theorem scope.
    pub exploratory: bool,

    // similarity frame and solver
    pub t0: f64,
    pub s0: f64,
    pub s1: f64,
    pub grid_size: usize,
    pub cadence: f64,
    pub cfl: f64,
    /// Blow-up cap in units of κ.
    pub cap: f64,
    pub initial: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    pub slope: f64,
    /// Bisect a level shift so the run neither blows up nor decays.
    pub tune: bool,
    pub tune_margin: f64,
    pub fault: FaultKind,
    pub fault_amplitude: f64,
    pub store_states: bool,

    // functional constants; a missing theta1 is calibrated on the record
    pub theta1: Option<f64>,
    pub theta2: f64,
    pub theta4: f64,
    pub nu: f64,
    pub etas: Vec<f64>,

    // tolerances
    pub rel_tol: f64,
    pub floor_ratio: f64,

    // ODE
    pub ode_v0: f64,
    pub ode_v1: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub ode_cap: f64,
    pub ode_per_decade: usize,

    // suites
    pub seed: u64,
    pub corpus_size: usize,
    pub hardy_corpus_size: usize,
    pub identity_etas: Vec<f64>,
    pub hardy_etas: Vec<f64>,
    pub criterion_count: usize,
    pub criterion_horizon: f64,
    pub plateau_s0: f64,
    pub cross_cells: usize,
}

impl Default for Config {
    fn default() -> Self {
        let constants = FunctionalConstants::default();
        Self {
            n: 3,
            a: -1.0,
            exploratory: false,
            t0: (-7.0f64).exp(),
            s0: 20.0,
            s1: 30.0,
            grid_size: 24,
            cadence: 0.1,
            cfl: 0.5,
            cap: 10.0,
            initial: InitialKind::KappaBump,
            amplitude: 0.1,
            width: 0.4,
            slope: 0.3,
            tune: true,
            tune_margin: 2.0,
            fault: FaultKind::None,
            fault_amplitude: 1.0,
            store_states: false,
            theta1: None,
            theta2: constants.theta2,
            theta4: constants.theta4,
            nu: constants.nu,
            etas: constants.etas,
            rel_tol: 1e-3,
            floor_ratio: 1e-3,
            ode_v0: 8.0,
            ode_v1: 0.0,
            ode_rtol: 1e-12,
            ode_atol: 1e-14,
            ode_cap: 1e12,
            ode_per_decade: 4,
            seed: 1,
            corpus_size: 50,
            hardy_corpus_size: 200,
            identity_etas: vec![0.1, 0.5, 0.9],
            hardy_etas: vec![0.1, 0.5, 1.0],
            criterion_count: 10,
            criterion_horizon: 35.0,
            plateau_s0: 50.0,
            cross_cells: 400,
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

impl Config {
    /// File (if any), then `key=value` overrides, then validation.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                text.parse::<toml::Table>().with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for kv in overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects key=value, got {kv:?}");
            };
            table.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        let cfg: Config = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.params()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let p = if self.exploratory { ModelParams::exploratory(self.n, self.a) } else { ModelParams::new(self.n, self.a) };
        p.context("invalid model parameters")
    }

    pub fn constants(&self) -> FunctionalConstants {
        FunctionalConstants {
            theta1: self.theta1.unwrap_or(1.0),
            theta2: self.theta2,
            theta4: self.theta4,
            nu: self.nu,
            etas: self.etas.clone(),
        }
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let k = logwave_core::kappa(&self.params()?);
        Ok(match self.initial {
            InitialKind::Zero => InitialData::Zero,
            InitialKind::Kappa => InitialData::Kappa,
            InitialKind::KappaBump => InitialData::KappaBump { amplitude: self.amplitude, width: self.width },
            InitialKind::Profile => InitialData::Profile { amplitude: self.amplitude * k, slope: self.slope },
        })
    }

    pub fn run_config(&self) -> Result<SimilarityRunConfig> {
        let params = self.params()?;
        let mut c = SimilarityRunConfig::new(params, self.t0);
        c.s0 = self.s0;
        c.s1 = self.s1;
        c.grid_size = self.grid_size;
        c.cadence = self.cadence;
        c.cfl = self.cfl;
        c.blowup_cap = Some(self.cap * logwave_core::kappa(&params));
        c.constants = self.constants();
        c.store_states = self.store_states;
        c.fault = match self.fault {
            FaultKind::None => Fault::None,
            FaultKind::FlipDamping => Fault::FlipDamping,
            FaultKind::BoundaryForcing => Fault::BoundaryForcing { amplitude: self.fault_amplitude },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn ode_controls(&self) -> OdeControls {
        OdeControls { rtol: self.ode_rtol, atol: self.ode_atol, cap: self.ode_cap, ..OdeControls::default() }
    }

    pub fn criterion_config(&self) -> Result<CriterionConfig> {
        let mut c = CriterionConfig::sweep(self.params()?, self.criterion_count);
        c.s0 = self.s0;
        c.horizon = self.criterion_horizon;
        c.slope = self.slope;
        c.theta1 = self.theta1.unwrap_or(1.0);
        Ok(c)
    }
}

/// `key=v1,v2,...` into one override list per value.
pub fn expand_sweep(spec: &str) -> Result<Vec<(String, String)>> {
    let Some((key, values)) = spec.split_once('=') else {
        bail!("--sweep expects key=v1,v2,..., got {spec:?}");
    };
    let out: Vec<(String, String)> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| (key.trim().to_string(), v.to_string()))
        .collect();
    if out.is_empty() {
        bail!("--sweep {key} has no values");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = Config::load(None, &[]).unwrap();
        assert_eq!(c, Config::default());
        c.run_config().unwrap();
    }

    #[test]
    fn overrides_are_typed() {
        let c = Config::load(None, &["a=-2".into(), "initial=zero".into(), "etas=[0.2, 0.3]".into()]).unwrap();
        assert_eq!(c.a, -2.0);
        assert_eq!(c.initial, InitialKind::Zero);
        assert_eq!(c.etas, vec![0.2, 0.3]);
    }

    #[test]
    fn nonnegative_a_needs_the_exploratory_flag() {
        assert!(Config::load(None, &["a=0".into()]).is_err());
        assert!(Config::load(None, &["a=0".into(), "exploratory=true".into()]).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::load(None, &["colour=3".into()]).is_err());
    }

    #[test]
    fn sweep_spec() {
        let v = expand_sweep("a=-0.5,-1,-2").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[2], ("a".into(), "-2".into()));
        assert!(expand_sweep("a").is_err());
    }
}
