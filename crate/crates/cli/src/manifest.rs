use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use logwave_core::verify::{growth::GROWTH_TOL, identities::HARDY_TOL, identities::IDENTITY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub trajectory: f64,
    pub theorem2_floor: f64,
    pub identity: f64,
    pub hardy: f64,
    pub growth: f64,
}

/// Everything needed to reproduce a run. The id hashes the verb and the
/// configuration only, so records written from the same manifest are
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub id: String,
    pub verb: String,
    pub code_version: String,
    pub parallel: bool,
    pub seed: u64,
    pub config: Config,
    pub tolerances: Tolerances,
    /// Level shift found by frame tuning, in units of κ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_shift: Option<f64>,
    /// θ1 actually used by verification, after calibration if requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(verb: &str, config: &Config) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        let mut h = Sha256::new();
        h.update(verb.as_bytes());
        h.update([0u8]);
        h.update(canonical.as_bytes());
        let id = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            id,
            verb: verb.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            parallel: logwave_core::par::is_parallel(),
            seed: config.seed,
            config: config.clone(),
            tolerances: Tolerances {
                trajectory: config.rel_tol,
                theorem2_floor: config.floor_ratio,
                identity: IDENTITY_TOL,
                hardy: HARDY_TOL,
                growth: GROWTH_TOL,
            },
            level_shift: None,
            theta1: config.theta1,
            created_unix,
        }
    }
}
