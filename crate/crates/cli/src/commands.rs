use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use logwave_core::functionals::FunctionalSnapshot;
use logwave_core::ode::{integrate_ode, rate_ratio};
use logwave_core::pde::{tune_level, SimilaritySolver};
use logwave_core::record::{plot_series, to_json_line, SnapshotRecord, TerminationCause, TrajectoryRecord};
use logwave_core::verify::growth::Quantity;
use logwave_core::verify::{self, theorem1::Theorem1Options};
use logwave_core::VerifyError;

use crate::config::{Config, InitialKind};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Theorem1,
    Theorem2,
    Criterion,
    Identities,
    Hardy,
    Growth,
    Dissipation,
    All,
}

impl Suite {
    pub fn needs_record(self) -> bool {
        matches!(self, Suite::Theorem1 | Suite::Theorem2 | Suite::Growth | Suite::Dissipation)
    }

    fn expand(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Theorem1, Theorem2, Growth, Dissipation, Criterion, Identities, Hardy],
            s => vec![s],
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Pass rule for the blow-up rate: 1% at `T - t = 1e-8` for the pure power,
/// otherwise within 0.1 there and closer to 1 than at `1e-4`.
pub fn ode(cfg: &Config, out: &Path) -> Result<bool> {
    let params = cfg.params()?;
    let manifest = RunManifest::new("ode", cfg);
    let traj = integrate_ode(cfg.ode_v0, cfg.ode_v1, params, &cfg.ode_controls())?;
    let mut text = String::from("# t v dv tau\n");
    for k in 0..traj.t.len() {
        text.push_str(&format!("{:e} {:e} {:e} {:e}\n", traj.t[k], traj.v[k], traj.dv[k], traj.tau[k]));
    }
    write(&out.join("ode_trajectory.txt"), &text)?;
    write(&out.join("rate_ratio.txt"), &plot_series("tau ratio", rate_ratio(&traj, cfg.ode_per_decade)))?;
    let r8 = traj.ratio_at(1e-8);
    let r4 = traj.ratio_at(1e-4);
    let passed = match (r8, r4) {
        (Some(r8), Some(r4)) if params.a() == 0.0 => (r8 - 1.0).abs() <= 0.01 && r4.is_finite(),
        (Some(r8), Some(r4)) => (r8 - 1.0).abs() <= 0.1 && (r8 - 1.0).abs() < (r4 - 1.0).abs(),
        _ => false,
    };
    let summary = json!({
        "manifest_id": manifest.id,
        "t_est": traj.t_est,
        "t_uncertainty": traj.t_uncertainty,
        "ratio_at_1e-4": r4,
        "ratio_at_1e-8": r8,
        "passed": passed,
    });
    write_json(&out.join("ode_summary.json"), &summary)?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(passed)
}

type Column = (&'static str, fn(&SnapshotRecord) -> f64);

const COLUMNS: &[Column] = &[
    ("sup_norm", |r| r.sup_norm),
    ("e", |r| r.functionals.e),
    ("j", |r| r.functionals.j),
    ("g", |r| r.functionals.g),
    ("l", |r| r.functionals.l),
    ("e0", |r| r.functionals.e0),
    ("f_poly", |r| r.functionals.f_poly),
    ("p_poly", |r| r.functionals.p_poly),
    ("curly_f", |r| r.functionals.curly_f),
    ("boundary_dissipation", |r| r.functionals.boundary_dissipation),
    ("h1l2_norm", |r| r.functionals.components.h1l2_norm),
    ("dissipation_cum", |r| r.dissipation_cum),
    ("boundary_cum", |r| r.boundary_cum),
];

type EtaColumn = (&'static str, fn(&FunctionalSnapshot, usize) -> f64);

const ETA_COLUMNS: &[EtaColumn] = &[
    ("e_eta", |f, k| f.eta[k].e_eta),
    ("h_eta", |f, k| f.eta[k].h_eta),
    ("curly_e_eta", |f, k| f.eta[k].curly_e_eta),
    ("m_eta", |f, k| f.eta[k].m_eta),
    ("curly_l_eta", |f, k| f.eta[k].curly_l_eta),
    ("n_eta", |f, k| f.eta[k].n_eta),
    ("singular_nonlinear", |f, k| f.eta[k].singular_nonlinear),
];

fn write_plots(rec: &TrajectoryRecord, dir: &Path) -> Result<()> {
    for (name, col) in COLUMNS {
        let rows = rec.snapshots.iter().map(|r| (r.s, col(r)));
        write(&dir.join(format!("{name}.txt")), &plot_series(&format!("s {name}"), rows))?;
    }
    let etas: Vec<f64> = rec.snapshots.first().map(|r| r.functionals.eta.iter().map(|e| e.eta).collect()).unwrap_or_default();
    for (k, eta) in etas.iter().enumerate() {
        for (name, col) in ETA_COLUMNS {
            let rows = rec.snapshots.iter().map(|r| (r.s, col(&r.functionals, k)));
            write(&dir.join(format!("{name}_{eta}.txt")), &plot_series(&format!("s {name} eta={eta}"), rows))?;
        }
    }
    Ok(())
}

/// Runs the similarity solver; the record and its plots go under `out`.
pub fn simulate(cfg: &Config, out: &Path) -> Result<(TrajectoryRecord, bool)> {
    let mut manifest = RunManifest::new("simulate", cfg);
    let solver = SimilaritySolver::new(cfg.run_config()?)?;
    let data = cfg.initial_data()?;
    let shift = if cfg.tune && matches!(cfg.initial, InitialKind::Kappa | InitialKind::KappaBump) {
        tune_level(&solver, &data, cfg.s1 + cfg.tune_margin, (-0.5, 0.5))?
    } else {
        0.0
    };
    manifest.level_shift = Some(shift);
    let mut rec = solver.run(solver.initial_state(&data, shift)?)?;
    rec.manifest_id = Some(manifest.id.clone());
    rec.diagnostics.level_shift = shift;
    write(&out.join("trajectory.jsonl"), &rec.to_json_lines())?;
    write_plots(&rec, &out.join("plots"))?;
    write_json(&out.join("manifest.json"), &manifest)?;
    let ok = matches!(rec.termination, TerminationCause::Horizon | TerminationCause::BlowUp);
    if !ok {
        eprintln!(
            "run stopped at s = {} ({:?}): {}",
            rec.termination_s,
            rec.termination,
            rec.diagnostics.message.as_deref().unwrap_or("no message")
        );
    }
    Ok((rec, ok))
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub suite: Suite,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub manifest_id: String,
    pub entries: Vec<SuiteEntry>,
    pub passed: bool,
}

fn entry<T: Serialize>(suite: Suite, record: Option<&str>, passed: bool, detail: &T) -> Result<SuiteEntry> {
    Ok(SuiteEntry { suite, record: record.map(String::from), passed, detail: serde_json::to_value(detail)? })
}

fn cadence_context(e: VerifyError) -> anyhow::Error {
    match e {
        VerifyError::MissingSnapshot(s) => {
            anyhow::anyhow!("record has no snapshot at s = {s}; verification needs snapshots at unit cadence (every 1.0 in s)")
        }
        e => e.into(),
    }
}

fn record_suite(cfg: &Config, suite: Suite, rec: &TrajectoryRecord, name: &str) -> Result<SuiteEntry> {
    let name = Some(name);
    match suite {
        Suite::Theorem1 => {
            let theta1 = match cfg.theta1 {
                Some(t) => t,
                None => verify::calibrate_theta1(rec, 1.0).map_err(cadence_context)?,
            };
            let opts = Theorem1Options { theta1, rel_tol: cfg.rel_tol, skip: 1.0 };
            let r = verify::check_theorem1_with(rec, &opts).map_err(cadence_context)?;
            entry(suite, name, r.passed, &r)
        }
        Suite::Theorem2 => {
            let r = verify::check_theorem2_with(rec, cfg.floor_ratio).map_err(cadence_context)?;
            entry(suite, name, r.passed, &r)
        }
        Suite::Growth => {
            let h = verify::check_growth_hierarchy(rec, Quantity::H1L2Avg, None).map_err(cadence_context)?;
            let w = verify::windowed_nonlinear_check(rec, 0).map_err(cadence_context)?;
            let const_ok = h.fits.last().is_some_and(|f| f.passed);
            let passed = h.consistent && const_ok && w.passed;
            entry(suite, name, passed, &json!({ "hierarchy": h, "windowed": w }))
        }
        Suite::Dissipation => {
            let r = verify::check_boundary_dissipation(rec).map_err(cadence_context)?;
            entry(suite, name, r.passed, &r)
        }
        _ => unreachable!("not a record suite"),
    }
}

fn standalone_suite(cfg: &Config, suite: Suite) -> Result<SuiteEntry> {
    match suite {
        Suite::Criterion => {
            let r = verify::check_blowup_criterion(&cfg.criterion_config()?)?;
            entry(suite, None, r.passed, &r)
        }
        Suite::Identities => {
            let r = verify::identity_suite(cfg.seed, cfg.corpus_size, &cfg.identity_etas)?;
            let summary = json!({ "seed": r.seed, "cases": r.cases.len(), "max_residual": r.max_residual });
            entry(suite, None, r.passed, &summary)
        }
        Suite::Hardy => {
            let r = verify::hardy_suite(cfg.seed, cfg.hardy_corpus_size, &cfg.hardy_etas)?;
            let summary = json!({
                "seed": r.seed,
                "cases": r.cases.len(),
                "min_slack": r.min_slack,
                "min_corollary_slack": r.min_corollary_slack,
            });
            entry(suite, None, r.passed, &summary)
        }
        _ => unreachable!("record suite"),
    }
}

pub fn load_record(path: &Path) -> Result<TrajectoryRecord> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TrajectoryRecord::from_json_lines(&text).with_context(|| format!("parsing record {}", path.display()))
}

pub fn verify(cfg: &Config, records: &[PathBuf], suite: Suite, out: &Path) -> Result<bool> {
    let manifest = RunManifest::new("verify", cfg);
    let suites = suite.expand();
    let loaded = records.iter().map(|p| Ok((p.display().to_string(), load_record(p)?))).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for s in suites {
        if s.needs_record() {
            for (name, rec) in &loaded {
                entries.push(record_suite(cfg, s, rec, name)?);
            }
        } else {
            entries.push(standalone_suite(cfg, s)?);
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    for e in &entries {
        let what = e.record.as_deref().map(|r| format!(" [{r}]")).unwrap_or_default();
        println!("{:<12} {}{}", format!("{:?}", e.suite).to_lowercase(), if e.passed { "PASS" } else { "FAIL" }, what);
    }
    let report = VerifyReport { manifest_id: manifest.id.clone(), entries, passed };
    write(&out.join("report.jsonl"), &(to_json_line(&report) + "\n"))?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(passed)
}

/// Simulates and verifies every sweep point, each into its own directory.
pub fn sweep(base: &[String], cfg_path: Option<&Path>, points: &[(String, String)], out: &Path) -> Result<bool> {
    let jobs: Vec<(Config, PathBuf)> = points
        .iter()
        .map(|(k, v)| {
            let mut overrides = base.to_vec();
            overrides.push(format!("{k}={v}"));
            Ok((Config::load(cfg_path, &overrides)?, out.join(format!("{k}={v}"))))
        })
        .collect::<Result<_>>()?;
    let results = logwave_core::par::map(&jobs, |(cfg, dir)| -> Result<bool> {
        let (_, ok) = simulate(cfg, dir)?;
        let rec = vec![dir.join("trajectory.jsonl")];
        let mut all = ok;
        for s in [Suite::Theorem1, Suite::Theorem2, Suite::Growth, Suite::Dissipation] {
            all &= verify(cfg, &rec, s, &dir.join(format!("verify-{}", format!("{s:?}").to_lowercase())))?;
        }
        Ok(all)
    });
    let mut all = true;
    for r in results {
        all &= r?;
    }
    Ok(all)
}
