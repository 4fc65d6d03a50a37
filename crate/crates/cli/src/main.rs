mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::Suite;
use config::{expand_sweep, Config};

#[derive(Parser, Debug)]
#[command(name = "logwave", version, about = "Blow-up rate experiments for log-perturbed conformal wave equations")]
struct Cli {
    /// TOML configuration file; every key may also be given with --set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set a=-2.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, env = "LOGWAVE_OUT", default_value = "logwave-out", global = true)]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat the command for each value, e.g. --sweep a=-0.5,-1,-2.
    #[arg(long, value_name = "KEY=V1,V2,...", global = true)]
    sweep: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the spatially homogeneous ODE and check the blow-up rate.
    Ode,
    /// Evolve initial data in similarity variables and record functionals.
    Simulate,
    /// Run verification suites, on record files where a suite needs them.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        records: Vec<PathBuf>,
    },
    /// Simulate and verify every value of --sweep.
    Sweep,
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut v = cli.set.clone();
    if let Some(seed) = cli.seed {
        v.push(format!("seed={seed}"));
    }
    v
}

/// Ok(true) pass, Ok(false) check failed, Err usage or configuration problem.
fn run_one(cli: &Cli, extra: Option<&(String, String)>, out: &Path) -> Result<Result<bool>> {
    let mut ov = overrides(cli);
    if let Some((k, v)) = extra {
        ov.push(format!("{k}={v}"));
    }
    let cfg = Config::load(cli.config.as_deref(), &ov)?;
    if let Command::Verify { suite, records } = &cli.command {
        if suite.needs_record() && records.is_empty() {
            anyhow::bail!("suite {suite:?} needs at least one record file");
        }
    }
    Ok(match &cli.command {
        Command::Ode => commands::ode(&cfg, out),
        Command::Simulate => commands::simulate(&cfg, out).map(|(_, ok)| ok),
        Command::Verify { suite, records } => commands::verify(&cfg, records, *suite, out),
        Command::Sweep => unreachable!(),
    })
}

fn run(cli: &Cli) -> Result<Result<bool>> {
    let points = cli.sweep.as_deref().map(expand_sweep).transpose()?;
    if let Command::Sweep = cli.command {
        let Some(points) = points else {
            anyhow::bail!("sweep needs --sweep key=v1,v2,...");
        };
        // validate every point before spending time on any of them
        for (k, v) in &points {
            let mut ov = overrides(cli);
            ov.push(format!("{k}={v}"));
            Config::load(cli.config.as_deref(), &ov)?;
        }
        return Ok(commands::sweep(&overrides(cli), cli.config.as_deref(), &points, &cli.out));
    }
    match points {
        None => run_one(cli, None, &cli.out),
        Some(points) => {
            let mut all = true;
            for p in &points {
                match run_one(cli, Some(p), &cli.out.join(format!("{}={}", p.0, p.1)))? {
                    Ok(ok) => all &= ok,
                    Err(e) => return Ok(Err(e)),
                }
            }
            Ok(Ok(all))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(1),
    }
}
