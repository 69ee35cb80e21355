//! `gradabs`: run simulations, build limit profiles, execute acceptance suites and check
//! configs.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical abort or degenerate snapshot,
//! 3 at least one acceptance criterion failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gradabs::artifacts::write_run;
use gradabs::experiments::{trajectory_experiment, write_sweep_csv, EIKONAL_MARGIN};
use gradabs::profile::EikonalOptions;
use gradabs::suite::{self, Lab};
use gradabs::{build_vinf, check_comparison, eikonal_residual, io, Error, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "gradabs", version, about = "p-Laplacian evolution with gradient absorption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write manifest.json, series.csv and snapshots/.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's "output" entry.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's mode.
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Build the distance and limit-profile fields of a snapshot's positivity set.
    Profile {
        snapshot: PathBuf,
        #[arg(long)]
        q: f64,
        /// Output directory; defaults to the snapshot's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Positivity threshold relative to the snapshot maximum.
        #[arg(long, default_value_t = gradabs::stepper::DEFAULT_EPS_REL)]
        eps_rel: f64,
    },
    /// Run a bundled acceptance suite.
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(suite::SUITES))]
        name: String,
        /// Worker threads; defaults to the number of logical cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, printing its hash.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Input(String),
    Numerical(String),
    Criteria,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate { config, out, mode } => simulate(&config, out, mode),
        Command::Profile { snapshot, q, out, eps_rel } => profile(&snapshot, q, out, eps_rel),
        Command::Suite { name, jobs, out } => run_suite(&name, jobs, out),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("aborted: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Criteria) => ExitCode::from(3),
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(path)?;
    println!("{}", cfg.hash());
    Ok(())
}

fn simulate(path: &Path, out: Option<PathBuf>, mode: Option<Mode>) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(m) = mode {
        cfg.mode = m;
        cfg.validate()?;
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Input("no output directory: pass --out or set \"output\"".into()))?;
    let outcome = cfg.integrator().run(cfg.initial_field()?);
    let traj = &outcome.trajectory;
    let hash = cfg.hash();

    let comparisons: Vec<serde_json::Value> = cfg
        .barriers
        .iter()
        .map(|b| match check_comparison(traj, b, b.natural_direction()) {
            Ok(r) => serde_json::to_value(r).expect("report serializes"),
            Err(e) => serde_json::json!({ "barrier": b, "error": e.to_string() }),
        })
        .collect();
    let mut reports = Vec::new();
    if outcome.abort.is_none() {
        for name in &cfg.experiments {
            match trajectory_experiment(name, traj, &hash) {
                Ok(r) => reports.push(r),
                Err(e) => eprintln!("experiment {name}: {e}"),
            }
        }
    }
    let manifest = write_run(&dir, &cfg, traj, outcome.abort.as_ref(), &comparisons, &reports)?;
    println!("{} snapshots, {} steps -> {}", manifest.snapshots.len(), manifest.steps, dir.display());
    for r in &reports {
        for v in &r.verdicts {
            println!("{} [{}] {}: {}", r.name, if v.passed { "pass" } else { "fail" }, v.name, v.detail);
        }
    }
    match outcome.abort {
        Some(e) => Err(Failure::Numerical(e.to_string())),
        None => Ok(()),
    }
}

fn profile(snapshot: &Path, q: f64, out: Option<PathBuf>, eps_rel: f64) -> Result<(), Failure> {
    if q.is_nan() || q <= 1.0 {
        return Err(Failure::Input(format!("q = {q} must exceed 1")));
    }
    let field = io::load(snapshot)?;
    let eps = eps_rel * field.max();
    let mask = field.positivity_set(eps);
    if mask.is_empty() {
        return Err(Failure::Numerical(format!("{}: {}", snapshot.display(), Error::EmptyMask)));
    }
    if mask.is_full() {
        return Err(Failure::Numerical(format!("{}: {}", snapshot.display(), Error::EmptyComplement)));
    }
    let prof = build_vinf(&mask, q)?;
    let dir = out.unwrap_or_else(|| snapshot.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&dir).map_err(|e| Failure::Input(e.to_string()))?;
    let ext = if field.grid().dim() == 1 { "csv" } else { "bin" };
    io::save(&prof.dist_field(), &dir.join(format!("dist.{ext}")))?;
    io::save(&prof.field(), &dir.join(format!("vinf.{ext}")))?;
    let (vmax, at) = prof.max();
    let opts = EikonalOptions { boundary_margin: EIKONAL_MARGIN, ridge_margin: 0.0 };
    let eikonal = match eikonal_residual(&prof, opts) {
        Ok(r) => serde_json::json!({ "max": r.max, "mean": r.mean, "cells": r.cells, "ridgeCells": r.ridge_cells }),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    };
    let summary = serde_json::json!({
        "snapshot": snapshot.display().to_string(),
        "q": q,
        "threshold": eps,
        "maskCells": mask.count(),
        "dx": field.grid().dx(),
        "vinfMax": vmax,
        "vinfArgmax": field.grid().center(at),
        "eikonal": eikonal,
    });
    fs::write(dir.join("profile.json"), serde_json::to_string_pretty(&summary).expect("json"))
        .map_err(|e| Failure::Input(e.to_string()))?;
    println!("vinf max {vmax:.6e}, eikonal {eikonal}");
    Ok(())
}

fn run_suite(name: &str, jobs: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::Input("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Failure::Input(e.to_string()))?;
    let lab = Lab::new();
    let report = pool.install(|| suite::run_suite(name, &lab))?;
    for v in &report.verdicts {
        println!("criterion {:>2} {} {}: {}", v.criterion, if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    if let Some(dir) = out {
        fs::create_dir_all(&dir).map_err(|e| Failure::Input(e.to_string()))?;
        fs::write(dir.join(format!("suite-{name}.json")), report.to_json()).map_err(|e| Failure::Input(e.to_string()))?;
        if report.verdicts.iter().any(|v| v.criterion == 7) {
            if let Ok(sweep) = lab.sweep() {
                let f = fs::File::create(dir.join("sweep.csv")).map_err(|e| Failure::Input(e.to_string()))?;
                write_sweep_csv(sweep, f)?;
            }
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Criteria)
    }
}
