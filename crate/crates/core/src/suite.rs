//! Bundled desk-scale acceptance runs and the checks evaluated on them.
//!
//! A [`Lab`] runs each bundled configuration at most once and shares the trajectory
//! between criteria. [`Lab::prefetch`] runs the configurations a suite needs in parallel
//! on the current rayon pool.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifacts::write_series;
use crate::barriers::{eval_sa, max_amplitude_ar, stationary_residual, subsolution_bound, subsolution_residual};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    amplitude_sweep, convergence_to_vinf, decay_fit_window, fit_power_law, localization_check_from,
    monotone_support_check, waiting_time_run, EIKONAL_MARGIN, ExperimentReport, NormKind, SweepReport, Verdict, WaitingMode,
    WaitingTimeReport, WaitingTimeSetup,
};
use crate::grid::{Field, Grid, PositivitySet};
use crate::initial::InitialData;
use crate::params::Params;
use crate::profile::{build_vinf, eikonal_residual, squared_distance_transform, EikonalOptions};
use crate::stepper::{Integrator, Mode, StepControl, Trajectory};

pub const SUITES: [&str; 6] = ["decay", "localization", "convergence", "waiting-time", "barriers", "all"];

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "self-similar fidelity"),
    (2, "decay sandwich"),
    (3, "localization"),
    (4, "monotone positivity set"),
    (5, "convergence to the conical profile"),
    (6, "waiting time"),
    (7, "moving support"),
    (8, "barrier checks"),
    (9, "distance-transform oracle"),
    (10, "eikonal residual"),
    (11, "determinism and comparison"),
];

pub fn criterion_name(id: u8) -> &'static str {
    CRITERIA.iter().find(|(c, _)| *c == id).map(|(_, n)| *n).unwrap_or("unknown")
}

/// Criteria run by a named suite.
pub fn suite_criteria(name: &str) -> Result<Vec<u8>> {
    Ok(match name {
        "decay" => vec![1, 2],
        "localization" => vec![3, 4],
        "convergence" => vec![5, 9, 10],
        "waiting-time" => vec![6, 7],
        "barriers" => vec![8, 11],
        "all" => (1..=11).collect(),
        other => return Err(Error::InvalidConfig(format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    })
}

pub const CAP: InitialData = InitialData::Cap { amplitude: 0.003, radius: 1.0, exponent: 4.0 };
pub const T_LONG: f64 = 1000.0;
pub const MOVING_FACTOR: f64 = 50.0;
pub const SWEEP_FACTORS: [f64; 7] = [1.5, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
pub const RANDOM_SEED: u64 = 0x5eed_0001;

fn p3(q: f64, dim: usize) -> Params<f64> {
    Params::new(3.0, q, dim).expect("bundled parameters are valid")
}

fn long_control() -> StepControl {
    StepControl { snapshots_per_decade: 4, ..StepControl::until(T_LONG) }
}

/// Original mode at `(3, 1.5, 1)`, cap data on `[-2, 2]`, 1024 cells, up to `t = 1000`.
pub fn cap_1d_config() -> RunConfig {
    RunConfig::new(p3(1.5, 1), Grid::new(1, 2.0, 1024).unwrap(), CAP, Mode::Original, long_control())
}

/// Same data in 2D on `[-2, 2]^2` with 128 cells per axis.
pub fn cap_2d_config() -> RunConfig {
    RunConfig::new(p3(1.5, 2), Grid::new(2, 2.0, 128).unwrap(), CAP, Mode::Original, long_control())
}

/// Diffusion alone, same data on `[-4, 4]`.
pub fn plap_control_config() -> RunConfig {
    RunConfig::new(p3(1.5, 1), Grid::new(1, 4.0, 1024).unwrap(), CAP, Mode::PlapOnly, long_control())
}

/// Grid of the Hamilton-Jacobi runs: the faces at `x = -1, 1` are cell faces.
pub fn hj_grid() -> Grid<f64> {
    Grid::new(1, 8.0 / 7.0, 1024).unwrap()
}

pub fn hj_control() -> StepControl {
    StepControl { t_start: 1.0, t_end: 100.0, first_snapshot: 1.0, snapshots_per_decade: 8, ..StepControl::default() }
}

pub fn waiting_setup(cells: usize) -> WaitingTimeSetup {
    WaitingTimeSetup { cells, ..WaitingTimeSetup::default() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RunKey {
    Cap1d,
    Cap2d,
    PlapControl,
    Hj15,
    Hj2,
    Wait512,
    Wait1024,
    Moving,
    Sweep,
}

impl RunKey {
    pub const ALL: [RunKey; 9] = [
        RunKey::Cap1d,
        RunKey::Cap2d,
        RunKey::PlapControl,
        RunKey::Hj15,
        RunKey::Hj2,
        RunKey::Wait512,
        RunKey::Wait1024,
        RunKey::Moving,
        RunKey::Sweep,
    ];

    /// Original-mode runs, all checked for a monotone positivity set.
    pub const ORIGINAL: [RunKey; 6] =
        [RunKey::Cap1d, RunKey::Cap2d, RunKey::Wait512, RunKey::Wait1024, RunKey::Moving, RunKey::Sweep];
}

/// Runs each criterion depends on.
pub fn runs_for(criterion: u8) -> Vec<RunKey> {
    match criterion {
        1 => vec![RunKey::Hj15, RunKey::Hj2],
        2 => vec![RunKey::Cap1d],
        3 => vec![RunKey::Cap1d, RunKey::PlapControl],
        4 => RunKey::ORIGINAL.to_vec(),
        5 => vec![RunKey::Cap1d, RunKey::Cap2d],
        6 => vec![RunKey::Wait512, RunKey::Wait1024],
        7 => vec![RunKey::Moving, RunKey::Sweep],
        _ => Vec::new(),
    }
}

/// A finished (or aborted) integrator run.
#[derive(Debug, Clone)]
pub struct Run {
    pub config_hash: String,
    pub trajectory: Trajectory<f64>,
    pub abort: Option<String>,
}

type Cached<T> = OnceLock<std::result::Result<T, String>>;

#[derive(Default)]
pub struct Lab {
    cap_1d: Cached<Run>,
    cap_2d: Cached<Run>,
    plap: Cached<Run>,
    hj15: Cached<Run>,
    hj2: Cached<Run>,
    wait512: Cached<(WaitingTimeReport, Run)>,
    wait1024: Cached<(WaitingTimeReport, Run)>,
    moving: Cached<(WaitingTimeReport, Run)>,
    sweep: Cached<SweepReport>,
}

fn hash_value(v: &impl Serialize) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(v).expect("serializable")))
}

fn run_config(cfg: &RunConfig) -> std::result::Result<Run, String> {
    let u0 = cfg.initial_field().map_err(|e| e.to_string())?;
    let out = cfg.integrator().run(u0);
    Ok(Run { config_hash: cfg.hash(), trajectory: out.trajectory, abort: out.abort.map(|e| e.to_string()) })
}

fn run_hj(q: f64) -> std::result::Result<Run, String> {
    let grid = hj_grid();
    let mask = Field::from_fn(grid, |[x, _]| if x.abs() < 1.0 { 1.0 } else { 0.0 }).positivity_set(0.0);
    let v0 = build_vinf(&mask, q).map_err(|e| e.to_string())?.field();
    let out = Integrator::new(p3(q, 1), Mode::HjOnly, hj_control()).run(v0);
    let hash = hash_value(&serde_json::json!({
        "params": p3(q, 1), "grid": grid, "initial": "vinf(-1,1)", "mode": Mode::HjOnly, "control": hj_control()
    }));
    Ok(Run { config_hash: hash, trajectory: out.trajectory, abort: out.abort.map(|e| e.to_string()) })
}

fn run_waiting(q: f64, cells: usize, mode: WaitingMode) -> std::result::Result<(WaitingTimeReport, Run), String> {
    let setup = waiting_setup(cells);
    let (report, trajectory) = waiting_time_run(&p3(q, 1), &setup, mode).map_err(|e| e.to_string())?;
    let hash = hash_value(&serde_json::json!({"params": p3(q, 1), "setup": setup, "mode": mode}));
    let abort = report.aborted.clone();
    Ok((report, Run { config_hash: hash, trajectory, abort }))
}

fn cached<T>(cell: &Cached<T>, f: impl FnOnce() -> std::result::Result<T, String>) -> std::result::Result<&T, String> {
    cell.get_or_init(f).as_ref().map_err(|e| e.clone())
}

impl Lab {
    pub fn new() -> Self {
        Lab::default()
    }

    /// Runs the given configurations in parallel, skipping those already cached.
    pub fn prefetch(&self, keys: &[RunKey]) {
        keys.par_iter().for_each(|&k| {
            let _ = self.ensure(k);
        });
    }

    fn ensure(&self, key: RunKey) -> std::result::Result<(), String> {
        match key {
            RunKey::Cap1d => self.cap_1d().map(drop),
            RunKey::Cap2d => self.cap_2d().map(drop),
            RunKey::PlapControl => self.plap_control().map(drop),
            RunKey::Hj15 => self.hj(1.5).map(drop),
            RunKey::Hj2 => self.hj(2.0).map(drop),
            RunKey::Wait512 => self.waiting(512).map(drop),
            RunKey::Wait1024 => self.waiting(1024).map(drop),
            RunKey::Moving => self.moving().map(drop),
            RunKey::Sweep => self.sweep().map(drop),
        }
    }

    pub fn cap_1d(&self) -> std::result::Result<&Run, String> {
        cached(&self.cap_1d, || run_config(&cap_1d_config()))
    }

    pub fn cap_2d(&self) -> std::result::Result<&Run, String> {
        cached(&self.cap_2d, || run_config(&cap_2d_config()))
    }

    pub fn plap_control(&self) -> std::result::Result<&Run, String> {
        cached(&self.plap, || run_config(&plap_control_config()))
    }

    /// Hamilton-Jacobi run from `V_inf` of `(-1, 1)` at `t = 1`; `q` is 1.5 or 2.
    pub fn hj(&self, q: f64) -> std::result::Result<&Run, String> {
        if q == 2.0 {
            cached(&self.hj2, || run_hj(2.0))
        } else {
            cached(&self.hj15, || run_hj(1.5))
        }
    }

    /// Compliant waiting-time run at `(3, 1.5, 1)` with 512 or 1024 cells.
    pub fn waiting(&self, cells: usize) -> std::result::Result<&(WaitingTimeReport, Run), String> {
        if cells == 1024 {
            cached(&self.wait1024, || run_waiting(1.5, 1024, WaitingMode::Compliant))
        } else {
            cached(&self.wait512, || run_waiting(1.5, 512, WaitingMode::Compliant))
        }
    }

    /// Violating run at `(3, 1.4, 1)` with amplitude `50 a0`, 512 cells.
    pub fn moving(&self) -> std::result::Result<&(WaitingTimeReport, Run), String> {
        cached(&self.moving, || run_waiting(1.4, 512, WaitingMode::Violating { factor: MOVING_FACTOR }))
    }

    pub fn sweep(&self) -> std::result::Result<&SweepReport, String> {
        cached(&self.sweep, || amplitude_sweep(&p3(1.4, 1), &waiting_setup(512), &SWEEP_FACTORS).map_err(|e| e.to_string()))
    }
}

/// Outcome of one suite: one verdict per criterion plus the measurements behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: String,
    pub verdicts: Vec<Verdict>,
    pub reports: Vec<ExperimentReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs a named suite.
pub fn run_suite(name: &str, lab: &Lab) -> Result<SuiteReport> {
    let criteria = suite_criteria(name)?;
    let mut keys: Vec<RunKey> = criteria.iter().flat_map(|&c| runs_for(c)).collect();
    keys.sort();
    keys.dedup();
    lab.prefetch(&keys);
    let reports: Vec<ExperimentReport> = criteria.iter().map(|&c| evaluate(c, lab)).collect();
    let verdicts = reports.iter().map(summary_verdict).collect();
    Ok(SuiteReport { suite: name.to_string(), verdicts, reports })
}

/// Folds the verdicts of one criterion's report into a single verdict.
pub fn summary_verdict(r: &ExperimentReport) -> Verdict {
    let criterion = r.verdicts.first().map(|v| v.criterion).unwrap_or(0);
    let detail = r
        .verdicts
        .iter()
        .map(|v| if v.name == criterion_name(criterion) { v.detail.clone() } else { format!("{}: {}", v.name, v.detail) })
        .collect::<Vec<_>>()
        .join("; ");
    Verdict { criterion, name: criterion_name(criterion).to_string(), passed: r.passed(), detail }
}

/// Evaluates one criterion. A run that fails to produce data yields a failing verdict.
pub fn evaluate(criterion: u8, lab: &Lab) -> ExperimentReport {
    let name = format!("criterion-{criterion}");
    let result = match criterion {
        1 => self_similar_fidelity(lab),
        2 => decay_sandwich(lab),
        3 => localization(lab),
        4 => monotone_positivity(lab),
        5 => convergence(lab),
        6 => waiting_time(lab),
        7 => moving_support(lab),
        8 => barrier_checks(),
        9 => distance_oracle(200, RANDOM_SEED),
        10 => eikonal(),
        11 => determinism_and_comparison(50, RANDOM_SEED),
        _ => Err(format!("no criterion {criterion}")),
    };
    result.unwrap_or_else(|e| {
        let mut r = ExperimentReport::new(name, "");
        r.verdict(criterion, criterion_name(criterion), false, format!("error: {e}"));
        r
    })
}

type Check = std::result::Result<ExperimentReport, String>;

fn complete(run: &Run) -> std::result::Result<(), String> {
    match &run.abort {
        Some(a) => Err(format!("run aborted: {a}")),
        None => Ok(()),
    }
}

/// Per-decade growth of the relative error of an hj-only run against the exact
/// self-similar solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FidelityReport {
    pub q: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// Largest error in each decade minus the error at its start.
    pub decade_growth: Vec<f64>,
}

pub const FIDELITY_PER_DECADE: f64 = 0.02;

pub fn fidelity(run: &Run) -> FidelityReport {
    let tr = &run.trajectory;
    let q = tr.params.q();
    let v0 = &tr.snapshots[0];
    let vmax = v0.max();
    let mut times = Vec::new();
    let mut errors = Vec::new();
    for k in 0..tr.len() {
        let t = tr.times[k];
        let exact = v0.scaled(t.powf(-1.0 / (q - 1.0)));
        times.push(t);
        errors.push(tr.snapshots[k].sup_distance(&exact) / (vmax * t.powf(-1.0 / (q - 1.0))));
    }
    let t_start = times[0];
    let decades = (times[times.len() - 1] / t_start).log10().round() as i32;
    let decade_growth = (0..decades)
        .map(|d| {
            let (lo, hi) = (t_start * 10f64.powi(d), t_start * 10f64.powi(d + 1));
            let start = times.iter().position(|&t| t >= lo * (1.0 - 1e-12)).unwrap_or(0);
            let top = times
                .iter()
                .zip(&errors)
                .filter(|(&t, _)| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12))
                .map(|(_, &e)| e)
                .fold(0.0, f64::max);
            top - errors[start]
        })
        .collect();
    FidelityReport { q, times, errors, decade_growth }
}

fn self_similar_fidelity(lab: &Lab) -> Check {
    let mut r = ExperimentReport::new("self-similar-fidelity", "");
    let mut ok = true;
    let mut detail = Vec::new();
    for q in [1.5, 2.0] {
        let run = lab.hj(q)?;
        complete(run)?;
        let f = fidelity(run);
        let worst = f.decade_growth.iter().cloned().fold(0.0, f64::max);
        ok &= worst <= FIDELITY_PER_DECADE && f.decade_growth.len() == 2;
        detail.push(format!("q={q}: growth per decade {:?}", f.decade_growth.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()));
        r.config_hash = run.config_hash.clone();
        r.metric(&format!("q{q}"), &f);
    }
    r.verdict(1, criterion_name(1), ok, format!("{} (limit {FIDELITY_PER_DECADE})", detail.join(", ")));
    Ok(r)
}

pub const DECAY_SLOPE: f64 = -2.0;
pub const DECAY_SLOPE_TOL: f64 = 0.2;

fn decay_sandwich(lab: &Lab) -> Check {
    let run = lab.cap_1d()?;
    complete(run)?;
    let fit = decay_fit_window(&run.trajectory, NormKind::Linf, 10.0, T_LONG).map_err(|e| e.to_string())?;
    let mut r = ExperimentReport::new("decay-sandwich", &run.config_hash);
    r.metric("linfFit", &fit);
    if let Ok(l1) = decay_fit_window(&run.trajectory, NormKind::L1, 10.0, T_LONG) {
        r.metric("l1Fit", &l1);
    }
    let ok = (fit.exponent - DECAY_SLOPE).abs() <= DECAY_SLOPE_TOL;
    r.verdict(2, criterion_name(2), ok, format!("slope {:.4} over [10, 1000], target -2 +- 0.2", fit.exponent));
    Ok(r)
}

pub const LOCALIZATION_CELLS: f64 = 2.0;
pub const SPREAD_EXPONENT: f64 = 0.25;
pub const SPREAD_TOL: f64 = 0.05;

fn localization(lab: &Lab) -> Check {
    let run = lab.cap_1d()?;
    complete(run)?;
    let loc = localization_check_from(&run.trajectory, 1.0, LOCALIZATION_CELLS);
    let ctrl = lab.plap_control()?;
    complete(ctrl)?;
    let ctrl_loc = localization_check_from(&ctrl.trajectory, 1.0, LOCALIZATION_CELLS);
    let ctrl_conv = convergence_to_vinf(&ctrl.trajectory).map_err(|e| e.to_string())?;
    let tr = &ctrl.trajectory;
    let (ts, rs): (Vec<f64>, Vec<f64>) = tr
        .times
        .iter()
        .zip(&tr.support_radius)
        .filter(|(&t, _)| (10.0..=T_LONG * (1.0 + 1e-12)).contains(&t))
        .map(|(&t, &r)| (t, r))
        .unzip();
    let spread = fit_power_law(&ts, &rs).map_err(|e| e.to_string())?;
    let mut r = ExperimentReport::new("localization", &run.config_hash);
    r.metric("localization", &loc)
        .metric("control", &ctrl_loc)
        .metric("controlSpreadFit", &spread)
        .metric("controlConvergence", &ctrl_conv);
    let control_ok = !ctrl_loc.passes && !ctrl_conv.passes && (spread.exponent - SPREAD_EXPONENT).abs() <= SPREAD_TOL;
    r.verdict(
        3,
        criterion_name(3),
        loc.passes && control_ok,
        format!(
            "drift {:.1} cells (limit 2); control drift {:.1} cells, control profile error {:.3}, spread exponent {:.4} (target 0.25 +- 0.05)",
            loc.drift_cells, ctrl_loc.drift_cells, ctrl_conv.final_error, spread.exponent
        ),
    );
    Ok(r)
}

fn monotone_positivity(lab: &Lab) -> Check {
    let mut r = ExperimentReport::new("monotone-positivity-set", "");
    let mut runs: Vec<(String, bool, usize)> = Vec::new();
    let mut push = |name: &str, run: &Run| {
        let m = monotone_support_check(&run.trajectory);
        runs.push((name.to_string(), m.passes, m.pairs_checked));
    };
    push("cap-1d", lab.cap_1d()?);
    push("cap-2d", lab.cap_2d()?);
    push("waiting-512", &lab.waiting(512)?.1);
    push("waiting-1024", &lab.waiting(1024)?.1);
    push("moving", &lab.moving()?.1);
    for (f, rep) in lab.sweep()?.factors.iter().zip(&lab.sweep()?.reports) {
        runs.push((format!("sweep-{f}"), rep.monotone_support, 0));
    }
    let failed: Vec<&str> = runs.iter().filter(|(_, ok, _)| !ok).map(|(n, _, _)| n.as_str()).collect();
    let summary: BTreeMap<String, bool> = runs.iter().map(|(n, ok, _)| (n.clone(), *ok)).collect();
    r.metric("runs", &summary);
    r.verdict(
        4,
        criterion_name(4),
        failed.is_empty(),
        if failed.is_empty() { format!("{} original-mode runs nested", runs.len()) } else { format!("not nested: {failed:?}") },
    );
    Ok(r)
}

fn convergence(lab: &Lab) -> Check {
    let mut r = ExperimentReport::new("convergence", "");
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, run) in [("1d", lab.cap_1d()?), ("2d", lab.cap_2d()?)] {
        complete(run)?;
        let c = convergence_to_vinf(&run.trajectory).map_err(|e| e.to_string())?;
        ok &= c.passes;
        detail.push(format!(
            "{name}: final {:.4}, decade start {:.4}, max rise {:.4} vs mask uncertainty {:.4}",
            c.final_error, c.window_start_error, c.max_increase, c.mask_uncertainty
        ));
        r.metric(name, &c);
    }
    r.verdict(5, criterion_name(5), ok, format!("{} (limit 0.10)", detail.join("; ")));
    Ok(r)
}

fn waiting_time(lab: &Lab) -> Check {
    let mut r = ExperimentReport::new("waiting-time", "");
    let mut verdicts = Vec::new();
    let mut detail = Vec::new();
    for cells in [512, 1024] {
        let (rep, run) = lab.waiting(cells)?;
        r.config_hash = run.config_hash.clone();
        verdicts.push(rep.passes);
        detail.push(format!(
            "{cells} cells: drift {:.0} cells, max probe {:.3e} vs eps {:.3e}",
            rep.max_endpoint_drift_cells, rep.max_probe_value, rep.eps_pos
        ));
        r.metric(&format!("cells{cells}"), rep);
    }
    let consistent = verdicts.windows(2).all(|w| w[0] == w[1]);
    r.metric("consistent", consistent);
    r.verdict(6, criterion_name(6), consistent && verdicts.iter().all(|&v| v), detail.join("; "));
    Ok(r)
}

fn moving_support(lab: &Lab) -> Check {
    let (rep, run) = lab.moving()?;
    let sweep = lab.sweep()?;
    let mut r = ExperimentReport::new("moving-support", &run.config_hash);
    r.metric("run", rep).metric("sweep", sweep);
    let onsets: Vec<String> = sweep
        .factors
        .iter()
        .zip(&sweep.reports)
        .map(|(f, s)| format!("{f}:{}", s.first_positive_time.map(|t| format!("{t:.2e}")).unwrap_or("never".into())))
        .collect();
    r.verdict(
        7,
        criterion_name(7),
        rep.passes && sweep.monotone_onset,
        format!(
            "probes positive from t={:?}, after onset {}; sweep onsets [{}], monotone {}",
            rep.first_positive_time,
            rep.positive_after_onset,
            onsets.join(", "),
            sweep.monotone_onset
        ),
    );
    Ok(r)
}

/// Subsolution residual tolerance as a multiple of `dx * A`.
pub const SUBSOLUTION_TOL: f64 = 1.0;
pub const HALVING_RANGE: (f64, f64) = (0.35, 0.65);
pub const S1_EXCLUSION: f64 = 0.25;

/// Subsolution residuals of `s_{A_R/2}` on `B(0, 1)` and the S1 stationarity residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BarrierReport {
    pub a_r: f64,
    pub bound_at_a_r: f64,
    /// `(dim, cells, t, residual, tolerance)`.
    pub subsolution: Vec<(usize, usize, f64, f64, f64)>,
    /// `(cells, residual)` for the S1 stationarity check.
    pub stationary: Vec<(usize, f64)>,
    pub stationary_ratios: Vec<f64>,
}

pub fn barrier_report() -> Result<BarrierReport> {
    let params = p3(1.5, 1);
    let a_r = max_amplitude_ar(1.0, &params)?;
    let amplitude = 0.5 * a_r;
    let mut subsolution = Vec::new();
    for (dim, cells) in [(1, 512), (1, 1024), (2, 128), (2, 256)] {
        let p = p3(1.5, dim);
        let grid = Grid::new(dim, 1.25, cells)?;
        for t in [0.0, 1.0, 10.0] {
            let res = subsolution_residual(&p, amplitude, 1.0, grid, t);
            let scale = eval_sa(t, [0.0, 0.0], amplitude, 1.0, 1.5);
            subsolution.push((dim, cells, t, res, SUBSOLUTION_TOL * grid.dx() * scale));
        }
    }
    let mut stationary = Vec::new();
    for cells in [256, 512, 1024] {
        let grid = Grid::new(1, 2.0, cells)?;
        stationary.push((cells, stationary_residual(&params, grid, [0.0, 0.0], S1_EXCLUSION)?));
    }
    let stationary_ratios = stationary.windows(2).map(|w| w[1].1 / w[0].1).collect();
    Ok(BarrierReport { a_r, bound_at_a_r: subsolution_bound(a_r, 1.0, &params), subsolution, stationary, stationary_ratios })
}

fn barrier_checks() -> Check {
    let b = barrier_report().map_err(|e| e.to_string())?;
    let mut r = ExperimentReport::new("barriers", "");
    let sub_ok = b.subsolution.iter().all(|&(_, _, _, res, tol)| res <= tol);
    let worst = b.subsolution.iter().map(|&(_, _, _, res, tol)| res / tol).fold(0.0, f64::max);
    let st_ok = b.stationary_ratios.iter().all(|&x| (HALVING_RANGE.0..=HALVING_RANGE.1).contains(&x));
    let ar_ok = b.a_r > 0.01 && b.a_r < 0.015 && (-1e-10..=0.0).contains(&b.bound_at_a_r);
    r.metric("barriers", &b);
    r.verdict(8, "subsolution", sub_ok, format!("worst residual / (dx A) = {worst:.3}"));
    r.verdict(8, "stationary", st_ok, format!("residual ratios {:?}", b.stationary_ratios));
    r.verdict(8, "amplitude bound", ar_ok, format!("A_R = {:.6}, g(A_R) = {:.2e}", b.a_r, b.bound_at_a_r));
    Ok(r)
}

/// Random mask on a 1D or 2D grid with 8 to 64 cells per axis, never full.
pub fn random_mask(rng: &mut ChaCha8Rng) -> PositivitySet<f64> {
    let dim = rng.gen_range(1..=2);
    let cells = rng.gen_range(8..=64);
    let grid = Grid::new(dim, 1.0, cells).unwrap();
    let density: f64 = rng.gen_range(0.05..0.99);
    let mut mask: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(density)).collect();
    if mask.iter().all(|&m| m) {
        let k = rng.gen_range(0..mask.len());
        mask[k] = false;
    }
    PositivitySet::from_mask(grid, mask, 0.0).unwrap()
}

/// Squared distances in cell units by exhaustive search.
pub fn brute_force_squared(mask: &PositivitySet<f64>) -> Vec<i64> {
    let g = *mask.grid();
    let zeros: Vec<[i64; 2]> = (0..g.len())
        .filter(|&k| !mask.contains(k))
        .map(|k| {
            let [i, j] = g.unflatten(k);
            [i as i64, j as i64]
        })
        .collect();
    (0..g.len())
        .map(|k| {
            let [i, j] = g.unflatten(k);
            let (i, j) = (i as i64, j as i64);
            zeros.iter().map(|&[a, b]| (a - i).pow(2) + (b - j).pow(2)).min().unwrap_or(i64::MAX)
        })
        .collect()
}

fn distance_oracle(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatched = 0;
    let mut largest = 0;
    for _ in 0..count {
        let mask = random_mask(&mut rng);
        largest = largest.max(mask.grid().len());
        let fast = squared_distance_transform(&mask).map_err(|e| e.to_string())?.squared;
        if fast != brute_force_squared(&mask) {
            mismatched += 1;
        }
    }
    let mut r = ExperimentReport::new("distance-oracle", hash_value(&("masks", count, seed)));
    r.metric("masks", count).metric("mismatched", mismatched).metric("largestCells", largest);
    r.verdict(9, criterion_name(9), mismatched == 0, format!("{mismatched} of {count} masks differ"));
    Ok(r)
}

pub const EIKONAL_CELLS_TOL: f64 = 3.0;
pub const EIKONAL_HALVING: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EikonalCase {
    pub dim: usize,
    pub cells: usize,
    pub dx: f64,
    pub max: f64,
    pub mean: f64,
    pub cells_checked: usize,
}

/// Interval and disk masks of radius 1 on `[-2, 2]^N` at two resolutions each.
pub fn eikonal_cases() -> Result<Vec<EikonalCase>> {
    let mut out = Vec::new();
    for (dim, cells) in [(1, 512), (1, 1024), (2, 128), (2, 256)] {
        let grid = Grid::new(dim, 2.0, cells)?;
        let mask = Field::from_fn(grid, |[x, y]: [f64; 2]| if (x * x + y * y).sqrt() < 1.0 { 1.0 } else { 0.0 }).positivity_set(0.0);
        let prof = build_vinf(&mask, 1.5)?;
        let opts = EikonalOptions { boundary_margin: EIKONAL_MARGIN, ridge_margin: 0.0 };
        let res = eikonal_residual(&prof, opts)?;
        out.push(EikonalCase { dim, cells, dx: grid.dx(), max: res.max, mean: res.mean, cells_checked: res.cells });
    }
    Ok(out)
}

fn eikonal() -> Check {
    let cases = eikonal_cases().map_err(|e| e.to_string())?;
    let mut r = ExperimentReport::new("eikonal", "");
    let bound_ok = cases.iter().all(|c| c.max <= EIKONAL_CELLS_TOL * c.dx);
    let halving_ok = cases.chunks(2).all(|w| w[1].max <= 1e-12 || w[1].max <= EIKONAL_HALVING * w[0].max);
    r.metric("cases", &cases);
    let fmt = cases.iter().map(|c| format!("{}D/{}: {:.3e} ({:.2} dx)", c.dim, c.cells, c.max, c.max / c.dx)).collect::<Vec<_>>();
    r.verdict(10, criterion_name(10), bound_ok && halving_ok, format!("{}; halving {halving_ok}", fmt.join(", ")));
    Ok(r)
}

/// Small runs used for the bit-identity check.
pub fn determinism_configs() -> Vec<RunConfig> {
    vec![
        RunConfig::new(p3(1.5, 1), Grid::new(1, 2.0, 256).unwrap(), CAP, Mode::Original, StepControl::until(10.0)),
        RunConfig::new(p3(1.5, 2), Grid::new(2, 2.0, 32).unwrap(), CAP, Mode::Original, StepControl::until(1.0)),
        RunConfig::new(p3(1.5, 1), Grid::new(1, 2.0, 256).unwrap(), CAP, Mode::Rescaled, StepControl::until(10.0)),
    ]
}

fn bits(tr: &Trajectory<f64>) -> Result<(Vec<u8>, Vec<u64>)> {
    let mut series = Vec::new();
    write_series(tr, &mut series)?;
    let snaps = tr.snapshots.iter().flat_map(|s| s.values().iter().map(|v| v.to_bits())).collect();
    Ok((series, snaps))
}

fn random_cap_sum(rng: &mut ChaCha8Rng, grid: Grid<f64>) -> Field<f64> {
    let caps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(0.0..0.1), rng.gen_range(-0.5..0.5), rng.gen_range(0.2..0.8)))
        .collect();
    Field::from_fn(grid, |[x, _]| {
        caps.iter().map(|&(a, c, r)| a * (r * r - (x - c) * (x - c)).max(0.0).powi(2)).sum()
    })
}

/// Largest `max(u - v)` over snapshots of lockstep runs from random ordered pairs `u0 <= v0`.
pub fn comparison_violation(pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(1, 2.0, 32)?;
    let it = Integrator::new(p3(1.5, 1), Mode::Original, StepControl::until(1.0));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let u0 = random_cap_sum(&mut rng, grid);
        let extra = random_cap_sum(&mut rng, grid);
        let v0 = Field::new(grid, u0.values().iter().zip(extra.values()).map(|(a, b)| a + b).collect())?;
        let (trs, abort) = it.run_lockstep(&[u0, v0]);
        if let Some(e) = abort {
            return Err(e);
        }
        for k in 0..trs[0].len() {
            let gap = trs[0].snapshots[k]
                .values()
                .iter()
                .zip(trs[1].snapshots[k].values())
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

pub const COMPARISON_TOL: f64 = 1e-12;

fn determinism_and_comparison(pairs: usize, seed: u64) -> Check {
    let mut r = ExperimentReport::new("determinism-comparison", hash_value(&("pairs", pairs, seed)));
    let mut identical = true;
    for cfg in determinism_configs() {
        let a = run_config(&cfg)?;
        let b = run_config(&cfg)?;
        complete(&a)?;
        identical &= bits(&a.trajectory).map_err(|e| e.to_string())? == bits(&b.trajectory).map_err(|e| e.to_string())?;
    }
    let worst = comparison_violation(pairs, seed).map_err(|e| e.to_string())?;
    r.metric("bitIdentical", identical).metric("worstOrderingGap", worst);
    r.verdict(11, "determinism", identical, format!("repeated runs bit-identical: {identical}"));
    r.verdict(11, "comparison", worst <= COMPARISON_TOL, format!("{pairs} pairs, worst max(u - v) = {worst:.3e}"));
    Ok(r)
}
