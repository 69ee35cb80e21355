//! Checks run on trajectories: power-law decay fits, localization, monotonicity of the
//! positivity set, convergence to the conical profile, and waiting-time runs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::initial::{initial_bump, InitialData};
use crate::params::Params;
use crate::profile::{build_vinf, eikonal_residual, EikonalOptions};
use crate::scalar::Real;
use crate::stepper::{Integrator, Mode, StepControl, Trajectory};

const MIN_FIT_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    L1,
    Linf,
    Lipschitz,
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(NormKind::L1),
            "linf" => Ok(NormKind::Linf),
            "lipschitz" => Ok(NormKind::Lipschitz),
            other => Err(Error::InvalidConfig(format!("unknown norm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitResult {
    /// Log-log slope.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub points: usize,
}

/// Least-squares line through `(ln t, ln y)`.
pub fn fit_power_law(ts: &[f64], ys: &[f64]) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, y)| **t > 0.0 && **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: pts.len(), decades: 0.0 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    Ok(FitResult {
        exponent: slope,
        intercept: my - slope * mx,
        r_squared,
        window: [lo.exp(), hi.exp()],
        points: pts.len(),
    })
}

fn norm_series<T: Real>(traj: &Trajectory<T>, which: NormKind) -> Vec<f64> {
    traj.norms
        .iter()
        .map(|n| match which {
            NormKind::L1 => n.l1,
            NormKind::Linf => n.linf,
            NormKind::Lipschitz => n.lipschitz,
        })
        .map(|v| v.to64())
        .collect()
}

/// Fit over snapshots with `t_min <= t <= t_max`.
pub fn decay_fit_window<T: Real>(traj: &Trajectory<T>, which: NormKind, t_min: f64, t_max: f64) -> Result<FitResult> {
    let ys = norm_series(traj, which);
    let (ts, ys): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .map(|t| t.to64())
        .zip(ys)
        .filter(|(t, _)| *t >= t_min * (1.0 - 1e-12) && *t <= t_max * (1.0 + 1e-12))
        .unzip();
    fit_power_law(&ts, &ys)
}

/// Fit over the final half of the log-time range of the trajectory.
pub fn decay_fit<T: Real>(traj: &Trajectory<T>, which: NormKind) -> Result<FitResult> {
    let positive: Vec<f64> = traj.times.iter().map(|t| t.to64()).filter(|&t| t > 0.0).collect();
    let (first, last) = match (positive.first(), positive.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: 0, decades: 0.0 }),
    };
    let decades = (last / first).log10();
    if decades < 2.0 {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: positive.len(), decades });
    }
    decay_fit_window(traj, which, (first * last).sqrt(), last).map_err(|e| match e {
        Error::InsufficientData { needed, got, .. } => Error::InsufficientData { needed, got, decades },
        e => e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalizationReport {
    pub t_from: f64,
    pub radius_from: f64,
    pub max_radius: f64,
    pub drift_cells: f64,
    pub tolerance_cells: f64,
    pub radii: Vec<[f64; 2]>,
    pub passes: bool,
}

/// Passes when the support radius over `[t_from, t_end]` exceeds the radius at `t_from` by
/// at most `tolerance_cells` cells.
pub fn localization_check_from<T: Real>(traj: &Trajectory<T>, t_from: f64, tolerance_cells: f64) -> LocalizationReport {
    let dx = traj.snapshots.first().map(|f| f.grid().dx().to64()).unwrap_or(1.0);
    let start = traj.index_at_or_after(T::lit(t_from)).unwrap_or(traj.len());
    let radii: Vec<[f64; 2]> =
        (start..traj.len()).map(|k| [traj.times[k].to64(), traj.support_radius[k].to64()]).collect();
    let radius_from = radii.first().map(|r| r[1]).unwrap_or(0.0);
    let max_radius = radii.iter().map(|r| r[1]).fold(radius_from, f64::max);
    let drift_cells = (max_radius - radius_from) / dx;
    LocalizationReport {
        t_from,
        radius_from,
        max_radius,
        drift_cells,
        tolerance_cells,
        radii,
        passes: drift_cells <= tolerance_cells + 1e-9,
    }
}

pub fn localization_check<T: Real>(traj: &Trajectory<T>) -> LocalizationReport {
    localization_check_from(traj, 1.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportViolation {
    pub snapshot: usize,
    pub time: f64,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonotoneSupportReport {
    pub pairs_checked: usize,
    pub violations: Vec<SupportViolation>,
    /// Pairs whose masks are identical.
    pub equal_pairs: usize,
    pub passes: bool,
}

/// Checks `P(t_i)` minus a one-cell erosion is contained in `P(t_{i+1})` for consecutive
/// snapshots.
pub fn monotone_support_check<T: Real>(traj: &Trajectory<T>) -> MonotoneSupportReport {
    let sets: Vec<_> = (0..traj.len()).map(|k| traj.positivity_set(k)).collect();
    let mut report = MonotoneSupportReport { pairs_checked: 0, violations: Vec::new(), equal_pairs: 0, passes: true };
    for (k, w) in sets.windows(2).enumerate() {
        report.pairs_checked += 1;
        if w[0].mask() == w[1].mask() {
            report.equal_pairs += 1;
        }
        let missing = w[0].eroded().missing_from(&w[1]);
        if !missing.is_empty() {
            report.passes = false;
            report.violations.push(SupportViolation { snapshot: k + 1, time: traj.times[k + 1].to64(), cells: missing });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    /// `||t^{1/(q-1)} u(t) - Vinf|| / ||Vinf||` per snapshot with `t > 0`.
    pub errors: Vec<f64>,
    pub vinf_max: f64,
    pub final_error: f64,
    /// Error at the first snapshot of the final decade `[t_end / 10, t_end]`.
    pub window_start_error: f64,
    /// Largest rise of the error above its running minimum within the final decade.
    pub max_increase: f64,
    /// Relative change of `Vinf` when the final mask loses its outer cell layer.
    pub mask_uncertainty: f64,
    pub eventually_decreasing: bool,
    pub tolerance: f64,
    pub passes: bool,
}

/// Builds `Vinf` from the final positivity set and measures the relative sup distance of
/// `t^{1/(q-1)} u(t)` to it. In rescaled mode the snapshot `v` is converted through
/// `t^{1/(q-1)} u = (t / (1 + (q-1) t))^{1/(q-1)} v`.
///
/// The error counts as eventually decreasing when, over the final decade of snapshots, it
/// ends below its starting value and never rises above its running minimum by more than
/// the one-cell mask uncertainty.
pub fn convergence_to_vinf<T: Real>(traj: &Trajectory<T>) -> Result<ConvergenceReport> {
    convergence_to_vinf_with(traj, 0.10)
}

pub fn convergence_to_vinf_with<T: Real>(traj: &Trajectory<T>, tolerance: f64) -> Result<ConvergenceReport> {
    let last = traj.len().checked_sub(1).ok_or(Error::EmptyMask)?;
    let mask = traj.positivity_set(last);
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let q = traj.params.q();
    let profile = build_vinf(&mask, q)?;
    let vinf = profile.field();
    let vmax = vinf.max();
    let eroded = mask.eroded();
    let mask_uncertainty = if eroded.is_empty() {
        1.0
    } else {
        (build_vinf(&eroded, q)?.field().sup_distance(&vinf) / vmax).to64()
    };
    let expo = T::one() / (q - T::one());
    let mut times = Vec::new();
    let mut errors = Vec::new();
    for k in 0..traj.len() {
        let t = traj.times[k];
        if !(t > T::zero()) {
            continue;
        }
        let factor = match traj.mode {
            Mode::Rescaled => (t / (T::one() + (q - T::one()) * t)).powf(expo),
            _ => t.powf(expo),
        };
        times.push(t.to64());
        errors.push((traj.snapshots[k].scaled(factor).sup_distance(&vinf) / vmax).to64());
    }
    if errors.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0, decades: 0.0 });
    }
    let final_error = *errors.last().unwrap();
    let t_end = times[times.len() - 1];
    let start = times.iter().position(|&t| t >= t_end / 10.0 * (1.0 - 1e-12)).unwrap_or(times.len() - 1);
    let window_start_error = errors[start];
    let mut running_min = f64::INFINITY;
    let mut max_increase: f64 = 0.0;
    for &e in &errors[start..] {
        running_min = running_min.min(e);
        max_increase = max_increase.max(e - running_min);
    }
    let eventually_decreasing =
        times.len() - start >= 2 && final_error <= window_start_error && max_increase <= mask_uncertainty;
    Ok(ConvergenceReport {
        times,
        errors,
        vinf_max: vmax.to64(),
        final_error,
        window_start_error,
        max_increase,
        mask_uncertainty,
        eventually_decreasing,
        tolerance,
        passes: eventually_decreasing && final_error <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WaitingMode {
    /// `min(a0 d^beta, a0 delta^beta)` with `d` the distance to the complement of the
    /// initial support.
    Compliant,
    /// Same shape with amplitude `factor * a0`.
    Violating { factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WaitingTimeSetup {
    pub delta: f64,
    /// Radius of the initial support `B(0, support)`; its rim holds the points `x0`.
    pub support: f64,
    pub half_width: f64,
    pub cells: usize,
    pub t_end: f64,
    /// Positivity is monitored from this time on in violating runs.
    pub t_onset: f64,
    pub snapshots_per_decade: u32,
    pub eps_rel: f64,
}

impl Default for WaitingTimeSetup {
    fn default() -> Self {
        WaitingTimeSetup {
            delta: 0.5,
            support: 1.0,
            half_width: 2.0,
            cells: 512,
            t_end: 100.0,
            t_onset: 1e-2,
            snapshots_per_decade: 8,
            eps_rel: crate::stepper::DEFAULT_EPS_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WaitingTimeReport {
    pub mode: WaitingMode,
    pub p: f64,
    pub q: f64,
    pub amplitude: f64,
    /// Exponent of the power profile; differs from the threshold exponent on the
    /// `q >= q2` route.
    pub exponent: f64,
    pub cells: usize,
    pub initial_endpoints: [f64; 2],
    pub max_endpoint_drift_cells: f64,
    /// Cells just outside the initial support on either side.
    pub probe_cells: [usize; 2],
    pub max_probe_value: f64,
    pub eps_pos: f64,
    /// First sampled time at which either probe cell is positive.
    pub first_positive_time: Option<f64>,
    /// Whether both probes stay inside the positivity set at every sampled `t >= t_onset`.
    pub positive_after_onset: bool,
    /// Consecutive positivity sets nested up to one cell.
    pub monotone_support: bool,
    pub passes: bool,
    pub aborted: Option<String>,
}

fn waiting_initial(params: &Params<f64>, setup: &WaitingTimeSetup, mode: WaitingMode) -> Result<(InitialData, f64, f64)> {
    params.require_absorption_dominated()?;
    if params.dim() != 1 {
        return Err(Error::InvalidConfig("waiting-time runs are one-dimensional".into()));
    }
    if !(setup.delta > 0.0) || !(setup.support > 0.0) {
        return Err(Error::InvalidConfig("delta and support radius must be positive".into()));
    }
    if setup.support + setup.delta > setup.half_width {
        return Err(Error::InvalidConfig(format!(
            "ball of radius delta = {} around the rim leaves the domain (half width {})",
            setup.delta, setup.half_width
        )));
    }
    let c = params.derive();
    let a0 = c.a0.expect("absorption dominated");
    let beta = c.wait_exp.expect("absorption dominated");
    match mode {
        WaitingMode::Compliant => {
            let data = InitialData::PowerDist {
                amplitude: a0,
                exponent: beta,
                radius: setup.support,
                height: Some(a0 * setup.delta.powf(beta)),
            };
            Ok((data, a0, beta))
        }
        WaitingMode::Violating { factor } => {
            if !(factor > 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "violating data needs amplitude above a0, got factor {factor}"
                )));
            }
            let amplitude = factor * a0;
            let exponent = if params.classify().below_q2 {
                beta
            } else {
                let r = auxiliary_exponent(params);
                (params.p() - r) / (params.p() - 1.0 - r)
            };
            let data = InitialData::PowerDist {
                amplitude,
                exponent,
                radius: setup.support,
                height: Some(amplitude * setup.delta.powf(exponent)),
            };
            Ok((data, amplitude, exponent))
        }
    }
}

/// Exponent `r` in `(1, q2)` used for the power profile when `q >= q2`: the midpoint.
pub fn auxiliary_exponent(params: &Params<f64>) -> f64 {
    0.5 * (1.0 + params.derive().q2)
}

/// Runs the waiting-time experiment at one resolution. Positivity at the probe cells is
/// judged with the same renormalized threshold as the positivity set.
pub fn waiting_time_experiment(params: &Params<f64>, setup: &WaitingTimeSetup, mode: WaitingMode) -> Result<WaitingTimeReport> {
    waiting_time_run(params, setup, mode).map(|(report, _)| report)
}

/// Same as [`waiting_time_experiment`], also handing back the trajectory.
pub fn waiting_time_run(
    params: &Params<f64>,
    setup: &WaitingTimeSetup,
    mode: WaitingMode,
) -> Result<(WaitingTimeReport, Trajectory<f64>)> {
    let (data, amplitude, exponent) = waiting_initial(params, setup, mode)?;
    let grid = Grid::new(1, setup.half_width, setup.cells)?;
    let u0 = initial_bump(&data, grid)?;
    let control = StepControl {
        t_end: setup.t_end,
        snapshots_per_decade: setup.snapshots_per_decade,
        ..StepControl::default()
    };
    let out = Integrator::new(*params, Mode::Original, control).with_eps_rel(setup.eps_rel).run(u0);
    let traj = out.trajectory;
    if traj.is_empty() {
        return Err(out.abort.unwrap_or(Error::InvalidConfig("run produced no snapshots".into())));
    }
    let dx = grid.dx();
    let initial_set = traj.positivity_set(0);
    let (lo, hi) = initial_set.endpoints().ok_or(Error::EmptyMask)?;
    let probes = [lo.checked_sub(1).ok_or(Error::InvalidConfig("support touches the boundary".into()))?, hi + 1];
    if probes[1] >= grid.cells() {
        return Err(Error::InvalidConfig("support touches the boundary".into()));
    }
    let x = |i: usize| grid.axis_coord(i);
    let mut drift: f64 = 0.0;
    let mut max_probe: f64 = 0.0;
    let mut first_positive = None;
    let mut positive_after_onset = true;
    let mut onset_samples = 0usize;
    for k in 0..traj.len() {
        let set = traj.positivity_set(k);
        let v = traj.renormalized(k);
        if let Some((a, b)) = set.endpoints() {
            drift = drift.max((x(lo) - x(a)).abs() / dx).max((x(b) - x(hi)).abs() / dx);
        }
        let pv = v.get(probes[0]).max(v.get(probes[1]));
        max_probe = max_probe.max(pv);
        let both = set.contains(probes[0]) && set.contains(probes[1]);
        if (set.contains(probes[0]) || set.contains(probes[1])) && first_positive.is_none() {
            first_positive = Some(traj.times[k]);
        }
        if traj.times[k] >= setup.t_onset * (1.0 - 1e-12) {
            onset_samples += 1;
            positive_after_onset &= both;
        }
    }
    let complete = out.abort.is_none();
    let passes = complete
        && match mode {
            WaitingMode::Compliant => drift <= 1.0 + 1e-9 && max_probe <= traj.eps_pos,
            WaitingMode::Violating { .. } => onset_samples > 0 && positive_after_onset,
        };
    let report = WaitingTimeReport {
        mode,
        p: params.p(),
        q: params.q(),
        amplitude,
        exponent,
        cells: setup.cells,
        initial_endpoints: [x(lo), x(hi)],
        max_endpoint_drift_cells: drift,
        probe_cells: probes,
        max_probe_value: max_probe,
        eps_pos: traj.eps_pos,
        first_positive_time: first_positive,
        positive_after_onset,
        monotone_support: monotone_support_check(&traj).passes,
        passes,
        aborted: out.abort.map(|e| e.to_string()),
    };
    Ok((report, traj))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepReport {
    pub factors: Vec<f64>,
    pub reports: Vec<WaitingTimeReport>,
    /// Smallest tested factor whose run moved the boundary.
    pub smallest_moving_factor: Option<f64>,
    pub monotone_onset: bool,
}

/// Sweeps the amplitude factor upward. The onset is monotone when a larger amplitude
/// never yields a later first positive time at the probes.
pub fn amplitude_sweep(params: &Params<f64>, setup: &WaitingTimeSetup, factors: &[f64]) -> Result<SweepReport> {
    use rayon::prelude::*;
    let mut factors = factors.to_vec();
    factors.sort_by(|a, b| a.total_cmp(b));
    let reports: Vec<WaitingTimeReport> = factors
        .par_iter()
        .map(|&f| waiting_time_experiment(params, setup, WaitingMode::Violating { factor: f }))
        .collect::<Result<_>>()?;
    let onset = |r: &WaitingTimeReport| r.first_positive_time.unwrap_or(f64::INFINITY);
    let monotone_onset = reports.windows(2).all(|w| onset(&w[1]) <= onset(&w[0]));
    let smallest_moving_factor =
        factors.iter().zip(&reports).find(|(_, r)| r.first_positive_time.is_some()).map(|(f, _)| *f);
    Ok(SweepReport { factors, reports, smallest_moving_factor, monotone_onset })
}

/// Writes one CSV row per sweep run.
pub fn write_sweep_csv<W: Write>(sweep: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "q", "factor", "amplitude", "exponent", "cells", "firstPositiveTime", "positiveAfterOnset"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for (f, r) in sweep.factors.iter().zip(&sweep.reports) {
        w.write_record([
            r.p.to_string(),
            r.q.to_string(),
            f.to_string(),
            r.amplitude.to_string(),
            r.exponent.to_string(),
            r.cells.to_string(),
            r.first_positive_time.map(|t| t.to_string()).unwrap_or_default(),
            r.positive_after_onset.to_string(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, config_hash: impl Into<String>) -> Self {
        ExperimentReport { name: name.into(), config_hash: config_hash.into(), metrics: BTreeMap::new(), verdicts: Vec::new() }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn verdict(&mut self, criterion: u8, name: &str, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.verdicts.push(Verdict { criterion, name: name.to_string(), passed, detail: detail.into() });
        self
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

/// Physical margin kept from the complement in trajectory eikonal checks.
pub const EIKONAL_MARGIN: f64 = 0.25;

/// Evaluates one of [`crate::config::EXPERIMENTS`] on a trajectory. Each report carries a
/// verdict tagged with the acceptance criterion it mirrors.
pub fn trajectory_experiment(name: &str, traj: &Trajectory<f64>, config_hash: &str) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new(name, config_hash);
    match name {
        "decay" => {
            let fit = decay_fit(traj, NormKind::Linf)?;
            let target = -1.0 / (traj.params.q() - 1.0);
            let ok = (fit.exponent - target).abs() <= 0.2;
            r.metric("linfFit", &fit);
            r.verdict(2, "decay sandwich", ok, format!("slope {:.4}, target {target:.4} +- 0.2", fit.exponent));
        }
        "localization" => {
            let loc = localization_check(traj);
            r.metric("localization", &loc);
            r.verdict(3, "localization", loc.passes, format!("drift {:.1} cells (limit {})", loc.drift_cells, loc.tolerance_cells));
        }
        "monotone-support" => {
            let m = monotone_support_check(traj);
            r.metric("monotoneSupport", &m);
            r.verdict(4, "monotone positivity set", m.passes, format!("{} violations", m.violations.len()));
        }
        "convergence" => {
            let c = convergence_to_vinf(traj)?;
            r.metric("convergence", &c);
            r.verdict(
                5,
                "convergence to the conical profile",
                c.passes,
                format!("final {:.4}, eventually decreasing {}", c.final_error, c.eventually_decreasing),
            );
        }
        "eikonal" => {
            let last = traj.len().checked_sub(1).ok_or(Error::EmptyMask)?;
            let prof = build_vinf(&traj.positivity_set(last), traj.params.q())?;
            let opts = EikonalOptions { boundary_margin: EIKONAL_MARGIN, ridge_margin: 0.0 };
            let res = eikonal_residual(&prof, opts)?;
            let dx = prof.grid().dx();
            r.metric("max", res.max).metric("mean", res.mean).metric("cells", res.cells).metric("dx", dx);
            r.verdict(10, "eikonal residual", res.max <= 3.0 * dx, format!("max {:.3e} = {:.2} dx", res.max, res.max / dx));
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown experiment {other:?}; expected one of {:?}",
                crate::config::EXPERIMENTS
            )))
        }
    }
    Ok(r)
}

/// Reverses the snapshot order of a trajectory, keeping each snapshot's positivity set.
/// Snapshots are stored renormalized under a unit-factor mode.
pub fn time_reversed<T: Real>(traj: &Trajectory<T>) -> Trajectory<T> {
    let mut r = traj.clone();
    r.snapshots.reverse();
    r.norms.reverse();
    r.support_radius.reverse();
    let renorm: Vec<Field<T>> = (0..traj.len()).rev().map(|k| traj.renormalized(k)).collect();
    r.snapshots = renorm;
    r.mode = Mode::PlapOnly;
    r
}
