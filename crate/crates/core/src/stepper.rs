//! Explicit adaptive time integration of the original and rescaled equations, the
//! Hamilton-Jacobi and pure p-Laplacian flows, and the change to self-similar variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Norms, PositivitySet};
use crate::operators::{self, PLaplacianKind, Rhs, Terms};
use crate::params::Params;
use crate::scalar::Real;

/// Guards the CFL quotients against vanishing coefficients.
pub const TINY: f64 = 1e-30;
/// Relative floor below which round-off negatives are clamped to zero.
pub const CLAMP_FLOOR: f64 = 1e-14;
/// Default positivity threshold relative to the initial maximum.
pub const DEFAULT_EPS_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `u_t = Delta_p u - |grad u|^q`.
    #[default]
    Original,
    /// `v_tau = e^{-(p-1-q) tau} Delta_p v - |grad v|^q + v`, integrated in `tau`.
    Rescaled,
    /// `u_t = -|grad u|^q`.
    HjOnly,
    /// `u_t = Delta_p u`.
    PlapOnly,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Original => "original",
            Mode::Rescaled => "rescaled",
            Mode::HjOnly => "hj-only",
            Mode::PlapOnly => "plap-only",
        }
    }

    /// Factor turning a physical solution at time `t` into the field on which positivity
    /// is judged. It is the self-similar factor `(1 + (q-1) t)^{1/(q-1)}` for every flow
    /// with absorption and `1` for the pure p-Laplacian flow.
    pub fn positivity_factor<T: Real>(&self, t: T, q: T) -> T {
        match self {
            Mode::PlapOnly => T::one(),
            _ => self_similar_factor(t, q),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Mode::Original),
            "rescaled" => Ok(Mode::Rescaled),
            "hj-only" => Ok(Mode::HjOnly),
            "plap-only" => Ok(Mode::PlapOnly),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct StepControl {
    pub safety: f64,
    pub dt_min: f64,
    pub dt_max: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    /// First snapshot after the initial one; snapshots then follow geometrically.
    pub first_snapshot: f64,
    pub snapshots_per_decade: u32,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            safety: 0.4,
            dt_min: 1e-14,
            dt_max: None,
            t_start: 0.0,
            t_end: 1.0,
            first_snapshot: 1e-3,
            snapshots_per_decade: 8,
        }
    }
}

impl StepControl {
    pub fn until(t_end: f64) -> Self {
        StepControl { t_end, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad(format!("safety {} not in (0, 1)", self.safety));
        }
        if !(self.dt_min > 0.0) {
            return bad("dtMin must be positive".into());
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt_min) {
                return bad("dtMax must be at least dtMin".into());
            }
        }
        if !(self.t_start >= 0.0) || !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return bad(format!("need 0 <= tStart < tEnd, got [{}, {}]", self.t_start, self.t_end));
        }
        if !(self.first_snapshot > 0.0) || self.snapshots_per_decade == 0 {
            return bad("firstSnapshot and snapshotsPerDecade must be positive".into());
        }
        Ok(())
    }

    /// Output times: `t_start`, then `first_snapshot * 10^{k/m}` inside `(t_start, t_end)`,
    /// then `t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = vec![self.t_start];
        let start_exp = self.first_snapshot.log10();
        let m = self.snapshots_per_decade as f64;
        for k in 0.. {
            let t = 10f64.powf(start_exp + k as f64 / m);
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            if t > self.t_start * (1.0 + 1e-12) {
                times.push(t);
            }
        }
        times.push(self.t_end);
        times
    }
}

/// `tau = ln(1 + (q-1) t)/(q-1)`.
pub fn time_map<T: Real>(t: T, q: T) -> T {
    let qm1 = q - T::one();
    (qm1 * t).ln_1p() / qm1
}

/// `t = (e^{(q-1) tau} - 1)/(q-1)`.
pub fn time_unmap<T: Real>(tau: T, q: T) -> T {
    let qm1 = q - T::one();
    (qm1 * tau).exp_m1() / qm1
}

/// `(1 + (q-1) t)^{1/(q-1)}`.
pub fn self_similar_factor<T: Real>(t: T, q: T) -> T {
    let qm1 = q - T::one();
    (T::one() + qm1 * t).powf(T::one() / qm1)
}

/// `v = (1 + (q-1) t)^{1/(q-1)} u`.
pub fn rescale_field<T: Real>(u: &Field<T>, t: T, q: T) -> Field<T> {
    u.scaled(self_similar_factor(t, q))
}

/// Inverse of [`rescale_field`].
pub fn unscale_field<T: Real>(v: &Field<T>, t: T, q: T) -> Field<T> {
    v.scaled(T::one() / self_similar_factor(t, q))
}

/// Time series and snapshots of one run.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub params: Params<T>,
    pub mode: Mode,
    /// Physical times.
    pub times: Vec<T>,
    /// Self-similar times `tau(t)`.
    pub taus: Vec<T>,
    /// The evolved field: `u` for time-`t` modes, `v` in rescaled mode.
    pub snapshots: Vec<Field<T>>,
    pub norms: Vec<Norms<T>>,
    pub support_radius: Vec<T>,
    /// Stable step size proposed just before each snapshot (zero for the initial one).
    pub dts: Vec<T>,
    /// Cumulative number of clamped round-off negatives.
    pub clamp_counts: Vec<usize>,
    /// Absolute positivity threshold.
    pub eps_pos: T,
    pub initial_linf: T,
    pub steps: usize,
}

impl<T: Real> Trajectory<T> {
    /// Rebuilds a trajectory from stored snapshots; norms and support radii are recomputed,
    /// step sizes and clamp counts are unknown and left at zero.
    pub fn from_snapshots(
        params: Params<T>,
        mode: Mode,
        times: Vec<T>,
        snapshots: Vec<Field<T>>,
        eps_rel: f64,
        initial_linf: T,
    ) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        let q = params.q();
        let mut tr = Trajectory {
            params,
            mode,
            taus: times.iter().map(|&t| time_map(t, q)).collect(),
            norms: snapshots.iter().map(|f| f.norms()).collect(),
            support_radius: Vec::new(),
            dts: vec![T::zero(); times.len()],
            clamp_counts: vec![0; times.len()],
            eps_pos: T::lit(eps_rel) * initial_linf,
            initial_linf,
            steps: 0,
            times,
            snapshots,
        };
        tr.support_radius = (0..tr.len()).map(|k| tr.positivity_set(k).support_radius()).collect();
        Ok(tr)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Field<T> {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    /// Snapshot `k` as the physical solution `u(t_k)`.
    pub fn physical(&self, k: usize) -> Field<T> {
        match self.mode {
            Mode::Rescaled => unscale_field(&self.snapshots[k], self.times[k], self.params.q()),
            _ => self.snapshots[k].clone(),
        }
    }

    /// Snapshot `k` multiplied by the positivity factor of the mode.
    pub fn renormalized(&self, k: usize) -> Field<T> {
        match self.mode {
            Mode::Rescaled => self.snapshots[k].clone(),
            m => self.snapshots[k].scaled(m.positivity_factor(self.times[k], self.params.q())),
        }
    }

    pub fn positivity_set(&self, k: usize) -> PositivitySet<T> {
        self.renormalized(k).positivity_set(self.eps_pos)
    }

    /// Index of the first snapshot at or after `t`.
    pub fn index_at_or_after(&self, t: T) -> Option<usize> {
        self.times.iter().position(|&s| s >= t * (T::one() - T::lit(1e-12)))
    }
}

/// Result of a run that may have aborted part-way; the trajectory holds every snapshot
/// reached before the abort.
#[derive(Debug)]
pub struct RunOutcome<T> {
    pub trajectory: Trajectory<T>,
    pub abort: Option<Error>,
}

impl<T: Real> RunOutcome<T> {
    pub fn into_result(self) -> Result<Trajectory<T>> {
        match self.abort {
            None => Ok(self.trajectory),
            Some(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Integrator<T> {
    pub params: Params<T>,
    pub mode: Mode,
    pub control: StepControl,
    pub laplacian: PLaplacianKind,
    /// Positivity threshold relative to the initial maximum.
    pub eps_rel: f64,
    /// Abort when the boundary layer becomes positive.
    pub check_boundary: bool,
}

impl<T: Real> Integrator<T> {
    pub fn new(params: Params<T>, mode: Mode, control: StepControl) -> Self {
        Integrator {
            params,
            mode,
            control,
            laplacian: PLaplacianKind::AxisSplit,
            eps_rel: DEFAULT_EPS_REL,
            check_boundary: true,
        }
    }

    pub fn with_eps_rel(mut self, eps_rel: f64) -> Self {
        self.eps_rel = eps_rel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        if self.mode == Mode::Rescaled {
            self.params.require_absorption_dominated()?;
        }
        if !(self.eps_rel >= 0.0) {
            return Err(Error::InvalidConfig("positivity threshold must be non-negative".into()));
        }
        Ok(())
    }

    fn terms(&self, clock: T) -> Terms<T> {
        match self.mode {
            Mode::Original => Terms::original(),
            Mode::Rescaled => Terms::rescaled(&self.params, clock),
            Mode::HjOnly => Terms::hamilton_jacobi(),
            Mode::PlapOnly => Terms::p_laplacian_only(),
        }
    }

    /// Right-hand side at the integration clock (`t`, or `tau` in rescaled mode).
    pub fn rhs(&self, f: &Field<T>, clock: T) -> Rhs<T> {
        operators::rhs(f, &self.params, self.terms(clock), self.laplacian)
    }

    fn to_clock(&self, t: f64) -> T {
        let t = T::lit(t);
        match self.mode {
            Mode::Rescaled => time_map(t, self.params.q()),
            _ => t,
        }
    }

    fn time_of_clock(&self, clock: T) -> T {
        match self.mode {
            Mode::Rescaled => time_unmap(clock, self.params.q()),
            _ => clock,
        }
    }

    /// Advances every field in lockstep with a common step and returns one trajectory
    /// per field. A shared step keeps the discrete comparison principle exact between
    /// runs.
    pub fn run_lockstep(&self, initial: &[Field<T>]) -> (Vec<Trajectory<T>>, Option<Error>) {
        assert!(!initial.is_empty(), "lockstep run needs at least one field");
        if let Err(e) = self.validate() {
            return (Vec::new(), Some(e));
        }
        let q = self.params.q();
        let times = self.control.snapshot_times();
        let safety = T::lit(self.control.safety);
        let dt_min = T::lit(self.control.dt_min);
        let dt_max = self.control.dt_max.map(T::lit);
        let mut state: Vec<Field<T>> = initial.to_vec();
        let scales: Vec<T> = state.iter().map(|f| f.max()).collect();
        let mut trajs: Vec<Trajectory<T>> = scales
            .iter()
            .map(|&s| Trajectory {
                params: self.params,
                mode: self.mode,
                times: Vec::new(),
                taus: Vec::new(),
                snapshots: Vec::new(),
                norms: Vec::new(),
                support_radius: Vec::new(),
                dts: Vec::new(),
                clamp_counts: Vec::new(),
                eps_pos: T::lit(self.eps_rel) * s,
                initial_linf: s,
                steps: 0,
            })
            .collect();
        let mut clamps = vec![0usize; state.len()];
        let mut clock = self.to_clock(times[0]);
        let mut last_dt = T::zero();
        let mut steps = 0usize;

        let record = |trajs: &mut Vec<Trajectory<T>>, state: &[Field<T>], clock: T, dt: T, clamps: &[usize], steps: usize| {
            let t = self.time_of_clock(clock);
            for (k, tr) in trajs.iter_mut().enumerate() {
                let f = &state[k];
                let renorm = match self.mode {
                    Mode::Rescaled => f.clone(),
                    m => f.scaled(m.positivity_factor(t, q)),
                };
                tr.times.push(t);
                tr.taus.push(match self.mode {
                    Mode::Rescaled => clock,
                    _ => time_map(t, q),
                });
                tr.norms.push(f.norms());
                tr.support_radius.push(renorm.positivity_set(tr.eps_pos).support_radius());
                tr.snapshots.push(f.clone());
                tr.dts.push(dt);
                tr.clamp_counts.push(clamps[k]);
                tr.steps = steps;
            }
        };
        record(&mut trajs, &state, clock, T::zero(), &clamps, 0);

        for &t_target in &times[1..] {
            let target = self.to_clock(t_target);
            while clock < target {
                let rhs: Vec<Rhs<T>> = state.iter().map(|f| self.rhs(f, clock)).collect();
                let mut dt = rhs
                    .iter()
                    .map(|r| stable_dt(r, state[0].grid().dx(), state[0].grid().dim(), safety))
                    .fold(T::infinity(), |a, b| a.min(b));
                if let Some(m) = dt_max {
                    dt = dt.min(m);
                }
                last_dt = dt;
                let landing = clock + dt >= target;
                if landing {
                    dt = target - clock;
                } else if dt < dt_min {
                    return (
                        trajs,
                        Some(Error::StepUnderflow {
                            dt: dt.to64(),
                            dt_min: dt_min.to64(),
                            time: self.time_of_clock(clock).to64(),
                        }),
                    );
                }
                let t_now = self.time_of_clock(clock);
                for k in 0..state.len() {
                    let floor = T::lit(CLAMP_FLOOR) * scales[k];
                    match apply_step(&state[k], &rhs[k], dt, floor, t_now) {
                        Ok((next, clamped)) => {
                            state[k] = next;
                            clamps[k] += clamped;
                        }
                        Err(e) => return (trajs, Some(e)),
                    }
                }
                clock = if landing { target } else { clock + dt };
                steps += 1;
                if self.check_boundary {
                    let t = self.time_of_clock(clock);
                    let factor = match self.mode {
                        Mode::Rescaled => T::one(),
                        m => m.positivity_factor(t, q),
                    };
                    for (k, f) in state.iter().enumerate() {
                        if let Some(e) = boundary_touch(f, factor, trajs[k].eps_pos, t) {
                            return (trajs, Some(e));
                        }
                    }
                }
            }
            record(&mut trajs, &state, clock, last_dt, &clamps, steps);
        }
        (trajs, None)
    }

    pub fn run(&self, initial: Field<T>) -> RunOutcome<T> {
        let (mut trajs, abort) = self.run_lockstep(std::slice::from_ref(&initial));
        let trajectory = trajs.pop().unwrap_or_else(|| Trajectory {
            params: self.params,
            mode: self.mode,
            times: Vec::new(),
            taus: Vec::new(),
            snapshots: Vec::new(),
            norms: Vec::new(),
            support_radius: Vec::new(),
            dts: Vec::new(),
            clamp_counts: Vec::new(),
            eps_pos: T::zero(),
            initial_linf: initial.max(),
            steps: 0,
        });
        RunOutcome { trajectory, abort }
    }
}

/// `safety * min(dx^2/(2 N maxDiff + tiny), dx/(maxWave + tiny))`.
pub fn stable_dt<T: Real>(rhs: &Rhs<T>, dx: T, dim: usize, safety: T) -> T {
    let tiny = T::lit(TINY);
    let n = T::count(dim);
    let diff = dx * dx / (T::lit(2.0) * n * rhs.max_diff + tiny);
    let wave = dx / (rhs.max_wave + tiny);
    safety * diff.min(wave)
}

/// Largest step for which the explicit update is monotone:
/// `dt (2 N maxDiff/dx^2 + sqrt(N) maxWave/dx) <= 1`.
pub fn monotone_dt_bound<T: Real>(rhs: &Rhs<T>, dx: T, dim: usize) -> T {
    let n = T::count(dim);
    let rate = T::lit(2.0) * n * rhs.max_diff / (dx * dx) + n.sqrt() * rhs.max_wave / dx;
    if rate > T::zero() {
        T::one() / rate
    } else {
        T::infinity()
    }
}

fn apply_step<T: Real>(f: &Field<T>, rhs: &Rhs<T>, dt: T, floor: T, time: T) -> Result<(Field<T>, usize)> {
    let grid = *f.grid();
    let bound = monotone_dt_bound(rhs, grid.dx(), grid.dim());
    if dt > bound * (T::one() + T::lit(1e-12)) {
        return Err(Error::Cfl { dt: dt.to64(), bound: bound.to64() });
    }
    let mut clamped = 0;
    let mut out = Vec::with_capacity(f.values().len());
    for (k, (&u, &r)) in f.values().iter().zip(&rhs.values).enumerate() {
        let v = u + dt * r;
        if !v.is_finite() {
            return Err(Error::NonFinite { cell: k, time: time.to64() });
        }
        if v < T::zero() {
            if v > -floor {
                clamped += 1;
                out.push(T::zero());
                continue;
            }
            return Err(Error::Negativity { cell: k, value: v.to64(), time: time.to64() });
        }
        out.push(v);
    }
    Ok((Field::from_raw(grid, out), clamped))
}

fn boundary_touch<T: Real>(f: &Field<T>, factor: T, eps: T, time: T) -> Option<Error> {
    let g = f.grid();
    let n = g.cells();
    let check = |idx: usize| {
        let v = f.get(idx) * factor;
        (v > eps).then(|| Error::BoundaryTouch { cell: idx, value: v.to64(), time: time.to64() })
    };
    if g.dim() == 1 {
        return check(0).or_else(|| check(n - 1));
    }
    (0..n).find_map(|k| {
        check(g.flatten(k, 0))
            .or_else(|| check(g.flatten(k, n - 1)))
            .or_else(|| check(g.flatten(0, k)))
            .or_else(|| check(g.flatten(n - 1, k)))
    })
}

/// One forward-Euler step of the original equation, clamping round-off negatives
/// relative to the current maximum. Returns the new field and the clamp count.
pub fn step_original<T: Real>(f: &Field<T>, dt: T, params: &Params<T>) -> Result<(Field<T>, usize)> {
    let rhs = operators::rhs_original(f, params);
    apply_step(f, &rhs, dt, T::lit(CLAMP_FLOOR) * f.max(), T::zero())
}

/// One forward-Euler step of the rescaled equation at self-similar time `tau`.
pub fn step_rescaled<T: Real>(v: &Field<T>, tau: T, dtau: T, params: &Params<T>) -> Result<(Field<T>, usize)> {
    let rhs = operators::rhs_rescaled(v, tau, params)?;
    apply_step(v, &rhs, dtau, T::lit(CLAMP_FLOOR) * v.max(), tau)
}

/// Largest admissible step of the original equation for the given safety factor.
pub fn cfl_step<T: Real>(f: &Field<T>, params: &Params<T>, safety: T) -> T {
    let rhs = operators::rhs_original(f, params);
    stable_dt(&rhs, f.grid().dx(), f.grid().dim(), safety)
}
