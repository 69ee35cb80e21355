//! Explicit barriers: the decaying subsolution `s_A` supported on a ball, the stationary
//! power-law supersolution `S_1`, and comparison checks of trajectories against them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operators;
use crate::params::Params;
use crate::scalar::Real;
use crate::stepper::Trajectory;

fn dist<T: Real>(x: [T; 2], c: [T; 2]) -> T {
    let (a, b) = (x[0] - c[0], x[1] - c[1]);
    (a * a + b * b).sqrt()
}

/// `A (1+t)^{-1/(q-1)} (R^2 - |x|^2)^{q/(q-1)}` inside `B(0, R)`, zero outside.
pub fn eval_sa<T: Real>(t: T, x: [T; 2], amplitude: T, radius: T, q: T) -> T {
    let qm1 = q - T::one();
    let r2 = x[0] * x[0] + x[1] * x[1];
    let base = (radius * radius - r2).max(T::zero());
    amplitude * (T::one() + t).powf(-T::one() / qm1) * base.powf(q / qm1)
}

/// The bound whose sign decides whether `s_A` is a subsolution on `B(0, R)`:
/// `-1/(q-1) + (2qR/(q-1))^q A^{q-1} + (2q/(q-1))^q (N+p-2) A^{p-2} R^{2(p-1-q)/(q-1)+p-2}`.
pub fn subsolution_bound<T: Real>(amplitude: T, radius: T, params: &Params<T>) -> T {
    let (p, q) = (params.p(), params.q());
    let one = T::one();
    let two = T::lit(2.0);
    let qm1 = q - one;
    let n = T::count(params.dim());
    let k = two * q / qm1;
    -one / qm1
        + (k * radius).powf(q) * amplitude.powf(qm1)
        + k.powf(q)
            * (n + p - two)
            * amplitude.powf(p - two)
            * radius.powf(two * (p - one - q) / qm1 + p - two)
}

/// Largest amplitude keeping `s_A` a subsolution on `B(0, R)`, by bisection on the
/// increasing bound to `1e-12`.
pub fn max_amplitude_ar<T: Real>(radius: T, params: &Params<T>) -> Result<T> {
    params.require_absorption_dominated()?;
    if !(radius > T::zero()) {
        return Err(Error::InvalidParams(format!("barrier radius {radius} must be positive")));
    }
    let g = |a: T| subsolution_bound(a, radius, params);
    let mut lo = T::zero();
    let mut hi = T::one();
    while g(hi) <= T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::InvalidParams("amplitude bracket diverged".into()));
        }
    }
    let tol = T::lit(1e-12);
    while hi - lo > tol * hi.max(T::lit(1e-300)) && hi - lo > T::epsilon() * hi {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if g(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok(lo)
}

/// `a0 |x - x0|^{(p-q)/(p-1-q)}`.
pub fn eval_s1<T: Real>(x: [T; 2], x0: [T; 2], params: &Params<T>) -> Result<T> {
    params.require_absorption_dominated()?;
    let c = params.derive();
    let (a0, beta) = (c.a0.expect("defined for q < p - 1"), c.wait_exp.expect("defined for q < p - 1"));
    Ok(a0 * dist(x, x0).powf(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Barrier {
    /// `s_A(t, x - center)` on `B(center, radius)`; lies below solutions.
    #[serde(rename = "subsolution-sA")]
    SubsolutionSa { center: [f64; 2], radius: f64, amplitude: f64 },
    /// `S_1` centered at `center`, compared on `B(center, radius)`; lies above solutions.
    #[serde(rename = "stationary-S1")]
    StationaryS1 { center: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// The barrier must stay above the solution.
    Above,
    /// The barrier must stay below the solution.
    Below,
}

impl Barrier {
    pub fn natural_direction(&self) -> Direction {
        match self {
            Barrier::SubsolutionSa { .. } => Direction::Below,
            Barrier::StationaryS1 { .. } => Direction::Above,
        }
    }

    fn region(&self) -> ([f64; 2], f64) {
        match *self {
            Barrier::SubsolutionSa { center, radius, .. } | Barrier::StationaryS1 { center, radius } => {
                (center, radius)
            }
        }
    }

    pub fn validate<T: Real>(&self, params: &Params<T>) -> Result<()> {
        params.require_absorption_dominated()?;
        match *self {
            Barrier::SubsolutionSa { radius, amplitude, .. } => {
                let ar = max_amplitude_ar(T::lit(radius), params)?.to64();
                if !(0.0..=ar).contains(&amplitude) {
                    return Err(Error::InvalidConfig(format!(
                        "subsolution amplitude {amplitude} outside [0, A_R = {ar}]"
                    )));
                }
            }
            Barrier::StationaryS1 { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidConfig("comparison radius must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval<T: Real>(&self, t: T, x: [T; 2], params: &Params<T>) -> Result<T> {
        match *self {
            Barrier::SubsolutionSa { center, radius, amplitude } => Ok(eval_sa(
                t,
                [x[0] - T::lit(center[0]), x[1] - T::lit(center[1])],
                T::lit(amplitude),
                T::lit(radius),
                params.q(),
            )),
            Barrier::StationaryS1 { center, .. } => eval_s1(x, [T::lit(center[0]), T::lit(center[1])], params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub snapshot: usize,
    pub time: f64,
    pub cell: usize,
    pub solution: f64,
    pub barrier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub barrier: Barrier,
    pub direction: Direction,
    pub tolerance: f64,
    pub snapshots_checked: usize,
    pub cells_checked: usize,
    /// Largest amount by which the ordering is broken (non-positive when it holds).
    pub worst_gap: f64,
    pub first_violation: Option<Violation>,
    pub holds: bool,
}

/// Checks the ordering between a trajectory and a barrier at every snapshot on the
/// barrier's ball, with tolerance `1e-8 * max u0`. The ordering must hold at the first
/// snapshot, otherwise the check is rejected.
pub fn check_comparison<T: Real>(traj: &Trajectory<T>, barrier: &Barrier, direction: Direction) -> Result<ComparisonReport> {
    barrier.validate(&traj.params)?;
    let tol = 1e-8 * traj.initial_linf.to64();
    let (center, radius) = barrier.region();
    let mut report = ComparisonReport {
        barrier: *barrier,
        direction,
        tolerance: tol,
        snapshots_checked: 0,
        cells_checked: 0,
        worst_gap: f64::NEG_INFINITY,
        first_violation: None,
        holds: true,
    };
    for k in 0..traj.len() {
        let u = traj.physical(k);
        let g = *u.grid();
        let t = traj.times[k];
        for idx in 0..g.len() {
            let [x, y] = g.center(idx);
            let (cx, cy) = (x.to64() - center[0], y.to64() - center[1]);
            if (cx * cx + cy * cy).sqrt() > radius {
                continue;
            }
            let b = barrier.eval(t, [x, y], &traj.params)?.to64();
            let v = u.get(idx).to64();
            let gap = match direction {
                Direction::Above => v - b,
                Direction::Below => b - v,
            };
            report.cells_checked += 1;
            report.worst_gap = report.worst_gap.max(gap);
            if gap > tol {
                if k == 0 {
                    return Err(Error::Precondition {
                        cell: idx,
                        detail: format!("initial value {v:e} vs barrier {b:e} ({direction:?})"),
                    });
                }
                if report.first_violation.is_none() {
                    report.first_violation =
                        Some(Violation { snapshot: k, time: t.to64(), cell: idx, solution: v, barrier: b });
                }
                report.holds = false;
            }
        }
        report.snapshots_checked += 1;
    }
    Ok(report)
}

/// Largest positive part of `d_t s_A - Delta_p s_A + |grad s_A|^q` over cells of the grid
/// inside `B(0, R)`, with the time derivative exact and the spatial operators discrete.
pub fn subsolution_residual<T: Real>(params: &Params<T>, amplitude: T, radius: T, grid: Grid<T>, t: T) -> T {
    let q = params.q();
    let s = Field::from_fn(grid, |x| eval_sa(t, x, amplitude, radius, q));
    let st = operators::stencil(&s, params.p(), q);
    let rate = -T::one() / ((q - T::one()) * (T::one() + t));
    (0..grid.len())
        .filter(|&k| grid.radius(k) < radius)
        .map(|k| rate * s.get(k) - st.plap[k] + st.ham[k])
        .fold(T::zero(), |m, r| m.max(r))
}

/// Largest `|Delta_p S_1 - |grad S_1|^q|` over cells farther than `exclusion` from the
/// vertex, skipping the two outermost grid layers where the zero ghost values enter.
pub fn stationary_residual<T: Real>(params: &Params<T>, grid: Grid<T>, x0: [T; 2], exclusion: T) -> Result<T> {
    let vals: Vec<T> = (0..grid.len()).map(|k| eval_s1(grid.center(k), x0, params)).collect::<Result<_>>()?;
    let s1 = Field::new(grid, vals)?;
    let st = operators::stencil(&s1, params.p(), params.q());
    let n = grid.cells();
    Ok((0..grid.len())
        .filter(|&k| {
            let [i, j] = grid.unflatten(k);
            let interior = i >= 2 && i + 2 < n && (grid.dim() == 1 || (j >= 2 && j + 2 < n));
            interior && dist(grid.center(k), x0) > exclusion
        })
        .map(|k| (st.plap[k] - st.ham[k]).abs())
        .fold(T::zero(), |m, r| m.max(r)))
}
