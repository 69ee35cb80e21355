//! Spatial operators: conservative face-flux p-Laplacian, monotone Godunov Hamiltonian
//! for `|grad u|^q`, and the right-hand sides of the original and rescaled equations.
//!
//! One ghost layer of zeros surrounds the grid.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::params::Params;
use crate::scalar::Real;

/// Discretization of `div(|grad u|^{p-2} grad u)` in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PLaplacianKind {
    /// Per-axis fluxes `|D|^{p-2} D`. Monotone under the CFL bound.
    #[default]
    AxisSplit,
    /// Full face gradient with averaged tangential difference; for cross-checks only.
    Isotropic,
}

/// Which terms of the evolution enter the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms<T> {
    /// Coefficient in front of the p-Laplacian; zero switches diffusion off.
    pub diffusion: T,
    pub absorption: bool,
    /// Adds `+v`, the linear term of the rescaled equation.
    pub reaction: bool,
}

impl<T: Real> Terms<T> {
    pub fn original() -> Self {
        Terms { diffusion: T::one(), absorption: true, reaction: false }
    }

    pub fn rescaled(params: &Params<T>, tau: T) -> Self {
        Terms { diffusion: rescaled_prefactor(params, tau), absorption: true, reaction: true }
    }

    pub fn hamilton_jacobi() -> Self {
        Terms { diffusion: T::zero(), absorption: true, reaction: false }
    }

    pub fn p_laplacian_only() -> Self {
        Terms { diffusion: T::one(), absorption: false, reaction: false }
    }
}

/// `exp(-(p - 1 - q) tau)`, the diffusion weight of the rescaled equation.
pub fn rescaled_prefactor<T: Real>(params: &Params<T>, tau: T) -> T {
    (-(params.p() - T::one() - params.q()) * tau).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StencilOutput<T> {
    /// Discrete p-Laplacian per cell.
    pub plap: Vec<T>,
    /// Godunov Hamiltonian per cell, always non-negative.
    pub ham: Vec<T>,
    /// `(p - 1) max |D|^{p-2}` over faces.
    pub max_diff: T,
    /// `q G^{q-1}` with `G` the largest per-cell one-sided gradient magnitude.
    pub max_wave: T,
}

/// A right-hand side together with the coefficients that bound the explicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs<T> {
    pub values: Vec<T>,
    /// Effective diffusivity including the diffusion coefficient.
    pub max_diff: T,
    pub max_wave: T,
}

/// Selected gradient magnitude of the Godunov flux for `|s|^q` on one axis, from the
/// backward difference `a` and forward difference `b`.
#[inline]
pub fn godunov_axis<T: Real>(a: T, b: T) -> T {
    let zero = T::zero();
    if a <= b {
        if a <= zero && zero <= b {
            zero
        } else {
            a.abs().min(b.abs())
        }
    } else {
        a.abs().max(b.abs())
    }
}

/// Scalar Godunov flux: `min_{[a,b]} |s|^q` if `a <= b`, else `max_{[b,a]} |s|^q`.
#[inline]
pub fn godunov_flux_1d<T: Real>(a: T, b: T, q: T) -> T {
    godunov_axis(a, b).powf(q)
}

#[inline]
fn face_flux<T: Real>(d: T, pm2: T) -> T {
    d.abs().powf(pm2) * d
}

/// Calls `f(start, stride)` for every grid line along `axis`.
fn for_each_line<T: Real>(grid: &Grid<T>, axis: usize, mut f: impl FnMut(usize, usize)) {
    let n = grid.cells();
    match (grid.dim(), axis) {
        (1, _) => f(0, 1),
        (_, 0) => (0..n).for_each(|j| f(j * n, 1)),
        _ => (0..n).for_each(|i| f(i, n)),
    }
}

/// Differences across the `n + 1` faces of a line, ghost values zero.
fn face_differences<T: Real>(u: &[T], start: usize, stride: usize, n: usize, inv_dx: T, out: &mut Vec<T>) {
    out.clear();
    let mut left = T::zero();
    for k in 0..n {
        let right = u[start + k * stride];
        out.push((right - left) * inv_dx);
        left = right;
    }
    out.push(-left * inv_dx);
}

/// Evaluates the axis-split p-Laplacian and the Godunov Hamiltonian in one sweep.
pub fn stencil<T: Real>(f: &Field<T>, p: T, q: T) -> StencilOutput<T> {
    let grid = *f.grid();
    let u = f.values();
    let len = u.len();
    let n = grid.cells();
    let inv_dx = T::one() / grid.dx();
    let pm2 = p - T::lit(2.0);
    let mut plap = vec![T::zero(); len];
    let mut g2 = vec![T::zero(); len];
    let mut bound2 = vec![T::zero(); len];
    let mut max_face = T::zero();
    let mut d = Vec::with_capacity(n + 1);
    for axis in 0..grid.dim() {
        for_each_line(&grid, axis, |start, stride| {
            face_differences(u, start, stride, n, inv_dx, &mut d);
            let mut flux_left = face_flux(d[0], pm2);
            max_face = max_face.max(d[0].abs());
            for k in 0..n {
                let (a, b) = (d[k], d[k + 1]);
                let flux_right = face_flux(b, pm2);
                max_face = max_face.max(b.abs());
                let idx = start + k * stride;
                plap[idx] = plap[idx] + (flux_right - flux_left) * inv_dx;
                let g = godunov_axis(a, b);
                g2[idx] = g2[idx] + g * g;
                let m = a.abs().max(b.abs());
                bound2[idx] = bound2[idx] + m * m;
                flux_left = flux_right;
            }
        });
    }
    let half_q = q / T::lit(2.0);
    let ham = if grid.dim() == 1 {
        g2.iter().map(|&s| s.sqrt().powf(q)).collect()
    } else {
        g2.iter().map(|&s| s.powf(half_q)).collect()
    };
    let max_bound = bound2.iter().fold(T::zero(), |m, &b| m.max(b)).sqrt();
    StencilOutput {
        plap,
        ham,
        max_diff: (p - T::one()) * max_face.powf(pm2),
        max_wave: q * max_bound.powf(q - T::one()),
    }
}

/// Isotropic 2D p-Laplacian: face fluxes `|G|^{p-2} D_n` where `G` combines the normal
/// difference with the averaged tangential central difference. Reduces to the axis-split
/// form in 1D. Returns per-cell values and the largest face diffusivity.
pub fn p_laplacian_isotropic<T: Real>(f: &Field<T>, p: T) -> (Vec<T>, T) {
    let grid = *f.grid();
    if grid.dim() == 1 {
        let s = stencil(f, p, T::lit(2.0));
        return (s.plap, s.max_diff);
    }
    let n = grid.cells() as isize;
    let u = f.values();
    let at = |i: isize, j: isize| -> T {
        if i < 0 || j < 0 || i >= n || j >= n {
            T::zero()
        } else {
            u[(j * n + i) as usize]
        }
    };
    let inv_dx = T::one() / grid.dx();
    let quarter = T::lit(0.25) * inv_dx;
    let pm2 = p - T::lit(2.0);
    let mut max_g = T::zero();
    // Flux through the face between (i, j) and (i + 1, j) (x) or (i, j + 1) (y).
    let mut flux = |i: isize, j: isize, x_face: bool| -> T {
        let (di, dj) = if x_face { (1, 0) } else { (0, 1) };
        let normal = (at(i + di, j + dj) - at(i, j)) * inv_dx;
        let tangential = if x_face {
            (at(i, j + 1) + at(i + 1, j + 1) - at(i, j - 1) - at(i + 1, j - 1)) * quarter
        } else {
            (at(i + 1, j) + at(i + 1, j + 1) - at(i - 1, j) - at(i - 1, j + 1)) * quarter
        };
        let g = (normal * normal + tangential * tangential).sqrt();
        max_g = max_g.max(g);
        g.powf(pm2) * normal
    };
    let mut out = vec![T::zero(); u.len()];
    for j in 0..n {
        for i in 0..n {
            let dx_part = flux(i, j, true) - flux(i - 1, j, true);
            let dy_part = flux(i, j, false) - flux(i, j - 1, false);
            out[(j * n + i) as usize] = (dx_part + dy_part) * inv_dx;
        }
    }
    (out, (p - T::one()) * max_g.powf(pm2))
}

pub fn p_laplacian<T: Real>(f: &Field<T>, p: T) -> Vec<T> {
    stencil(f, p, T::lit(2.0)).plap
}

pub fn godunov_hamiltonian<T: Real>(f: &Field<T>, q: T) -> Vec<T> {
    stencil(f, T::lit(3.0), q).ham
}

/// Right-hand side with an arbitrary selection of terms.
pub fn rhs<T: Real>(f: &Field<T>, params: &Params<T>, terms: Terms<T>, kind: PLaplacianKind) -> Rhs<T> {
    let s = stencil(f, params.p(), params.q());
    let (plap, max_diff) = match kind {
        PLaplacianKind::AxisSplit => (s.plap, s.max_diff),
        PLaplacianKind::Isotropic => p_laplacian_isotropic(f, params.p()),
    };
    let w = terms.diffusion;
    let values = (0..plap.len())
        .map(|k| {
            let mut r = if w > T::zero() { w * plap[k] } else { T::zero() };
            if terms.absorption {
                r = r - s.ham[k];
            }
            if terms.reaction {
                r = r + f.get(k);
            }
            r
        })
        .collect();
    Rhs {
        values,
        max_diff: w * max_diff,
        max_wave: if terms.absorption { s.max_wave } else { T::zero() },
    }
}

/// `Delta_p u - |grad u|^q`.
pub fn rhs_original<T: Real>(f: &Field<T>, params: &Params<T>) -> Rhs<T> {
    rhs(f, params, Terms::original(), PLaplacianKind::AxisSplit)
}

/// `exp(-(p-1-q) tau) Delta_p v - |grad v|^q + v`; requires `q < p - 1`.
pub fn rhs_rescaled<T: Real>(v: &Field<T>, tau: T, params: &Params<T>) -> Result<Rhs<T>> {
    params.require_absorption_dominated()?;
    Ok(rhs(v, params, Terms::rescaled(params, tau), PLaplacianKind::AxisSplit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line(cells: usize, half_width: f64, values: Vec<f64>) -> Field<f64> {
        Field::new(Grid::<f64>::new(1, half_width, cells).unwrap(), values).unwrap()
    }

    fn spike() -> Field<f64> {
        // dx = 1, unit spike at cell 3.
        let mut v = vec![0.0; 8];
        v[3] = 1.0;
        line(8, 4.0, v)
    }

    #[test]
    fn p_laplacian_spike() {
        let plap = p_laplacian(&spike(), 3.0);
        assert_relative_eq!(plap[3], -2.0);
        assert_relative_eq!(plap[2], 1.0);
        assert_relative_eq!(plap[4], 1.0);
    }

    #[test]
    fn p_laplacian_affine_interior() {
        let g = Grid::<f64>::new(1, 1.0, 32).unwrap();
        let f = Field::from_fn(g, |[x, _]| x + 2.0);
        let plap = p_laplacian(&f, 3.5);
        for v in &plap[1..31] {
            assert!(v.abs() < 1e-12f64);
        }
    }

    #[test]
    fn godunov_cases() {
        assert_eq!(godunov_flux_1d(-1.0, 1.0, 2.0), 0.0);
        assert_relative_eq!(godunov_flux_1d(2.0, 1.0, 2.0), 4.0);
        assert_relative_eq!(godunov_flux_1d(-1.0, -3.0, 2.0), 9.0);
        assert_relative_eq!(godunov_flux_1d(1.0, 2.0, 2.0), 1.0);
        assert_relative_eq!(godunov_flux_1d(-3.0, -1.0, 2.0), 1.0);
    }

    #[test]
    fn axis_selection_matches_osher_sethian() {
        let os = |a: f64, b: f64| a.max(0.0).powi(2).max(b.min(0.0).powi(2));
        for a in [-2.0, -0.5, 0.0, 0.3, 1.7] {
            for b in [-1.5, -0.2, 0.0, 0.4, 2.2] {
                assert_relative_eq!(godunov_axis::<f64>(a, b).powi(2), os(a, b));
            }
        }
    }

    #[test]
    fn zero_field_zero_rhs() {
        let params = Params::new(3.0, 1.5, 1).unwrap();
        let r = rhs_original(&Field::zeros(Grid::<f64>::new(1, 1.0, 16).unwrap()), &params);
        assert!(r.values.iter().all(|&v| v == 0.0));
        assert_eq!(r.max_diff, 0.0);
    }

    #[test]
    fn rhs_is_additive() {
        let params = Params::new(3.0, 1.5, 2).unwrap();
        let g = Grid::<f64>::new(2, 2.0, 16).unwrap();
        let f = Field::from_fn(g, |[x, y]| (1.0 - x * x - y * y).max(0.0).powi(2));
        let full = rhs_original(&f, &params).values;
        let diff = rhs(&f, &params, Terms::p_laplacian_only(), PLaplacianKind::AxisSplit).values;
        let hj = rhs(&f, &params, Terms::hamilton_jacobi(), PLaplacianKind::AxisSplit).values;
        let plap = p_laplacian(&f, 3.0);
        let ham = godunov_hamiltonian(&f, 1.5);
        for k in 0..full.len() {
            assert_relative_eq!(diff[k], plap[k]);
            assert_relative_eq!(hj[k], -ham[k]);
            assert_relative_eq!(full[k], plap[k] - ham[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn rescaled_rhs_limits() {
        let params = Params::new(3.0, 1.5, 1).unwrap();
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let v = Field::from_fn(g, |[x, _]| (1.0 - x * x).max(0.0).powi(2));
        let at0 = rhs_rescaled(&v, 0.0, &params).unwrap().values;
        let orig = rhs_original(&v, &params).values;
        for k in 0..at0.len() {
            assert_relative_eq!(at0[k], orig[k] + v.get(k), epsilon = 1e-14);
        }
        let late = rhs_rescaled(&v, 200.0, &params).unwrap().values;
        let ham = godunov_hamiltonian(&v, 1.5);
        for k in 0..late.len() {
            assert_relative_eq!(late[k], v.get(k) - ham[k], epsilon = 1e-14);
        }
        assert!(rhs_rescaled(&v, 0.0, &Params::new(3.0, 2.0, 1).unwrap()).is_err());
    }

    #[test]
    fn isotropic_matches_axis_split_in_1d_and_on_axis_aligned_data() {
        let g = Grid::<f64>::new(1, 2.0, 32).unwrap();
        let f = Field::from_fn(g, |[x, _]| (1.0 - x * x).max(0.0));
        assert_eq!(p_laplacian_isotropic(&f, 3.0).0, p_laplacian(&f, 3.0));
        // Data depending on x only: tangential differences vanish away from the edges.
        let g2 = Grid::<f64>::new(2, 2.0, 32).unwrap();
        let f2 = Field::from_fn(g2, |[x, y]| if y.abs() < 1.5 { (1.0 - x * x).max(0.0) } else { 0.0 });
        let (iso, _) = p_laplacian_isotropic(&f2, 3.0);
        let split = p_laplacian(&f2, 3.0);
        let mid = g2.flatten(10, 16);
        assert_relative_eq!(iso[mid], split[mid], epsilon = 1e-12);
    }

    #[test]
    fn symmetric_input_symmetric_output() {
        let params = Params::new(3.0, 1.5, 2).unwrap();
        let g = Grid::<f64>::new(2, 2.0, 24).unwrap();
        let f = Field::from_fn(g, |[x, y]| (1.0 - x * x - 0.5 * y * y).max(0.0).powf(1.5));
        let r = rhs_original(&f, &params).values;
        let n = 24;
        for j in 0..n {
            for i in 0..n {
                let a = r[g.flatten(i, j)];
                assert!((a - r[g.flatten(n - 1 - i, j)]).abs() < 1e-12);
                assert!((a - r[g.flatten(i, n - 1 - j)]).abs() < 1e-12);
            }
        }
    }

    /// Max-norm error of the discrete p-Laplacian against the exact value on a smooth
    /// profile, away from the points where the gradient vanishes.
    fn plap_error(cells: usize) -> f64 {
        // u = exp(-x^2) on [-4, 4]; (|u'| u')' = 2 |u'| u'' exactly.
        let g = Grid::<f64>::new(1, 4.0, cells).unwrap();
        let f = Field::from_fn(g, |[x, _]| (-x * x).exp());
        let plap = p_laplacian(&f, 3.0);
        (0..cells)
            .filter(|&k| {
                let x = g.axis_coord(k).abs();
                x > 0.25 && x < 3.0
            })
            .map(|k| {
                let x = g.axis_coord(k);
                let du = -2.0 * x * (-x * x).exp();
                let d2u = (4.0 * x * x - 2.0) * (-x * x).exp();
                (plap[k] - 2.0 * du.abs() * d2u).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn p_laplacian_consistency_rate() {
        let (e1, e2) = (plap_error(256), plap_error(512));
        assert!(e2 < e1 * 0.6, "{e1} -> {e2}");
    }

    fn ham_error(cells: usize) -> f64 {
        let g = Grid::<f64>::new(1, 4.0, cells).unwrap();
        let f = Field::from_fn(g, |[x, _]| (-x * x).exp());
        let ham = godunov_hamiltonian(&f, 1.5);
        (0..cells)
            .filter(|&k| {
                let x = g.axis_coord(k).abs();
                x > 0.25 && x < 3.0
            })
            .map(|k| {
                let x = g.axis_coord(k);
                (ham[k] - (2.0 * x * (-x * x).exp()).abs().powf(1.5)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn hamiltonian_consistency_rate() {
        let (e1, e2) = (ham_error(256), ham_error(512));
        assert!(e2 < e1 * 0.6, "{e1} -> {e2}");
    }

    proptest! {
        #[test]
        fn godunov_bounds_1d(a in -5.0f64..5.0, b in -5.0f64..5.0, q in 1.05f64..4.0) {
            let h = godunov_flux_1d(a, b, q);
            let (ha, hb) = (a.abs().powf(q), b.abs().powf(q));
            prop_assert!(h >= 0.0);
            prop_assert!(h <= ha.max(hb) * (1.0 + 1e-12));
            if a > b || (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0) {
                prop_assert!(h >= ha.min(hb) * (1.0 - 1e-12));
            }
        }

        #[test]
        fn hamiltonian_non_negative(values in proptest::collection::vec(0.0f64..2.0, 64)) {
            let f = Field::new(Grid::<f64>::new(2, 1.0, 8).unwrap(), values).unwrap();
            prop_assert!(godunov_hamiltonian(&f, 1.7).iter().all(|&h| h >= 0.0));
        }
    }
}
