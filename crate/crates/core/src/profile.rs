//! Conical limit profile: exact Euclidean distance to the complement of a positivity
//! mask, the closed-form cone built on it, and the eikonal check.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, PositivitySet};
use crate::scalar::Real;

/// Marks "no site on this line" in squared cell distances.
const FAR: i64 = i64::MAX / 4;

/// Exact rational breakpoint `num/den` (`den > 0`), or an infinite sentinel.
#[derive(Clone, Copy)]
enum Break {
    NegInf,
    At(i128, i128),
    PosInf,
}

impl Break {
    /// `self <= other`.
    fn le(self, other: Break) -> bool {
        match (self, other) {
            (Break::NegInf, _) | (_, Break::PosInf) => true,
            (_, Break::NegInf) | (Break::PosInf, _) => false,
            (Break::At(a, b), Break::At(c, d)) => a * d <= c * b,
        }
    }

    /// `self < x` for an integer `x`.
    fn lt_int(self, x: i128) -> bool {
        match self {
            Break::NegInf => true,
            Break::PosInf => false,
            Break::At(a, b) => a < x * b,
        }
    }
}

/// Lower envelope of parabolas `(x - s)^2 + f[s]` over the sites with `f[s] < FAR`.
/// Writes the minimum and its minimizing site for every `x`.
fn lower_envelope(f: &[i64], dist: &mut [i64], site: &mut [usize]) {
    let n = f.len();
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<Break> = Vec::with_capacity(n + 1);
    for s in (0..n).filter(|&s| f[s] < FAR) {
        let key = |r: usize| f[r] as i128 + (r * r) as i128;
        let mut start = Break::NegInf;
        while let Some(&last) = v.last() {
            let cross = Break::At(key(s) - key(last), 2 * (s as i128 - last as i128));
            let lower = *z.last().expect("breakpoints track sites");
            if cross.le(lower) {
                v.pop();
                z.pop();
            } else {
                start = cross;
                break;
            }
        }
        v.push(s);
        z.push(start);
    }
    if v.is_empty() {
        dist.iter_mut().for_each(|d| *d = FAR);
        site.iter_mut().for_each(|s| *s = usize::MAX);
        return;
    }
    z.push(Break::PosInf);
    let mut k = 0;
    for x in 0..n {
        while z[k + 1].lt_int(x as i128) {
            k += 1;
        }
        let s = v[k];
        let off = x as i64 - s as i64;
        dist[x] = off * off + f[s];
        site[x] = s;
    }
}

/// Squared distances in cell units and the nearest false cell of every cell.
pub struct SquaredDistances {
    pub squared: Vec<i64>,
    pub nearest: Vec<usize>,
}

/// Exact squared distance (in cell units) from each cell center to the nearest false cell
/// center, via one lower-envelope pass per axis.
pub fn squared_distance_transform<T: Real>(mask: &PositivitySet<T>) -> Result<SquaredDistances> {
    let grid = *mask.grid();
    if mask.is_full() {
        return Err(Error::EmptyComplement);
    }
    let n = grid.cells();
    let m = mask.mask();
    let init: Vec<i64> = m.iter().map(|&t| if t { FAR } else { 0 }).collect();
    if grid.dim() == 1 {
        let mut squared = vec![0; n];
        let mut nearest = vec![0; n];
        lower_envelope(&init, &mut squared, &mut nearest);
        return Ok(SquaredDistances { squared, nearest });
    }
    // Rows: distance along x to the nearest false cell in the same row.
    let mut row_d = vec![0i64; n * n];
    let mut row_site = vec![0usize; n * n];
    for j in 0..n {
        let r = j * n..(j + 1) * n;
        lower_envelope(&init[r.clone()], &mut row_d[r.clone()], &mut row_site[r]);
    }
    // Columns: combine the row distances.
    let mut squared = vec![0i64; n * n];
    let mut nearest = vec![0usize; n * n];
    let mut col_f = vec![0i64; n];
    let mut col_d = vec![0i64; n];
    let mut col_site = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            let d = row_d[j * n + i];
            col_f[j] = d.min(FAR);
        }
        lower_envelope(&col_f, &mut col_d, &mut col_site);
        for j in 0..n {
            let jj = col_site[j];
            squared[j * n + i] = col_d[j];
            nearest[j * n + i] = jj * n + row_site[jj * n + i];
        }
    }
    Ok(SquaredDistances { squared, nearest })
}

/// Euclidean distance from every cell center to the nearest false cell center; zero on
/// false cells.
pub fn distance_transform<T: Real>(mask: &PositivitySet<T>) -> Result<Vec<T>> {
    let dx = mask.grid().dx();
    Ok(squared_distance_transform(mask)?
        .squared
        .into_iter()
        .map(|d2| T::lit(d2 as f64).sqrt() * dx)
        .collect())
}

/// `(q-1)/q^{q/(q-1)}`.
pub fn cone_coefficient<T: Real>(q: T) -> T {
    let qm1 = q - T::one();
    qm1 / q.powf(q / qm1)
}

/// `((q-1)/q^{q/(q-1)}) d^{q/(q-1)}`.
pub fn cone_value<T: Real>(dist: T, q: T) -> T {
    cone_coefficient(q) * dist.powf(q / (q - T::one()))
}

#[derive(Debug, Clone)]
pub struct LimitProfile<T> {
    grid: Grid<T>,
    q: T,
    dist: Vec<T>,
    vinf: Vec<T>,
    nearest: Vec<usize>,
    mask: PositivitySet<T>,
}

pub fn build_vinf<T: Real>(mask: &PositivitySet<T>, q: T) -> Result<LimitProfile<T>> {
    if !(q > T::one()) {
        return Err(Error::InvalidParams(format!("q = {q} must exceed 1")));
    }
    let sq = squared_distance_transform(mask)?;
    let dx = mask.grid().dx();
    let dist: Vec<T> = sq.squared.iter().map(|&d2| T::lit(d2 as f64).sqrt() * dx).collect();
    let vinf = dist.iter().map(|&d| cone_value(d, q)).collect();
    Ok(LimitProfile { grid: *mask.grid(), q, dist, vinf, nearest: sq.nearest, mask: mask.clone() })
}

impl<T: Real> LimitProfile<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn dist(&self) -> &[T] {
        &self.dist
    }

    pub fn values(&self) -> &[T] {
        &self.vinf
    }

    pub fn mask(&self) -> &PositivitySet<T> {
        &self.mask
    }

    /// Index of the nearest false cell for every cell.
    pub fn nearest(&self) -> &[usize] {
        &self.nearest
    }

    /// Largest cone value and the cell where it is attained (first in index order).
    pub fn max(&self) -> (T, usize) {
        self.vinf
            .iter()
            .enumerate()
            .fold((T::zero(), 0), |(m, at), (k, &v)| if v > m { (v, k) } else { (m, at) })
    }

    pub fn field(&self) -> Field<T> {
        Field::from_raw(self.grid, self.vinf.clone())
    }

    pub fn dist_field(&self) -> Field<T> {
        Field::from_raw(self.grid, self.dist.clone())
    }

    /// Stationary state of the rescaled flow, `(q-1)^{1/(q-1)} V_inf`: it solves
    /// `|grad W|^q = W` where `V_inf` solves `|grad V|^q = V/(q-1)`.
    pub fn rescaled_fixed_point(&self) -> Field<T> {
        let qm1 = self.q - T::one();
        self.field().scaled(qm1.powf(T::one() / qm1))
    }
}

/// `U(t, x) = t^{-1/(q-1)} V_inf(x)`.
pub fn self_similar<T: Real>(profile: &LimitProfile<T>, t: T) -> Result<Field<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidConfig(format!("self-similar solution needs t > 0, got {t}")));
    }
    let q = profile.q;
    Ok(profile.field().scaled(t.powf(-T::one() / (q - T::one()))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalOptions<T> {
    /// Cells closer than this to the complement are left out.
    pub boundary_margin: T,
    /// Cells closer than this to a ridge cell are left out.
    pub ridge_margin: T,
}

impl<T: Real> EikonalOptions<T> {
    pub fn cells(grid: &Grid<T>, boundary_cells: f64, ridge_cells: f64) -> Self {
        EikonalOptions {
            boundary_margin: T::lit(boundary_cells) * grid.dx(),
            ridge_margin: T::lit(ridge_cells) * grid.dx(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalResidual<T> {
    pub max: T,
    pub mean: T,
    pub cells: usize,
    pub ridge_cells: usize,
}

/// Cells where the nearest-false-cell assignment jumps between axis neighbors: some
/// neighbor in the mask is assigned a false cell that is not within one cell (in either
/// axis) of this cell's own.
pub fn ridge_cells<T: Real>(profile: &LimitProfile<T>) -> Vec<bool> {
    let g = profile.grid;
    let site = |k: usize| -> [i64; 2] {
        let [i, j] = g.unflatten(profile.nearest[k]);
        [i as i64, j as i64]
    };
    (0..g.len())
        .map(|k| {
            profile.mask.contains(k)
                && g.neighbors(k).any(|nb| {
                    if !profile.mask.contains(nb) {
                        return false;
                    }
                    let (a, b) = (site(k), site(nb));
                    (a[0] - b[0]).abs() > 1 || (a[1] - b[1]).abs() > 1
                })
        })
        .collect()
}

/// `| |grad V*| - 1 |` with upwind gradients, `V* = (q/(q-1)) W^{(q-1)/q}` built from the
/// rescaled fixed point `W`, over cells of the mask away from its complement, from the
/// grid edge and from the ridge set.
pub fn eikonal_residual<T: Real>(profile: &LimitProfile<T>, opts: EikonalOptions<T>) -> Result<EikonalResidual<T>> {
    let g = profile.grid;
    let q = profile.q;
    let qm1 = q - T::one();
    let w = profile.rescaled_fixed_point();
    let vstar: Vec<T> = w.values().iter().map(|&x| q / qm1 * x.powf(qm1 / q)).collect();

    let ridge = ridge_cells(profile);
    let ridge_count = ridge.iter().filter(|&&r| r).count();
    let ridge_dist: Vec<T> = if ridge_count == 0 {
        vec![T::infinity(); g.len()]
    } else {
        let not_ridge = PositivitySet::from_mask(g, ridge.iter().map(|r| !r).collect(), T::zero())?;
        distance_transform(&not_ridge)?
    };

    let n = g.cells();
    let inv_dx = T::one() / g.dx();
    let mut max = T::zero();
    let mut sum = T::zero();
    let mut count = 0usize;
    for k in 0..g.len() {
        if !profile.mask.contains(k)
            || g.is_boundary(k)
            || profile.dist[k] <= opts.boundary_margin
            || ridge[k]
            || ridge_dist[k] <= opts.ridge_margin
        {
            continue;
        }
        let mut grad2 = T::zero();
        let strides: &[usize] = if g.dim() == 1 { &[1] } else { &[1, n] };
        for &s in strides {
            let back = (vstar[k] - vstar[k - s]) * inv_dx;
            let fwd = (vstar[k + s] - vstar[k]) * inv_dx;
            let up = back.max(-fwd).max(T::zero());
            grad2 = grad2 + up * up;
        }
        let r = (grad2.sqrt() - T::one()).abs();
        max = max.max(r);
        sum = sum + r;
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoInteriorCells);
    }
    Ok(EikonalResidual { max, mean: sum / T::count(count), cells: count, ridge_cells: ridge_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn interval_mask(cells: usize, half_width: f64, radius: f64) -> PositivitySet<f64> {
        let g = Grid::<f64>::new(1, half_width, cells).unwrap();
        PositivitySet::from_mask(g, (0..cells).map(|i| g.axis_coord(i).abs() < radius).collect(), 0.0).unwrap()
    }

    fn disk_mask(cells: usize, half_width: f64, radius: f64) -> PositivitySet<f64> {
        let g = Grid::<f64>::new(2, half_width, cells).unwrap();
        PositivitySet::from_mask(g, (0..g.len()).map(|k| g.radius(k) < radius).collect(), 0.0).unwrap()
    }

    fn brute(mask: &PositivitySet<f64>) -> Vec<f64> {
        let g = mask.grid();
        let falses: Vec<usize> = (0..g.len()).filter(|&k| !mask.contains(k)).collect();
        (0..g.len())
            .map(|k| {
                let [i, j] = g.unflatten(k);
                let best = falses
                    .iter()
                    .map(|&f| {
                        let [a, b] = g.unflatten(f);
                        let (di, dj) = (i as i64 - a as i64, j as i64 - b as i64);
                        di * di + dj * dj
                    })
                    .min()
                    .unwrap();
                (best as f64).sqrt() * g.dx()
            })
            .collect()
    }

    #[test]
    fn interval_center_distance() {
        let m = interval_mask(800, 4.0, 1.0);
        let d = distance_transform(&m).unwrap();
        let center = m.grid().nearest_cell([0.0, 0.0]);
        assert!((d[center] - 1.0).abs() <= m.grid().dx());
        assert_eq!(d, brute(&m));
    }

    #[test]
    fn single_true_cell() {
        let g = Grid::<f64>::new(2, 1.0, 16).unwrap();
        let mut mask = vec![false; g.len()];
        mask[g.flatten(5, 7)] = true;
        let m = PositivitySet::from_mask(g, mask, 0.0).unwrap();
        let d = distance_transform(&m).unwrap();
        assert_relative_eq!(d[g.flatten(5, 7)], g.dx());
        assert_eq!(d.iter().filter(|&&x| x > 0.0).count(), 1);
    }

    #[test]
    fn disk_center_distance() {
        let m = disk_mask(128, 2.0, 1.0);
        let d = distance_transform(&m).unwrap();
        let g = m.grid();
        let center = d.iter().cloned().fold(0.0, f64::max);
        assert!((center - 1.0).abs() <= g.dx() * 2f64.sqrt());
        assert_eq!(d, brute(&m));
    }

    #[test]
    fn full_mask_is_rejected() {
        let g = Grid::<f64>::new(1, 1.0, 16).unwrap();
        let m = PositivitySet::from_mask(g, vec![true; 16], 0.0).unwrap();
        assert!(matches!(distance_transform(&m), Err(Error::EmptyComplement)));
    }

    #[test]
    fn random_masks_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let cells = rng.gen_range(8..24);
            let g = Grid::<f64>::new(2, 1.0, cells).unwrap();
            let density = rng.gen_range(0.5..0.99);
            let mut mask: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(density)).collect();
            mask[rng.gen_range(0..g.len())] = false;
            let m = PositivitySet::from_mask(g, mask, 0.0).unwrap();
            assert_eq!(distance_transform(&m).unwrap(), brute(&m));
        }
    }

    #[test]
    fn nearest_site_realizes_distance() {
        let m = disk_mask(40, 1.0, 0.7);
        let g = *m.grid();
        let sq = squared_distance_transform(&m).unwrap();
        for k in 0..g.len() {
            let [i, j] = g.unflatten(k);
            let [a, b] = g.unflatten(sq.nearest[k]);
            assert!(!m.contains(sq.nearest[k]));
            let (di, dj) = (i as i64 - a as i64, j as i64 - b as i64);
            assert_eq!(di * di + dj * dj, sq.squared[k]);
        }
    }

    #[test]
    fn distance_is_one_lipschitz() {
        let m = disk_mask(64, 1.0, 0.8);
        let g = *m.grid();
        let d = distance_transform(&m).unwrap();
        for k in 0..g.len() {
            for nb in g.neighbors(k) {
                assert!((d[k] - d[nb]).abs() <= g.dx() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cone_values_interval() {
        let m = interval_mask(2000, 2.0, 1.0);
        let p = build_vinf(&m, 1.5).unwrap();
        let g = *m.grid();
        let (vmax, _) = p.max();
        assert!((vmax - 0.5 / 1.5f64.powi(3)).abs() < 3.0 * 0.148148 * g.dx());
        let half = g.nearest_cell([0.5, 0.0]);
        assert_relative_eq!(p.values()[half], cone_value(p.dist()[half], 1.5));
        assert!((p.values()[half] - 0.0185185).abs() < 1e-3);
        let p2 = build_vinf(&m, 2.0).unwrap();
        assert!((p2.max().0 - 0.25).abs() < 0.5 * g.dx() + 1e-12);
        for k in 0..g.len() {
            if !m.contains(k) {
                assert_eq!(p.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn cone_scaling_identity() {
        for &q in &[1.1f64, 1.25, 1.5, 2.0, 4.0, 10.0] {
            for &d in &[0.01f64, 0.3, 1.0, 2.7] {
                let expect = (q - 1.0) / q.powf(q / (q - 1.0)) * d.powf(q / (q - 1.0));
                assert!((cone_value(d, q) - expect).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn enlarging_the_mask_raises_the_cone() {
        let small = build_vinf(&disk_mask(48, 1.0, 0.5), 1.5).unwrap();
        let large = build_vinf(&disk_mask(48, 1.0, 0.7), 1.5).unwrap();
        for k in 0..small.values().len() {
            assert!(large.values()[k] >= small.values()[k]);
        }
    }

    #[test]
    fn self_similar_scaling() {
        let p = build_vinf(&interval_mask(64, 2.0, 1.0), 2.0).unwrap();
        assert_eq!(self_similar(&p, 1.0).unwrap(), p.field());
        let u4 = self_similar(&p, 4.0).unwrap();
        for k in 0..64 {
            assert_relative_eq!(u4.get(k), p.values()[k] / 4.0);
        }
        assert!(self_similar(&p, 0.0).is_err());
    }

    #[test]
    fn rescaled_fixed_point_balances_hamiltonian() {
        // |grad W|^q = W in the interior, away from the ridge and the rim.
        let m = interval_mask(1024, 2.0, 1.0);
        let g = *m.grid();
        let p = build_vinf(&m, 1.5).unwrap();
        let w = p.rescaled_fixed_point();
        let ham = crate::operators::godunov_hamiltonian(&w, 1.5);
        let (wmax, _) = (w.max(), 0);
        for (k, h) in ham.iter().enumerate() {
            let x = g.axis_coord(k).abs();
            if x > 0.1 && x < 0.9 {
                assert!((h - w.get(k)).abs() < 5.0 * g.dx() * wmax);
            }
        }
    }

    #[test]
    fn eikonal_interval_is_exact() {
        let m = interval_mask(256, 2.0, 1.0);
        let p = build_vinf(&m, 1.5).unwrap();
        let r = eikonal_residual(&p, EikonalOptions::cells(m.grid(), 2.0, 1.0)).unwrap();
        assert!(r.max < 1e-10, "{r:?}");
        assert_eq!(r.ridge_cells, 2);
    }

    #[test]
    fn eikonal_thin_band_has_no_interior() {
        let g = Grid::<f64>::new(1, 1.0, 32).unwrap();
        let m = PositivitySet::from_mask(g, (0..32).map(|i| i == 15 || i == 16).collect(), 0.0).unwrap();
        let p = build_vinf(&m, 1.5).unwrap();
        assert!(matches!(
            eikonal_residual(&p, EikonalOptions::cells(&g, 2.0, 1.0)),
            Err(Error::NoInteriorCells)
        ));
    }
}
