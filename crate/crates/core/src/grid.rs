//! Uniform Cartesian grids on `[-L, L]^N` (N = 1, 2), non-negative fields on them,
//! norms and positivity sets.
//!
//! Cells are indexed `idx = j * cells + i` with `i` along the first axis; cell `i` has its
//! center at `-L + (i + 1/2) dx`. Values outside the grid are taken to be zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec<T>", into = "GridSpec<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Grid<T> {
    dim: usize,
    half_width: T,
    cells: usize,
    dx: T,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GridSpec<T> {
    dim: usize,
    half_width: T,
    cells: usize,
}

impl<T: Real> TryFrom<GridSpec<T>> for Grid<T> {
    type Error = Error;
    fn try_from(s: GridSpec<T>) -> Result<Self> {
        Grid::new(s.dim, s.half_width, s.cells)
    }
}

impl<T: Real> From<Grid<T>> for GridSpec<T> {
    fn from(g: Grid<T>) -> Self {
        GridSpec { dim: g.dim, half_width: g.half_width, cells: g.cells }
    }
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, half_width: T, cells: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!("{cells} cells per axis, need at least {MIN_CELLS}")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        let dx = T::lit(2.0) * half_width / T::count(cells);
        Ok(Grid { dim, half_width, cells, dx })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of one cell, `dx^N`.
    pub fn cell_volume(&self) -> T {
        self.dx.powi(self.dim as i32)
    }

    /// Cell center along one axis.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> T {
        -self.half_width + (T::count(i) + T::lit(0.5)) * self.dx
    }

    /// Per-axis indices of a flat cell index (`[i, 0]` in 1D).
    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % self.cells, idx / self.cells]
        }
    }

    #[inline]
    pub fn flatten(&self, i: usize, j: usize) -> usize {
        j * self.cells + i
    }

    /// Cell center; the second component is zero in 1D.
    #[inline]
    pub fn center(&self, idx: usize) -> [T; 2] {
        let [i, j] = self.unflatten(idx);
        if self.dim == 1 {
            [self.axis_coord(i), T::zero()]
        } else {
            [self.axis_coord(i), self.axis_coord(j)]
        }
    }

    /// Euclidean norm of the cell center.
    #[inline]
    pub fn radius(&self, idx: usize) -> T {
        let [x, y] = self.center(idx);
        (x * x + y * y).sqrt()
    }

    /// Cells within the outermost layer of the grid.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.cells - 1;
        let [i, j] = self.unflatten(idx);
        i == 0 || i == last || (self.dim == 2 && (j == 0 || j == last))
    }

    /// Index of the cell whose center is nearest to `x` (1D) or `(x, y)`.
    pub fn nearest_cell(&self, point: [T; 2]) -> usize {
        let axis = |x: T| {
            let k = ((x + self.half_width) / self.dx - T::lit(0.5)).round();
            k.max(T::zero()).min(T::count(self.cells - 1)).to_usize().unwrap_or(0)
        };
        if self.dim == 1 {
            axis(point[0])
        } else {
            self.flatten(axis(point[0]), axis(point[1]))
        }
    }

    /// Flat indices of the axis neighbors of a cell that lie on the grid.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j] = self.unflatten(idx);
        let n = self.cells;
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = self.flatten(i - 1, j);
        }
        if i + 1 < n {
            out[1] = self.flatten(i + 1, j);
        }
        if self.dim == 2 {
            if j > 0 {
                out[2] = self.flatten(i, j - 1);
            }
            if j + 1 < n {
                out[3] = self.flatten(i, j + 1);
            }
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid::new(self.dim, U::lit(self.half_width.to64()), self.cells)
            .expect("grid remains valid under scalar conversion")
    }
}

/// A non-negative scalar function sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < T::zero()) {
            return Err(Error::InvalidInitialData(format!("value {v} at cell {k} is negative or non-finite")));
        }
        Ok(Field { grid, values })
    }

    /// Wraps values that the caller guarantees are finite and non-negative.
    pub(crate) fn from_raw(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Field { grid, values: vec![T::zero(); grid.len()] }
    }

    /// Samples `f` at every cell center, clamping negatives to zero.
    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center(k)).max(T::zero())).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// Pointwise multiplication by a non-negative factor.
    pub fn scaled(&self, factor: T) -> Self {
        assert!(factor >= T::zero(), "scaling factor must be non-negative");
        Field { grid: self.grid, values: self.values.iter().map(|&v| v * factor).collect() }
    }

    /// Largest `|self - other|` over all cells.
    pub fn sup_distance(&self, other: &Field<T>) -> T {
        assert_eq!(self.values.len(), other.values.len(), "fields live on different grids");
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn norms(&self) -> Norms<T> {
        norms(self)
    }

    pub fn positivity_set(&self, eps: T) -> PositivitySet<T> {
        positivity_set(self, eps)
    }

    pub fn cast<U: Real>(&self) -> Field<U> {
        Field { grid: self.grid.cast(), values: self.values.iter().map(|v| U::lit(v.to64())).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms<T> {
    pub l1: T,
    pub linf: T,
    /// Largest one-sided difference quotient over interior faces.
    pub lipschitz: T,
}

pub fn norms<T: Real>(f: &Field<T>) -> Norms<T> {
    let g = f.grid;
    let v = &f.values;
    let l1 = v.iter().copied().sum::<T>() * g.cell_volume();
    let linf = f.max();
    let n = g.cells;
    let mut lip = T::zero();
    for idx in 0..v.len() {
        let [i, j] = g.unflatten(idx);
        if i + 1 < n {
            lip = lip.max((v[idx + 1] - v[idx]).abs());
        }
        if g.dim == 2 && j + 1 < n {
            lip = lip.max((v[idx + n] - v[idx]).abs());
        }
    }
    Norms { l1, linf, lipschitz: lip / g.dx }
}

/// Cells where a field exceeds a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivitySet<T> {
    grid: Grid<T>,
    mask: Vec<bool>,
    threshold: T,
    support_radius: T,
}

impl<T: Real> PositivitySet<T> {
    pub fn from_mask(grid: Grid<T>, mask: Vec<bool>, threshold: T) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("mask of {} cells for a grid of {}", mask.len(), grid.len())));
        }
        let support_radius = support_radius(&grid, &mask);
        Ok(PositivitySet { grid, mask, threshold, support_radius })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    /// Largest `|x|` over cells in the set, zero when empty.
    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Whether any cell of the outermost grid layer belongs to the set.
    pub fn touches_boundary(&self) -> bool {
        (0..self.mask.len()).any(|k| self.mask[k] && self.grid.is_boundary(k))
    }

    /// Removes every cell that has an axis neighbor outside the set.
    pub fn eroded(&self) -> Self {
        let mask: Vec<bool> = (0..self.mask.len())
            .map(|k| {
                self.mask[k]
                    && !self.grid.is_boundary(k)
                    && self.grid.neighbors(k).all(|nb| self.mask[nb])
            })
            .collect();
        let support_radius = support_radius(&self.grid, &mask);
        PositivitySet { grid: self.grid, mask, threshold: self.threshold, support_radius }
    }

    /// Cells of `self` missing from `other`.
    pub fn missing_from(&self, other: &PositivitySet<T>) -> Vec<usize> {
        assert_eq!(self.mask.len(), other.mask.len(), "masks live on different grids");
        (0..self.mask.len()).filter(|&k| self.mask[k] && !other.mask[k]).collect()
    }

    /// Indices along the first axis of the leftmost and rightmost cells of a 1D set.
    pub fn endpoints(&self) -> Option<(usize, usize)> {
        let first = self.mask.iter().position(|&m| m)?;
        let last = self.mask.iter().rposition(|&m| m)?;
        Some((first, last))
    }
}

fn support_radius<T: Real>(grid: &Grid<T>, mask: &[bool]) -> T {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .fold(T::zero(), |r, (k, _)| r.max(grid.radius(k)))
}

pub fn positivity_set<T: Real>(f: &Field<T>, eps: T) -> PositivitySet<T> {
    assert!(eps >= T::zero(), "positivity threshold must be non-negative");
    let mask: Vec<bool> = f.values.iter().map(|&v| v > eps).collect();
    let support_radius = support_radius(&f.grid, &mask);
    PositivitySet { grid: f.grid, mask, threshold: eps, support_radius }
}
