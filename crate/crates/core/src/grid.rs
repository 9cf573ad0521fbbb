//! Uniform periodic grids on the unit box and the cell-centred fields that
//! live on them.
//!
//! Storage is row-major with `j` (y) as the slow axis. A 1D grid is a 2D grid
//! with `ny = 1`; every y-derivative of a 1D field is identically zero.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Narrowest grid the five-point and cross stencils accept.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl Grid {
    pub fn new(dim: usize, nx: usize, ny: usize) -> Result<Self> {
        match dim {
            1 => {
                if ny != 1 {
                    return Err(Error::InvalidParameter(format!("1D grids have ny = 1, got {ny}")));
                }
            }
            2 => {
                if ny < MIN_CELLS {
                    return Err(Error::GridTooSmall { axis: 'y', cells: ny, min: MIN_CELLS });
                }
            }
            d => return Err(Error::BadDimension(d)),
        }
        if nx < MIN_CELLS {
            return Err(Error::GridTooSmall { axis: 'x', cells: nx, min: MIN_CELLS });
        }
        Ok(Self { dim, nx, ny, dx: 1.0 / nx as f64, dy: 1.0 / ny as f64 })
    }

    pub fn line(nx: usize) -> Result<Self> {
        Self::new(1, nx, 1)
    }

    pub fn square(nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, nx, ny)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_2d(&self) -> bool {
        self.dim == 2
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Smallest cell width over the active axes.
    pub fn min_spacing(&self) -> f64 {
        if self.is_2d() {
            self.dx.min(self.dy)
        } else {
            self.dx
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell measure used in every grid sum (`Δx` in 1D, `ΔxΔy` in 2D).
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Linear index of the periodic image of `(i, j)`.
    #[inline]
    pub fn wrap(&self, i: isize, j: isize) -> usize {
        let i = i.rem_euclid(self.nx as isize) as usize;
        let j = j.rem_euclid(self.ny as isize) as usize;
        self.index(i, j)
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Cell-centre coordinate `(i + 1/2)Δx`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if self.is_2d() {
            (j as f64 + 0.5) * self.dy
        } else {
            0.0
        }
    }

    /// Neighbour indices `(east, west, north, south)` of cell `(i, j)`. On 1D
    /// grids north and south alias the cell itself.
    #[inline]
    pub fn neighbours(&self, i: usize, j: usize) -> [usize; 4] {
        let e = if i + 1 == self.nx { 0 } else { i + 1 };
        let w = if i == 0 { self.nx - 1 } else { i - 1 };
        let n = if j + 1 == self.ny { 0 } else { j + 1 };
        let s = if j == 0 { self.ny - 1 } else { j - 1 };
        [self.index(e, j), self.index(w, j), self.index(i, n), self.index(i, s)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_vec(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "raster has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every cell centre.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    /// Periodic read at any signed index.
    #[inline]
    pub fn sample(&self, i: isize, j: isize) -> f64 {
        self.values[self.grid.wrap(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ f · vol`, the midpoint-rule integral over the unit box.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First cell whose value is not strictly positive, if any.
    pub fn first_non_positive(&self) -> Option<(usize, usize, f64)> {
        self.values.iter().position(|&v| !(v > 0.0)).map(|k| {
            let (i, j) = self.grid.coords(k);
            (i, j, self.values[k])
        })
    }

    pub fn require_positive(&self, quantity: &'static str) -> Result<()> {
        match self.first_non_positive() {
            Some((i, j, value)) => Err(Error::NonPositiveField { quantity, i, j, value }),
            None => Ok(()),
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;

    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b).expect("field grids differ")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;

    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b).expect("field grids differ")
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;

    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b).expect("field grids differ")
    }
}

/// Two-component vector field. On 1D grids the y component is carried as
/// an all-zero field and never differentiated.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    x: ScalarField,
    y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.check_grid(&y)?;
        Ok(Self { x, y })
    }

    /// 1D constructor; the y component is zero.
    pub fn along_x(x: ScalarField) -> Self {
        let y = ScalarField::zeros(*x.grid());
        Self { x, y }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { x: ScalarField::zeros(grid), y: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn x(&self) -> &ScalarField {
        &self.x
    }

    pub fn y(&self) -> &ScalarField {
        &self.y
    }

    pub fn x_mut(&mut self) -> &mut ScalarField {
        &mut self.x
    }

    pub fn y_mut(&mut self) -> &mut ScalarField {
        &mut self.y
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.x, self.y)
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        self.x.zip_map(&self.y, |a, b| a.hypot(b)).expect("components share a grid")
    }

    pub fn integral(&self) -> [f64; 2] {
        [self.x.integral(), self.y.integral()]
    }
}
