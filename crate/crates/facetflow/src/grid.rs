//! Cell-centered fields on a rectangle with homogeneous Neumann boundaries.
//!
//! Two discrete gradients live here. [`gradient`] is the cell-centered
//! central difference with mirrored ghost cells; it feeds the mobility,
//! the subgradient selection and the reported diagnostics. The *corner*
//! gradients are the four one-sided difference pairs of every cell; energies
//! are quadratures over corners and every divergence operator is the exact
//! negative gradient of such an energy, so the discrete operators are
//! conservative, symmetric where linear, and free of checkerboard modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mat2, Vec2};

/// Largest admissible number of cells.
pub const DEFAULT_MAX_CELLS: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_cap(nx, ny, lx, ly, DEFAULT_MAX_CELLS)
    }

    pub fn with_cap(nx: usize, ny: usize, lx: f64, ly: f64, max_cells: usize) -> Result<Self> {
        let v = Self::violations(nx, ny, lx, ly, max_cells);
        if v.is_empty() {
            Ok(Self { nx, ny, lx, ly })
        } else {
            Err(Error::InvalidParams(v.join("; ")))
        }
    }

    pub fn violations(nx: usize, ny: usize, lx: f64, ly: f64, max_cells: usize) -> Vec<String> {
        let mut out = Vec::new();
        if nx < 4 || ny < 4 {
            out.push(format!("grid {nx}x{ny}: at least 4 cells per direction"));
        }
        if nx.saturating_mul(ny) > max_cells {
            out.push(format!("grid {nx}x{ny} exceeds the cap of {max_cells} cells"));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            out.push(format!("grid side lengths {lx} x {ly} must be positive"));
        }
        out
    }

    /// Unit square.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// The four corners of every cell, cell-major in a fixed order.
    pub fn corners(&self) -> impl Iterator<Item = Corner> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).flat_map(move |i| {
                CORNER_SIGNS
                    .iter()
                    .map(move |&(sx, sy)| Corner::new(self, i, j, sx, sy))
            })
        })
    }

    /// Quadrature weight of one corner.
    pub fn corner_weight(&self) -> f64 {
        0.25 * self.cell_area()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} [{} x {}] vs {}x{} [{} x {}]",
                self.nx, self.ny, self.lx, self.ly, other.nx, other.ny, other.lx, other.ly
            )))
        }
    }
}

const CORNER_SIGNS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

/// One-sided difference pair of a cell: `g = sum_k d_k u[dof_k]`.
///
/// A difference reaching across the boundary is identically zero (mirrored
/// ghost), so the corresponding degree of freedom is simply absent.
#[derive(Clone, Copy, Debug)]
pub struct Corner {
    pub cell: usize,
    dofs: [(usize, Vec2); 3],
    len: usize,
}

impl Corner {
    fn new(grid: &Grid, i: usize, j: usize, sx: i8, sy: i8) -> Self {
        let cell = grid.idx(i, j);
        let (ax, ay) = (f64::from(sx) / grid.hx(), f64::from(sy) / grid.hy());
        let xn = neighbor(i, sx, grid.nx).map(|ii| grid.idx(ii, j));
        let yn = neighbor(j, sy, grid.ny).map(|jj| grid.idx(i, jj));
        let mut dofs = [(cell, Vec2::ZERO); 3];
        let mut len = 1;
        let mut dc = Vec2::ZERO;
        if let Some(n) = xn {
            dc.x = -ax;
            dofs[len] = (n, Vec2::new(ax, 0.0));
            len += 1;
        }
        if let Some(n) = yn {
            dc.y = -ay;
            dofs[len] = (n, Vec2::new(0.0, ay));
            len += 1;
        }
        dofs[0] = (cell, dc);
        Self { cell, dofs, len }
    }

    /// Degrees of freedom with their gradient sensitivities `d g / d u`.
    pub fn dofs(&self) -> &[(usize, Vec2)] {
        &self.dofs[..self.len]
    }

    pub fn gradient(&self, u: &[f64]) -> Vec2 {
        self.dofs()
            .iter()
            .fold(Vec2::ZERO, |g, &(k, d)| g + u[k] * d)
    }
}

fn neighbor(i: usize, s: i8, n: usize) -> Option<usize> {
    if s > 0 {
        (i + 1 < n).then_some(i + 1)
    } else {
        i.checked_sub(1)
    }
}

/// One scalar per cell, row-major (`x` fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at cell {k}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
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

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `(1 - w) self + w other`.
    pub fn lerp(&self, other: &ScalarField, w: f64) -> Result<Self> {
        self.zip_map(other, |a, b| (1.0 - w) * a + w * b)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<Vec2>,
}

impl VectorField {
    pub fn from_values(grid: Grid, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} vectors for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite vector component".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn component(&self, f: impl Fn(Vec2) -> f64) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Symmetric 2x2 coefficient per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: Grid,
    values: Vec<Mat2>,
}

impl TensorField {
    pub fn from_values(grid: Grid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} tensors for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if let Some(k) = values
            .iter()
            .position(|m| !m.is_finite() || m.asymmetry() > 1e-12 * m.max_abs_entry().max(1.0))
        {
            return Err(Error::Domain(format!(
                "coefficient at cell {k} is not a finite symmetric matrix"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, m: Mat2) -> Result<Self> {
        Self::from_values(grid, vec![m; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }
}

/// Central differences; ghost cells mirror their neighbors across the
/// boundary face, so the normal component in a boundary cell is half the
/// one-sided difference.
pub fn gradient(u: &ScalarField) -> VectorField {
    let g = u.grid;
    let (hx2, hy2) = (2.0 * g.hx(), 2.0 * g.hy());
    let v = &u.values;
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny {
        let (jm, jp) = (j.saturating_sub(1), (j + 1).min(g.ny - 1));
        for i in 0..g.nx {
            let (im, ip) = (i.saturating_sub(1), (i + 1).min(g.nx - 1));
            out.push(Vec2::new(
                (v[g.idx(ip, j)] - v[g.idx(im, j)]) / hx2,
                (v[g.idx(i, jp)] - v[g.idx(i, jm)]) / hy2,
            ));
        }
    }
    VectorField {
        grid: g,
        values: out,
    }
}

/// Divergence of a corner flux: the field whose area-weighted inner
/// product with any `w` equals `-sum_corners weight * flux . g(w)`.
///
/// `flux(cell, g)` receives the corner gradient of `u`.
pub fn corner_flux_divergence(
    u: &ScalarField,
    mut flux: impl FnMut(usize, Vec2) -> Vec2,
) -> ScalarField {
    let grid = u.grid;
    let w = grid.corner_weight() / grid.cell_area();
    let mut out = vec![0.0; grid.len()];
    for corner in grid.corners() {
        let f = flux(corner.cell, corner.gradient(&u.values));
        for &(k, d) in corner.dofs() {
            out[k] -= w * d.dot(f);
        }
    }
    ScalarField::from_vec_unchecked(grid, out)
}

/// Conservative `div(coef grad v)` with zero flux through the boundary.
pub fn flux_divergence(coef: &TensorField, v: &ScalarField) -> Result<ScalarField> {
    coef.grid.check_same(&v.grid)?;
    Ok(corner_flux_divergence(v, |cell, g| coef.values[cell].apply(g)))
}

/// Quadrature of `phi(grad u)` over the corner gradients.
pub fn corner_integral(u: &ScalarField, phi: impl Fn(Vec2) -> f64) -> f64 {
    let w = u.grid.corner_weight();
    u.grid
        .corners()
        .map(|c| phi(c.gradient(&u.values)))
        .sum::<f64>()
        * w
}

/// Midpoint rule.
pub fn integrate(u: &ScalarField) -> f64 {
    u.values.iter().sum::<f64>() * u.grid.cell_area()
}

/// Quadrature-weighted inner product.
pub fn inner(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * a.grid.cell_area())
}

pub fn norm_lp(u: &ScalarField, r: f64) -> f64 {
    assert!(r >= 1.0, "norm exponent must be >= 1");
    let s: f64 = u.values.iter().map(|v| v.abs().powf(r)).sum();
    (s * u.grid.cell_area()).powf(1.0 / r)
}

pub fn norm_l2(u: &ScalarField) -> f64 {
    norm_lp(u, 2.0)
}

pub fn norm_inf(u: &ScalarField) -> f64 {
    u.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `||grad u||_r` with the cell-centered [`gradient`].
pub fn w1p_seminorm(u: &ScalarField, r: f64) -> f64 {
    assert!(r >= 1.0, "norm exponent must be >= 1");
    let s: f64 = gradient(u).values.iter().map(|g| g.norm().powf(r)).sum();
    (s * u.grid.cell_area()).powf(1.0 / r)
}

/// `(||u||_r^r + ||grad u||_r^r)^(1/r)`.
pub fn w1p_norm(u: &ScalarField, r: f64) -> f64 {
    (norm_lp(u, r).powf(r) + w1p_seminorm(u, r).powf(r)).powf(1.0 / r)
}
