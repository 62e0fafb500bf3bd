//! Height subproblem `-div(rho_tau(|grad u|^2) grad u) + tau |u|^(p-2) u = g`
//! solved as the minimizer of its strictly convex energy by damped Newton.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{corner_flux_divergence, corner_integral, Grid, ScalarField};
use crate::linalg::{sparse_diagonal, sparse_from_triplets, sparse_matvec, DirectSolver, SparseMatrix};
use crate::model::{
    grad_psi_tau, hessian_psi_tau, psi_tau, psi_tau_excess, zeroth_order, zeroth_order_slope, ModelParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UsolveOptions {
    pub tol_residual: f64,
    pub max_newton: usize,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
}

impl Default for UsolveOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_newton: 100,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
        }
    }
}

impl UsolveOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tol_residual > 0.0) {
            out.push(format!("usolve.tol_residual = {}: must be > 0", self.tol_residual));
        }
        if self.max_newton < 1 {
            out.push("usolve.max_newton must be >= 1".into());
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            out.push(format!("usolve.armijo_c = {}: must lie in (0, 1)", self.armijo_c));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            out.push(format!(
                "usolve.armijo_shrink = {}: must lie in (0, 1)",
                self.armijo_shrink
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual at every iterate, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub energy_final: f64,
    /// Energy at every accepted iterate (empty for linear solves).
    #[serde(default)]
    pub energy_history: Vec<f64>,
    /// Steps taken along the scaled gradient instead of the Newton direction.
    #[serde(default)]
    pub fallback_steps: usize,
    /// Every Newton matrix passed the random quadratic-form probe.
    #[serde(default = "yes")]
    pub hessian_positive: bool,
    /// Stopped on a stalled residual that had reached the rounding floor
    /// of the discrete operator rather than the requested tolerance.
    #[serde(default)]
    pub roundoff_limited: bool,
}

fn yes() -> bool {
    true
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// `-div(grad psi_tau(grad u))`, the regularized p-Laplacian plus 1-Laplacian.
pub fn p_laplace_div(u: &ScalarField, params: &ModelParams) -> ScalarField {
    corner_flux_divergence(u, |_, g| grad_psi_tau(g, params)).map(|x| -x)
}

/// `-div(grad psi_tau(grad u)) + tau |u|^(p-2) u`.
pub fn operator_u(u: &ScalarField, params: &ModelParams) -> ScalarField {
    let mut out = p_laplace_div(u, params);
    for (o, &x) in out.values_mut().iter_mut().zip(u.values()) {
        *o += params.tau * zeroth_order(x, params.p);
    }
    out
}

/// `int psi_tau(grad u) + (tau / p) int |u|^p`.
pub fn energy_psi_part(u: &ScalarField, params: &ModelParams) -> f64 {
    let area = u.grid().cell_area();
    let zeroth: f64 = u.values().iter().map(|x| x.abs().powf(params.p)).sum();
    corner_integral(u, |g| psi_tau(g, params)) + params.tau / params.p * zeroth * area
}

/// [`energy_psi_part`] minus its value at a constant field. Minimizers
/// compare these, since `psi_tau(0)` can dwarf the differences they need.
pub(crate) fn energy_psi_excess(u: &ScalarField, params: &ModelParams) -> f64 {
    let area = u.grid().cell_area();
    let zeroth: f64 = u.values().iter().map(|x| x.abs().powf(params.p)).sum();
    corner_integral(u, |g| psi_tau_excess(g, params)) + params.tau / params.p * zeroth * area
}

pub fn energy_u(u: &ScalarField, g: &ScalarField, params: &ModelParams) -> Result<f64> {
    let lin = crate::grid::inner(u, g)?;
    Ok(energy_psi_part(u, params) - lin)
}

pub fn residual_u(u: &ScalarField, g: &ScalarField, params: &ModelParams) -> Result<ScalarField> {
    operator_u(u, params).zip_map(g, |a, b| a - b)
}

/// Jacobian of [`operator_u`], per unit area.
pub(crate) fn hessian_triplets(u: &ScalarField, params: &ModelParams) -> Vec<(usize, usize, f64)> {
    hessian_triplets_with(u, params, &[])
}

/// Cells where a Newton step overshoots the root of `|u|^(p-2) u` past `-u`.
///
/// For `p < 2` the tangent of that term flattens away from zero, so a cell
/// sitting near zero keeps jumping across it and Newton stalls into a slow
/// linear crawl. Those cells get the secant slope instead.
pub(crate) fn overshooting_cells(u: &[f64], step: &[f64], p: f64) -> Vec<bool> {
    if p >= 2.0 {
        return Vec::new();
    }
    u.iter()
        .zip(step)
        .map(|(&x, &d)| x * (x + d) < 0.0)
        .collect()
}

/// [`hessian_triplets`] with the secant slope `|u|^(p-2)` in the flagged cells.
pub(crate) fn hessian_triplets_with(
    u: &ScalarField,
    params: &ModelParams,
    secant: &[bool],
) -> Vec<(usize, usize, f64)> {
    let grid = u.grid();
    let w = grid.corner_weight() / grid.cell_area();
    let mut t = Vec::with_capacity(9 * 4 * grid.len() + grid.len());
    for corner in grid.corners() {
        let m = hessian_psi_tau(corner.gradient(u.values()), params).scaled(w);
        for &(ki, di) in corner.dofs() {
            let mdi = m.apply(di);
            for &(kj, dj) in corner.dofs() {
                t.push((kj, ki, dj.dot(mdi)));
            }
        }
    }
    for (k, &x) in u.values().iter().enumerate() {
        let slope = if secant.get(k).copied().unwrap_or(false) {
            zeroth_order_slope(x, params.p) / (params.p - 1.0)
        } else {
            zeroth_order_slope(x, params.p)
        };
        t.push((k, k, params.tau * slope));
    }
    t
}

/// Random quadratic-form probe `z^T A z > 0`.
pub(crate) fn quadratic_form_positive(a: &SparseMatrix, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let az = sparse_matvec(a, &z);
    z.iter().zip(&az).map(|(x, y)| x * y).sum::<f64>() > 0.0
}

/// Search direction produced by a [`ConvexProblem`].
pub(crate) struct Direction {
    pub step: Vec<f64>,
    /// Positive diagonal used to scale the gradient fallback.
    pub diag: Vec<f64>,
    pub positive: bool,
}

/// Smooth strictly convex energy on the cell values of a grid.
///
/// `residual` is the energy gradient divided by the cell area.
pub(crate) trait ConvexProblem {
    fn grid(&self) -> Grid;
    fn energy(&mut self, u: &[f64]) -> Result<f64>;
    fn residual(&mut self, u: &[f64]) -> Result<Vec<f64>>;
    fn direction(&mut self, u: &[f64], r: &[f64], iteration: usize) -> Result<Direction>;
}

fn l2(grid: &Grid, x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() * grid.cell_area()).sqrt()
}

/// Damped Newton with Armijo backtracking and a scaled-gradient fallback.
///
/// Stops when `||residual||_2 / scale <= tol`.
pub(crate) fn minimize(
    problem: &mut impl ConvexProblem,
    mut u: Vec<f64>,
    scale: f64,
    opts: &UsolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let grid = problem.grid();
    let mut energy = problem.energy(&u)?;
    let mut r = problem.residual(&u)?;
    let mut rel = l2(&grid, &r) / scale;
    let mut report = SolveReport {
        iterations: 0,
        residual_history: vec![rel],
        converged: rel <= opts.tol_residual,
        energy_final: energy,
        energy_history: vec![energy],
        fallback_steps: 0,
        hessian_positive: true,
        roundoff_limited: false,
    };
    while !report.converged && report.iterations < opts.max_newton {
        let dir = problem.direction(&u, &r, report.iterations)?;
        report.hessian_positive &= dir.positive;
        if stalled(&report.residual_history) && rel * scale <= roundoff_floor(&grid, &u, &dir.diag) {
            report.converged = true;
            report.roundoff_limited = true;
            break;
        }
        let newton_ok = dir.step.iter().all(|s| s.is_finite());
        let mut accepted = None;
        if newton_ok {
            accepted = line_search(problem, &u, &r, &dir.step, energy, opts, Some(&dir.diag))?;
        }
        if accepted.is_none() {
            let step: Vec<f64> = r.iter().zip(&dir.diag).map(|(ri, d)| -ri / d).collect();
            accepted = line_search(problem, &u, &r, &step, energy, opts, None)?;
            if accepted.is_some() {
                report.fallback_steps += 1;
            }
        }
        let Some((un, en, rn)) = accepted else {
            break;
        };
        u = un;
        energy = en;
        r = rn;
        rel = l2(&grid, &r) / scale;
        report.iterations += 1;
        report.residual_history.push(rel);
        report.energy_history.push(energy);
        report.converged = rel <= opts.tol_residual;
    }
    report.energy_final = energy;
    Ok((u, report))
}

/// Iterations over which a residual must halve to count as progressing.
const STALL_WINDOW: usize = 5;

fn stalled(history: &[f64]) -> bool {
    let n = history.len();
    n > STALL_WINDOW && history[n - 1 - STALL_WINDOW..].iter().skip(1).all(|&r| r > 0.5 * history[n - 1 - STALL_WINDOW])
}

/// Residual size explained by rounding in `H u`, from the Jacobian diagonal.
fn roundoff_floor(grid: &Grid, u: &[f64], diag: &[f64]) -> f64 {
    let terms: Vec<f64> = u.iter().zip(diag).map(|(x, d)| x.abs() * d.abs()).collect();
    16.0 * f64::EPSILON * l2(grid, &terms)
}

type Trial = Option<(Vec<f64>, f64, Vec<f64>)>;

#[allow(clippy::too_many_arguments)]
fn line_search(
    problem: &mut impl ConvexProblem,
    u: &[f64],
    r: &[f64],
    step: &[f64],
    energy: f64,
    opts: &UsolveOptions,
    newton: Option<&[f64]>,
) -> Result<Trial> {
    let grid = problem.grid();
    let area = grid.cell_area();
    let slope = area * r.iter().zip(step).map(|(a, b)| a * b).sum::<f64>();
    if !(slope < 0.0) {
        return Ok(None);
    }
    // Near the minimizer the predicted decrease drops below the rounding
    // noise of the energy; Newton steps are then judged by the residual in
    // the norm of the inverse Jacobian diagonal. The plain norm would let
    // cells pinned near a singular zero of `|u|^(p-2) u` veto every step.
    let roundoff = -slope <= 1e-11 * (energy.abs() + area);
    let weighted = |x: &[f64], d: &[f64]| x.iter().zip(d).map(|(a, b)| a * a / b).sum::<f64>().sqrt();
    let base = newton.map(|d| weighted(r, d));
    let mut alpha = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = u.iter().zip(step).map(|(x, s)| x + alpha * s).collect();
        let e = problem.energy(&trial)?;
        if let (Some(d), Some(base), true) = (newton, base, roundoff) {
            let rt = problem.residual(&trial)?;
            if e.is_finite() && weighted(&rt, d) <= (1.0 - opts.armijo_c * alpha) * base {
                return Ok(Some((trial, e, rt)));
            }
        } else if e.is_finite() && e <= energy + opts.armijo_c * alpha * slope {
            let rt = problem.residual(&trial)?;
            return Ok(Some((trial, e, rt)));
        }
        alpha *= opts.armijo_shrink;
    }
    Ok(None)
}

struct UProblem<'a> {
    g: &'a ScalarField,
    params: ModelParams,
    solver: DirectSolver,
}

impl ConvexProblem for UProblem<'_> {
    fn grid(&self) -> Grid {
        *self.g.grid()
    }

    fn energy(&mut self, u: &[f64]) -> Result<f64> {
        let u = ScalarField::from_vec_unchecked(self.grid(), u.to_vec());
        Ok(energy_psi_excess(&u, &self.params) - crate::grid::inner(&u, self.g)?)
    }

    fn residual(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        let u = ScalarField::from_vec_unchecked(self.grid(), u.to_vec());
        Ok(residual_u(&u, self.g, &self.params)?.into_values())
    }

    fn direction(&mut self, u: &[f64], r: &[f64], iteration: usize) -> Result<Direction> {
        let uf = ScalarField::from_vec_unchecked(self.grid(), u.to_vec());
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let mut h = sparse_from_triplets(u.len(), &hessian_triplets(&uf, &self.params))?;
        let mut step = self.solver.factor(&h, true)?.solve(&neg);
        let secant = overshooting_cells(u, &step, self.params.p);
        if secant.contains(&true) {
            h = sparse_from_triplets(u.len(), &hessian_triplets_with(&uf, &self.params, &secant))?;
            step = self.solver.factor(&h, true)?.solve(&neg);
        }
        let positive = quadratic_form_positive(&h, iteration as u64);
        Ok(Direction {
            step,
            diag: sparse_diagonal(&h),
            positive,
        })
    }
}

pub fn solve_u(
    g: &ScalarField,
    params: &ModelParams,
    opts: &UsolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    solve_u_from(g, params, opts, None)
}

/// [`solve_u`] started from `initial` instead of the zero field.
pub fn solve_u_from(
    g: &ScalarField,
    params: &ModelParams,
    opts: &UsolveOptions,
    initial: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    params.validate()?;
    let grid = *g.grid();
    let u0 = match initial {
        Some(u) => {
            crate::grid::inner(u, g)?;
            u.values().to_vec()
        }
        None => vec![0.0; grid.len()],
    };
    let scale = crate::grid::norm_l2(g).max(1.0);
    let mut problem = UProblem {
        g,
        params: *params,
        solver: DirectSolver::new(),
    };
    let (u, report) = minimize(&mut problem, u0, scale, opts)?;
    Ok((ScalarField::from_vec_unchecked(grid, u), report))
}
