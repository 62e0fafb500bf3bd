//! Linear subproblem `-div(D_tau(grad u) grad v) + tau v = f - a u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{flux_divergence, gradient, norm_inf, ScalarField, TensorField};
use crate::linalg::{pcg, sparse_from_triplets, SparseMatrix};
use crate::model::{mobility_d_tau, ModelParams};
use crate::usolver::SolveReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VsolveOptions {
    pub tol: f64,
    /// `None` means `10 (nx + ny)`.
    pub max_cg: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for VsolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_cg: None,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl VsolveOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tol > 0.0) {
            out.push(format!("vsolve.tol = {}: must be > 0", self.tol));
        }
        if self.max_cg == Some(0) {
            out.push("vsolve.max_cg must be >= 1".into());
        }
        out
    }
}

/// `v -> -div(D v) + tau v` for a frozen coefficient `D`.
#[derive(Clone, Debug)]
pub struct VOperator {
    coef: TensorField,
    tau: f64,
}

/// Operator with the mobility `D_tau(grad u)` sampled per cell.
pub fn assemble_v_operator(u: &ScalarField, params: &ModelParams) -> VOperator {
    let coef = gradient(u)
        .values()
        .iter()
        .map(|&g| mobility_d_tau(g, params.q, params.tau))
        .collect();
    VOperator {
        coef: TensorField::from_values(*u.grid(), coef).expect("mobility is finite and symmetric"),
        tau: params.tau,
    }
}

impl VOperator {
    pub fn new(coef: TensorField, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau = {tau} must be positive")));
        }
        Ok(Self { coef, tau })
    }

    pub fn coefficients(&self) -> &TensorField {
        &self.coef
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn apply(&self, v: &ScalarField) -> Result<ScalarField> {
        let div = flux_divergence(&self.coef, v)?;
        v.zip_map(&div, |x, d| self.tau * x - d)
    }

    fn apply_slice(&self, v: &[f64], out: &mut [f64]) {
        let vf = ScalarField::from_vec_unchecked(*self.coef.grid(), v.to_vec());
        let div = flux_divergence(&self.coef, &vf).expect("same grid");
        for ((o, &x), d) in out.iter_mut().zip(v).zip(div.values()) {
            *o = self.tau * x - d;
        }
    }

    /// Matrix entries in row/column/value form; duplicates are to be summed.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let grid = self.coef.grid();
        let w = grid.corner_weight() / grid.cell_area();
        let mut t = Vec::with_capacity(9 * 4 * grid.len() + grid.len());
        for corner in grid.corners() {
            let m = self.coef.values()[corner.cell].scaled(w);
            for &(ki, di) in corner.dofs() {
                let mdi = m.apply(di);
                for &(kj, dj) in corner.dofs() {
                    t.push((kj, ki, dj.dot(mdi)));
                }
            }
        }
        for k in 0..grid.len() {
            t.push((k, k, self.tau));
        }
        t
    }

    pub fn sparse(&self) -> Result<SparseMatrix> {
        sparse_from_triplets(self.coef.grid().len(), &self.triplets())
    }

    /// Row-major dense matrix; meant for small grids.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.coef.grid().len();
        let mut a = vec![vec![0.0; n]; n];
        for (r, c, v) in self.triplets() {
            a[r][c] += v;
        }
        a
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.coef.grid().len()];
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// Preconditioned CG for `A v = rhs`.
    pub fn solve(
        &self,
        rhs: &ScalarField,
        initial: Option<&ScalarField>,
        opts: &VsolveOptions,
    ) -> Result<(ScalarField, SolveReport)> {
        let grid = *self.coef.grid();
        if rhs.grid() != &grid {
            return Err(Error::GridMismatch("right-hand side".into()));
        }
        let max_cg = opts.max_cg.unwrap_or(10 * (grid.nx + grid.ny));
        let diag = match opts.preconditioner {
            Preconditioner::Diagonal => Some(self.diagonal()),
            Preconditioner::None => None,
        };
        let out = pcg(
            |v, o| self.apply_slice(v, o),
            rhs.values(),
            initial.map(|u| u.values()),
            diag.as_deref(),
            opts.tol,
            max_cg,
        );
        let report = SolveReport {
            iterations: out.iterations,
            residual_history: out.residual_history,
            converged: out.converged,
            energy_final: f64::NAN,
            energy_history: Vec::new(),
            fallback_steps: 0,
            hessian_positive: true,
            roundoff_limited: false,
        };
        Ok((ScalarField::from_vec_unchecked(grid, out.x), report))
    }
}

/// `f - a u`.
pub fn v_rhs(u: &ScalarField, f: &ScalarField, params: &ModelParams) -> Result<ScalarField> {
    f.zip_map(u, |fi, ui| fi - params.a * ui)
}

pub fn solve_v(
    u: &ScalarField,
    f: &ScalarField,
    params: &ModelParams,
    opts: &VsolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    params.validate()?;
    let rhs = v_rhs(u, f, params)?;
    assemble_v_operator(u, params).solve(&rhs, None, opts)
}

/// `(1 / tau) ||f - a u||_inf - ||v||_inf`; non-negative for exact solves.
pub fn check_v_maximum_bound(
    v: &ScalarField,
    u: &ScalarField,
    f: &ScalarField,
    params: &ModelParams,
) -> Result<f64> {
    let rhs = v_rhs(u, f, params)?;
    Ok(norm_inf(&rhs) / params.tau - norm_inf(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::Mat2;

    fn params(tau: f64) -> ModelParams {
        ModelParams {
            tau,
            ..ModelParams::default()
        }
    }

    #[test]
    fn constant_height_gives_scaled_laplacian() {
        let grid = Grid::unit(6).unwrap();
        let pr = params(0.3);
        let op = assemble_v_operator(&ScalarField::constant(grid, 4.0), &pr);
        let lap = VOperator::new(TensorField::constant(grid, Mat2::IDENTITY).unwrap(), 1.0).unwrap();
        let a = op.dense();
        let l = lap.dense();
        for r in 0..grid.len() {
            for c in 0..grid.len() {
                let id = if r == c { 1.0 } else { 0.0 };
                let expected = 1.3 * (l[r][c] - id) + 0.3 * id;
                assert!((a[r][c] - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_data_solves() {
        let grid = Grid::unit(8).unwrap();
        let pr = ModelParams {
            a: 1.0,
            tau: 0.5,
            ..ModelParams::default()
        };
        let u = ScalarField::constant(grid, 2.0);
        let f = ScalarField::constant(grid, 5.0);
        let (v, rep) = solve_v(&u, &f, &pr, &VsolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(v.values().iter().all(|x| (x - 6.0).abs() < 1e-10));
        assert!(check_v_maximum_bound(&v, &u, &f, &pr).unwrap().abs() < 1e-9);

        let u = ScalarField::from_fn(grid, |x, y| x * y);
        let f = u.map(|x| pr.a * x);
        let (v, _) = solve_v(&u, &f, &pr, &VsolveOptions::default()).unwrap();
        assert_eq!(norm_inf(&v), 0.0);
        assert_eq!(check_v_maximum_bound(&v, &u, &f, &pr).unwrap(), 0.0);
    }

    #[test]
    fn unpreconditioned_cg_agrees() {
        let grid = Grid::unit(10).unwrap();
        let pr = params(0.2);
        let u = ScalarField::from_fn(grid, |x, y| (4.0 * x).sin() * y);
        let f = ScalarField::from_fn(grid, |x, _| x);
        let (v1, r1) = solve_v(&u, &f, &pr, &VsolveOptions::default()).unwrap();
        let opts = VsolveOptions {
            preconditioner: Preconditioner::None,
            ..VsolveOptions::default()
        };
        let (v2, r2) = solve_v(&u, &f, &pr, &opts).unwrap();
        assert!(r1.converged && r2.converged);
        let d = v1.zip_map(&v2, |a, b| a - b).unwrap();
        assert!(norm_inf(&d) < 1e-9);
    }
}
