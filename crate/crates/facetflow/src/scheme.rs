//! Stationary solves, `tau`-continuation and backward-Euler evolution.
//!
//! The composite map `v -> u -> v` (solve the height equation with right side
//! `v`, then the linear equation with the new mobility) is available as
//! [`picard_step`]. Its linearization has a mean-mode multiplier of `-a /
//! tau^2`, so iterating it directly diverges for any useful `tau`. The
//! stationary driver therefore freezes only the mobility: with `D` fixed, `v`
//! is an affine function of `u`, and the pair solves
//!
//! ```text
//! min_u  int psi_tau(grad u) + (tau / p) int |u|^p
//!        + (1 / 2a) (int D grad v . grad v + tau int v^2),   v = v(u)
//! ```
//!
//! a strictly convex problem handled by damped Newton. The outer loop
//! refreshes `D` from the damped iterate until `v` stops moving.

use serde::{Deserialize, Serialize};

use crate::diagnostics::surface_energy;
use crate::error::Result;
use crate::grid::{
    corner_integral, gradient, norm_inf, norm_l2, w1p_norm, Grid, ScalarField, VectorField,
};
use crate::linalg::{sparse_diagonal, sparse_from_triplets, sparse_matvec, DirectSolver, Factor, SparseMatrix};
use crate::model::{psi_tau, subgradient_select, ModelParams};
use crate::usolver::{
    energy_psi_excess, hessian_triplets_with, minimize, operator_u, overshooting_cells,
    quadratic_form_positive, solve_u,
    ConvexProblem, Direction, SolveReport, UsolveOptions,
};
use crate::vsolver::{assemble_v_operator, solve_v, VOperator, VsolveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    /// Relaxation weight of the outer update.
    pub damping: f64,
    pub tol_fp: f64,
    pub max_picard: usize,
    pub usolve: UsolveOptions,
    pub vsolve: VsolveOptions,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            damping: 0.7,
            tol_fp: 1e-8,
            max_picard: 200,
            usolve: UsolveOptions::default(),
            vsolve: VsolveOptions::default(),
        }
    }
}

impl PicardOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            out.push(format!("picard.damping = {}: must lie in (0, 1]", self.damping));
        }
        if !(self.tol_fp > 0.0) {
            out.push(format!("picard.tol_fp = {}: must be > 0", self.tol_fp));
        }
        if self.max_picard < 1 {
            out.push("picard.max_picard must be >= 1".into());
        }
        out.extend(self.usolve.violations());
        out.extend(self.vsolve.violations());
        out
    }
}

/// Geometric sequence `tau0 ratio^j` down to `tau_min`, which is always the
/// last level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauSchedule {
    pub tau0: f64,
    pub ratio: f64,
    pub tau_min: f64,
}

impl Default for TauSchedule {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            ratio: 0.5,
            tau_min: 1e-6,
        }
    }
}

impl TauSchedule {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tau0 > 0.0 && self.tau0 <= 1.0) {
            out.push(format!("schedule.tau0 = {}: requires 0 < tau0 <= 1", self.tau0));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            out.push(format!("schedule.ratio = {}: requires 0 < ratio < 1", self.ratio));
        }
        if !(self.tau_min > 0.0) {
            out.push(format!("schedule.tau_min = {}: requires tau_min > 0", self.tau_min));
        } else if self.tau_min > self.tau0 {
            out.push(format!(
                "schedule.tau_min = {} exceeds tau0 = {}",
                self.tau_min, self.tau0
            ));
        }
        out
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut j = 0;
        loop {
            let t = self.tau0 * self.ratio.powi(j);
            if t <= self.tau_min {
                break;
            }
            out.push(t);
            j += 1;
        }
        out.push(self.tau_min);
        out
    }
}

/// Sub-solve record tagged with where it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub tau: f64,
    pub report: SolveReport,
}

#[derive(Clone, Debug)]
pub struct StationaryOutcome {
    pub u: ScalarField,
    pub v: ScalarField,
    pub converged: bool,
    /// Relative outer updates `||v_{k+1} - v_k|| / max(||v_k||, 1)`.
    pub update_history: Vec<f64>,
    pub reports: Vec<StageReport>,
}

/// One application of the (damped) composite map.
///
/// Returns `(v_out, u, reports)` where `u` solves the height equation with
/// right side `v_in` and `v_out = (1 - damping) v_in + damping v(u)`.
pub fn picard_step(
    v_in: &ScalarField,
    f: &ScalarField,
    params: &ModelParams,
    opts: &PicardOptions,
) -> Result<(ScalarField, ScalarField, Vec<StageReport>)> {
    let (u, ru) = solve_u(v_in, params, &opts.usolve)?;
    let (v_raw, rv) = solve_v(&u, f, params, &opts.vsolve)?;
    let v_out = v_in.lerp(&v_raw, opts.damping)?;
    let reports = vec![
        StageReport {
            stage: "picard.u".into(),
            tau: params.tau,
            report: ru,
        },
        StageReport {
            stage: "picard.v".into(),
            tau: params.tau,
            report: rv,
        },
    ];
    Ok((v_out, u, reports))
}

/// Height equation with `v = L^{-1} (f - a u)` eliminated for a frozen `L`.
struct LaggedProblem<'a> {
    grid: Grid,
    params: ModelParams,
    f: &'a ScalarField,
    l: SparseMatrix,
    l_factor: Factor,
    block: &'a mut DirectSolver,
    memo: Option<(Vec<f64>, Vec<f64>)>,
}

impl LaggedProblem<'_> {
    fn v_of(&mut self, u: &[f64]) -> Vec<f64> {
        if let Some((mu, mv)) = &self.memo {
            if mu.as_slice() == u {
                return mv.clone();
            }
        }
        let rhs: Vec<f64> = self
            .f
            .values()
            .iter()
            .zip(u)
            .map(|(f, u)| f - self.params.a * u)
            .collect();
        let v = self.l_factor.solve(&rhs);
        self.memo = Some((u.to_vec(), v.clone()));
        v
    }
}

impl LaggedProblem<'_> {
    /// Newton system for `(du, dv)` with the u-Hessian block and `L` coupled.
    fn coupled_step(
        &mut self,
        u: &ScalarField,
        secant: &[bool],
        rhs: &[f64],
    ) -> Result<(SparseMatrix, Vec<f64>)> {
        let n = u.values().len();
        let h_t = hessian_triplets_with(u, &self.params, secant);
        let h = sparse_from_triplets(n, &h_t)?;
        let cp = self.l.symbolic().col_ptr();
        let ri = self.l.symbolic().row_idx();
        let lv = self.l.val();
        let mut t = h_t;
        t.reserve(2 * n + lv.len());
        for k in 0..n {
            t.push((k, n + k, -1.0));
            t.push((n + k, k, self.params.a));
        }
        for c in 0..n {
            for idx in cp[c]..cp[c + 1] {
                t.push((n + ri[idx], n + c, lv[idx]));
            }
        }
        let block = sparse_from_triplets(2 * n, &t)?;
        let sol = self.block.factor(&block, false)?.solve(rhs);
        Ok((h, sol))
    }
}

impl ConvexProblem for LaggedProblem<'_> {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn energy(&mut self, u: &[f64]) -> Result<f64> {
        let v = self.v_of(u);
        let lv = sparse_matvec(&self.l, &v);
        let quad: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        let uf = ScalarField::from_vec_unchecked(self.grid, u.to_vec());
        Ok(energy_psi_excess(&uf, &self.params)
            + 0.5 / self.params.a * quad * self.grid.cell_area())
    }

    fn residual(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        let v = self.v_of(u);
        let uf = ScalarField::from_vec_unchecked(self.grid, u.to_vec());
        let mut r = operator_u(&uf, &self.params).into_values();
        r.iter_mut().zip(&v).for_each(|(r, v)| *r -= v);
        Ok(r)
    }

    fn direction(&mut self, u: &[f64], r: &[f64], iteration: usize) -> Result<Direction> {
        let n = u.len();
        let uf = ScalarField::from_vec_unchecked(self.grid, u.to_vec());
        let mut rhs = vec![0.0; 2 * n];
        rhs[..n].iter_mut().zip(r).for_each(|(b, r)| *b = -r);
        let (mut h, mut sol) = self.coupled_step(&uf, &[], &rhs)?;
        let secant = overshooting_cells(u, &sol[..n], self.params.p);
        if secant.contains(&true) {
            (h, sol) = self.coupled_step(&uf, &secant, &rhs)?;
        }
        let positive = quadratic_form_positive(&h, iteration as u64);

        let hd = sparse_diagonal(&h);
        let ld = sparse_diagonal(&self.l);
        let diag = hd
            .iter()
            .zip(&ld)
            .map(|(h, l)| h + self.params.a / l)
            .collect();
        Ok(Direction {
            step: sol[..n].to_vec(),
            diag,
            positive,
        })
    }
}

pub fn solve_stationary(
    f: &ScalarField,
    params: &ModelParams,
    opts: &PicardOptions,
) -> Result<StationaryOutcome> {
    solve_stationary_from(f, params, opts, None)
}

/// [`solve_stationary`] seeded with a previous `(u, v)`.
pub fn solve_stationary_from(
    f: &ScalarField,
    params: &ModelParams,
    opts: &PicardOptions,
    initial: Option<(&ScalarField, &ScalarField)>,
) -> Result<StationaryOutcome> {
    params.validate()?;
    let grid = *f.grid();
    let (mut u, mut v) = match initial {
        Some((u, v)) => {
            crate::grid::inner(u, f)?;
            crate::grid::inner(v, f)?;
            (u.clone(), v.clone())
        }
        None => (ScalarField::zeros(grid), ScalarField::zeros(grid)),
    };
    let scale = norm_l2(f).max(1.0);
    let mut l_solver = DirectSolver::new();
    let mut block_solver = DirectSolver::new();
    let mut history = Vec::new();
    let mut reports = Vec::new();
    for _ in 0..opts.max_picard {
        let op: VOperator = assemble_v_operator(&u, params);
        let l = op.sparse()?;
        let l_factor = l_solver.factor(&l, true)?;
        let mut problem = LaggedProblem {
            grid,
            params: *params,
            f,
            l,
            l_factor,
            block: &mut block_solver,
            memo: None,
        };
        let (u_star, report) = minimize(&mut problem, u.values().to_vec(), scale, &opts.usolve)?;
        let v_star = problem.v_of(&u_star);
        let inner_ok = report.converged;
        reports.push(StageReport {
            stage: "stationary.inner".into(),
            tau: params.tau,
            report,
        });
        let u_star = ScalarField::from_vec_unchecked(grid, u_star);
        let v_star = ScalarField::from_vec_unchecked(grid, v_star);
        let u_next = u.lerp(&u_star, opts.damping)?;
        let v_next = v.lerp(&v_star, opts.damping)?;
        let update = norm_l2(&v_next.zip_map(&v, |a, b| a - b)?) / norm_l2(&v).max(1.0);
        history.push(update);
        if !inner_ok || update <= opts.tol_fp {
            return Ok(StationaryOutcome {
                u: u_star,
                v: v_star,
                converged: inner_ok,
                update_history: history,
                reports,
            });
        }
        u = u_next;
        v = v_next;
    }
    Ok(StationaryOutcome {
        u,
        v,
        converged: false,
        update_history: history,
        reports,
    })
}

/// Per-level record of a continuation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub tau: f64,
    pub energy_psi: f64,
    pub w1p_norm: f64,
    pub u_inf: f64,
    pub v_inf: f64,
    pub grad_u_sup: f64,
    pub h_sup: f64,
    pub converged: bool,
    pub outer_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub u: ScalarField,
    pub v: ScalarField,
    pub h: VectorField,
    pub tau_final: f64,
    pub levels: Vec<LevelDiagnostics>,
    pub reports: Vec<StageReport>,
    pub converged: bool,
}

/// `grad u / (|grad u|^2 + tau)^(1/2)` per cell.
pub fn extract_h(u: &ScalarField, tau: f64) -> VectorField {
    gradient(u).map(|g| subgradient_select(g, tau))
}

pub fn continuation_solve(
    f: &ScalarField,
    params: &ModelParams,
    schedule: &TauSchedule,
    opts: &PicardOptions,
) -> Result<StationarySolution> {
    continuation_solve_from(f, params, schedule, opts, None)
}

/// [`continuation_solve`] whose first level is seeded with `(u, v)`.
pub fn continuation_solve_from(
    f: &ScalarField,
    params: &ModelParams,
    schedule: &TauSchedule,
    opts: &PicardOptions,
    initial: Option<(&ScalarField, &ScalarField)>,
) -> Result<StationarySolution> {
    let grid = *f.grid();
    let mut warm: Option<(ScalarField, ScalarField)> = initial.map(|(u, v)| (u.clone(), v.clone()));
    let mut levels = Vec::new();
    let mut reports = Vec::new();
    let mut last = None;
    let mut converged = true;
    for tau in schedule.levels() {
        let pt = params.with_tau(tau);
        let out = solve_stationary_from(f, &pt, opts, warm.as_ref().map(|(u, v)| (u, v)))?;
        let h = extract_h(&out.u, tau);
        levels.push(LevelDiagnostics {
            tau,
            energy_psi: corner_integral(&out.u, |g| psi_tau(g, &pt)),
            w1p_norm: w1p_norm(&out.u, params.p),
            u_inf: norm_inf(&out.u),
            v_inf: norm_inf(&out.v),
            grad_u_sup: gradient(&out.u).sup_norm(),
            h_sup: h.sup_norm(),
            converged: out.converged,
            outer_iterations: out.update_history.len(),
        });
        reports.extend(out.reports);
        let ok = out.converged;
        last = Some((out.u.clone(), out.v.clone(), h, tau));
        warm = Some((out.u, out.v));
        if !ok {
            converged = false;
            break;
        }
    }
    let (u, v, h, tau_final) = last.unwrap_or_else(|| {
        let z = ScalarField::zeros(grid);
        let h = extract_h(&z, params.tau);
        (z.clone(), z, h, params.tau)
    });
    Ok(StationarySolution {
        u,
        v,
        h,
        tau_final,
        levels,
        reports,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct EvolveStep {
    pub step: usize,
    pub solution: StationarySolution,
    /// `(1/p) int |grad u|^p + beta int |grad u|`.
    pub surface_energy: f64,
    pub grad_u_sup: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<EvolveStep>,
    pub converged: bool,
}

/// Backward-Euler steps: each one solves the stationary problem with
/// `a = 1 / delta` and `f = u_prev / delta + f_ext`, by a full continuation
/// started from zero.
pub fn evolve(
    u0: &ScalarField,
    f_ext: Option<&ScalarField>,
    params: &ModelParams,
    delta: f64,
    nsteps: usize,
    schedule: &TauSchedule,
    opts: &PicardOptions,
) -> Result<Trajectory> {
    let step_params = ModelParams {
        a: 1.0 / delta,
        delta,
        ..*params
    };
    step_params.validate()?;
    if nsteps == 0 {
        return Err(crate::Error::InvalidParams("evolve needs nsteps >= 1".into()));
    }
    if let Some(fe) = f_ext {
        crate::grid::inner(fe, u0)?;
    }
    let mut u_prev = u0.clone();
    let mut steps = Vec::with_capacity(nsteps);
    for step in 1..=nsteps {
        let mut f = u_prev.map(|x| x / delta);
        if let Some(fe) = f_ext {
            f = f.zip_map(fe, |a, b| a + b)?;
        }
        // The previous step's solution belongs to tau_min, not to the first
        // level, so every step restarts the continuation from zero.
        let sol = continuation_solve(&f, &step_params, schedule, opts)?;
        let ok = sol.converged;
        u_prev = sol.u.clone();
        steps.push(EvolveStep {
            step,
            surface_energy: surface_energy(&sol.u, params.p, params.beta),
            grad_u_sup: gradient(&sol.u).sup_norm(),
            solution: sol,
        });
        if !ok {
            return Ok(Trajectory {
                steps,
                converged: false,
            });
        }
    }
    Ok(Trajectory {
        steps,
        converged: true,
    })
}
