//! Height equation for a given potential, checked against a smooth exact solution.

use std::f64::consts::PI;

use facetflow::grid::norm_inf;
use facetflow::usolver::{operator_u, solve_u, UsolveOptions};
use facetflow::{Grid, ModelParams, ScalarField};

fn main() -> facetflow::Result<()> {
    let params = ModelParams {
        p: 1.5,
        beta: 0.5,
        tau: 0.1,
        ..ModelParams::default()
    };
    let exact = |x: f64, y: f64| 1.0 + 0.3 * (PI * x).cos() * (PI * y).cos();
    for n in [16, 32, 64] {
        let grid = Grid::unit(n)?;
        let ue = ScalarField::from_fn(grid, exact);
        // Discrete right side, so the error measures the solver alone.
        let g = operator_u(&ue, &params);
        let (u, report) = solve_u(&g, &params, &UsolveOptions::default())?;
        let err = norm_inf(&u.zip_map(&ue, |a, b| a - b)?);
        println!(
            "n = {n:>3}  newton its {:>2}  residual {:.1e}  |u - u_exact| = {err:.1e}",
            report.iterations,
            report.residual_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
