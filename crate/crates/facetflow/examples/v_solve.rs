//! Anisotropic potential equation for a frozen height field.

use facetflow::grid::integrate;
use facetflow::vsolver::{check_v_maximum_bound, solve_v, Preconditioner, VsolveOptions};
use facetflow::{Grid, ModelParams, ScalarField};

fn main() -> facetflow::Result<()> {
    let grid = Grid::new(48, 32, 1.5, 1.0)?;
    let params = ModelParams {
        q: 3.0,
        tau: 0.05,
        ..ModelParams::default()
    };
    let u = ScalarField::from_fn(grid, |x, y| (2.0 * x).sin() + 0.5 * (x - y).abs());
    let f = ScalarField::from_fn(grid, |x, y| 1.0 + x * y);
    for pc in [Preconditioner::None, Preconditioner::Diagonal] {
        let opts = VsolveOptions {
            preconditioner: pc,
            ..VsolveOptions::default()
        };
        let (v, report) = solve_v(&u, &f, &params, &opts)?;
        println!(
            "{pc:?}: iterations {:>4}  converged {}  mean v {:.6}  max-bound slack {:.3e}",
            report.iterations,
            report.converged,
            integrate(&v) / grid.area(),
            check_v_maximum_bound(&v, &u, &f, &params)?
        );
    }
    Ok(())
}
