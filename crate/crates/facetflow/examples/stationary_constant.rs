//! At `p = 2` constant data has the constant solution `u = f / (a + tau^2)`, `v = tau u`.

use facetflow::grid::norm_inf;
use facetflow::scheme::{solve_stationary, PicardOptions};
use facetflow::{Grid, ModelParams, ScalarField};

fn main() -> facetflow::Result<()> {
    let grid = Grid::unit(24)?;
    let params = ModelParams {
        p: 2.0,
        a: 1.0,
        tau: 0.1,
        ..ModelParams::default()
    };
    let f = ScalarField::constant(grid, 1.01);
    let out = solve_stationary(&f, &params, &PicardOptions::default())?;
    let u_exact = 1.01 / (params.a + params.tau * params.tau);
    println!("converged {} after {} outer updates", out.converged, out.update_history.len());
    println!("max |u - {u_exact}| = {:.2e}", norm_inf(&out.u.map(|x| x - u_exact)));
    println!("max |v - {}| = {:.2e}", params.tau * u_exact, norm_inf(&out.v.map(|x| x - params.tau * u_exact)));
    Ok(())
}
