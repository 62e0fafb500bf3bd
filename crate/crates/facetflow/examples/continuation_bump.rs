//! Driving `tau` to zero on a localized bump and watching the facet form.

use std::collections::BTreeMap;

use facetflow::diagnostics::gradient_bound_monitor;
use facetflow::presets::Preset;
use facetflow::scheme::{continuation_solve, PicardOptions, TauSchedule};
use facetflow::{Grid, ModelParams};

fn main() -> facetflow::Result<()> {
    let grid = Grid::unit(32)?;
    let f = Preset::GaussianBump.sample(grid, &BTreeMap::new())?;
    let params = ModelParams {
        p: 1.5,
        beta: 1.0,
        q: 1.0,
        ..ModelParams::default()
    };
    let schedule = TauSchedule {
        tau0: 1.0,
        ratio: 0.25,
        tau_min: 1e-4,
    };
    let sol = continuation_solve(&f, &params, &schedule, &PicardOptions::default())?;
    println!("{:>9} {:>12} {:>10} {:>10} {:>10} {:>6}", "tau", "energy", "|u|_inf", "sup|Du|", "sup|h|", "outer");
    for l in &sol.levels {
        println!(
            "{:>9.1e} {:>12.6e} {:>10.5} {:>10.5} {:>10.7} {:>6}",
            l.tau, l.energy_psi, l.u_inf, l.grad_u_sup, l.h_sup, l.outer_iterations
        );
    }
    let per_level: Vec<(f64, f64)> = sol.levels.iter().map(|l| (l.tau, l.grad_u_sup)).collect();
    let monitor = gradient_bound_monitor(&per_level, params.p);
    println!("converged {}  gradient monitor {:?}", sol.converged, monitor.verdict);
    Ok(())
}
