//! Implicit time steps relaxing a ridge; the surface energy decreases.

use std::collections::BTreeMap;

use facetflow::presets::Preset;
use facetflow::scheme::{evolve, PicardOptions, TauSchedule};
use facetflow::{Grid, ModelParams};

fn main() -> facetflow::Result<()> {
    let grid = Grid::unit(24)?;
    let mut ridge = BTreeMap::new();
    ridge.insert("amplitude".to_string(), 0.3);
    ridge.insert("offset".to_string(), 1.0);
    let u0 = Preset::CosineRidge.sample(grid, &ridge)?;
    let params = ModelParams {
        p: 1.5,
        beta: 0.5,
        q: 1.0,
        ..ModelParams::default()
    };
    let schedule = TauSchedule {
        tau_min: 1e-3,
        ..TauSchedule::default()
    };
    let traj = evolve(&u0, None, &params, 0.02, 5, &schedule, &PicardOptions::default())?;
    for s in &traj.steps {
        println!(
            "step {}  surface energy {:.6e}  sup|Du| {:.4}  converged {}",
            s.step, s.surface_energy, s.grad_u_sup, s.solution.converged
        );
    }
    Ok(())
}
