//! Pointwise regularized energy density, its gradient and the mobility.

use facetflow::model::{grad_psi_tau, mobility_d_tau, psi_tau, rho_tau, subgradient_select};
use facetflow::{ModelParams, Vec2};

fn main() {
    let params = ModelParams {
        p: 1.5,
        beta: 0.5,
        q: 2.0,
        tau: 1e-3,
        ..ModelParams::default()
    };
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "|xi|", "rho_tau", "psi_tau", "|grad psi|", "|h|");
    for k in -4..=2 {
        let r = 10f64.powi(k);
        let xi = Vec2::new(0.6 * r, 0.8 * r);
        println!(
            "{:>10.1e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.8}",
            r,
            rho_tau(xi.norm_sq(), &params),
            psi_tau(xi, &params),
            grad_psi_tau(xi, &params).norm(),
            subgradient_select(xi, params.tau).norm()
        );
    }
    let d = mobility_d_tau(Vec2::new(3.0, 4.0), params.q, params.tau);
    println!("D_tau at xi = (3, 4): {d:?}");
    println!("smallest eigenvalue {:.6}", d.min_eigenvalue_sym());
}
