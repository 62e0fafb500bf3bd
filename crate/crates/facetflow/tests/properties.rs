use std::f64::consts::PI;

use facetflow::diagnostics::{apriori_report, degiorgi_iterate, DeGiorgiParams};
use facetflow::grid::{flux_divergence, inner, integrate, norm_inf, Grid, ScalarField, TensorField};
use facetflow::model::{
    grad_psi_tau, in_subgradient, mobility_d_tau, psi_tau, subgradient_select, Mat2, ModelParams,
    Vec2,
};
use facetflow::scheme::{solve_stationary, solve_stationary_from, PicardOptions};
use facetflow::usolver::{energy_psi_part, operator_u, solve_u, solve_u_from, UsolveOptions};
use facetflow::vsolver::assemble_v_operator;
use proptest::prelude::*;

fn field(grid: Grid, coeffs: &[(f64, u8, u8)]) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        coeffs
            .iter()
            .map(|&(a, kx, ky)| a * (PI * kx as f64 * x).cos() * (PI * ky as f64 * y).cos())
            .sum::<f64>()
            + 0.05 * (7.0 * x + 3.0 * y).sin()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, u8, u8)>> {
    prop::collection::vec((-2.0..2.0f64, 0u8..4, 0u8..4), 1..4)
}

fn params() -> impl Strategy<Value = ModelParams> {
    (1.2..2.0f64, 0.05..2.0f64, 0.0..5.0f64, 1e-3..1.0f64).prop_map(|(p, beta, q, tau)| ModelParams {
        p,
        beta,
        q,
        tau,
        ..ModelParams::default()
    })
}

fn vec2() -> impl Strategy<Value = Vec2> {
    (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_convex_along_segments(a in coeffs(), b in coeffs(), pr in params(), t in 0.0..1.0f64) {
        let grid = Grid::unit(8).unwrap();
        let (u, w) = (field(grid, &a), field(grid, &b));
        let mid = u.lerp(&w, t).unwrap();
        let lhs = energy_psi_part(&mid, &pr);
        let rhs = (1.0 - t) * energy_psi_part(&u, &pr) + t * energy_psi_part(&w, &pr);
        prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn operator_is_the_energy_gradient(a in coeffs(), b in coeffs(), pr in params()) {
        let grid = Grid::unit(8).unwrap();
        let (u, d) = (field(grid, &a), field(grid, &b));
        let h = 1e-6;
        let plus = energy_psi_part(&u.zip_map(&d, |x, y| x + h * y).unwrap(), &pr);
        let minus = energy_psi_part(&u.zip_map(&d, |x, y| x - h * y).unwrap(), &pr);
        let fd = (plus - minus) / (2.0 * h);
        let exact = inner(&operator_u(&u, &pr), &d).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn pointwise_gradient_is_monotone(x in vec2(), y in vec2(), pr in params()) {
        let d = grad_psi_tau(x, &pr) - grad_psi_tau(y, &pr);
        prop_assert!(d.dot(x - y) >= -1e-9 * (x - y).norm_sq().max(1.0));
        prop_assert!(psi_tau(x, &pr) >= psi_tau(y, &pr) + grad_psi_tau(y, &pr).dot(x - y) - 1e-9 * psi_tau(x, &pr).abs().max(1.0));
    }

    #[test]
    fn regularized_mobility_is_bounded(xi in vec2(), q in 0.0..10.0f64, tau in 1e-8..1.0f64) {
        let d = mobility_d_tau(xi, q, tau);
        prop_assert!(d.asymmetry() <= 1e-15);
        let lo = d.min_eigenvalue_sym();
        prop_assert!(lo >= 1.0 / (1.0 + q * xi.norm()) + tau - 1e-12);
        prop_assert!(d.max_abs_entry() <= 1.0 + tau + 1e-12);
    }

    #[test]
    fn subgradient_selection_lies_in_the_unit_ball(xi in vec2(), tau in 1e-12..1.0f64) {
        let h = subgradient_select(xi, tau);
        prop_assert!(h.norm() < 1.0 + 1e-15);
        prop_assert!(in_subgradient(h, xi, tau.sqrt().max(1e-6)));
    }

    #[test]
    fn v_operator_is_self_adjoint_and_coercive(a in coeffs(), b in coeffs(), c in coeffs(), pr in params()) {
        let grid = Grid::new(8, 6, 1.3, 0.7).unwrap();
        let u = field(grid, &a);
        let (x, y) = (field(grid, &b), field(grid, &c));
        let op = assemble_v_operator(&u, &pr);
        let xy = inner(&op.apply(&x).unwrap(), &y).unwrap();
        let yx = inner(&x, &op.apply(&y).unwrap()).unwrap();
        prop_assert!((xy - yx).abs() <= 1e-12 * xy.abs().max(1.0));
        let xx = inner(&op.apply(&x).unwrap(), &x).unwrap();
        prop_assert!(xx >= pr.tau * inner(&x, &x).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn divergence_of_any_flux_integrates_to_zero(a in coeffs(), m in (0.1..2.0f64, -0.5..0.5f64, 0.1..2.0f64)) {
        let grid = Grid::new(7, 9, 1.0, 2.0).unwrap();
        let coef = TensorField::constant(grid, Mat2::new(m.0, m.1, m.1, m.2)).unwrap();
        let div = flux_divergence(&coef, &field(grid, &a)).unwrap();
        prop_assert!(integrate(&div).abs() <= 1e-11 * norm_inf(&div).max(1.0));
    }

    #[test]
    fn degiorgi_converges_below_threshold(c in 0.5..4.0f64, b in 1.1..4.0f64, alpha in 0.25..2.0f64, s in 0.0..0.999f64) {
        let mut dg = DeGiorgiParams { c, b, alpha, y0: 0.0, n_max: 300 };
        dg.y0 = dg.threshold() * s;
        let out = degiorgi_iterate(&dg).unwrap();
        prop_assert!(out.threshold_pass && out.converged && !out.diverged);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn u_solve_is_independent_of_the_initial_guess(a in coeffs(), b in coeffs(), pr in params()) {
        let grid = Grid::unit(12).unwrap();
        let g = field(grid, &a);
        let opts = UsolveOptions::default();
        let (u1, r1) = solve_u(&g, &pr, &opts).unwrap();
        let (u2, r2) = solve_u_from(&g, &pr, &opts, Some(&field(grid, &b))).unwrap();
        prop_assert!(r1.converged && r2.converged);
        let d = norm_inf(&u1.zip_map(&u2, |x, y| x - y).unwrap());
        prop_assert!(d <= 1e-6 * norm_inf(&u1).max(1.0), "{d}");
    }

    #[test]
    fn stationary_solutions_satisfy_the_balance_identities(a in coeffs(), pr in params()) {
        let grid = Grid::unit(12).unwrap();
        let f = field(grid, &a);
        let pr = ModelParams { tau: pr.tau.max(0.05), ..pr };
        let out = solve_stationary(&f, &pr, &PicardOptions::default()).unwrap();
        prop_assert!(out.converged);
        let r = apriori_report(&out.u, &out.v, None, &f, &pr).unwrap();
        let scale = integrate(&f.map(f64::abs)).max(1.0);
        prop_assert!(r.mean_balance <= 1e-9 * scale, "{}", r.mean_balance);
        prop_assert!(r.duality_gap <= 1e-7 * scale, "{}", r.duality_gap);
        prop_assert!(r.ellipticity_margin >= -1e-12);
    }

    #[test]
    fn warm_start_from_a_solution_stops_at_once(a in coeffs(), pr in params()) {
        let grid = Grid::unit(12).unwrap();
        let f = field(grid, &a);
        let pr = ModelParams { tau: pr.tau.max(0.05), ..pr };
        let opts = PicardOptions::default();
        let out = solve_stationary(&f, &pr, &opts).unwrap();
        let again = solve_stationary_from(&f, &pr, &opts, Some((&out.u, &out.v))).unwrap();
        prop_assert!(again.converged);
        prop_assert!(again.update_history.len() <= 2, "{:?}", again.update_history);
    }
}
