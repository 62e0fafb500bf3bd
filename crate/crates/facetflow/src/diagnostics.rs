//! Discrete counterparts of the a priori bounds, randomized checks of the
//! pointwise inequalities behind them, and the fast-geometric-convergence
//! recursion used for sup-norm bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{
    corner_integral, gradient, inner, integrate, norm_inf, w1p_norm, ScalarField, VectorField,
};
use crate::model::{
    grad_psi_tau, mobility_d, mobility_d_tau, psi_tau, rho_tau, ModelParams, Vec2,
};
use crate::usolver::p_laplace_div;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub energy_psi: f64,
    pub w1p_norm: f64,
    pub u_inf: f64,
    pub v_inf: f64,
    /// `||v||_{W^{1, 2p/(p+1)}}`.
    pub v_w1_2p_over_p1: f64,
    pub grad_u_sup: f64,
    pub h_sup: Option<f64>,
    /// Smallest eigenvalue of `D_tau(grad u)` minus `1 / (1 + q |grad u|) + tau`,
    /// minimized over cells.
    pub ellipticity_margin: f64,
    /// `|<u, v> - (int rho_tau |grad u|^2 + tau int |u|^p)|`.
    pub duality_gap: f64,
    /// `|a int u + tau int v - int f|`.
    pub mean_balance: f64,
}

pub fn apriori_report(
    u: &ScalarField,
    v: &ScalarField,
    h: Option<&VectorField>,
    f: &ScalarField,
    params: &ModelParams,
) -> Result<EstimateReport> {
    inner(u, v)?;
    inner(u, f)?;
    let p = params.p;
    let grad = gradient(u);
    let ellipticity_margin = grad
        .values()
        .iter()
        .map(|&g| {
            let floor = 1.0 / (1.0 + params.q * g.norm()) + params.tau;
            mobility_d_tau(g, params.q, params.tau).min_eigenvalue_sym() - floor
        })
        .fold(f64::INFINITY, f64::min);
    let zeroth: f64 = u.values().iter().map(|x| x.abs().powf(p)).sum::<f64>() * u.grid().cell_area();
    let dissipation = corner_integral(u, |g| rho_tau(g.norm_sq(), params) * g.norm_sq());
    let duality_gap = (inner(u, v)? - (dissipation + params.tau * zeroth)).abs();
    let mean_balance = (params.a * integrate(u) + params.tau * integrate(v) - integrate(f)).abs();
    Ok(EstimateReport {
        energy_psi: corner_integral(u, |g| psi_tau(g, params)),
        w1p_norm: w1p_norm(u, p),
        u_inf: norm_inf(u),
        v_inf: norm_inf(v),
        v_w1_2p_over_p1: w1p_norm(v, 2.0 * p / (p + 1.0)),
        grad_u_sup: grad.sup_norm(),
        h_sup: h.map(VectorField::sup_norm),
        ellipticity_margin,
        duality_gap,
        mean_balance,
    })
}

/// `(1/p) int |grad u|^p + beta int |grad u|` with cell-centered gradients.
pub fn surface_energy(u: &ScalarField, p: f64, beta: f64) -> f64 {
    let area = u.grid().cell_area();
    gradient(u)
        .values()
        .iter()
        .map(|g| {
            let n = g.norm();
            n.powf(p) / p + beta * n
        })
        .sum::<f64>()
        * area
}

/// Regularized `-div(|grad u|^(p-2) grad u + beta grad u / |grad u|)`.
pub fn chemical_potential(u: &ScalarField, params: &ModelParams) -> ScalarField {
    p_laplace_div(u, params)
}

/// Largest violation of one inequality over the sampled inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub samples: usize,
    /// `max(rhs - lhs, 0)`.
    pub max_violation: f64,
    /// Samples whose violation exceeds the tolerance.
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<InequalityCheck>,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Violation threshold of [`inequality_fuzz`].
pub const FUZZ_TOLERANCE: f64 = 1e-10;

struct Tally {
    check: InequalityCheck,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            check: InequalityCheck {
                name: name.into(),
                samples: 0,
                max_violation: 0.0,
                failures: 0,
            },
        }
    }

    /// Records `lhs >= rhs`.
    fn record(&mut self, lhs: f64, rhs: f64) {
        let viol = if lhs.is_nan() || rhs.is_nan() {
            f64::INFINITY
        } else {
            (rhs - lhs).max(0.0)
        };
        self.check.samples += 1;
        self.check.max_violation = self.check.max_violation.max(viol);
        if viol > FUZZ_TOLERANCE {
            self.check.failures += 1;
        }
    }
}

/// Vector with log-uniform magnitude in `[1e-3, 10]`, occasionally zero.
fn sample_vec(rng: &mut ChaCha8Rng) -> Vec2 {
    if rng.gen_bool(0.01) {
        return Vec2::ZERO;
    }
    let m = 10f64.powf(rng.gen_range(-3.0..1.0));
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    Vec2::new(m * t.cos(), m * t.sin())
}

/// `(x, y)`, with `y = x` in one percent of the draws.
fn sample_pair(rng: &mut ChaCha8Rng) -> (Vec2, Vec2) {
    let x = sample_vec(rng);
    let y = if rng.gen_bool(0.01) { x } else { sample_vec(rng) };
    (x, y)
}

fn power_vec(x: Vec2, p: f64) -> Vec2 {
    let n = x.norm();
    if n == 0.0 {
        Vec2::ZERO
    } else {
        n.powf(p - 2.0) * x
    }
}

fn tau_sample(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-8.0..0.0))
}

/// Evaluates every pointwise inequality on `sample_count` random draws each.
///
/// `params.beta` weights the full gradient `grad psi_tau`; exponents,
/// mobility slopes and `tau` are sampled.
pub fn inequality_fuzz(params: &ModelParams, sample_count: usize, seed: u64) -> FuzzSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mell = Tally::new("mobility_ellipticity");
    let mut r22 = Tally::new("regularized_mobility_ellipticity");
    let mut entries = Tally::new("regularized_mobility_entries");
    let mut rev2 = Tally::new("regularized_p_part_monotonicity");
    let mut rev3 = Tally::new("regularized_one_part_monotonicity");
    let mut lem_i = Tally::new("vector_inequality_p_ge_2");
    let mut lem_ii = Tally::new("vector_inequality_p_le_2");
    let mut mono = Tally::new("grad_psi_tau_monotonicity");
    for _ in 0..sample_count {
        let xi = sample_vec(&mut rng);
        let xp = sample_vec(&mut rng);
        let q = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..20.0) };
        let tau = tau_sample(&mut rng);
        let xp2 = xp.norm_sq();
        let floor = 1.0 / (1.0 + q * xi.norm());
        mell.record(mobility_d(xi, q).quad_form(xp), floor * xp2);
        let dt = mobility_d_tau(xi, q, tau);
        r22.record(dt.quad_form(xp), (floor + tau) * xp2);
        entries.record(2.0, dt.max_abs_entry());

        let (x, y) = sample_pair(&mut rng);
        let p = rng.gen_range(1.0..2.0_f64).max(1.0 + 1e-9);
        let tau = tau_sample(&mut rng);
        let d = y - x;
        let d2 = d.norm_sq();
        let ay = (y.norm_sq() + tau).powf(0.5 * (p - 2.0));
        let ax = (x.norm_sq() + tau).powf(0.5 * (p - 2.0));
        rev2.record(
            (ay * y - ax * x).dot(d),
            (p - 1.0) * (1.0 + x.norm_sq() + y.norm_sq()).powf(0.5 * (p - 2.0)) * d2,
        );
        let by = (y.norm_sq() + tau).sqrt().recip();
        let bx = (x.norm_sq() + tau).sqrt().recip();
        rev3.record((by * y - bx * x).dot(d), 0.0);

        let (x, y) = sample_pair(&mut rng);
        let p = rng.gen_range(2.0..4.0);
        let d = x - y;
        lem_i.record(
            (power_vec(x, p) - power_vec(y, p)).dot(d),
            2f64.powf(1.0 - p) * d.norm().powf(p),
        );

        let (x, y) = sample_pair(&mut rng);
        let p = rng.gen_range(1.0..=2.0_f64).max(1.0 + 1e-9);
        let d = x - y;
        lem_ii.record(
            (1.0 + x.norm_sq() + y.norm_sq()).powf(0.5 * (2.0 - p))
                * (power_vec(x, p) - power_vec(y, p)).dot(d),
            (p - 1.0) * d.norm_sq(),
        );

        let (x, y) = sample_pair(&mut rng);
        let pm = ModelParams {
            p: rng.gen_range(1.0..=2.0_f64).max(1.0 + 1e-9),
            tau: tau_sample(&mut rng),
            relaxed_p: true,
            ..*params
        };
        mono.record((grad_psi_tau(x, &pm) - grad_psi_tau(y, &pm)).dot(x - y), 0.0);
    }
    FuzzSummary {
        seed,
        tolerance: FUZZ_TOLERANCE,
        checks: [mell, r22, entries, rev2, rev3, lem_i, lem_ii, mono]
            .into_iter()
            .map(|t| t.check)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiParams {
    pub c: f64,
    pub b: f64,
    pub alpha: f64,
    pub y0: f64,
    pub n_max: usize,
}

impl DeGiorgiParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.c > 0.0) {
            out.push(format!("c = {}: must be > 0", self.c));
        }
        if !(self.b > 1.0) {
            out.push(format!("b = {}: must be > 1", self.b));
        }
        if !(self.alpha > 0.0) {
            out.push(format!("alpha = {}: must be > 0", self.alpha));
        }
        if !(self.y0 >= 0.0) {
            out.push(format!("y0 = {}: must be >= 0", self.y0));
        }
        out
    }

    /// `c^(-1/alpha) b^(-1/alpha^2)`.
    pub fn threshold(&self) -> f64 {
        self.c.powf(-1.0 / self.alpha) * self.b.powf(-1.0 / (self.alpha * self.alpha))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiOutcome {
    /// `y_0, y_1, ...`, truncated at the first overflow.
    pub sequence: Vec<f64>,
    pub threshold_pass: bool,
    pub converged: bool,
    pub diverged: bool,
}

fn pow_exact(y: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        y.powi(e as i32)
    } else {
        y.powf(e)
    }
}

/// Iterates the equality case `y_{n+1} = c b^n y_n^(1+alpha)`.
///
/// `converged` means the tail fell below `1e-30`, or the sequence decreased
/// strictly while staying under the envelope `y0 b^(-n/alpha)`.
pub fn degiorgi_iterate(dg: &DeGiorgiParams) -> Result<DeGiorgiOutcome> {
    let v = dg.violations();
    if !v.is_empty() {
        return Err(crate::Error::InvalidParams(v.join("; ")));
    }
    let mut seq = vec![dg.y0];
    let mut diverged = false;
    for n in 0..dg.n_max {
        let y = *seq.last().unwrap();
        let next = dg.c * pow_exact(dg.b, n as f64) * pow_exact(y, 1.0 + dg.alpha);
        if !next.is_finite() {
            diverged = true;
            break;
        }
        seq.push(next);
    }
    let last = *seq.last().unwrap();
    if last > dg.y0 {
        diverged = true;
    }
    let decreasing = seq.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0);
    let enveloped = seq
        .iter()
        .enumerate()
        .all(|(n, &y)| y <= dg.y0 * dg.b.powf(-(n as f64) / dg.alpha) * (1.0 + 1e-9));
    let converged = !diverged && (last < 1e-30 || (decreasing && enveloped));
    Ok(DeGiorgiOutcome {
        sequence: seq,
        threshold_pass: dg.y0 <= dg.threshold(),
        converged,
        diverged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Plateau,
    NoPlateau,
    /// `p <= 4/3`: no gradient bound is expected.
    NoClaim,
    /// Fewer than three levels.
    Insufficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub verdict: Verdict,
    /// Relative change of `sup |grad u|` over the last two levels.
    pub last_change: f64,
    pub median: f64,
    pub max: f64,
}

/// Plateau test on `(tau, sup |grad u_tau|)` pairs ordered by level.
pub fn gradient_bound_monitor(per_level: &[(f64, f64)], p: f64) -> MonitorReport {
    let vals: Vec<f64> = per_level.iter().map(|&(_, g)| g).collect();
    let mut sorted = vals.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    };
    let max = sorted.last().copied().unwrap_or(0.0);
    let last_change = match vals.as_slice() {
        [.., a, b] => {
            let s = a.abs().max(b.abs());
            if s == 0.0 {
                0.0
            } else {
                (b - a).abs() / s
            }
        }
        _ => f64::NAN,
    };
    let verdict = if p <= 4.0 / 3.0 {
        Verdict::NoClaim
    } else if vals.len() < 3 {
        Verdict::Insufficient
    } else if last_change < 0.05 && max <= 2.0 * median {
        Verdict::Plateau
    } else {
        Verdict::NoPlateau
    };
    MonitorReport {
        verdict,
        last_change,
        median,
        max,
    }
}
