//! Pointwise quantities of the relaxation model.
//!
//! Everything here is a pure function of small value types: the weight
//! `rho`, its regularization `rho_tau`, the convex density `psi_tau` and its
//! gradient, the anisotropic mobility `D` with its `S Lambda S^T` factors, and
//! the subgradient of the Euclidean norm used to give meaning to
//! `grad u / |grad u|` on facets.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gradient-like 2-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Row-major 2x2 matrix `[[xx, xy], [yx, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Self { xx, xy, yx, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(s * self.xx, s * self.xy, s * self.yx, s * self.yy)
    }

    pub fn transpose(self) -> Self {
        Self::new(self.xx, self.yx, self.xy, self.yy)
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    /// `v^T M v`.
    pub fn quad_form(self, v: Vec2) -> f64 {
        v.dot(self.apply(v))
    }

    pub fn max_abs_entry(self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yx.abs()).max(self.yy.abs())
    }

    pub fn asymmetry(self) -> f64 {
        (self.xy - self.yx).abs()
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue_sym(self) -> f64 {
        let off = 0.5 * (self.xy + self.yx);
        let mean = 0.5 * (self.xx + self.yy);
        let half_gap = (0.5 * (self.xx - self.yy)).hypot(off);
        mean - half_gap
    }

    pub fn is_finite(self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yx.is_finite() && self.yy.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.xx + o.xx, self.xy + o.xy, self.yx + o.yx, self.yy + o.yy)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.xx - o.xx, self.xy - o.xy, self.yx - o.yx, self.yy - o.yy)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.xx * o.xx + self.xy * o.yx,
            self.xx * o.xy + self.xy * o.yy,
            self.yx * o.xx + self.yy * o.yx,
            self.yx * o.xy + self.yy * o.yy,
        )
    }
}

/// Scalar constants of the model.
///
/// `a` is the zeroth-order coefficient of the height equation; in evolution
/// mode it is overwritten with `1 / delta` at every step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub beta: f64,
    pub q: f64,
    pub a: f64,
    pub tau: f64,
    pub delta: f64,
    /// Accept `p > 2`. The existence theory covers `1 < p <= 2` only.
    pub relaxed_p: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            p: 1.5,
            beta: 1.0,
            q: 1.0,
            a: 1.0,
            tau: 1.0,
            delta: 1.0,
            relaxed_p: false,
        }
    }
}

impl ModelParams {
    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    /// Every violated invariant, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p > 1.0) {
            out.push(format!("model.p = {}: exponent gate requires p > 1", self.p));
        } else if self.p > 2.0 && !self.relaxed_p {
            out.push(format!(
                "model.p = {}: strict mode requires 1 < p <= 2 (set relaxed_p = true to allow p > 2)",
                self.p
            ));
        }
        if !(self.p.is_finite()) {
            out.push("model.p must be finite".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            out.push(format!("model.beta = {}: requires beta > 0", self.beta));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            out.push(format!("model.q = {}: requires q >= 0", self.q));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            out.push(format!("model.a = {}: requires a > 0", self.a));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            out.push(format!("model.tau = {}: requires 0 < tau <= 1", self.tau));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            out.push(format!("model.delta = {}: requires delta > 0", self.delta));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v.join("; ")))
        }
    }
}

/// `s^((p-2)/2) + beta s^(-1/2)`; singular at `s = 0`.
pub fn rho(s: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!(
            "rho({s}) is singular at s = 0; use rho_tau"
        )));
    }
    Ok(s.powf(0.5 * (params.p - 2.0)) + params.beta / s.sqrt())
}

pub fn rho_tau(s: f64, params: &ModelParams) -> f64 {
    let st = s + params.tau;
    st.powf(0.5 * (params.p - 2.0)) + params.beta / st.sqrt()
}

/// `2 rho_tau'(s)`, the coefficient of `xi xi^T` in the Hessian of `psi_tau`.
pub fn rho_tau_slope2(s: f64, params: &ModelParams) -> f64 {
    let st = s + params.tau;
    (params.p - 2.0) * st.powf(0.5 * (params.p - 4.0)) - params.beta * st.powf(-1.5)
}

pub fn psi_tau(xi: Vec2, params: &ModelParams) -> f64 {
    let st = xi.norm_sq() + params.tau;
    st.powf(0.5 * params.p) / params.p + params.beta * st.sqrt()
}

/// `psi_tau(xi) - psi_tau(0)` without the cancellation of the direct
/// difference at small `|xi|`.
pub fn psi_tau_excess(xi: Vec2, params: &ModelParams) -> f64 {
    let (s, tau, p) = (xi.norm_sq(), params.tau, params.p);
    let p_part = tau.powf(0.5 * p) * (0.5 * p * (s / tau).ln_1p()).exp_m1() / p;
    p_part + params.beta * s / ((s + tau).sqrt() + tau.sqrt())
}

/// Equals `rho_tau(|xi|^2) xi`.
pub fn grad_psi_tau(xi: Vec2, params: &ModelParams) -> Vec2 {
    rho_tau(xi.norm_sq(), params) * xi
}

/// Hessian of `psi_tau`; positive definite whenever `p > 1` and `tau > 0`.
pub fn hessian_psi_tau(xi: Vec2, params: &ModelParams) -> Mat2 {
    let s = xi.norm_sq();
    let a = rho_tau(s, params);
    let b = rho_tau_slope2(s, params);
    Mat2::new(
        a + b * xi.x * xi.x,
        b * xi.x * xi.y,
        b * xi.x * xi.y,
        a + b * xi.y * xi.y,
    )
}

/// `|u|^(p-2) u`, continuous through zero for `p > 1`.
pub fn zeroth_order(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(p - 1.0)
    }
}

/// Smoothing floor for the derivative of `|u|^(p-2) u` at `u = 0`.
pub const ZEROTH_ORDER_EPS: f64 = 1e-30;

pub fn zeroth_order_slope(u: f64, p: f64) -> f64 {
    (p - 1.0) * (u * u + ZEROTH_ORDER_EPS).powf(0.5 * (p - 2.0))
}

/// Mobility `S Lambda S^T`, with `D = I` where the gradient vanishes.
pub fn mobility_d(xi: Vec2, q: f64) -> Mat2 {
    let s = xi.norm_sq();
    if s == 0.0 {
        return Mat2::IDENTITY;
    }
    let m = 1.0 / (1.0 + q * s.sqrt()) - 1.0;
    Mat2::new(
        1.0 + xi.x * xi.x / s * m,
        xi.x * xi.y / s * m,
        xi.x * xi.y / s * m,
        1.0 + xi.y * xi.y / s * m,
    )
}

/// Regularized mobility; `(1 + tau) I` at `xi = 0`.
pub fn mobility_d_tau(xi: Vec2, q: f64, tau: f64) -> Mat2 {
    let s = xi.norm_sq();
    let m = (1.0 / (1.0 + q * s.sqrt()) - 1.0) / (s + tau);
    Mat2::new(
        1.0 + tau + xi.x * xi.x * m,
        xi.x * xi.y * m,
        xi.x * xi.y * m,
        1.0 + tau + xi.y * xi.y * m,
    )
}

/// Rotation `S` and eigenvalues `Lambda` with `D = S Lambda S^T`.
pub fn s_lambda_factor(xi: Vec2, q: f64) -> Result<(Mat2, Mat2)> {
    let n = xi.norm();
    if !(n > 0.0) {
        return Err(Error::Domain(
            "S Lambda S^T factorization needs a nonzero gradient (D = I there)".into(),
        ));
    }
    let s = Mat2::new(xi.x / n, -xi.y / n, xi.y / n, xi.x / n);
    let lambda = Mat2::diag(1.0 / (1.0 + q * n), 1.0);
    Ok((s, lambda))
}

/// `xi / (|xi|^2 + tau)^(1/2)`, the regularized selection of the norm's subgradient.
pub fn subgradient_select(xi: Vec2, tau: f64) -> Vec2 {
    (1.0 / (xi.norm_sq() + tau).sqrt()) * xi
}

/// Default tolerance for [`in_subgradient`].
pub const SUBGRADIENT_TOL: f64 = 1e-8;

/// Whether `h` lies in the subdifferential of `|.|` at `xi`, up to `tol`.
pub fn in_subgradient(h: Vec2, xi: Vec2, tol: f64) -> bool {
    let n = xi.norm();
    if n > tol {
        (h - (1.0 / n) * xi).norm() <= tol
    } else {
        h.norm() <= 1.0 + tol
    }
}
