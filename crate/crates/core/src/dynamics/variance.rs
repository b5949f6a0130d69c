use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate_pieces, Estimate, Tolerance};

/// Half-width of the separately integrated peak, in units of `epsilon omega0`.
const PEAK_HALF_WIDTH: f64 = 50.0;

/// Start of the substituted tail, in units of `omega0`.
const TAIL_START: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl From<Estimate> for VarianceEstimate {
    fn from(e: Estimate) -> Self {
        Self {
            value: e.value,
            abs_error: e.abs_error,
            evaluations: e.evaluations,
        }
    }
}

/// `2 e^2 hbar / (3 pi m^2 c^3)`, the prefactor of the variance integral.
fn prefactor(params: &ModelParams) -> f64 {
    2.0 * params.charge().powi(2) * params.hbar() / (3.0 * PI * params.mass().powi(2) * params.c_light().powi(3))
}

fn check(params: &ModelParams, rel_tol: f64) -> Result<()> {
    if params.epsilon() <= 0.0 {
        return Err(Error::EpsilonOutOfRange {
            epsilon: params.epsilon(),
            bound: "epsilon > 0 (the undamped variance diverges)",
        });
    }
    if !(rel_tol >= 1e-10) {
        return Err(Error::invalid("rel_tol", rel_tol, "rel_tol >= 1e-10"));
    }
    Ok(())
}

/// Integrand in `x = omega / omega0`. The powers of `omega0` cancel, so the
/// integral over `omega` is this one times [`prefactor`].
fn integrand(x: f64, eps: f64) -> f64 {
    let d = x * x - 1.0;
    x * x * x / (d * d + eps * eps * x.powi(6))
}

/// Tail integrand after `x = 1/u`, written so that `u -> 0` does not overflow.
fn tail_integrand(u: f64, eps: f64) -> f64 {
    let d = 1.0 - u * u;
    u / (u * u * d * d + eps * eps)
}

fn breakpoints(eps: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![
        0.0,
        (1.0 - PEAK_HALF_WIDTH * eps).max(0.0),
        1.0 - eps,
        1.0,
        1.0 + eps,
        1.0 + PEAK_HALF_WIDTH * eps,
        upper,
    ];
    pts.retain(|&x| x <= upper);
    pts.push(upper);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Continuum phase average
///
/// ```text
/// <q_c^2> = (2 e^2 hbar / 3 pi m^2 c^3) int_0^inf w^3 dw / ((w^2 - w0^2)^2 + tau_R^2 w^6)
/// ```
///
/// by adaptive Gauss-Kronrod quadrature. The peak `omega0 (1 +/- 50 eps)` is
/// integrated on its own, and `[5 omega0, inf)` after substituting
/// `u = omega0 / omega`.
pub fn variance_integral(params: &ModelParams, rel_tol: f64) -> Result<VarianceEstimate> {
    check(params, rel_tol)?;
    let eps = params.epsilon();
    let tol = Tolerance::relative(rel_tol);
    let upper = TAIL_START.max(1.0 + PEAK_HALF_WIDTH * eps);
    let body = integrate_pieces(|x| integrand(x, eps), &breakpoints(eps, upper), tol)?;

    // the tail has its own feature near u = eps, where tau_R^2 w^6 takes over
    let u_max = 1.0 / upper;
    let mut tail_pts = vec![0.0, eps, 100.0 * eps, u_max];
    tail_pts.retain(|&u| u <= u_max);
    tail_pts.push(u_max);
    tail_pts.dedup();
    let tail = integrate_pieces(|u| tail_integrand(u, eps), &tail_pts, tol)?;

    let scale = prefactor(params);
    Ok(VarianceEstimate {
        value: scale * (body.value + tail.value),
        abs_error: scale * (body.abs_error + tail.abs_error),
        evaluations: body.evaluations + tail.evaluations,
    })
}

/// The same integral truncated at `omega_max`, the continuum counterpart of a
/// mode set with hard cutoff `omega_max`.
pub fn variance_integral_to(params: &ModelParams, omega_max: f64, rel_tol: f64) -> Result<VarianceEstimate> {
    check(params, rel_tol)?;
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::invalid("omega_max", omega_max, "a finite value > 0"));
    }
    let eps = params.epsilon();
    let upper = omega_max / params.omega0();
    let est = integrate_pieces(|x| integrand(x, eps), &breakpoints(eps, upper), Tolerance::relative(rel_tol))?;
    let scale = prefactor(params);
    Ok(VarianceEstimate {
        value: scale * est.value,
        abs_error: scale * est.abs_error,
        evaluations: est.evaluations,
    })
}

/// Narrow-resonance limit `hbar / (2 m omega0)`.
pub fn narrow_resonance_value(params: &ModelParams) -> f64 {
    params.ground_state_variance()
}
