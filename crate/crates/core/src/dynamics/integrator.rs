use std::f64::consts::TAU;

use super::{phase_accumulator, Trajectory};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::vacuum_field::{Coefficients, FieldModeSet, PhasorBank};

/// Largest accepted step, one fortieth of the natural period.
pub fn max_step(params: &ModelParams) -> f64 {
    TAU / params.omega0() / 40.0
}

/// Start-up transient `5 / (epsilon omega0)`; zero for an undamped oscillator,
/// which never forgets its initial state.
pub fn transient_length(params: &ModelParams) -> f64 {
    if params.epsilon() > 0.0 {
        5.0 * params.decay_time()
    } else {
        0.0
    }
}

/// Integrates the order-reduced equation of motion
///
/// ```text
/// q'' = -omega0^2 q + a(t) + tau_R (-omega0^2 q' + a'(t))
/// ```
///
/// with classical RK4 at fixed step `dt`, from `initial = (q0, p0)` up to
/// `t_total`. Replacing `q'''` by the derivative of the undamped equation
/// removes the runaway branch of the third-order equation.
pub fn integrate_time_domain(
    modes: &FieldModeSet,
    t_total: f64,
    dt: f64,
    initial: (f64, f64),
    params: &ModelParams,
) -> Result<Trajectory> {
    let bound = max_step(params);
    if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
        return Err(Error::StepTooLarge { dt, max: bound });
    }
    if !(t_total.is_finite() && t_total >= dt) {
        return Err(Error::invalid("t_total", t_total, format!("t_total >= dt = {dt}")));
    }
    let steps = (t_total / dt).round() as usize;

    let m = params.mass();
    let w0sq = params.omega0() * params.omega0();
    let tau = params.radiation_time();
    let (drive_c, slope_c) = Coefficients::drive(modes);
    let mut bank = PhasorBank::new(modes, 0.0, 0.5 * dt);
    let mut drive = || {
        let f = bank.project(&drive_c) + tau * bank.project(&slope_c);
        bank.advance();
        f
    };
    let accel = |q: f64, v: f64, f: f64| -w0sq * q - tau * w0sq * v + f;

    let mut times = Vec::with_capacity(steps + 1);
    let mut qs = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);
    let (mut q, mut v) = (initial.0, initial.1 / m);
    times.push(0.0);
    qs.push(q);
    ps.push(m * v);

    let mut f_start = drive();
    for k in 0..steps {
        let f_mid = drive();
        let f_end = drive();
        let h = dt;

        let (k1q, k1v) = (v, accel(q, v, f_start));
        let (k2q, k2v) = (v + 0.5 * h * k1v, accel(q + 0.5 * h * k1q, v + 0.5 * h * k1v, f_mid));
        let (k3q, k3v) = (v + 0.5 * h * k2v, accel(q + 0.5 * h * k2q, v + 0.5 * h * k2v, f_mid));
        let (k4q, k4v) = (v + h * k3v, accel(q + h * k3q, v + h * k3v, f_end));
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        let t = (k + 1) as f64 * dt;
        if !(q.is_finite() && v.is_finite()) {
            return Err(Error::NonFiniteState { step: k + 1, time: t });
        }
        times.push(t);
        qs.push(q);
        ps.push(m * v);
        f_start = f_end;
    }

    let transient = transient_length(params);
    let transient_end = times.iter().position(|&t| t >= transient).unwrap_or(times.len());
    let g = phase_accumulator(&times, &qs, &ps, params);
    Ok(Trajectory {
        times,
        q: qs,
        p: ps,
        g,
        transient_end,
    })
}
