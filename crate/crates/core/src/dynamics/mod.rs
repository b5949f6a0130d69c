//! Classical center-of-packet motion under the vacuum drive and radiation
//! reaction.
//!
//! Two independent routes produce `q_c(t)`: the exact stationary superposition
//! of per-mode responses ([`stationary_trajectory`]) and fixed-step RK4
//! integration of the order-reduced equation of motion
//! ([`integrate_time_domain`]). [`variance_integral`] evaluates the continuum
//! phase average of `q_c^2`.

mod integrator;
mod phase;
mod response;
mod stationary;
mod variance;

use std::io::{self, Write};

use serde::Serialize;

pub use integrator::{integrate_time_domain, max_step, transient_length};
pub use phase::phase_accumulator;
pub use response::{response_function, ResponseValue};
pub use stationary::{
    mode_set_variance, stationary_displacement, stationary_state_at, stationary_trajectory, StationaryState,
};
pub use variance::{narrow_resonance_value, variance_integral, variance_integral_to, VarianceEstimate};

use crate::error::{Error, Result};

/// Uniform time grid `t_k = start + k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("dt", step, "a finite value > 0"));
        }
        if len == 0 {
            return Err(Error::invalid("samples", 0, "at least one time sample"));
        }
        Ok(Self { start, step, len })
    }

    /// Grid from 0 covering `[0, t_total]` with spacing `dt`.
    pub fn spanning(t_total: f64, dt: f64) -> Result<Self> {
        if !(t_total.is_finite() && t_total > 0.0) {
            return Err(Error::invalid("t_total", t_total, "a finite value > 0"));
        }
        Self::new(0.0, dt, (t_total / dt).round() as usize + 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }
}

/// Sampled c-number functions `q_c`, `p_c = m dq_c/dt` and `g` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    /// Samples before this index belong to the start-up transient.
    pub transient_end: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        match self.times.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Displacement samples after the transient.
    pub fn stationary_q(&self) -> &[f64] {
        &self.q[self.transient_end.min(self.q.len())..]
    }

    /// Writes `t,q,p,g,is_transient` rows; numbers use the shortest
    /// representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,q,p,g,is_transient")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.times[k],
                self.q[k],
                self.p[k],
                self.g[k],
                u8::from(k < self.transient_end)
            )?;
        }
        Ok(())
    }
}

/// Sample mean of `x` and `x^2`.
pub(crate) fn first_two_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
    (s1 / n, s2 / n)
}
