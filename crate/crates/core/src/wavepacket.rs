//! The displaced-Gaussian solution of the driven oscillator.
//!
//! With the field entering as a spatially uniform vector potential,
//!
//! ```text
//! psi(x, t) = phi0(x - q_c) exp{ (i/hbar) [ (p_c + (e/c) A_x) x - g ] }
//! ```
//!
//! solves the Schrodinger equation exactly when `q_c`, `p_c` follow the
//! classical equations of motion and `g` the phase integral. The density is a
//! rigid translate of the ground-state density, so every position moment
//! follows from `q_c` alone.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::model::ModelParams;
use crate::quadrature::{integrate, Tolerance};

/// Half-width of numerical integration windows, in ground-state standard deviations.
pub const WINDOW_SIGMAS: f64 = 8.0;

/// State of the packet at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSample {
    /// `q_c(t)`
    pub center: f64,
    /// Kinetic momentum `p_c(t) = m dq_c/dt`.
    pub momentum: f64,
    /// Canonical momentum shift `(e/c) A_x(t)`.
    pub momentum_shift: f64,
    /// `g(t)`
    pub phase: f64,
    /// `hbar / (2 m omega0)`
    pub width_sq: f64,
}

impl WavepacketSample {
    pub fn new(center: f64, momentum: f64, momentum_shift: f64, phase: f64, params: &ModelParams) -> Self {
        Self {
            center,
            momentum,
            momentum_shift,
            phase,
            width_sq: params.ground_state_variance(),
        }
    }

    /// The undisplaced ground state.
    pub fn ground(params: &ModelParams) -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, params)
    }

    /// `p_c + (e/c) A_x`, the expectation of `-i hbar d/dx`.
    pub fn canonical_momentum(&self) -> f64 {
        self.momentum + self.momentum_shift
    }

    pub fn kinetic_momentum(&self) -> f64 {
        self.momentum
    }
}

/// `phi0(x) = (m omega0 / pi hbar)^(1/4) exp(-m omega0 x^2 / 2 hbar)`.
pub fn ground_state_amplitude(x: f64, params: &ModelParams) -> f64 {
    let kappa = params.mass() * params.omega0() / params.hbar();
    (kappa / std::f64::consts::PI).powf(0.25) * (-0.5 * kappa * x * x).exp()
}

/// `phi0(x)^2`.
pub fn ground_state_density(x: f64, params: &ModelParams) -> f64 {
    let kappa = params.mass() * params.omega0() / params.hbar();
    (kappa / std::f64::consts::PI).sqrt() * (-kappa * x * x).exp()
}

pub fn wavefunction(x: f64, sample: &WavepacketSample, params: &ModelParams) -> Complex64 {
    let envelope = ground_state_amplitude(x - sample.center, params);
    let action = sample.canonical_momentum() * x - sample.phase;
    Complex64::from_polar(envelope, action / params.hbar())
}

/// Closed form `hbar / (2 m omega0) + q_c^2`.
pub fn position_second_moment(sample: &WavepacketSample, params: &ModelParams) -> f64 {
    params.ground_state_variance() + sample.center * sample.center
}

/// Numerical `int |psi|^2 x^k dx` for `k = 0, 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericMoments {
    pub norm: f64,
    pub mean: f64,
    pub second: f64,
}

/// Integrates `|psi|^2`, `x |psi|^2` and `x^2 |psi|^2` over `center +/- 8 sigma`
/// by adaptive Gauss-Kronrod quadrature.
pub fn numeric_moments(sample: &WavepacketSample, params: &ModelParams) -> NumericMoments {
    let half = WINDOW_SIGMAS * sample.width_sq.sqrt();
    let (a, b) = (sample.center - half, sample.center + half);
    let tol = Tolerance {
        rel: 1e-12,
        abs: 1e-12,
        max_intervals: 2000,
    };
    let moment = |k: i32| {
        integrate(|x| wavefunction(x, sample, params).norm_sqr() * x.powi(k), a, b, tol)
            .map(|e| e.value)
            .expect("smooth Gaussian integrand converges")
    };
    NumericMoments {
        norm: moment(0),
        mean: moment(1),
        second: moment(2),
    }
}

/// Probability density and amplitude on a uniform grid, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub rows: Vec<[f64; 4]>,
}

impl DensitySnapshot {
    /// Samples `points` values of `x` across `center +/- 8 sigma`.
    pub fn new(sample: &WavepacketSample, params: &ModelParams, points: usize) -> Self {
        let half = WINDOW_SIGMAS * sample.width_sq.sqrt();
        let step = 2.0 * half / (points.max(2) - 1) as f64;
        let rows = (0..points.max(2))
            .map(|j| {
                let x = sample.center - half + j as f64 * step;
                let psi = wavefunction(x, sample, params);
                [x, psi.norm_sqr(), psi.re, psi.im]
            })
            .collect();
        Self { rows }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,density,re_psi,im_psi")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r[0], r[1], r[2], r[3])?;
        }
        Ok(())
    }
}

/// Largest `|i hbar psi_t - H psi|` over fixed points spanning `center +/- 4 sigma`
/// at interior sample `k` of `trajectory`, with `psi_t` and the spatial
/// derivatives replaced by central differences (time step from the grid,
/// space step `dx`). `shifts[k]` is `(e/c) A_x(t_k)`.
///
/// For an exact solution this is pure discretization error, `O(dt^2 + dx^2)`.
pub fn schrodinger_residual(
    trajectory: &Trajectory,
    shifts: &[f64],
    k: usize,
    dx: f64,
    params: &ModelParams,
) -> f64 {
    assert!(k >= 1 && k + 1 < trajectory.len(), "residual needs both time neighbours");
    let sample = |j: usize| {
        WavepacketSample::new(trajectory.q[j], trajectory.p[j], shifts[j], trajectory.g[j], params)
    };
    let (before, now, after) = (sample(k - 1), sample(k), sample(k + 1));
    let dt = trajectory.times[k + 1] - trajectory.times[k];
    let (hbar, m, w0) = (params.hbar(), params.mass(), params.omega0());
    let i = Complex64::i();
    let s = now.momentum_shift;
    let sigma = now.width_sq.sqrt();

    (0..=40)
        .map(|j| {
            let x = now.center + sigma * (-4.0 + 0.2 * j as f64);
            let psi = |smp: &WavepacketSample, x: f64| wavefunction(x, smp, params);
            let dpsi_dt = (psi(&after, x) - psi(&before, x)) / (2.0 * dt);
            let (l, c, r) = (psi(&now, x - dx), psi(&now, x), psi(&now, x + dx));
            let d1 = (r - l) / (2.0 * dx);
            let d2 = (r - 2.0 * c + l) / (dx * dx);
            // (-i hbar d/dx - s)^2 = -hbar^2 d2 + 2 i hbar s d1 + s^2
            let kinetic = (-hbar * hbar * d2 + 2.0 * i * hbar * s * d1 + s * s * c) / (2.0 * m);
            let potential = 0.5 * m * w0 * w0 * x * x * c;
            (i * hbar * dpsi_dt - kinetic - potential).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::dimensionless(1e-2).unwrap()
    }

    #[test]
    fn ground_state_normalization_and_variance() {
        let p = params();
        let tol = Tolerance::relative(1e-13);
        let norm = integrate(|x| ground_state_density(x, &p), -8.0, 8.0, tol).unwrap().value;
        let var = integrate(|x| x * x * ground_state_density(x, &p), -8.0, 8.0, tol).unwrap().value;
        assert!((norm - 1.0).abs() < 1e-8);
        assert!((var - 0.5).abs() < 1e-8);
        assert_relative_eq!(ground_state_density(0.0, &p), 1.0 / PI.sqrt(), max_relative = 1e-15);
        assert_eq!(ground_state_density(0.7, &p), ground_state_density(-0.7, &p));
    }

    #[test]
    fn undisplaced_packet_is_ground_state() {
        let p = params();
        let s = WavepacketSample::ground(&p);
        for x in [-2.0, -0.3, 0.0, 1.1] {
            let psi = wavefunction(x, &s, &p);
            assert_eq!(psi.im, 0.0);
            assert_relative_eq!(psi.re, ground_state_amplitude(x, &p), max_relative = 1e-15);
        }
    }

    #[test]
    fn displaced_density_is_a_translate() {
        let p = params();
        let s = WavepacketSample::new(1.0, 0.4, -0.2, 3.0, &p);
        for j in 0..100 {
            let x = -3.0 + 0.07 * j as f64;
            let d = wavefunction(x, &s, &p).norm_sqr();
            assert!((d - ground_state_density(x - 1.0, &p)).abs() < 1e-10);
        }
    }

    #[test]
    fn second_moment_closed_form() {
        let p = params();
        assert_eq!(position_second_moment(&WavepacketSample::ground(&p), &p), 0.5);
        let s = WavepacketSample::new(1.0, 0.0, 0.0, 0.0, &p);
        assert_eq!(position_second_moment(&s, &p), 1.5);
        for q in [0.3, 2.7] {
            let s = WavepacketSample::new(q, -0.8, 0.1, 1.0, &p);
            let num = numeric_moments(&s, &p);
            assert!((num.second - position_second_moment(&s, &p)).abs() < 1e-8);
            assert!((num.norm - 1.0).abs() < 1e-8);
            assert!((num.mean - q).abs() < 1e-8);
        }
    }

    #[test]
    fn canonical_momentum_expectation() {
        let p = params();
        let s = WavepacketSample::new(0.6, 0.9, -0.35, 2.0, &p);
        let h = 1e-5;
        let tol = Tolerance::relative(1e-12);
        let e = integrate(
            |x| {
                let d = (wavefunction(x + h, &s, &p) - wavefunction(x - h, &s, &p)) / (2.0 * h);
                (wavefunction(x, &s, &p).conj() * Complex64::new(0.0, -1.0) * d).re
            },
            0.6 - 6.0,
            0.6 + 6.0,
            tol,
        )
        .unwrap()
        .value;
        assert!((e - s.canonical_momentum()).abs() < 1e-8);
        assert_eq!(s.kinetic_momentum(), 0.9);
    }

    #[test]
    fn snapshot_csv() {
        let p = params();
        let snap = DensitySnapshot::new(&WavepacketSample::ground(&p), &p, 5);
        let mut buf = Vec::new();
        snap.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,density,re_psi,im_psi\n"));
        assert_eq!(text.lines().count(), 6);
    }

    proptest! {
        #[test]
        fn moments_for_random_samples(
            q in -5.0f64..5.0, pc in -3.0f64..3.0, shift in -3.0f64..3.0, g in -50.0f64..50.0,
        ) {
            let p = params();
            let s = WavepacketSample::new(q, pc, shift, g, &p);
            let num = numeric_moments(&s, &p);
            prop_assert!((num.norm - 1.0).abs() < 1e-8);
            // variance does not depend on the sample
            let var = num.second - num.mean * num.mean;
            prop_assert!((var - p.ground_state_variance()).abs() < 1e-8);
            prop_assert!((num.second - position_second_moment(&s, &p)).abs() < 1e-8 * (1.0 + q * q));
        }

        #[test]
        fn constant_phase_shift_is_global(q in -2.0f64..2.0, g in -5.0f64..5.0, dg in -5.0f64..5.0, x in -3.0f64..3.0) {
            let p = params();
            let a = WavepacketSample::new(q, 0.3, 0.1, g, &p);
            let b = WavepacketSample { phase: g + dg, ..a };
            let ratio = wavefunction(x, &b, &p) / wavefunction(x, &a, &p);
            let expected = Complex64::from_polar(1.0, -dg);
            prop_assert!((ratio - expected).norm() < 1e-9);
            prop_assert!((wavefunction(x, &b, &p).norm_sqr() - wavefunction(x, &a, &p).norm_sqr()).abs() < 1e-14);
        }
    }
}
