use num_complex::Complex64;

use super::{phase_accumulator, response_function, TimeGrid, Trajectory};
use crate::error::Result;
use crate::model::ModelParams;
use crate::vacuum_field::{Coefficients, FieldModeSet, PhasorBank};

fn responses(modes: &FieldModeSet, params: &ModelParams) -> Result<Vec<Complex64>> {
    modes
        .frequencies()
        .iter()
        .map(|&w| response_function(w, params).map(|r| r.0))
        .collect()
}

/// Weights for `q` and `p` against the phasors `exp(-i(omega t + theta))`.
fn state_coefficients(modes: &FieldModeSet, params: &ModelParams) -> Result<(Coefficients, Coefficients)> {
    let chi = responses(modes, params)?;
    let (w, a) = (modes.frequencies(), modes.amplitudes());
    let m = params.mass();
    let q = Coefficients::from_fn(modes.len(), |i| (a[i] * chi[i].re, a[i] * chi[i].im));
    // d/dt exp(-i omega t) = -i omega exp(-i omega t)
    let p = Coefficients::from_fn(modes.len(), |i| {
        let c = Complex64::new(0.0, -w[i]) * chi[i] * (m * a[i]);
        (c.re, c.im)
    });
    Ok((q, p))
}

/// Stationary displacement on a uniform grid,
/// `q_c(t) = sum_n A_n |chi_n| cos(omega_n t + theta_n - arg chi_n)`.
pub fn stationary_displacement(modes: &FieldModeSet, grid: TimeGrid, params: &ModelParams) -> Result<Vec<f64>> {
    let (cq, _) = state_coefficients(modes, params)?;
    let mut bank = PhasorBank::new(modes, grid.start, grid.step);
    let mut q = Vec::with_capacity(grid.len);
    for _ in 0..grid.len {
        q.push(bank.project(&cq));
        bank.advance();
    }
    Ok(q)
}

/// The non-runaway stationary solution driven by `modes`, sampled on `grid`.
pub fn stationary_trajectory(modes: &FieldModeSet, grid: TimeGrid, params: &ModelParams) -> Result<Trajectory> {
    let (cq, cp) = state_coefficients(modes, params)?;
    let mut bank = PhasorBank::new(modes, grid.start, grid.step);
    let mut q = Vec::with_capacity(grid.len);
    let mut p = Vec::with_capacity(grid.len);
    for _ in 0..grid.len {
        q.push(bank.project(&cq));
        p.push(bank.project(&cp));
        bank.advance();
    }
    let times = grid.times();
    let g = phase_accumulator(&times, &q, &p, params);
    Ok(Trajectory {
        times,
        q,
        p,
        g,
        transient_end: 0,
    })
}

/// Stationary solution evaluated directly at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub q: f64,
    pub p: f64,
    /// Canonical momentum shift `(e/c) A_x(t)` of the total field acting on
    /// the charge, vacuum plus radiation reaction, so that
    /// `dp/dt = -m omega0^2 q - d/dt[(e/c) A_x]` holds exactly.
    pub momentum_shift: f64,
}

pub fn stationary_state_at(modes: &FieldModeSet, t: f64, params: &ModelParams) -> Result<StationaryState> {
    let chi = responses(modes, params)?;
    let (m, w0sq) = (params.mass(), params.omega0() * params.omega0());
    let mut state = StationaryState {
        q: 0.0,
        p: 0.0,
        momentum_shift: 0.0,
    };
    for (i, ((&w, &a), &th)) in modes
        .frequencies()
        .iter()
        .zip(modes.amplitudes())
        .zip(modes.phases())
        .enumerate()
    {
        let phasor = Complex64::from_polar(1.0, -(w * t + th));
        let z = chi[i] * a * phasor;
        state.q += z.re;
        state.p += (Complex64::new(0.0, -w * m) * z).re;
        // total drive qdd + omega0^2 q = A chi (omega0^2 - omega^2) per mode,
        // integrated once in time
        let drive = z * (w0sq - w * w);
        state.momentum_shift -= m * (Complex64::new(0.0, 1.0 / w) * drive).re;
    }
    Ok(state)
}

/// Phase-averaged `<q_c^2> = sum_n A_n^2 |chi_n|^2 / 2` for the discrete
/// mode set.
pub fn mode_set_variance(modes: &FieldModeSet, params: &ModelParams) -> Result<f64> {
    let chi = responses(modes, params)?;
    Ok(modes
        .amplitudes()
        .iter()
        .zip(&chi)
        .map(|(a, c)| 0.5 * a * a * c.norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vacuum_field::sample_modes;
    use approx::assert_relative_eq;

    fn single(a: f64, w: f64) -> FieldModeSet {
        FieldModeSet::new(vec![w], vec![a], vec![0.0], 0).unwrap()
    }

    #[test]
    fn resonant_mode_lags_by_quarter_period() {
        let eps = 1e-2;
        let p = ModelParams::dimensionless(eps).unwrap();
        let a = 0.3;
        let grid = TimeGrid::new(0.0, 0.01, 1000).unwrap();
        let traj = stationary_trajectory(&single(a, 1.0), grid, &p).unwrap();
        for (t, q) in traj.times.iter().zip(&traj.q) {
            // cos(t - pi/2) = sin t
            assert!((q - a / eps * t.sin()).abs() < 1e-12, "t={t}");
        }
        for (t, pc) in traj.times.iter().zip(&traj.p) {
            assert!((pc - a / eps * t.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn off_resonant_mode_flips_sign() {
        let p = ModelParams::dimensionless(1e-9).unwrap();
        let a = 0.6;
        let grid = TimeGrid::new(0.0, 0.01, 700).unwrap();
        let traj = stationary_trajectory(&single(a, 2.0), grid, &p).unwrap();
        for (t, q) in traj.times.iter().zip(&traj.q) {
            assert!((q + a / 3.0 * (2.0 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_drive_gives_rest() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let modes = FieldModeSet::new(vec![0.5, 1.5], vec![0.0, 0.0], vec![1.0, 2.0], 0).unwrap();
        let traj = stationary_trajectory(&modes, TimeGrid::new(0.0, 0.1, 50).unwrap(), &p).unwrap();
        assert!(traj.q.iter().chain(&traj.p).all(|x| *x == 0.0));
        assert_eq!(traj.transient_end, 0);
    }

    #[test]
    fn grid_and_pointwise_evaluations_agree() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let modes = sample_modes(&p, 5.0, 5000, 17).unwrap();
        let grid = TimeGrid::new(3.0, 0.157, 200).unwrap();
        let traj = stationary_trajectory(&modes, grid, &p).unwrap();
        let q_only = stationary_displacement(&modes, grid, &p).unwrap();
        assert_eq!(traj.q, q_only);
        let scale = mode_set_variance(&modes, &p).unwrap().sqrt();
        for k in (0..200).step_by(37) {
            let s = stationary_state_at(&modes, grid.time(k), &p).unwrap();
            assert!((s.q - traj.q[k]).abs() < 1e-10 * scale);
            assert!((s.p - traj.p[k]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn state_satisfies_equations_of_motion() {
        // dp/dt = -m w0^2 q - d/dt shift
        let p = ModelParams::dimensionless(0.02).unwrap();
        let modes = sample_modes(&p, 3.0, 1500, 2).unwrap();
        let (t, h) = (11.0, 1e-4);
        let s0 = stationary_state_at(&modes, t - h, &p).unwrap();
        let s1 = stationary_state_at(&modes, t + h, &p).unwrap();
        let s = stationary_state_at(&modes, t, &p).unwrap();
        let pdot = (s1.p - s0.p) / (2.0 * h);
        let shift_dot = (s1.momentum_shift - s0.momentum_shift) / (2.0 * h);
        assert_relative_eq!(pdot, -s.q - shift_dot, epsilon = 1e-6 * s.p.abs().max(1.0));
        let qdot = (s1.q - s0.q) / (2.0 * h);
        assert_relative_eq!(qdot, s.p, epsilon = 1e-6);
    }

    #[test]
    fn scaling_amplitudes_scales_displacement() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let modes = sample_modes(&p, 5.0, 5000, 4).unwrap();
        let grid = TimeGrid::new(0.0, 0.157, 300).unwrap();
        let q1 = stationary_displacement(&modes, grid, &p).unwrap();
        let q3 = stationary_displacement(&modes.scaled(3.0), grid, &p).unwrap();
        for (a, b) in q1.iter().zip(&q3) {
            assert!((3.0 * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        let v1 = mode_set_variance(&modes, &p).unwrap();
        let v3 = mode_set_variance(&modes.scaled(3.0), &p).unwrap();
        assert_relative_eq!(v3, 9.0 * v1, max_relative = 1e-13);
    }

    #[test]
    fn discrete_variance_close_to_half() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let modes = sample_modes(&p, 5.0, 5000, 0).unwrap();
        let v = mode_set_variance(&modes, &p).unwrap();
        assert!((v - 0.5).abs() < 0.02, "{v}");
    }
}
