//! Random-phase realizations of the classical zero-point field.
//!
//! A realization is a finite sum of cosine modes on a midpoint frequency grid,
//!
//! ```text
//! a(t) = sum_n A_n cos(omega_n t + theta_n),    A_n^2 = 2 S(omega_n) d_omega
//! ```
//!
//! where `a = (e/m) E_0` is the driving acceleration and `S` the one-sided
//! spectral density of that acceleration. Amplitudes are stored in these
//! per-mass units so the dynamics can use them directly; the electric field
//! itself is `(m/e) a(t)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default hard cutoff, in units of `omega0`.
pub const DEFAULT_CUTOFF: f64 = 5.0;

/// Number of grid spacings per resonance linewidth `epsilon * omega0`.
pub const LINEWIDTH_RESOLUTION: f64 = 10.0;

/// Shape of the driving spectrum.
///
/// Only [`SpectralLaw::ZeroPoint`] is physical; the other variant exists so
/// the verification suite can confirm that a wrong spectrum is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralLaw {
    #[default]
    ZeroPoint,
    #[doc(hidden)]
    Quadratic,
}

/// `(epsilon / pi) omega^3`: the zero-point acceleration spectrum in units
/// where `hbar = m = omega0 = 1`.
pub fn zero_point_density(omega: f64, epsilon: f64) -> f64 {
    epsilon / PI * omega * omega * omega
}

/// One-sided spectral density of the driving acceleration `(e/m) E_0`,
/// `(epsilon / pi) hbar omega^3 / (m omega0)`.
///
/// Equivalently `(e/m)^2 * 2 hbar omega^3 / (3 pi c^3)`, the charge-weighted
/// density of the x-component of the vacuum field.
pub fn spectral_density(omega: f64, params: &ModelParams) -> f64 {
    SpectralLaw::ZeroPoint.density(omega, params)
}

impl SpectralLaw {
    pub fn density(self, omega: f64, params: &ModelParams) -> f64 {
        let scale = params.hbar() / (params.mass() * params.omega0());
        let w = omega / params.omega0();
        let shape = match self {
            SpectralLaw::ZeroPoint => w * w * w,
            SpectralLaw::Quadratic => w * w,
        };
        params.epsilon() / PI * scale * params.omega0().powi(3) * shape
    }
}

/// Amplitude of a mode carrying density `density` over a bin of width `spacing`.
pub fn mode_amplitude(density: f64, spacing: f64) -> f64 {
    (2.0 * density * spacing).sqrt()
}

/// Draws `n` phases uniform on `[0, 2 pi)`.
///
/// The stream is ChaCha8 seeded through `seed_from_u64`, one `gen_range`
/// call per phase in mode order; both are stable across releases of
/// `rand 0.8` and `rand_chacha 0.3`.
pub fn draw_phases(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// One realization of the vacuum field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModeSetDocument", into = "ModeSetDocument")]
pub struct FieldModeSet {
    seed: u64,
    omega_cut: f64,
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

/// Serialized form of a [`FieldModeSet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModeSetDocument {
    seed: u64,
    omega_cut: f64,
    n_modes: usize,
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl From<FieldModeSet> for ModeSetDocument {
    fn from(m: FieldModeSet) -> Self {
        Self {
            seed: m.seed,
            omega_cut: m.omega_cut,
            n_modes: m.frequencies.len(),
            frequencies: m.frequencies,
            amplitudes: m.amplitudes,
            phases: m.phases,
        }
    }
}

impl TryFrom<ModeSetDocument> for FieldModeSet {
    type Error = Error;

    fn try_from(d: ModeSetDocument) -> Result<Self> {
        if d.n_modes != d.frequencies.len() {
            return Err(Error::Config(format!(
                "n_modes = {} but {} frequencies listed",
                d.n_modes,
                d.frequencies.len()
            )));
        }
        let mut set = FieldModeSet::new(d.frequencies, d.amplitudes, d.phases, d.seed)?;
        set.omega_cut = d.omega_cut;
        Ok(set)
    }
}

impl FieldModeSet {
    /// Builds a mode set from explicit lists, checking the structural
    /// invariants. `omega_cut` is set to the largest frequency.
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<f64>, phases: Vec<f64>, seed: u64) -> Result<Self> {
        let n = frequencies.len();
        if n == 0 {
            return Err(Error::invalid("n_modes", 0, "at least one mode"));
        }
        if amplitudes.len() != n || phases.len() != n {
            return Err(Error::Config(format!(
                "mode lists differ in length: {} frequencies, {} amplitudes, {} phases",
                n,
                amplitudes.len(),
                phases.len()
            )));
        }
        if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("frequencies", "[..]", "all finite and > 0"));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequencies", "[..]", "strictly increasing"));
        }
        if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::invalid("amplitudes", a, "all finite and >= 0"));
        }
        if let Some(p) = phases.iter().find(|p| !(**p >= 0.0 && **p < TAU)) {
            return Err(Error::invalid("phases", p, "all in [0, 2 pi)"));
        }
        let omega_cut = frequencies[n - 1];
        Ok(Self {
            seed,
            omega_cut,
            frequencies,
            amplitudes,
            phases,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega_cut(&self) -> f64 {
        self.omega_cut
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Same frequencies and phases with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a *= factor);
        out
    }

    /// Phase-averaged `<a(t)^2> = sum_n A_n^2 / 2`.
    pub fn mean_square(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }
}

/// Grid spacing required to resolve the resonance linewidth.
pub fn max_spacing(params: &ModelParams) -> f64 {
    params.epsilon() * params.omega0() / LINEWIDTH_RESOLUTION
}

/// Smallest mode count that resolves the linewidth up to `omega_cut`.
pub fn required_modes(params: &ModelParams, omega_cut: f64) -> usize {
    (omega_cut / max_spacing(params) * (1.0 - 1e-12)).ceil() as usize
}

/// Checks the sampling preconditions and returns the grid spacing.
pub fn check_grid(params: &ModelParams, omega_cut: f64, n_modes: usize) -> Result<f64> {
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", 0, "n_modes >= 1"));
    }
    if !(omega_cut.is_finite() && omega_cut > params.omega0()) {
        return Err(Error::invalid("omega_cut", omega_cut, "omega_cut > omega0"));
    }
    let spacing = omega_cut / n_modes as f64;
    // an uncoupled oscillator has no linewidth to resolve and a zero drive
    if params.epsilon() > 0.0 {
        let bound = max_spacing(params);
        if spacing > bound * (1.0 + 1e-12) {
            return Err(Error::GridTooCoarse {
                spacing,
                bound,
                required_modes: required_modes(params, omega_cut),
            });
        }
    }
    Ok(spacing)
}

/// Samples a realization of the zero-point field on the midpoint grid
/// `omega_n = (n - 1/2) omega_cut / n_modes`.
pub fn sample_modes(params: &ModelParams, omega_cut: f64, n_modes: usize, seed: u64) -> Result<FieldModeSet> {
    sample_modes_with(params, omega_cut, n_modes, seed, SpectralLaw::ZeroPoint)
}

pub fn sample_modes_with(
    params: &ModelParams,
    omega_cut: f64,
    n_modes: usize,
    seed: u64,
    law: SpectralLaw,
) -> Result<FieldModeSet> {
    let spacing = check_grid(params, omega_cut, n_modes)?;
    let frequencies: Vec<f64> = (0..n_modes).map(|n| (n as f64 + 0.5) * spacing).collect();
    let amplitudes = frequencies
        .iter()
        .map(|&w| mode_amplitude(law.density(w, params), spacing))
        .collect();
    Ok(FieldModeSet {
        seed,
        omega_cut,
        frequencies,
        amplitudes,
        phases: draw_phases(seed, n_modes),
    })
}

/// Driving acceleration `a(t) = sum_n A_n cos(omega_n t + theta_n)`.
pub fn field_at(modes: &FieldModeSet, t: f64) -> f64 {
    modes
        .frequencies
        .iter()
        .zip(&modes.amplitudes)
        .zip(&modes.phases)
        .map(|((w, a), th)| a * (w * t + th).cos())
        .sum()
}

/// Exact time derivative of [`field_at`].
pub fn field_derivative_at(modes: &FieldModeSet, t: f64) -> f64 {
    -modes
        .frequencies
        .iter()
        .zip(&modes.amplitudes)
        .zip(&modes.phases)
        .map(|((w, a), th)| a * w * (w * t + th).sin())
        .sum::<f64>()
}

/// Vector potential matching [`field_at`], `-c sum_n (A_n/omega_n) sin(omega_n t + theta_n)`,
/// so that `-(1/c) dA/dt = a(t)`. Like the amplitudes it carries the factor
/// `e/m`: the canonical momentum shift is `(e/c) A_x = (m/c) * this`.
pub fn vector_potential_at(modes: &FieldModeSet, t: f64, params: &ModelParams) -> f64 {
    -params.c_light()
        * modes
            .frequencies
            .iter()
            .zip(&modes.amplitudes)
            .zip(&modes.phases)
            .map(|((w, a), th)| a / w * (w * t + th).sin())
            .sum::<f64>()
}

/// Steps the unit phasors `w_n(t) = exp(-i (omega_n t + theta_n))` along a
/// uniform time grid by complex rotation, re-anchoring from `sin_cos` at a
/// fixed cadence so rounding drift stays bounded.
pub(crate) struct PhasorBank<'a> {
    omega: &'a [f64],
    theta: &'a [f64],
    t0: f64,
    step: f64,
    index: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    rot_re: Vec<f64>,
    rot_im: Vec<f64>,
}

const ANCHOR_EVERY: usize = 64;

impl<'a> PhasorBank<'a> {
    pub(crate) fn new(modes: &'a FieldModeSet, t0: f64, step: f64) -> Self {
        let n = modes.len();
        let (rot_re, rot_im) = modes
            .frequencies
            .iter()
            .map(|w| {
                let (s, c) = (w * step).sin_cos();
                (c, -s)
            })
            .unzip();
        let mut bank = Self {
            omega: &modes.frequencies,
            theta: &modes.phases,
            t0,
            step,
            index: 0,
            re: vec![0.0; n],
            im: vec![0.0; n],
            rot_re,
            rot_im,
        };
        bank.anchor();
        bank
    }

    pub(crate) fn time(&self) -> f64 {
        self.t0 + self.index as f64 * self.step
    }

    fn anchor(&mut self) {
        let t = self.time();
        for (i, (w, th)) in self.omega.iter().zip(self.theta).enumerate() {
            let (s, c) = (w * t + th).sin_cos();
            self.re[i] = c;
            self.im[i] = -s;
        }
    }

    pub(crate) fn advance(&mut self) {
        self.index += 1;
        if self.index % ANCHOR_EVERY == 0 {
            self.anchor();
            return;
        }
        for i in 0..self.re.len() {
            let (x, y) = (self.re[i], self.im[i]);
            self.re[i] = x * self.rot_re[i] - y * self.rot_im[i];
            self.im[i] = x * self.rot_im[i] + y * self.rot_re[i];
        }
    }

    /// `sum_n Re(c_n w_n)` with a fixed summation order.
    pub(crate) fn project(&self, c: &Coefficients) -> f64 {
        let mut acc = [0.0f64; 4];
        let n = self.re.len();
        let body = n - n % 4;
        for base in (0..body).step_by(4) {
            for (lane, slot) in acc.iter_mut().enumerate() {
                let i = base + lane;
                *slot += c.re[i] * self.re[i] - c.im[i] * self.im[i];
            }
        }
        let mut tail = 0.0;
        for i in body..n {
            tail += c.re[i] * self.re[i] - c.im[i] * self.im[i];
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    }
}

/// Complex per-mode weights, stored split for the projection kernel.
#[derive(Debug, Clone, Default)]
pub(crate) struct Coefficients {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Coefficients {
    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize) -> (f64, f64)) -> Self {
        let (re, im) = (0..n).map(&mut f).unzip();
        Self { re, im }
    }

    /// Weights for `a(t)` and `da/dt`.
    pub(crate) fn drive(modes: &FieldModeSet) -> (Self, Self) {
        let n = modes.len();
        let value = Self::from_fn(n, |i| (modes.amplitudes[i], 0.0));
        let slope = Self::from_fn(n, |i| (0.0, -modes.amplitudes[i] * modes.frequencies[i]));
        (value, slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn single(a: f64, w: f64, th: f64) -> FieldModeSet {
        FieldModeSet::new(vec![w], vec![a], vec![th], 0).unwrap()
    }

    #[test]
    fn density_values() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        assert_eq!(spectral_density(0.0, &p), 0.0);
        assert_eq!(zero_point_density(1.0, PI), 1.0);
        let s1 = spectral_density(0.7, &p);
        assert_relative_eq!(spectral_density(1.4, &p), 8.0 * s1, max_relative = 1e-15);
        assert_relative_eq!(s1, zero_point_density(0.7, 1e-2), max_relative = 1e-15);
    }

    #[test]
    fn density_general_units_matches_field_spectrum() {
        // (e/m)^2 * 2 hbar w^3 / (3 pi c^3)
        let p = ModelParams::new(2.0, 0.3, 1.5, 0.7, 4.0).unwrap();
        let w: f64 = 2.2;
        let field = 2.0 * p.hbar() * w.powi(3) / (3.0 * PI * p.c_light().powi(3));
        let per_mass = (p.charge() / p.mass()).powi(2) * field;
        assert_relative_eq!(spectral_density(w, &p), per_mass, max_relative = 1e-14);
    }

    #[test]
    fn amplitude_at_unit_density() {
        // eps = pi, omega = 1, spacing 0.5: A^2 = 2 * 1 * 0.5
        assert_eq!(mode_amplitude(zero_point_density(1.0, PI), 0.5), 1.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let a = sample_modes(&p, 5.0, 5000, 42).unwrap();
        let b = sample_modes(&p, 5.0, 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_modes(&p, 5.0, 5000, 43).unwrap();
        assert_ne!(a.phases(), c.phases());
        assert_eq!(a.frequencies(), c.frequencies());
    }

    #[test]
    fn sampled_grid_invariants() {
        let p = ModelParams::dimensionless(0.05).unwrap();
        let m = sample_modes(&p, 5.0, 1000, 7).unwrap();
        let dw = 5.0 / 1000.0;
        assert_relative_eq!(m.frequencies()[0], 0.5 * dw);
        assert!(m.frequencies().iter().all(|w| { let k = w / dw - 0.5; (k - k.round()).abs() < 1e-9 }));
        for (w, a) in m.frequencies().iter().zip(m.amplitudes()) {
            assert_relative_eq!(a * a, 2.0 * spectral_density(*w, &p) * dw, max_relative = 1e-13);
        }
        assert!(m.phases().iter().all(|th| (0.0..TAU).contains(th)));
        // midpoint grid never lands on omega0
        assert!(m.frequencies().iter().all(|w| (w - 1.0).abs() > 0.25 * dw));
    }

    #[test]
    fn rejects_bad_grids() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        assert!(sample_modes(&p, 5.0, 0, 1).is_err());
        assert!(sample_modes(&p, 0.5, 100, 1).is_err());
        match sample_modes(&p, 5.0, 4999, 1).unwrap_err() {
            Error::GridTooCoarse { required_modes, .. } => assert_eq!(required_modes, 5000),
            e => panic!("unexpected {e}"),
        }
        assert!(sample_modes(&p, 5.0, 5000, 1).is_ok());
    }

    #[test]
    fn uncoupled_oscillator_has_no_drive() {
        let p = ModelParams::dimensionless(0.0).unwrap();
        let m = sample_modes(&p, 5.0, 10, 1).unwrap();
        assert!(m.amplitudes().iter().all(|a| *a == 0.0));
    }

    #[test]
    fn single_mode_values() {
        let m = single(1.0, 1.0, 0.0);
        assert_eq!(field_at(&m, 0.0), 1.0);
        assert!(field_at(&m, FRAC_PI_2).abs() < 1e-15);
        assert_eq!(field_derivative_at(&m, 0.0), 0.0);
        let m2 = single(1.0, 2.0, 0.0);
        assert_relative_eq!(field_derivative_at(&m2, PI / 4.0), -2.0);
        let p = ModelParams::dimensionless(1e-2).unwrap();
        assert_eq!(vector_potential_at(&m, 0.0, &p), 0.0);
    }

    #[test]
    fn field_is_linear_in_modes() {
        let a = FieldModeSet::new(vec![0.3, 1.1], vec![0.5, 2.0], vec![0.1, 4.0], 0).unwrap();
        let b = FieldModeSet::new(vec![0.7, 1.9], vec![1.5, 0.2], vec![3.0, 6.0], 0).unwrap();
        let u = FieldModeSet::new(
            vec![0.3, 0.7, 1.1, 1.9],
            vec![0.5, 1.5, 2.0, 0.2],
            vec![0.1, 3.0, 4.0, 6.0],
            0,
        )
        .unwrap();
        for t in [0.0, 0.4, 13.7] {
            assert_relative_eq!(field_at(&u, t), field_at(&a, t) + field_at(&b, t), epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let p = ModelParams::dimensionless(0.05).unwrap();
        let m = sample_modes(&p, 3.0, 600, 5).unwrap();
        let t = 2.3;
        let errs: Vec<f64> = [1e-2, 5e-3]
            .iter()
            .map(|h| {
                let fd = (field_at(&m, t + h) - field_at(&m, t - h)) / (2.0 * h);
                (fd - field_derivative_at(&m, t)).abs()
            })
            .collect();
        // second order: halving h quarters the error
        assert_relative_eq!(errs[0] / errs[1], 4.0, max_relative = 0.01);
    }

    #[test]
    fn potential_generates_field() {
        let p = ModelParams::new(1.0, 1.4, 1.0, 1.0, 3.0).unwrap();
        let m = sample_modes(&p, 3.0, 2000, 9).unwrap();
        let t = 7.1;
        let errs: Vec<f64> = [1e-2, 5e-3]
            .iter()
            .map(|h| {
                let da = (vector_potential_at(&m, t + h, &p) - vector_potential_at(&m, t - h, &p)) / (2.0 * h);
                (-da / p.c_light() - field_at(&m, t)).abs()
            })
            .collect();
        assert!(errs[0] < 1e-4 * m.mean_square().sqrt());
        assert_relative_eq!(errs[0] / errs[1], 4.0, max_relative = 0.01);
    }

    #[test]
    fn potential_averages_to_zero_over_a_period() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let m = single(1.3, 2.0, 0.7);
        let period = TAU / 2.0;
        let n = 1000;
        let mean: f64 = (0..n)
            .map(|k| vector_potential_at(&m, k as f64 * period / n as f64, &p))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 1e-14);
    }

    #[test]
    fn phasor_bank_tracks_exact_sum() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let m = sample_modes(&p, 5.0, 5000, 3).unwrap();
        let (value, slope) = Coefficients::drive(&m);
        let mut bank = PhasorBank::new(&m, 1.5, 0.15);
        let scale = m.mean_square().sqrt();
        for _ in 0..300 {
            let t = bank.time();
            assert!((bank.project(&value) - field_at(&m, t)).abs() < 1e-11 * scale);
            assert!((bank.project(&slope) - field_derivative_at(&m, t)).abs() < 1e-11 * scale * 5.0);
            bank.advance();
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = ModelParams::dimensionless(0.05).unwrap();
        let m = sample_modes(&p, 5.0, 1000, 11).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["seed", "omega_cut", "n_modes", "frequencies", "amplitudes", "phases"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: FieldModeSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"seed":1,"omega_cut":2,"n_modes":1,"frequencies":[1.0],"amplitudes":[1.0],"phases":[7.0]}"#;
        assert!(serde_json::from_str::<FieldModeSet>(bad).is_err());
    }

    #[test]
    fn rejects_malformed_sets() {
        assert!(FieldModeSet::new(vec![], vec![], vec![], 0).is_err());
        assert!(FieldModeSet::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0], 0).is_err());
        assert!(FieldModeSet::new(vec![1.0], vec![-1.0], vec![0.0], 0).is_err());
        assert!(FieldModeSet::new(vec![1.0], vec![1.0], vec![TAU], 0).is_err());
        assert!(FieldModeSet::new(vec![1.0], vec![1.0, 2.0], vec![0.0], 0).is_err());
    }
}
