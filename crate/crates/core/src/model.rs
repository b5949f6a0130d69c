//! Physical parameters of the charged oscillator and the dimensionless unit
//! system used throughout the crate.
//!
//! Gaussian units are assumed, so the radiation-reaction time is
//! `tau_R = 2 e^2 / (3 m c^3)` and the dimensionless damping is
//! `epsilon = omega0 * tau_R`. In the canonical units built by
//! [`ModelParams::dimensionless`] we have `hbar = m = omega0 = c = 1` and the
//! charge is fixed by `epsilon`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper (exclusive) bound on the damping parameter.
pub const EPSILON_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    mass: f64,
    charge: f64,
    omega0: f64,
    hbar: f64,
    c_light: f64,
    epsilon: f64,
}

fn damping_from(mass: f64, charge: f64, omega0: f64, c_light: f64) -> f64 {
    2.0 * charge * charge * omega0 / (3.0 * mass * c_light.powi(3))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            bound: "epsilon >= 0",
        });
    }
    if epsilon >= EPSILON_MAX {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            bound: "epsilon < 0.1",
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, value, "a finite value > 0"))
    }
}

impl ModelParams {
    /// Builds parameters in arbitrary (Gaussian) units.
    pub fn new(mass: f64, charge: f64, omega0: f64, hbar: f64, c_light: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("omega0", omega0)?;
        check_positive("hbar", hbar)?;
        check_positive("c_light", c_light)?;
        if !charge.is_finite() {
            return Err(Error::invalid("charge", charge, "a finite value"));
        }
        let epsilon = damping_from(mass, charge, omega0, c_light);
        check_epsilon(epsilon)?;
        Ok(Self {
            mass,
            charge,
            omega0,
            hbar,
            c_light,
            epsilon,
        })
    }

    /// Canonical units `hbar = m = omega0 = c = 1`, with the charge chosen so
    /// that the damping equals `epsilon`. `epsilon = 0` is the uncoupled
    /// oscillator.
    pub fn dimensionless(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            mass: 1.0,
            charge: (1.5 * epsilon).sqrt(),
            omega0: 1.0,
            hbar: 1.0,
            c_light: 1.0,
            epsilon,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn c_light(&self) -> f64 {
        self.c_light
    }

    /// Dimensionless damping `2 e^2 omega0 / (3 m c^3)`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Radiation-reaction time `tau_R = 2 e^2 / (3 m c^3) = epsilon / omega0`.
    pub fn radiation_time(&self) -> f64 {
        self.epsilon / self.omega0
    }

    /// Coefficient `2 e^2 / (3 c^3)` of the self-force `(2e^2/3c^3) q'''`,
    /// equal to `m * tau_R`.
    pub fn reaction_coefficient(&self) -> f64 {
        self.mass * self.radiation_time()
    }

    /// `hbar / (2 m omega0)`, the position variance of the ground state.
    pub fn ground_state_variance(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.omega0)
    }

    /// `hbar omega0 / (m c^2)`; must be small for the point-particle
    /// radiation-reaction force to apply.
    pub fn quantum_to_rest_energy(&self) -> f64 {
        self.hbar * self.omega0 / (self.mass * self.c_light * self.c_light)
    }

    /// Characteristic decay time `1 / (epsilon omega0)`; infinite when undamped.
    pub fn decay_time(&self) -> f64 {
        1.0 / (self.epsilon * self.omega0)
    }

    /// Rescales to `hbar = m = omega0 = 1`, returning the scales needed to go back.
    ///
    /// Unlike [`ModelParams::dimensionless`] the speed of light is kept at its
    /// scaled value, so `hbar omega0 / m c^2` survives the conversion.
    pub fn to_dimensionless(&self) -> (ModelParams, UnitScales) {
        let scales = UnitScales::of(self);
        let velocity = scales.length / scales.time;
        let energy = self.hbar * self.omega0;
        let params = ModelParams {
            mass: 1.0,
            // e^2 has dimensions energy * length in Gaussian units
            charge: self.charge / (energy * scales.length).sqrt(),
            omega0: 1.0,
            hbar: 1.0,
            c_light: self.c_light / velocity,
            epsilon: self.epsilon,
        };
        (params, scales)
    }
}

/// Unit scales of a dimensionless parameter set: one unit of mass, time and
/// length in the original system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    pub mass: f64,
    pub time: f64,
    pub length: f64,
}

impl UnitScales {
    fn of(params: &ModelParams) -> Self {
        Self {
            mass: params.mass,
            time: 1.0 / params.omega0,
            length: (params.hbar / (params.mass * params.omega0)).sqrt(),
        }
    }

    /// Converts a dimensionless parameter set back to the original units.
    pub fn restore(&self, dimensionless: &ModelParams) -> Result<ModelParams> {
        let velocity = self.length / self.time;
        let action = self.mass * self.length * self.length / self.time;
        let energy = action / self.time;
        ModelParams::new(
            dimensionless.mass * self.mass,
            dimensionless.charge * (energy * self.length).sqrt(),
            dimensionless.omega0 / self.time,
            dimensionless.hbar * action,
            dimensionless.c_light * velocity,
        )
    }
}
