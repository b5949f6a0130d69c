use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Complex displacement response to a unit driving acceleration
/// `cos(omega t + theta)`,
///
/// ```text
/// chi(omega) = 1 / (omega0^2 - omega^2 - i tau_R omega^3)
/// ```
///
/// A drive `A cos(omega t + theta)` produces the stationary displacement
/// `A |chi| cos(omega t + theta - arg chi)`; the displacement per unit
/// electric field is `(e/m) chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseValue(pub Complex64);

impl ResponseValue {
    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Phase lag of the displacement behind the drive.
    pub fn arg(&self) -> f64 {
        self.0.arg()
    }
}

pub fn response_function(omega: f64, params: &ModelParams) -> Result<ResponseValue> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::invalid("omega", omega, "a finite value >= 0"));
    }
    let w0 = params.omega0();
    let denom = Complex64::new(w0 * w0 - omega * omega, -params.radiation_time() * omega.powi(3));
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::UndampedResonance);
    }
    Ok(ResponseValue(denom.inv()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn static_limit() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let chi = response_function(0.0, &p).unwrap();
        assert_eq!(chi.0, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn on_resonance_is_imaginary() {
        let p = ModelParams::dimensionless(1e-2).unwrap();
        let chi = response_function(1.0, &p).unwrap();
        assert_eq!(chi.re(), 0.0);
        assert_relative_eq!(chi.im(), 100.0, max_relative = 1e-14);
        assert_relative_eq!(chi.arg(), FRAC_PI_2);
    }

    #[test]
    fn off_resonance_without_damping() {
        let p = ModelParams::dimensionless(0.0).unwrap();
        let chi = response_function(2.0, &p).unwrap();
        assert_relative_eq!(chi.re(), -1.0 / 3.0);
        assert_eq!(chi.im(), 0.0);
    }

    #[test]
    fn undamped_resonance_is_an_error() {
        let p = ModelParams::dimensionless(0.0).unwrap();
        assert!(matches!(response_function(1.0, &p), Err(Error::UndampedResonance)));
        assert!(response_function(-1.0, &p).is_err());
    }

    proptest! {
        #[test]
        fn magnitude_matches_closed_form(eps in 1e-5f64..0.09, w in 0.0f64..20.0) {
            let p = ModelParams::dimensionless(eps).unwrap();
            let chi = response_function(w, &p).unwrap();
            let expected = 1.0 / ((1.0 - w * w).powi(2) + eps * eps * w.powi(6));
            prop_assert!((chi.norm_sqr() - expected).abs() <= 1e-12 * expected);
            // damping only ever delays the response
            prop_assert!(chi.im() >= 0.0);
        }
    }
}
