//! Charged harmonic oscillator driven by a classical zero-point field.
//!
//! The crate follows one question through several independent routes: when
//! the vacuum field and radiation reaction are put into the Schrodinger
//! picture as a c-number vector potential, what is the mean square position
//! of the wavepacket? The exact solution is a ground-state Gaussian rigidly
//! displaced by a classical trajectory `q_c(t)` ([`wavepacket`]), so
//! `<x^2> = hbar/(2 m omega0) + <q_c^2>`. The trajectory is driven by random
//! phase realizations of the field ([`vacuum_field`]) and solved in
//! [`dynamics`]; phase averaging ([`ensemble`]) gives `<q_c^2> ~ hbar/(2 m omega0)`
//! and therefore twice the ground-state value. The Heisenberg-picture
//! energy balance of the same oscillator is in [`heisenberg`].
//!
//! All computations may run in units with `hbar = m = omega0 = 1`, where the
//! damping `epsilon = 2 e^2 omega0 / (3 m c^3)` is the only physical knob.

pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod heisenberg;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod vacuum_field;
pub mod verify;
pub mod wavepacket;

pub use error::{Error, Result};
pub use model::ModelParams;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/units.md")]
    mod units {}
    #[doc = include_str!("../../../book/src/vacuum-field.md")]
    mod vacuum_field {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/wavepacket.md")]
    mod wavepacket {}
    #[doc = include_str!("../../../book/src/ensemble.md")]
    mod ensemble {}
    #[doc = include_str!("../../../book/src/heisenberg.md")]
    mod heisenberg {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
