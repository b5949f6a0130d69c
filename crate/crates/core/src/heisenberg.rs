//! Heisenberg-picture energy flow of the oscillator in the field vacuum.
//!
//! For a stationary state `|n>` the rate of change of the mean energy splits
//! into a self-reaction term and two vacuum-fluctuation sums,
//!
//! ```text
//! dE/dt = -(2e^2/3c^3) <n|xdd^2|n>
//!         + (2e^2/3c^3) [ sum_{b > n} |<n|xdd|b>|^2 - sum_{b < n} |<n|xdd|b>|^2 ]
//!       = -(4e^2/3c^3) sum_{b < n} |<n|xdd|b>|^2
//! ```
//!
//! For the oscillator `xdd = -omega0^2 x` connects only neighbouring levels, so
//! every sum has at most one term and the compact form is `-n epsilon hbar omega0^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFlowReport {
    pub state_index: usize,
    /// Radiation-reaction contribution, never positive.
    pub self_reaction: f64,
    /// Vacuum term from the level above, never negative.
    pub vacuum_up: f64,
    /// Vacuum term from the level below, never positive.
    pub vacuum_down: f64,
    pub total_full: f64,
    pub total_compact: f64,
}

/// `<n| xdd |m> = -omega0^2 <n|x|m>`, nonzero only for `|n - m| = 1`, where
/// `<n|x|n+1> = sqrt((n+1) hbar / (2 m omega0))`.
pub fn acceleration_matrix_element(n: usize, m: usize, params: &ModelParams) -> f64 {
    if n.abs_diff(m) != 1 {
        return 0.0;
    }
    let upper = n.max(m) as f64;
    -params.omega0().powi(2) * (upper * params.ground_state_variance()).sqrt()
}

/// Evaluates the three-term form in the truncated basis `0..=n_max`; the
/// diagonal `<n|xdd^2|n>` is the completeness sum over the basis.
pub fn energy_flow_full(n: usize, params: &ModelParams, n_max: usize) -> Result<EnergyFlowReport> {
    if n_max < n + 2 {
        return Err(Error::invalid("n_max", n_max, format!("n_max >= n + 2 = {}", n + 2)));
    }
    let k = params.reaction_coefficient();
    let squared = |b: usize| acceleration_matrix_element(n, b, params).powi(2);

    let diagonal: f64 = (0..=n_max).map(squared).sum();
    let above: f64 = (n + 1..=n_max).map(squared).sum();
    let below: f64 = (0..n).map(squared).sum();

    let self_reaction = -k * diagonal;
    let vacuum_up = k * above;
    let vacuum_down = -k * below;
    Ok(EnergyFlowReport {
        state_index: n,
        self_reaction,
        vacuum_up,
        vacuum_down,
        total_full: self_reaction + vacuum_up + vacuum_down,
        total_compact: energy_flow_compact(n, params),
    })
}

/// Compact form `-(4e^2/3c^3) sum_{b<n} |<n|xdd|b>|^2`.
pub fn energy_flow_compact(n: usize, params: &ModelParams) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = (0..n)
        .map(|b| acceleration_matrix_element(n, b, params).powi(2))
        .sum();
    -2.0 * params.reaction_coefficient() * sum
}

/// Reports for every `n` in `range`, each with basis cutoff `n + 2`.
pub fn energy_flow_table(range: std::ops::RangeInclusive<usize>, params: &ModelParams) -> Vec<EnergyFlowReport> {
    range
        .map(|n| energy_flow_full(n, params, n + 2).expect("cutoff n + 2 is always valid"))
        .collect()
}
