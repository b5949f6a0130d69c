//! Bundled acceptance suite.
//!
//! Each check compares one computed quantity with its reference and records
//! the tolerance it was held to. [`run_suite`] runs them all; the `verify`
//! subcommand and the `acceptance` test target both print its table.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::dynamics::{
    integrate_time_domain, max_step, mode_set_variance, phase_accumulator, stationary_displacement,
    stationary_state_at, transient_length, variance_integral, variance_integral_to, TimeGrid, Trajectory,
};
use crate::ensemble::{phase_orthogonality_check, run_ensemble_on, run_ensemble_with, EnsembleConfig, Solver};
use crate::error::Result;
use crate::heisenberg::{energy_flow_full, energy_flow_table};
use crate::model::ModelParams;
use crate::vacuum_field::{required_modes, sample_modes_with, SpectralLaw, DEFAULT_CUTOFF};
use crate::wavepacket::{numeric_moments, position_second_moment, schrodinger_residual, WavepacketSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteOptions {
    /// Skip the ensemble run and shorten the cross-solver comparison.
    pub quick: bool,
    pub threads: Option<usize>,
    /// Spectrum used whenever modes are sampled.
    pub law: SpectralLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: &'static str,
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: String,
    pub passed: bool,
    pub skipped: bool,
    /// Wall time, shown in the table but kept out of artifacts.
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    fn new(criterion: &'static str, name: impl Into<String>, expected: f64, actual: f64, tolerance: impl Into<String>, passed: bool) -> Self {
        Self {
            criterion,
            name: name.into(),
            expected,
            actual,
            tolerance: tolerance.into(),
            // NaN never passes
            passed: passed && !actual.is_nan(),
            skipped: false,
            seconds: 0.0,
        }
    }

    fn skipped(criterion: &'static str, name: impl Into<String>) -> Self {
        Self {
            skipped: true,
            passed: true,
            ..Self::new(criterion, name, f64::NAN, f64::NAN, "-", true)
        }
    }

    fn failed(criterion: &'static str, name: impl Into<String>, error: &crate::Error) -> Self {
        Self::new(criterion, format!("{} ({error})", name.into()), f64::NAN, f64::NAN, "-", false)
    }

    fn timed(mut self, start: Instant) -> Self {
        self.seconds = start.elapsed().as_secs_f64();
        self
    }

    pub fn status(&self) -> &'static str {
        match (self.skipped, self.passed) {
            (true, _) => "skip",
            (false, true) => "pass",
            (false, false) => "FAIL",
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Fixed-width pass/fail table, one line per check.
pub fn render_table(checks: &[Check]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<4} {:<6} {:<58} {:>14} {:>14} {:<26} {:>8}",
        "id", "result", "check", "expected", "actual", "tolerance", "seconds"
    );
    for c in checks {
        let _ = writeln!(
            out,
            "{:<4} {:<6} {:<58} {:>14} {:>14} {:<26} {:>8.2}",
            c.criterion,
            c.status(),
            c.name,
            number(c.expected),
            number(c.actual),
            c.tolerance,
            c.seconds
        );
    }
    out
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.4e}")
    }
}

/// Runs every check in criterion order.
pub fn run_suite(options: &SuiteOptions) -> Vec<Check> {
    let mut checks = Vec::new();
    checks.extend(quadrature_checks());
    checks.push(closure_check(options.law));
    if options.quick {
        for name in ["<q_c^2> = hbar/(2 m omega0)", "<xbar^2> = hbar/(m omega0)", "<q_c> = 0"] {
            checks.push(Check::skipped("2", name));
        }
    } else {
        checks.extend(ensemble_checks(options));
    }
    checks.push(cross_solver_check(if options.quick { 2 } else { 8 }, options.law));
    checks.extend(heisenberg_checks());
    checks.push(residual_order_check(options.law));
    checks.extend(moment_checks());
    checks.push(phase_check());
    checks.push(determinism_check(options.threads));
    checks
}

fn dimensionless(eps: f64) -> ModelParams {
    ModelParams::dimensionless(eps).expect("suite epsilon is in range")
}

fn quadrature_checks() -> Vec<Check> {
    [(1e-3, 1e-2), (1e-5, 1e-3)]
        .into_iter()
        .map(|(eps, tol)| {
            let start = Instant::now();
            let name = format!("variance integral, epsilon = {eps:e}");
            match variance_integral(&dimensionless(eps), 1e-10) {
                Ok(v) => {
                    let elapsed = start.elapsed().as_secs_f64();
                    let ok = (v.value / 0.5 - 1.0).abs() <= tol && elapsed < 1.0;
                    Check::new("1", name, 0.5, v.value, format!("rel {tol:e}, < 1 s"), ok).timed(start)
                }
                Err(e) => Check::failed("1", name, &e),
            }
        })
        .collect()
}

/// Phase-averaged variance of a sampled mode set against the continuum
/// integral truncated at the same cutoff. The midpoint sum resolves the
/// resonance to far below the tolerance, so any change of spectral shape shows.
fn closure_check(law: SpectralLaw) -> Check {
    let start = Instant::now();
    let name = "mode-set variance vs truncated integral";
    let params = dimensionless(1e-2);
    let run = || -> Result<(f64, f64)> {
        let modes = sample_modes_with(&params, DEFAULT_CUTOFF, required_modes(&params, DEFAULT_CUTOFF), 0, law)?;
        let discrete = mode_set_variance(&modes, &params)?;
        let continuum = variance_integral_to(&params, DEFAULT_CUTOFF, 1e-10)?.value;
        Ok((continuum, discrete))
    };
    match run() {
        Ok((continuum, discrete)) => {
            let ok = (discrete / continuum - 1.0).abs() <= 1e-6;
            Check::new("C", name, continuum, discrete, "rel 1e-6", ok).timed(start)
        }
        Err(e) => Check::failed("C", name, &e),
    }
}

fn ensemble_checks(options: &SuiteOptions) -> Vec<Check> {
    let start = Instant::now();
    let config = match EnsembleConfig::at_bounds(1e-2, Solver::Stationary) {
        Ok(c) => c,
        Err(e) => return vec![Check::failed("2", "ensemble", &e)],
    };
    let stats = match options.threads {
        Some(n) => run_ensemble_on(&config, n, options.law),
        None => run_ensemble_with(&config, options.law),
    };
    let stats = match stats {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("2", "ensemble", &e)],
    };
    let within = |m: &crate::ensemble::Moment, target: f64| {
        (m.value / target - 1.0).abs() <= 0.1 && m.z_score(target).abs() <= 3.0
    };
    let qc = &stats.mean_qc;
    vec![
        Check::new(
            "2",
            "<q_c^2> = hbar/(2 m omega0)",
            0.5,
            stats.mean_qc_sq.value,
            format!("rel 0.1 and 3 se ({:.2e})", stats.mean_qc_sq.std_error),
            within(&stats.mean_qc_sq, 0.5),
        )
        .timed(start),
        Check::new(
            "2",
            "<xbar^2> = hbar/(m omega0)",
            1.0,
            stats.mean_xbar_sq.value,
            format!("rel 0.1 and 3 se ({:.2e})", stats.mean_xbar_sq.std_error),
            within(&stats.mean_xbar_sq, 1.0),
        ),
        Check::new(
            "2",
            "<q_c> = 0",
            0.0,
            qc.value,
            format!("3 se ({:.2e})", qc.std_error),
            qc.z_score(0.0).abs() <= 3.0,
        ),
    ]
}

/// Relative RMS difference between the time-domain and stationary solutions
/// after the transient, for one realization.
pub fn cross_solver_deviation(params: &ModelParams, seed: u64, law: SpectralLaw) -> Result<f64> {
    let modes = sample_modes_with(params, DEFAULT_CUTOFF, required_modes(params, DEFAULT_CUTOFF), seed, law)?;
    let dt = max_step(params);
    let t_total = transient_length(params) + 10.0 * params.decay_time();
    let start = stationary_state_at(&modes, 0.0, params)?;
    let numeric = integrate_time_domain(&modes, t_total, dt, (start.q, start.p), params)?;
    let exact = stationary_displacement(&modes, TimeGrid::new(0.0, dt, numeric.len())?, params)?;
    let k0 = numeric.transient_end;
    let (diff, norm) = numeric.q[k0..]
        .iter()
        .zip(&exact[k0..])
        .fold((0.0, 0.0), |(d, n), (a, b)| (d + (a - b) * (a - b), n + b * b));
    Ok((diff / norm).sqrt())
}

fn cross_solver_check(seeds: u64, law: SpectralLaw) -> Check {
    let start = Instant::now();
    let name = format!("time-domain vs stationary RMS, {seeds} seeds");
    let params = dimensionless(1e-2);
    let worst = (0..seeds).try_fold(0.0_f64, |w, s| cross_solver_deviation(&params, s, law).map(|d| w.max(d)));
    match worst {
        Ok(w) => Check::new("3", name, 0.0, w, "< 0.01", w < 0.01).timed(start),
        Err(e) => Check::failed("3", name, &e),
    }
}

fn heisenberg_checks() -> Vec<Check> {
    let start = Instant::now();
    let params = dimensionless(1e-2);
    let rows = energy_flow_table(0..=50, &params);
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let identity = rows.iter().map(|r| rel(r.total_full, r.total_compact)).fold(0.0, f64::max);
    let closed = rows
        .iter()
        .map(|r| rel(r.total_compact, -(r.state_index as f64) * params.epsilon()))
        .fold(0.0, f64::max);
    let ground = energy_flow_full(0, &params, 2).expect("n_max = n + 2");
    let balanced = ground.total_full == 0.0
        && ground.total_compact == 0.0
        && ground.vacuum_up == -ground.self_reaction
        && ground.vacuum_down == 0.0;
    vec![
        Check::new("4", "full vs compact energy flow, n = 0..50", 0.0, identity, "rel 1e-12", identity <= 1e-12).timed(start),
        Check::new(
            "4",
            "ground state: vacuum_up = -self_reaction, total 0",
            params.epsilon() / 2.0,
            ground.vacuum_up,
            "exact balance, rel 1e-12",
            balanced && rel(ground.vacuum_up, params.epsilon() / 2.0) <= 1e-12,
        ),
        Check::new("4", "total = -n epsilon hbar omega0^2, n = 0..50", 0.0, closed, "rel 1e-12", closed <= 1e-12),
    ]
}

/// Schrodinger residual of the displaced Gaussian at one instant of a
/// stationary trajectory, with time step `dt` and space step `dx`.
pub fn residual_at(modes: &crate::vacuum_field::FieldModeSet, t: f64, dt: f64, dx: f64, params: &ModelParams) -> Result<f64> {
    let times = vec![t - dt, t, t + dt];
    let states = times
        .iter()
        .map(|&s| stationary_state_at(modes, s, params))
        .collect::<Result<Vec<_>>>()?;
    let q: Vec<f64> = states.iter().map(|s| s.q).collect();
    let p: Vec<f64> = states.iter().map(|s| s.p).collect();
    let shifts: Vec<f64> = states.iter().map(|s| s.momentum_shift).collect();
    let g = phase_accumulator(&times, &q, &p, params);
    let trajectory = Trajectory {
        times,
        q,
        p,
        g,
        transient_end: 0,
    };
    Ok(schrodinger_residual(&trajectory, &shifts, 1, dx, params))
}

fn residual_order_check(law: SpectralLaw) -> Check {
    let start = Instant::now();
    let name = "Schrodinger residual order, dt and dx halved twice";
    let params = dimensionless(1e-2);
    let run = || -> Result<f64> {
        let modes = sample_modes_with(&params, DEFAULT_CUTOFF, required_modes(&params, DEFAULT_CUTOFF), 1, law)?;
        let r = [1.0, 0.5, 0.25]
            .iter()
            .map(|h| residual_at(&modes, 37.3, 0.04 * h, 0.08 * h, &params))
            .collect::<Result<Vec<_>>>()?;
        Ok((r[0] / r[1]).log2().min((r[1] / r[2]).log2()))
    };
    match run() {
        Ok(order) => Check::new("5", name, 2.0, order, ">= 1.8", order >= 1.8).timed(start),
        Err(e) => Check::failed("5", name, &e),
    }
}

fn moment_checks() -> Vec<Check> {
    let start = Instant::now();
    let params = dimensionless(1e-2);
    let (mut moment_err, mut norm_err) = (0.0_f64, 0.0_f64);
    for center in [0.0, 0.3, 2.7] {
        let sample = WavepacketSample::new(center, 0.4, -0.2, 1.1, &params);
        let numeric = numeric_moments(&sample, &params);
        moment_err = moment_err.max((numeric.second - position_second_moment(&sample, &params)).abs());
        norm_err = norm_err.max((numeric.norm - 1.0).abs());
    }
    vec![
        Check::new("6", "closed-form xbar^2 vs quadrature, q_c in {0, 0.3, 2.7}", 0.0, moment_err, "abs 1e-8", moment_err <= 1e-8)
            .timed(start),
        Check::new("6", "packet normalization", 0.0, norm_err, "abs 1e-8", norm_err <= 1e-8),
    ]
}

fn phase_check() -> Check {
    let start = Instant::now();
    let name = "random-phase orthogonality, R = 10^4, 32 modes";
    match phase_orthogonality_check(10_000, 32, 0) {
        Ok(c) => Check::new("7", name, 0.0, c.max_deviation, "< 0.03", c.max_deviation < 0.03).timed(start),
        Err(e) => Check::failed("7", name, &e),
    }
}

/// Runs the same small ensemble and trajectory twice through the command
/// line layer (the second ensemble on two worker threads) and counts
/// artifacts whose bytes differ.
fn determinism_check(threads: Option<usize>) -> Check {
    let start = Instant::now();
    let name = "identical configs give byte-identical artifacts";
    let run = || -> Result<f64> {
        let dir = tempfile::tempdir().map_err(|source| crate::Error::Io {
            path: std::env::temp_dir(),
            source,
        })?;
        let many = threads.unwrap_or(2).max(2).to_string();
        let mut differing = 0;
        for (kind, extra) in [
            ("ensemble", vec!["--realizations", "4", "--t-total", "150", "--format", "json"]),
            ("trajectory", vec!["--solver", "time-domain", "--t-total", "60", "--format", "csv"]),
        ] {
            let mut outputs = Vec::new();
            for (i, n) in ["1", many.as_str()].into_iter().enumerate() {
                let path = dir.path().join(format!("{kind}-{i}"));
                let mut args = vec!["sedosc", kind, "--epsilon", "1e-2", "--seed", "5"];
                args.extend(&extra);
                if kind == "ensemble" {
                    args.extend(["--threads", n]);
                }
                args.extend(["--output", path.to_str().expect("temp paths are UTF-8")]);
                let invocation = crate::cli::Invocation::from_args(args).map_err(|e| crate::Error::Config(e.to_string()))?;
                crate::cli::dispatch(&invocation)?;
                outputs.push(std::fs::read(&path).map_err(|source| crate::Error::Io { path, source })?);
            }
            differing += usize::from(outputs[0] != outputs[1]);
        }
        Ok(differing as f64)
    };
    match run() {
        Ok(d) => Check::new("8", name, 0.0, d, "byte-identical", d == 0.0).timed(start),
        Err(e) => Check::failed("8", name, &e),
    }
}
