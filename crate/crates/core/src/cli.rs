//! Command-line surface.
//!
//! Settings come from built-in defaults, then an optional `--config` file
//! (flat JSON with kebab-case keys, or any artifact this tool wrote), then
//! flags. The fully resolved [`RunConfig`] is embedded in every artifact, so
//! any artifact can be passed back as `--config` to reproduce it.
//!
//! Exit status: 0 on success, 2 on a validation error (nothing is computed),
//! 1 on a runtime error or a failed verification.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate_time_domain, max_step, stationary_state_at, stationary_trajectory, transient_length, variance_integral,
    variance_integral_to, TimeGrid, Trajectory,
};
use crate::ensemble::{run_ensemble, run_ensemble_on, EnsembleConfig, Solver};
use crate::error::{Error, Result};
use crate::heisenberg::energy_flow_table;
use crate::model::ModelParams;
use crate::output::{csv_document, embedded_config, json_document, Format, Sink};
use crate::vacuum_field::{check_grid, required_modes, sample_modes_with, SpectralLaw, DEFAULT_CUTOFF};
use crate::verify::{all_passed, render_table, run_suite, SuiteOptions};
use crate::wavepacket::{DensitySnapshot, WavepacketSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// Directory for artifacts when `--output` is not given. Without it,
/// artifacts go to standard output.
pub const OUTPUT_DIR_VAR: &str = "SEDOSC_OUTPUT_DIR";

const DEFAULT_EPSILON: f64 = 1e-2;
const DEFAULT_REL_TOL: f64 = 1e-10;
const DEFAULT_N_RANGE: &str = "0..10";
const DENSITY_POINTS: usize = 401;

#[derive(Debug, Parser)]
#[command(name = "sedosc", version, about = "Oscillator in a classical zero-point field: quadrature, trajectories, ensembles, energy flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Continuum variance of the packet centre by adaptive quadrature.
    Quadrature(QuadratureArgs),
    /// One realization: q, p and phase on a time grid.
    Trajectory(TrajectoryArgs),
    /// Monte Carlo average over random-phase realizations.
    Ensemble(EnsembleArgs),
    /// Energy-flow decomposition for a range of oscillator levels.
    Heisenberg(HeisenbergArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// JSON config file, or an artifact whose embedded config to reuse.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact path (default: $SEDOSC_OUTPUT_DIR/<command>.<ext>, else stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct Coupling {
    /// Dimensionless damping 2e^2 omega0 / (3 m c^3), in [0, 0.1).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Highest mode frequency, in units of omega0.
    #[arg(long)]
    omega_cut: Option<f64>,
    /// Number of field modes (default: the fewest that resolve the linewidth).
    #[arg(long)]
    n_modes: Option<usize>,
    /// Phase seed (ensembles use seed + realization index).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct Timing {
    /// Time step (at most a fortieth of the period).
    #[arg(long)]
    dt: Option<f64>,
    /// Trajectory length, transient included.
    #[arg(long)]
    t_total: Option<f64>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
}

#[derive(Debug, Clone, Args)]
pub struct QuadratureArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    coupling: Coupling,
    /// Also report the integral truncated here, in units of omega0.
    #[arg(long)]
    omega_cut: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    coupling: Coupling,
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    timing: Timing,
    /// Initial displacement (time-domain solver).
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<f64>,
    /// Initial momentum (time-domain solver).
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<f64>,
    /// Also write the mode set as JSON.
    #[arg(long)]
    modes_out: Option<PathBuf>,
    /// Also write a density snapshot as CSV.
    #[arg(long)]
    density_out: Option<PathBuf>,
    /// Snapshot time (default: end of the trajectory).
    #[arg(long)]
    density_time: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    coupling: Coupling,
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    timing: Timing,
    #[arg(long)]
    realizations: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write per-realization time averages as CSV.
    #[arg(long)]
    per_realization: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HeisenbergArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    coupling: Coupling,
    /// Inclusive level range `a..b`, `a..=b` or a single level.
    #[arg(long)]
    n_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    shared: Shared,
    /// Skip the long ensemble run.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, hide = true)]
    inject_quadratic_density: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Quadrature,
    Trajectory,
    Ensemble,
    Heisenberg,
    Verify,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Quadrature => "quadrature",
            CommandKind::Trajectory => "trajectory",
            CommandKind::Ensemble => "ensemble",
            CommandKind::Heisenberg => "heisenberg",
            CommandKind::Verify => "verify",
        }
    }
}

/// Settings read from a config file or flags, before defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Overrides {
    command: Option<CommandKind>,
    epsilon: Option<f64>,
    omega_cut: Option<f64>,
    n_modes: Option<usize>,
    seed: Option<u64>,
    dt: Option<f64>,
    t_total: Option<f64>,
    solver: Option<Solver>,
    realizations: Option<usize>,
    n_range: Option<String>,
    rel_tol: Option<f64>,
    q0: Option<f64>,
    p0: Option<f64>,
    density_time: Option<f64>,
    quick: Option<bool>,
    inject_quadratic_density: Option<bool>,
    format: Option<Format>,
    // echoed for the record; recomputed on every run
    #[allow(dead_code)]
    derived_seeds: Option<serde::de::IgnoredAny>,
}

impl Overrides {
    /// Fields set here win over `base`.
    fn over(self, base: Overrides) -> Overrides {
        Overrides {
            command: self.command.or(base.command),
            epsilon: self.epsilon.or(base.epsilon),
            omega_cut: self.omega_cut.or(base.omega_cut),
            n_modes: self.n_modes.or(base.n_modes),
            seed: self.seed.or(base.seed),
            dt: self.dt.or(base.dt),
            t_total: self.t_total.or(base.t_total),
            solver: self.solver.or(base.solver),
            realizations: self.realizations.or(base.realizations),
            n_range: self.n_range.or(base.n_range),
            rel_tol: self.rel_tol.or(base.rel_tol),
            q0: self.q0.or(base.q0),
            p0: self.p0.or(base.p0),
            density_time: self.density_time.or(base.density_time),
            quick: self.quick.or(base.quick),
            inject_quadratic_density: self.inject_quadratic_density.or(base.inject_quadratic_density),
            format: self.format.or(base.format),
            derived_seeds: None,
        }
    }
}

/// Fully resolved settings of one run. Only the fields the command uses are
/// present; keys match the flag names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_cut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<Solver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quick: Option<bool>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inject_quadratic_density: bool,
    pub format: Format,
    /// Seeds actually used, one per realization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived_seeds: Option<Vec<u64>>,
}

/// Where the side artifacts of a run go.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extras {
    pub modes_out: Option<PathBuf>,
    pub density_out: Option<PathBuf>,
    pub per_realization: Option<PathBuf>,
}

/// A parsed and validated command line, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: RunConfig,
    pub sink: Sink,
    /// Worker threads for ensembles; `None` uses the global pool.
    pub threads: Option<usize>,
    pub extras: Extras,
}

/// Why a command line did not produce an [`Invocation`].
#[derive(Debug)]
pub enum ParseFailure {
    /// Help, version or a usage error, already formatted by clap.
    Usage(clap::Error),
    Invalid(Error),
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseFailure::Usage(e) => write!(f, "{e}"),
            ParseFailure::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl Invocation {
    pub fn from_args<I, T>(args: I) -> std::result::Result<Self, ParseFailure>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(ParseFailure::Usage)?;
        Self::from_cli(cli).map_err(ParseFailure::Invalid)
    }

    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (kind, shared, flags, threads, extras) = flatten(cli.command);
        let file = match &shared.config {
            Some(path) => load_overrides(path)?,
            None => Overrides::default(),
        };
        if let Some(other) = file.command.filter(|c| *c != kind) {
            return Err(Error::Config(format!(
                "config file is for `{}`, not `{}`",
                other.name(),
                kind.name()
            )));
        }
        let config = resolve(kind, flags.over(file))?;
        if threads == Some(0) {
            return Err(Error::invalid("threads", 0, "threads >= 1"));
        }
        let sink = match shared.output {
            Some(path) => Sink::File(path),
            None => match std::env::var_os(OUTPUT_DIR_VAR) {
                Some(dir) if !dir.is_empty() => {
                    Sink::File(PathBuf::from(dir).join(format!("{}.{}", kind.name(), config.format.extension())))
                }
                _ => Sink::Stdout,
            },
        };
        Ok(Self {
            config,
            sink,
            threads,
            extras,
        })
    }
}

fn coupling(c: Coupling) -> Overrides {
    Overrides {
        epsilon: c.epsilon,
        ..Overrides::default()
    }
}

fn grid_timing(g: Grid, t: Timing) -> Overrides {
    Overrides {
        omega_cut: g.omega_cut,
        n_modes: g.n_modes,
        seed: g.seed,
        dt: t.dt,
        t_total: t.t_total,
        solver: t.solver,
        ..Overrides::default()
    }
}

fn flatten(command: Command) -> (CommandKind, Shared, Overrides, Option<usize>, Extras) {
    match command {
        Command::Quadrature(a) => {
            let flags = Overrides {
                omega_cut: a.omega_cut,
                rel_tol: a.rel_tol,
                format: a.shared.format,
                ..coupling(a.coupling)
            };
            (CommandKind::Quadrature, a.shared, flags, None, Extras::default())
        }
        Command::Trajectory(a) => {
            let flags = Overrides {
                q0: a.q0,
                p0: a.p0,
                density_time: a.density_time,
                format: a.shared.format,
                ..grid_timing(a.grid, a.timing)
            }
            .over(coupling(a.coupling));
            let extras = Extras {
                modes_out: a.modes_out,
                density_out: a.density_out,
                per_realization: None,
            };
            (CommandKind::Trajectory, a.shared, flags, None, extras)
        }
        Command::Ensemble(a) => {
            let flags = Overrides {
                realizations: a.realizations,
                format: a.shared.format,
                ..grid_timing(a.grid, a.timing)
            }
            .over(coupling(a.coupling));
            let extras = Extras {
                per_realization: a.per_realization,
                ..Extras::default()
            };
            (CommandKind::Ensemble, a.shared, flags, a.threads, extras)
        }
        Command::Heisenberg(a) => {
            let flags = Overrides {
                n_range: a.n_range,
                format: a.shared.format,
                ..coupling(a.coupling)
            };
            (CommandKind::Heisenberg, a.shared, flags, None, Extras::default())
        }
        Command::Verify(a) => {
            let flags = Overrides {
                quick: a.quick.then_some(true),
                inject_quadratic_density: a.inject_quadratic_density.then_some(true),
                format: a.shared.format,
                ..Overrides::default()
            };
            (CommandKind::Verify, a.shared, flags, a.threads, Extras::default())
        }
    }
}

fn load_overrides(path: &PathBuf) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", path.display()));
    let value = embedded_config(&text).map_err(|e| bad(&e))?;
    serde_json::from_value(value).map_err(|e| bad(&e))
}

/// Parses an inclusive level range: `a..b`, `a..=b` or `n`.
pub fn parse_n_range(text: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::invalid("n-range", text, "`a..b` with a <= b (inclusive), or a single level");
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = parse(text)?;
            (n, n)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn resolve(kind: CommandKind, o: Overrides) -> Result<RunConfig> {
    let format_default = match kind {
        CommandKind::Trajectory => Format::Csv,
        _ => Format::Json,
    };
    let mut config = RunConfig {
        command: kind,
        epsilon: None,
        omega_cut: None,
        n_modes: None,
        seed: None,
        dt: None,
        t_total: None,
        solver: None,
        realizations: None,
        n_range: None,
        rel_tol: None,
        q0: None,
        p0: None,
        density_time: None,
        quick: None,
        inject_quadratic_density: false,
        format: o.format.unwrap_or(format_default),
        derived_seeds: None,
    };
    if kind == CommandKind::Verify {
        config.quick = Some(o.quick.unwrap_or(false));
        config.inject_quadratic_density = o.inject_quadratic_density.unwrap_or(false);
        return Ok(config);
    }

    let epsilon = o.epsilon.unwrap_or(DEFAULT_EPSILON);
    let params = ModelParams::dimensionless(epsilon)?;
    config.epsilon = Some(epsilon);
    match kind {
        CommandKind::Quadrature => {
            let rel_tol = o.rel_tol.unwrap_or(DEFAULT_REL_TOL);
            let omega_cut = o.omega_cut.unwrap_or(DEFAULT_CUTOFF);
            if epsilon <= 0.0 {
                return Err(Error::EpsilonOutOfRange {
                    epsilon,
                    bound: "epsilon > 0 (the undamped variance diverges)",
                });
            }
            if !(rel_tol >= 1e-10 && rel_tol < 1.0) {
                return Err(Error::invalid("rel-tol", rel_tol, "1e-10 <= rel-tol < 1"));
            }
            if !(omega_cut.is_finite() && omega_cut > 0.0) {
                return Err(Error::invalid("omega-cut", omega_cut, "a finite value > 0"));
            }
            config.rel_tol = Some(rel_tol);
            config.omega_cut = Some(omega_cut);
        }
        CommandKind::Trajectory => {
            let solver = o.solver.unwrap_or_default();
            let omega_cut = o.omega_cut.unwrap_or(DEFAULT_CUTOFF);
            let n_modes = match o.n_modes {
                Some(n) => n,
                None if epsilon > 0.0 && omega_cut.is_finite() && omega_cut > 0.0 => required_modes(&params, omega_cut),
                None => 1000,
            };
            check_grid(&params, omega_cut, n_modes)?;
            let dt = o.dt.unwrap_or_else(|| max_step(&params));
            let bound = max_step(&params);
            if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
                return Err(Error::StepTooLarge { dt, max: bound });
            }
            if solver == Solver::Stationary && epsilon <= 0.0 {
                return Err(Error::EpsilonOutOfRange {
                    epsilon,
                    bound: "epsilon > 0 for the stationary solver (no damping, no stationary state)",
                });
            }
            let window = if epsilon > 0.0 { 10.0 * params.decay_time() } else { 100.0 * std::f64::consts::TAU };
            let t_total = o.t_total.unwrap_or(match solver {
                Solver::Stationary => window,
                Solver::TimeDomain => transient_length(&params) + window,
            });
            if !(t_total.is_finite() && t_total >= dt) {
                return Err(Error::invalid("t-total", t_total, format!("finite and >= dt = {dt}")));
            }
            if let Some(t) = o.density_time {
                if !(0.0..=t_total).contains(&t) {
                    return Err(Error::invalid("density-time", t, format!("0 <= density-time <= t-total = {t_total}")));
                }
            }
            if solver == Solver::TimeDomain {
                let (q0, p0) = (o.q0.unwrap_or(0.0), o.p0.unwrap_or(0.0));
                if !(q0.is_finite() && p0.is_finite()) {
                    return Err(Error::invalid("q0/p0", format!("({q0}, {p0})"), "finite initial state"));
                }
                config.q0 = Some(q0);
                config.p0 = Some(p0);
            }
            let seed = o.seed.unwrap_or(0);
            config.omega_cut = Some(omega_cut);
            config.n_modes = Some(n_modes);
            config.seed = Some(seed);
            config.dt = Some(dt);
            config.t_total = Some(t_total);
            config.solver = Some(solver);
            config.density_time = o.density_time;
            config.derived_seeds = Some(vec![seed]);
        }
        CommandKind::Ensemble => {
            let solver = o.solver.unwrap_or_default();
            let defaults = EnsembleConfig::at_bounds(epsilon, solver)?;
            let omega_cut = o.omega_cut.unwrap_or(defaults.omega_cut);
            let n_modes = o.n_modes.unwrap_or_else(|| {
                if omega_cut.is_finite() && omega_cut > 0.0 {
                    required_modes(&params, omega_cut)
                } else {
                    defaults.n_modes
                }
            });
            let ensemble = EnsembleConfig {
                epsilon,
                omega_cut,
                n_modes,
                dt: o.dt.unwrap_or(defaults.dt),
                t_total: o.t_total.unwrap_or(defaults.t_total),
                realizations: o.realizations.unwrap_or(defaults.realizations),
                base_seed: o.seed.unwrap_or(defaults.base_seed),
                solver,
            };
            ensemble.validate()?;
            config.omega_cut = Some(ensemble.omega_cut);
            config.n_modes = Some(ensemble.n_modes);
            config.seed = Some(ensemble.base_seed);
            config.dt = Some(ensemble.dt);
            config.t_total = Some(ensemble.t_total);
            config.solver = Some(solver);
            config.realizations = Some(ensemble.realizations);
            config.derived_seeds = Some((0..ensemble.realizations).map(|r| ensemble.seed(r)).collect());
        }
        CommandKind::Heisenberg => {
            let text = o.n_range.unwrap_or_else(|| DEFAULT_N_RANGE.to_string());
            parse_n_range(&text)?;
            config.n_range = Some(text);
        }
        CommandKind::Verify => unreachable!("handled above"),
    }
    Ok(config)
}

impl RunConfig {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::dimensionless(self.epsilon.unwrap_or(DEFAULT_EPSILON))
    }

    fn law(&self) -> SpectralLaw {
        if self.inject_quadratic_density {
            SpectralLaw::Quadratic
        } else {
            SpectralLaw::ZeroPoint
        }
    }

    /// The ensemble settings of an `ensemble` run.
    pub fn ensemble(&self) -> Option<EnsembleConfig> {
        Some(EnsembleConfig {
            epsilon: self.epsilon?,
            omega_cut: self.omega_cut?,
            n_modes: self.n_modes?,
            dt: self.dt?,
            t_total: self.t_total?,
            realizations: self.realizations?,
            base_seed: self.seed?,
            solver: self.solver?,
        })
    }
}

/// Outcome of a successful dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    ChecksFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Done => EXIT_OK,
            Status::ChecksFailed => EXIT_RUNTIME,
        }
    }
}

pub fn exit_code(error: &Error) -> i32 {
    if error.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Runs the experiment named by `invocation` and writes its artifacts.
pub fn dispatch(invocation: &Invocation) -> Result<Status> {
    let config = &invocation.config;
    match config.command {
        CommandKind::Quadrature => run_quadrature(invocation),
        CommandKind::Trajectory => run_trajectory(invocation),
        CommandKind::Ensemble => run_ensemble_command(invocation),
        CommandKind::Heisenberg => run_heisenberg(invocation),
        CommandKind::Verify => run_verify(invocation),
    }
}

#[derive(Debug, Serialize)]
struct QuadratureReport {
    value: f64,
    abs_error: f64,
    rel_err: f64,
    narrow_resonance: f64,
    evaluations: usize,
    /// The same integral truncated at `omega-cut`.
    truncated_value: f64,
}

fn run_quadrature(inv: &Invocation) -> Result<Status> {
    let config = &inv.config;
    let params = config.params()?;
    let rel_tol = config.rel_tol.unwrap_or(DEFAULT_REL_TOL);
    let full = variance_integral(&params, rel_tol)?;
    let cut = variance_integral_to(&params, config.omega_cut.unwrap_or(DEFAULT_CUTOFF) * params.omega0(), rel_tol)?;
    let narrow = params.ground_state_variance();
    let report = QuadratureReport {
        value: full.value,
        abs_error: full.abs_error,
        rel_err: (full.value / narrow - 1.0).abs(),
        narrow_resonance: narrow,
        evaluations: full.evaluations,
        truncated_value: cut.value,
    };
    let bytes = match config.format {
        Format::Json => json_document(config, &report)?,
        Format::Csv => csv_document(config, |w| {
            use std::io::Write;
            writeln!(w, "value,abs_error,rel_err,narrow_resonance,evaluations,truncated_value")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                report.value, report.abs_error, report.rel_err, report.narrow_resonance, report.evaluations, report.truncated_value
            )
        })?,
    };
    inv.sink.write(&bytes)?;
    Ok(Status::Done)
}

/// `(e/c) A_x` at sample `k`. For the time-domain solver it follows from
/// `dp/dt = -m omega0^2 q - d/dt[(e/c) A_x]` integrated along the samples,
/// anchored to the stationary value at `t = 0`.
fn momentum_shift(trajectory: &Trajectory, k: usize, config: &RunConfig, modes: &crate::vacuum_field::FieldModeSet, params: &ModelParams) -> Result<f64> {
    if config.solver == Some(Solver::Stationary) {
        return Ok(stationary_state_at(modes, trajectory.times[k], params)?.momentum_shift);
    }
    let spring = params.mass() * params.omega0().powi(2);
    let dt = trajectory.dt();
    let impulse: f64 = (1..=k).map(|j| 0.5 * dt * spring * (trajectory.q[j - 1] + trajectory.q[j])).sum();
    let start = stationary_state_at(modes, 0.0, params)?.momentum_shift;
    Ok(start - (trajectory.p[k] - trajectory.p[0]) - impulse)
}

fn run_trajectory(inv: &Invocation) -> Result<Status> {
    let config = &inv.config;
    let params = config.params()?;
    let (omega_cut, n_modes, seed, dt, t_total) = (
        config.omega_cut.unwrap_or(DEFAULT_CUTOFF),
        config.n_modes.unwrap_or(1),
        config.seed.unwrap_or(0),
        config.dt.unwrap_or_else(|| max_step(&params)),
        config.t_total.unwrap_or(0.0),
    );
    let modes = sample_modes_with(&params, omega_cut, n_modes, seed, config.law())?;
    let trajectory = match config.solver.unwrap_or_default() {
        Solver::Stationary => stationary_trajectory(&modes, TimeGrid::spanning(t_total, dt)?, &params)?,
        Solver::TimeDomain => integrate_time_domain(
            &modes,
            t_total,
            dt,
            (config.q0.unwrap_or(0.0), config.p0.unwrap_or(0.0)),
            &params,
        )?,
    };
    let bytes = match config.format {
        Format::Csv => csv_document(config, |w| trajectory.write_csv(w))?,
        Format::Json => json_document(config, &trajectory)?,
    };
    inv.sink.write(&bytes)?;

    if let Some(path) = &inv.extras.modes_out {
        let mut bytes = serde_json::to_vec_pretty(&modes)?;
        bytes.push(b'\n');
        crate::output::write_atomic(path, &bytes)?;
    }
    if let Some(path) = &inv.extras.density_out {
        let t = config.density_time.unwrap_or(f64::INFINITY);
        let k = ((t / dt).round() as usize).min(trajectory.len() - 1);
        let shift = momentum_shift(&trajectory, k, config, &modes, &params)?;
        let sample = WavepacketSample::new(trajectory.q[k], trajectory.p[k], shift, trajectory.g[k], &params);
        let snapshot = DensitySnapshot::new(&sample, &params, DENSITY_POINTS);
        let bytes = csv_document(config, |w| snapshot.write_csv(w))?;
        crate::output::write_atomic(path, &bytes)?;
    }
    Ok(Status::Done)
}

fn run_ensemble_command(inv: &Invocation) -> Result<Status> {
    let config = &inv.config;
    let ensemble = config.ensemble().expect("resolved ensemble config is complete");
    let stats = match inv.threads {
        Some(n) => run_ensemble_on(&ensemble, n, config.law())?,
        None if config.law() == SpectralLaw::ZeroPoint => run_ensemble(&ensemble)?,
        None => crate::ensemble::run_ensemble_with(&ensemble, config.law())?,
    };
    eprintln!(
        "ensemble: {} realizations in {:.2} s",
        stats.realizations.len(),
        stats.wall_time_s
    );
    let bytes = match config.format {
        Format::Json => json_document(config, &stats)?,
        Format::Csv => csv_document(config, |w| {
            use std::io::Write;
            writeln!(w, "quantity,value,std_error,effective_samples")?;
            for (name, m) in [
                ("mean_qc", &stats.mean_qc),
                ("mean_qc_sq", &stats.mean_qc_sq),
                ("mean_xbar_sq", &stats.mean_xbar_sq),
            ] {
                writeln!(w, "{name},{},{},{}", m.value, m.std_error, m.effective_samples)?;
            }
            writeln!(w, "ground_state_variance,{},0,inf", stats.ground_state_variance)
        })?,
    };
    inv.sink.write(&bytes)?;
    if let Some(path) = &inv.extras.per_realization {
        let bytes = csv_document(config, |w| stats.write_realizations_csv(w))?;
        crate::output::write_atomic(path, &bytes)?;
    }
    Ok(Status::Done)
}

fn run_heisenberg(inv: &Invocation) -> Result<Status> {
    let config = &inv.config;
    let params = config.params()?;
    let range = parse_n_range(config.n_range.as_deref().unwrap_or(DEFAULT_N_RANGE))?;
    let rows = energy_flow_table(range, &params);
    let bytes = match config.format {
        Format::Json => json_document(config, &rows)?,
        Format::Csv => csv_document(config, |w| {
            use std::io::Write;
            writeln!(w, "state_index,self_reaction,vacuum_up,vacuum_down,total_full,total_compact")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.state_index, r.self_reaction, r.vacuum_up, r.vacuum_down, r.total_full, r.total_compact
                )?;
            }
            Ok(())
        })?,
    };
    inv.sink.write(&bytes)?;
    Ok(Status::Done)
}

fn run_verify(inv: &Invocation) -> Result<Status> {
    let config = &inv.config;
    let options = SuiteOptions {
        quick: config.quick.unwrap_or(false),
        threads: inv.threads,
        law: config.law(),
    };
    let checks = run_suite(&options);
    print!("{}", render_table(&checks));
    let passed = all_passed(&checks);
    println!("{}", if passed { "all checks passed" } else { "some checks FAILED" });
    if let Sink::File(_) = inv.sink {
        let bytes = match config.format {
            Format::Json => json_document(config, &checks)?,
            Format::Csv => csv_document(config, |w| {
                use std::io::Write;
                writeln!(w, "criterion,name,expected,actual,tolerance,passed,skipped")?;
                for c in &checks {
                    writeln!(
                        w,
                        "{},\"{}\",{},{},\"{}\",{},{}",
                        c.criterion, c.name, c.expected, c.actual, c.tolerance, c.passed, c.skipped
                    )?;
                }
                Ok(())
            })?,
        };
        inv.sink.write(&bytes)?;
    }
    Ok(if passed { Status::Done } else { Status::ChecksFailed })
}

/// Parses `args`, runs, reports errors on stderr and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let invocation = match Invocation::from_args(args) {
        Ok(inv) => inv,
        Err(ParseFailure::Usage(e)) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
        Err(ParseFailure::Invalid(e)) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match dispatch(&invocation) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
