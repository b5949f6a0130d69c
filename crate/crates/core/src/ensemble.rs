//! Monte Carlo averaging over random-phase realizations of the field.
//!
//! Each realization samples its own phases, solves for `q_c(t)`, drops the
//! transient and time-averages `q_c` and `q_c^2`. Realizations are combined
//! as independent draws; standard errors come from the scatter between
//! realizations, which already carries the within-trajectory correlations.
//! The mean square packet position then follows as
//! `<x^2> = hbar/(2 m omega0) + <q_c^2>`.

use std::io::{self, Write};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    first_two_moments, integrate_time_domain, max_step, stationary_displacement, transient_length, TimeGrid,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::vacuum_field::{check_grid, draw_phases, required_modes, sample_modes_with, SpectralLaw, DEFAULT_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Stationary,
    TimeDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub epsilon: f64,
    pub omega_cut: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub t_total: f64,
    pub realizations: usize,
    pub base_seed: u64,
    pub solver: Solver,
}

impl EnsembleConfig {
    /// Settings at the resolution bounds: the coarsest resolving frequency
    /// grid, a fortieth-period step, 64 realizations and a window of
    /// `50 / epsilon` after the transient.
    pub fn at_bounds(epsilon: f64, solver: Solver) -> Result<Self> {
        let params = ModelParams::dimensionless(epsilon)?;
        if epsilon <= 0.0 {
            return Err(Error::EpsilonOutOfRange {
                epsilon,
                bound: "epsilon > 0 (an undamped oscillator has no stationary state)",
            });
        }
        let window = 50.0 * params.decay_time();
        let t_total = match solver {
            Solver::Stationary => window,
            Solver::TimeDomain => window + transient_length(&params),
        };
        Ok(Self {
            epsilon,
            omega_cut: DEFAULT_CUTOFF,
            n_modes: required_modes(&params, DEFAULT_CUTOFF),
            dt: max_step(&params),
            t_total,
            realizations: 64,
            base_seed: 0,
            solver,
        })
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::dimensionless(self.epsilon)
    }

    /// Seed of realization `index`.
    pub fn seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    /// Samples discarded at the start of each trajectory.
    pub fn transient_time(&self) -> Result<f64> {
        let params = self.params()?;
        Ok(match self.solver {
            Solver::Stationary => 0.0,
            Solver::TimeDomain => transient_length(&params),
        })
    }

    /// Checks every precondition before any work starts.
    pub fn validate(&self) -> Result<ModelParams> {
        let params = self.params()?;
        if self.epsilon <= 0.0 {
            return Err(Error::EpsilonOutOfRange {
                epsilon: self.epsilon,
                bound: "epsilon > 0 (an undamped oscillator has no stationary state)",
            });
        }
        if self.realizations < 2 {
            return Err(Error::invalid("realizations", self.realizations, "realizations >= 2"));
        }
        check_grid(&params, self.omega_cut, self.n_modes)?;
        let bound = max_step(&params);
        if !(self.dt > 0.0 && self.dt <= bound * (1.0 + 1e-12)) {
            return Err(Error::StepTooLarge { dt: self.dt, max: bound });
        }
        let transient = self.transient_time()?;
        if !(self.t_total.is_finite() && self.t_total >= transient + self.dt) {
            return Err(Error::invalid(
                "t_total",
                self.t_total,
                format!("t_total > transient length 5/(epsilon omega0) = {transient}"),
            ));
        }
        Ok(params)
    }
}

/// Time averages of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub seed: u64,
    pub time_avg_q: f64,
    pub time_avg_q_sq: f64,
    pub transient_length: f64,
}

/// Running mean and sum of squared deviations; merges exactly as if all
/// values had been pushed in sequence (up to rounding).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        Accumulator {
            count: self.count + other.count,
            mean: self.mean + delta * other.count as f64 / n,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / n,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub std_error: f64,
    /// Independent samples behind the estimate: realizations times the
    /// number of correlation times `2/(epsilon omega0)` per averaging window
    /// (at least one per realization).
    pub effective_samples: f64,
}

impl Moment {
    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub mean_qc: Moment,
    pub mean_qc_sq: Moment,
    pub mean_xbar_sq: Moment,
    pub ground_state_variance: f64,
    #[serde(skip)]
    pub realizations: Vec<RealizationSummary>,
    /// Excluded from serialized reports so identical configurations give
    /// identical artifacts.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl EnsembleStats {
    /// `seed,time_avg_q,time_avg_q_sq,transient_length` rows.
    pub fn write_realizations_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "seed,time_avg_q,time_avg_q_sq,transient_length")?;
        for r in &self.realizations {
            writeln!(out, "{},{},{},{}", r.seed, r.time_avg_q, r.time_avg_q_sq, r.transient_length)?;
        }
        Ok(())
    }
}

fn run_realization(config: &EnsembleConfig, params: &ModelParams, index: usize, law: SpectralLaw) -> Result<RealizationSummary> {
    let seed = config.seed(index);
    let annotate = |e: Error| Error::Realization {
        seed,
        source: Box::new(e),
    };
    let modes = sample_modes_with(params, config.omega_cut, config.n_modes, seed, law).map_err(annotate)?;
    let (q, transient) = match config.solver {
        Solver::Stationary => {
            let grid = TimeGrid::spanning(config.t_total, config.dt).map_err(annotate)?;
            (stationary_displacement(&modes, grid, params).map_err(annotate)?, 0.0)
        }
        Solver::TimeDomain => {
            let traj = integrate_time_domain(&modes, config.t_total, config.dt, (0.0, 0.0), params).map_err(annotate)?;
            let start = traj.transient_end;
            let t = traj.times.get(start).copied().unwrap_or(config.t_total);
            (traj.q[start..].to_vec(), t)
        }
    };
    let (m1, m2) = first_two_moments(&q);
    Ok(RealizationSummary {
        seed,
        time_avg_q: m1,
        time_avg_q_sq: m2,
        transient_length: transient,
    })
}

/// Combines per-realization summaries in index order.
pub fn aggregate(config: &EnsembleConfig, params: &ModelParams, summaries: Vec<RealizationSummary>) -> EnsembleStats {
    let mut q = Accumulator::default();
    let mut q2 = Accumulator::default();
    for s in &summaries {
        q.push(s.time_avg_q);
        q2.push(s.time_avg_q_sq);
    }
    let window = config.t_total - summaries.first().map_or(0.0, |s| s.transient_length);
    let correlation_time = 2.0 * params.decay_time();
    let per_realization = (window / correlation_time).max(1.0);
    let effective_samples = summaries.len() as f64 * per_realization;
    let moment = |acc: &Accumulator| Moment {
        value: acc.mean(),
        std_error: acc.std_error(),
        effective_samples,
    };
    let mean_qc_sq = moment(&q2);
    let ground = params.ground_state_variance();
    EnsembleStats {
        config: config.clone(),
        mean_qc: moment(&q),
        mean_qc_sq,
        mean_xbar_sq: Moment {
            value: ground + mean_qc_sq.value,
            ..mean_qc_sq
        },
        ground_state_variance: ground,
        realizations: summaries,
        wall_time_s: 0.0,
    }
}

/// Runs the ensemble on the global rayon pool.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    run_ensemble_with(config, SpectralLaw::ZeroPoint)
}

pub fn run_ensemble_with(config: &EnsembleConfig, law: SpectralLaw) -> Result<EnsembleStats> {
    let start = Instant::now();
    let params = config.validate()?;
    let summaries = (0..config.realizations)
        .into_par_iter()
        .map(|r| run_realization(config, &params, r, law))
        .collect::<Result<Vec<_>>>()?;
    let mut stats = aggregate(config, &params, summaries);
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(stats)
}

/// Runs the ensemble on a dedicated pool of `threads` workers. The result
/// does not depend on `threads`.
pub fn run_ensemble_on(config: &EnsembleConfig, threads: usize, law: SpectralLaw) -> Result<EnsembleStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| run_ensemble_with(config, law))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCheck {
    /// `max |<exp(i th_n) exp(-i th_m)> - delta_nm|` over `n != m`.
    pub off_diagonal: f64,
    /// The same for `n = m`; zero up to rounding since the factors have unit modulus.
    pub diagonal: f64,
    /// `max |<exp(i th_n) exp(i th_m)>|` over all `n, m`.
    pub same_sign: f64,
    pub max_deviation: f64,
}

/// Sample phase correlations over `realizations` independent draws of
/// `n_modes` phases (seeds `base_seed + r`, the same stream as the field).
pub fn phase_orthogonality_check(realizations: usize, n_modes: usize, base_seed: u64) -> Result<PhaseCheck> {
    if realizations < 100 {
        return Err(Error::invalid("realizations", realizations, "realizations >= 100"));
    }
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", 0, "n_modes >= 1"));
    }
    let mut cross = vec![Complex64::new(0.0, 0.0); n_modes * n_modes];
    let mut same = vec![Complex64::new(0.0, 0.0); n_modes * n_modes];
    for r in 0..realizations {
        let z: Vec<Complex64> = draw_phases(base_seed.wrapping_add(r as u64), n_modes)
            .into_iter()
            .map(|th| Complex64::from_polar(1.0, th))
            .collect();
        for n in 0..n_modes {
            for m in 0..n_modes {
                cross[n * n_modes + m] += z[n] * z[m].conj();
                same[n * n_modes + m] += z[n] * z[m];
            }
        }
    }
    let scale = 1.0 / realizations as f64;
    let mut check = PhaseCheck {
        off_diagonal: 0.0,
        diagonal: 0.0,
        same_sign: 0.0,
        max_deviation: 0.0,
    };
    for n in 0..n_modes {
        for m in 0..n_modes {
            let c = cross[n * n_modes + m] * scale;
            if n == m {
                check.diagonal = check.diagonal.max((c - 1.0).norm());
            } else {
                check.off_diagonal = check.off_diagonal.max(c.norm());
            }
            check.same_sign = check.same_sign.max((same[n * n_modes + m] * scale).norm());
        }
    }
    check.max_deviation = check.off_diagonal.max(check.diagonal).max(check.same_sign);
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn small_config(solver: Solver) -> EnsembleConfig {
        let mut c = EnsembleConfig::at_bounds(0.05, solver).unwrap();
        c.realizations = 6;
        c.t_total = match solver {
            Solver::Stationary => 200.0,
            Solver::TimeDomain => 300.0,
        };
        c
    }

    #[test]
    fn bounds_config() {
        let c = EnsembleConfig::at_bounds(1e-2, Solver::Stationary).unwrap();
        assert_eq!(c.n_modes, 5000);
        assert_eq!(c.dt, TAU / 40.0);
        assert!((c.t_total - 5000.0).abs() < 1e-9);
        assert!(c.validate().is_ok());
        let td = EnsembleConfig::at_bounds(1e-2, Solver::TimeDomain).unwrap();
        assert!((td.t_total - 5500.0).abs() < 1e-9);
        assert!(EnsembleConfig::at_bounds(0.0, Solver::Stationary).is_err());
    }

    #[test]
    fn validation_names_the_violation() {
        let mut c = small_config(Solver::TimeDomain);
        c.realizations = 1;
        assert!(c.validate().unwrap_err().to_string().contains("realizations >= 2"));
        let mut c = small_config(Solver::TimeDomain);
        c.t_total = 50.0;
        assert!(c.validate().unwrap_err().to_string().contains("transient"));
        let mut c = small_config(Solver::Stationary);
        c.n_modes = 10;
        assert!(matches!(c.validate(), Err(Error::GridTooCoarse { .. })));
        let mut c = small_config(Solver::Stationary);
        c.dt = 1.0;
        assert!(matches!(c.validate(), Err(Error::StepTooLarge { .. })));
        let mut c = small_config(Solver::Stationary);
        c.epsilon = 0.5;
        let e = c.validate().unwrap_err();
        assert!(e.is_validation() && e.to_string().contains("epsilon < 0.1"));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = small_config(Solver::Stationary);
        let a = run_ensemble_on(&c, 1, SpectralLaw::ZeroPoint).unwrap();
        let b = run_ensemble_on(&c, 3, SpectralLaw::ZeroPoint).unwrap();
        assert_eq!(a.mean_qc, b.mean_qc);
        assert_eq!(a.mean_qc_sq, b.mean_qc_sq);
        assert_eq!(a.realizations, b.realizations);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn estimator_identity_is_exact() {
        let c = small_config(Solver::Stationary);
        let s = run_ensemble(&c).unwrap();
        assert_eq!(s.mean_xbar_sq.value, 0.5 + s.mean_qc_sq.value);
        assert_eq!(s.mean_xbar_sq.std_error, s.mean_qc_sq.std_error);
        assert!(s.mean_qc_sq.std_error >= 0.0 && s.mean_qc.std_error >= 0.0);
        let seeds: Vec<u64> = s.realizations.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn time_domain_discards_transient() {
        let c = small_config(Solver::TimeDomain);
        let s = run_ensemble(&c).unwrap();
        for r in &s.realizations {
            assert!(r.transient_length >= 100.0 && r.transient_length < 100.0 + c.dt);
        }
    }

    #[test]
    fn errors_carry_the_seed() {
        let c = small_config(Solver::Stationary);
        let params = c.params().unwrap();
        let mut bad = c.clone();
        bad.base_seed = 40;
        bad.dt = -1.0;
        let err = run_realization(&bad, &params, 2, SpectralLaw::ZeroPoint).unwrap_err();
        assert!(err.to_string().contains("seed 42"));
    }

    #[test]
    fn phase_check_bounds() {
        let c = phase_orthogonality_check(10_000, 8, 0).unwrap();
        assert!(c.diagonal < 1e-12);
        assert!(c.max_deviation < 0.03, "{c:?}");
        assert!(phase_orthogonality_check(99, 8, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn merge_is_associative(xs in proptest::collection::vec(-10.0f64..10.0, 3..40), split in 1usize..1000) {
            let cut = 1 + split % (xs.len() - 1);
            let mut whole = Accumulator::default();
            xs.iter().for_each(|x| whole.push(*x));
            let (mut a, mut b) = (Accumulator::default(), Accumulator::default());
            xs[..cut].iter().for_each(|x| a.push(*x));
            xs[cut..].iter().for_each(|x| b.push(*x));
            let merged = a.merge(&b);
            prop_assert_eq!(merged.count(), whole.count());
            prop_assert!((merged.mean() - whole.mean()).abs() <= 1e-12 * (1.0 + whole.mean().abs()));
            prop_assert!((merged.std_error() - whole.std_error()).abs() <= 1e-12 * (1.0 + whole.std_error()));
            let other = b.merge(&a);
            prop_assert!((other.mean() - merged.mean()).abs() <= 1e-12 * (1.0 + merged.mean().abs()));
        }
    }
}
