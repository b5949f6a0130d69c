use sed_oscillator::ensemble::{run_ensemble, EnsembleConfig, Solver};
use sed_oscillator::verify::cross_solver_deviation;
use sed_oscillator::vacuum_field::SpectralLaw;
use sed_oscillator::ModelParams;

fn config(solver: Solver, realizations: usize) -> EnsembleConfig {
    let mut c = EnsembleConfig::at_bounds(0.05, solver).unwrap();
    c.realizations = realizations;
    c
}

#[test]
fn solvers_agree_on_mean_square() {
    let st = run_ensemble(&config(Solver::Stationary, 24)).unwrap();
    let td = run_ensemble(&config(Solver::TimeDomain, 24)).unwrap();
    let diff = st.mean_qc_sq.value - td.mean_qc_sq.value;
    let se = st.mean_qc_sq.std_error.hypot(td.mean_qc_sq.std_error);
    assert!((diff / se).abs() < 3.0, "{:?} vs {:?}", st.mean_qc_sq, td.mean_qc_sq);
    // first grid time at or after 5 / epsilon
    let dt = td.config.dt;
    assert!(td.realizations.iter().all(|r| (100.0..100.0 + dt).contains(&r.transient_length)));
}

#[test]
fn standard_error_shrinks_with_realizations() {
    let small = run_ensemble(&config(Solver::Stationary, 16)).unwrap();
    let large = run_ensemble(&config(Solver::Stationary, 64)).unwrap();
    let ratio = small.mean_qc_sq.std_error / large.mean_qc_sq.std_error;
    // 1/sqrt(R) predicts 2; the scatter estimate itself fluctuates
    assert!((1.3..3.0).contains(&ratio), "ratio {ratio}");
    assert_eq!(large.mean_qc_sq.effective_samples, 4.0 * small.mean_qc_sq.effective_samples);
}

#[test]
fn identical_seeds_give_identical_stats() {
    let c = config(Solver::Stationary, 4);
    let run = || {
        let mut s = run_ensemble(&c).unwrap();
        s.wall_time_s = 0.0;
        s
    };
    assert_eq!(run(), run());
}

#[test]
fn time_domain_tracks_stationary_solution() {
    let p = ModelParams::dimensionless(1e-2).unwrap();
    for seed in [100, 101] {
        let d = cross_solver_deviation(&p, seed, SpectralLaw::ZeroPoint).unwrap();
        assert!(d < 0.01, "seed {seed}: {d}");
    }
}
