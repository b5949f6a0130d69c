use sed_oscillator::ensemble::{phase_orthogonality_check, Accumulator};
use sed_oscillator::vacuum_field::{field_at, sample_modes};
use sed_oscillator::ModelParams;

const SEEDS: u64 = 2000;

fn params() -> ModelParams {
    ModelParams::dimensionless(0.05).unwrap()
}

#[test]
fn phase_averaged_square_matches_mode_sum() {
    let p = params();
    for t in [0.0, 3.7, 120.5] {
        let mut acc = Accumulator::default();
        let mut target = 0.0;
        for seed in 0..SEEDS {
            let m = sample_modes(&p, 3.0, 600, seed).unwrap();
            target = m.mean_square();
            acc.push(field_at(&m, t).powi(2));
        }
        let z = (acc.mean() - target) / acc.std_error();
        assert!(z.abs() < 3.0, "t={t}: mean {} vs {target}, z = {z}", acc.mean());
    }
}

#[test]
fn correlation_depends_only_on_lag() {
    let p = params();
    let lag = 0.9;
    let (mut early, mut late) = (Accumulator::default(), Accumulator::default());
    for seed in 0..SEEDS {
        let m = sample_modes(&p, 3.0, 600, seed).unwrap();
        early.push(field_at(&m, 1.0) * field_at(&m, 1.0 + lag));
        late.push(field_at(&m, 57.3) * field_at(&m, 57.3 + lag));
    }
    let diff = early.mean() - late.mean();
    let se = early.std_error().hypot(late.std_error());
    assert!((diff / se).abs() < 3.0, "{} vs {} (se {se})", early.mean(), late.mean());
}

#[test]
fn phase_means_shrink_like_inverse_root_r() {
    for r in [400, 1600, 6400] {
        let c = phase_orthogonality_check(r, 8, 11).unwrap();
        assert!(c.diagonal < 1e-12);
        // max over 2 * 64 circular means; 4.5 / sqrt(R) keeps the family-wise
        // false alarm rate small
        assert!(c.off_diagonal < 4.5 / (r as f64).sqrt(), "R={r}: {c:?}");
        assert!(c.same_sign < 4.5 / (r as f64).sqrt(), "R={r}: {c:?}");
    }
}
