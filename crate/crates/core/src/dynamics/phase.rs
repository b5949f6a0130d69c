use crate::model::ModelParams;

/// Phase `g(t) = hbar omega0 t / 2 + (m/2) int (qdot^2 - omega0^2 q^2) dt'`
/// by the cumulative trapezoid rule, with `qdot = p / m`.
///
/// The integral starts at `times[0]`; the linear term uses absolute time so a
/// grid starting at 0 gives `g(0) = 0`.
pub fn phase_accumulator(times: &[f64], q: &[f64], p: &[f64], params: &ModelParams) -> Vec<f64> {
    assert!(
        times.len() == q.len() && q.len() == p.len(),
        "phase_accumulator: mismatched sample lengths"
    );
    let m = params.mass();
    let w0sq = params.omega0() * params.omega0();
    let lagrangian = |k: usize| {
        let v = p[k] / m;
        0.5 * m * (v * v - w0sq * q[k] * q[k])
    };
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            integral += 0.5 * (times[k] - times[k - 1]) * (lagrangian(k - 1) + lagrangian(k));
        }
        out.push(0.5 * params.hbar() * params.omega0() * times[k] + integral);
    }
    out
}
