//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |I|)`. Callers place
//! breakpoints at known features (resonance peaks) and integrate the pieces
//! separately.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the Gauss points.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Smallest relative tolerance accepted without an absolute one.
pub const MIN_REL_TOL: f64 = 50.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            abs: 0.0,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 15-point Kronrod rule with the embedded 7-point Gauss error estimate.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut fvals = [(0.0, 0.0); 7];
    for (j, slot) in fvals.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let (lo, hi) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (lo + hi);
        abs_sum += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
        *slot = (lo, hi);
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(lo, hi)) in fvals.iter().enumerate() {
        asc += WGK[j] * ((lo - mean).abs() + (hi - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();

    // QUADPACK error scaling
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]` (finite bounds).
///
/// Relative tolerances below `50 * f64::EPSILON` are rejected: the error
/// estimate of each rule carries a rounding floor of that size.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if tol.abs <= 0.0 && !(tol.rel >= MIN_REL_TOL) {
        return Err(Error::invalid("rel_tol", tol.rel, format!("rel_tol >= {MIN_REL_TOL:e}")));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    let (mut total, mut error) = (first.value, first.error);
    heap.push(first);

    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if error <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureNotConverged {
                intervals: heap.len(),
                achieved: error,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine resolution
            return Err(Error::QuadratureNotConverged {
                intervals: heap.len() + 1,
                achieved: error,
                requested: target,
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // re-sum to shed the drift of the running updates
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pieces.iter().map(|p| p.value).sum();
    let abs_error = pieces.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        abs_error,
        evaluations,
    })
}

/// Integrates over consecutive pieces `[points[i], points[i+1]]`, each to the
/// same relative tolerance, and sums the results.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    let mut out = Estimate {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };
    for w in points.windows(2) {
        let e = integrate(&f, w[0], w[1], tol)?;
        out.value += e.value;
        out.abs_error += e.abs_error;
        out.evaluations += e.evaluations;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(e.value, 64.0 / 6.0 - 8.0, max_relative = 1e-14);
        assert_eq!(e.evaluations, 15);
    }

    #[test]
    fn narrow_lorentzian() {
        let g = 1e-4;
        let f = |x: f64| g / PI / (x * x + g * g);
        let e = integrate(f, -1.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        let exact = 2.0 / PI * (1.0 / g).atan();
        assert_relative_eq!(e.value, exact, max_relative = 1e-11);
        assert!(e.abs_error <= 1e-12 * exact * 1.0001);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let e = integrate(|x: f64| x.exp(), 1.0, 0.0, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(e.value, 1.0 - 1f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn reports_failure_to_converge() {
        let tol = Tolerance {
            rel: 1e-10,
            abs: 0.0,
            max_intervals: 3,
        };
        let err = integrate(|x: f64| x.abs().sqrt().recip().min(1e12), -1.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn pieces_sum() {
        let e = integrate_pieces(|x: f64| x.cos(), &[0.0, 1.0, 2.0, PI], Tolerance::relative(1e-13)).unwrap();
        assert!(e.value.abs() < 1e-13);
    }
}
