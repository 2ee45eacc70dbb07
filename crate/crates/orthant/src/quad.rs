//! Adaptive Gauss–Kronrod quadrature (15-point rule) with a power
//! substitution helper for integrable endpoint singularities.
//!
//! The kernels integrated here behave like `y^sigma` with `sigma in (-1, 0)`
//! near 0; substituting `y = u^q` with `q >= 1/(1+sigma)` makes the
//! integrand bounded, after which the plain adaptive rule converges fast.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_944,
    0.417_959_183_673_469_4,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

/// One 15-point Kronrod panel with embedded 7-point Gauss error estimate.
pub fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3]; // center node belongs to the embedded G7 rule
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let abs_error = ((kronrod - gauss) * half).abs();
    QuadResult { value, abs_error }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Adaptive integration of `f` over `[a, b]` until
/// `sum of panel errors <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    integrate_segmented(&f, &[a, b], rel_tol, abs_tol)
}

/// Adaptive integration with caller-supplied break points (increasing).
/// Useful when the integrand has a known kink, e.g. an absolute value.
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::input("quadrature break points must be increasing"));
    }
    const MAX_SEGMENTS: usize = 2000;

    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        let r = qk15(f, w[0], w[1]);
        value += r.value;
        error += r.abs_error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: r.value,
            error: r.abs_error,
        });
    }

    while error > abs_tol.max(rel_tol * value.abs()) && heap.len() < MAX_SEGMENTS {
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // Interval at floating-point resolution; cannot subdivide.
            heap.push(worst);
            break;
        }
        let left = qk15(f, worst.a, mid);
        let right = qk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.abs_error + right.abs_error - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.abs_error,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.abs_error,
        });
    }

    // Recompute the error sum to avoid drift from incremental updates.
    let error: f64 = heap.iter().map(|s| s.error).sum();
    let value: f64 = heap.iter().map(|s| s.value).sum();
    if !value.is_finite() || !error.is_finite() || error > abs_tol.max(rel_tol * value.abs()) {
        return Err(Error::Numerical {
            context: "adaptive quadrature did not reach tolerance".to_string(),
            partial: Some(value),
            est_error: Some(error),
        });
    }
    Ok(QuadResult {
        value,
        abs_error: error,
    })
}

/// `int_0^b f(y) dy` via the substitution `y = u^q`, which absorbs an
/// integrable power singularity of `f` at 0. `q >= 1`.
pub fn integrate_power0<F: Fn(f64) -> f64>(
    f: F,
    b: f64,
    q: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if !(b > 0.0) || !(q >= 1.0) {
        return Err(Error::input(format!(
            "integrate_power0: need b > 0 and q >= 1 (got b={b}, q={q})"
        )));
    }
    let g = move |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        f(u.powf(q)) * q * u.powf(q - 1.0)
    };
    integrate(g, 0.0, b.powf(1.0 / q), rel_tol, abs_tol)
}

/// Exponent `q` that makes `y^sigma dy` bounded under `y = u^q`
/// (with a margin so the transformed integrand vanishes at 0).
pub fn absorbing_exponent(sigma: f64) -> f64 {
    debug_assert!(sigma > -1.0);
    (1.25 / (1.0 + sigma)).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12, 1e-14).unwrap();
        // antiderivative x^4/4 - x^2 + x
        assert_relative_eq!(r.value, (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let r = integrate(|x| (-0.5 * x * x).exp(), -8.0, 8.0, 1e-12, 1e-14).unwrap();
        assert_relative_eq!(r.value, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn power_singularity() {
        // int_0^1 y^{-1/2} dy = 2
        let r = integrate_power0(|y| y.powf(-0.5), 1.0, absorbing_exponent(-0.5), 1e-10, 1e-12)
            .unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
        // int_0^2 y^{-0.8} dy = 2^{0.2}/0.2
        let r = integrate_power0(|y| y.powf(-0.8), 2.0, absorbing_exponent(-0.8), 1e-10, 1e-12)
            .unwrap();
        assert_relative_eq!(r.value, 2.0f64.powf(0.2) / 0.2, max_relative = 1e-9);
    }

    #[test]
    fn kink_with_break_point() {
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate_segmented(&f, &[0.0, 0.3, 1.0], 1e-12, 1e-14).unwrap();
        assert_relative_eq!(r.value, 0.5 * (0.09 + 0.49), epsilon = 1e-12);
    }

    #[test]
    fn refuses_bad_breaks() {
        assert!(integrate_segmented(&|x: f64| x, &[1.0, 0.0], 1e-6, 1e-9).is_err());
    }

    #[test]
    fn reports_partial_on_failure() {
        // Non-integrable singularity cannot converge; expect the partial value.
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10, 1e-12).unwrap_err();
        match err {
            crate::Error::Numerical { partial, .. } => assert!(partial.is_some()),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }
}
