//! Adaptive Gauss–Kronrod (7/15) quadrature with helpers for square-root
//! endpoint singularities and semi-infinite ranges.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            break;
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
    // Resum to shed accumulated cancellation in the running totals.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::QuadratureFailed(f64::NAN));
    }
    let bound = opts.abs_tol.max(opts.rel_tol * value.abs());
    if error > 1e3 * bound.max(1e-300) && error > 1e-9 * value.abs().max(1.0) {
        return Err(Error::QuadratureFailed(error));
    }
    Ok(QuadResult { value, error, intervals: heap.len() })
}

/// Integrate with default tolerances and return the value only.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, QuadOptions::default()).map(|r| r.value)
}

/// ∫_a^b f(t) dt for integrands with inverse-square-root singularities at
/// either end. The range is split at the midpoint and each half is mapped
/// with `t = end ± s²`.
pub fn integrate_sqrt_ends<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let w = (m - lo).sqrt();
    let left = integrate(|s| 2.0 * s * f(lo + s * s), 0.0, w)?;
    let right = integrate(|s| 2.0 * s * f(hi - s * s), 0.0, w)?;
    Ok(sign * (left + right))
}

/// ∫_a^∞ f(t) dt via `t = a + x/(1-x)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64) -> Result<f64> {
    integrate(
        |x| {
            let d = 1.0 - x;
            if d <= 0.0 {
                return 0.0;
            }
            f(a + x / d) / (d * d)
        },
        0.0,
        1.0,
    )
}

/// Map `[0, ∞)` onto `[0, 1)` and integrate `g(x)` there.
pub fn integrate_half_line<F: Fn(f64) -> f64>(g: F) -> Result<f64> {
    integrate_to_infinity(g, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_change_sign() {
        let a = integrate(f64::sin, 0.0, 1.0).unwrap();
        let b = integrate(f64::sin, 1.0, 0.0).unwrap();
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        // ∫_0^1 dt / sqrt(t (1 - t)) = π
        let v = integrate_sqrt_ends(|t| 1.0 / (t * (1.0 - t)).sqrt(), 0.0, 1.0).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-11, "{v}");
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_infinity(|t| 1.0 / (1.0 + t * t), 0.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }
}
