//! Small dense polynomials with real coefficients (highest degree first).

use num_complex::Complex64;

/// Horner evaluation; `c[0]` is the leading coefficient.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &a| acc * x + a)
}

pub fn eval_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len().saturating_sub(1);
    c.iter().take(n).enumerate().map(|(i, &a)| a * (n - i) as f64).collect()
}

/// All complex roots by the Aberth–Ehrlich iteration, followed by Newton
/// polishing. Leading zero coefficients are dropped.
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let start = c.iter().position(|&a| a != 0.0).unwrap_or(c.len());
    let c = &c[start..];
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let monic: Vec<f64> = c.iter().map(|&a| a / c[0]).collect();
    let dc = derivative(&monic);
    // Cauchy bound for the initial circle.
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let p = eval_c(&monic, z[i]);
            let dp = eval_c(&dc, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += 1.0 / (z[i] - z[j]);
                }
            }
            let w = ratio / (1.0 - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let p = eval_c(&monic, *zi);
            let dp = eval_c(&dc, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * (1.0 + zi.norm()) {
                break;
            }
            *zi -= step;
        }
        if zi.im.abs() < 1e-12 * (1.0 + zi.re.abs()) {
            zi.im = 0.0;
        }
    }
    z.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    z
}

/// Real roots (imaginary part below `tol` relative), sorted ascending.
pub fn real_roots(c: &[f64], tol: f64) -> Vec<f64> {
    let mut r: Vec<f64> = roots(c)
        .into_iter()
        .filter(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    r.sort_by(f64::total_cmp);
    r
}

/// Newton refinement of a simple real root.
pub fn polish_real(c: &[f64], mut x: f64) -> f64 {
    let dc = derivative(c);
    for _ in 0..4 {
        let d = eval(&dc, x);
        if d == 0.0 {
            break;
        }
        let step = eval(c, x) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-17 * x.abs() {
            break;
        }
    }
    x
}
