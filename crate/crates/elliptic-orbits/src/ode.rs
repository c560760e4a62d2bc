//! Fixed-step classical Runge–Kutta integration.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Integrate from `t0` to `t1` in `n` equal steps and return the final state.
pub fn rk4<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, n: usize) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(&f, t0 + i as f64 * h, &y, h);
    }
    y
}

/// Integrate and record every `every`-th state (the initial and final states are always kept).
pub fn rk4_path<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, n: usize, every: usize) -> Vec<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / n as f64;
    let every = every.max(1);
    let mut y = y0;
    let mut out = vec![(t0, y0)];
    for i in 0..n {
        y = rk4_step(&f, t0 + i as f64 * h, &y, h);
        if (i + 1) % every == 0 || i + 1 == n {
            out.push((t0 + (i + 1) as f64 * h, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = rk4(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 1.0, 100);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y = rk4(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, 2000);
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn path_keeps_endpoints() {
        let p = rk4_path(|_, _y: &[f64; 1]| [1.0], 0.0, [0.0], 1.0, 10, 3);
        assert_eq!(p.first().unwrap().0, 0.0);
        assert!((p.last().unwrap().1[0] - 1.0).abs() < 1e-14);
    }
}
