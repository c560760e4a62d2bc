use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Arithmetic–geometric mean of two non-negative reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 1e-16 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

/// Complete integral of the first kind `K(k)` for modulus `0 ≤ k < 1`.
pub fn complete_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::DomainError(format!("modulus k = {k} outside [0, 1)")));
    }
    Ok(FRAC_PI_2 / agm(1.0, (1.0 - k * k).sqrt()))
}

/// Carlson's symmetric integral `R_F(x, y, z)`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..100 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let mu = (x + y + z) / 3.0;
        let (dx, dy, dz) = (1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / mu.sqrt();
        }
    }
    f64::NAN
}

/// Carlson's symmetric integral `R_D(x, y, z)`.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..100 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let mu = (x + y + 3.0 * z) / 5.0;
        let (dx, dy, dz) = (1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let s = ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * dz * ee)
                + dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea));
            return 3.0 * sum + fac * (1.0 + s) / (mu * mu.sqrt());
        }
    }
    f64::NAN
}

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::DomainError(format!("modulus k = {k} outside [0, 1]")));
    }
    Ok(())
}

/// Split `phi` as `n·π + r` with `|r| ≤ π/2`.
fn reduce(phi: f64) -> (f64, f64) {
    let n = (phi / std::f64::consts::PI).round();
    (n, phi - n * std::f64::consts::PI)
}

/// Incomplete integral of the first kind `F(φ, k)`.
pub fn legendre_f(phi: f64, k: f64) -> Result<f64> {
    check_modulus(k)?;
    let (n, r) = reduce(phi);
    if k == 1.0 {
        if n != 0.0 || r.abs() >= FRAC_PI_2 {
            return Err(Error::DomainError("F(φ, 1) diverges at |φ| ≥ π/2".into()));
        }
        return Ok(r.sin().atanh());
    }
    let (s, c) = r.sin_cos();
    let part = s * carlson_rf(c * c, 1.0 - k * k * s * s, 1.0);
    let full = if n != 0.0 { 2.0 * n * complete_k(k)? } else { 0.0 };
    Ok(full + part)
}

/// Incomplete integral of the second kind `E(φ, k)`.
pub fn legendre_e(phi: f64, k: f64) -> Result<f64> {
    check_modulus(k)?;
    let (n, r) = reduce(phi);
    let complete = |k: f64| -> f64 {
        if k == 1.0 {
            1.0
        } else {
            let kk = k * k;
            carlson_rf(0.0, 1.0 - kk, 1.0) - kk / 3.0 * carlson_rd(0.0, 1.0 - kk, 1.0)
        }
    };
    let part = if k == 1.0 {
        r.sin()
    } else {
        let (s, c) = r.sin_cos();
        let kk = k * k;
        let y = 1.0 - kk * s * s;
        s * carlson_rf(c * c, y, 1.0) - kk / 3.0 * s * s * s * carlson_rd(c * c, y, 1.0)
    };
    Ok(2.0 * n * complete(k) + part)
}
