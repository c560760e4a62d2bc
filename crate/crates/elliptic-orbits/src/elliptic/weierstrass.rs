use std::f64::consts::PI;

use num_complex::Complex64;

use super::legendre::agm;
use crate::error::{Error, Result};
use crate::quad;

const SERIES_TERMS: usize = 48;
const DEGENERATE_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Roots of `4t³ − g2 t − g3`. For `Δ > 0` all three are real and sorted
/// descending; for `Δ < 0` the real root is `e2` and `e1 = conj(e3)` has
/// positive imaginary part.
pub fn cubic_roots(g2: f64, g3: f64) -> Result<[Complex64; 3]> {
    let delta = g2 * g2 * g2 - 27.0 * g3 * g3;
    let size = g2.abs().powi(3) + 27.0 * g3 * g3;
    if size == 0.0 || delta.abs() <= DEGENERATE_TOL * size {
        return Err(Error::DegenerateCubic(delta));
    }
    let polish = |mut t: f64| {
        for _ in 0..3 {
            let d = 12.0 * t * t - g2;
            if d == 0.0 {
                break;
            }
            let step = (4.0 * t * t * t - g2 * t - g3) / d;
            if !step.is_finite() {
                break;
            }
            t -= step;
        }
        t
    };
    if delta > 0.0 {
        let r = (g2 / 3.0).sqrt();
        let arg = (3.0 * 3f64.sqrt() * g3 / g2.powf(1.5)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut e = [0.0, 1.0, 2.0].map(|k: f64| polish(r * (theta - 2.0 * PI * k / 3.0).cos()));
        e.sort_by(|a, b| b.total_cmp(a));
        // Restore the exact zero-sum after polishing.
        let shift = (e[0] + e[1] + e[2]) / 3.0;
        Ok(e.map(|x| c(x - shift, 0.0)))
    } else {
        let s = (1.0 - g2 * g2 * g2 / (27.0 * g3 * g3)).sqrt();
        let e2 = polish((g3 / 8.0 * (1.0 - s)).cbrt() + (g3 / 8.0 * (1.0 + s)).cbrt());
        let im = (3.0 * e2 * e2 - g2).max(0.0).sqrt() / 2.0;
        Ok([c(-e2 / 2.0, im), c(e2, 0.0), c(-e2 / 2.0, -im)])
    }
}

/// Real half-period `ω` for invariants `(g2, g3)`.
pub fn half_period(g2: f64, g3: f64) -> Result<f64> {
    Ok(WeierstrassContext::new(g2, g3)?.omega)
}

#[derive(Debug, Clone, Copy)]
struct Values {
    p: Complex64,
    dp: Complex64,
    zeta: Complex64,
    ln_sigma: Complex64,
}

/// Evaluation context for `℘(z; g2, g3)` and its relatives.
///
/// The lattice is spanned by `2·h[0]` and `2·h[1]`. For `Δ > 0` these are the
/// real half-period `ω` and the imaginary half-period `ω′`; for `Δ < 0` the
/// lattice is rhombic with `h = ((ω ± iω̃)/2)`.
#[derive(Debug, Clone)]
pub struct WeierstrassContext {
    pub g2: f64,
    pub g3: f64,
    pub delta: f64,
    pub e1: Complex64,
    pub e2: Complex64,
    pub e3: Complex64,
    /// Real half-period: `℘(ω) = e1` (Δ>0) or `e2` (Δ<0).
    pub omega: f64,
    /// `ω̃ > 0` with `℘(iω̃)` real and minimal on the imaginary axis.
    pub omega_imag: f64,
    h: [Complex64; 2],
    eta: [Complex64; 2],
    scale: f64,
    coeffs: Vec<f64>,
}

impl WeierstrassContext {
    pub fn new(g2: f64, g3: f64) -> Result<Self> {
        let [e1, e2, e3] = cubic_roots(g2, g3)?;
        let delta = g2 * g2 * g2 - 27.0 * g3 * g3;
        let (omega, omega_imag, h) = if delta > 0.0 {
            let (a, b, d) = (e1.re, e2.re, e3.re);
            let w = PI / (2.0 * agm((a - d).sqrt(), (a - b).sqrt()));
            let wi = PI / (2.0 * agm((a - d).sqrt(), (b - d).sqrt()));
            (w, wi, [c(w, 0.0), c(0.0, wi)])
        } else {
            let r = e2.re;
            let hh = (3.0 * r * r - g2 / 4.0).sqrt();
            let m = 0.5 - 3.0 * r / (4.0 * hh);
            let k = |m: f64| PI / (2.0 * agm(1.0, (1.0 - m).sqrt()));
            let w = k(m) / hh.sqrt();
            let wi = k(1.0 - m) / hh.sqrt();
            (w, wi, [c(w / 2.0, wi / 2.0), c(w / 2.0, -wi / 2.0)])
        };
        let scale = (2.0 * h[0]).norm().min((2.0 * h[1]).norm()).min((2.0 * (h[0] + h[1])).norm()).min((2.0 * (h[0] - h[1])).norm());
        let coeffs = laurent_coefficients(g2 * scale.powi(4), g3 * scale.powi(6));
        let mut ctx = Self {
            g2,
            g3,
            delta,
            e1,
            e2,
            e3,
            omega,
            omega_imag,
            h,
            eta: [c(0.0, 0.0); 2],
            scale,
            coeffs,
        };
        ctx.eta = [ctx.unreduced(h[0]).zeta, ctx.unreduced(h[1]).zeta];
        Ok(ctx)
    }

    pub fn roots(&self) -> [Complex64; 3] {
        [self.e1, self.e2, self.e3]
    }

    pub fn is_rectangular(&self) -> bool {
        self.delta > 0.0
    }

    /// Generating half-periods of the lattice.
    pub fn half_periods(&self) -> [Complex64; 2] {
        self.h
    }

    /// Quasi-periods `ζ(h_i)` matching [`Self::half_periods`].
    pub fn quasi_periods(&self) -> [Complex64; 2] {
        self.eta
    }

    /// `ζ(ω)` for the real half-period.
    pub fn eta_real(&self) -> f64 {
        if self.is_rectangular() {
            self.eta[0].re
        } else {
            (self.eta[0] + self.eta[1]).re
        }
    }

    /// Length of the shortest non-zero lattice vector.
    pub fn min_period(&self) -> f64 {
        self.scale
    }

    /// Lower end of the real branch: `e1` (Δ>0) or the real root `e2` (Δ<0).
    pub fn branch_start(&self) -> f64 {
        if self.is_rectangular() {
            self.e1.re
        } else {
            self.e2.re
        }
    }

    /// Real roots in ascending order.
    fn real_roots(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self
            .roots()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.im == 0.0)
            .map(|(i, e)| (i, e.re))
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    pub fn cubic(&self, t: f64) -> f64 {
        4.0 * t * t * t - self.g2 * t - self.g3
    }

    fn laurent(&self, w: Complex64) -> Values {
        let s = self.scale;
        let x = w / s;
        let x2 = x * x;
        let mut pow = c(1.0, 0.0); // x^{2k-4}
        let mut p = 1.0 / x2;
        let mut dp = -2.0 / (x2 * x);
        let mut zeta = 1.0 / x;
        let mut lns = c(0.0, 0.0);
        for (i, &ck) in self.coeffs.iter().enumerate() {
            let k = (i + 2) as f64;
            pow *= x2;
            let term = ck * pow; // c_k x^{2k-2}
            p += term;
            dp += (2.0 * k - 2.0) * term / x;
            zeta -= term * x / (2.0 * k - 1.0);
            lns -= term * x2 / ((2.0 * k - 1.0) * 2.0 * k);
        }
        Values { p: p / (s * s), dp: dp / (s * s * s), zeta: zeta / s, ln_sigma: (w.ln()) + lns }
    }

    /// Series at `z/2ⁿ` followed by `n` duplications; `z` must not be reduced
    /// further (used for half-periods and already-reduced arguments).
    fn unreduced(&self, z: Complex64) -> Values {
        let r = 0.5 * self.scale;
        let mut n = 0;
        let mut w = z;
        while w.norm() > r {
            w *= 0.5;
            n += 1;
        }
        let mut v = self.laurent(w);
        for _ in 0..n {
            let pp = 6.0 * v.p * v.p - 0.5 * self.g2;
            let m = pp / v.dp;
            let p2 = 0.25 * m * m - 2.0 * v.p;
            let dp2 = -(v.dp + m * (p2 - v.p));
            let zeta2 = 2.0 * v.zeta + 0.5 * m;
            let ln_sigma2 = (-v.dp).ln() + 4.0 * v.ln_sigma;
            v = Values { p: p2, dp: dp2, zeta: zeta2, ln_sigma: ln_sigma2 };
        }
        v
    }

    /// Nearest lattice point `2m·h0 + 2n·h1` to `z`.
    fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let a = 2.0 * self.h[0];
        let b = 2.0 * self.h[1];
        let det = a.re * b.im - a.im * b.re;
        let x = (z.re * b.im - z.im * b.re) / det;
        let y = (a.re * z.im - a.im * z.re) / det;
        let (m0, n0) = (x.round() as i64, y.round() as i64);
        let mut best = (z - a * m0 as f64 - b * n0 as f64, m0, n0);
        for dm in -1..=1 {
            for dn in -1..=1 {
                let (m, n) = (m0 + dm, n0 + dn);
                let r = z - a * m as f64 - b * n as f64;
                if r.norm() < best.0.norm() - 1e-15 * self.scale {
                    best = (r, m, n);
                }
            }
        }
        best
    }

    fn eval(&self, z: Complex64) -> Result<(Values, Complex64, i64, i64)> {
        let (zr, m, n) = self.reduce(z);
        if zr.norm() <= 1e-14 * self.scale {
            return Err(Error::PoleAt(z));
        }
        Ok((self.unreduced(zr), zr, m, n))
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?.0.p)
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?.0.dp)
    }

    /// `(℘(z), ℘′(z))` in one evaluation.
    pub fn wp_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let v = self.eval(z)?.0;
        Ok((v.p, v.dp))
    }

    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        let (v, _, m, n) = self.eval(z)?;
        Ok(v.zeta + 2.0 * (m as f64) * self.eta[0] + 2.0 * (n as f64) * self.eta[1])
    }

    /// A logarithm of `σ(z)`; the branch (multiple of 2πi) is unspecified.
    pub fn ln_sigma(&self, z: Complex64) -> Result<Complex64> {
        let (v, zr, m, n) = self.eval(z)?;
        let (mf, nf) = (m as f64, n as f64);
        let big_eta = 2.0 * mf * self.eta[0] + 2.0 * nf * self.eta[1];
        let shift = big_eta * (zr + mf * self.h[0] + nf * self.h[1]);
        let parity = (m + n + m * n).rem_euclid(2) as f64;
        Ok(v.ln_sigma + shift + c(0.0, PI * parity))
    }

    /// `σ(z)`, normalised so that `σ(z)/z → 1`; zero on the lattice.
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        match self.ln_sigma(z) {
            Ok(l) => l.exp(),
            Err(_) => c(0.0, 0.0),
        }
    }

    pub fn wp_real(&self, x: f64) -> Result<f64> {
        Ok(self.wp(c(x, 0.0))?.re)
    }

    pub fn wp_prime_real(&self, x: f64) -> Result<f64> {
        Ok(self.wp_prime(c(x, 0.0))?.re)
    }

    pub fn zeta_real(&self, x: f64) -> Result<f64> {
        Ok(self.zeta(c(x, 0.0))?.re)
    }

    /// `∫ dy / sqrt(Π_{i≠j} |e_j + σ y² − e_i|)` for `y ∈ [y0, y1]`, with `y1 = ∞` allowed.
    fn anchored(&self, j: usize, sign: f64, y0: f64, y1: f64) -> Result<f64> {
        let roots = self.roots();
        let ej = roots[j].re;
        let g = |y: f64| {
            let t = ej + sign * y * y;
            let mut prod = 1.0;
            for (i, e) in roots.iter().enumerate() {
                if i != j {
                    prod *= (c(t, 0.0) - e).norm();
                }
            }
            1.0 / prod.sqrt()
        };
        if y1.is_infinite() {
            quad::integrate_to_infinity(g, y0)
        } else {
            quad::integrate(g, y0, y1)
        }
    }

    /// `∫_lo^hi dt / sqrt|4t³ − g2 t − g3|` over a range free of interior roots.
    pub fn gap_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        let rr = self.real_roots();
        let mid = if lo.is_infinite() { hi - 1.0 } else if hi.is_infinite() { lo + 1.0 } else { 0.5 * (lo + hi) };
        let below = rr.iter().rfind(|(_, e)| *e <= mid).copied();
        let above = rr.iter().find(|(_, e)| *e > mid).copied();
        if let Some((_, e)) = below {
            if lo < e - 1e-12 * (1.0 + e.abs()) {
                return Err(Error::DomainError(format!("interval [{lo}, {hi}] straddles the root {e}")));
            }
        }
        if let Some((_, e)) = above {
            if hi > e + 1e-12 * (1.0 + e.abs()) {
                return Err(Error::DomainError(format!("interval [{lo}, {hi}] straddles the root {e}")));
            }
        }
        let up = |a: f64, x: f64| (x - a).max(0.0).sqrt();
        match (below, above) {
            (Some((j, a)), None) => self.anchored(j, 1.0, up(a, lo), if hi.is_infinite() { f64::INFINITY } else { up(a, hi) }),
            (None, Some((j, b))) => self.anchored(j, -1.0, up(hi, b), if lo.is_infinite() { f64::INFINITY } else { up(lo, b) }),
            (Some((ja, a)), Some((jb, b))) => {
                let split = 0.5 * (a + b);
                let mut total = 0.0;
                if lo < split {
                    total += self.anchored(ja, 1.0, up(a, lo), up(a, hi.min(split)))?;
                }
                if hi > split {
                    total += self.anchored(jb, -1.0, up(hi, b), up(lo.max(split), b))?;
                }
                Ok(total)
            }
            (None, None) => Err(Error::DomainError("cubic has no real root".into())),
        }
    }

    /// Real `z ∈ (0, ω]` with `℘(z) = s`, for `s` on the real branch.
    pub fn wp_inverse(&self, s: f64) -> Result<f64> {
        let start = self.branch_start();
        if s < start - 1e-12 * (1.0 + start.abs()) {
            return Err(Error::OutOfBranch { s, start });
        }
        if s <= start {
            return Ok(self.omega);
        }
        self.gap_integral(s, f64::INFINITY)
    }

    /// A solution of `℘(z) = s` for any real `s`, on the half-period lines of
    /// the fundamental rectangle: `(0, ω]`, `ω + i[0, ω̃]`, `iω̃ + [0, ω]`, `i(0, ω̃]`.
    pub fn wp_inverse_complex(&self, s: f64) -> Result<Complex64> {
        if s >= self.branch_start() {
            return Ok(c(self.wp_inverse(s)?, 0.0));
        }
        if self.is_rectangular() {
            let (a, b, d) = (self.e1.re, self.e2.re, self.e3.re);
            if s >= b {
                Ok(c(self.omega, self.gap_integral(s, a)?))
            } else if s >= d {
                Ok(c(self.gap_integral(d, s)?, self.omega_imag))
            } else {
                Ok(c(0.0, self.gap_integral(f64::NEG_INFINITY, s)?))
            }
        } else {
            Ok(c(0.0, self.gap_integral(f64::NEG_INFINITY, s)?))
        }
    }
}

/// `c_k` for `℘(z) = z⁻² + Σ_{k≥2} c_k z^{2k−2}`.
fn laurent_coefficients(g2: f64, g3: f64) -> Vec<f64> {
    let mut cc = vec![0.0; SERIES_TERMS + 2];
    cc[2] = g2 / 20.0;
    cc[3] = g3 / 28.0;
    for k in 4..SERIES_TERMS + 2 {
        let s: f64 = (2..=k - 2).map(|m| cc[m] * cc[k - m]).sum();
        cc[k] = 3.0 * s / ((2 * k + 1) as f64 * (k - 3) as f64);
    }
    cc.split_off(2)
}
