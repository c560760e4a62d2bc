//! Well-time map `z = ∫_a^u dt/√f(t)` and its inversions through ℘.
//!
//! Sign convention: `sqrt_sign` is the sign of `du/dz` at `z = 0⁺`. In the
//! inversion formulas the symbol `{f(a)}^{1/2}` then stands for
//! `−sqrt_sign·|√f(a)|`, which is what makes `u(z) − a` have the sign of
//! `sqrt_sign·z` for small `z`.

use crate::elliptic::{QuarticCoeffs, WeierstrassContext};
use crate::error::{Error, Result};
use crate::poly;
use crate::quad;

const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct WellTimeMap {
    pub quartic: QuarticCoeffs,
    pub base_point: f64,
    pub is_root: bool,
    pub sqrt_sign: f64,
    pub context: WeierstrassContext,
    d: [f64; 5],
    roots: Vec<f64>,
}

impl WellTimeMap {
    /// Map based at `a`. A root base point is detected when `|f(a)| < 1e−10·scale`;
    /// its direction is then fixed by the sign of `f′(a)`.
    pub fn new(quartic: QuarticCoeffs, a: f64) -> Result<Self> {
        let d = quartic.derivatives(a);
        let scale = quartic.scale() * (1.0 + a.abs()).powi(4);
        let is_root = d[0].abs() < ROOT_TOL * scale;
        if !is_root && d[0] < 0.0 {
            return Err(Error::NegativeIntegrand { at: a });
        }
        if is_root && d[1] == 0.0 {
            return Err(Error::DegenerateCase("base point is a repeated root".into()));
        }
        let context = quartic.weierstrass()?;
        let roots = poly::real_roots(&quartic.monomial(), 1e-9)
            .into_iter()
            .map(|r| poly::polish_real(&quartic.monomial(), r))
            .collect();
        let sqrt_sign = if is_root { d[1].signum() } else { 1.0 };
        Ok(Self { quartic, base_point: a, is_root, sqrt_sign, context, d, roots })
    }

    /// Override the direction of travel at a non-root base point.
    pub fn with_sqrt_sign(mut self, sign: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!("sqrt_sign must be ±1, got {sign}")));
        }
        if self.is_root && sign != self.d[1].signum() {
            return Err(Error::InvalidParameter("at a simple root the direction is fixed by f′(a)".into()));
        }
        self.sqrt_sign = sign;
        Ok(self)
    }

    pub fn f(&self, u: f64) -> f64 {
        if u == self.base_point && self.is_root {
            0.0
        } else {
            self.quartic.eval(u)
        }
    }

    /// `[f, f′, f″, f‴, f⁗]` at the base point (`f(a) = 0` for a root).
    pub fn base_derivatives(&self) -> [f64; 5] {
        let mut d = self.d;
        if self.is_root {
            d[0] = 0.0;
        }
        d
    }

    /// The printed `{f(a)}^{1/2}` under the `sqrt_sign` convention.
    fn signed_root_a(&self) -> f64 {
        if self.is_root {
            0.0
        } else {
            -self.sqrt_sign * self.d[0].sqrt()
        }
    }

    /// The accessible interval containing the base point, between real roots of `f`
    /// (infinite ends where `f` stays positive).
    pub fn well(&self) -> (f64, f64) {
        let a = self.base_point;
        let tol = 1e-9 * (1.0 + a.abs());
        let below = self.roots.iter().copied().filter(|&r| r < a - tol).fold(f64::NEG_INFINITY, f64::max);
        let above = self.roots.iter().copied().filter(|&r| r > a + tol).fold(f64::INFINITY, f64::min);
        match (self.is_root, self.d[1] > 0.0) {
            (true, true) => (a, above),
            (true, false) => (below, a),
            _ => (below, above),
        }
    }

    /// Signed well time `sqrt_sign · ∫_a^u dt/√f(t)`, by quadrature with
    /// square-root substitutions at the bounding roots.
    pub fn well_time(&self, u: f64) -> Result<f64> {
        let a = self.base_point;
        if u == a {
            return Ok(0.0);
        }
        let (lo, hi) = self.well();
        let tol = 1e-9 * (1.0 + u.abs());
        // arguments within rounding of a turning point are taken to be it
        let u = if (u - lo).abs() < tol { lo } else if (u - hi).abs() < tol { hi } else { u };
        if u < lo || u > hi || (u - a) * self.sqrt_sign < 0.0 {
            let at = if u < lo { lo } else if u > hi { hi } else { a };
            return Err(Error::NegativeIntegrand { at });
        }
        let (x0, x1) = if u > a { (a, u) } else { (u, a) };
        Ok(self.sqrt_sign * (u - a).signum() * self.integral(x0, x1, lo, hi)?)
    }

    /// `∫_{x0}^{x1} dt/√f` for `lo ≤ x0 < x1 ≤ hi`, with `f` factored as
    /// `(t − lo)(hi − t)R(t)` wherever the ends are finite.
    fn integral(&self, x0: f64, x1: f64, lo: f64, hi: f64) -> Result<f64> {
        let c = self.quartic.monomial();
        let mut rest = c.to_vec();
        let mut sign = 1.0;
        if lo.is_finite() {
            rest = deflate(&rest, lo);
        }
        if hi.is_finite() {
            rest = deflate(&rest, hi);
            sign = -1.0;
        }
        let r = |t: f64| sign * poly::eval(&rest, t);
        let mid = 0.5 * (x0 + x1);
        let left = if lo.is_finite() {
            // t = lo + y²: dt/√f = 2 dy / √((hi − t) R(t))
            let g = |y: f64| {
                let t = lo + y * y;
                let h = if hi.is_finite() { hi - t } else { 1.0 };
                2.0 / (h * r(t)).sqrt()
            };
            quad::integrate(g, (x0 - lo).max(0.0).sqrt(), (mid - lo).sqrt())?
        } else {
            quad::integrate(|t| 1.0 / self.quartic.eval(t).sqrt(), x0, mid)?
        };
        let right = if hi.is_finite() {
            let g = |y: f64| {
                let t = hi - y * y;
                let l = if lo.is_finite() { t - lo } else { 1.0 };
                2.0 / (l * r(t)).sqrt()
            };
            quad::integrate(g, (hi - x1).max(0.0).sqrt(), (hi - mid).sqrt())?
        } else {
            quad::integrate(|t| 1.0 / self.quartic.eval(t).sqrt(), mid, x1)?
        };
        let v = left + right;
        if !v.is_finite() {
            return Err(Error::NegativeIntegrand { at: mid });
        }
        Ok(v)
    }

    /// Root base point: `u = a + f′(a) / (4(℘(z) − f″(a)/24))`.
    pub fn u_from_z_root(&self, z: f64) -> Result<f64> {
        if !self.is_root {
            return Err(Error::DomainError("base point is not a root of f".into()));
        }
        let p = match self.context.wp_real(z) {
            Err(Error::PoleAt(_)) => return Ok(self.base_point),
            r => r?,
        };
        let den = 4.0 * (p - self.d[2] / 24.0);
        if den.abs() <= 1e-14 * (p.abs() + self.d[2].abs()) {
            return Err(Error::PoleAt(num_complex::Complex64::new(z, 0.0)));
        }
        Ok(self.base_point + self.d[1] / den)
    }

    /// Biermann–Weierstrass formula for an arbitrary base point.
    pub fn u_from_z_biermann(&self, z: f64) -> Result<f64> {
        let [fa, f1, f2, f3, f4] = self.base_derivatives();
        let (p, dp) = self.wp_pair(z)?;
        let ra = self.signed_root_a();
        let x = p - f2 / 24.0;
        let num = ra * dp + 0.5 * x * f1 + fa * f3 / 24.0;
        let den = 2.0 * x * x - fa * f4 / 48.0;
        if den.abs() <= 1e-13 * (2.0 * x * x + (fa * f4 / 48.0).abs()) {
            return Err(Error::ZeroDenominator("Biermann"));
        }
        Ok(self.base_point + num / den)
    }

    /// Mordell's rationalised form of the Biermann–Weierstrass formula.
    pub fn u_from_z_mordell(&self, z: f64) -> Result<f64> {
        let [fa, f1, f2, f3, _] = self.base_derivatives();
        let (p, dp) = self.wp_pair(z)?;
        let ra = self.signed_root_a();
        let num = 8.0 * (12.0 * p + f2) * fa - 6.0 * f1 * f1;
        let terms = [48.0 * ra * dp, (24.0 * p - f2) * f1, 2.0 * fa * f3];
        let den = terms[0] - terms[1] - terms[2];
        if den.abs() <= 1e-13 * terms.iter().map(|t| t.abs()).sum::<f64>() {
            return Err(Error::ZeroDenominator("Mordell"));
        }
        Ok(self.base_point + num / den)
    }

    /// Biermann, falling back to Mordell where Biermann's denominator vanishes.
    pub fn u_from_z(&self, z: f64) -> Result<f64> {
        if self.is_root {
            return self.u_from_z_root(z);
        }
        if let Err(Error::PoleAt(_)) = self.context.wp_real(z) {
            return Ok(self.base_point);
        }
        match self.u_from_z_biermann(z) {
            Err(Error::ZeroDenominator(_)) => self.u_from_z_mordell(z),
            other => other,
        }
    }

    fn wp_pair(&self, z: f64) -> Result<(f64, f64)> {
        Ok((self.context.wp_real(z)?, self.context.wp_prime_real(z)?))
    }

    /// `F(t)` of the substitution, `(f(t) + f(a))/2` minus its `(t − a)²` part.
    pub fn big_f(&self, t: f64) -> f64 {
        let QuarticCoeffs { a0, a1, a2, a3, a4 } = self.quartic;
        let a = self.base_point;
        a0 * a * a * t * t + 2.0 * a1 * (a * t * t + a * a * t) + a2 * (t * t + 4.0 * a * t + a * a) + 2.0 * a3 * (t + a) + a4
    }

    /// `s(t) = (F(t) + √f(t)√f(a)) / (2(t − a)²)` on the first leg of the orbit,
    /// where both square roots carry the same sign.
    pub fn s_substitution(&self, t: f64) -> Result<f64> {
        let a = self.base_point;
        if t == a {
            return Err(Error::DomainError("s(t) is singular at t = a".into()));
        }
        let ft = self.quartic.eval(t);
        if ft < 0.0 {
            return Err(Error::NegativeIntegrand { at: t });
        }
        let fa = self.base_derivatives()[0];
        Ok((self.big_f(t) + (ft * fa).sqrt()) / (2.0 * (t - a).powi(2)))
    }

    /// Laurent form `s = f(a)/(2h²) + f′(a)/(4h) + f″(a)/24 + √f(t)√f(a)/(2h²)`, `h = t − a`.
    pub fn s_expanded(&self, t: f64) -> f64 {
        let [fa, f1, f2, ..] = self.base_derivatives();
        let h = t - self.base_point;
        let ft = self.quartic.eval(t).max(0.0);
        fa / (2.0 * h * h) + f1 / (4.0 * h) + f2 / 24.0 + (ft * fa).sqrt() / (2.0 * h * h)
    }

    /// `G(t)` with `√f(t)` and `√f(a)` both non-negative; `G² = 4s³ − g2 s − g3`.
    pub fn g_of_t(&self, t: f64) -> f64 {
        let [fa, f1, ..] = self.base_derivatives();
        let h = t - self.base_point;
        let [ft, ft1, ..] = self.quartic.derivatives(t);
        let (rt, ra) = (ft.max(0.0).sqrt(), fa.max(0.0).sqrt());
        (ft1 / (4.0 * h * h) - ft / h.powi(3)) * ra - (fa / h.powi(3) + f1 / (4.0 * h * h)) * rt
    }

    /// `℘′(z(u))` along the first leg, from the substitution: `ds/dz = √f(u)·ds/du`.
    pub fn wp_prime_from_u(&self, u: f64) -> f64 {
        self.sqrt_sign * self.g_of_t(u)
    }
}

/// Synthetic division of `c` (highest first) by `(t − r)`, remainder dropped.
fn deflate(c: &[f64], r: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() - 1);
    let mut acc = 0.0;
    for &x in &c[..c.len() - 1] {
        acc = acc * r + x;
        out.push(acc);
    }
    out
}

/// Greenhill's fractional-linear choice of `s(x)` for a quartic with leading
/// coefficient `a0` and four distinct roots `(α, β, γ, δ)`.
/// Returns `(s, s − e1, s − e2, s − e3)`.
pub fn russell_root_map(x: f64, roots: (f64, f64, f64, f64), a0: f64) -> Result<(f64, f64, f64, f64)> {
    let (al, be, ga, de) = roots;
    if x == al {
        return Err(Error::PoleAt(num_complex::Complex64::new(x, 0.0)));
    }
    let (ab, ag, ad) = (al - be, al - ga, al - de);
    let s = a0 / 12.0 * ab * ag * ad / (x - al) * ((x - be) / ab + (x - ga) / ag + (x - de) / ad);
    let q = a0 / 4.0 / (x - al);
    Ok((s, q * ag * ad * (x - be), q * ad * ab * (x - ga), q * ab * ag * (x - de)))
}

/// Coefficients of a binary quartic under `x = lX + mY`, `y = l′X + m′Y`, with the
/// ratios `G2/g2` and `G3/g3` (expected `Δ⁴`, `Δ⁶` for `Δ = lm′ − l′m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FltCheck {
    pub transformed: QuarticCoeffs,
    pub det: f64,
    pub g2_ratio: f64,
    pub g3_ratio: f64,
}

pub fn flt_invariance_check(q: &QuarticCoeffs, l: f64, m: f64, lp: f64, mp: f64) -> Result<FltCheck> {
    let det = l * mp - lp * m;
    if det == 0.0 {
        return Err(Error::SingularTransform);
    }
    let transformed = transform_binary(q, l, m, lp, mp);
    let (g, h) = (q.invariants(), transformed.invariants());
    Ok(FltCheck { transformed, det, g2_ratio: h.g2 / g.g2, g3_ratio: h.g3 / g.g3 })
}

/// Forms of degree n stored as coefficients of `X^{n−j} Y^j`.
fn transform_binary(q: &QuarticCoeffs, l: f64, m: f64, lp: f64, mp: f64) -> QuarticCoeffs {
    fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }
    fn pow(a: &[f64], n: usize) -> Vec<f64> {
        (0..n).fold(vec![1.0], |acc, _| mul(&acc, a))
    }
    let (x, y) = ([l, m], [lp, mp]);
    let c = q.monomial();
    let mut out = [0.0; 5];
    for k in 0..5 {
        let term = mul(&pow(&x, 4 - k), &pow(&y, k));
        for (j, t) in term.iter().enumerate() {
            out[j] += c[k] * t;
        }
    }
    QuarticCoeffs::new(out[0], out[1] / 4.0, out[2] / 6.0, out[3] / 4.0, out[4])
}

/// The unimodular transform `x = t0(X + λY) − Y`, `y = X + λY`, `6λ = f″(t0)/f′(t0)`,
/// for a root `t0`; it kills the `X⁴` and `X²Y²` coefficients.
pub fn copson_transform(q: &QuarticCoeffs, t0: f64) -> Result<(f64, f64, f64, f64)> {
    let d = q.derivatives(t0);
    if d[1] == 0.0 {
        return Err(Error::DegenerateCase("f′(t0) = 0".into()));
    }
    let lambda = d[2] / (6.0 * d[1]);
    Ok((t0, t0 * lambda - 1.0, 1.0, lambda))
}
