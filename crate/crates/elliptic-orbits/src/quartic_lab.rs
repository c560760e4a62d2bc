//! The KLMN radial quartic `f(u) = 2(E + μu − u²(C − Bu)²/2)`, its effective
//! potential, well structure, λ-analysis roots and Legendre reductions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{legendre_f, QuarticCoeffs};
use crate::error::{Error, Result};
use crate::poly;

const CRITICAL_RATIO: f64 = 108.0;
const ESCAPE_RATIO: f64 = 182.25;
const CLASSIFY_TOL: f64 = 1e-9;

/// Parameters `(μ, B, C, E)` of the equatorial KLMN problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlmnParams {
    pub mu: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

impl KlmnParams {
    pub fn new(mu: f64, b: f64, c: f64, e: f64) -> Result<Self> {
        if !(mu > 0.0) || ![b, c, e].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter(format!("need μ > 0 and finite B, C, E (got μ = {mu})")));
        }
        Ok(Self { mu, b, c, e })
    }

    pub fn f(&self, u: f64) -> f64 {
        f_radial(u, self)
    }

    /// `f′(u) = 2μ − 2C²u + 6BCu² − 4B²u³`.
    pub fn f_prime(&self, u: f64) -> f64 {
        let Self { mu, b, c, .. } = *self;
        2.0 * mu - 2.0 * c * c * u + 6.0 * b * c * u * u - 4.0 * b * b * u * u * u
    }

    pub fn quartic(&self) -> QuarticCoeffs {
        as_quartic(self)
    }

    /// Angular momentum `h = |C − Bu|`.
    pub fn h(&self, u: f64) -> f64 {
        (self.c - self.b * u).abs()
    }

    pub fn with_energy(&self, e: f64) -> Self {
        Self { e, ..*self }
    }
}

pub fn f_radial(u: f64, p: &KlmnParams) -> f64 {
    let w = p.c - p.b * u;
    2.0 * (p.e + p.mu * u - 0.5 * u * u * w * w)
}

/// Binomial coefficients: `a0 = −B²`, `4a1 = 2BC`, `6a2 = −C²`, `4a3 = 2μ`, `a4 = 2E`.
pub fn as_quartic(p: &KlmnParams) -> QuarticCoeffs {
    QuarticCoeffs::new(-p.b * p.b, 0.5 * p.b * p.c, -p.c * p.c / 6.0, 0.5 * p.mu, 2.0 * p.e)
}

pub fn v_eff(r: f64, p: &KlmnParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::DomainError(format!("radius r = {r} must be positive")));
    }
    Ok(p.e - 0.5 * f_radial(1.0 / r, p))
}

/// `dV_eff/dr = f′(1/r) / (2r²)`.
pub fn v_eff_prime(r: f64, p: &KlmnParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::DomainError(format!("radius r = {r} must be positive")));
    }
    Ok(p.f_prime(1.0 / r) / (2.0 * r * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WellCase {
    OneWell,
    TwoWell,
    CriticalRepeated,
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellClassification {
    pub case_id: WellCase,
    /// Critical radii of `V_eff`, ascending in `r`.
    pub critical_radii: Vec<(f64, CriticalKind)>,
    /// Bounded wells `(u_lo, u_hi)` between consecutive roots of `f` with `f > 0` inside.
    pub accessible_intervals: Vec<(f64, f64)>,
}

/// `C⁶/(μ²B²)`, the quantity compared against 108 and (27/2)².
pub fn critical_ratio(p: &KlmnParams) -> f64 {
    p.c.powi(6) / (p.mu * p.mu * p.b * p.b)
}

/// Real roots of the stability cubic `u³ − (3C/2B)u² + (C²/2B²)u − μ/(2B²) = 0`
/// (equivalently `f′(u) = 0`) in trigonometric/hyperbolic closed form, ascending.
pub fn stability_roots(p: &KlmnParams) -> Result<Vec<f64>> {
    if p.b == 0.0 {
        return Err(Error::DomainError("closed-form critical radii need B ≠ 0".into()));
    }
    let ratio = critical_ratio(p);
    if (ratio / CRITICAL_RATIO - 1.0).abs() < CLASSIFY_TOL {
        return Err(Error::DegenerateCase(format!("C⁶/(μ²B²) = {ratio} is the critical value 108")));
    }
    let (b, c) = (p.b, p.c);
    let shift = c / (2.0 * b);
    let amp = c.abs() / (3f64.sqrt() * b.abs());
    let arg = 6.0 * 3f64.sqrt() * p.mu * b.abs() / c.abs().powi(3);
    let cubic = [1.0, -1.5 * c / b, 0.5 * c * c / (b * b), -0.5 * p.mu / (b * b)];
    let mut roots: Vec<f64> = if c == 0.0 {
        vec![(0.5 * p.mu / (b * b)).cbrt()]
    } else if arg < 1.0 {
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| shift + amp * (theta - 2.0 * PI * k as f64 / 3.0).cos()).collect()
    } else {
        vec![shift + amp * (arg.acosh() / 3.0).cosh()]
    };
    for r in roots.iter_mut() {
        *r = poly::polish_real(&cubic, *r);
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Positive real roots of `f`, ascending. Uses λ-analysis for `B ≠ 0`.
pub fn positive_roots(p: &KlmnParams) -> Vec<f64> {
    real_roots(p).into_iter().filter(|&u| u > 0.0).collect()
}

/// Real roots of `f`, ascending.
pub fn real_roots(p: &KlmnParams) -> Vec<f64> {
    if p.b == 0.0 {
        if p.c == 0.0 {
            return if p.mu != 0.0 { vec![-p.e / p.mu] } else { Vec::new() };
        }
        let disc = p.mu * p.mu + 2.0 * p.e * p.c * p.c;
        if disc < 0.0 {
            return Vec::new();
        }
        let s = disc.sqrt();
        let mut r = vec![(p.mu - s) / (p.c * p.c), (p.mu + s) / (p.c * p.c)];
        r.sort_by(f64::total_cmp);
        return r;
    }
    let coeffs = p.quartic().monomial();
    let candidates: Vec<Complex64> = match lambda_resolvent(p) {
        Ok(ls) => {
            let lam = ls.iter().copied().fold(f64::NAN, f64::max);
            quartic_roots_lambda(p, lam).to_vec()
        }
        Err(_) => poly::roots(&coeffs),
    };
    let scale = 1.0 + (p.c / p.b).abs();
    let mut r: Vec<f64> = candidates
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-7 * scale)
        .map(|z| poly::polish_real(&coeffs, z.re))
        .collect();
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    r
}

/// Bounded wells between consecutive positive roots with `f > 0` inside.
pub fn accessible_intervals(p: &KlmnParams) -> Vec<(f64, f64)> {
    let roots = positive_roots(p);
    roots
        .windows(2)
        .filter(|w| p.f(0.5 * (w[0] + w[1])) > 0.0)
        .map(|w| (w[0], w[1]))
        .collect()
}

pub fn classify_wells(p: &KlmnParams) -> Result<WellClassification> {
    let intervals = accessible_intervals(p);
    if p.b == 0.0 {
        let radii = if p.c != 0.0 { vec![(p.c * p.c / p.mu, CriticalKind::Min)] } else { Vec::new() };
        return Ok(WellClassification { case_id: WellCase::OneWell, critical_radii: radii, accessible_intervals: intervals });
    }
    let ratio = critical_ratio(p);
    if (ratio / CRITICAL_RATIO - 1.0).abs() < CLASSIFY_TOL {
        let cubic = [1.0, -1.5 * p.c / p.b, 0.5 * p.c * p.c / (p.b * p.b), -0.5 * p.mu / (p.b * p.b)];
        let mut radii: Vec<(f64, CriticalKind)> =
            poly::real_roots(&cubic, 1e-6).into_iter().filter(|&u| u > 0.0).map(|u| (1.0 / u, kind_at(p, u))).collect();
        radii.sort_by(|a, b| a.0.total_cmp(&b.0));
        return Ok(WellClassification { case_id: WellCase::CriticalRepeated, critical_radii: radii, accessible_intervals: intervals });
    }
    let us = stability_roots(p)?;
    let mut radii: Vec<(f64, CriticalKind)> = us.iter().filter(|&&u| u > 0.0).map(|&u| (1.0 / u, kind_at(p, u))).collect();
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let minima = radii.iter().filter(|r| r.1 == CriticalKind::Min).count();
    let case_id = if (ratio / ESCAPE_RATIO - 1.0).abs() < CLASSIFY_TOL {
        WellCase::Escape
    } else if minima >= 2 {
        WellCase::TwoWell
    } else {
        WellCase::OneWell
    };
    Ok(WellClassification { case_id, critical_radii: radii, accessible_intervals: intervals })
}

/// `V_eff″ = −f″(u)u⁴/2` at a critical point, so `f″ < 0` is a minimum.
fn kind_at(p: &KlmnParams, u: f64) -> CriticalKind {
    let f2 = p.quartic().derivatives(u)[2];
    if f2 < 0.0 {
        CriticalKind::Min
    } else {
        CriticalKind::Max
    }
}

/// Positive real roots of `λ³ − (C²/B²)λ² + (4/B³)(μC + 2BE)λ − 4μ²/B⁴ = 0`.
pub fn lambda_resolvent(p: &KlmnParams) -> Result<Vec<f64>> {
    if p.b == 0.0 {
        return Err(Error::DomainError("λ-analysis needs B ≠ 0".into()));
    }
    let (b, c) = (p.b, p.c);
    let cubic = [1.0, -c * c / (b * b), 4.0 / b.powi(3) * (p.mu * c + 2.0 * b * p.e), -4.0 * p.mu * p.mu / b.powi(4)];
    let mut out: Vec<f64> = poly::real_roots(&cubic, 1e-9)
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| poly::polish_real(&cubic, l))
        .collect();
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs());
    if out.is_empty() {
        return Err(Error::NoPositiveRoot);
    }
    Ok(out)
}

/// The four roots `(1/2B){C ± B√λ ± √(C² − B²λ ± 4μ/√λ)}` with the printed pairings.
pub fn quartic_roots_lambda(p: &KlmnParams, lambda: f64) -> [Complex64; 4] {
    let (b, c) = (p.b, p.c);
    let s = lambda.sqrt();
    let plus = Complex64::new(c * c - b * b * lambda + 4.0 * p.mu / s, 0.0).sqrt();
    let minus = Complex64::new(c * c - b * b * lambda - 4.0 * p.mu / s, 0.0).sqrt();
    let k = 1.0 / (2.0 * b);
    [
        k * (c + b * s + plus),
        k * (c + b * s - plus),
        k * (c - b * s + minus),
        k * (c - b * s - minus),
    ]
}

/// Roots near the double root `u1` of `f/2` at `E = 0` (unstable circular
/// orbit), to second order in the Puiseux series:
/// `u = u1 ± √(−2E/g″) + g‴E/(3g″²)` with `g = f/2` at `E = 0`.
pub fn puiseux_escape_roots(p: &KlmnParams, u1: f64) -> Result<(f64, f64)> {
    let d = p.with_energy(0.0).quartic().derivatives(u1);
    let (g2, g3) = (0.5 * d[2], 0.5 * d[3]);
    let ratio = -2.0 * p.e / g2;
    if !(ratio >= 0.0) {
        return Err(Error::DomainError(format!("−2E/g″(u1) = {ratio} is negative; the escape roots are complex")));
    }
    let s = ratio.sqrt();
    let shift = g3 * p.e / (3.0 * g2 * g2);
    Ok((u1 - s + shift, u1 + s + shift))
}

/// Double root `C/(3B)` of `f` at `E = 0` on the escape threshold.
pub fn escape_double_root(p: &KlmnParams) -> Result<f64> {
    if p.b == 0.0 {
        return Err(Error::DomainError("escape root needs B ≠ 0".into()));
    }
    Ok(p.c / (3.0 * p.b))
}

/// Monomial coefficients (highest first) of the small-`|B/C|` quartic
/// `Q_B(u) = (2/C²)(E + a1 u + a2 u² + a3 u³ + a4 u⁴)`.
pub fn q_b_monomial(p: &KlmnParams) -> [f64; 5] {
    let (mu, b, c, e) = (p.mu, p.b, p.c, p.e);
    let a1 = 2.0 * b * e / c + mu;
    let a2 = 3.0 * b * b * e / (c * c) + 2.0 * b * mu / c - 0.5 * c * c;
    let a3 = 3.0 * b * b * mu / (c * c) + 4.0 * b.powi(3) * e / c.powi(3);
    let a4 = 4.0 * b.powi(3) * mu / c.powi(3);
    let k = 2.0 / (c * c);
    [k * a4, k * a3, k * a2, k * a1, k * e]
}

/// Product of the roots of `Q_B`, `(E/4μ)(C/B)³`.
pub fn q_b_root_product(p: &KlmnParams) -> f64 {
    p.e / (4.0 * p.mu) * (p.c / p.b).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourRealReduction {
    pub angle: f64,
    pub k: f64,
    pub value: f64,
}

/// `∫_u^a dt/√((a−t)(t−b)(t−c)(t−d)) = g F(φ, k)` for `a > b > c > d`, `u ∈ [b, a]`.
pub fn legendre_theta_four_real(a: f64, b: f64, c: f64, d: f64, u: f64) -> Result<FourRealReduction> {
    if !(a > b && b > c && c > d) {
        return Err(Error::OrderingError(format!("need a > b > c > d, got {a}, {b}, {c}, {d}")));
    }
    if !(u >= b && u <= a) {
        return Err(Error::RangeError(format!("u = {u} outside [{b}, {a}]")));
    }
    let k = ((a - b) * (c - d) / ((a - c) * (b - d))).sqrt();
    let x = ((b - d) * (a - u) / ((a - b) * (u - d))).clamp(0.0, 1.0);
    let angle = x.sqrt().asin();
    let g = 2.0 / ((a - c) * (b - d)).sqrt();
    Ok(FourRealReduction { angle, k, value: g * legendre_f(angle, k)? })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRealReduction {
    pub phi: f64,
    pub h: f64,
    pub g: f64,
    pub value: f64,
}

/// `∫_b^u dt/√((a−t)(t−b)((t−m)² + n²)) = g F(φ, h)` for `a > b`, `n ≠ 0`.
pub fn legendre_theta_two_real(a: f64, b: f64, m: f64, n: f64, u: f64) -> Result<TwoRealReduction> {
    if !(a > b) || n == 0.0 {
        return Err(Error::OrderingError(format!("need a > b and n ≠ 0, got a = {a}, b = {b}, n = {n}")));
    }
    if !(u >= b && u <= a) {
        return Err(Error::RangeError(format!("u = {u} outside [{b}, {a}]")));
    }
    let big_a = ((a - m).powi(2) + n * n).sqrt();
    let big_b = ((b - m).powi(2) + n * n).sqrt();
    let h2 = (((a - b).powi(2) - (big_a - big_b).powi(2)) / (4.0 * big_a * big_b)).clamp(0.0, 1.0);
    let h = h2.sqrt();
    let num = (a - u) * big_b - (u - b) * big_a;
    let den = (a - u) * big_b + (u - b) * big_a;
    let phi = (num / den).clamp(-1.0, 1.0).acos();
    let g = 1.0 / (big_a * big_b).sqrt();
    Ok(TwoRealReduction { phi, h, g, value: g * legendre_f(phi, h)? })
}

/// Label of a point of the dimensionless `(Z, W)` bifurcation plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BifurcationLabel {
    Origin,
    OneWell,
    TwoWell,
    CriticalRepeated,
    Escape,
}

/// Parameters `(μ = 1, B = 1, C = κ^{1/3}, E = −Z^{1/3})` with `κ = (W+Z)³/Z²`,
/// so that `C³/(μB) = κ`: the curve `(W+Z)³ = ±6√3 Z²` maps onto the
/// critical value of `C³/(μB)`.
pub fn bifurcation_params(z: f64, w: f64) -> Option<KlmnParams> {
    if z == 0.0 {
        return None;
    }
    let kappa = (w + z).powi(3) / (z * z);
    KlmnParams::new(1.0, 1.0, kappa.cbrt(), -z.cbrt()).ok()
}

pub fn bifurcation_label(z: f64, w: f64) -> BifurcationLabel {
    match bifurcation_params(z, w) {
        None => BifurcationLabel::Origin,
        Some(p) => match classify_wells(&p).map(|c| c.case_id) {
            Ok(WellCase::OneWell) => BifurcationLabel::OneWell,
            Ok(WellCase::TwoWell) => BifurcationLabel::TwoWell,
            Ok(WellCase::Escape) => BifurcationLabel::Escape,
            Ok(WellCase::CriticalRepeated) | Err(_) => BifurcationLabel::CriticalRepeated,
        },
    }
}
