//! Semi-classical spirals: the two-centre (and restoring-force) gradient flow
//! in elliptic coordinates, the circular galaxy spiral, ring statistics along
//! KLMN orbits, and the gaussian entropies/normalisations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_k, legendre_e};
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::orbits::{klmn_periodicity, KlmnOrbit};
use crate::quad;

// ---------------------------------------------------------------------------
// Elliptic coordinates

/// `X + iY = c cosh(ξ + iη)`, with `ξ ≥ 0` and `η ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub xi: f64,
    pub eta: f64,
    pub c: f64,
}

/// Which side of the focal segment an on-cut point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSide {
    Upper,
    Lower,
}

impl EllipticPoint {
    pub fn new(xi: f64, eta: f64, c: f64) -> Self {
        Self { xi, eta, c }
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        elliptic_to_cart(self.xi, self.eta, self.c)
    }

    /// `cosh²ξ − cos²η`; the squared scale factor is `c²` times this.
    pub fn metric(&self) -> f64 {
        self.xi.cosh().powi(2) - self.eta.cos().powi(2)
    }
}

pub fn elliptic_to_cart(xi: f64, eta: f64, c: f64) -> (f64, f64) {
    (c * xi.cosh() * eta.cos(), c * xi.sinh() * eta.sin())
}

pub fn cart_to_elliptic(x: f64, y: f64, c: f64, side: Option<CutSide>) -> Result<EllipticPoint> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("focal half-distance c must be positive".into()));
    }
    if y.abs() <= 1e-12 * c && x.abs() < c {
        let eta = (x / c).acos();
        return match side {
            Some(CutSide::Upper) => Ok(EllipticPoint::new(0.0, eta, c)),
            Some(CutSide::Lower) => Ok(EllipticPoint::new(0.0, 2.0 * PI - eta, c)),
            None => Err(Error::OnCut),
        };
    }
    let w = (Complex64::new(x, y) / c).acosh();
    let (mut xi, mut eta) = (w.re, w.im);
    if xi < 0.0 {
        xi = -xi;
        eta = -eta;
    }
    Ok(EllipticPoint::new(xi, eta.rem_euclid(2.0 * PI), c))
}

// ---------------------------------------------------------------------------
// Two-centre semi-classical field

/// Two centres `μ1` at `(c, 0)`, `μ2` at `(−c, 0)`, with `γ = α²/c²` and the
/// special energy `E = −(μ1+μ2)²/(4α²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiClassicalParams {
    pub mu1: f64,
    pub mu2: f64,
    pub c: f64,
    pub alpha2: f64,
    pub eps2: f64,
}

impl SemiClassicalParams {
    pub fn new(mu1: f64, mu2: f64, c: f64, alpha2: f64, eps2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 >= 0.0 && c > 0.0 && alpha2 > 0.0 && eps2 >= 0.0) {
            return Err(Error::InvalidParameter("need μ1 > 0, μ2 ≥ 0, c > 0, α² > 0, ε² ≥ 0".into()));
        }
        Ok(Self { mu1, mu2, c, alpha2, eps2 })
    }

    pub fn energy(&self) -> f64 {
        -(self.mu1 + self.mu2).powi(2) / (4.0 * self.alpha2)
    }

    pub fn cosh_xi0(&self) -> f64 {
        2.0 * self.alpha2 / (self.c * (self.mu1 + self.mu2))
    }

    /// `v0 = −k (cosh ξ − cosh ξ0)`, `k = c(μ1+μ2)/√(2α²)`, signed so that `R` peaks at `ξ0`.
    fn k(&self) -> f64 {
        self.c * (self.mu1 + self.mu2) / (2.0 * self.alpha2).sqrt()
    }

    pub fn v0(&self, xi: f64) -> f64 {
        -self.k() * (xi.cosh() - self.cosh_xi0())
    }

    pub fn v0_sq(&self, xi: f64) -> f64 {
        let ch = xi.cosh();
        -2.0 * self.c * self.c * self.energy() * ch * ch - 2.0 * self.c * (self.mu1 + self.mu2) * ch + 2.0 * self.alpha2
    }

    pub fn u0_sq(&self, eta: f64) -> f64 {
        let cs = eta.cos();
        -2.0 * self.c * self.c * self.energy() * cs * cs + 2.0 * self.c * (self.mu1 - self.mu2) * cs + 2.0 * self.alpha2
    }

    pub fn u0(&self, eta: f64) -> f64 {
        self.u0_sq(eta).sqrt()
    }

    /// `v1 = −v0′/(2 v0)`, switched off within `1e−12` of the ellipse.
    pub fn v1(&self, xi: f64) -> f64 {
        let gap = xi.cosh() - self.cosh_xi0();
        if gap.abs() < 1e-12 {
            return 0.0;
        }
        -xi.sinh() / (2.0 * gap)
    }

    /// `u1 = −u0′/(2 u0) = −(u0²)′/(4 u0²)`.
    pub fn u1(&self, eta: f64) -> f64 {
        let (cs, sn) = (eta.cos(), eta.sin());
        let d = (-4.0 * self.c * self.c * self.energy() * cs + 2.0 * self.c * (self.mu1 - self.mu2)) * (-sn);
        -d / (4.0 * self.u0_sq(eta))
    }

    pub fn potential(&self, xi: f64, eta: f64) -> f64 {
        let (ch, cs) = (xi.cosh(), eta.cos());
        -(self.mu1 / (ch - cs) + self.mu2 / (ch + cs)) / self.c
    }

    /// `R = k(cosh ξ0·ξ − sinh ξ) − (ε²/2)(ln|v0| + ln u0)`.
    pub fn r_function(&self, xi: f64, eta: f64) -> f64 {
        let r0 = self.k() * (self.cosh_xi0() * xi - xi.sinh());
        if self.eps2 == 0.0 {
            return r0;
        }
        r0 - 0.5 * self.eps2 * (self.v0(xi).abs().ln() + self.u0(eta).ln())
    }
}

/// `2|f′(w)|²(V − E) − (v0² − u0²)` with `f(w) = c cosh w`.
pub fn dqlc_residual(pt: &EllipticPoint, sp: &SemiClassicalParams) -> f64 {
    let lhs = 2.0 * sp.c * sp.c * pt.metric() * (sp.potential(pt.xi, pt.eta) - sp.energy());
    lhs - (sp.v0_sq(pt.xi) - sp.u0_sq(pt.eta))
}

/// Restoring-force special case `E = −ω²c²/2`, `γ² = 3a⁴ω²c⁴`,
/// `a = (1/c)((μ1+μ2)/(2ω²))^{1/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestoringParams {
    pub mu1: f64,
    pub mu2: f64,
    pub c: f64,
    pub omega: f64,
}

impl RestoringParams {
    pub fn new(mu1: f64, mu2: f64, c: f64, omega: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 >= 0.0 && c > 0.0 && omega > 0.0) {
            return Err(Error::InvalidParameter("need μ1 > 0, μ2 ≥ 0, c > 0, ω > 0".into()));
        }
        Ok(Self { mu1, mu2, c, omega })
    }

    pub fn a(&self) -> f64 {
        ((self.mu1 + self.mu2) / (2.0 * self.omega * self.omega)).cbrt() / self.c
    }

    pub fn energy(&self) -> f64 {
        -0.5 * self.omega * self.omega * self.c * self.c
    }

    pub fn gamma2(&self) -> f64 {
        3.0 * self.a().powi(4) * (self.omega * self.c * self.c).powi(2)
    }

    /// `v0 = −ωc²(cosh ξ − a)√((cosh ξ + a)² + 2a²)`.
    pub fn v0(&self, xi: f64) -> f64 {
        let (a, ch) = (self.a(), xi.cosh());
        -self.omega * self.c * self.c * (ch - a) * ((ch + a).powi(2) + 2.0 * a * a).sqrt()
    }

    pub fn v0_sq(&self, xi: f64) -> f64 {
        restoring_v0_sq(xi, self.mu1 + self.mu2, self.c, self.omega, self.energy(), self.gamma2())
    }

    pub fn u0_sq(&self, eta: f64) -> f64 {
        restoring_u0_sq(eta, self.mu1 - self.mu2, self.c, self.omega, self.energy(), self.gamma2())
    }

    /// Minimum of `u0²` over `η` (scan plus golden refinement).
    pub fn u0_sq_min(&self) -> f64 {
        let n = 720;
        let (mut best, mut at) = (f64::INFINITY, 0.0);
        for k in 0..n {
            let eta = 2.0 * PI * k as f64 / n as f64;
            let v = self.u0_sq(eta);
            if v < best {
                best = v;
                at = eta;
            }
        }
        let h = 2.0 * PI / n as f64;
        let (mut lo, mut hi) = (at - h, at + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if self.u0_sq(m1) < self.u0_sq(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best.min(self.u0_sq(0.5 * (lo + hi)))
    }

    pub fn potential(&self, xi: f64, eta: f64) -> f64 {
        let (ch, cs) = (xi.cosh(), eta.cos());
        -(self.mu1 / (ch - cs) + self.mu2 / (ch + cs)) / self.c
            + 0.5 * (self.omega * self.c).powi(2) * (ch * ch + cs * cs - 1.0)
    }
}

/// `ω²c⁴cosh⁴ξ − c²(2E + ω²c²)cosh²ξ − 2c(μ1+μ2)cosh ξ + γ²`.
pub fn restoring_v0_sq(xi: f64, mu_sum: f64, c: f64, omega: f64, e: f64, gamma2: f64) -> f64 {
    let ch = xi.cosh();
    let w2 = omega * omega;
    w2 * c.powi(4) * ch.powi(4) - c * c * (2.0 * e + w2 * c * c) * ch * ch - 2.0 * c * mu_sum * ch + gamma2
}

/// `ω²c⁴cos⁴η − c²(2E + ω²c²)cos²η + 2c(μ1−μ2)cos η + γ²`.
pub fn restoring_u0_sq(eta: f64, mu_diff: f64, c: f64, omega: f64, e: f64, gamma2: f64) -> f64 {
    let cs = eta.cos();
    let w2 = omega * omega;
    w2 * c.powi(4) * cs.powi(4) - c * c * (2.0 * e + w2 * c * c) * cs * cs + 2.0 * c * mu_diff * cs + gamma2
}

/// The field driving a spiral in `(ξ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpiralField {
    TwoCentre(SemiClassicalParams),
    Restoring(RestoringParams),
}

impl SpiralField {
    pub fn c(&self) -> f64 {
        match self {
            Self::TwoCentre(p) => p.c,
            Self::Restoring(p) => p.c,
        }
    }

    /// `cosh ξ` of the limiting ellipse.
    pub fn cosh_limit(&self) -> f64 {
        match self {
            Self::TwoCentre(p) => p.cosh_xi0(),
            Self::Restoring(p) => p.a(),
        }
    }

    /// `(ξ̇, η̇) = (∂ξ(R+S), ∂η(R+S)) / (c²(cosh²ξ − cos²η))`.
    pub fn drift(&self, xi: f64, eta: f64) -> Result<(f64, f64)> {
        let c = self.c();
        let h2 = c * c * (xi.cosh().powi(2) - eta.cos().powi(2));
        if h2.abs() < 1e-14 * c * c {
            return Err(Error::ScaleFactorZero);
        }
        let (a, b) = match self {
            Self::TwoCentre(p) => (p.v0(xi) + p.eps2 * p.v1(xi), p.u0(eta) + p.eps2 * p.u1(eta)),
            Self::Restoring(p) => (p.v0(xi), p.u0_sq(eta).max(0.0).sqrt()),
        };
        Ok((a / h2, b / h2))
    }

    /// The potential `R` whose growth drives the approach to the ellipse.
    pub fn r_function(&self, xi: f64, eta: f64) -> f64 {
        match self {
            Self::TwoCentre(p) => p.r_function(xi, eta),
            Self::Restoring(p) => {
                let f = |x: f64| p.v0(x);
                quad::integrate(f, 0.0, xi).unwrap_or(f64::NAN)
            }
        }
    }
}

pub fn two_centre_drift(pt: &EllipticPoint, sp: &SemiClassicalParams) -> Result<(f64, f64)> {
    SpiralField::TwoCentre(*sp).drift(pt.xi, pt.eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralSample {
    pub t: f64,
    pub xi: f64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralTrace {
    pub samples: Vec<SpiralSample>,
    /// `|cosh ξ(T) − cosh ξ_limit|`.
    pub terminal_gap: f64,
    /// Steps on which the path passed through the focal segment.
    pub cut_crossings: usize,
}

/// Fixed-step RK4 of the spiral flow; a step that drives `ξ` negative is
/// continued through the cut as `(−ξ, −η)`, the same cartesian point.
pub fn two_centre_spiral_integrate(start: EllipticPoint, field: &SpiralField, t_end: f64, dt: f64) -> Result<SpiralTrace> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter("need T > 0 and dt > 0".into()));
    }
    let c = field.c();
    if (start.c - c).abs() > 1e-12 * c {
        return Err(Error::InvalidParameter("start point uses a different focal distance".into()));
    }
    let n = (t_end / dt).ceil() as usize;
    let h = t_end / n as f64;
    let failed = std::cell::Cell::new(None);
    let rhs = |_: f64, s: &[f64; 2]| match field.drift(s[0], s[1]) {
        Ok((a, b)) => [a, b],
        Err(e) => {
            failed.set(Some(e));
            [0.0, 0.0]
        }
    };
    let sample = |t: f64, s: &[f64; 2]| {
        let (x, y) = elliptic_to_cart(s[0], s[1], c);
        SpiralSample { t, xi: s[0], eta: s[1].rem_euclid(2.0 * PI), x, y }
    };
    let mut state = [start.xi, start.eta];
    let mut samples = vec![sample(0.0, &state)];
    let mut crossings = 0;
    for k in 0..n {
        let t = k as f64 * h;
        let mut next = rk4_step(&rhs, t, &state, h);
        if let Some(e) = failed.take() {
            return Err(e);
        }
        if next[0] < 0.0 {
            next = [-next[0], -next[1]];
            crossings += 1;
        }
        state = next;
        samples.push(sample(t + h, &state));
    }
    let terminal_gap = (state[0].cosh() - field.cosh_limit()).abs();
    Ok(SpiralTrace { samples, terminal_gap, cut_crossings: crossings })
}

// ---------------------------------------------------------------------------
// Circular galaxy spiral

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalaxySpiralParams {
    pub mu: f64,
    pub lambda: f64,
    pub sigma2: f64,
}

impl GalaxySpiralParams {
    pub fn new(mu: f64, lambda: f64, sigma2: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda > 0.0 && sigma2 > 0.0 && sigma2 < lambda) {
            return Err(Error::InvalidParameter("need μ > 0, λ > 0 and 0 < σ² < λ".into()));
        }
        Ok(Self { mu, lambda, sigma2 })
    }

    pub fn energy(&self) -> f64 {
        -self.mu * self.mu / (2.0 * self.lambda * self.lambda)
    }

    pub fn r_c(&self) -> f64 {
        self.lambda * (self.lambda - self.sigma2) / self.mu
    }

    pub fn alpha(&self) -> f64 {
        (self.lambda - self.sigma2) / (self.lambda + self.sigma2)
    }

    /// `dr/dt = (λ(λ−σ²) − μr)/(λr)`.
    pub fn radial_rate(&self, r: f64) -> f64 {
        (self.lambda * (self.lambda - self.sigma2) - self.mu * r) / (self.lambda * r)
    }

    /// Planar `dφ/dt = (λ+σ²)/ρ²`.
    pub fn angular_rate(&self, rho: f64) -> f64 {
        (self.lambda + self.sigma2) / (rho * rho)
    }

    pub fn v_eff(&self, x: f64, y: f64, z: f64) -> f64 {
        let r = (x * x + y * y + z * z).sqrt();
        let (l, s2) = (self.lambda, self.sigma2);
        self.mu / (l * r) * (l - s2) - (l * l + s2 * s2) / (x * x + y * y) - self.mu * self.mu / (l * l)
    }
}

pub fn galaxy_spiral_rhs(x: f64, y: f64, z: f64, gp: &GalaxySpiralParams) -> Result<[f64; 3]> {
    let q = x * x + y * y;
    if q == 0.0 {
        return Err(Error::AxisSingularity);
    }
    let r = (q + z * z).sqrt();
    let (l, s2, k) = (gp.lambda, gp.sigma2, gp.mu / (gp.lambda * r));
    Ok([
        -k * x + (l * (x - y) - s2 * (x + y)) / q,
        -k * y + (l * (x + y) + s2 * (x - y)) / q,
        -k * z,
    ])
}

/// RK4 path of the galaxy field, `n` steps over `[0, t_end]`.
pub fn galaxy_integrate(start: [f64; 3], gp: &GalaxySpiralParams, t_end: f64, n: usize, every: usize) -> Result<Vec<(f64, [f64; 3])>> {
    if start[0] == 0.0 && start[1] == 0.0 {
        return Err(Error::AxisSingularity);
    }
    let f = |_: f64, s: &[f64; 3]| galaxy_spiral_rhs(s[0], s[1], s[2], gp).unwrap_or([f64::NAN; 3]);
    let path = crate::ode::rk4_path(f, 0.0, start, t_end, n, every);
    if path.iter().any(|(_, s)| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::AxisSingularity);
    }
    Ok(path)
}

/// `r(t)` from `|r_c − r| e^{(r − r0)/r_c} = |r_c − r0| e^{−μt/(λ r_c)}`,
/// solved for `w = ln|r − r_c|` by Newton.
pub fn galaxy_r_of_t(t: f64, r0: f64, gp: &GalaxySpiralParams) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::DomainError("initial radius must be positive".into()));
    }
    let rc = gp.r_c();
    let x0 = r0 - rc;
    if x0 == 0.0 {
        return Ok(rc);
    }
    let s = x0.signum();
    let target = x0.abs().ln() + x0 / rc - gp.mu * t / (gp.lambda * rc);
    // h(w) = w + s e^w / r_c − target, increasing on the admissible range
    let mut w = x0.abs().ln() - gp.mu * t / (gp.lambda * rc);
    if s < 0.0 {
        w = w.min(rc.ln() - 1e-12);
    }
    for _ in 0..100 {
        let ew = w.exp();
        let h = w + s * ew / rc - target;
        let dh = 1.0 + s * ew / rc;
        let mut step = h / dh;
        if s < 0.0 && w - step >= rc.ln() {
            step = 0.5 * (w - rc.ln());
        }
        w -= step;
        if step.abs() < 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(rc + s * w.exp())
}

/// `z(t) = z0 exp(−μ(r − r0)/(λ(λ−σ²))) exp(−μ² t/(λ²(λ−σ²)))`.
pub fn galaxy_z_of_t(t: f64, r0: f64, z0: f64, gp: &GalaxySpiralParams) -> Result<f64> {
    let r = galaxy_r_of_t(t, r0, gp)?;
    let d = gp.lambda - gp.sigma2;
    Ok(z0 * (-gp.mu * (r - r0) / (gp.lambda * d)).exp() * (-gp.mu * gp.mu * t / (gp.lambda * gp.lambda * d)).exp())
}

/// Outer-branch planar spiral `ρ(φ) = r_c/(1 − b e^{−αφ})`, `b = (ρ0 − r_c)/ρ0`.
pub fn galaxy_rho_of_phi(phi: f64, rho0: f64, gp: &GalaxySpiralParams) -> Result<f64> {
    let rc = gp.r_c();
    if !(rho0 > rc) {
        return Err(Error::BranchError(format!("outer branch needs ρ0 > r_c = {rc}")));
    }
    let b = (rho0 - rc) / rho0;
    Ok(rc / (1.0 - b * (-gp.alpha() * phi).exp()))
}

/// `(r, z, ρ)`: `r`, `z` at time `t` from `(r0, z0)`, and the planar `ρ` at angle `φ` from `ρ0`.
pub fn galaxy_closed_form(t: f64, phi: f64, gp: &GalaxySpiralParams, r0: f64, z0: f64, rho0: f64) -> Result<(f64, f64, f64)> {
    Ok((galaxy_r_of_t(t, r0, gp)?, galaxy_z_of_t(t, r0, z0, gp)?, galaxy_rho_of_phi(phi, rho0, gp)?))
}

/// Arc length of the outer spiral from `φ = 0`:
/// `(r_c/α)[sinh⁻¹(s/(α(1−s))) − √((1+α²)s² − 2α²s + α²)/s]` between `s = 1−b` and `s = 1−b e^{−αφ}`.
pub fn arc_length(phi: f64, gp: &GalaxySpiralParams, rho0: f64) -> Result<f64> {
    let rc = gp.r_c();
    if !(rho0 > rc) {
        return Err(Error::BranchError(format!("outer branch needs ρ0 > r_c = {rc}")));
    }
    if phi < 0.0 {
        return Err(Error::DomainError("arc length needs φ ≥ 0".into()));
    }
    let (a, b) = (gp.alpha(), (rho0 - rc) / rho0);
    let g = |s: f64| (s / (a * (1.0 - s))).asinh() - ((1.0 + a * a) * s * s - 2.0 * a * a * s + a * a).sqrt() / s;
    Ok(rc / a * (g(1.0 - b * (-a * phi).exp()) - g(1.0 - b)))
}

/// Least-squares slope of `ln|ρ − r_c|` against `φ`, negated.
pub fn decay_exponent(phis: &[f64], rhos: &[f64], r_c: f64) -> Result<f64> {
    if phis.len() != rhos.len() || phis.len() < 2 {
        return Err(Error::InvalidParameter("need matching samples, at least two".into()));
    }
    let logs: Vec<f64> = rhos.iter().map(|r| (r - r_c).abs().ln()).collect();
    Ok(-crate::orbits::fit_slope(phis, &logs))
}

// ---------------------------------------------------------------------------
// Gaussian entropies and normalisations

/// An elliptic orbit `l/r = 1 + e cos θ` about a single centre or as a two-centre ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EntropyMode {
    /// Semi-major axis `a` about strength `μ`.
    Kepler { mu: f64, a: f64, e: f64 },
    /// Semi-major axis `A` about strengths summing to `mu_sum`.
    TwoCentre { mu_sum: f64, a: f64, e: f64 },
}

impl EntropyMode {
    fn parts(&self) -> (f64, f64, f64) {
        match *self {
            Self::Kepler { mu, a, e } => (mu, a, e),
            Self::TwoCentre { mu_sum, a, e } => (mu_sum, a, e),
        }
    }

    fn check(&self) -> Result<()> {
        let (m, a, e) = self.parts();
        if !(m > 0.0 && a > 0.0 && (0.0..1.0).contains(&e)) {
            return Err(Error::InvalidParameter("need μ > 0, a > 0 and 0 ≤ e < 1".into()));
        }
        Ok(())
    }

    /// `r0(θ) = a(1 − e²)/(1 + e cos θ)`.
    pub fn r0(&self, theta: f64) -> f64 {
        let (_, a, e) = self.parts();
        a * (1.0 - e * e) / (1.0 + e * theta.cos())
    }

    /// `κ(θ)` with `𝓔 = −κ(θ)(r − r0(θ))²`.
    pub fn curvature(&self, theta: f64, eps: f64) -> f64 {
        let (m, a, e) = self.parts();
        let cs = theta.cos();
        let base = (m / a.powi(3)).sqrt() / (2.0 * eps * eps);
        match self {
            Self::TwoCentre { .. } => {
                base * (1.0 + e * cs).powi(4) / ((1.0 - e * e).sqrt() * (1.0 + e * e + 2.0 * e * cs).powi(2))
            }
            Self::Kepler { .. } => {
                base * (1.0 + e * cs).powi(3) / ((1.0 - e * e) * (1.0 + 3.0 * e * e + e * (3.0 + e * e) * cs))
            }
        }
    }
}

pub fn entropy(r: f64, theta: f64, eps: f64, mode: &EntropyMode) -> Result<f64> {
    mode.check()?;
    Ok(-mode.curvature(theta, eps) * (r - mode.r0(theta)).powi(2))
}

/// `N⁻²` from the closed forms: elliptic integrals for Kepler,
/// `(2π)^{3/2} A (A³/(μ1+μ2))^{1/4} (1−e²)^{3/4} ε` for two centres.
pub fn normalisation(mode: &EntropyMode, eps: f64) -> Result<f64> {
    mode.check()?;
    let (m, a, e) = mode.parts();
    let scale = a * (a.powi(3) / m).powf(0.25) * eps;
    match mode {
        EntropyMode::Kepler { .. } => {
            let k = 2.0 * e.sqrt() / (1.0 + e);
            let (kk, ee) = (complete_k(k)?, legendre_e(PI / 2.0, k)?);
            Ok(2.0 * (2.0 * PI).sqrt() / 3.0 * scale * (1.0 + e) * ((1.0 - e).powi(2) * kk + (5.0 - e * e) * ee))
        }
        EntropyMode::TwoCentre { .. } => Ok((2.0 * PI).powf(1.5) * scale * (1.0 - e * e).powf(0.75)),
    }
}

/// Kepler `N⁻²` as the eccentric-anomaly integral
/// `2√(2π) a (a³/μ)^{1/4} ε ∫_0^π (1 − e cos v)√(1 + e² + 2e cos v) dv`.
pub fn kepler_normalisation_integral(mu: f64, a: f64, e: f64, eps: f64) -> Result<f64> {
    EntropyMode::Kepler { mu, a, e }.check()?;
    let i = quad::integrate(|v: f64| (1.0 - e * v.cos()) * (1.0 + e * e + 2.0 * e * v.cos()).sqrt(), 0.0, PI)?;
    Ok(2.0 * (2.0 * PI).sqrt() * a * (a.powi(3) / mu).powf(0.25) * eps * i)
}

/// `∫∫ exp(𝓔) r dr dθ` in the gaussian-tube limit, `∫_0^{2π} r0 √(π/κ) dθ`.
pub fn tube_normalisation(mode: &EntropyMode, eps: f64) -> Result<f64> {
    mode.check()?;
    quad::integrate(|t: f64| mode.r0(t) * (PI / mode.curvature(t, eps)).sqrt(), 0.0, 2.0 * PI)
}

// ---------------------------------------------------------------------------
// Ring statistics along a periodic KLMN orbit

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingStatistics {
    /// Invariant density, normalised to 1 at the reference angle.
    pub rho: f64,
    /// `R0(θ) = R″_r(r0(θ), θ) < 0`.
    pub r0_coeff: f64,
    /// Radial tube width `ε/|R0|^{1/2}`.
    pub width: f64,
    /// `(K_Q − K_C0)/(r − r0)` to leading order.
    pub k_correction: f64,
    pub p_peak: f64,
    pub alpha_peak: f64,
    /// The stationary-phase denominator vanished; `p` fell back to `√(S0′² + C²/r0²)`.
    pub degenerate_peak: bool,
}

/// Polar-curve data of a KLMN orbit at `θ`: `(r0, r0′, r0″, ṙ)`.
struct CurvePoint {
    r: f64,
    r1: f64,
    r2: f64,
    rdot: f64,
}

struct Ring<'a> {
    orbit: &'a KlmnOrbit,
    dtheta: f64,
    circular: bool,
}

impl<'a> Ring<'a> {
    fn new(orbit: &'a KlmnOrbit) -> Result<Self> {
        // a well narrower than 1e−7 relative is treated as the circular orbit
        let circular = (orbit.u0 - orbit.u1).abs() < 1e-7 * orbit.u0.abs();
        let dtheta = if circular { PI } else { orbit.delta_theta()? };
        if !(dtheta > 0.0) {
            return Err(Error::DomainError("θ must increase along the orbit".into()));
        }
        if !circular {
            let p = &orbit.params;
            if p.b != 0.0 {
                let w = p.c / p.b;
                let (lo, hi) = (orbit.u0.min(orbit.u1), orbit.u0.max(orbit.u1));
                if w >= lo && w <= hi {
                    return Err(Error::DomainError("θ(z) is not monotone on a loopy orbit".into()));
                }
            }
        }
        Ok(Self { orbit, dtheta, circular })
    }

    /// `z` with `θ(z) = θ`, using `θ(z + 2ω) = θ(z) + 2Δθ`.
    fn z_of_theta(&self, theta: f64) -> Result<f64> {
        let o = self.orbit;
        let k = (theta / (2.0 * self.dtheta)).floor();
        let target = theta - 2.0 * k * self.dtheta;
        // Illinois false position on the increasing θ(z), z ∈ [0, 2ω]
        let (mut lo, mut hi) = (0.0, 2.0 * o.omega);
        let (mut flo, mut fhi) = (-target, 2.0 * self.dtheta - target);
        let mut side = 0;
        for _ in 0..200 {
            let mid = (lo * fhi - hi * flo) / (fhi - flo);
            let fm = o.theta_of_z(mid)? - target;
            if fm.abs() < 1e-14 * (1.0 + target.abs()) || hi - lo < 1e-15 * o.omega {
                return Ok(mid + 2.0 * k * o.omega);
            }
            if fm < 0.0 {
                lo = mid;
                flo = fm;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                fhi = fm;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(0.5 * (lo + hi) + 2.0 * k * o.omega)
    }

    fn point(&self, theta: f64) -> Result<CurvePoint> {
        let o = self.orbit;
        let p = &o.params;
        if self.circular {
            return Ok(CurvePoint { r: 1.0 / o.u0, r1: 0.0, r2: 0.0, rdot: 0.0 });
        }
        let z = self.z_of_theta(theta)?;
        let u = o.u_of_z(z)?;
        let du = o.du_dz(z)?;
        let ddu = 0.5 * p.f_prime(u);
        let (r, rz) = (1.0 / u, -du / (u * u));
        let rzz = -ddu / (u * u) + 2.0 * du * du / (u * u * u);
        let (w, wz) = (p.c - p.b * u, -p.b * du);
        let r1 = rz / w;
        let r2 = (rzz * w - rz * wz) / (w * w * w);
        Ok(CurvePoint { r, r1, r2, rdot: -du })
    }

    /// Unnormalised density `u/|ṙ|`, constant on a circular orbit.
    fn raw_density(&self, theta: f64) -> Result<f64> {
        if self.circular {
            return Ok(1.0);
        }
        let c = self.point(theta)?;
        if c.rdot.abs() < 1e-12 {
            return Err(Error::DomainError("density is singular at an apse".into()));
        }
        Ok(1.0 / (c.r * c.rdot.abs()))
    }

    /// A reference angle away from the apses (which sit at multiples of Δθ).
    fn reference(&self) -> f64 {
        let near_apse = |t: f64| {
            let k = (t / self.dtheta).round();
            (t - k * self.dtheta).abs() < 1e-3 * self.dtheta
        };
        [0.5, 1.0 / 3.0, 0.25, 0.2]
            .iter()
            .map(|f| f * self.dtheta)
            .find(|t| !near_apse(*t) && !near_apse(t + 2.0 * PI))
            .unwrap_or(0.5 * self.dtheta)
    }

    /// Density with `exp(κθ)` chosen so `ρ(θ + 2π) = ρ(θ)`, normalised to 1 at the reference angle.
    fn density(&self, theta: f64) -> Result<f64> {
        let t0 = self.reference();
        let (a, b) = (self.raw_density(t0)?, self.raw_density(t0 + 2.0 * PI)?);
        let kappa = (a / b).ln() / (2.0 * PI);
        Ok(self.raw_density(theta)? / a * (kappa * (theta - t0)).exp())
    }

    fn speed(&self, r: f64) -> f64 {
        let p = &self.orbit.params;
        (2.0 * (p.e + p.mu / r)).sqrt()
    }

    /// `√(2(E−V)) sin(ψ − θ)` times the density.
    fn flux(&self, theta: f64) -> Result<f64> {
        let c = self.point(theta)?;
        let sin = c.r / (c.r * c.r + c.r1 * c.r1).sqrt();
        Ok(self.density(theta)? * self.speed(c.r) * sin)
    }
}

/// Density, gaussian coefficient, curvature correction and momentum peak at
/// angle `θ` along a closed KLMN orbit. `d_scale` multiplies the default ring
/// constant `D`, which makes `|R0| = 1` at the reference angle.
pub fn ring_statistics(theta: f64, orbit: &KlmnOrbit, eps: f64, d_scale: f64) -> Result<RingStatistics> {
    if !(eps > 0.0 && d_scale > 0.0) {
        return Err(Error::InvalidParameter("need ε > 0 and D scale > 0".into()));
    }
    let ring = Ring::new(orbit)?;
    if !ring.circular && klmn_periodicity(&orbit.params, orbit.u0, 64)?.is_none() {
        return Err(Error::NotPeriodic);
    }
    let p = &orbit.params;
    let d = d_scale * ring.flux(ring.reference())?;
    let r0_of = |t: f64| -> Result<f64> { Ok(-(ring.flux(t)? / d).powi(2)) };
    let r0c = r0_of(theta)?;
    let cp = ring.point(theta)?;

    // ln|R0| derivatives in θ
    let h = 1e-4;
    let (lm, l0, lp) = (r0_of(theta - h)?.abs().ln(), r0c.abs().ln(), r0_of(theta + h)?.abs().ln());
    let g1 = (lp - lm) / (2.0 * h);
    let g2 = (lp - 2.0 * l0 + lm) / (h * h) + g1 * g1;
    let (r, r1, r2) = (cp.r, cp.r1, cp.r2);
    let s2 = r * r + r1 * r1;
    let bracket = (2.0 * r * r - r1 * r1) * r2 - (4.0 * r1 * r1 + r * r) * r
        + r * s2 / 4.0 * (2.0 * g2 - 3.0 * g1 * g1)
        + r1 * (2.0 * r1 * r1 - 3.0 * r * r2 - r * r) / 2.0 * g1;
    let k_correction = bracket / s2.powf(2.5);

    // stationary-phase momentum peak with ρ_c ≈ r0²/(r0 − r0″)
    let s0 = cp.rdot;
    let rho_c = r * r / (r - r2);
    let gap = rho_c - r;
    let (p_peak, alpha_peak, degenerate_peak) = if gap.abs() < 1e-9 * r || !rho_c.is_finite() {
        ((s0 * s0 + p.c * p.c / (r * r)).sqrt(), -p.c.signum() * PI / 2.0, true)
    } else {
        let tang = p.c * rho_c / (gap * r);
        ((s0 * s0 + tang * tang).sqrt(), (-tang).atan2(s0), false)
    };
    Ok(RingStatistics {
        rho: ring.density(theta)?,
        r0_coeff: r0c,
        width: eps / r0c.abs().sqrt(),
        k_correction,
        p_peak,
        alpha_peak,
        degenerate_peak,
    })
}
