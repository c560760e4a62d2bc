//! Exact KLMN equatorial orbits `(r(θ), t(z))` and Euler two-centre orbits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{QuarticCoeffs, WeierstrassContext};
use crate::error::{Error, Result};
use crate::quad;
use crate::quartic_lab::KlmnParams;
use crate::uniformisation::WellTimeMap;

const IMAG_TOL: f64 = 1e-9;

/// `lnσ(a − z) − lnσ(a + z)` continued from its value `l_from` at `z_from`,
/// stepping finely enough to resolve the `2πi` ambiguity.
fn log_sigma_ratio_from(ctx: &WeierstrassContext, a: Complex64, z_from: f64, l_from: Complex64, z_to: f64) -> Result<Complex64> {
    let step = 0.02 * ctx.min_period();
    let n = ((z_to - z_from).abs() / step).ceil().max(1.0) as usize;
    let mut prev = l_from;
    for k in 1..=n {
        let z = z_from + (z_to - z_from) * k as f64 / n as f64;
        let raw = ctx.ln_sigma(a - z)? - ctx.ln_sigma(a + z)?;
        let turns = ((prev.im - raw.im) / (2.0 * PI)).round();
        prev = Complex64::new(raw.re, raw.im + 2.0 * PI * turns);
    }
    Ok(prev)
}

/// Precomputed ζ, ℘′, ℘″ at a point `a` with `℘(a)` prescribed, for
/// `J(z) = ∫_0^z dv/(℘(v) − ℘(a)) = (2zζ(a) + L_a(z))/℘′(a)`.
#[derive(Debug, Clone, Copy)]
struct PolePoint {
    a: Complex64,
    wp: Complex64,
    wp1: Complex64,
    wp2: Complex64,
    zeta: Complex64,
}

impl PolePoint {
    fn new(ctx: &WeierstrassContext, value: f64) -> Result<Self> {
        let a = ctx.wp_inverse_complex(value)?;
        let (wp, wp1) = ctx.wp_pair(a)?;
        if wp1.norm() < 1e-12 * (1.0 + wp.norm()) {
            return Err(Error::BranchError(format!("℘⁻¹({value}) is a half period; ℘′ vanishes")));
        }
        let wp2 = 6.0 * wp * wp - ctx.g2 / 2.0;
        Ok(Self { a, wp, wp1, wp2, zeta: ctx.zeta(a)? })
    }

    fn j1(&self, z: f64, l: Complex64) -> Complex64 {
        (2.0 * z * self.zeta + l) / self.wp1
    }

    /// `∫_0^z dv/(℘(v) − ℘(a))² = (1/℘′(a)) ∂J/∂a`.
    fn j2(&self, ctx: &WeierstrassContext, z: f64, l: Complex64) -> Result<Complex64> {
        let k = 1.0 / self.wp1;
        let dk = -self.wp2 * k * k;
        let b = 2.0 * z * self.zeta + l;
        let db = -2.0 * z * self.wp + ctx.zeta(self.a - z)? - ctx.zeta(self.a + z)?;
        Ok(k * (dk * b + k * db))
    }
}

#[derive(Debug, Clone)]
enum Mode {
    /// `B = 0`: `u = m − s·h·cos(|C|z)`.
    Kepler { m: f64, h: f64, s: f64 },
    Elliptic { map: WellTimeMap, z0: PolePoint, alpha: PolePoint },
}

/// A KLMN orbit started at the apse `u0` (a simple root of `f`).
#[derive(Debug, Clone)]
pub struct KlmnOrbit {
    pub params: KlmnParams,
    pub u0: f64,
    /// The opposite apse of the well.
    pub u1: f64,
    /// Well time from `u0` to `u1`.
    pub omega: f64,
    d0: [f64; 5],
    mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApseKind {
    /// `C/B` inside the well: `θ̇` reverses.
    Loopy,
    /// `C/B` at an apse.
    Cusped,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub z: f64,
    pub t: f64,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub samples: Vec<OrbitSample>,
    pub params: KlmnParams,
    pub invariant_drift: f64,
}

impl KlmnOrbit {
    pub fn new(params: KlmnParams, u0: f64) -> Result<Self> {
        let q = params.quartic();
        let d0 = q.derivatives(u0);
        let scale = q.scale() * (1.0 + u0.abs()).powi(4);
        if !(u0 > 0.0) || d0[0].abs() > 1e-9 * scale {
            return Err(Error::DomainError(format!("u0 = {u0} is not a positive root of f (f = {})", d0[0])));
        }
        if params.b == 0.0 {
            let c = params.c.abs();
            if c == 0.0 {
                return Err(Error::DomainError("radial fall (C = 0) has no bound well".into()));
            }
            let m = params.mu / (c * c);
            let disc = params.mu * params.mu + 2.0 * params.e * c * c;
            if !(params.e < 0.0) || disc <= 0.0 {
                return Err(Error::DomainError("Kepler orbit is not bound".into()));
            }
            let h = disc.sqrt() / (c * c);
            let s = d0[1].signum();
            return Ok(Self { params, u0, u1: m + s * h, omega: PI / c, d0, mode: Mode::Kepler { m, h, s } });
        }
        let map = WellTimeMap::new(q, u0)?;
        if !map.is_root {
            return Err(Error::DomainError("u0 must be a root of f".into()));
        }
        let (lo, hi) = map.well();
        let u1 = if d0[1] > 0.0 { hi } else { lo };
        if !u1.is_finite() || u1 <= 0.0 {
            return Err(Error::DomainError(format!("well from u0 = {u0} is not bounded by a positive apse")));
        }
        let omega = map.well_time(u1)?;
        let ctx = &map.context;
        let z0 = PolePoint::new(ctx, d0[2] / 24.0)?;
        let alpha = PolePoint::new(ctx, d0[2] / 24.0 - d0[1] / (4.0 * u0))?;
        Ok(Self { params, u0, u1, omega, d0, mode: Mode::Elliptic { map, z0, alpha } })
    }

    pub fn context(&self) -> Option<&WeierstrassContext> {
        match &self.mode {
            Mode::Elliptic { map, .. } => Some(&map.context),
            Mode::Kepler { .. } => None,
        }
    }

    pub fn u_of_z(&self, z: f64) -> Result<f64> {
        match &self.mode {
            Mode::Kepler { m, h, s } => Ok(m - s * h * (self.params.c.abs() * z).cos()),
            Mode::Elliptic { map, .. } => map.u_from_z_root(z),
        }
    }

    /// `du/dz`, from `℘′` rather than from `f`.
    pub fn du_dz(&self, z: f64) -> Result<f64> {
        match &self.mode {
            Mode::Kepler { h, s, .. } => {
                let c = self.params.c.abs();
                Ok(s * h * c * (c * z).sin())
            }
            Mode::Elliptic { map, .. } => {
                let ctx = &map.context;
                // u0 is a root, so u′ vanishes on the lattice
                let x = match ctx.wp_real(z) {
                    Err(Error::PoleAt(_)) => return Ok(0.0),
                    r => r? - self.d0[2] / 24.0,
                };
                Ok(-self.d0[1] / 4.0 * ctx.wp_prime_real(z)? / (x * x))
            }
        }
    }

    /// `θ(z) = (C − Bu0)z − (B f′(u0)/4) ∫_0^z dv/(℘(v) − f″(u0)/24)`.
    pub fn theta_of_z(&self, z: f64) -> Result<f64> {
        self.theta_step(z, 0.0, Complex64::new(0.0, 0.0)).map(|x| x.0)
    }

    fn theta_step(&self, z: f64, z_from: f64, l_from: Complex64) -> Result<(f64, Complex64)> {
        let p = &self.params;
        match &self.mode {
            Mode::Kepler { .. } => Ok((p.c * z, l_from)),
            Mode::Elliptic { map, z0, .. } => {
                let l = log_sigma_ratio_from(&map.context, z0.a, z_from, l_from, z)?;
                let th = (p.c - p.b * self.u0) * z - p.b * self.d0[1] / 4.0 * z0.j1(z, l);
                check_real(th, "θ(z)")?;
                Ok((th.re, l))
            }
        }
    }

    /// Apse-to-apse angle `Δθ = θ(ω)`.
    pub fn delta_theta(&self) -> Result<f64> {
        self.theta_of_z(self.omega)
    }

    /// Physical time `t(z) = ∫_0^z dz′/u(z′)²`, compact form in the integrals
    /// `J1 = ∫dz/(℘ − ℘(α))`, `J2 = ∫dz/(℘ − ℘(α))²` with `℘(α) = f″/24 − f′/(4u0)`.
    pub fn time_of_z(&self, z: f64) -> Result<f64> {
        self.time_step(z, 0.0, Complex64::new(0.0, 0.0), false).map(|x| x.0)
    }

    /// The same time regrouped by coefficients of `z`, `ln(σ ratio)` and `ζ(α−z) − ζ(α+z)`.
    pub fn time_of_z_expanded(&self, z: f64) -> Result<f64> {
        self.time_step(z, 0.0, Complex64::new(0.0, 0.0), true).map(|x| x.0)
    }

    fn time_step(&self, z: f64, z_from: f64, l_from: Complex64, expanded: bool) -> Result<(f64, Complex64)> {
        let (u0, f1) = (self.u0, self.d0[1]);
        match &self.mode {
            Mode::Kepler { m, h, s } => Ok((kepler_time(*m, *h, *s, self.params.c.abs(), z), l_from)),
            Mode::Elliptic { map, alpha, .. } => {
                let ctx = &map.context;
                let l = log_sigma_ratio_from(ctx, alpha.a, z_from, l_from, z)?;
                let (c1, c2) = (f1 / (2.0 * u0), f1 * f1 / (16.0 * u0 * u0));
                let t = if expanded {
                    let (w, w1, w2, ze) = (alpha.wp, alpha.wp1, alpha.wp2, alpha.zeta);
                    let dz = ctx.zeta(alpha.a - z)? - ctx.zeta(alpha.a + z)?;
                    let coef_z = 1.0 - 2.0 * c1 * ze / w1 - c2 * (2.0 * w / (w1 * w1) + 2.0 * w2 * ze / (w1 * w1 * w1));
                    let coef_l = -c1 / w1 - c2 * w2 / (w1 * w1 * w1);
                    (z * coef_z + coef_l * l + c2 * dz / (w1 * w1)) / (u0 * u0)
                } else {
                    (z - c1 * alpha.j1(z, l) + c2 * alpha.j2(ctx, z, l)?) / (u0 * u0)
                };
                check_real(t, "t(z)")?;
                Ok((t.re, l))
            }
        }
    }

    /// Where `C/B` sits relative to the well `[min(u0,u1), max(u0,u1)]`.
    pub fn apse_kind(&self, tol: f64) -> ApseKind {
        let p = &self.params;
        if p.b == 0.0 {
            return ApseKind::Sinusoidal;
        }
        let w = p.c / p.b;
        let (lo, hi) = (self.u0.min(self.u1), self.u0.max(self.u1));
        if (w - lo).abs() <= tol * (1.0 + lo.abs()) || (w - hi).abs() <= tol * (1.0 + hi.abs()) {
            ApseKind::Cusped
        } else if w > lo && w < hi {
            ApseKind::Loopy
        } else {
            ApseKind::Sinusoidal
        }
    }

    /// `n` samples over `z ∈ [0, z_end]`, with the energy residual
    /// `|ṙ²/2 + h²/(2r²) − μ/r − E|` (`ṙ = −du/dz`) tracked along the way.
    pub fn trace(&self, z_end: f64, n: usize) -> Result<OrbitTrace> {
        if n < 2 || !(z_end > 0.0) {
            return Err(Error::InvalidParameter("trace needs n ≥ 2 and z_end > 0".into()));
        }
        let p = &self.params;
        let mut samples = Vec::with_capacity(n);
        let (mut lt, mut ltime) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut z_prev = 0.0;
        let mut drift = 0.0f64;
        for k in 0..n {
            let z = z_end * k as f64 / (n - 1) as f64;
            let (theta, l1) = self.theta_step(z, z_prev, lt)?;
            let (t, l2) = self.time_step(z, z_prev, ltime, false)?;
            lt = l1;
            ltime = l2;
            z_prev = z;
            let u = self.u_of_z(z)?;
            let rdot = -self.du_dz(z)?;
            let w = p.c - p.b * u;
            let res = 0.5 * rdot * rdot + 0.5 * w * w * u * u - p.mu * u - p.e;
            drift = drift.max(res.abs());
            samples.push(OrbitSample { z, t, r: 1.0 / u, theta });
        }
        Ok(OrbitTrace { samples, params: *p, invariant_drift: drift })
    }
}

fn check_real(x: Complex64, what: &str) -> Result<()> {
    if x.im.abs() > IMAG_TOL * (1.0 + x.re.abs()) {
        return Err(Error::BranchError(format!("{what} has imaginary part {}", x.im)));
    }
    Ok(())
}

/// `∫_0^z dz′/u²` for `u = m − s·h·cos(cz)`, through the eccentric anomaly.
fn kepler_time(m: f64, h: f64, s: f64, c: f64, z: f64) -> f64 {
    let e = h / m;
    let a = 1.0 / (m * (1.0 - e * e));
    let b = a * (1.0 - e * e).sqrt();
    let phi = c * z;
    let turns = ((phi + PI) / (2.0 * PI)).floor();
    let r = phi - 2.0 * PI * turns;
    // from apocentre (s > 0) tan(E/2) = √((1+e)/(1−e)) tan(φ/2), reversed from pericentre
    let (num, den) = if s > 0.0 { ((1.0 + e).sqrt(), (1.0 - e).sqrt()) } else { ((1.0 - e).sqrt(), (1.0 + e).sqrt()) };
    let ecc = 2.0 * (num * (0.5 * r).sin()).atan2(den * (0.5 * r).cos()) + 2.0 * PI * turns;
    a * b / c * (ecc + s * e * ecc.sin())
}

pub fn klmn_theta_of_z(z: f64, p: &KlmnParams, u0: f64) -> Result<f64> {
    KlmnOrbit::new(*p, u0)?.theta_of_z(z)
}

pub fn physical_time(z: f64, p: &KlmnParams, u0: f64) -> Result<f64> {
    KlmnOrbit::new(*p, u0)?.time_of_z(z)
}

/// Coprime `(p, q)` with `q ≤ q_max` and `|q·Δθ/π − p| < 1e−9·q²`, from the
/// continued-fraction convergents of `Δθ/π`.
pub fn klmn_periodicity(params: &KlmnParams, u0: f64, q_max: u64) -> Result<Option<(i64, u64)>> {
    let dt = KlmnOrbit::new(*params, u0)?.delta_theta()?;
    Ok(rational_approximation(dt / PI, q_max, 1e-9))
}

pub fn rational_approximation(x: f64, q_max: u64, tol: f64) -> Option<(i64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (p2, q2) = (a as i64 * p1 + p0, a as u64 * q1 + q0);
        if q2 > q_max {
            return None;
        }
        if (q2 as f64 * x - p2 as f64).abs() < tol * (q2 * q2) as f64 {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a;
        if frac == 0.0 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

/// Max deviation of the traced orbit from the `B = 0` ellipse `u = m − h cos θ`
/// at fixed fractions of the well time, for each `B`, and the fitted slope of
/// `log error` against `log B`.
pub fn kepler_convergence(mu: f64, c: f64, e: f64, bs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let kep = KlmnParams::new(mu, 0.0, c, e)?;
    let k_orbit = KlmnOrbit::new(kep, crate::quartic_lab::positive_roots(&kep)[0])?;
    let Mode::Kepler { m, h, .. } = k_orbit.mode else { unreachable!() };
    let mut errs = Vec::with_capacity(bs.len());
    for &b in bs {
        let p = KlmnParams::new(mu, b, c, e)?;
        // apocentre root continued from the Kepler one
        let u0 = crate::quartic_lab::positive_roots(&p)
            .into_iter()
            .min_by(|x, y| (x - k_orbit.u0).abs().total_cmp(&(y - k_orbit.u0).abs()))
            .ok_or(Error::NoPositiveRoot)?;
        let orbit = KlmnOrbit::new(p, u0)?;
        let tr = orbit.trace(orbit.omega, 33)?;
        let err = tr.samples.iter().map(|s| (1.0 / s.r - (m - h * s.theta.cos())).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    let xs: Vec<f64> = bs.iter().map(|b| b.abs().ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    Ok((errs, fit_slope(&xs, &ys)))
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Euler two-centre problem

/// Centres `μ1` at `(c, 0)` and `μ2` at `(−c, 0)`; separation constant `γ = α²/c²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCentreParams {
    pub mu1: f64,
    pub mu2: f64,
    pub c: f64,
    pub gamma: f64,
    pub e: f64,
    pub omega_restore: Option<f64>,
}

impl TwoCentreParams {
    pub fn new(mu1: f64, mu2: f64, c: f64, gamma: f64, e: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 >= 0.0 && c > 0.0) {
            return Err(Error::InvalidParameter(format!("need μ1 > 0, μ2 ≥ 0, c > 0 (got {mu1}, {mu2}, {c})")));
        }
        Ok(Self { mu1, mu2, c, gamma, e, omega_restore: None })
    }

    /// `Q_ξ(t) = (t² − 1)(E t² + ((μ1+μ2)/c) t − γ)`, so that `(d cosh ξ/dζ)² = Q_ξ(cosh ξ)`.
    pub fn q_xi(&self) -> QuarticCoeffs {
        let k = (self.mu1 + self.mu2) / self.c;
        QuarticCoeffs::from_monomial(self.e, k, -self.gamma - self.e, -k, self.gamma)
    }

    /// `Q_η(s) = (1 − s²)(−E s² + ((μ1−μ2)/c) s + γ)`, so that `(d cos η/dζ)² = Q_η(cos η)`.
    pub fn q_eta(&self) -> QuarticCoeffs {
        let k = (self.mu1 - self.mu2) / self.c;
        QuarticCoeffs::from_monomial(self.e, -k, -self.e - self.gamma, k, self.gamma)
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        let r1 = ((x - self.c).powi(2) + y * y).sqrt();
        let r2 = ((x + self.c).powi(2) + y * y).sqrt();
        -self.mu1 / r1 - self.mu2 / r2
    }

    /// `dt/dζ = (c/√2)(cosh²ξ − cos²η)`.
    pub fn time_factor(&self, cosh_xi: f64, cos_eta: f64) -> f64 {
        self.c / 2f64.sqrt() * (cosh_xi * cosh_xi - cos_eta * cos_eta)
    }
}

#[derive(Debug, Clone)]
enum Coordinate {
    Constant(f64),
    Moving(WellTimeMap),
}

impl Coordinate {
    fn at(&self, zeta: f64) -> Result<f64> {
        match self {
            Self::Constant(v) => Ok(*v),
            Self::Moving(m) => m.u_from_z(zeta),
        }
    }

    fn new(q: QuarticCoeffs, start: f64, sign: f64) -> Result<Self> {
        let d = q.derivatives(start);
        let scale = q.scale() * (1.0 + start.abs()).powi(4);
        if d[0].abs() < 1e-10 * scale && d[1].abs() < 1e-7 * q.scale() * (1.0 + start.abs()).powi(3) {
            return Ok(Self::Constant(start));
        }
        let map = WellTimeMap::new(q, start)?;
        Ok(Self::Moving(if map.is_root { map } else { map.with_sqrt_sign(sign)? }))
    }
}

/// Uniformised two-centre orbit `(cosh ξ(ζ), cos η(ζ))`.
#[derive(Debug, Clone)]
pub struct TwoCentreOrbit {
    pub params: TwoCentreParams,
    xi: Coordinate,
    eta: Coordinate,
}

impl TwoCentreOrbit {
    /// Start at `cosh ξ = t0`, `cos η = s0`, moving with the signs of
    /// `d cosh ξ/dζ` and `d cos η/dζ` (ignored at turning points).
    pub fn new(params: TwoCentreParams, t0: f64, s0: f64, sign_xi: f64, sign_eta: f64) -> Result<Self> {
        if t0 < 1.0 || s0.abs() > 1.0 {
            return Err(Error::RangeError(format!("start (cosh ξ, cos η) = ({t0}, {s0}) is not a point")));
        }
        let xi = Coordinate::new(params.q_xi(), t0, sign_xi)?;
        let eta = Coordinate::new(params.q_eta(), s0, sign_eta)?;
        Ok(Self { params, xi, eta })
    }

    pub fn state(&self, zeta: f64) -> Result<(f64, f64)> {
        let t = self.xi.at(zeta)?;
        let s = self.eta.at(zeta)?;
        if s.abs() > 1.0 + 1e-9 {
            return Err(Error::RangeError(format!("cos η = {s} left [−1, 1]")));
        }
        Ok((t, s.clamp(-1.0, 1.0)))
    }

    /// Physical time `∫_0^ζ (c/√2)(cosh²ξ − cos²η) dζ` by quadrature.
    pub fn time(&self, zeta: f64) -> Result<f64> {
        let f = |z: f64| self.state(z).map(|(t, s)| self.params.time_factor(t, s)).unwrap_or(f64::NAN);
        quad::integrate(f, 0.0, zeta)
    }

    /// Distances `(r1, r2)` to the centres at `(c, 0)` and `(−c, 0)`.
    pub fn distances(&self, zeta: f64) -> Result<(f64, f64)> {
        let (t, s) = self.state(zeta)?;
        let c = self.params.c;
        Ok((c * (t - s), c * (t + s)))
    }
}

pub fn two_centre_orbit(zeta: f64, p: &TwoCentreParams, start: (f64, f64)) -> Result<(f64, f64)> {
    TwoCentreOrbit::new(*p, start.0, start.1, 1.0, 1.0)?.state(zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCentreEllipse {
    pub semi_major: f64,
    pub eccentricity: f64,
    pub energy: f64,
    pub xi0: f64,
}

/// The confocal ellipse `ξ = ξ0` on which `Q_ξ` has a double root:
/// `cosh ξ0 = 2cγ/(μ1+μ2)`, `A = c cosh ξ0`, `e = 1/cosh ξ0`, `E = −(μ1+μ2)/(2A)`.
pub fn two_centre_ellipse(p: &TwoCentreParams) -> Result<TwoCentreEllipse> {
    let m = p.mu1 + p.mu2;
    let ch = 2.0 * p.c * p.gamma / m;
    if !(ch > 1.0) {
        return Err(Error::NoEllipse(format!("cosh ξ0 = {ch} must exceed 1")));
    }
    let a = p.c * ch;
    let energy = -m / (2.0 * a);
    // the particle must be able to go all the way round: Q_η > 0 on (−1, 1)
    let k = (p.mu1 - p.mu2) / p.c;
    let inner = |s: f64| -energy * s * s + k * s + p.gamma;
    let vertex = if energy != 0.0 { k / (2.0 * energy) } else { 0.0 };
    let min = [-1.0, 1.0, vertex.clamp(-1.0, 1.0)].iter().map(|&s| inner(s)).fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::NoEllipse("cos η is confined; the orbit does not close round both centres".into()));
    }
    Ok(TwoCentreEllipse { semi_major: a, eccentricity: 1.0 / ch, energy, xi0: ch.acosh() })
}
