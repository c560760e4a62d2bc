//! Feynman–Kac diffusions at small viscosity: classical characteristics,
//! actions and Jacobi fields, Monte Carlo for the elementary formula,
//! Hopf–Cole/Burgers consistency and Nelson continuity checks.
//!
//! Conventions: u solves ∂u/∂t = (σ²/2)Δu + (V/σ²)u with
//! u(x,0) = T₀(x)exp(−S₀(x)/σ²); the action solves ∂S/∂t + ½|∇S|² + V = 0.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_with, QuadOptions};

const DET_FLOOR: f64 = 1e-10;
const RK_STEP: f64 = 1e-3;

/// Separable potential V(x) = Σᵢ (½ω²xᵢ² + ¼g xᵢ⁴).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Free,
    Harmonic { omega: f64 },
    Quartic { omega: f64, g: f64 },
}

impl Potential {
    fn coeffs(&self) -> (f64, f64) {
        match *self {
            Potential::Free => (0.0, 0.0),
            Potential::Harmonic { omega } => (omega * omega, 0.0),
            Potential::Quartic { omega, g } => (omega * omega, g),
        }
    }

    /// One-coordinate value.
    pub fn v1(&self, x: f64) -> f64 {
        let (w2, g) = self.coeffs();
        0.5 * w2 * x * x + 0.25 * g * x.powi(4)
    }

    /// One-coordinate derivative.
    pub fn dv1(&self, x: f64) -> f64 {
        let (w2, g) = self.coeffs();
        w2 * x + g * x.powi(3)
    }

    /// One-coordinate second derivative.
    pub fn d2v1(&self, x: f64) -> f64 {
        let (w2, g) = self.coeffs();
        w2 + 3.0 * g * x * x
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.v1(xi)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.dv1(xi)).collect()
    }
}

/// Mechanical data: potential, linear initial phase S₀(x) = p·x and a
/// normalised Gaussian amplitude T₀ with ∫T₀² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalModel {
    pub dim: usize,
    pub potential: Potential,
    pub momentum: [f64; 2],
    pub amp_mean: [f64; 2],
    pub amp_width: f64,
    /// Half-width of the working box used for start points and caustic scans.
    pub box_half_width: f64,
}

/// Classical state of one coordinate at time t along a characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    pub x: f64,
    pub v: f64,
    pub j: f64,
    pub jdot: f64,
    /// ∫₀ᵗ (½v² − V) ds.
    pub lagrangian: f64,
}

impl MechanicalModel {
    pub fn new(dim: usize, potential: Potential, momentum: [f64; 2], amp_mean: [f64; 2], amp_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(amp_width > 0.0) {
            return Err(Error::InvalidParameter("amplitude width must be positive".into()));
        }
        match potential {
            Potential::Harmonic { omega } if !(omega > 0.0) => {
                return Err(Error::InvalidParameter("omega must be positive".into()))
            }
            Potential::Quartic { omega, g } if !(omega >= 0.0 && g >= 0.0) => {
                return Err(Error::InvalidParameter("quartic coefficients must be non-negative".into()))
            }
            _ => {}
        }
        let box_half_width = 4.0 * amp_width + amp_mean.iter().take(dim).fold(0.0f64, |m, a| m.max(a.abs())) + 2.0;
        Ok(Self { dim, potential, momentum, amp_mean, amp_width, box_half_width })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidParameter(format!("point has {} coordinates, model has {}", x.len(), self.dim)));
        }
        Ok(())
    }

    pub fn s0(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.momentum).map(|(a, p)| a * p).sum()
    }

    pub fn grad_s0(&self, _x: &[f64]) -> Vec<f64> {
        self.momentum[..self.dim].to_vec()
    }

    pub fn t0(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.amp_mean).map(|(&a, m)| self.t0_1(a, m)).product()
    }

    fn t0_1(&self, x: f64, m: f64) -> f64 {
        let s2 = self.amp_width * self.amp_width;
        (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (-(x - m).powi(2) / (4.0 * s2)).exp()
    }

    /// Single-coordinate characteristic from x₀ with momentum p over [0, t].
    pub fn characteristic(&self, x0: f64, p: f64, t: f64) -> Result<Characteristic> {
        match self.potential {
            Potential::Free => Ok(Characteristic { x: x0 + p * t, v: p, j: 1.0, jdot: 0.0, lagrangian: 0.5 * p * p * t }),
            Potential::Harmonic { omega } => {
                let (s, c) = (omega * t).sin_cos();
                if omega * t >= std::f64::consts::FRAC_PI_2 || c < DET_FLOOR {
                    return Err(Error::CausticReached { t: std::f64::consts::FRAC_PI_2 / omega, det: c });
                }
                let (a, b) = (x0, p / omega);
                let (s2, c2) = (2.0 * omega * t).sin_cos();
                Ok(Characteristic {
                    x: a * c + b * s,
                    v: omega * (-a * s + b * c),
                    j: c,
                    jdot: -omega * s,
                    lagrangian: 0.25 * omega * ((b * b - a * a) * s2 - 2.0 * a * b * (1.0 - c2)),
                })
            }
            Potential::Quartic { .. } => {
                let n = ((t / RK_STEP).ceil() as usize).max(16);
                let h = t / n as f64;
                let f = |y: &[f64; 5]| {
                    [y[1], -self.potential.dv1(y[0]), y[3], -self.potential.d2v1(y[0]) * y[2], 0.5 * y[1] * y[1] - self.potential.v1(y[0])]
                };
                let mut y = [x0, p, 1.0, 0.0, 0.0];
                for k in 0..n {
                    y = rk4_autonomous(&f, &y, h);
                    if y[2] < DET_FLOOR {
                        return Err(Error::CausticReached { t: (k + 1) as f64 * h, det: y[2] });
                    }
                }
                Ok(Characteristic { x: y[0], v: y[1], j: y[2], jdot: y[3], lagrangian: y[4] })
            }
        }
    }

    /// Φ_t(x₀).
    pub fn flow(&self, x0: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(x0)?;
        let mut det = 1.0;
        let mut out = Vec::with_capacity(self.dim);
        for (i, &a) in x0.iter().enumerate() {
            let c = self.characteristic(a, self.momentum[i], t)?;
            det *= c.j;
            out.push(c.x);
        }
        if det < DET_FLOOR {
            return Err(Error::CausticReached { t, det });
        }
        Ok(out)
    }

    fn invert1(&self, x: f64, p: f64, t: f64) -> Result<(f64, Characteristic)> {
        let l = self.box_half_width;
        let mut starts = vec![x - p * t];
        starts.extend((0..8).map(|k| -l + 2.0 * l * k as f64 / 7.0));
        let tol = 1e-13 * (1.0 + x.abs());
        let mut first_err = None;
        for &s in &starts {
            let mut x0 = s;
            let mut c = match self.characteristic(x0, p, t) {
                Ok(c) => c,
                Err(e) => {
                    first_err.get_or_insert(e);
                    continue;
                }
            };
            for _ in 0..80 {
                let f = c.x - x;
                if f.abs() <= tol {
                    return Ok((x0, c));
                }
                let step = f / c.j;
                let mut lambda = 1.0;
                let mut moved = false;
                for _ in 0..40 {
                    let trial = x0 - lambda * step;
                    if let Ok(ct) = self.characteristic(trial, p, t) {
                        if (ct.x - x).abs() < f.abs() {
                            x0 = trial;
                            c = ct;
                            moved = true;
                            break;
                        }
                    }
                    lambda *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if (c.x - x).abs() <= 1e3 * tol {
                return Ok((x0, c));
            }
        }
        match first_err {
            Some(e @ Error::CausticReached { .. }) => Err(e),
            _ => Err(Error::InverseNotFound),
        }
    }

    /// x₀ = Φ_t⁻¹(x) together with the characteristic ending at x.
    fn inverse_states(&self, x: &[f64], t: f64) -> Result<Vec<(f64, Characteristic)>> {
        self.check_dim(x)?;
        let out: Vec<_> = x.iter().enumerate().map(|(i, &a)| self.invert1(a, self.momentum[i], t)).collect::<Result<_>>()?;
        let det: f64 = out.iter().map(|(_, c)| c.j).product();
        if det < DET_FLOOR {
            return Err(Error::CausticReached { t, det });
        }
        Ok(out)
    }

    /// Φ_t⁻¹(x) by damped Newton from several starts.
    pub fn flow_inverse(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.inverse_states(x, t)?.into_iter().map(|(x0, _)| x0).collect())
    }

    /// S(x,t) = S₀(x₀) + ∫(½ẋ² − V)ds along the characteristic ending at x.
    pub fn action(&self, x: &[f64], t: f64) -> Result<f64> {
        let st = self.inverse_states(x, t)?;
        Ok(st.iter().enumerate().map(|(i, (x0, c))| self.momentum[i] * x0 + c.lagrangian).sum())
    }

    /// ∇S(x,t), the velocity field of the flow.
    pub fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.inverse_states(x, t)?.into_iter().map(|(_, c)| c.v).collect())
    }

    /// ΔS(x,t) = Σ J̇ᵢ/Jᵢ.
    pub fn laplacian_action(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.inverse_states(x, t)?.iter().map(|(_, c)| c.jdot / c.j).sum())
    }

    /// det DΦ_t⁻¹(x).
    pub fn inverse_jacobian(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(1.0 / self.inverse_states(x, t)?.iter().map(|(_, c)| c.j).product::<f64>())
    }

    /// Earliest time at which some characteristic from the working box
    /// focuses (det J = 0), scanned up to `t_max`; infinite if none.
    pub fn caustic_time(&self, t_max: f64) -> f64 {
        let (w2, g) = self.potential.coeffs();
        if w2 == 0.0 && g == 0.0 {
            return f64::INFINITY;
        }
        let l = self.box_half_width;
        let mut best = f64::INFINITY;
        for i in 0..self.dim {
            for k in 0..33 {
                let x0 = -l + 2.0 * l * k as f64 / 32.0;
                best = best.min(self.first_focus(x0, self.momentum[i], t_max.min(best)));
            }
        }
        best
    }

    fn first_focus(&self, x0: f64, p: f64, t_max: f64) -> f64 {
        let f = |y: &[f64; 4]| [y[1], -self.potential.dv1(y[0]), y[3], -self.potential.d2v1(y[0]) * y[2]];
        let h = RK_STEP;
        let mut y = [x0, p, 1.0, 0.0];
        let mut t = 0.0;
        while t < t_max {
            let next = rk4_autonomous(&f, &y, h);
            if next[2] <= 0.0 {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let n = 8;
                    let mut z = y;
                    for _ in 0..n {
                        z = rk4_autonomous(&f, &z, mid / n as f64);
                    }
                    if z[2] > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return t + 0.5 * (lo + hi);
            }
            y = next;
            t += h;
        }
        f64::INFINITY
    }

    /// Variational Jacobi field along the characteristic ending at x, with
    /// the trace-integral identity det J(t) = exp∫₀ᵗ tr S″(Φ_s x₀, s) ds.
    /// The trace is taken from finite differences of the velocity field, so
    /// the two sides are computed independently.
    pub fn jacobi_field(&self, x: &[f64], t: f64, n_samples: usize) -> Result<JacobiReport> {
        let st = self.inverse_states(x, t)?;
        let x0: Vec<f64> = st.iter().map(|(a, _)| *a).collect();
        let det_j: f64 = st.iter().map(|(_, c)| c.j).product();
        let mut samples = Vec::with_capacity(n_samples + 1);
        for k in 0..=n_samples {
            let s = t * k as f64 / n_samples.max(1) as f64;
            let d: f64 = x0.iter().enumerate().map(|(i, &a)| self.characteristic(a, self.momentum[i], s).map(|c| c.j)).product::<Result<f64>>()?;
            samples.push((s, d));
        }
        let mut first_err = None;
        let trace = |s: f64| -> f64 {
            let mut tr = 0.0;
            for (i, &a) in x0.iter().enumerate() {
                let p = self.momentum[i];
                let y = match self.characteristic(a, p, s) {
                    Ok(c) => c.x,
                    Err(_) => return f64::NAN,
                };
                let hstep = 1e-3 * (1.0 + y.abs());
                let v = |z: f64| self.invert1(z, p, s).map(|(_, c)| c.v).unwrap_or(f64::NAN);
                tr += (v(y - 2.0 * hstep) - 8.0 * v(y - hstep) + 8.0 * v(y + hstep) - v(y + 2.0 * hstep)) / (12.0 * hstep);
            }
            tr
        };
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 400 };
        let integral = match integrate_with(trace, 0.0, t, opts) {
            Ok(r) => r.value,
            Err(e) => {
                first_err = Some(e);
                f64::NAN
            }
        };
        if let Some(e) = first_err {
            return Err(e);
        }
        let exp_trace = integral.exp();
        Ok(JacobiReport { x0, samples, det_j, trace_integral: integral, residual: (det_j - exp_trace).abs() })
    }

    /// Per-coordinate drift field (∇S, ΔS) used by the path simulation.
    fn path_fields(&self, t: f64) -> Result<Vec<PathField>> {
        (0..self.dim)
            .map(|i| {
                let p = self.momentum[i];
                Ok(match self.potential {
                    Potential::Free => PathField::Free { p },
                    Potential::Harmonic { omega } => PathField::Harmonic { omega, p },
                    Potential::Quartic { .. } => PathField::Grid(FieldGrid::build(self, p, t)?),
                })
            })
            .collect()
    }

    /// Expectation factor E{T₀(Y_t)exp(−½∫ΔS)} in the σ → 0 limit,
    /// T₀(Φ_t⁻¹x)·√|det DΦ_t⁻¹(x)|.
    pub fn small_sigma_limit(&self, x: &[f64], t: f64) -> Result<f64> {
        let st = self.inverse_states(x, t)?;
        let x0: Vec<f64> = st.iter().map(|(a, _)| *a).collect();
        let det: f64 = st.iter().map(|(_, c)| c.j).product();
        Ok(self.t0(&x0) * (1.0 / det).abs().sqrt())
    }
}

/// Jacobi-field samples and the determinant/trace identity.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiReport {
    pub x0: Vec<f64>,
    /// (s, det J(s)) along the characteristic.
    pub samples: Vec<(f64, f64)>,
    pub det_j: f64,
    pub trace_integral: f64,
    pub residual: f64,
}

fn rk4_autonomous<const N: usize, F: Fn(&[f64; N]) -> [f64; N]>(f: &F, y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = f(y);
    let mut tmp = *y;
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + h * k3[i];
    }
    let k4 = f(&tmp);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Cached (∇S, ΔS) of one coordinate on a (τ, y) grid, built by flowing a
/// grid of starting points forward; queried by cubic interpolation.
#[derive(Debug, Clone)]
struct FieldGrid {
    dtau: f64,
    ys: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    laps: Vec<Vec<f64>>,
}

const GRID_TAU: usize = 128;
const GRID_X: usize = 801;

impl FieldGrid {
    fn build(model: &MechanicalModel, p: f64, t: f64) -> Result<Self> {
        let l = 2.0 * model.box_half_width;
        let dtau = t / GRID_TAU as f64;
        let sub = ((dtau / RK_STEP).ceil() as usize).max(1);
        let h = dtau / sub as f64;
        let pot = model.potential;
        let f = |y: &[f64; 4]| [y[1], -pot.dv1(y[0]), y[3], -pot.d2v1(y[0]) * y[2]];
        let mut ys: Vec<Vec<_>> = (0..=GRID_TAU).map(|_| Vec::with_capacity(GRID_X)).collect();
        let mut grads = ys.clone();
        let mut laps = ys.clone();
        for k in 0..GRID_X {
            let x0 = -l + 2.0 * l * k as f64 / (GRID_X - 1) as f64;
            let mut y = [x0, p, 1.0, 0.0];
            for m in 0..=GRID_TAU {
                if m > 0 {
                    for _ in 0..sub {
                        y = rk4_autonomous(&f, &y, h);
                    }
                }
                if y[2] < DET_FLOOR {
                    return Err(Error::CausticReached { t: m as f64 * dtau, det: y[2] });
                }
                ys[m].push(y[0]);
                grads[m].push(y[1]);
                laps[m].push(y[3] / y[2]);
            }
        }
        Ok(Self { dtau, ys, grads, laps })
    }

    fn at_node(&self, m: usize, y: f64) -> (f64, f64) {
        let xs = &self.ys[m];
        let n = xs.len();
        let k = xs.partition_point(|&a| a < y).clamp(2, n - 2) - 2;
        let idx = [k, k + 1, k + 2, k + 3];
        (lagrange4(idx.map(|i| xs[i]), idx.map(|i| self.grads[m][i]), y), lagrange4(idx.map(|i| xs[i]), idx.map(|i| self.laps[m][i]), y))
    }

    fn eval(&self, y: f64, tau: f64) -> (f64, f64) {
        let u = (tau / self.dtau).clamp(0.0, GRID_TAU as f64);
        let k = (u.floor() as usize).clamp(1, GRID_TAU - 2) - 1;
        let nodes = [k, k + 1, k + 2, k + 3];
        let taus = nodes.map(|m| m as f64);
        let vals = nodes.map(|m| self.at_node(m, y));
        (lagrange4(taus, vals.map(|v| v.0), u), lagrange4(taus, vals.map(|v| v.1), u))
    }
}

fn lagrange4(xs: [f64; 4], fs: [f64; 4], x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let mut w = fs[i];
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        s += w;
    }
    s
}

#[derive(Debug, Clone)]
enum PathField {
    Free { p: f64 },
    Harmonic { omega: f64, p: f64 },
    Grid(FieldGrid),
}

impl PathField {
    /// (∂S/∂y, ∂²S/∂y²) at (y, τ).
    #[inline]
    fn eval(&self, y: f64, tau: f64) -> (f64, f64) {
        match self {
            PathField::Free { p } => (*p, 0.0),
            PathField::Harmonic { omega, p } => {
                let (s, c) = (omega * tau).sin_cos();
                let tan = s / c;
                (-omega * y * tan + p / c, -omega * tan)
            }
            PathField::Grid(g) => g.eval(y, tau),
        }
    }
}

/// Monte Carlo settings; `h` defaults to min(1e−3, t/1000).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_paths: usize,
    pub seed: u64,
    pub h: Option<f64>,
    pub check_step: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 0, h: None, check_step: false }
    }
}

/// Monte Carlo estimate of u^σ = exp(log_prefactor)·expectation_mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate_log_prefactor: f64,
    pub expectation_mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    /// Mean shift when the step is halved on the same Brownian paths.
    pub step_shift: Option<f64>,
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let m = xs.len() / 2;
    pairwise_sum(&xs[..m]) + pairwise_sum(&xs[m..])
}

fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = pairwise_sum(vals) / n;
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
    let var = if vals.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Feynman–Kac elementary formula by Monte Carlo over
/// dY = −∇S(Y, t−s)ds + σdB, Y₀ = x, with Euler–Maruyama steps and
/// antithetic pairs; each pair draws from its own ChaCha stream.
pub fn elementary_formula_mc(model: &MechanicalModel, x: &[f64], t: f64, sigma: f64, opts: McOptions) -> Result<McEstimate> {
    model.check_dim(x)?;
    if !(sigma > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter("sigma and t must be positive".into()));
    }
    if opts.n_paths < 4 || !opts.n_paths.is_multiple_of(2) {
        return Err(Error::InvalidParameter("n_paths must be even and at least 4".into()));
    }
    let tc = model.caustic_time(t * 1.01);
    if tc <= t {
        return Err(Error::CausticReached { t: tc, det: 0.0 });
    }
    let log_prefactor = -model.action(x, t)? / (sigma * sigma);
    let h_req = opts.h.unwrap_or((t / 1000.0).min(1e-3));
    let n = (t / h_req).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let fields = model.path_fields(t)?;
    let dim = model.dim;
    let n_pairs = opts.n_paths / 2;

    // Weight of one path given its fine-step normals; `coarse` merges pairs.
    let run = |z: &[f64], sign: f64, coarse: bool| -> f64 {
        let (steps, dt) = if coarse { (n, h) } else { (2 * n, 0.5 * h) };
        let sq = (0.5 * h).sqrt() * sigma * sign;
        let mut y = [0.0; 2];
        y[..dim].copy_from_slice(x);
        let mut logw = 0.0;
        for k in 0..steps {
            let tau = t - k as f64 * dt;
            for i in 0..dim {
                let (g, l) = fields[i].eval(y[i], tau);
                let db = if coarse { sq * (z[(2 * k) * dim + i] + z[(2 * k + 1) * dim + i]) } else { sq * z[k * dim + i] };
                logw -= 0.5 * l * dt;
                y[i] += -g * dt + db;
            }
        }
        model.t0(&y[..dim]) * logw.exp()
    };

    let per_pair: Vec<(f64, f64)> = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let z: Vec<f64> = (0..2 * n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let coarse = 0.5 * (run(&z, 1.0, true) + run(&z, -1.0, true));
            let fine = if opts.check_step { 0.5 * (run(&z, 1.0, false) + run(&z, -1.0, false)) } else { coarse };
            (coarse, fine)
        })
        .collect();
    let coarse: Vec<f64> = per_pair.iter().map(|p| p.0).collect();
    let (mean, se) = mean_and_se(&coarse);
    let mut step_shift = None;
    if opts.check_step {
        let fine: Vec<f64> = per_pair.iter().map(|p| p.1).collect();
        let shift = pairwise_sum(&fine) / n_pairs as f64 - mean;
        if shift.abs() > 3.0 * se {
            return Err(Error::StepTooCoarse { shift: shift.abs(), bound: 3.0 * se });
        }
        step_shift = Some(shift);
    }
    Ok(McEstimate {
        estimate_log_prefactor: log_prefactor,
        expectation_mean: mean,
        std_error: se,
        n_paths: opts.n_paths,
        h,
        seed: opts.seed,
        step_shift,
    })
}

/// Free-particle u^σ in closed form as (log prefactor −S/σ², expectation
/// factor); Gaussian T₀ convolved with the heat kernel of variance σ²t.
pub fn free_gaussian_solution(model: &MechanicalModel, x: &[f64], t: f64, sigma: f64) -> Result<(f64, f64)> {
    model.check_dim(x)?;
    if model.potential != Potential::Free {
        return Err(Error::InvalidParameter("closed form needs the free potential".into()));
    }
    let s2 = model.amp_width * model.amp_width;
    let w = 2.0 * s2 + sigma * sigma * t;
    let mut log_pre = 0.0;
    let mut factor = 1.0;
    for i in 0..model.dim {
        let p = model.momentum[i];
        log_pre -= (p * x[i] - 0.5 * p * p * t) / (sigma * sigma);
        let d = x[i] - p * t - model.amp_mean[i];
        factor *= (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (2.0 * s2 / w).sqrt() * (-d * d / (2.0 * w)).exp();
    }
    Ok((log_pre, factor))
}

/// Crank–Nicolson solve of ∂u/∂t = (σ²/2)u″ + (V/σ²)u on [−l, l] with zero
/// Dirichlet ends, for a one-dimensional model; returns (grid, u(·, t)).
pub fn crank_nicolson_1d(model: &MechanicalModel, t: f64, sigma: f64, l: f64, n: usize, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if model.dim != 1 {
        return Err(Error::InvalidParameter("grid solver is one-dimensional".into()));
    }
    if n < 3 || steps == 0 {
        return Err(Error::InvalidParameter("grid too small".into()));
    }
    let dx = 2.0 * l / (n - 1) as f64;
    let dt = t / steps as f64;
    let xs: Vec<f64> = (0..n).map(|k| -l + dx * k as f64).collect();
    let s2 = sigma * sigma;
    let mut u: Vec<f64> = xs.iter().map(|&x| model.t0(&[x]) * (-model.s0(&[x]) / s2).exp()).collect();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let d = 0.5 * s2 / (dx * dx);
    let m = n - 2;
    let vq: Vec<f64> = xs[1..n - 1].iter().map(|&x| model.potential.v1(x) / s2).collect();
    // (I − ½dt A) uⁿ⁺¹ = (I + ½dt A) uⁿ with A = d·[1 −2 1] + diag(V/σ²).
    let sub = -0.5 * dt * d;
    let diag: Vec<f64> = vq.iter().map(|q| 1.0 + 0.5 * dt * (2.0 * d - q)).collect();
    let mut rhs = vec![0.0; m];
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    for _ in 0..steps {
        for i in 0..m {
            let ui = u[i + 1];
            rhs[i] = ui + 0.5 * dt * (d * (u[i] - 2.0 * ui + u[i + 2]) + vq[i] * ui);
        }
        cp[0] = sub / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..m {
            let den = diag[i] - sub * cp[i - 1];
            cp[i] = sub / den;
            dp[i] = (rhs[i] - sub * dp[i - 1]) / den;
        }
        u[m] = dp[m - 1];
        for i in (0..m - 1).rev() {
            u[i + 1] = dp[i] - cp[i] * u[i + 2];
        }
    }
    Ok((xs, u))
}

/// Cubic interpolation on a uniform grid.
pub fn interpolate_uniform(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let dx = xs[1] - xs[0];
    let k = (((x - xs[0]) / dx).floor() as isize).clamp(1, n as isize - 3) as usize - 1;
    let idx = [k, k + 1, k + 2, k + 3];
    lagrange4(idx.map(|i| xs[i]), idx.map(|i| ys[i]), x)
}

fn gradient_1d(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

/// v^σ = −σ²∇ln u on a uniform grid.
pub fn hopf_cole_velocity(u: &[f64], dx: f64, sigma: f64) -> Result<Vec<f64>> {
    if u.len() < 3 {
        return Err(Error::InvalidParameter("grid too small".into()));
    }
    if u.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::NonPositiveField);
    }
    let lu: Vec<f64> = u.iter().map(|a| a.ln()).collect();
    Ok(hopf_cole_velocity_from_log(&lu, dx, sigma))
}

/// v^σ from ln u, avoiding overflow of exp(−S/σ²).
pub fn hopf_cole_velocity_from_log(log_u: &[f64], dx: f64, sigma: f64) -> Vec<f64> {
    gradient_1d(log_u, dx).into_iter().map(|g| -sigma * sigma * g).collect()
}

/// Max interior residual of ∂_t v + v v′ + V′ − (σ²/2)v″ from three time
/// levels spaced by `dt` on the uniform grid `xs`.
pub fn burgers_residual(v_prev: &[f64], v: &[f64], v_next: &[f64], dt: f64, xs: &[f64], potential: &Potential, sigma: f64) -> Result<f64> {
    let n = v.len();
    if n < 3 || v_prev.len() != n || v_next.len() != n || xs.len() != n {
        return Err(Error::InvalidParameter("field lengths differ".into()));
    }
    let dx = xs[1] - xs[0];
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let vt = (v_next[i] - v_prev[i]) / (2.0 * dt);
        let vx = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        let vxx = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
        let r = vt + v[i] * vx + potential.dv1(xs[i]) - 0.5 * sigma * sigma * vxx;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Forward (b₊ = ∇(R+S)) and backward (b₋ = ∇(S−R)) drifts.
pub fn nelson_velocities(grad_r: &[f64], grad_s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let bp = grad_r.iter().zip(grad_s).map(|(r, s)| s + r).collect();
    let bm = grad_r.iter().zip(grad_s).map(|(r, s)| s - r).collect();
    (bp, bm)
}

/// Osmotic u = ½(b₊−b₋) and current v = ½(b₊+b₋) velocities.
pub fn osmotic_current(b_plus: &[f64], b_minus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let u = b_plus.iter().zip(b_minus).map(|(p, m)| 0.5 * (p - m)).collect();
    let v = b_plus.iter().zip(b_minus).map(|(p, m)| 0.5 * (p + m)).collect();
    (u, v)
}

fn grad3<F: Fn(&[f64; 3]) -> f64>(f: &F, x: &[f64; 3], h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let at = |k: f64| {
            let mut y = *x;
            y[i] += k * h;
            f(&y)
        };
        g[i] = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
    }
    g
}

/// Worst relative residual ∇·((ε²/2)∇ρ − bρ)/ρ over `points` for a
/// stationary state with ρ = exp(2R/ε²) and b = ∇(R+S), by nested
/// fourth-order differences of step `h`.
pub fn nelson_drift_check<R, S>(r: R, s: S, eps2: f64, points: &[[f64; 3]], h: f64) -> f64
where
    R: Fn(&[f64; 3]) -> f64,
    S: Fn(&[f64; 3]) -> f64,
{
    let mut worst: f64 = 0.0;
    for x in points {
        let r0 = r(x);
        let rho = |y: &[f64; 3]| (2.0 * (r(y) - r0) / eps2).exp();
        let flux = |y: &[f64; 3], i: usize| {
            let gr = grad3(&rho, y, h)[i];
            let gb = grad3(&r, y, h)[i] + grad3(&s, y, h)[i];
            0.5 * eps2 * gr - gb * rho(y)
        };
        let mut div = 0.0;
        for i in 0..3 {
            let at = |k: f64| {
                let mut y = *x;
                y[i] += k * h;
                flux(&y, i)
            };
            div += (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
        }
        worst = worst.max(div.abs());
    }
    worst
}
