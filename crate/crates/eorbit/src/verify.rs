//! Numerical self-checks grouped by acceptance criterion, each against an
//! independent oracle (quadrature, companion-matrix eigenvalues, RK4, PDE).

use std::f64::consts::PI;
use std::time::Instant;

use elliptic_orbits::elliptic::{QuarticCoeffs, WeierstrassContext};
use elliptic_orbits::ode::rk4;
use elliptic_orbits::orbits::{fit_slope, kepler_convergence, two_centre_ellipse, KlmnOrbit, TwoCentreOrbit, TwoCentreParams};
use elliptic_orbits::quad::{integrate, integrate_with, QuadOptions};
use elliptic_orbits::quartic_lab::{accessible_intervals, lambda_resolvent, positive_roots, q_b_monomial, q_b_root_product, quartic_roots_lambda, KlmnParams};
use elliptic_orbits::spirals::{
    arc_length, decay_exponent, dqlc_residual, galaxy_integrate, galaxy_r_of_t, galaxy_rho_of_phi, galaxy_z_of_t,
    kepler_normalisation_integral, normalisation, two_centre_spiral_integrate, EllipticPoint, EntropyMode, GalaxySpiralParams,
    RestoringParams, SemiClassicalParams, SpiralField,
};
use elliptic_orbits::stochastic::{crank_nicolson_1d, elementary_formula_mc, interpolate_uniform, McOptions, MechanicalModel, Potential};
use elliptic_orbits::uniformisation::WellTimeMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::SUITES;
use crate::output::num;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `value < tol`.
    Below(f64),
    /// `lo ≤ value ≤ hi`.
    Within(f64, f64),
    /// `value == 1`.
    Flag,
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::Below(t) => v < t,
            Bound::Within(lo, hi) => (lo..=hi).contains(&v),
            Bound::Flag => v == 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::Below(t) if (1e-2..1e4).contains(&t) => format!("< {t}"),
            Bound::Below(t) => format!("< {t:e}"),
            Bound::Within(lo, hi) => format!("in [{lo}; {hi}]"),
            Bound::Flag => "holds".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Check {
    fn new(criterion: u8, name: &str, value: f64, bound: Bound) -> Self {
        Self { criterion, name: name.to_string(), value, bound, pass: bound.holds(value) }
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "criterion": self.criterion,
            "check": self.name,
            "value": num(self.value),
            "bound": self.bound.describe(),
            "pass": self.pass,
        })
    }
}

type Res<T> = elliptic_orbits::Result<T>;

/// A library error anywhere inside a check counts as a failed value.
fn measure(f: impl FnOnce() -> Res<f64>) -> f64 {
    f().unwrap_or(f64::NAN)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Maximum that propagates NaN.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn criteria_of(suite: &str) -> Result<Vec<u8>, CliError> {
    let idx = SUITES.iter().position(|s| *s == suite).ok_or_else(|| {
        CliError::Validation(format!("verify: unknown suite '{suite}' (expected one of {})", SUITES.join(", ")))
    })?;
    Ok(if idx == 0 { (1..=7).collect() } else { vec![idx as u8] })
}

pub fn run_suite(suite: &str) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for c in criteria_of(suite)? {
        out.extend(criterion(c));
    }
    Ok(out)
}

pub fn criterion(c: u8) -> Vec<Check> {
    match c {
        1 => core(),
        2 => uniformisation(),
        3 => lambda(),
        4 => orbits(),
        5 => two_centre(),
        6 => spirals(),
        7 => stochastic(),
        _ => Vec::new(),
    }
}

/// Fixed-width table of check names, bounds and verdicts.
pub fn render_table(checks: &[Check]) -> String {
    let w = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<9} {:<w$} {:<20} status\n", "criterion", "check", "bound");
    for c in checks {
        s += &format!("{:<9} {:<w$} {:<20} {}\n", c.criterion, c.name, c.bound.describe(), c.status());
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    s += &format!("{} checks, {} failed\n", checks.len(), failed);
    s
}

// random draws and oracles

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigenvalues of the companion matrix of `c[0] xⁿ + … + c[n]`.
pub fn companion_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|z| cx(z.re, z.im)).collect()
}

/// Greedy matching distance, relative to `1 + |b|`.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut d_max = 0.0f64;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm() / (1.0 + y.norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((j, d)) => {
                used[j] = true;
                d_max = worst(d_max, d);
            }
            None => return f64::INFINITY,
        }
    }
    d_max
}

fn random_invariants(r: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let g2: f64 = r.gen_range(-3.0..3.0);
        let g3: f64 = r.gen_range(-3.0..3.0);
        let d = g2.powi(3) - 27.0 * g3 * g3;
        if d.abs() > 0.05 * (g2.abs().powi(3) + 27.0 * g3 * g3) {
            return (g2, g3);
        }
    }
}

fn random_klmn(r: &mut ChaCha8Rng) -> KlmnParams {
    let mu = r.gen_range(0.5..2.0);
    let b: f64 = r.gen_range(0.1..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    let c = r.gen_range(-3.0..3.0);
    let e = r.gen_range(-1.0..1.0);
    KlmnParams { mu, b, c, e }
}

/// `k·Π(t − r)` for real roots `(r, 0)` and conjugate pairs `(m, n)`.
fn expand(k: f64, factors: &[(f64, f64)]) -> QuarticCoeffs {
    let mut c = vec![k];
    let mul = |c: &Vec<f64>, q: &[f64]| {
        let mut out = vec![0.0; c.len() + q.len() - 1];
        for (i, x) in c.iter().enumerate() {
            for (j, y) in q.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    for &(m, n) in factors {
        c = if n == 0.0 { mul(&c, &[1.0, -m]) } else { mul(&c, &[1.0, -2.0 * m, m * m + n * n]) };
    }
    QuarticCoeffs::from_monomial(c[0], c[1], c[2], c[3], c[4])
}

/// A quartic with negative leading coefficient and a bounded well `(lo, hi)`.
fn random_well(r: &mut ChaCha8Rng) -> (QuarticCoeffs, f64, f64) {
    let k = r.gen_range(0.5..2.0);
    let mut v: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
    v.sort_by(f64::total_cmp);
    let gaps_ok = v.windows(2).all(|w| w[1] - w[0] > 0.15);
    if r.gen_bool(0.5) && gaps_ok {
        let c = expand(-k, &[(v[0], 0.0), (v[1], 0.0), (v[2], 0.0), (v[3], 0.0)]);
        return (c, v[2], v[3]);
    }
    let (lo, hi) = (v[0], v[0] + r.gen_range(0.3..2.0));
    let (m, n) = (r.gen_range(-2.0..2.0), r.gen_range(0.2..1.5));
    (expand(-k, &[(lo, 0.0), (hi, 0.0), (m, n)]), lo, hi)
}

fn bound_orbit(r: &mut ChaCha8Rng) -> (KlmnParams, f64, f64) {
    loop {
        let mut p = random_klmn(r);
        p.e = -p.e.abs().max(0.05);
        if let Some(&(lo, hi)) = accessible_intervals(&p).first() {
            if hi - lo > 0.05 {
                return (p, lo, hi);
            }
        }
    }
}

// 1: lattice functions

fn core() -> Vec<Check> {
    let start = Instant::now();
    let ode = measure(|| {
        let mut r = rng(4);
        let mut m = 0.0f64;
        for _ in 0..10 {
            let (g2, g3) = random_invariants(&mut r);
            let w = WeierstrassContext::new(g2, g3)?;
            for _ in 0..1000 {
                let z = r.gen_range(1e-3..1.0) * w.omega;
                let (p, dp) = w.wp_pair(cx(z, 0.0))?;
                let res = dp * dp - (4.0 * p * p * p - g2 * p - g3);
                m = worst(m, res.norm() / (1.0 + p.norm().powi(3)));
            }
        }
        Ok(m)
    });
    let (mut add, mut zeta) = (0.0f64, 0.0f64);
    let r = (|| -> Res<()> {
        let mut r = rng(5);
        for _ in 0..10 {
            let (g2, g3) = random_invariants(&mut r);
            let w = WeierstrassContext::new(g2, g3)?;
            for _ in 0..100 {
                let u = cx(r.gen_range(0.05..1.9) * w.omega, r.gen_range(-0.3..0.3) * w.omega_imag);
                let v = cx(r.gen_range(0.05..1.9) * w.omega, r.gen_range(-0.3..0.3) * w.omega_imag);
                if (u - v).norm() < 0.05 || (u + v - 2.0 * w.omega).norm() < 0.05 {
                    continue;
                }
                let (pu, dpu) = w.wp_pair(u)?;
                let (pv, dpv) = w.wp_pair(v)?;
                let lhs = w.wp(u + v)?;
                let q = (dpu - dpv) / (pu - pv);
                add = worst(add, (lhs - (0.25 * q * q - pu - pv)).norm() / (1.0 + lhs.norm()));
                let z = w.zeta(u - v)? + w.zeta(u + v)? - 2.0 * w.zeta(u)?;
                let rhs = dpu / (pu - pv);
                zeta = worst(zeta, (z - rhs).norm() / (1.0 + rhs.norm()));
            }
        }
        Ok(())
    })();
    if r.is_err() {
        add = f64::NAN;
        zeta = f64::NAN;
    }
    let secs = start.elapsed().as_secs_f64();
    vec![
        Check::new(1, "wp ODE residual, 10 lattices x 1000 points", ode, Bound::Below(1e-9)),
        Check::new(1, "addition theorem", add, Bound::Below(1e-8)),
        Check::new(1, "zeta addition identity", zeta, Bound::Below(1e-8)),
        Check::new(1, "core runtime [s]", secs, Bound::Below(10.0)),
    ]
}

// 2: well time and its inversion

fn round_trip(map: &WellTimeMap, us: impl Iterator<Item = f64>) -> Res<f64> {
    let mut m = 0.0f64;
    for u in us {
        let z = map.well_time(u)?;
        m = worst(m, (map.u_from_z(z)? - u).abs());
    }
    Ok(m)
}

fn uniformisation() -> Vec<Check> {
    let root = measure(|| {
        let mut r = rng(12);
        let mut m = 0.0f64;
        for _ in 0..20 {
            let (q, lo, hi) = random_well(&mut r);
            for (a, other) in [(lo, hi), (hi, lo)] {
                let map = WellTimeMap::new(q, a)?;
                m = worst(m, round_trip(&map, (1..20).map(|k| a + (other - a) * k as f64 / 20.0))?);
                m = worst(m, (map.u_from_z_root(map.context.omega)? - other).abs());
            }
        }
        Ok(m)
    });
    let non_root = measure(|| {
        let mut r = rng(13);
        let mut m = 0.0f64;
        for _ in 0..20 {
            let (q, lo, hi) = random_well(&mut r);
            let a = lo + (hi - lo) * r.gen_range(0.2..0.8);
            let up = WellTimeMap::new(q, a)?;
            m = worst(m, round_trip(&up, (1..20).map(|k| a + (hi - a) * k as f64 / 20.0))?);
            let down = WellTimeMap::new(q, a)?.with_sqrt_sign(-1.0)?;
            m = worst(m, round_trip(&down, (1..20).map(|k| a - (a - lo) * k as f64 / 20.0))?);
        }
        Ok(m)
    });
    let biermann = measure(|| {
        let mut r = rng(14);
        let (mut m, mut compared) = (0.0f64, 0);
        for _ in 0..10 {
            let (q, lo, hi) = random_well(&mut r);
            let a = lo + (hi - lo) * r.gen_range(0.2..0.8);
            for sign in [1.0, -1.0] {
                let map = WellTimeMap::new(q, a)?.with_sqrt_sign(sign)?;
                let period = 2.0 * map.context.omega;
                for _ in 0..50 {
                    let z = r.gen_range(0.01..0.99) * period;
                    // both forms have removable poles; skip where either declines
                    if let (Ok(b), Ok(mo)) = (map.u_from_z_biermann(z), map.u_from_z_mordell(z)) {
                        m = worst(m, (b - mo).abs() / (1.0 + b.abs()));
                        compared += 1;
                    }
                }
            }
        }
        Ok(if compared >= 500 { m } else { f64::NAN })
    });
    let g2 = measure(|| {
        let mut r = rng(18);
        let (mut n, mut m) = (0, 0.0f64);
        while n < 100 {
            let c: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let q = QuarticCoeffs::new(c[0], c[1], c[2], c[3], c[4]);
            let (a, t) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            if q.eval(a) <= 0.0 || q.eval(t) <= 0.0 || (t - a).abs() < 0.05 || !q.has_no_repeated_factors(1e-6) {
                continue;
            }
            let Ok(map) = WellTimeMap::new(q, a) else { continue };
            n += 1;
            let s = map.s_substitution(t)?;
            let g = map.g_of_t(t);
            let inv = q.invariants();
            let rhs = 4.0 * s.powi(3) - inv.g2 * s - inv.g3;
            let h6 = (t - a).powi(6);
            let size = h6 * (4.0 * s.abs().powi(3) + inv.g2.abs() * s.abs() + inv.g3.abs());
            m = worst(m, (h6 * g * g - h6 * rhs).abs() / size);
        }
        Ok(m)
    });
    vec![
        Check::new(2, "round trip, root base, 20 quartics", root, Bound::Below(1e-8)),
        Check::new(2, "round trip, interior base, 20 quartics", non_root, Bound::Below(1e-8)),
        Check::new(2, "Biermann vs Mordell", biermann, Bound::Below(1e-9)),
        Check::new(2, "G^2 cubic identity, 100 draws", g2, Bound::Below(1e-8)),
    ]
}

// 3: lambda resolvent

fn lambda() -> Vec<Check> {
    let roots = measure(|| {
        let mut r = rng(2);
        let mut m = 0.0f64;
        for _ in 0..100 {
            let p = random_klmn(&mut r);
            let oracle = companion_roots(&p.quartic().monomial());
            let lams = lambda_resolvent(&p)?;
            if lams.is_empty() {
                return Ok(f64::NAN);
            }
            for lam in lams {
                m = worst(m, multiset_distance(&quartic_roots_lambda(&p, lam), &oracle));
            }
        }
        Ok(m)
    });
    let product = measure(|| {
        let mut r = rng(7);
        let mut m = 0.0f64;
        for _ in 0..50 {
            let p = random_klmn(&mut r);
            if p.c.abs() < 0.3 {
                continue;
            }
            let roots = companion_roots(&q_b_monomial(&p));
            let prod = roots.iter().fold(cx(1.0, 0.0), |a, z| a * z);
            let want = q_b_root_product(&p);
            m = worst(m, (prod - want).norm() / want.abs());
        }
        Ok(m)
    });
    vec![
        Check::new(3, "lambda roots vs companion eigenvalues, 100 draws", roots, Bound::Below(1e-9)),
        Check::new(3, "root product (E/4mu)(C/B)^3", product, Bound::Below(1e-9)),
    ]
}

// 4: KLMN orbits

fn orbits() -> Vec<Check> {
    let theta = measure(|| {
        let mut r = rng(30);
        let mut m = 0.0f64;
        for _ in 0..10 {
            let (p, lo, hi) = bound_orbit(&mut r);
            for u0 in [lo, hi] {
                let o = KlmnOrbit::new(p, u0)?;
                let integrand = |z: f64| p.c - p.b * o.u_of_z(z).unwrap_or(f64::NAN);
                m = worst(m, (o.delta_theta()? - integrate(integrand, 0.0, o.omega)?).abs());
                for k in 1..5 {
                    let z = o.omega * k as f64 / 5.0;
                    m = worst(m, (o.theta_of_z(z)? - integrate(integrand, 0.0, z)?).abs());
                }
            }
        }
        Ok(m)
    });
    let time = measure(|| {
        let mut r = rng(31);
        let mut m = 0.0f64;
        for _ in 0..10 {
            let (p, lo, _) = bound_orbit(&mut r);
            let o = KlmnOrbit::new(p, lo)?;
            for k in 1..=20 {
                let z = 1.5 * o.omega * k as f64 / 20.0;
                let want = integrate(|s: f64| o.u_of_z(s).map(|u| u.powi(-2)).unwrap_or(f64::NAN), 0.0, z)?;
                m = worst(m, (o.time_of_z(z)? - want).abs() / want);
            }
        }
        Ok(m)
    });
    let kepler = measure(|| {
        let p = KlmnParams::new(1.0, 0.0, 1.2, -0.3)?;
        let mut m = 0.0f64;
        for u0 in positive_roots(&p) {
            m = worst(m, (KlmnOrbit::new(p, u0)?.delta_theta()? - PI).abs());
        }
        Ok(m)
    });
    let slope = measure(|| Ok(kepler_convergence(1.0, 1.2, -0.25, &[1e-2, 1e-3, 1e-4])?.1));
    let energy = measure(|| {
        let mut r = rng(33);
        let mut m = 0.0f64;
        for _ in 0..10 {
            let (p, _, hi) = bound_orbit(&mut r);
            let o = KlmnOrbit::new(p, hi)?;
            m = worst(m, o.trace(4.0 * o.omega, 200)?.invariant_drift);
        }
        Ok(m)
    });
    vec![
        Check::new(4, "theta(z) vs quadrature", theta, Bound::Below(1e-8)),
        Check::new(4, "t(z) vs quadrature, relative", time, Bound::Below(1e-8)),
        Check::new(4, "B = 0 apse angle minus pi", kepler, Bound::Below(1e-12)),
        Check::new(4, "B -> 0 convergence slope", slope, Bound::Within(0.8, 1.2)),
        Check::new(4, "energy residual along traces", energy, Bound::Below(1e-7)),
    ]
}

// 5: two centres

fn cartesian_rhs(p: &TwoCentreParams) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |_, s| {
        let (x, y) = (s[0], s[1]);
        let r1 = ((x - p.c).powi(2) + y * y).sqrt();
        let r2 = ((x + p.c).powi(2) + y * y).sqrt();
        let ax = -p.mu1 * (x - p.c) / r1.powi(3) - p.mu2 * (x + p.c) / r2.powi(3);
        let ay = -p.mu1 * y / r1.powi(3) - p.mu2 * y / r2.powi(3);
        [s[2], s[3], ax, ay]
    }
}

fn two_centre() -> Vec<Check> {
    let (mut energy, mut bonnet) = (f64::NAN, f64::NAN);
    let _ = (|| -> Res<()> {
        let mut p = TwoCentreParams::new(1.0, 0.7, 0.4, 0.0, 0.0)?;
        let ch: f64 = 1.6;
        p.gamma = (p.mu1 + p.mu2) / (2.0 * p.c) * ch;
        let el = two_centre_ellipse(&p)?;
        p.e = el.energy;
        let orbit = TwoCentreOrbit::new(p, ch, 0.2, 1.0, 1.0)?;
        let (e1, e2) = (-p.mu1 / (2.0 * el.semi_major), -p.mu2 / (2.0 * el.semi_major));
        let (mut me, mut mb) = ((el.energy + (p.mu1 + p.mu2) / (2.0 * el.semi_major)).abs(), 0.0f64);
        for k in 0..20 {
            let z = 0.37 * k as f64;
            let (t, _) = orbit.state(z)?;
            let (r1, r2) = orbit.distances(z)?;
            me = worst(me, (t - ch).abs());
            me = worst(me, (r1 + r2 - 2.0 * el.semi_major).abs());
            let v2 = 2.0 * (p.e + p.mu1 / r1 + p.mu2 / r2);
            mb = worst(mb, (v2 - 2.0 * (e1 + p.mu1 / r1) - 2.0 * (e2 + p.mu2 / r2)).abs());
        }
        energy = me;
        bonnet = mb;
        Ok(())
    })();
    let cartesian = measure(|| {
        let p = TwoCentreParams::new(1.0, 0.6, 0.5, 1.3, -0.45)?;
        let (t0, s0, sx, se) = (1.9, 0.3, 1.0, -1.0);
        let orbit = TwoCentreOrbit::new(p, t0, s0, sx, se)?;
        let c = p.c;
        let (sh, sn) = ((t0 * t0 - 1.0).sqrt(), (1.0 - s0 * s0).sqrt());
        let dzeta_dt = 1.0 / p.time_factor(t0, s0);
        let td = sx * p.q_xi().eval(t0).sqrt() * dzeta_dt;
        let sd = se * p.q_eta().eval(s0).sqrt() * dzeta_dt;
        let (xid, etad) = (td / sh, -sd / sn);
        let start = [c * t0 * s0, c * sh * sn, c * (sh * s0 * xid - t0 * sn * etad), c * (t0 * sn * xid + sh * s0 * etad)];
        let f = cartesian_rhs(&p);
        let (mut state, mut t_prev, mut m) = (start, 0.0, 0.0f64);
        for k in 1..=40 {
            let zeta = 0.1 * k as f64;
            let t = orbit.time(zeta)?;
            state = rk4(&f, t_prev, state, t, 2000);
            t_prev = t;
            let r1 = ((state[0] - c).powi(2) + state[1].powi(2)).sqrt();
            let r2 = ((state[0] + c).powi(2) + state[1].powi(2)).sqrt();
            let (tt, ss) = orbit.state(zeta)?;
            m = worst(m, (tt - (r1 + r2) / (2.0 * c)).abs());
            m = worst(m, (ss - (r2 - r1) / (2.0 * c)).abs());
        }
        Ok(m)
    });
    let dqlc = measure(|| {
        let mut r = rng(41);
        let mut m = 0.0f64;
        for _ in 0..100 {
            let sp = random_semi_classical(&mut r, 0.0)?;
            let pt = EllipticPoint::new(r.gen_range(0.05..2.5), r.gen_range(0.0..2.0 * PI), sp.c);
            let scale = 1.0 + sp.v0_sq(pt.xi).abs() + sp.u0_sq(pt.eta).abs();
            m = worst(m, dqlc_residual(&pt, &sp).abs() / scale);
        }
        Ok(m)
    });
    vec![
        Check::new(5, "ellipse energy and shape, 20 points", energy, Bound::Below(1e-9)),
        Check::new(5, "Bonnet velocity superposition, 20 points", bonnet, Bound::Below(1e-9)),
        Check::new(5, "uniformised vs cartesian RK4", cartesian, Bound::Below(1e-6)),
        Check::new(5, "separation identity, 100 points", dqlc, Bound::Below(1e-9)),
    ]
}

fn random_semi_classical(r: &mut ChaCha8Rng, eps2: f64) -> Res<SemiClassicalParams> {
    let (mu1, mu2, c) = (r.gen_range(0.2..2.0), r.gen_range(0.2..2.0), r.gen_range(0.2..1.5));
    let ch0: f64 = r.gen_range(1.1..3.0);
    SemiClassicalParams::new(mu1, mu2, c, ch0 * c * (mu1 + mu2) / 2.0, eps2)
}

// 6: spirals

fn unwrap_phi(phi: &mut f64, last: &mut f64, x: f64, y: f64) {
    let a = y.atan2(x);
    *phi += (a - *last + PI).rem_euclid(2.0 * PI) - PI;
    *last = a;
}

fn spirals() -> Vec<Check> {
    let restoring = measure(|| {
        let field = SpiralField::Restoring(RestoringParams::new(4.0, 2.75, 1.0, 1.0)?);
        let mut m = 0.0f64;
        for (ch, eta) in [(3.0f64, 0.3), (1.1, 2.0)] {
            let tr = two_centre_spiral_integrate(EllipticPoint::new(ch.acosh(), eta, 1.0), &field, 20.0, 1e-3)?;
            m = worst(m, tr.terminal_gap);
        }
        Ok(m)
    });
    let galaxy = measure(|| {
        let mut r = rng(44);
        let mut m = 0.0f64;
        for _ in 0..3 {
            let lambda: f64 = r.gen_range(0.8..1.5);
            let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.1..0.7) * lambda)?;
            let rc = gp.r_c();
            for start in [[2.5 * rc, 0.3 * rc, 0.8 * rc], [0.3 * rc, -0.2 * rc, 0.1 * rc]] {
                let r0 = (start[0] * start[0] + start[1] * start[1] + start[2] * start[2]).sqrt();
                for (t, s) in &galaxy_integrate(start, &gp, 50.0, 100_000, 1000)? {
                    let rr = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                    let want_r = galaxy_r_of_t(*t, r0, &gp)?;
                    let want_z = galaxy_z_of_t(*t, r0, start[2], &gp)?;
                    m = worst(m, (rr - want_r).abs() / want_r);
                    m = worst(m, (s[2] - want_z).abs() / start[2].abs());
                }
            }
            let rho0 = 3.0 * rc;
            let (mut phi, mut last) = (0.0, 0.0);
            for (_, s) in &galaxy_integrate([rho0, 0.0, 0.0], &gp, 50.0, 100_000, 100)? {
                unwrap_phi(&mut phi, &mut last, s[0], s[1]);
                let want = galaxy_rho_of_phi(phi, rho0, &gp)?;
                m = worst(m, (s[0].hypot(s[1]) - want).abs() / want);
            }
        }
        Ok(m)
    });
    let arc = measure(|| {
        let mut r = rng(45);
        let mut m = 0.0f64;
        for _ in 0..5 {
            let lambda: f64 = r.gen_range(0.8..1.5);
            let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.1..0.8) * lambda)?;
            let rho0 = gp.r_c() * r.gen_range(1.2..5.0);
            let (a, rc) = (gp.alpha(), gp.r_c());
            let b = (rho0 - rc) / rho0;
            let speed = |p: f64| {
                let e = b * (-a * p).exp();
                let rho = rc / (1.0 - e);
                rho.hypot(-a * e * rho * rho / rc)
            };
            let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 4000 };
            for phi in [1.0, 5.0, 20.0] {
                let want = integrate_with(speed, 0.0, phi, opts)?.value;
                m = worst(m, (arc_length(phi, &gp, rho0)? - want).abs() / want);
            }
        }
        Ok(m)
    });
    let decay = measure(|| {
        let mut r = rng(46);
        let mut m = 0.0f64;
        for _ in 0..3 {
            let lambda: f64 = r.gen_range(0.8..1.5);
            let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.2..0.6) * lambda)?;
            let (rc, a) = (gp.r_c(), gp.alpha());
            let b: f64 = 0.5;
            let phi_end = (b / 1e-5).ln() / a;
            let t_end = phi_end * (2.0 * rc).powi(2) / (lambda + gp.sigma2);
            let (mut phis, mut rhos) = (vec![], vec![]);
            let (mut phi, mut last) = (0.0, 0.0);
            for (_, s) in &galaxy_integrate([2.0 * rc, 0.0, 0.0], &gp, t_end, 200_000, 100)? {
                unwrap_phi(&mut phi, &mut last, s[0], s[1]);
                let tail = b * (-a * phi).exp();
                if tail < 1e-3 && tail > 1e-5 {
                    phis.push(phi);
                    rhos.push(s[0].hypot(s[1]));
                }
            }
            if phis.len() <= 20 {
                return Ok(f64::NAN);
            }
            m = worst(m, (decay_exponent(&phis, &rhos, rc)? - a).abs() / a);
        }
        Ok(m)
    });
    let norm = measure(|| {
        let (mu, a, eps) = (1.3, 2.0, 0.05);
        let mut r = rng(48);
        let mut m = 0.0f64;
        for e in [0.0, 0.1, 0.5, 0.9].into_iter().chain((0..5).map(|_| r.gen_range(0.0..0.99))) {
            let closed = normalisation(&EntropyMode::Kepler { mu, a, e }, eps)?;
            let integral = kepler_normalisation_integral(mu, a, e, eps)?;
            m = worst(m, (closed - integral).abs() / integral);
        }
        Ok(m)
    });
    vec![
        Check::new(6, "restoring-force terminal gap", restoring, Bound::Below(1e-3)),
        Check::new(6, "galaxy closed forms vs RK4, t in [0, 50]", galaxy, Bound::Below(1e-6)),
        Check::new(6, "arc length vs quadrature", arc, Bound::Below(1e-8)),
        Check::new(6, "decay exponent relative error", decay, Bound::Below(0.01)),
        Check::new(6, "Kepler normalisation closed vs integral", norm, Bound::Below(1e-8)),
    ]
}

// 7: stochastic mechanics

fn model(dim: usize, pot: Potential, p: [f64; 2]) -> Res<MechanicalModel> {
    MechanicalModel::new(dim, pot, p, [0.1, -0.2], 0.5)
}

fn mc(n_paths: usize, seed: u64) -> McOptions {
    McOptions { n_paths, seed, h: None, check_step: false }
}

/// Heat-kernel convolution of the initial datum over the classical prefactor.
fn free_factor_by_quadrature(m: &MechanicalModel, x: f64, t: f64, sigma: f64) -> Res<f64> {
    let p = m.momentum[0];
    let v = sigma * sigma * t;
    let s_cl = p * (x - p * t) + 0.5 * p * p * t;
    let f = |y: f64| {
        let expo = -(x - y).powi(2) / (2.0 * v) - p * y / (sigma * sigma) + s_cl / (sigma * sigma);
        (2.0 * PI * v).powf(-0.5) * m.t0(&[y]) * expo.exp()
    };
    let c = x - p * t;
    let w = 12.0 * (v.sqrt() + m.amp_width);
    integrate(f, c - w, c + w)
}

fn stochastic() -> Vec<Check> {
    let jacobi = measure(|| {
        let models = [
            model(1, Potential::Free, [0.7, 0.0])?,
            model(2, Potential::Free, [0.7, -0.4])?,
            model(1, Potential::Harmonic { omega: 1.2 }, [0.3, 0.0])?,
            model(2, Potential::Harmonic { omega: 0.9 }, [0.3, -0.5])?,
            model(1, Potential::Quartic { omega: 1.0, g: 0.5 }, [0.2, 0.0])?,
            model(2, Potential::Quartic { omega: 0.8, g: 0.3 }, [0.2, 0.4])?,
        ];
        let mut m = 0.0f64;
        for md in &models {
            let t = 0.5 * md.caustic_time(20.0).min(3.0);
            let x: Vec<f64> = [0.45, -0.3][..md.dim].to_vec();
            m = worst(m, md.jacobi_field(&x, t, 10)?.residual);
        }
        Ok(m)
    });
    let caustic = measure(|| {
        let mut m = 0.0f64;
        for w in [0.5, 1.0, 2.0] {
            let tc = model(1, Potential::Harmonic { omega: w }, [0.4, 0.0])?.caustic_time(50.0);
            m = worst(m, (tc / (PI / (2.0 * w)) - 1.0).abs());
        }
        Ok(m)
    });

    let mut z_max = 0.0f64;
    let mut slowest = 0.0f64;
    let mut timed = |f: &dyn Fn() -> Res<f64>| {
        let start = Instant::now();
        let z = f().unwrap_or(f64::NAN);
        slowest = worst(slowest, start.elapsed().as_secs_f64());
        z_max = worst(z_max, z);
    };
    for sigma in [0.05, 0.2, 1.0] {
        timed(&|| {
            let m = model(1, Potential::Free, [0.0, 0.0])?;
            let est = elementary_formula_mc(&m, &[0.4], 1.0, sigma, mc(100_000, 7))?;
            let want = free_factor_by_quadrature(&m, 0.4, 1.0, sigma)?;
            Ok((est.expectation_mean - want).abs() / est.std_error)
        });
    }
    let cn = model(1, Potential::Harmonic { omega: 1.0 }, [0.0, 0.0]).and_then(|m| crank_nicolson_1d(&m, 0.5, 1.0, 8.0, 3201, 2000));
    for x in [0.0, 0.6] {
        timed(&|| {
            let m = model(1, Potential::Harmonic { omega: 1.0 }, [0.0, 0.0])?;
            let (xs, u) = cn.as_ref().map_err(|e| e.clone())?;
            let est = elementary_formula_mc(&m, &[x], 0.5, 1.0, mc(100_000, 11))?;
            let want = interpolate_uniform(xs, u, x) * (-est.estimate_log_prefactor).exp();
            Ok((est.expectation_mean - want).abs() / est.std_error)
        });
    }

    let slope = |pot: Potential, p: f64, x: f64, t: f64| {
        measure(|| {
            let m = model(1, pot, [p, 0.0])?;
            let lim = m.small_sigma_limit(&[x], t)?;
            let sig = [0.4, 0.2, 0.1, 0.05];
            let mut ly = Vec::new();
            for s in sig {
                ly.push((elementary_formula_mc(&m, &[x], t, s, mc(20_000, 9))?.expectation_mean - lim).abs().ln());
            }
            let lx: Vec<f64> = sig.iter().map(|s| (s * s).ln()).collect();
            Ok(fit_slope(&lx, &ly))
        })
    };
    let free_slope = slope(Potential::Free, 0.5, 0.7, 1.0);
    let harm_slope = slope(Potential::Harmonic { omega: 1.0 }, 0.3, 0.2, 0.8);

    let repro = measure(|| {
        let m = model(2, Potential::Harmonic { omega: 0.9 }, [0.3, -0.5])?;
        let run = || elementary_formula_mc(&m, &[0.2, 0.1], 0.6, 0.5, mc(4_000, 42));
        let (a, b) = (run()?, run()?);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().map(|pool| pool.install(run));
        let same = |x: &elliptic_orbits::stochastic::McEstimate, y: &elliptic_orbits::stochastic::McEstimate| {
            x.expectation_mean.to_bits() == y.expectation_mean.to_bits() && x.std_error.to_bits() == y.std_error.to_bits()
        };
        let c_ok = match single {
            Ok(Ok(c)) => same(&a, &c),
            _ => false,
        };
        Ok(flag(same(&a, &b) && c_ok))
    });

    vec![
        Check::new(7, "Jacobi det identity, free/harmonic/quartic", jacobi, Bound::Below(1e-8)),
        Check::new(7, "harmonic caustic vs pi/(2 omega), relative", caustic, Bound::Below(1e-3)),
        Check::new(7, "MC vs oracles, worst |z| (1e5 paths)", z_max, Bound::Below(3.0)),
        Check::new(7, "slowest MC case [s]", slowest, Bound::Below(120.0)),
        Check::new(7, "small-sigma slope, free", free_slope, Bound::Within(0.7, 1.3)),
        Check::new(7, "small-sigma slope, harmonic", harm_slope, Bound::Within(0.7, 1.3)),
        Check::new(7, "bit-identical reruns (incl. one thread)", repro, Bound::Flag),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Below(1.0).holds(0.5) && !Bound::Below(1.0).holds(f64::NAN));
        assert!(Bound::Within(0.8, 1.2).holds(1.0) && !Bound::Within(0.8, 1.2).holds(1.3));
        assert!(Bound::Flag.holds(1.0) && !Bound::Flag.holds(0.0));
    }

    #[test]
    fn suites_resolve() {
        assert_eq!(criteria_of("all").unwrap(), vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(criteria_of("lambda").unwrap(), vec![3]);
        assert!(criteria_of("bogus").is_err());
    }

    #[test]
    fn worst_propagates_nan() {
        assert!(worst(1.0, f64::NAN).is_nan());
        assert_eq!(worst(1.0, 2.0), 2.0);
    }
}
