mod common;

use common::rng;
use elliptic_orbits::elliptic::QuarticCoeffs;
use elliptic_orbits::ode::rk4_path;
use elliptic_orbits::uniformisation::*;
use elliptic_orbits::Error;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

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

fn check_round_trip(map: &WellTimeMap, us: impl Iterator<Item = f64>) -> f64 {
    let mut worst = 0.0f64;
    for u in us {
        let z = map.well_time(u).unwrap();
        assert!(z > 0.0);
        let back = map.u_from_z(z).unwrap();
        worst = worst.max((back - u).abs());
    }
    worst
}

#[test]
fn lemniscatic_series() {
    // ∫_0^x dt/√(1 − t⁴) = Σ C(2n, n)/4ⁿ · x^{4n+1}/(4n+1)
    let map = WellTimeMap::new(QuarticCoeffs::from_monomial(-1.0, 0.0, 0.0, 0.0, 1.0), 0.0).unwrap();
    let x: f64 = 0.5;
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..60 {
        if n > 0 {
            term *= (2 * n - 1) as f64 / (2 * n) as f64;
        }
        sum += term * x.powi(4 * n + 1) / (4 * n + 1) as f64;
    }
    assert!((map.well_time(x).unwrap() - sum).abs() < 1e-10);
}

#[test]
fn well_time_monotone_and_checked() {
    let mut r = rng(11);
    let (q, lo, hi) = random_well(&mut r);
    let map = WellTimeMap::new(q, lo).unwrap();
    assert!(map.is_root);
    let mut last = 0.0;
    for k in 1..=20 {
        let z = map.well_time(lo + (hi - lo) * k as f64 / 20.0).unwrap();
        assert!(z > last);
        last = z;
    }
    assert!(matches!(map.well_time(hi + 0.1), Err(Error::NegativeIntegrand { .. })));
}

#[test]
fn root_base_round_trip_and_turning_point() {
    let mut r = rng(12);
    for _ in 0..20 {
        let (q, lo, hi) = random_well(&mut r);
        for (a, other) in [(lo, hi), (hi, lo)] {
            let map = WellTimeMap::new(q, a).unwrap();
            assert!(map.is_root);
            let us = (1..20).map(|k| a + (other - a) * k as f64 / 20.0);
            let err = check_round_trip(&map, us);
            assert!(err < 1e-8, "root round trip error {err}");
            // the half period reaches the other turning point
            let omega = map.context.omega;
            let z_other = map.well_time(other).unwrap();
            assert!((z_other - omega).abs() < 1e-8, "{z_other} vs ω = {omega}");
            assert!((map.u_from_z_root(omega).unwrap() - other).abs() < 1e-8);
        }
    }
}

#[test]
fn non_root_round_trip_both_signs() {
    let mut r = rng(13);
    for _ in 0..20 {
        let (q, lo, hi) = random_well(&mut r);
        let a = lo + (hi - lo) * r.gen_range(0.2..0.8);
        let up = WellTimeMap::new(q, a).unwrap();
        let err = check_round_trip(&up, (1..20).map(|k| a + (hi - a) * k as f64 / 20.0));
        assert!(err < 1e-8, "outgoing {err}");
        let down = WellTimeMap::new(q, a).unwrap().with_sqrt_sign(-1.0).unwrap();
        let err = check_round_trip(&down, (1..20).map(|k| a - (a - lo) * k as f64 / 20.0));
        assert!(err < 1e-8, "incoming {err}");
    }
}

#[test]
fn biermann_agrees_with_mordell() {
    let mut r = rng(14);
    for _ in 0..10 {
        let (q, lo, hi) = random_well(&mut r);
        let a = lo + (hi - lo) * r.gen_range(0.2..0.8);
        for sign in [1.0, -1.0] {
            let map = WellTimeMap::new(q, a).unwrap().with_sqrt_sign(sign).unwrap();
            let period = 2.0 * map.context.omega;
            for _ in 0..50 {
                let z = r.gen_range(0.01..0.99) * period;
                let (b, m) = (map.u_from_z_biermann(z), map.u_from_z_mordell(z));
                if let (Ok(b), Ok(m)) = (b, m) {
                    assert!((b - m).abs() < 1e-9 * (1.0 + b.abs()), "z = {z}: {b} vs {m}");
                }
            }
        }
    }
}

#[test]
fn biermann_reduces_to_root_formula() {
    let mut r = rng(15);
    let (q, lo, _) = random_well(&mut r);
    let map = WellTimeMap::new(q, lo).unwrap();
    for k in 1..10 {
        let z = map.context.omega * k as f64 / 10.0;
        let (b, root) = (map.u_from_z_biermann(z).unwrap(), map.u_from_z_root(z).unwrap());
        assert!((b - root).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn s_is_wp_of_well_time() {
    let mut r = rng(16);
    for _ in 0..10 {
        let (q, lo, hi) = random_well(&mut r);
        let a = lo + (hi - lo) * r.gen_range(0.2..0.8);
        let map = WellTimeMap::new(q, a).unwrap();
        for _ in 0..5 {
            let u = a + (hi - a) * r.gen_range(0.05..0.95);
            let z = map.well_time(u).unwrap();
            let s = map.s_substitution(u).unwrap();
            let p = map.context.wp_real(z).unwrap();
            assert!((s - p).abs() < 1e-8 * (1.0 + p.abs()), "s = {s}, ℘ = {p}");
            assert!((map.s_expanded(u) - s).abs() < 1e-10 * (1.0 + s.abs()));
            let dp = map.context.wp_prime_real(z).unwrap();
            assert!((map.wp_prime_from_u(u) - dp).abs() < 1e-8 * (1.0 + dp.abs()), "{} vs {dp}", map.wp_prime_from_u(u));
        }
    }
}

#[test]
fn root_s_matches_closed_inversion() {
    let mut r = rng(17);
    let (q, lo, hi) = random_well(&mut r);
    let map = WellTimeMap::new(q, lo).unwrap();
    let d = map.base_derivatives();
    for k in 1..10 {
        let t = lo + (hi - lo) * k as f64 / 10.0;
        let s = map.s_substitution(t).unwrap();
        assert!((s - d[2] / 24.0 - d[1] / (4.0 * (t - lo))).abs() < 1e-10 * (1.0 + s.abs()));
    }
}

#[test]
fn g_squared_identity() {
    let mut r = rng(18);
    let mut n = 0;
    while n < 100 {
        let c: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
        let q = QuarticCoeffs::new(c[0], c[1], c[2], c[3], c[4]);
        let (a, t) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        if q.eval(a) <= 0.0 || q.eval(t) <= 0.0 || (t - a).abs() < 0.05 || !q.has_no_repeated_factors(1e-6) {
            continue;
        }
        let Ok(map) = WellTimeMap::new(q, a) else { continue };
        n += 1;
        let s = map.s_substitution(t).unwrap();
        let g = map.g_of_t(t);
        let inv = q.invariants();
        let rhs = 4.0 * s.powi(3) - inv.g2 * s - inv.g3;
        let h6 = (t - a).powi(6);
        let size = h6 * (4.0 * s.abs().powi(3) + inv.g2.abs() * s.abs() + inv.g3.abs());
        assert!((h6 * g * g - h6 * rhs).abs() < 1e-8 * size, "G² = {}, S = {rhs}", g * g);
        // F(t) printed form equals (f(t) + f(a))/2 − (t − a)²(a0(t + a)²/2 + 2a1(t + a) + 2a2)
        let alt = 0.5 * (q.eval(t) + q.eval(a)) - (t - a).powi(2) * (0.5 * q.a0 * (t + a).powi(2) + 2.0 * q.a1 * (t + a) + 2.0 * q.a2);
        assert!((map.big_f(t) - alt).abs() < 1e-12 * (1.0 + alt.abs()));
    }
}

#[test]
fn russell_map_factorises_cubic() {
    let mut r = rng(19);
    for _ in 0..50 {
        let mut v: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        if v.windows(2).any(|w| w[0] - w[1] < 0.05) {
            continue;
        }
        let a0 = r.gen_range(0.5..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let q = expand(a0, &[(v[0], 0.0), (v[1], 0.0), (v[2], 0.0), (v[3], 0.0)]);
        let inv = q.invariants();
        let roots = (v[0], v[1], v[2], v[3]);
        let x = r.gen_range(-3.0..3.0);
        if (x - v[0]).abs() < 0.05 {
            continue;
        }
        let (s, d1, d2, d3) = russell_root_map(x, roots, a0).unwrap();
        let cubic = 4.0 * s.powi(3) - inv.g2 * s - inv.g3;
        let size = 4.0 * s.abs().powi(3) + inv.g2.abs() * s.abs() + inv.g3.abs();
        assert!((d1 * d2 * d3 - cubic / 4.0).abs() < 1e-9 * size);
        // the printed differences use the roots of 4s³ − g2 s − g3
        let mut es = [s - d1, s - d2, s - d3];
        es.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = elliptic_orbits::elliptic::cubic_roots(inv.g2, inv.g3).unwrap().iter().map(|z| z.re).collect();
        want.sort_by(f64::total_cmp);
        for (e, w) in es.iter().zip(&want) {
            assert!((e - w).abs() < 1e-9 * (1.0 + w.abs()));
        }
        // cross-multiplied fractional-linear form of s − e1
        let (al, be, ga, de) = roots;
        let res = (s - d1 + d1) * (x - al) - a0 / 12.0 * (al - be) * (al - ga) * (al - de) * ((x - be) / (al - be) + (x - ga) / (al - ga) + (x - de) / (al - de));
        assert!(res.abs() < 1e-10 * (1.0 + s.abs()) * (1.0 + x.abs()));
        let d1x = d1 * (x - al) - a0 / 4.0 * (al - ga) * (al - de) * (x - be);
        assert!(d1x.abs() < 1e-10 * (1.0 + d1.abs()) * (1.0 + x.abs()));
        // finite limit as x → ∞
        let far = russell_root_map(1e7, roots, a0).unwrap().0;
        let lim = a0 / 12.0 * (al - be) * (al - ga) * (al - de) * (1.0 / (al - be) + 1.0 / (al - ga) + 1.0 / (al - de));
        assert!((far - lim).abs() < 1e-5 * (1.0 + lim.abs()));
    }
    assert!(matches!(russell_root_map(1.0, (1.0, 0.0, -1.0, -2.0), 1.0), Err(Error::PoleAt(_))));
}

#[test]
fn fractional_linear_invariance() {
    let mut r = rng(20);
    let (q, lo, _) = random_well(&mut r);
    let (l, m, lp, mp) = copson_transform(&q, lo).unwrap();
    let c = flt_invariance_check(&q, l, m, lp, mp).unwrap();
    assert!((c.det - 1.0).abs() < 1e-14);
    assert!((c.g2_ratio - 1.0).abs() < 1e-9 && (c.g3_ratio - 1.0).abs() < 1e-9);
    assert!(c.transformed.a0.abs() < 1e-10 && c.transformed.a2.abs() < 1e-10);
    for _ in 0..10 {
        let (l, m, lp): (f64, f64, f64) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(0.5..2.0));
        let mp = (2.0 + lp * m) / l;
        if !mp.is_finite() || l.abs() < 0.1 {
            continue;
        }
        let c = flt_invariance_check(&q, l, m, lp, mp).unwrap();
        assert!((c.det - 2.0).abs() < 1e-12);
        assert!((c.g2_ratio - 16.0).abs() < 1e-8 * 16.0 && (c.g3_ratio - 64.0).abs() < 1e-8 * 64.0);
    }
}

#[test]
fn euler_first_integral() {
    // x″ = X′/2, y″ = Y′/2 with dx/√X + dy/√Y = 0 carried by the velocities
    let q = QuarticCoeffs::new(-1.0, 0.1, 0.2, 0.05, 1.0);
    let d = |t: f64| q.derivatives(t)[1];
    let (x0, y0) = (0.2, -0.3);
    let s0 = [x0, q.eval(x0).sqrt(), y0, -q.eval(y0).sqrt()];
    let integral = |s: &[f64; 4]| {
        let (x, xd, y, yd) = (s[0], s[1], s[2], s[3]);
        ((xd + yd) / (x - y)).powi(2) - q.a0 * (x + y).powi(2) - 4.0 * q.a1 * (x + y)
    };
    let c0 = integral(&s0);
    let path = rk4_path(|_, s: &[f64; 4]| [s[1], 0.5 * d(s[0]), s[3], 0.5 * d(s[2])], 0.0, s0, 3.0, 30000, 100);
    for (_, s) in &path {
        assert!((integral(s) - c0).abs() < 1e-6, "drift {}", integral(s) - c0);
    }
}

#[test]
fn homogeneity() {
    let mut r = rng(21);
    let (q, lo, hi) = random_well(&mut r);
    let a = 0.5 * (lo + hi);
    let lam: f64 = 1.7;
    let (m1, m2) = (WellTimeMap::new(q, a).unwrap(), WellTimeMap::new(q.scaled(lam * lam), a).unwrap());
    for k in 1..10 {
        let u = a + (hi - a) * k as f64 / 10.0;
        let (z1, z2) = (m1.well_time(u).unwrap(), m2.well_time(u).unwrap());
        assert!((z2 - z1 / lam).abs() < 1e-10);
        assert!((m2.u_from_z(z2).unwrap() - u).abs() < 1e-8);
    }
}
