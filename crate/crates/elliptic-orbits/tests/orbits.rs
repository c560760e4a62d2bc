mod common;

use std::f64::consts::PI;

use common::{random_klmn, rng};
use elliptic_orbits::ode::rk4;
use elliptic_orbits::orbits::*;
use elliptic_orbits::quad::integrate;
use elliptic_orbits::quartic_lab::{accessible_intervals, KlmnParams};
use elliptic_orbits::Error;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random parameters with a bounded positive well; returns the well.
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

#[test]
fn theta_matches_quadrature_and_derivative() {
    let mut r = rng(30);
    for _ in 0..10 {
        let (p, lo, hi) = bound_orbit(&mut r);
        for u0 in [lo, hi] {
            let o = KlmnOrbit::new(p, u0).unwrap();
            assert!((o.u1 - if u0 == lo { hi } else { lo }).abs() < 1e-8);
            let integrand = |z: f64| p.c - p.b * o.u_of_z(z).unwrap();
            let want = integrate(integrand, 0.0, o.omega).unwrap();
            let got = o.delta_theta().unwrap();
            assert!((got - want).abs() < 1e-8, "Δθ {got} vs {want}");
            for k in 1..5 {
                let z = o.omega * k as f64 / 5.0;
                let h = 1e-5;
                let fd = (o.theta_of_z(z + h).unwrap() - o.theta_of_z(z - h).unwrap()) / (2.0 * h);
                assert!((fd - integrand(z)).abs() < 1e-6, "dθ/dz {fd} vs {}", integrand(z));
                let part = integrate(integrand, 0.0, z).unwrap();
                assert!((o.theta_of_z(z).unwrap() - part).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn time_matches_quadrature() {
    let mut r = rng(31);
    for _ in 0..10 {
        let (p, lo, hi) = bound_orbit(&mut r);
        let o = KlmnOrbit::new(p, lo).unwrap();
        for k in 1..=20 {
            let z = 1.5 * o.omega * k as f64 / 20.0;
            let want = integrate(|s: f64| o.u_of_z(s).unwrap().powi(-2), 0.0, z).unwrap();
            let got = o.time_of_z(z).unwrap();
            assert!((got - want).abs() < 1e-8 * want, "t {got} vs {want}");
            let alt = o.time_of_z_expanded(z).unwrap();
            assert!((alt - got).abs() < 1e-9 * got.abs().max(1.0));
        }
        let h = 1e-6;
        let slope = o.time_of_z(h).unwrap() / h;
        assert!((slope - lo.powi(-2)).abs() < 1e-5 * lo.powi(-2));
        let _ = hi;
    }
}

#[test]
fn turning_points_and_curve() {
    let mut r = rng(32);
    for _ in 0..10 {
        let (p, lo, _) = bound_orbit(&mut r);
        let o = KlmnOrbit::new(p, lo).unwrap();
        let scale = 1.0 + p.quartic().scale();
        assert!(p.f(o.u_of_z(1e-300).unwrap_or(lo)).abs() < 1e-9 * scale);
        assert!(p.f(o.u_of_z(o.omega).unwrap()).abs() < 1e-9 * scale);
        assert!(o.du_dz(o.omega).unwrap().abs() < 1e-6);
        let ctx = o.context().unwrap();
        let map = elliptic_orbits::uniformisation::WellTimeMap::new(p.quartic(), lo).unwrap();
        for k in 1..10 {
            let z = o.omega * k as f64 / 10.0;
            let u = o.u_of_z(z).unwrap();
            let w = map.s_substitution(u).unwrap();
            let dw = map.wp_prime_from_u(u);
            let res = dw * dw - ctx.cubic(w);
            assert!(res.abs() < 1e-8 * (1.0 + dw * dw), "curve residual {res}");
        }
    }
}

#[test]
fn energy_residual_along_traces() {
    let mut r = rng(33);
    for _ in 0..10 {
        let (p, lo, hi) = bound_orbit(&mut r);
        let o = KlmnOrbit::new(p, hi).unwrap();
        let tr = o.trace(4.0 * o.omega, 200).unwrap();
        assert!(tr.invariant_drift < 1e-7, "drift {}", tr.invariant_drift);
        for w in tr.samples.windows(2) {
            assert!(w[1].z > w[0].z && w[1].t > w[0].t);
        }
        for s in &tr.samples {
            assert!(s.r >= 1.0 / hi * (1.0 - 1e-9) && s.r <= 1.0 / lo * (1.0 + 1e-9));
        }
        // θ after two full cycles is four apse-to-apse steps
        let last = tr.samples.last().unwrap();
        assert!((last.theta - 4.0 * o.delta_theta().unwrap()).abs() < 1e-7);
    }
}

#[test]
fn kepler_degeneration() {
    let p = KlmnParams::new(1.0, 0.0, 1.2, -0.25).unwrap();
    let roots = elliptic_orbits::quartic_lab::positive_roots(&p);
    for &u0 in &roots {
        let o = KlmnOrbit::new(p, u0).unwrap();
        assert!((o.delta_theta().unwrap() - PI).abs() < 1e-14);
        assert_eq!(klmn_periodicity(&p, u0, 50).unwrap(), Some((1, 1)));
        for k in 1..10 {
            let z = 2.0 * o.omega * k as f64 / 10.0;
            assert_eq!(o.theta_of_z(z).unwrap(), p.c * z);
            let want = integrate(|s: f64| o.u_of_z(s).unwrap().powi(-2), 0.0, z).unwrap();
            assert!((o.time_of_z(z).unwrap() - want).abs() < 1e-9 * want);
        }
        // focal ellipse l/r = 1 + e cos(θ − θp)
        let (m, h) = (p.mu / (p.c * p.c), (roots[1] - roots[0]) / 2.0);
        let tr = o.trace(2.0 * o.omega, 50).unwrap();
        for s in &tr.samples {
            let shift = if u0 == roots[0] { PI } else { 0.0 };
            assert!((1.0 / s.r - m * (1.0 + h / m * (s.theta - shift).cos())).abs() < 1e-12);
        }
        assert!(tr.invariant_drift < 1e-12);
    }
}

#[test]
fn kepler_convergence_slope() {
    let (errs, slope) = kepler_convergence(1.0, 1.2, -0.25, &[1e-2, 1e-3, 1e-4]).unwrap();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!((0.8..=1.2).contains(&slope), "slope {slope} from {errs:?}");
}

#[test]
fn periodicity_and_apse_classification() {
    let mut r = rng(34);
    let mut none = 0;
    for _ in 0..10 {
        let (p, lo, _) = bound_orbit(&mut r);
        if klmn_periodicity(&p, lo, 50).unwrap().is_none() {
            none += 1;
        }
    }
    assert!(none >= 9);
    // C/B inside the well makes θ̇ change sign
    let mut found = false;
    for _ in 0..400 {
        let (p, lo, hi) = bound_orbit(&mut r);
        let o = KlmnOrbit::new(p, lo).unwrap();
        if o.apse_kind(1e-9) == ApseKind::Loopy {
            let w = p.c / p.b;
            assert!(w > lo && w < hi);
            let signs: Vec<f64> = (0..=20).map(|k| p.c - p.b * o.u_of_z(o.omega * k as f64 / 20.0).unwrap()).collect();
            assert!(signs.iter().any(|s| *s > 0.0) && signs.iter().any(|s| *s < 0.0));
            found = true;
            break;
        }
    }
    assert!(found);
    assert!(matches!(KlmnOrbit::new(KlmnParams::new(1.0, 0.1, 1.0, -0.1).unwrap(), 0.123), Err(Error::DomainError(_))));
}

// ---------------------------------------------------------------------------

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

#[test]
fn two_centre_against_cartesian_oracle() {
    let p = TwoCentreParams::new(1.0, 0.6, 0.5, 1.3, -0.45).unwrap();
    let (t0, s0, sx, se) = (1.9, 0.3, 1.0, -1.0);
    let orbit = TwoCentreOrbit::new(p, t0, s0, sx, se).unwrap();
    // cartesian start with y > 0 (ξ > 0, η ∈ (0, π))
    let c = p.c;
    let (sh, sn) = ((t0 * t0 - 1.0).sqrt(), (1.0 - s0 * s0).sqrt());
    let dzeta_dt = 1.0 / p.time_factor(t0, s0);
    let td = sx * p.q_xi().eval(t0).sqrt() * dzeta_dt;
    let sd = se * p.q_eta().eval(s0).sqrt() * dzeta_dt;
    let (xid, etad) = (td / sh, -sd / sn);
    let start = [c * t0 * s0, c * sh * sn, c * (sh * s0 * xid - t0 * sn * etad), c * (t0 * sn * xid + sh * s0 * etad)];
    let energy = 0.5 * (start[2].powi(2) + start[3].powi(2)) + p.potential(start[0], start[1]);
    assert!((energy - p.e).abs() < 1e-12, "energy {energy}");
    let f = cartesian_rhs(&p);
    let mut state = start;
    let mut t_prev = 0.0;
    let mut worst = 0.0f64;
    for k in 1..=40 {
        let zeta = 0.1 * k as f64;
        let t = orbit.time(zeta).unwrap();
        state = rk4(&f, t_prev, state, t, 2000);
        t_prev = t;
        let r1 = ((state[0] - c).powi(2) + state[1].powi(2)).sqrt();
        let r2 = ((state[0] + c).powi(2) + state[1].powi(2)).sqrt();
        let (tt, ss) = orbit.state(zeta).unwrap();
        worst = worst.max((tt - (r1 + r2) / (2.0 * c)).abs()).max((ss - (r2 - r1) / (2.0 * c)).abs());
    }
    assert!(worst < 1e-6, "uniformised vs cartesian {worst}");
}

#[test]
fn two_centre_defining_odes() {
    let p = TwoCentreParams::new(1.0, 0.6, 0.5, 1.3, -0.45).unwrap();
    let orbit = TwoCentreOrbit::new(p, 1.9, 0.3, 1.0, -1.0).unwrap();
    let h = 1e-5;
    for k in 1..20 {
        let z = 0.2 * k as f64;
        let (a, b) = (orbit.state(z + h).unwrap(), orbit.state(z - h).unwrap());
        let (t, s) = orbit.state(z).unwrap();
        let (dt, ds) = ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h));
        assert!((dt * dt - p.q_xi().eval(t)).abs() < 1e-6);
        assert!((ds * ds - p.q_eta().eval(s)).abs() < 1e-6);
    }
    // printed structure of Q_ξ
    let mut r = rng(35);
    for _ in 0..5 {
        let t: f64 = r.gen_range(-3.0..3.0);
        let want = (t * t - 1.0) * (p.e * t * t + (p.mu1 + p.mu2) / p.c * t - p.gamma);
        assert!((p.q_xi().eval(t) - want).abs() < 1e-12 * (1.0 + want.abs()));
    }
}

#[test]
fn two_centre_ellipse_and_bonnet() {
    let mut p = TwoCentreParams::new(1.0, 0.7, 0.4, 0.0, 0.0).unwrap();
    let ch: f64 = 1.6;
    p.gamma = (p.mu1 + p.mu2) / (2.0 * p.c) * ch;
    let el = two_centre_ellipse(&p).unwrap();
    assert!((el.energy + (p.mu1 + p.mu2) / (2.0 * el.semi_major)).abs() < 1e-15);
    assert!((el.semi_major * el.eccentricity - p.c).abs() < 1e-15);
    p.e = el.energy;
    let orbit = TwoCentreOrbit::new(p, ch, 0.2, 1.0, 1.0).unwrap();
    let (e1, e2) = (-p.mu1 / (2.0 * el.semi_major), -p.mu2 / (2.0 * el.semi_major));
    for k in 0..20 {
        let z = 0.37 * k as f64;
        let (t, _) = orbit.state(z).unwrap();
        assert_eq!(t, ch);
        let (r1, r2) = orbit.distances(z).unwrap();
        let v2 = 2.0 * (p.e + p.mu1 / r1 + p.mu2 / r2);
        let (v1s, v2s) = (2.0 * (e1 + p.mu1 / r1), 2.0 * (e2 + p.mu2 / r2));
        assert!((v2 - v1s - v2s).abs() < 1e-9);
        assert!((r1 + r2 - 2.0 * el.semi_major).abs() < 1e-12);
    }
    // one centre: Kepler energy
    let mut k = TwoCentreParams::new(1.3, 0.0, 0.4, 0.0, 0.0).unwrap();
    k.gamma = k.mu1 / (2.0 * k.c) * 2.5;
    let el = two_centre_ellipse(&k).unwrap();
    assert!((el.energy + k.mu1 / (2.0 * el.semi_major)).abs() < 1e-15);
    k.gamma = 0.1;
    assert!(matches!(two_centre_ellipse(&k), Err(Error::NoEllipse(_))));
}
