mod common;

use std::f64::consts::PI;

use common::rng;
use elliptic_orbits::orbits::{fit_slope, KlmnOrbit};
use elliptic_orbits::quad::{integrate, integrate_with, QuadOptions};
use elliptic_orbits::quartic_lab::KlmnParams;
use elliptic_orbits::spirals::*;
use elliptic_orbits::Error;
use rand::Rng;

#[test]
fn elliptic_coordinates_round_trip() {
    let mut r = rng(40);
    let c = 0.8;
    for _ in 0..1000 {
        let (x, y): (f64, f64) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let p = cart_to_elliptic(x, y, c, None).unwrap();
        assert!(p.xi >= 0.0 && (0.0..2.0 * PI).contains(&p.eta));
        let w = num_complex::Complex64::new(p.xi, p.eta).cosh() * c;
        assert!((w.re - x).abs() < 1e-10 * c && (w.im - y).abs() < 1e-10 * c);
        let (x2, y2) = p.to_cartesian();
        let q = cart_to_elliptic(x2, y2, c, None).unwrap();
        assert!((q.xi - p.xi).abs() < 1e-10);
        let d = (q.eta - p.eta).rem_euclid(2.0 * PI);
        assert!(d.min(2.0 * PI - d) < 1e-10);
    }
    let up = cart_to_elliptic(0.3, 0.0, c, Some(CutSide::Upper)).unwrap();
    let down = cart_to_elliptic(0.3, 0.0, c, Some(CutSide::Lower)).unwrap();
    assert_eq!(up.xi, 0.0);
    assert!((up.eta + down.eta - 2.0 * PI).abs() < 1e-15);
    assert!((up.to_cartesian().0 - 0.3).abs() < 1e-15);
}

fn random_semi_classical(r: &mut impl Rng, eps2: f64) -> SemiClassicalParams {
    let (mu1, mu2, c) = (r.gen_range(0.2..2.0), r.gen_range(0.2..2.0), r.gen_range(0.2..1.5));
    // cosh ξ0 ∈ (1.1, 3)
    let ch0: f64 = r.gen_range(1.1..3.0);
    SemiClassicalParams::new(mu1, mu2, c, ch0 * c * (mu1 + mu2) / 2.0, eps2).unwrap()
}

#[test]
fn dqlc_holds() {
    let mut r = rng(41);
    for _ in 0..100 {
        let sp = random_semi_classical(&mut r, 0.0);
        let pt = EllipticPoint::new(r.gen_range(0.05..2.5), r.gen_range(0.0..2.0 * PI), sp.c);
        let scale = 1.0 + sp.v0_sq(pt.xi).abs() + sp.u0_sq(pt.eta).abs();
        assert!(dqlc_residual(&pt, &sp).abs() < 1e-9 * scale);
        // v0² is a perfect square vanishing at the ellipse; u0² stays positive
        assert!((sp.v0(pt.xi).powi(2) - sp.v0_sq(pt.xi)).abs() < 1e-10 * scale);
        assert!(sp.u0_sq(pt.eta) > 0.0);
    }
    // restoring force: the same identity for arbitrary E and γ²
    for _ in 0..100 {
        let (mu1, mu2, c, w): (f64, f64, f64, f64) =
            (r.gen_range(0.2..2.0), r.gen_range(0.2..2.0), r.gen_range(0.2..1.5), r.gen_range(0.2..2.0));
        let (e, g2) = (r.gen_range(-2.0..0.5), r.gen_range(0.0..3.0));
        let (xi, eta): (f64, f64) = (r.gen_range(0.05..2.0), r.gen_range(0.0..2.0 * PI));
        let (ch, cs) = (xi.cosh(), eta.cos());
        let v = -(mu1 / (ch - cs) + mu2 / (ch + cs)) / c + 0.5 * (w * c).powi(2) * (ch * ch + cs * cs - 1.0);
        let lhs = 2.0 * c * c * (ch * ch - cs * cs) * (v - e);
        let rhs = restoring_v0_sq(xi, mu1 + mu2, c, w, e, g2) - restoring_u0_sq(eta, mu1 - mu2, c, w, e, g2);
        assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}

#[test]
fn gradients_of_r_and_s_are_orthogonal() {
    let sp = SemiClassicalParams::new(1.0, 0.6, 0.7, 1.2, 0.0).unwrap();
    let c = sp.c;
    let s_of = |eta: f64| integrate(|t| sp.u0(t), 0.5, eta).unwrap();
    let fields = |x: f64, y: f64| {
        let p = cart_to_elliptic(x, y, c, None).unwrap();
        (sp.r_function(p.xi, p.eta), s_of(p.eta))
    };
    for (x, y) in [(0.9, 0.4), (-0.3, 1.1), (1.6, -0.7)] {
        let h = 1e-5;
        let (rxp, sxp) = fields(x + h, y);
        let (rxm, sxm) = fields(x - h, y);
        let (ryp, syp) = fields(x, y + h);
        let (rym, sym) = fields(x, y - h);
        let gr = ((rxp - rxm) / (2.0 * h), (ryp - rym) / (2.0 * h));
        let gs = ((sxp - sxm) / (2.0 * h), (syp - sym) / (2.0 * h));
        let dot = gr.0 * gs.0 + gr.1 * gs.1;
        let norm = (gr.0.hypot(gr.1) * gs.0.hypot(gs.1)).max(1e-12);
        assert!(dot.abs() < 1e-7 * norm, "∇R·∇S = {dot}");
    }
}

#[test]
fn two_centre_spiral_converges_with_monotone_r() {
    let mut r = rng(42);
    for _ in 0..3 {
        let sp = random_semi_classical(&mut r, 0.0);
        let field = SpiralField::TwoCentre(sp);
        let xi0 = sp.cosh_xi0().acosh();
        let start = EllipticPoint::new(xi0 + 0.6, 0.4, sp.c);
        let tr = two_centre_spiral_integrate(start, &field, 60.0, 0.002).unwrap();
        assert!(tr.terminal_gap < 1e-3, "gap {}", tr.terminal_gap);
        let rs: Vec<f64> = tr.samples.iter().map(|s| field.r_function(s.xi, s.eta)).collect();
        let scale = rs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(rs.windows(2).all(|w| w[1] - w[0] >= -1e-9 * scale));
    }
}

#[test]
fn restoring_spiral_converges_to_ellipse() {
    // a = ((μ1+μ2)/(2ω²))^{1/3}/c = 1.5
    let p = RestoringParams::new(4.0, 2.75, 1.0, 1.0).unwrap();
    assert!((p.a() - 1.5).abs() < 1e-14);
    assert!(p.u0_sq_min() > 0.0);
    let field = SpiralField::Restoring(p);
    for (ch, eta) in [(3.0f64, 0.3), (1.1, 2.0)] {
        let tr = two_centre_spiral_integrate(EllipticPoint::new(ch.acosh(), eta, 1.0), &field, 20.0, 1e-3).unwrap();
        assert!(tr.terminal_gap < 1e-3, "gap {}", tr.terminal_gap);
        let rs: Vec<f64> = tr.samples.iter().step_by(200).map(|s| field.r_function(s.xi, s.eta)).collect();
        assert!(rs.windows(2).all(|w| w[1] - w[0] >= -1e-9));
    }
}

#[test]
fn semi_classical_correction_is_linear_in_eps2() {
    let base = SemiClassicalParams::new(1.0, 0.5, 0.6, 1.0, 0.0).unwrap();
    let xi0 = base.cosh_xi0().acosh();
    let start = EllipticPoint::new(xi0 + 1.0, 0.7, base.c);
    let run = |eps2: f64| {
        let f = SpiralField::TwoCentre(SemiClassicalParams { eps2, ..base });
        two_centre_spiral_integrate(start, &f, 1.0, 1e-4).unwrap().samples
    };
    let reference = run(0.0);
    let (mut xs, mut ys) = (vec![], vec![]);
    for eps2 in [1e-2, 1e-3, 1e-4] {
        let path = run(eps2);
        let dev = path
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a.x - b.x).hypot(a.y - b.y))
            .fold(0.0f64, f64::max);
        xs.push(eps2.ln());
        ys.push(dev.ln());
    }
    let slope = fit_slope(&xs, &ys);
    assert!((slope - 1.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn galaxy_field_identities() {
    let mut r = rng(43);
    for _ in 0..50 {
        let gp = GalaxySpiralParams::new(r.gen_range(0.3..2.0), r.gen_range(0.5..2.0), 0.0f64.max(0.1)).unwrap();
        let (x, y, z): (f64, f64, f64) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-1.0..1.0));
        let v = galaxy_spiral_rhs(x, y, z, &gp).unwrap();
        let rr = (x * x + y * y + z * z).sqrt();
        let rdot = (x * v[0] + y * v[1] + z * v[2]) / rr;
        assert!((rdot - gp.radial_rate(rr)).abs() < 1e-12 * (1.0 + rdot.abs()));
        let q = x * x + y * y;
        let phidot = (x * v[1] - y * v[0]) / q;
        assert!((phidot - gp.angular_rate(q.sqrt())).abs() < 1e-12 * (1.0 + phidot.abs()));
        // dv/dt = (v·∇)v = −∇V_eff
        let h = 1e-6;
        let f = |p: [f64; 3]| galaxy_spiral_rhs(p[0], p[1], p[2], &gp).unwrap();
        let mut acc = [0.0; 3];
        let mut grad = [0.0; 3];
        for k in 0..3 {
            let (mut a, mut b) = ([x, y, z], [x, y, z]);
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (f(a), f(b));
            for i in 0..3 {
                acc[i] += v[k] * (fa[i] - fb[i]) / (2.0 * h);
            }
            grad[k] = (gp.v_eff(a[0], a[1], a[2]) - gp.v_eff(b[0], b[1], b[2])) / (2.0 * h);
        }
        for i in 0..3 {
            assert!((acc[i] + grad[i]).abs() < 1e-6 * (1.0 + acc[i].abs()), "{acc:?} vs {grad:?}");
        }
    }
    assert_eq!(galaxy_spiral_rhs(0.0, 0.0, 1.0, &GalaxySpiralParams::new(1.0, 1.0, 0.5).unwrap()), Err(Error::AxisSingularity));
    // circular radius on the invariant plane
    let gp = GalaxySpiralParams::new(0.9, 1.3, 0.4).unwrap();
    assert_eq!(gp.radial_rate(gp.r_c()), 0.0);
    // classical limit r_c → λ²/μ and doubled angular momentum as σ² → λ
    let near = GalaxySpiralParams::new(0.9, 1.3, 1e-12).unwrap();
    assert!((near.r_c() - 1.3 * 1.3 / 0.9).abs() < 1e-11);
    let top = GalaxySpiralParams::new(0.9, 1.3, 1.3 - 1e-12).unwrap();
    assert!((top.angular_rate(1.0) - 2.0 * 1.3).abs() < 1e-11);
}

#[test]
fn galaxy_closed_forms_match_rk4() {
    let mut r = rng(44);
    for _ in 0..3 {
        let lambda: f64 = r.gen_range(0.8..1.5);
        let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.1..0.7) * lambda).unwrap();
        let rc = gp.r_c();
        for start in [[2.5 * rc, 0.3 * rc, 0.8 * rc], [0.3 * rc, -0.2 * rc, 0.1 * rc]] {
            let r0 = (start[0] * start[0] + start[1] * start[1] + start[2] * start[2]).sqrt();
            let path = galaxy_integrate(start, &gp, 50.0, 100_000, 1000).unwrap();
            for (t, s) in &path {
                let rr = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                let want_r = galaxy_r_of_t(*t, r0, &gp).unwrap();
                let want_z = galaxy_z_of_t(*t, r0, start[2], &gp).unwrap();
                assert!((rr - want_r).abs() < 1e-6 * want_r, "r {rr} vs {want_r} at {t}");
                assert!((s[2] - want_z).abs() < 1e-6 * start[2].abs(), "z {} vs {want_z}", s[2]);
            }
        }
        // planar outer spiral ρ(φ)
        let rho0 = 3.0 * rc;
        let path = galaxy_integrate([rho0, 0.0, 0.0], &gp, 50.0, 100_000, 100).unwrap();
        let mut phi = 0.0;
        let mut last = 0.0;
        for (_, s) in &path {
            let a = s[1].atan2(s[0]);
            phi += (a - last + PI).rem_euclid(2.0 * PI) - PI;
            last = a;
            let rho = s[0].hypot(s[1]);
            let want = galaxy_rho_of_phi(phi, rho0, &gp).unwrap();
            assert!((rho - want).abs() < 1e-6 * want);
        }
        assert!(matches!(galaxy_rho_of_phi(1.0, 0.5 * rc, &gp), Err(Error::BranchError(_))));
    }
}

#[test]
fn arc_length_closed_form() {
    let mut r = rng(45);
    for _ in 0..5 {
        let lambda: f64 = r.gen_range(0.8..1.5);
        let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.1..0.8) * lambda).unwrap();
        let rho0 = gp.r_c() * r.gen_range(1.2..5.0);
        let (a, rc) = (gp.alpha(), gp.r_c());
        let b = (rho0 - rc) / rho0;
        let speed = |p: f64| {
            let e = b * (-a * p).exp();
            let rho = rc / (1.0 - e);
            let drho = -a * e * rho * rho / rc;
            rho.hypot(drho)
        };
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 4000 };
        for phi in [1.0, 5.0, 20.0] {
            let want = integrate_with(speed, 0.0, phi, opts).unwrap().value;
            let got = arc_length(phi, &gp, rho0).unwrap();
            assert!((got - want).abs() < 1e-8 * want, "L({phi}) {got} vs {want}");
        }
        // far along the arm (b e^{−αφ} = 1e−6) the arc grows at rate r_c
        let (h, far) = (1e-3, (b / 1e-6).ln() / a);
        let slope = (arc_length(far + h, &gp, rho0).unwrap() - arc_length(far - h, &gp, rho0).unwrap()) / (2.0 * h);
        assert!((slope - rc).abs() < 1e-5 * rc, "{slope} vs {rc}");
    }
}

#[test]
fn decay_exponent_is_alpha() {
    let mut r = rng(46);
    for _ in 0..3 {
        let lambda: f64 = r.gen_range(0.8..1.5);
        let gp = GalaxySpiralParams::new(r.gen_range(0.5..1.5), lambda, r.gen_range(0.2..0.6) * lambda).unwrap();
        let (rc, a) = (gp.r_c(), gp.alpha());
        let rho0 = 2.0 * rc;
        let b: f64 = 0.5;
        // integrate until b e^{−αφ} ≈ 1e−5
        let phi_end = (b / 1e-5).ln() / a;
        let t_end = phi_end * (2.0 * rc).powi(2) / (lambda + gp.sigma2);
        let path = galaxy_integrate([rho0, 0.0, 0.0], &gp, t_end, 200_000, 100).unwrap();
        let (mut phis, mut rhos) = (vec![], vec![]);
        let (mut phi, mut last) = (0.0, 0.0);
        for (_, s) in &path {
            let ang = s[1].atan2(s[0]);
            phi += (ang - last + PI).rem_euclid(2.0 * PI) - PI;
            last = ang;
            if b * (-a * phi).exp() < 1e-3 && b * (-a * phi).exp() > 1e-5 {
                phis.push(phi);
                rhos.push(s[0].hypot(s[1]));
            }
        }
        assert!(phis.len() > 20);
        let fitted = decay_exponent(&phis, &rhos, rc).unwrap();
        assert!((fitted - a).abs() < 0.01 * a, "fitted {fitted} vs α {a}");
    }
}

#[test]
fn entropies() {
    let mut r = rng(47);
    for _ in 0..200 {
        let e: f64 = r.gen_range(0.0..0.95);
        let theta: f64 = r.gen_range(0.0..2.0 * PI);
        for mode in [EntropyMode::Kepler { mu: 1.3, a: 2.0, e }, EntropyMode::TwoCentre { mu_sum: 1.7, a: 1.4, e }] {
            let r0 = mode.r0(theta);
            assert_eq!(entropy(r0, theta, 0.1, &mode).unwrap(), 0.0);
            assert!(entropy(r0 * 1.01, theta, 0.1, &mode).unwrap() < 0.0);
            assert!(entropy(r0 * 0.97, theta, 0.1, &mode).unwrap() < 0.0);
        }
    }
    let (m, a, eps) = (1.7f64, 1.4f64, 0.2f64);
    let mode = EntropyMode::TwoCentre { mu_sum: m, a, e: 0.0 };
    let got = entropy(a + 0.1, 1.0, eps, &mode).unwrap();
    let want = -(m / a.powi(3)).sqrt() / (2.0 * eps * eps) * 0.01;
    assert!((got - want).abs() < 1e-14 * want.abs());
}

#[test]
fn normalisations() {
    let mut r = rng(48);
    let (mu, a, eps) = (1.3, 2.0, 0.05);
    for e in [0.0, 0.1, 0.5, 0.9].into_iter().chain((0..5).map(|_| r.gen_range(0.0..0.99))) {
        let closed = normalisation(&EntropyMode::Kepler { mu, a, e }, eps).unwrap();
        let integral = kepler_normalisation_integral(mu, a, e, eps).unwrap();
        assert!((closed - integral).abs() < 1e-8 * integral, "e={e}: {closed} vs {integral}");
        let tube = tube_normalisation(&EntropyMode::Kepler { mu, a, e }, eps).unwrap();
        assert!((tube - integral).abs() < 1e-8 * integral);
    }
    let e0 = normalisation(&EntropyMode::Kepler { mu, a, e: 0.0 }, eps).unwrap();
    let want = 2.0 * (2.0 * PI).sqrt() * a * (a.powi(3) / mu).powf(0.25) * eps * PI;
    assert!((e0 - want).abs() < 1e-13 * want);

    let (m, big_a) = (1.7, 1.4);
    for e in [0.0, 0.3, 0.8] {
        let mode = EntropyMode::TwoCentre { mu_sum: m, a: big_a, e };
        let closed = normalisation(&mode, eps).unwrap();
        let want = (2.0 * PI).powf(1.5) * big_a * (big_a.powi(3) / m).powf(0.25) * (1.0 - e * e).powf(0.75) * eps;
        assert!((closed - want).abs() < 1e-15 * want);
        // the gaussian-tube integral of the two-centre entropy agrees only at e = 0
        let tube = tube_normalisation(&mode, eps).unwrap();
        let ratio = 2.0 * (1.0 - e * e) / (2.0 - e * e);
        assert!((closed / tube - ratio).abs() < 1e-10);
    }
}

#[test]
fn ring_statistics_on_closed_orbits() {
    // Kepler ellipse: period (1, 1)
    let p = KlmnParams::new(1.0, 0.0, 1.2, -0.25).unwrap();
    let u0 = elliptic_orbits::quartic_lab::positive_roots(&p)[0];
    let orbit = KlmnOrbit::new(p, u0).unwrap();
    let eps = 0.05;
    let s = ring_statistics(1.0, &orbit, eps, 1.0).unwrap();
    let s2 = ring_statistics(1.0 + 2.0 * PI, &orbit, eps, 1.0).unwrap();
    assert!((s2.rho / s.rho - 1.0).abs() < 1e-9);
    assert!(s.r0_coeff < 0.0 && s.rho > 0.0 && s.p_peak > 0.0);
    // width linear in D and in ε
    let d2 = ring_statistics(1.0, &orbit, eps, 2.0).unwrap();
    assert!((d2.width / s.width - 2.0).abs() < 1e-12);
    let e2 = ring_statistics(1.0, &orbit, 2.0 * eps, 1.0).unwrap();
    assert!((e2.width / s.width - 2.0).abs() < 1e-12);
    // density ∝ u/|ṙ| is symmetric about the apse line
    let a = ring_statistics(0.7, &orbit, eps, 1.0).unwrap();
    let b = ring_statistics(2.0 * PI - 0.7, &orbit, eps, 1.0).unwrap();
    assert!((a.rho - b.rho).abs() < 1e-8 * a.rho);
    assert!(matches!(ring_statistics(0.0, &orbit, eps, 1.0), Err(Error::DomainError(_))));

    // circular orbit: constant density, tangential momentum
    let (mu, c) = (1.0, 1.2);
    let circ = KlmnParams::new(mu, 0.0, c, -mu * mu / (2.0 * c * c)).unwrap();
    let orbit = KlmnOrbit::new(circ, mu / (c * c)).unwrap();
    let s = ring_statistics(0.3, &orbit, eps, 1.0).unwrap();
    let t = ring_statistics(2.9, &orbit, eps, 1.0).unwrap();
    assert_eq!(s.rho, t.rho);
    assert!(s.degenerate_peak);
    assert!((s.alpha_peak.abs() - PI / 2.0).abs() < 1e-15);
    assert!((s.p_peak - mu / c).abs() < 1e-12, "p {}", s.p_peak);
}
