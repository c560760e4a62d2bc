//! Browser bindings: each operation returns a JSON trace `{x, y, info}` for
//! the page to draw. The plain functions are usable (and tested) natively.

use std::f64::consts::PI;

use elliptic_orbits::orbits::{klmn_periodicity, KlmnOrbit};
use elliptic_orbits::quartic_lab::{accessible_intervals, KlmnParams};
use elliptic_orbits::spirals::{
    galaxy_integrate, galaxy_rho_of_phi, two_centre_spiral_integrate, EllipticPoint, GalaxySpiralParams, RestoringParams, SpiralField,
};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Reference curve drawn underneath (closed form or limit ellipse).
    pub ref_x: Vec<f64>,
    pub ref_y: Vec<f64>,
    pub info: Value,
}

fn err(e: elliptic_orbits::Error) -> String {
    e.to_string()
}

/// Equatorial KLMN orbit from the inner apse of the first bounded well.
pub fn orbit(mu: f64, b: f64, c: f64, e: f64, cycles: f64, n: usize) -> Result<Trace, String> {
    let p = KlmnParams::new(mu, b, c, e).map_err(err)?;
    let &(lo, _) = accessible_intervals(&p).first().ok_or("no bounded well for these parameters")?;
    let o = KlmnOrbit::new(p, lo).map_err(err)?;
    let tr = o.trace(cycles.max(0.5) * 2.0 * o.omega, n.clamp(2, 20_000)).map_err(err)?;
    let dtheta = o.delta_theta().map_err(err)?;
    let period = klmn_periodicity(&p, lo, 64).map_err(err)?;
    let (x, y) = tr.samples.iter().map(|s| (s.r * s.theta.cos(), s.r * s.theta.sin())).unzip();
    Ok(Trace {
        x,
        y,
        ref_x: Vec::new(),
        ref_y: Vec::new(),
        info: json!({
            "apse angle / pi": dtheta / PI,
            "closes after": period.map(|(a, q)| format!("{a} turns in {q} radial cycles")),
            "energy drift": tr.invariant_drift,
        }),
    })
}

/// Planar galaxy spiral from `(rho0, 0, 0)` with the closed-form arm as reference.
pub fn galaxy(mu: f64, lambda: f64, sigma2: f64, rho0: f64, t_end: f64) -> Result<Trace, String> {
    let gp = GalaxySpiralParams::new(mu, lambda, sigma2).map_err(err)?;
    let path = galaxy_integrate([rho0, 0.0, 0.0], &gp, t_end, 20_000, 20).map_err(err)?;
    let (mut x, mut y, mut ref_x, mut ref_y) = (vec![], vec![], vec![], vec![]);
    let (mut phi, mut last, mut dev) = (0.0, 0.0, 0.0f64);
    for (_, s) in &path {
        let a = s[1].atan2(s[0]);
        phi += (a - last + PI).rem_euclid(2.0 * PI) - PI;
        last = a;
        x.push(s[0]);
        y.push(s[1]);
        if let Ok(rho) = galaxy_rho_of_phi(phi, rho0, &gp) {
            ref_x.push(rho * phi.cos());
            ref_y.push(rho * phi.sin());
            dev = dev.max((s[0].hypot(s[1]) - rho).abs() / rho);
        }
    }
    Ok(Trace {
        x,
        y,
        ref_x,
        ref_y,
        info: json!({ "r_c": gp.r_c(), "alpha": gp.alpha(), "max deviation from closed form": dev }),
    })
}

/// Restoring-force spiral onto the confocal ellipse `cosh ξ = a`.
pub fn spiral(mu1: f64, mu2: f64, c: f64, omega: f64, xi0: f64, eta0: f64, t_end: f64) -> Result<Trace, String> {
    let field = SpiralField::Restoring(RestoringParams::new(mu1, mu2, c, omega).map_err(err)?);
    let tr = two_centre_spiral_integrate(EllipticPoint::new(xi0, eta0, c), &field, t_end, 1e-3).map_err(err)?;
    let step = (tr.samples.len() / 4000).max(1);
    let (x, y) = tr.samples.iter().step_by(step).map(|s| (s.x, s.y)).unzip();
    let a = field.cosh_limit();
    let (ref_x, ref_y) = (0..=256)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 256.0;
            (c * a * t.cos(), c * (a * a - 1.0).sqrt() * t.sin())
        })
        .unzip();
    Ok(Trace {
        x,
        y,
        ref_x,
        ref_y,
        info: json!({ "cosh xi of ellipse": a, "terminal gap": tr.terminal_gap, "cut crossings": tr.cut_crossings }),
    })
}

fn to_js(r: Result<Trace, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e)).and_then(|t| serde_json::to_string(&t).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = orbitTrace)]
pub fn orbit_trace(mu: f64, b: f64, c: f64, e: f64, cycles: f64, n: usize) -> Result<String, JsError> {
    to_js(orbit(mu, b, c, e, cycles, n))
}

#[wasm_bindgen(js_name = galaxyTrace)]
pub fn galaxy_trace(mu: f64, lambda: f64, sigma2: f64, rho0: f64, t_end: f64) -> Result<String, JsError> {
    to_js(galaxy(mu, lambda, sigma2, rho0, t_end))
}

#[wasm_bindgen(js_name = spiralTrace)]
pub fn spiral_trace(mu1: f64, mu2: f64, c: f64, omega: f64, xi0: f64, eta0: f64, t_end: f64) -> Result<String, JsError> {
    to_js(spiral(mu1, mu2, c, omega, xi0, eta0, t_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_orbit_closes() {
        let t = orbit(1.0, 0.0, 1.2, -0.3, 2.0, 401).unwrap();
        assert!((t.info["apse angle / pi"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        let (n, first) = (t.x.len() - 1, (t.x[0], t.y[0]));
        assert!((t.x[n] - first.0).abs() < 1e-9 && (t.y[n] - first.1).abs() < 1e-9);
    }

    #[test]
    fn galaxy_tracks_closed_form() {
        let t = galaxy(1.0, 2.0, 0.5, 10.0, 50.0).unwrap();
        assert_eq!(t.info["r_c"], 3.0);
        assert!(t.info["max deviation from closed form"].as_f64().unwrap() < 1e-6);
        assert_eq!(t.x.len(), t.ref_x.len());
    }

    #[test]
    fn spiral_reaches_ellipse() {
        let t = spiral(4.0, 2.75, 1.0, 1.0, 3f64.acosh(), 0.3, 20.0).unwrap();
        assert!(t.info["terminal gap"].as_f64().unwrap() < 1e-3);
    }

    #[test]
    fn errors_are_messages() {
        assert!(orbit(1.0, 0.0, 1.2, 0.5, 2.0, 10).is_err());
        assert!(galaxy(-1.0, 2.0, 0.5, 10.0, 5.0).is_err());
    }
}
