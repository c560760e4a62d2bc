//! One function per command; each returns its trace and a JSON summary.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use elliptic_orbits::orbits::{klmn_periodicity, two_centre_ellipse, ApseKind, KlmnOrbit, TwoCentreOrbit, TwoCentreParams};
use elliptic_orbits::quartic_lab::{accessible_intervals, bifurcation_label, classify_wells, BifurcationLabel, KlmnParams};
use elliptic_orbits::spirals::{
    arc_length, decay_exponent, galaxy_integrate, galaxy_r_of_t, galaxy_rho_of_phi, galaxy_z_of_t, two_centre_spiral_integrate,
    EllipticPoint, GalaxySpiralParams, RestoringParams, SemiClassicalParams, SpiralField,
};
use elliptic_orbits::stochastic::{elementary_formula_mc, free_gaussian_solution, McOptions, MechanicalModel, Potential};
use serde_json::{json, Map, Value};

use crate::config::{CommandKind, Format, RunConfig};
use crate::output::{num, pretty, with_suffix, write_atomic, Table};
use crate::verify;
use crate::CliError;

/// Files and messages produced by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    /// (path, contents), written in order.
    pub files: Vec<(String, String)>,
    pub stdout: String,
    /// Set when the run completed but a check failed.
    pub failure: Option<CliError>,
}

/// Validate, compute and write all outputs of `config`.
pub fn run(config: &RunConfig) -> Result<Artifacts, CliError> {
    let mut cfg = config.clone();
    cfg.validate()?;
    let art = compute(&cfg)?;
    for (path, contents) in &art.files {
        write_atomic(std::path::Path::new(path), contents)?;
    }
    Ok(art)
}

struct Output {
    main: Option<String>,
    extra: Vec<(&'static str, String)>,
    results: Value,
    stdout: String,
    failure: Option<CliError>,
}

impl Output {
    fn table(t: Table, format: Format, results: Value, stdout: String) -> Self {
        Self { main: Some(t.render(format)), extra: Vec::new(), results, stdout, failure: None }
    }
}

/// Run without touching the file system.
pub fn compute(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let out = match cfg.command {
        CommandKind::Orbit => orbit(cfg)?,
        CommandKind::TwoCentre => two_centre(cfg)?,
        CommandKind::Spiral => spiral(cfg)?,
        CommandKind::Galaxy => galaxy(cfg)?,
        CommandKind::Heat => heat(cfg)?,
        CommandKind::Verify => verify_cmd(cfg)?,
        CommandKind::Bifurcation => bifurcation(cfg)?,
    };
    let ext = match cfg.format {
        Format::Csv => ".csv",
        Format::Json => ".json",
    };
    let mut files = Vec::new();
    let mut written = Vec::new();
    if let Some(main) = out.main {
        let p = with_suffix(&cfg.output, ext).to_string_lossy().into_owned();
        written.push(p.clone());
        files.push((p, main));
    }
    for (suffix, contents) in out.extra {
        let p = with_suffix(&cfg.output, suffix).to_string_lossy().into_owned();
        written.push(p.clone());
        files.push((p, contents));
    }
    let params: Map<String, Value> = cfg.params.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
    let mut meta = json!({
        "command": cfg.command.name(),
        "params": params,
        "seed": cfg.seed,
        "format": cfg.format.name(),
        "results": out.results,
    });
    if let Some(s) = &cfg.suite {
        meta["suite"] = json!(s);
    }
    let meta_path = with_suffix(&cfg.output, ".meta.json").to_string_lossy().into_owned();
    written.push(meta_path.clone());
    files.push((meta_path, pretty(&meta)));
    let mut stdout = out.stdout;
    for p in &written {
        stdout += &format!("wrote {p}\n");
    }
    Ok(Artifacts { files, stdout, failure: out.failure })
}

fn lib<T>(context: &str, r: elliptic_orbits::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_lib(context, e))
}

fn orbit(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = lib("KLMN parameters", KlmnParams::new(cfg.get("mu"), cfg.get("B"), cfg.get("C"), cfg.get("E")))?;
    let wells = accessible_intervals(&p);
    let idx = cfg.get_usize("well");
    let &(lo, hi) = wells.get(idx).ok_or_else(|| {
        CliError::Numerical(format!("KLMN wells: no bounded well with index {idx} ({} found)", wells.len()))
    })?;
    let u0 = if cfg.get_usize("apse") == 0 { lo } else { hi };
    let o = lib("KLMN orbit", KlmnOrbit::new(p, u0))?;
    let z_end = cfg.get("cycles") * 2.0 * o.omega;
    let trace = lib("KLMN trace", o.trace(z_end, cfg.get_usize("n")))?;
    let mut t = Table::new(&["z [well time]", "t [time]", "r [length]", "theta [rad]", "x [length]", "y [length]"]);
    for s in &trace.samples {
        t.push(vec![s.z, s.t, s.r, s.theta, s.r * s.theta.cos(), s.r * s.theta.sin()]);
    }
    let dtheta = lib("apse angle", o.delta_theta())?;
    let period = lib("periodicity", klmn_periodicity(&p, u0, cfg.get("q_max") as u64))?;
    let case = classify_wells(&p).map(|c| format!("{:?}", c.case_id)).unwrap_or_else(|e| format!("unclassified: {e}"));
    let kind = match o.apse_kind(1e-9) {
        ApseKind::Loopy => "loopy",
        ApseKind::Cusped => "cusped",
        ApseKind::Sinusoidal => "sinusoidal",
    };
    let results = json!({
        "well": [num(lo), num(hi)],
        "u0": num(u0),
        "u1": num(o.u1),
        "half_period": num(o.omega),
        "delta_theta": num(dtheta),
        "delta_theta_over_pi": num(dtheta / PI),
        "periodicity": period.map(|(a, b)| json!([a, b])),
        "apse_kind": kind,
        "well_case": case,
        "invariant_drift": num(trace.invariant_drift),
    });
    let per = match period {
        Some((a, b)) => format!("periodic ({a}, {b})"),
        None => "not periodic".to_string(),
    };
    let stdout = format!("orbit: delta theta = {:.12} pi, {per}, energy drift {:.3e}\n", dtheta / PI, trace.invariant_drift);
    Ok(Output::table(t, cfg.format, results, stdout))
}

fn two_centre(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut p = lib("two-centre parameters", TwoCentreParams::new(cfg.get("mu1"), cfg.get("mu2"), cfg.get("c"), cfg.get("gamma"), cfg.get("E")))?;
    p.omega_restore = None;
    let o = lib(
        "two-centre orbit",
        TwoCentreOrbit::new(p, cfg.get("cosh_xi0"), cfg.get("cos_eta0"), cfg.get("sign_xi"), cfg.get("sign_eta")),
    )?;
    let n = cfg.get_usize("n").max(2);
    let z_end = cfg.get("zeta_end");
    let mut t = Table::new(&["zeta [uniformising time]", "t [time]", "cosh_xi [1]", "cos_eta [1]", "r1 [length]", "r2 [length]"]);
    let mut residual = 0.0f64;
    let h = 1e-5;
    for k in 0..n {
        let z = z_end * k as f64 / (n - 1) as f64;
        let (ch, cs) = lib("two-centre state", o.state(z))?;
        let (r1, r2) = lib("two-centre state", o.distances(z))?;
        let time = lib("two-centre time", o.time(z))?;
        t.push(vec![z, time, ch, cs, r1, r2]);
        if let (Ok(a), Ok(b)) = (o.state(z + h), o.state(z - h)) {
            let (dt, ds) = ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h));
            residual = residual.max((dt * dt - p.q_xi().eval(ch)).abs()).max((ds * ds - p.q_eta().eval(cs)).abs());
        }
    }
    let ellipse = two_centre_ellipse(&p)
        .map(|e| json!({"semi_major": num(e.semi_major), "eccentricity": num(e.eccentricity), "energy": num(e.energy)}))
        .unwrap_or(Value::Null);
    let results = json!({ "ode_residual": num(residual), "ellipse": ellipse });
    let stdout = format!("two-centre: quartic ODE residual {residual:.3e}\n");
    Ok(Output::table(t, cfg.format, results, stdout))
}

fn spiral(cfg: &RunConfig) -> Result<Output, CliError> {
    let (mu1, mu2, c, omega) = (cfg.get("mu1"), cfg.get("mu2"), cfg.get("c"), cfg.get("omega"));
    let field = if omega > 0.0 {
        SpiralField::Restoring(lib("restoring field", RestoringParams::new(mu1, mu2, c, omega))?)
    } else {
        if cfg.get("alpha2") <= 0.0 {
            return Err(CliError::Validation("spiral: the two-centre field needs --alpha2 > 0 (or --omega > 0)".into()));
        }
        SpiralField::TwoCentre(lib("semi-classical field", SemiClassicalParams::new(mu1, mu2, c, cfg.get("alpha2"), cfg.get("eps2")))?)
    };
    let start = EllipticPoint::new(cfg.get("xi0"), cfg.get("eta0"), c);
    let tr = lib("spiral flow", two_centre_spiral_integrate(start, &field, cfg.get("T"), cfg.get("dt")))?;
    let every = cfg.get_usize("every").max(1);
    let mut t = Table::new(&["t [time]", "xi [1]", "eta [rad]", "x [length]", "y [length]", "R [action]"]);
    let last = tr.samples.len() - 1;
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for (k, s) in tr.samples.iter().enumerate() {
        if k % every == 0 || k == last {
            let r = field.r_function(s.xi, s.eta);
            monotone &= r >= prev - 1e-9 * r.abs().max(1.0);
            prev = r;
            t.push(vec![s.t, s.xi, s.eta, s.x, s.y, r]);
        }
    }
    let results = json!({
        "cosh_limit": num(field.cosh_limit()),
        "terminal_gap": num(tr.terminal_gap),
        "cut_crossings": tr.cut_crossings,
        "r_nondecreasing": monotone,
    });
    let stdout = format!("spiral: |cosh xi(T) - {:.12}| = {:.3e}\n", field.cosh_limit(), tr.terminal_gap);
    Ok(Output::table(t, cfg.format, results, stdout))
}

fn galaxy(cfg: &RunConfig) -> Result<Output, CliError> {
    let gp = lib("galaxy parameters", GalaxySpiralParams::new(cfg.get("mu"), cfg.get("lambda"), cfg.get("sigma2")))?;
    let (rho0, z0) = (cfg.get("rho0"), cfg.get("z0"));
    let start = [rho0, 0.0, z0];
    let r0 = rho0.hypot(z0);
    let path = lib("galaxy flow", galaxy_integrate(start, &gp, cfg.get("T"), cfg.get_usize("steps"), cfg.get_usize("every").max(1)))?;
    let planar = z0 == 0.0;
    let (rc, alpha) = (gp.r_c(), gp.alpha());
    let mut t = Table::new(&[
        "t [time]",
        "x [length]",
        "y [length]",
        "z [length]",
        "rho [length]",
        "phi [rad]",
        "r_closed [length]",
        "z_closed [length]",
        "rho_closed [length]",
    ]);
    let (mut phi, mut last) = (0.0, 0.0);
    let (mut dev_r, mut dev_z, mut dev_rho) = (0.0f64, 0.0f64, 0.0f64);
    let (mut phis, mut rhos) = (Vec::new(), Vec::new());
    let b = (rho0 - rc) / rho0;
    for (time, s) in &path {
        let a = s[1].atan2(s[0]);
        phi += (a - last + PI).rem_euclid(2.0 * PI) - PI;
        last = a;
        let rho = s[0].hypot(s[1]);
        let r = (rho * rho + s[2] * s[2]).sqrt();
        let rc_t = lib("closed-form r(t)", galaxy_r_of_t(*time, r0, &gp))?;
        let zc_t = lib("closed-form z(t)", galaxy_z_of_t(*time, r0, z0, &gp))?;
        let rho_c = if planar { galaxy_rho_of_phi(phi, rho0, &gp).unwrap_or(f64::NAN) } else { f64::NAN };
        dev_r = dev_r.max((r - rc_t).abs() / rc_t);
        dev_z = dev_z.max((s[2] - zc_t).abs() / z0.abs().max(1e-300));
        if planar && rho_c.is_finite() {
            dev_rho = dev_rho.max((rho - rho_c).abs() / rho_c);
            let tail = b * (-alpha * phi).exp();
            if tail.abs() < 1e-2 {
                phis.push(phi);
                rhos.push(rho);
            }
        }
        t.push(vec![*time, s[0], s[1], s[2], rho, phi, rc_t, zc_t, rho_c]);
    }
    let fitted = if phis.len() >= 10 { decay_exponent(&phis, &rhos, rc).ok() } else { None };
    let arc = if planar { arc_length(phi, &gp, rho0).ok() } else { None };
    let results = json!({
        "r_c": num(rc),
        "alpha": num(alpha),
        "energy": num(gp.energy()),
        "final_phi": num(phi),
        "max_rel_dev_r": num(dev_r),
        "max_rel_dev_z": if z0 != 0.0 { num(dev_z) } else { Value::Null },
        "max_rel_dev_rho_of_phi": if planar { num(dev_rho) } else { Value::Null },
        "fitted_decay_exponent": fitted.map(num),
        "arc_length": arc.map(num),
    });
    let stdout = format!("galaxy: r_c = {rc}, alpha = {alpha}, max closed-form deviation {:.3e}\n", dev_r.max(dev_rho));
    Ok(Output::table(t, cfg.format, results, stdout))
}

fn heat(cfg: &RunConfig) -> Result<Output, CliError> {
    let dim = cfg.get_usize("dim");
    let potential = match cfg.get_usize("potential") {
        0 => Potential::Free,
        1 => Potential::Harmonic { omega: cfg.get("omega") },
        2 => Potential::Quartic { omega: cfg.get("omega"), g: cfg.get("g") },
        k => return Err(CliError::Validation(format!("heat: potential {k} is not 0, 1 or 2"))),
    };
    let m = lib(
        "mechanical model",
        MechanicalModel::new(dim, potential, [cfg.get("p1"), cfg.get("p2")], [cfg.get("m1"), cfg.get("m2")], cfg.get("width")),
    )?;
    let x: Vec<f64> = [cfg.get("x1"), cfg.get("x2")][..dim.min(2)].to_vec();
    let (t, sigma) = (cfg.get("t"), cfg.get("sigma"));
    let opts = McOptions {
        n_paths: cfg.get_usize("n_paths"),
        seed: cfg.seed.unwrap_or(0),
        h: if cfg.get("h") > 0.0 { Some(cfg.get("h")) } else { None },
        check_step: cfg.get_usize("check_step") == 1,
    };
    let est = lib("elementary formula", elementary_formula_mc(&m, &x, t, sigma, opts))?;
    let report = json!({
        "estimate_log_prefactor": num(est.estimate_log_prefactor),
        "expectation_mean": num(est.expectation_mean),
        "std_error": num(est.std_error),
        "n_paths": est.n_paths,
        "h": num(est.h),
        "seed": est.seed,
    });
    let mut results = Map::new();
    results.insert("report".into(), report.clone());
    results.insert("caustic_time".into(), num(m.caustic_time(10.0 * t)));
    results.insert("small_sigma_limit".into(), m.small_sigma_limit(&x, t).map(num).unwrap_or(Value::Null));
    results.insert("step_shift".into(), est.step_shift.map(num).unwrap_or(Value::Null));
    if let Ok((_, exact)) = free_gaussian_solution(&m, &x, t, sigma) {
        results.insert("closed_form_expectation".into(), num(exact));
        results.insert("z_score".into(), num((est.expectation_mean - exact) / est.std_error));
    }
    let main = match cfg.format {
        Format::Json => pretty(&report),
        Format::Csv => {
            let mut tb = Table::new(&["estimate_log_prefactor [1]", "expectation_mean [1]", "std_error [1]", "n_paths [1]", "h [time]", "seed [1]"]);
            tb.push(vec![est.estimate_log_prefactor, est.expectation_mean, est.std_error, est.n_paths as f64, est.h, est.seed as f64]);
            tb.to_csv()
        }
    };
    let stdout = format!(
        "heat: u = exp({:.12e}) * ({:.12e} +- {:.3e})\n",
        est.estimate_log_prefactor, est.expectation_mean, est.std_error
    );
    Ok(Output { main: Some(main), extra: Vec::new(), results: Value::Object(results), stdout, failure: None })
}

fn verify_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let suite = cfg.suite.clone().unwrap_or_else(|| "all".into());
    let checks = verify::run_suite(&suite)?;
    let table = verify::render_table(&checks);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut csv = String::from("criterion,check,value,bound,status\n");
    for c in &checks {
        csv += &format!("{},{},{},{},{}\n", c.criterion, c.name.replace(',', ";"), crate::output::fmt17(c.value), c.bound.describe(), c.status());
    }
    let main = match cfg.format {
        Format::Csv => csv,
        Format::Json => pretty(&Value::Array(checks.iter().map(|c| c.to_json()).collect())),
    };
    let mut by_criterion: BTreeMap<String, bool> = BTreeMap::new();
    for c in &checks {
        *by_criterion.entry(c.criterion.to_string()).or_insert(true) &= c.pass;
    }
    let results = json!({ "checks": checks.len(), "failed": failed, "criteria": by_criterion });
    let failure = (failed > 0).then(|| CliError::Numerical(format!("verify: {failed} of {} checks failed", checks.len())));
    Ok(Output { main: Some(main), extra: Vec::new(), results, stdout: table, failure })
}

fn label_code(l: BifurcationLabel) -> f64 {
    match l {
        BifurcationLabel::Origin => 0.0,
        BifurcationLabel::OneWell => 1.0,
        BifurcationLabel::TwoWell => 2.0,
        BifurcationLabel::CriticalRepeated => 3.0,
        BifurcationLabel::Escape => 4.0,
    }
}

fn bifurcation(cfg: &RunConfig) -> Result<Output, CliError> {
    let (nz, nw) = (cfg.get_usize("nz").max(2), cfg.get_usize("nw").max(2));
    let (z0, z1, w0, w1) = (cfg.get("z_min"), cfg.get("z_max"), cfg.get("w_min"), cfg.get("w_max"));
    if !(z1 > z0 && w1 > w0) {
        return Err(CliError::Validation("bifurcation: need z_min < z_max and w_min < w_max".into()));
    }
    let mut t = Table::new(&["Z [1]", "W [1]", "label [0 origin, 1 one-well, 2 two-well, 3 critical, 4 escape]"]);
    let mut counts = [0usize; 5];
    for i in 0..nz {
        let z = z0 + (z1 - z0) * i as f64 / (nz - 1) as f64;
        for j in 0..nw {
            let w = w0 + (w1 - w0) * j as f64 / (nw - 1) as f64;
            let code = label_code(bifurcation_label(z, w));
            counts[code as usize] += 1;
            t.push(vec![z, w, code]);
        }
    }
    // (W+Z)³ = ±6√3 Z²
    let k = 6.0 * 3f64.sqrt();
    let nc = cfg.get_usize("curve_points").max(2);
    let mut curves = Table::new(&["Z [1]", "W_plus [1]", "W_minus [1]"]);
    for i in 0..nc {
        let z = z0 + (z1 - z0) * i as f64 / (nc - 1) as f64;
        curves.push(vec![z, (k * z * z).cbrt() - z, (-k * z * z).cbrt() - z]);
    }
    let names = ["origin", "one_well", "two_well", "critical", "escape"];
    let counts: Map<String, Value> = names.iter().zip(counts).map(|(n, c)| (n.to_string(), json!(c))).collect();
    let results = json!({ "counts": counts });
    let mut out = Output::table(t, cfg.format, results, format!("bifurcation: {nz} x {nw} grid\n"));
    out.extra.push(("_curves.csv", curves.to_csv()));
    Ok(out)
}
