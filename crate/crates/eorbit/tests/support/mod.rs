#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_eorbit");

/// The documented example invocations, keyed by golden-file stem.
pub const EXAMPLES: [(&str, &[&str]); 3] = [
    ("orbit", &["orbit", "--mu", "1", "--B", "0", "--C", "1.2", "--E", "-0.3"]),
    ("galaxy", &["galaxy", "--mu", "1", "--lambda", "2", "--sigma2", "0.5", "--rho0", "10", "--T", "50"]),
    ("verify", &["verify", "--suite", "all"]),
];

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn run_in(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(BIN);
    cmd.args(args).current_dir(dir).env_remove("EORBIT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 + 1e-9 * a.abs().max(b.abs())
}

/// Token-wise comparison; numeric tokens may differ in the last digits.
pub fn text_matches(got: &str, want: &str) -> Result<(), String> {
    let (gl, wl): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    if gl.len() != wl.len() {
        return Err(format!("{} lines, expected {}", gl.len(), wl.len()));
    }
    for (k, (g, w)) in gl.iter().zip(&wl).enumerate() {
        let split = |s: &'static str| move |c: char| s.contains(c);
        let gt: Vec<&str> = g.split(split(", \t")).collect();
        let wt: Vec<&str> = w.split(split(", \t")).collect();
        let same = gt.len() == wt.len()
            && gt.iter().zip(&wt).all(|(a, b)| match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => close(x, y),
                _ => a == b,
            });
        if !same {
            return Err(format!("line {}: got '{g}', expected '{w}'", k + 1));
        }
    }
    Ok(())
}

pub fn json_matches(got: &Value, want: &Value, path: &str) -> Result<(), String> {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            if close(a.as_f64().unwrap(), b.as_f64().unwrap()) {
                Ok(())
            } else {
                Err(format!("{path}: {a} vs {b}"))
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            a.iter().zip(b).enumerate().try_for_each(|(i, (x, y))| json_matches(x, y, &format!("{path}[{i}]")))
        }
        (Value::Object(a), Value::Object(b)) if a.len() == b.len() => a.iter().try_for_each(|(k, x)| match b.get(k) {
            Some(y) => json_matches(x, y, &format!("{path}.{k}")),
            None => Err(format!("{path}.{k} unexpected")),
        }),
        _ if got == want => Ok(()),
        _ => Err(format!("{path}: {got} vs {want}")),
    }
}

/// Files of an example run compared against the golden set. The verify
/// trace holds timings, so only its table and summary are compared.
pub fn golden_files(stem: &str) -> Vec<(String, String)> {
    let mut v = vec![(format!("eorbit_{stem}.meta.json"), format!("{stem}.meta.json"))];
    if stem != "verify" {
        v.push((format!("eorbit_{stem}.csv"), format!("{stem}.csv")));
    }
    v
}

/// Run one example in a scratch directory and compare (or bless with `EORBIT_BLESS=1`).
pub fn check_example(stem: &str, args: &[&str]) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = run_in(dir.path(), args, &[]);
    if !out.status.success() {
        return Err(format!("{stem}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let gd = golden_dir();
    let bless = std::env::var("EORBIT_BLESS").is_ok_and(|v| v == "1");
    let mut pairs = vec![(stdout, format!("{stem}.stdout"))];
    for (produced, golden) in golden_files(stem) {
        let text = std::fs::read_to_string(dir.path().join(&produced)).map_err(|e| format!("{produced}: {e}"))?;
        pairs.push((text, golden));
    }
    for (got, golden) in pairs {
        let path = gd.join(&golden);
        if bless {
            std::fs::create_dir_all(&gd).map_err(|e| e.to_string())?;
            std::fs::write(&path, &got).map_err(|e| e.to_string())?;
            continue;
        }
        let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let r = if golden.ends_with(".json") {
            let (g, w): (Value, Value) = (serde_json::from_str(&got).map_err(|e| e.to_string())?, serde_json::from_str(&want).map_err(|e| e.to_string())?);
            json_matches(&g, &w, "")
        } else {
            text_matches(&got, &want)
        };
        r.map_err(|e| format!("{golden}: {e}"))?;
    }
    Ok(())
}

/// Saving the resolved configuration and rerunning from it reproduces the run.
pub fn check_config_round_trip() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_in(dir.path(), &["orbit", "--mu", "1", "--B", "0.05", "--C", "1.2", "--E", "-0.3", "-o", "a", "--save-config", "a.cfg"], &[]);
    let b = run_in(dir.path(), &["orbit", "--config", "a.cfg", "-o", "b"], &[]);
    if !a.status.success() || !b.status.success() {
        return Err(format!("runs failed: {}", String::from_utf8_lossy(&b.stderr)));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap_or_default();
    if read("a.csv") != read("b.csv") || read("a.csv").is_empty() {
        return Err("trace differs after config round trip".into());
    }
    let cfg = std::fs::read_to_string(dir.path().join("a.cfg")).map_err(|e| e.to_string())?;
    let parsed = eorbit::RunConfig::parse(&cfg).map_err(|e| e.to_string())?;
    if parsed.to_text() != cfg {
        return Err("config text is not a fixed point".into());
    }
    Ok(())
}

/// Same inputs give byte-identical files, whatever the thread count.
pub fn check_determinism() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let heat = ["heat", "--potential", "1", "--p1", "0.3", "--x1", "0.2", "--t", "0.6", "--sigma", "0.5", "--n_paths", "20000", "--seed", "9"];
    type Run<'a> = (&'a str, &'a [&'a str], &'a [(&'a str, &'a str)]);
    let runs: [Run; 3] = [("h1", &heat, &[]), ("h2", &heat, &[]), ("h3", &heat, &[("EORBIT_THREADS", "1")])];
    let mut files = Vec::new();
    for (prefix, args, env) in runs {
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["-o", prefix]);
        let out = run_in(dir.path(), &a, env);
        if !out.status.success() {
            return Err(format!("heat failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let csv = std::fs::read(dir.path().join(format!("{prefix}.csv"))).map_err(|e| e.to_string())?;
        let meta = std::fs::read(dir.path().join(format!("{prefix}.meta.json"))).map_err(|e| e.to_string())?;
        files.push((csv, meta));
    }
    if files.windows(2).any(|w| w[0] != w[1]) {
        return Err("heat outputs differ between reruns".into());
    }
    for (stem, args) in EXAMPLES.iter().take(2) {
        let (d1, d2) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
        run_in(d1.path(), args, &[]);
        run_in(d2.path(), args, &[]);
        for (f, _) in golden_files(stem) {
            if std::fs::read(d1.path().join(&f)).ok() != std::fs::read(d2.path().join(&f)).ok() {
                return Err(format!("{f} differs between reruns"));
            }
        }
    }
    Ok(())
}
