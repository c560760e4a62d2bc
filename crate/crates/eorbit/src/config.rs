//! Run configuration: a command, a flat map of numeric parameters and
//! output settings, read from and written to a line-oriented key=value form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CommandKind {
    Orbit,
    TwoCentre,
    Spiral,
    Galaxy,
    Heat,
    Verify,
    Bifurcation,
}

impl CommandKind {
    pub const ALL: [CommandKind; 7] = [
        CommandKind::Orbit,
        CommandKind::TwoCentre,
        CommandKind::Spiral,
        CommandKind::Galaxy,
        CommandKind::Heat,
        CommandKind::Verify,
        CommandKind::Bifurcation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Orbit => "orbit",
            CommandKind::TwoCentre => "two-centre",
            CommandKind::Spiral => "spiral",
            CommandKind::Galaxy => "galaxy",
            CommandKind::Heat => "heat",
            CommandKind::Verify => "verify",
            CommandKind::Bifurcation => "bifurcation",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            CommandKind::Orbit => "Equatorial KLMN orbit trace with periodicity check",
            CommandKind::TwoCentre => "Uniformised Euler two-centre orbit",
            CommandKind::Spiral => "Semi-classical spiral onto a confocal ellipse",
            CommandKind::Galaxy => "Galaxy spiral trace with closed-form comparison",
            CommandKind::Heat => "Monte Carlo Feynman-Kac estimate of the viscous heat solution",
            CommandKind::Verify => "Run verification suites and print a pass/fail table",
            CommandKind::Bifurcation => "Well classification over the (Z, W) plane",
        }
    }

    pub fn params(self) -> &'static [ParamSpec] {
        match self {
            CommandKind::Orbit => ORBIT,
            CommandKind::TwoCentre => TWO_CENTRE,
            CommandKind::Spiral => SPIRAL,
            CommandKind::Galaxy => GALAXY,
            CommandKind::Heat => HEAT,
            CommandKind::Verify => &[],
            CommandKind::Bifurcation => BIFURCATION,
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommandKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        CommandKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Validation(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Validation(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

/// One numeric parameter; `default: None` means required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: Option<f64>,
    pub integer: bool,
    pub help: &'static str,
}

const fn req(key: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: None, integer: false, help }
}

const fn real(key: &'static str, default: f64, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), integer: false, help }
}

const fn int(key: &'static str, default: f64, help: &'static str) -> ParamSpec {
    ParamSpec { key, default: Some(default), integer: true, help }
}

const ORBIT: &[ParamSpec] = &[
    req("mu", "attracting strength"),
    req("B", "velocity-dependent coupling"),
    req("C", "angular momentum"),
    req("E", "energy"),
    int("well", 0.0, "index of the bounded well, by increasing u = 1/r"),
    int("apse", 0.0, "start apse: 0 = outer (small u), 1 = inner"),
    real("cycles", 2.0, "number of radial cycles traced"),
    int("n", 401.0, "number of samples"),
    int("q_max", 64.0, "largest period denominator searched"),
];

const TWO_CENTRE: &[ParamSpec] = &[
    req("mu1", "strength at (c, 0)"),
    req("mu2", "strength at (-c, 0)"),
    req("c", "half focal distance"),
    req("gamma", "separation constant"),
    req("E", "energy"),
    req("cosh_xi0", "start cosh xi"),
    req("cos_eta0", "start cos eta"),
    real("sign_xi", 1.0, "initial direction of cosh xi"),
    real("sign_eta", 1.0, "initial direction of cos eta"),
    real("zeta_end", 4.0, "final uniformising time"),
    int("n", 201.0, "number of samples"),
];

const SPIRAL: &[ParamSpec] = &[
    req("mu1", "strength at (c, 0)"),
    req("mu2", "strength at (-c, 0)"),
    req("c", "half focal distance"),
    real("omega", 0.0, "restoring frequency; 0 selects the pure two-centre field"),
    real("alpha2", 0.0, "separation constant alpha^2 of the two-centre field"),
    real("eps2", 0.0, "semi-classical parameter epsilon^2"),
    req("xi0", "start xi"),
    req("eta0", "start eta"),
    real("T", 20.0, "final time"),
    real("dt", 1e-3, "RK4 step"),
    int("every", 100.0, "write every n-th step"),
];

const GALAXY: &[ParamSpec] = &[
    req("mu", "central strength"),
    req("lambda", "rotation constant"),
    req("sigma2", "diffusion constant, 0 < sigma2 < lambda"),
    req("rho0", "start cylindrical radius"),
    real("z0", 0.0, "start height"),
    real("T", 50.0, "final time"),
    int("steps", 100000.0, "RK4 steps"),
    int("every", 100.0, "write every n-th step"),
];

const HEAT: &[ParamSpec] = &[
    int("dim", 1.0, "dimension, 1 or 2"),
    int("potential", 0.0, "0 = free, 1 = harmonic, 2 = quartic"),
    real("omega", 1.0, "harmonic frequency"),
    real("g", 0.0, "quartic coefficient"),
    real("p1", 0.0, "initial phase gradient, first coordinate"),
    real("p2", 0.0, "initial phase gradient, second coordinate"),
    real("m1", 0.0, "amplitude centre, first coordinate"),
    real("m2", 0.0, "amplitude centre, second coordinate"),
    real("width", 0.5, "amplitude width"),
    req("x1", "evaluation point, first coordinate"),
    real("x2", 0.0, "evaluation point, second coordinate"),
    req("t", "time"),
    req("sigma", "noise strength"),
    int("n_paths", 100000.0, "Monte Carlo paths (even)"),
    real("h", 0.0, "Euler-Maruyama step; 0 selects min(1e-3, t/1000)"),
    int("check_step", 0.0, "1 = rerun with h/2 on the same paths and fail if the shift exceeds 3 SE"),
];

const BIFURCATION: &[ParamSpec] = &[
    real("z_min", -2.0, "smallest Z"),
    real("z_max", 2.0, "largest Z"),
    real("w_min", -4.0, "smallest W"),
    real("w_max", 4.0, "largest W"),
    int("nz", 81.0, "grid points in Z"),
    int("nw", 81.0, "grid points in W"),
    int("curve_points", 201.0, "samples per critical curve"),
];

pub const SUITES: [&str; 8] = ["all", "core", "uniformisation", "lambda", "orbits", "two-centre", "spirals", "stochastic"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: BTreeMap<String, f64>,
    pub suite: Option<String>,
    pub output: String,
    pub format: Format,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            params: BTreeMap::new(),
            suite: None,
            output: format!("eorbit_{}", command.name().replace('-', "_")),
            format: Format::Csv,
            seed: None,
        }
    }

    /// Parse the key=value form; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("line {}: expected key = value", k + 1)))?;
            entries.push((key.trim().to_string(), value.trim().to_string(), k + 1));
        }
        let command = entries
            .iter()
            .find(|e| e.0 == "command")
            .ok_or_else(|| CliError::Validation("config has no command".into()))?
            .1
            .parse::<CommandKind>()?;
        let mut cfg = RunConfig::new(command);
        for (key, value, line) in entries {
            cfg.set(&key, &value).map_err(|e| CliError::Validation(format!("line {line}: {}", e.message())))?;
        }
        Ok(cfg)
    }

    /// Set a reserved setting or a parameter from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "command" => {
                let c: CommandKind = value.parse()?;
                if c != self.command {
                    return Err(CliError::Validation(format!("config is for '{c}', not '{}'", self.command)));
                }
            }
            "output" => self.output = value.to_string(),
            "format" => self.format = value.parse()?,
            "seed" => self.seed = Some(value.parse().map_err(|_| CliError::Validation(format!("seed '{value}' is not an integer")))?),
            "suite" if self.command == CommandKind::Verify => {
                if !SUITES.contains(&value) {
                    return Err(CliError::Validation(format!("unknown suite '{value}' (one of {})", SUITES.join(", "))));
                }
                self.suite = Some(value.to_string());
            }
            _ => {
                if !self.command.params().iter().any(|p| p.key == key) {
                    return Err(CliError::Validation(format!("unknown key '{key}' for {}", self.command)));
                }
                let v: f64 = value.parse().map_err(|_| CliError::Validation(format!("{key} = '{value}' is not a number")))?;
                self.params.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    /// Write the key=value form; numbers use the shortest exact representation.
    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\noutput = {}\nformat = {}\n", self.command, self.output, self.format.name());
        if let Some(seed) = self.seed {
            s += &format!("seed = {seed}\n");
        }
        if let Some(suite) = &self.suite {
            s += &format!("suite = {suite}\n");
        }
        for (k, v) in &self.params {
            s += &format!("{k} = {v:?}\n");
        }
        s
    }

    /// Reject unknown keys, require every parameter without a default and
    /// fill in the defaults.
    pub fn validate(&mut self) -> Result<(), CliError> {
        let specs = self.command.params();
        if let Some(k) = self.params.keys().find(|k| !specs.iter().any(|p| p.key == k.as_str())) {
            return Err(CliError::Validation(format!("unknown key '{k}' for {}", self.command)));
        }
        for p in specs {
            match (self.params.get(p.key), p.default) {
                (None, None) => return Err(CliError::Validation(format!("{} requires --{}", self.command, p.key))),
                (None, Some(d)) => {
                    self.params.insert(p.key.to_string(), d);
                }
                (Some(v), _) => {
                    if !v.is_finite() {
                        return Err(CliError::Validation(format!("{} must be finite", p.key)));
                    }
                    if p.integer && (v.fract() != 0.0 || *v < 0.0) {
                        return Err(CliError::Validation(format!("{} must be a non-negative integer", p.key)));
                    }
                }
            }
        }
        if self.command == CommandKind::Verify && self.suite.is_none() {
            self.suite = Some("all".into());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn get_usize(&self, key: &str) -> usize {
        self.get(key) as usize
    }
}
