use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use eorbit::config::SUITES;
use eorbit::output::write_atomic;
use eorbit::{CliError, CommandKind, RunConfig};

fn param_help(p: &eorbit::config::ParamSpec) -> String {
    match p.default {
        Some(d) => format!("{} [default: {d}]", p.help),
        None => format!("{} (required)", p.help),
    }
}

fn cli() -> Command {
    let mut app = Command::new("eorbit")
        .about("Elliptic-function orbits, spirals and diffusion experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for kind in CommandKind::ALL {
        let mut sub = Command::new(kind.name())
            .about(kind.about())
            .arg(Arg::new("config").long("config").value_name("FILE").help("Read key = value settings; flags override them"))
            .arg(Arg::new("output").long("output").short('o').value_name("PREFIX").help("Output path prefix"))
            .arg(Arg::new("format").long("format").value_name("FMT").value_parser(["csv", "json"]).help("Main output format [default: csv]"))
            .arg(Arg::new("seed").long("seed").value_name("N").help("Random seed"))
            .arg(Arg::new("save-config").long("save-config").value_name("FILE").help("Write the resolved configuration and continue"));
        if kind == CommandKind::Verify {
            sub = sub.arg(Arg::new("suite").long("suite").value_name("NAME").value_parser(SUITES).help("Suite to run [default: all]"));
        }
        for p in kind.params() {
            sub = sub.arg(Arg::new(p.key).long(p.key).value_name("X").allow_hyphen_values(true).help(param_help(p)));
        }
        app = app.subcommand(sub);
    }
    app
}

fn resolve(kind: CommandKind, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            let cfg = RunConfig::parse(&text)?;
            if cfg.command != kind {
                return Err(CliError::Validation(format!("{path} is a '{}' config, not '{kind}'", cfg.command)));
            }
            cfg
        }
        None => RunConfig::new(kind),
    };
    let reserved = ["output", "format", "seed", "suite"];
    for key in reserved.iter().copied().chain(kind.params().iter().map(|p| p.key)) {
        if kind != CommandKind::Verify && key == "suite" {
            continue;
        }
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    if let Some(path) = m.get_one::<String>("save-config") {
        write_atomic(std::path::Path::new(path), &cfg.to_text())?;
    }
    Ok(cfg)
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("EORBIT_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Validation(format!("EORBIT_THREADS = '{v}' is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("EORBIT_THREADS: {e}")))?;
    }
    Ok(())
}

fn real_main() -> Result<(), CliError> {
    let matches = cli().get_matches();
    set_threads()?;
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let kind: CommandKind = name.parse()?;
    let cfg = resolve(kind, sub)?;
    let art = eorbit::run(&cfg)?;
    print!("{}", art.stdout);
    match art.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
