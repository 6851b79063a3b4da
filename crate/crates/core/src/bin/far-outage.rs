use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use far_outage::config::{Mode, RunConfig};
use far_outage::{sweep, validate, Error};

#[derive(Parser)]
#[command(version, about = "Weak-user outage probability for fluid-antenna-relay NOMA")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Outage probability against SNR, one row per (beta_b, SNR) point.
    OpCurve(Common),
    /// AF/DF selection over a grid of relay positions.
    MuMap(Common),
    /// Run the self-check suite; exits 1 if any check fails.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides both the Monte Carlo and the MVN seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted. Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Config override, e.g. `--set scenario.gamma_u2=2.6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Invalid { .. } => 2,
        _ => 1,
    }
}

fn load(c: &Common, mode: Mode) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&c.config)?;
    for o in &c.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = c.seed {
        cfg.set_seed(seed);
    }
    if let Some(m) = cfg.sweep.mode {
        if m != mode {
            return Err(Error::Config(format!(
                "config sets sweep.mode = \"{}\" but the subcommand runs {}",
                m.as_str(),
                mode.as_str()
            )));
        }
    }
    Ok(cfg)
}

fn emit(c: &Common, cfg: &RunConfig, body: &str) -> Result<(), Error> {
    match &c.out {
        Some(path) => {
            std::fs::write(path, body)?;
            let mut echo = path.clone().into_os_string();
            echo.push(".resolved.toml");
            std::fs::write(echo, cfg.to_toml())?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (c, mode) = match &cli.cmd {
        Cmd::OpCurve(c) => (c, Mode::OpCurve),
        Cmd::MuMap(c) => (c, Mode::MuMap),
        Cmd::Validate(c) => (c, Mode::Validate),
    };
    let cfg = load(c, mode)?;
    if c.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    match mode {
        Mode::OpCurve => emit(c, &cfg, &sweep::run_op_curve(&cfg)?).map(|_| true),
        Mode::MuMap => emit(c, &cfg, &sweep::run_mu_map(&cfg)?).map(|_| true),
        Mode::Validate => {
            let report = validate::run_validate(&cfg)?;
            emit(c, &cfg, &report.render())?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
