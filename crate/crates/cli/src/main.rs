use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mintime_cli::config::output_dir;
use mintime_cli::{cmd_report, cmd_shoot, cmd_solve, cmd_verify, Check, CliError, CliResult, Outcome, RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "mintime", version, about = "Minimum time functions and their regularity certificates")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Grid spacing (`grid.h`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<String>,
    /// Horizon for `verify attainable` (`verify.T`).
    #[arg(long = "T", global = true, allow_hyphen_values = true)]
    horizon: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory (`output.dir`); `MINTIME_OUT` takes precedence.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the minimum time function: T.csv, meta.json.
    Solve,
    /// Integrate the extremal from a target point: arc.csv.
    Shoot {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        normal: String,
        #[arg(long, allow_hyphen_values = true)]
        r: String,
        /// Step size (`extremal.dt`).
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<String>,
    },
    /// Run a certificate check: certificates.json, verify-<check>.json.
    Verify { check: CheckArg },
    /// Summarize the output directory: report.md.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Hypo,
    Attainable,
    Petrov,
    Semiconcavity,
}

fn numbers(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Config(format!("invalid value for --{flag}: {s:?} ({e})"))))
        .collect()
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let mut raw = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for pair in &cli.set {
        raw.set_pair(pair)?;
    }
    for (key, v) in [
        ("scenario", &cli.scenario),
        ("grid.h", &cli.h),
        ("verify.T", &cli.horizon),
        ("seed", &cli.seed),
        ("output.dir", &cli.out),
    ] {
        if let Some(v) = v {
            raw.set(key, v)?;
        }
    }
    if let Cmd::Shoot { dt: Some(dt), .. } = &cli.cmd {
        raw.set("extremal.dt", dt)?;
    }
    let env_out = std::env::var_os("MINTIME_OUT").filter(|v| !v.is_empty()).map(PathBuf::from);
    if let Cmd::Report = cli.cmd {
        return cmd_report(&output_dir(&raw, env_out));
    }
    let cfg = RunConfig::resolve(&raw, env_out)?;
    match cli.cmd {
        Cmd::Solve => cmd_solve(&cfg),
        Cmd::Shoot { point, normal, r, .. } => {
            let r: f64 = r.trim().parse().map_err(|e| CliError::Config(format!("invalid value for --r: {r:?} ({e})")))?;
            cmd_shoot(&cfg, &numbers("point", &point)?, &numbers("normal", &normal)?, r)
        }
        Cmd::Verify { check } => {
            let check = match check {
                CheckArg::Hypo => Check::Hypo,
                CheckArg::Attainable => Check::Attainable,
                CheckArg::Petrov => Check::Petrov,
                CheckArg::Semiconcavity => Check::Semiconcavity,
            };
            cmd_verify(&cfg, check)
        }
        Cmd::Report => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
