//! `dnls`: ground states, spectra, special solutions, dynamics and threshold
//! envelopes for the even-sector delta NLS.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Command;
use config::{parse_assignment, read_ini, CliError, RunConfig, Settings};
use output::run_dir;

#[derive(Parser, Debug)]
#[command(name = "dnls", version, about = "Even-sector numerics for NLS with a repulsive delta potential")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Sub,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args, Debug)]
struct Common {
    /// INI-style `key = value` file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    omega: Option<String>,
    /// Half-line length.
    #[arg(long = "L", global = true)]
    l: Option<String>,
    /// Number of grid intervals.
    #[arg(long = "N", global = true)]
    n: Option<String>,
    /// Output root (default: $DNLS_OUT, else ./dnls-out).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Run directory name under the output root (default: derived from the config).
    #[arg(long, global = true)]
    run_name: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// closed | discrete
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Any config key, as key=value. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug, Default)]
struct SeriesArgs {
    /// Amplitude of the unstable mode.
    #[arg(long = "A", allow_hyphen_values = true)]
    a: Option<String>,
    /// Series order.
    #[arg(long)]
    k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
}

#[derive(Args, Debug)]
struct DynArgs {
    /// qstate | <file> | seed[:A,k,t0] | threshold[:dirfile,eps,sign]
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// Virial cutoff radius.
    #[arg(long = "R")]
    r: Option<String>,
    /// Multiplier on Q for `--init qstate`.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Ground-state profile and scalar summary.
    Groundstate,
    /// Mass, energy, action, K, Nehari and mu of a field (default: the ground state).
    Functionals {
        #[arg(long = "in")]
        input: Option<String>,
    },
    /// Unstable eigenpair of the linearized operator.
    Spectrum,
    /// Special-solution series terms and the residual decay fit.
    Special {
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Time evolution with diagnostics.
    Evolve {
        #[command(flatten)]
        dyn_args: DynArgs,
    },
    /// Evolution plus Scatter / Blowup / ConvergeToGroundState verdict.
    Classify {
        #[command(flatten)]
        dyn_args: DynArgs,
        /// forward | backward (ignored when --t1 is given)
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        horizon: Option<String>,
    },
    /// Threshold mass/energy curve.
    Envelope {
        #[arg(long)]
        omega_min: Option<String>,
        #[arg(long)]
        omega_max: Option<String>,
        #[arg(long)]
        points: Option<String>,
        /// linear | geometric
        #[arg(long)]
        spacing: Option<String>,
        #[arg(long)]
        svg: Option<String>,
    },
    /// Runs a subcommand for each value of one key, in parallel.
    Sweep {
        /// omega | A | eps | N
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Subcommand to run per value.
        #[arg(long)]
        run: String,
    },
}

fn push(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<String>) {
    if let Some(v) = v {
        out.push((key, v.clone()));
    }
}

fn series_flags(out: &mut Vec<(&'static str, String)>, s: &SeriesArgs) {
    push(out, "A", &s.a);
    push(out, "k", &s.k);
    push(out, "t0", &s.t0);
}

fn dyn_flags(out: &mut Vec<(&'static str, String)>, d: &DynArgs) {
    push(out, "init", &d.init);
    series_flags(out, &d.series);
    push(out, "t1", &d.t1);
    push(out, "dt", &d.dt);
    push(out, "record_every", &d.record_every);
    push(out, "R", &d.r);
    push(out, "scale", &d.scale);
    push(out, "eps", &d.eps);
    push(out, "sign", &d.sign);
}

fn flag_overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let c = &cli.common;
    let mut out = Vec::new();
    for (k, v) in [
        ("gamma", &c.gamma),
        ("p", &c.p),
        ("omega", &c.omega),
        ("L", &c.l),
        ("N", &c.n),
        ("out", &c.out),
        ("run_name", &c.run_name),
        ("workers", &c.workers),
        ("seed", &c.seed),
        ("profile", &c.profile),
    ] {
        push(&mut out, k, v);
    }
    match &cli.cmd {
        Sub::Groundstate | Sub::Spectrum | Sub::Sweep { .. } => {}
        Sub::Functionals { input } => push(&mut out, "in", input),
        Sub::Special { series } => series_flags(&mut out, series),
        Sub::Evolve { dyn_args } => dyn_flags(&mut out, dyn_args),
        Sub::Classify { dyn_args, direction, horizon } => {
            dyn_flags(&mut out, dyn_args);
            push(&mut out, "direction", direction);
            push(&mut out, "horizon", horizon);
        }
        Sub::Envelope { omega_min, omega_max, points, spacing, svg } => {
            push(&mut out, "omega_min", omega_min);
            push(&mut out, "omega_max", omega_max);
            push(&mut out, "points", points);
            push(&mut out, "spacing", spacing);
            push(&mut out, "svg", svg);
        }
    }
    out
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut s = match &cli.common.config {
        Some(p) => read_ini(p)?,
        None => Settings::new(),
    };
    for (k, v) in flag_overrides(cli) {
        s.insert(k.to_string(), v);
    }
    for a in &cli.common.set {
        let (k, v) = parse_assignment(a)?;
        s.insert(k, v);
    }
    Ok(s)
}

fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    let env_out = std::env::var("DNLS_OUT").ok().filter(|v| !v.is_empty());
    let base = settings(cli)?;
    let cfg = RunConfig::resolve(&base, env_out.clone())?;
    match &cli.cmd {
        Sub::Sweep { axis, values, run } => {
            let plan = sweep::plan(run, axis, values)?;
            let dir = run_dir(&cfg.out, cfg.run_name.as_deref(), &format!("sweep-{}", plan.command.name()), &{
                let mut r = cfg.resolved.clone();
                r.insert(format!("sweep.{}", plan.axis), values.clone());
                r
            })?;
            dir.write_manifest(
                "sweep",
                &cfg.resolved,
                &[
                    ("run", run.clone()),
                    ("axis", plan.axis.to_string()),
                    ("values", values.clone()),
                    ("seed", cfg.seed.to_string()),
                ],
            )?;
            let merged = sweep::run(&plan, &base, &cfg, &dir, env_out)?;
            dir.write("sweep.csv", &merged)?;
            Ok(dir.path)
        }
        other => {
            let command = match other {
                Sub::Groundstate => Command::GroundState,
                Sub::Functionals { .. } => Command::Functionals,
                Sub::Spectrum => Command::Spectrum,
                Sub::Special { .. } => Command::Special,
                Sub::Evolve { .. } => Command::Evolve,
                Sub::Classify { .. } => Command::Classify,
                Sub::Envelope { .. } => Command::Envelope,
                Sub::Sweep { .. } => unreachable!(),
            };
            let dir = run_dir(&cfg.out, cfg.run_name.as_deref(), command.name(), &cfg.resolved)?;
            dir.write_manifest(command.name(), &cfg.resolved, &[("seed", cfg.seed.to_string())])?;
            command.run(&cfg, &dir)?;
            Ok(dir.path)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dnls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
