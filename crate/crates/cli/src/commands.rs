//! Subcommand bodies. Each writes its files into the run directory and returns
//! the summary columns a sweep merges.

use std::path::Path;

use dnls_core::envelope::{curve, tangency_and_convexity, Branch};
use dnls_core::evolve::{classify, evolve, ClassifyConfig, EvolveConfig, Trajectory, TrajectorySample};
use dnls_core::functionals;
use dnls_core::groundstate::elliptic_residual;
use dnls_core::linalg::{geomspace, linspace};
use dnls_core::sampling::{random_even_field, seeded_rng};
use dnls_core::special::{build_series, seed_and_residual};
use dnls_core::spectral::{assemble, solve_spectrum};
use dnls_core::{discrete_ground_state, ground_state, make_grid, EvenField, GroundState, HalfLineGrid};

use crate::config::{CliError, Direction, Init, ProfileChoice, RunConfig, Spacing};
use crate::output::{csv_table, entry, envelope_svg, num, quantity_table, RunDir, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GroundState,
    Functionals,
    Spectrum,
    Special,
    Evolve,
    Classify,
    Envelope,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroundState => "groundstate",
            Command::Functionals => "functionals",
            Command::Spectrum => "spectrum",
            Command::Special => "special",
            Command::Evolve => "evolve",
            Command::Classify => "classify",
            Command::Envelope => "envelope",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Command::GroundState,
            Command::Functionals,
            Command::Spectrum,
            Command::Special,
            Command::Evolve,
            Command::Classify,
            Command::Envelope,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    pub fn run(&self, cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
        match self {
            Command::GroundState => run_groundstate(cfg, dir),
            Command::Functionals => run_functionals(cfg, dir),
            Command::Spectrum => run_spectrum(cfg, dir),
            Command::Special => run_special(cfg, dir),
            Command::Evolve => run_evolve(cfg, dir),
            Command::Classify => run_classify(cfg, dir),
            Command::Envelope => run_envelope(cfg, dir),
        }
    }
}

/// Grid and profile, with precondition failures reported as config errors.
fn ground(cfg: &RunConfig, default: ProfileChoice) -> Result<GroundState, CliError> {
    let pre = |e: dnls_core::Error| match e {
        dnls_core::Error::NoGroundState { .. } | dnls_core::Error::DomainTooSmall { .. } => {
            CliError::Config(e.to_string())
        }
        other => other.into(),
    };
    let grid = make_grid(&cfg.params, cfg.l, cfg.n).map_err(pre)?;
    match cfg.profile.unwrap_or(default) {
        ProfileChoice::Closed => ground_state(&cfg.params, &grid).map_err(pre),
        ProfileChoice::Discrete => discrete_ground_state(&cfg.params, &grid).map_err(pre),
    }
}

fn read_field(path: &Path, grid: &HalfLineGrid) -> Result<EvenField, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read field {}: {e}", path.display())))?;
    EvenField::from_csv(&text, grid).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run_groundstate(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Closed)?;
    dir.write("profile.csv", &gs.profile.to_csv(&gs.grid))?;
    let res = elliptic_residual(&gs);
    let mut rows: Summary = gs.summary().into_iter().map(|(k, v)| entry(k, v)).collect();
    rows.push(entry("residual", res.interior));
    rows.push(entry("robin_defect", res.robin_defect));
    dir.write("summary.csv", &quantity_table(&rows))?;
    Ok(rows)
}

fn run_functionals(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Closed)?;
    let u = match &cfg.input {
        Some(p) => read_field(p, &gs.grid)?,
        None => gs.profile.scale_re(cfg.scale),
    };
    let r = functionals::report(&gs, &u)?;
    let rows = vec![
        entry("mass", r.mass),
        entry("energy", r.energy),
        entry("action", r.action),
        entry("K", r.k_gamma),
        entry("nehari", r.nehari),
        entry("mu", r.mu),
    ];
    let header: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    dir.write("functionals.csv", &csv_table(&header, &[rows.iter().map(|r| r.1.clone()).collect()]))?;
    Ok(rows)
}

fn run_spectrum(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Discrete)?;
    let ops = assemble(&gs);
    let s = solve_spectrum(&ops, &gs)?;
    dir.write("y1.csv", &s.y1_field().to_csv(&gs.grid))?;
    dir.write("y2.csv", &s.y2_field().to_csv(&gs.grid))?;
    let rows = vec![
        entry("e_omega", s.e_omega),
        entry("mu1", s.mu1),
        entry("mu2", s.mu2),
        entry("residual_plus", s.residuals.0),
        entry("residual_minus", s.residuals.1),
        entry("block_e_omega", s.block_e_omega),
        entry("pairing", s.pairing),
    ];
    dir.write("summary.csv", &quantity_table(&rows))?;
    Ok(rows)
}

fn run_special(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Discrete)?;
    let ops = assemble(&gs);
    let s = solve_spectrum(&ops, &gs)?;
    let series = build_series(cfg.a, cfg.k, &s, &ops, &gs)?;
    for (j, z) in series.terms.iter().enumerate() {
        dir.write(&format!("z{}.csv", j + 1), &z.to_csv(&gs.grid))?;
    }
    let seed = seed_and_residual(&series, &ops, &gs, cfg.t0)?;
    dir.write("seed.csv", &seed.field.to_csv(&gs.grid))?;
    let rows: Vec<Vec<String>> = seed.samples.iter().map(|(t, r)| vec![num(*t), num(*r)]).collect();
    dir.write("residual.csv", &csv_table(&["t", "residual"], &rows))?;
    let target = -((cfg.k + 1) as f64) * s.e_omega;
    let summary = vec![
        entry("A", cfg.a),
        ("k".into(), cfg.k.to_string()),
        entry("t0", cfg.t0),
        entry("e_omega", s.e_omega),
        entry("slope", seed.fit.slope),
        entry("target_slope", target),
        entry("intercept", seed.fit.intercept),
        entry("fit_rms", seed.fit.rms),
    ];
    dir.write("summary.csv", &quantity_table(&summary))?;
    Ok(summary)
}

/// Initial datum and its start time.
fn initial(cfg: &RunConfig, gs: &GroundState) -> Result<(EvenField, f64), CliError> {
    match &cfg.init {
        Init::QState => Ok((gs.profile.scale_re(cfg.scale), cfg.t0)),
        Init::File(p) => Ok((read_field(p, &gs.grid)?, cfg.t0)),
        Init::Seed { a, k, t0 } => {
            let ops = assemble(gs);
            let s = solve_spectrum(&ops, gs)?;
            let series = build_series(*a, *k, &s, &ops, gs)?;
            Ok((seed_and_residual(&series, &ops, gs, *t0)?.field, *t0))
        }
        Init::Threshold { dir, eps, sign } => {
            let d = match dir {
                Some(p) => read_field(p, &gs.grid)?,
                None => random_even_field(&gs.grid, &mut seeded_rng(cfg.seed), true),
            };
            let td = functionals::generate_threshold_data(gs, &d, *eps, *sign)?;
            Ok((td.field, cfg.t0))
        }
    }
}

fn evolve_config(cfg: &RunConfig, t_start: f64, t_end: f64) -> EvolveConfig {
    EvolveConfig { t_start, t_end, dt0: cfg.dt, record_every: cfg.record_every, r: cfg.r, ..Default::default() }
}

fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from(TrajectorySample::CSV_HEADER);
    out.push('\n');
    for s in &tr.samples {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

fn run_evolve(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Discrete)?;
    let (u0, t_start) = initial(cfg, &gs)?;
    let t_end = cfg.t1.unwrap_or(t_start + 1.0);
    let tr = evolve(&gs, &u0, &evolve_config(cfg, t_start, t_end))?;
    dir.write("trajectory.csv", &trajectory_csv(&tr))?;
    dir.write("final.csv", &tr.final_field.to_csv(&gs.grid))?;
    let first = &tr.samples[0];
    let drift =
        |f: fn(&TrajectorySample) -> f64| tr.samples.iter().map(|s| (f(s) - f(first)).abs()).fold(0.0, f64::max);
    let rows = vec![
        entry("t_start", t_start),
        entry("final_t", tr.final_t),
        ("termination".into(), format!("{:?}", tr.termination).to_lowercase()),
        ("steps".into(), tr.steps.to_string()),
        ("rejected".into(), tr.rejected.to_string()),
        entry("mass_drift", drift(|s| s.mass)),
        entry("energy_drift", drift(|s| s.energy)),
    ];
    dir.write("summary.csv", &quantity_table(&rows))?;
    Ok(rows)
}

fn run_classify(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let gs = ground(cfg, ProfileChoice::Discrete)?;
    let (u0, t_start) = initial(cfg, &gs)?;
    let t_end = cfg.t1.unwrap_or(match cfg.direction {
        Direction::Forward => t_start + cfg.horizon,
        Direction::Backward => t_start - cfg.horizon,
    });
    let cc = ClassifyConfig {
        evolve: evolve_config(cfg, t_start, t_end),
        blowup_growth: cfg.blowup_growth,
        scatter_decay: cfg.scatter_decay,
        ..Default::default()
    };
    let (c, tr) = classify(&gs, &u0, &cc)?;
    dir.write("trajectory.csv", &trajectory_csv(&tr))?;
    let rate = c.rate.map(num).unwrap_or_default();
    let row = vec![cfg.init_text.clone(), c.verdict.as_str().to_string(), num(c.final_t), rate.clone()];
    dir.write("classification.csv", &csv_table(&["init", "verdict", "final_t", "rate"], &[row]))?;
    Ok(vec![
        ("init".into(), cfg.init_text.clone()),
        ("verdict".into(), c.verdict.as_str().to_string()),
        entry("final_t", c.final_t),
        ("rate".into(), rate),
    ])
}

fn run_envelope(cfg: &RunConfig, dir: &RunDir) -> Result<Summary, CliError> {
    let omegas = if cfg.points == 1 {
        vec![cfg.params.omega]
    } else {
        match cfg.spacing {
            Spacing::Linear => linspace(cfg.omega_min, cfg.omega_max, cfg.points),
            // geometric in the distance to the kink on each side of it
            Spacing::Geometric => {
                let kink = cfg.params.omega_threshold();
                if cfg.omega_min >= kink {
                    geomspace(cfg.omega_min - kink, cfg.omega_max - kink, cfg.points).iter().map(|x| kink + x).collect()
                } else {
                    geomspace(cfg.omega_min, cfg.omega_max, cfg.points)
                }
            }
        }
    };
    let pts = curve(&cfg.params, &omegas)?;
    let report = if pts.len() >= 5 { tangency_and_convexity(&pts).ok() } else { None };
    let slope_at =
        |w: f64| report.as_ref().and_then(|r| r.slopes.iter().find(|s| s.0 == w)).map(|s| num(s.1)).unwrap_or_default();
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| {
            vec![
                num(p.omega),
                p.branch.as_str().into(),
                num(p.mass),
                num(p.energy),
                slope_at(p.omega),
                num(-0.5 * p.omega),
            ]
        })
        .collect();
    dir.write("envelope.csv", &csv_table(&["omega", "branch", "M", "E", "slope", "target_slope"], &rows))?;
    if cfg.svg && pts.len() > 1 {
        let line = |b: Branch| pts.iter().filter(|p| p.branch == b).map(|p| (p.mass, p.energy)).collect::<Vec<_>>();
        let step = (pts.len() / 5).max(1);
        let tangents: Vec<(f64, f64, f64)> = pts.iter().step_by(step).map(|p| (p.omega, p.mass, p.energy)).collect();
        dir.write(
            "envelope.svg",
            &envelope_svg(&[("high", line(Branch::High)), ("low", line(Branch::Low))], &tangents),
        )?;
    }
    let p = &pts[0];
    let mut out = vec![
        entry("omega", p.omega),
        ("branch".into(), p.branch.as_str().into()),
        entry("M", p.mass),
        entry("E", p.energy),
    ];
    if let Some(r) = &report {
        out.push(entry("max_tangency_error", r.max_rel_err));
        out.push(entry("min_slope_increment", r.min_slope_increment));
    }
    Ok(out)
}
