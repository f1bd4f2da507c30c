//! Parameter sweeps over a bounded worker pool.

use rayon::prelude::*;

use crate::commands::Command;
use crate::config::{CliError, RunConfig, Settings, SWEEP_AXES};
use crate::output::{csv_table, RunDir, Summary};

pub struct SweepPlan {
    pub command: Command,
    pub axis: &'static str,
    pub values: Vec<String>,
}

pub fn plan(run: &str, axis: &str, values: &str) -> Result<SweepPlan, CliError> {
    let command = Command::from_name(run)
        .ok_or_else(|| CliError::Config(format!("`{run}` cannot be swept (expected a subcommand other than sweep)")))?;
    let axis = crate::config::canonical_key(axis)
        .filter(|k| SWEEP_AXES.contains(k))
        .ok_or_else(|| CliError::Config(format!("axis must be one of {} (got `{axis}`)", SWEEP_AXES.join(", "))))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    Ok(SweepPlan { command, axis, values })
}

fn one(
    plan: &SweepPlan,
    base: &Settings,
    env_out: Option<String>,
    dir: &RunDir,
    i: usize,
    value: &str,
) -> Result<Summary, CliError> {
    let mut s = base.clone();
    s.insert(plan.axis.to_string(), value.to_string());
    if plan.command == Command::Envelope && plan.axis == "omega" {
        s.insert("points".into(), "1".into());
    }
    let cfg = RunConfig::resolve(&s, env_out)?;
    let sub = RunDir::create(dir.path.join(format!("{i:03}-{}={value}", plan.axis)))?;
    sub.write_manifest(plan.command.name(), &cfg.resolved, &[("seed", cfg.seed.to_string())])?;
    plan.command.run(&cfg, &sub)
}

/// Runs every value, merges summaries in axis order, and returns the merged CSV.
/// Per-value failures become rows with an `error` entry.
pub fn run(
    plan: &SweepPlan,
    base: &Settings,
    cfg: &RunConfig,
    dir: &RunDir,
    env_out: Option<String>,
) -> Result<String, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    let results: Vec<Result<Summary, CliError>> = pool.install(|| {
        plan.values.par_iter().enumerate().map(|(i, v)| one(plan, base, env_out.clone(), dir, i, v)).collect()
    });

    let columns: Vec<String> = results
        .iter()
        .find_map(|r| r.as_ref().ok())
        .map(|s| s.iter().map(|c| c.0.clone()).filter(|c| c != plan.axis).collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = vec![plan.axis];
    header.extend(columns.iter().map(String::as_str));
    header.push("error");
    let rows: Vec<Vec<String>> = plan
        .values
        .iter()
        .zip(&results)
        .map(|(v, r)| {
            let mut row = vec![v.clone()];
            match r {
                Ok(s) => {
                    row.extend(
                        columns.iter().map(|c| s.iter().find(|e| &e.0 == c).map(|e| e.1.clone()).unwrap_or_default()),
                    );
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(columns.iter().map(|_| String::new()));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect();
    Ok(csv_table(&header, &rows))
}
