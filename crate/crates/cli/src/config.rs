//! INI-style run configuration: `key = value` lines merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dnls_core::ModelParams;

/// Raw key/value settings in canonical key spelling.
pub type Settings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config file or input file. Exit code 2.
    Config(String),
    /// A numerical routine failed. Exit code 3.
    Numeric(dnls_core::Error),
    /// Output could not be written. Exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dnls_core::Error> for CliError {
    fn from(e: dnls_core::Error) -> Self {
        match e {
            dnls_core::Error::InvalidParameter(m) => CliError::Config(m),
            other => CliError::Numeric(other),
        }
    }
}

/// Every accepted key, in canonical spelling.
pub const KEYS: &[&str] = &[
    "gamma",
    "p",
    "omega",
    "L",
    "N",
    "out",
    "run_name",
    "workers",
    "seed",
    "profile",
    "in",
    "A",
    "k",
    "t0",
    "t1",
    "dt",
    "record_every",
    "R",
    "init",
    "scale",
    "direction",
    "horizon",
    "eps",
    "sign",
    "omega_min",
    "omega_max",
    "points",
    "spacing",
    "svg",
    "blowup_growth",
    "scatter_decay",
];

/// Keys a sweep may vary.
pub const SWEEP_AXES: &[&str] = &["omega", "A", "eps", "N"];

/// Maps a key to its canonical spelling, case-insensitively.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().replace('-', "_");
    KEYS.iter().copied().find(|c| c.eq_ignore_ascii_case(&k))
}

/// Parses `key = value` lines. `#` and `;` start comments; `[section]` lines are ignored.
pub fn parse_ini(text: &str, origin: &str) -> Result<Settings, CliError> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let lineno = i + 1;
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{origin}:{lineno}: expected `key = value`, found `{line}`")));
        };
        let v = v.trim();
        let Some(key) = canonical_key(k) else {
            return Err(CliError::Config(format!("{origin}:{lineno}: unknown key `{}`", k.trim())));
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{origin}:{lineno}: empty value for `{key}`")));
        }
        if out.insert(key.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("{origin}:{lineno}: duplicate key `{key}`")));
        }
    }
    Ok(out)
}

pub fn read_ini(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_ini(&text, &path.display().to_string())
}

/// Parses `key=value` overrides as given to `--set`.
pub fn parse_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, found `{s}`")))?;
    let key = canonical_key(k).ok_or_else(|| CliError::Config(format!("unknown key `{}`", k.trim())))?;
    Ok((key.to_string(), v.trim().to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileChoice {
    /// Closed-form samples.
    Closed,
    /// Newton solution of the grid equation.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Initial datum for evolve and classify.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// scale * Q.
    QState,
    File(PathBuf),
    /// Q + V(t0) from the special-solution series.
    Seed {
        a: f64,
        k: usize,
        t0: f64,
    },
    /// Threshold-manifold datum along a direction file, or a seeded random direction.
    Threshold {
        dir: Option<PathBuf>,
        eps: f64,
        sign: i32,
    },
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub l: f64,
    pub n: usize,
    pub out: PathBuf,
    pub run_name: Option<String>,
    pub workers: usize,
    pub seed: u64,
    pub profile: Option<ProfileChoice>,
    pub input: Option<PathBuf>,
    pub a: f64,
    pub k: usize,
    pub t0: f64,
    pub t1: Option<f64>,
    pub dt: f64,
    pub record_every: f64,
    pub r: Option<f64>,
    pub init: Init,
    pub init_text: String,
    pub scale: f64,
    pub direction: Direction,
    pub horizon: f64,
    pub eps: f64,
    pub sign: i32,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub svg: bool,
    pub blowup_growth: f64,
    pub scatter_decay: f64,
    /// Resolved values of every key, echoed to the manifest.
    pub resolved: Settings,
}

struct Reader<'a> {
    raw: &'a Settings,
    resolved: Settings,
}

impl Reader<'_> {
    fn text(&mut self, key: &str) -> Option<String> {
        let v = self.raw.get(key).cloned();
        if let Some(v) = &v {
            self.resolved.insert(key.into(), v.clone());
        }
        v
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => {
                v.parse::<T>().map(Some).map_err(|_| CliError::Config(format!("{key} must be {what} (got `{v}`)")))
            }
        }
    }

    fn required(&mut self, key: &str) -> Result<f64, CliError> {
        self.parsed::<f64>(key, "a number")?
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }

    fn or<T: std::str::FromStr + ToString>(&mut self, key: &str, what: &str, default: T) -> Result<T, CliError> {
        match self.parsed(key, what)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.insert(key.into(), default.to_string());
                Ok(default)
            }
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{key} must be positive (got {v})")))
    }
}

fn parse_init(text: &str, a: f64, k: usize, t0: f64, eps: f64, sign: i32) -> Result<Init, CliError> {
    let bad = |m: &str| CliError::Config(format!("init `{text}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    match text.split_once(':') {
        None if text == "qstate" => Ok(Init::QState),
        None if text == "seed" => Ok(Init::Seed { a, k, t0 }),
        None if text == "threshold" => Ok(Init::Threshold { dir: None, eps, sign }),
        Some(("seed", rest)) => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("expected seed:A,k,t0"));
            }
            let k = parts[1].trim().parse::<usize>().map_err(|_| bad("k must be a positive integer"))?;
            Ok(Init::Seed { a: num(parts[0])?, k, t0: num(parts[2])? })
        }
        Some(("threshold", rest)) => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("expected threshold:dirfile,eps,sign"));
            }
            let sign = parts[2].trim().parse::<i32>().map_err(|_| bad("sign must be 1 or -1"))?;
            if sign != 1 && sign != -1 {
                return Err(bad("sign must be 1 or -1"));
            }
            Ok(Init::Threshold { dir: Some(PathBuf::from(parts[0].trim())), eps: num(parts[1])?, sign })
        }
        Some(("file", path)) => Ok(Init::File(PathBuf::from(path))),
        _ => Ok(Init::File(PathBuf::from(text))),
    }
}

impl RunConfig {
    /// Resolves raw settings. `DNLS_OUT` supplies the output root when `out` is unset.
    pub fn resolve(raw: &Settings, env_out: Option<String>) -> Result<Self, CliError> {
        let mut r = Reader { raw, resolved: Settings::new() };
        let gamma = r.required("gamma")?;
        let p = r.required("p")?;
        let omega = r.required("omega")?;
        let params = ModelParams::new(gamma, p, omega).map_err(|e| match e {
            dnls_core::Error::InvalidParameter(m) => CliError::Config(m),
            other => CliError::Config(other.to_string()),
        })?;
        let l = positive("L", r.or("L", "a number", 30.0)?)?;
        let n: usize = r.or("N", "a positive integer", 3000)?;
        if n < 16 {
            return Err(CliError::Config(format!("N must be at least 16 (got {n})")));
        }
        let out = match r.text("out") {
            Some(v) => PathBuf::from(v),
            None => {
                let v = env_out.unwrap_or_else(|| "dnls-out".into());
                r.resolved.insert("out".into(), v.clone());
                PathBuf::from(v)
            }
        };
        let run_name = r.text("run_name");
        let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let workers: usize = r.or("workers", "a positive integer", default_workers)?;
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let seed: u64 = r.or("seed", "a non-negative integer", 0)?;
        let profile = match r.text("profile").as_deref() {
            None => None,
            Some("closed") => Some(ProfileChoice::Closed),
            Some("discrete") => Some(ProfileChoice::Discrete),
            Some(v) => return Err(CliError::Config(format!("profile must be `closed` or `discrete` (got `{v}`)"))),
        };
        let input = r.text("in").map(PathBuf::from);
        let a: f64 = r.or("A", "a number", 1.0)?;
        let k: usize = r.or("k", "a positive integer", 3)?;
        let t0: f64 = r.or("t0", "a number", 1.0)?;
        let t1: Option<f64> = r.parsed("t1", "a number")?;
        let dt = positive("dt", r.or("dt", "a number", 1e-3)?)?;
        let record_every = positive("record_every", r.or("record_every", "a number", 0.05)?)?;
        let rr = match r.parsed::<f64>("R", "a number")? {
            Some(v) => Some(positive("R", v)?),
            None => None,
        };
        let scale: f64 = r.or("scale", "a number", 1.0)?;
        let direction = match r.or("direction", "forward or backward", "forward".to_string())?.as_str() {
            "forward" => Direction::Forward,
            "backward" => Direction::Backward,
            v => return Err(CliError::Config(format!("direction must be `forward` or `backward` (got `{v}`)"))),
        };
        let horizon = positive("horizon", r.or("horizon", "a number", 12.0)?)?;
        let eps: f64 = r.or("eps", "a number", 0.05)?;
        let sign: i32 = r.or("sign", "1 or -1", 1)?;
        if sign != 1 && sign != -1 {
            return Err(CliError::Config(format!("sign must be 1 or -1 (got {sign})")));
        }
        let init_text = r.or("init", "an initial-datum form", "qstate".to_string())?;
        let init = parse_init(&init_text, a, k, t0, eps, sign)?;
        let omega_min = positive("omega_min", r.or("omega_min", "a number", 0.3)?)?;
        let omega_max = positive("omega_max", r.or("omega_max", "a number", 4.0)?)?;
        if omega_max <= omega_min {
            return Err(CliError::Config(format!("omega_max ({omega_max}) must exceed omega_min ({omega_min})")));
        }
        let points: usize = r.or("points", "a positive integer", 20)?;
        if points == 0 {
            return Err(CliError::Config("points must be at least 1".into()));
        }
        let spacing = match r.or("spacing", "linear or geometric", "geometric".to_string())?.as_str() {
            "linear" => Spacing::Linear,
            "geometric" => Spacing::Geometric,
            v => return Err(CliError::Config(format!("spacing must be `linear` or `geometric` (got `{v}`)"))),
        };
        let svg: bool = r.or("svg", "true or false", true)?;
        let blowup_growth = positive("blowup_growth", r.or("blowup_growth", "a number", 10.0)?)?;
        let scatter_decay = positive("scatter_decay", r.or("scatter_decay", "a number", 3.0)?)?;
        Ok(Self {
            params,
            l,
            n,
            out,
            run_name,
            workers,
            seed,
            profile,
            input,
            a,
            k,
            t0,
            t1,
            dt,
            record_every,
            r: rr,
            init,
            init_text,
            scale,
            direction,
            horizon,
            eps,
            sign,
            omega_min,
            omega_max,
            points,
            spacing,
            svg,
            blowup_growth,
            scatter_decay,
            resolved: r.resolved,
        })
    }
}
