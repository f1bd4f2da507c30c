//! Run directories, manifests, CSV formatting and the envelope SVG.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use crate::config::{CliError, Settings};

/// 17 significant digits, enough to round-trip an f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row of a `quantity,value` table or one column of a sweep row.
pub type Summary = Vec<(String, String)>;

pub fn entry(name: &str, v: f64) -> (String, String) {
    (name.to_string(), num(v))
}

pub fn quantity_table(rows: &Summary) -> String {
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Quotes a cell that contains a comma, quote or newline.
pub fn cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| cell(c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A directory owned by one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(path: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path })
    }

    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        Ok(p)
    }

    /// The manifest is itself a loadable config; run metadata goes in comments.
    pub fn write_manifest(
        &self,
        subcommand: &str,
        resolved: &Settings,
        extra: &[(&str, String)],
    ) -> Result<(), CliError> {
        let mut out = String::new();
        let _ = writeln!(out, "# dnls {} {subcommand}", env!("CARGO_PKG_VERSION"));
        for (k, v) in extra {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for (k, v) in resolved {
            let _ = writeln!(out, "{k} = {v}");
        }
        self.write("manifest.ini", &out).map(|_| ())
    }
}

/// Deterministic run-directory name from the subcommand and resolved settings.
pub fn run_dir_name(subcommand: &str, resolved: &Settings) -> String {
    let mut h = DefaultHasher::new();
    subcommand.hash(&mut h);
    for (k, v) in resolved {
        if k != "out" && k != "workers" {
            (k, v).hash(&mut h);
        }
    }
    format!("{subcommand}-{:016x}", h.finish())
}

pub fn run_dir(root: &Path, name: Option<&str>, subcommand: &str, resolved: &Settings) -> Result<RunDir, CliError> {
    let name = name.map_or_else(|| run_dir_name(subcommand, resolved), str::to_string);
    RunDir::create(root.join(name))
}

/// (M, E) polylines per branch plus short tangent segments of E + (omega/2) M = r
/// through the given (omega, M, E) points.
pub fn envelope_svg(branches: &[(&str, Vec<(f64, f64)>)], tangents: &[(f64, f64, f64)]) -> String {
    let (w, h, pad) = (640.0, 480.0, 48.0);
    let pts: Vec<(f64, f64)> = branches.iter().flat_map(|b| b.1.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(m, e) in &pts {
        x0 = x0.min(m);
        x1 = x1.max(m);
        y0 = y0.min(e);
        y1 = y1.max(e);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |m: f64| pad + (m - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |e: f64| h - pad - (e - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#, h - pad, w - pad);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="14">M</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(out, r#"<text x="12" y="{}" font-size="14">E</text>"#, h / 2.0);
    let colours = ["#1f77b4", "#d62728"];
    for (i, (name, line)) in branches.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let d: Vec<String> = line.iter().map(|&(m, e)| format!("{:.2},{:.2}", sx(m), sy(e))).collect();
        let c = colours[i % colours.len()];
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"><title>{name}</title></polyline>"#,
            d.join(" ")
        );
        for &(m, e) in line {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, sx(m), sy(e));
        }
    }
    // tangent segments with slope -omega/2
    let half = 0.08 * (x1 - x0);
    for &(omega, m, e) in tangents {
        let s = -0.5 * omega;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            sx(m - half),
            sy(e - s * half),
            sx(m + half),
            sy(e + s * half)
        );
    }
    out.push_str("</svg>\n");
    out
}
