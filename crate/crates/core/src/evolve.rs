//! Time integration with diagnostics: Strang splitting around a Crank-Nicolson
//! linear step, energy-controlled step sizes, modulation, and the trichotomy
//! classifier.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::EvenField;
use crate::functionals::{default_cutoff_radius, localized_virial, Pieces};
use crate::grid::HalfLineGrid;
use crate::groundstate::{neg_laplacian, GroundState};
use crate::linalg::{fit_line, BandedLu, Tridiag};
use crate::norms::{self, abs_pow_from_sq};
use crate::params::ModelParams;
use crate::special::{build_series, seed_and_residual};
use crate::spectral::{LinearizedSpectrum, OperatorPair};

/// One Strang step of fixed size: nonlinear phase, Crank-Nicolson, nonlinear phase.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub dt: f64,
    p: f64,
    a: Tridiag,
    lu: BandedLu<Complex64>,
}

impl Stepper {
    pub fn new(grid: &HalfLineGrid, params: &ModelParams, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be nonzero and finite, got {dt}")));
        }
        let a = neg_laplacian(grid, params.gamma);
        let half = Complex64::new(0.0, 0.5 * dt);
        // (I + i dt/2 A) u+ = (I - i dt/2 A) u, with A = -Laplacian
        let lu = BandedLu::factor(grid.n, 1, 1, |i, j| {
            let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            id + half * a.entry(i, j)
        })
        .map_err(|e| Error::SolveFailed(format!("Crank-Nicolson factorization: {e}")))?;
        Ok(Self { dt, p: params.p, a, lu })
    }

    fn phase(&self, u: &mut [Complex64], h: f64) {
        for v in u.iter_mut() {
            let k = abs_pow_from_sq(v.norm_sqr(), self.p - 1.0);
            *v *= Complex64::from_polar(1.0, h * k);
        }
    }

    pub fn apply(&self, u: &mut EvenField) {
        let n = self.a.dim();
        let half = 0.5 * self.dt;
        self.phase(&mut u.values, half);
        let v = &u.values;
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let mut av = self.a.diag[j] * v[j];
                if j > 0 {
                    av += self.a.lower[j - 1] * v[j - 1];
                }
                if j + 1 < n {
                    av += self.a.upper[j] * v[j + 1];
                }
                v[j] - Complex64::new(0.0, half) * av
            })
            .collect();
        self.lu.solve_in_place(&mut rhs);
        u.values[..n].copy_from_slice(&rhs);
        u.values[n] = Complex64::new(0.0, 0.0);
        self.phase(&mut u.values, half);
    }
}

/// Single step of size dt (negative dt steps backward).
pub fn step(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField, dt: f64) -> Result<EvenField> {
    grid.check_len(u.len())?;
    let stepper = Stepper::new(grid, params, dt)?;
    let mut out = u.clone();
    stepper.apply(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub theta: f64,
    pub rho: f64,
    pub h_h1: f64,
    /// ||e^{-i theta} u - Q||_{H^1}
    pub g_h1: f64,
    pub in_modulation: bool,
}

/// Tube radius 0.2 ||Q||^2 in the homogeneous delta norm.
pub fn tube_radius(gs: &GroundState) -> f64 {
    0.2 * gs.h1_gamma_sq()
}

/// Phase theta with Im int e^{-i theta} u Q = 0, then rho along Q and the remainder h.
pub fn modulation_extract(u: &EvenField, gs: &GroundState, prev_theta: Option<f64>) -> Result<(Modulation, EvenField)> {
    let grid = gs.grid;
    grid.check_len(u.len())?;
    let q = gs.values();
    let c: Complex64 = (0..=grid.n).map(|j| grid.weight(j) * q[j] * u.values[j]).sum();
    if c.norm() == 0.0 {
        return Err(Error::NewtonFailed("modulation phase: u is orthogonal to Q".into()));
    }
    let seed = prev_theta.unwrap_or(0.0);
    let mut theta = seed;
    let mut converged = false;
    for _ in 0..60 {
        let r = Complex64::from_polar(1.0, -theta) * c;
        let f = r.im;
        let df = -r.re;
        if f.abs() <= 1e-15 * c.norm() {
            converged = true;
            break;
        }
        let step = if df.abs() < 1e-300 { 1.0 } else { (-f / df).clamp(-1.0, 1.0) };
        theta += step;
    }
    if !converged {
        return Err(Error::NewtonFailed("modulation phase did not converge".into()));
    }
    if (Complex64::from_polar(1.0, -theta) * c).re < 0.0 {
        theta += PI;
    }
    theta -= 2.0 * PI * ((theta - seed) / (2.0 * PI)).round();

    let rot = Complex64::from_polar(1.0, -theta);
    let mut g = u.scale(rot);
    for (v, qv) in g.values.iter_mut().zip(&q) {
        *v -= qv;
    }
    let qp = gs.q_pow(gs.params.p);
    let num: f64 = (0..=grid.n).map(|j| grid.weight(j) * g.values[j].re * qp[j]).sum();
    let rho = num / gs.lp1;
    let mut h = g.clone();
    for (v, qv) in h.values.iter_mut().zip(&q) {
        *v -= rho * qv;
    }
    let mu = crate::functionals::mu(gs, u);
    let m = Modulation {
        theta,
        rho,
        h_h1: norms::h1_norm(&grid, &h),
        g_h1: norms::h1_norm(&grid, &g),
        in_modulation: mu.abs() < tube_radius(gs),
    };
    Ok((m, h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub k_gamma: f64,
    pub mu: f64,
    pub sup_abs: f64,
    pub grad_l2: f64,
    pub j_r: f64,
    pub dj_r: f64,
    pub f_r: f64,
    pub theta: f64,
    pub rho: f64,
    pub h_h1: f64,
    pub g_h1: f64,
    pub in_modulation: bool,
}

impl TrajectorySample {
    pub const CSV_HEADER: &'static str = "t,mass,energy,K,mu,sup,grad,JR,dJR,theta,rho,h,inmod";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.t,
            self.mass,
            self.energy,
            self.k_gamma,
            self.mu,
            self.sup_abs,
            self.grad_l2,
            self.j_r,
            self.dj_r,
            self.theta,
            self.rho,
            self.h_h1,
            u8::from(self.in_modulation)
        )
    }
}

pub fn sample(gs: &GroundState, u: &EvenField, t: f64, r: f64, prev_theta: Option<f64>) -> Result<TrajectorySample> {
    let grid = gs.grid;
    let params = gs.params;
    let pc = Pieces::of(&grid, &params, u);
    let vir = localized_virial(&grid, &params, u, r)?;
    let (m, _) = modulation_extract(u, gs, prev_theta).unwrap_or((
        Modulation { theta: f64::NAN, rho: f64::NAN, h_h1: f64::NAN, g_h1: f64::NAN, in_modulation: false },
        EvenField::zeros(0),
    ));
    Ok(TrajectorySample {
        t,
        mass: pc.mass,
        energy: pc.energy(&params),
        k_gamma: pc.k_alpha_beta(&params, 0.5, 1.0),
        mu: gs.h1_gamma_sq() - pc.h1_gamma(&params),
        sup_abs: u.max_abs(),
        grad_l2: pc.grad.sqrt(),
        j_r: vir.j_r,
        dj_r: vir.dj_r,
        f_r: vir.f_r,
        theta: m.theta,
        rho: m.rho,
        h_h1: m.h_h1,
        g_h1: m.g_h1,
        in_modulation: m.in_modulation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Initial (and largest) step size, positive.
    pub dt0: f64,
    pub record_every: f64,
    /// Cutoff radius for the localized virial; None selects min(10, L/3).
    pub r: Option<f64>,
    /// Per-step absolute energy change that triggers halving.
    pub energy_tol: f64,
    /// Per-step energy change below which the step is allowed to double back toward dt0.
    pub grow_tol: f64,
    pub dt_min: f64,
    /// Mass on the last nodes before the wall that stops the run.
    pub edge_tol: f64,
    pub keep_fields: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 1.0,
            dt0: 1e-3,
            record_every: 0.05,
            r: None,
            energy_tol: 1e-8,
            grow_tol: 1e-10,
            dt_min: 1e-8,
            edge_tol: 1e-6,
            keep_fields: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Step size fell below dt_min.
    Collapsed,
    TruncationBreached,
    /// Stop predicate fired.
    Stopped,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_field: EvenField,
    pub final_t: f64,
    pub termination: Termination,
    pub steps: usize,
    pub rejected: usize,
    /// Recorded fields, when requested.
    pub fields: Vec<(f64, EvenField)>,
}

/// Mass carried by the last three nodes.
pub fn edge_mass(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    (grid.n - 2..=grid.n).map(|j| grid.weight(j) * u.values[j].norm_sqr()).sum()
}

pub fn evolve(gs: &GroundState, u0: &EvenField, cfg: &EvolveConfig) -> Result<Trajectory> {
    evolve_until(gs, u0, cfg, |_: &[TrajectorySample]| false)
}

/// Evolves from t_start toward t_end; `stop` sees the samples after each record.
pub fn evolve_until(
    gs: &GroundState,
    u0: &EvenField,
    cfg: &EvolveConfig,
    mut stop: impl FnMut(&[TrajectorySample]) -> bool,
) -> Result<Trajectory> {
    let grid = gs.grid;
    let params = gs.params;
    grid.check_len(u0.len())?;
    if !u0.is_finite() {
        return Err(Error::InvalidParameter("initial field is not finite".into()));
    }
    if !(cfg.dt0 > 0.0) || !(cfg.record_every > 0.0) {
        return Err(Error::InvalidParameter("dt and record interval must be positive".into()));
    }
    let r = cfg.r.unwrap_or_else(|| default_cutoff_radius(&grid));
    let sign = if cfg.t_end >= cfg.t_start { 1.0 } else { -1.0 };
    let span = (cfg.t_end - cfg.t_start).abs();
    let eps_t = 1e-12 * span.max(1.0);

    let mut u = u0.clone();
    let mut t = cfg.t_start;
    let mut samples = vec![sample(gs, &u, t, r, None)?];
    let mut fields = Vec::new();
    if cfg.keep_fields {
        fields.push((t, u.clone()));
    }
    let mut k_record = 1usize;
    let mut dt = cfg.dt0;
    let mut energy = Pieces::of(&grid, &params, &u).energy(&params);
    let mut stepper: Option<Stepper> = None;
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut termination = Termination::Completed;
    let mut recorded_last = true;

    while (cfg.t_end - t) * sign > eps_t {
        let next_record = (cfg.t_start + sign * k_record as f64 * cfg.record_every)
            .clamp(cfg.t_start.min(cfg.t_end), cfg.t_start.max(cfg.t_end));
        let h = dt.min((next_record - t).abs()).min((cfg.t_end - t).abs());
        if stepper.as_ref().is_none_or(|s| s.dt != sign * h) {
            stepper = Some(Stepper::new(&grid, &params, sign * h)?);
        }
        let mut trial = u.clone();
        stepper.as_ref().expect("stepper").apply(&mut trial);
        let e_new = Pieces::of(&grid, &params, &trial).energy(&params);
        let defect = (e_new - energy).abs();
        if !(defect <= cfg.energy_tol) || !trial.is_finite() {
            rejected += 1;
            dt = 0.5 * h;
            if dt < cfg.dt_min {
                termination = Termination::Collapsed;
                break;
            }
            continue;
        }
        u = trial;
        energy = e_new;
        steps += 1;
        let landed = (next_record - t).abs() <= h * (1.0 + 1e-12);
        t = if landed { next_record } else { t + sign * h };
        recorded_last = false;
        if defect < cfg.grow_tol && dt < cfg.dt0 {
            dt = (2.0 * dt).min(cfg.dt0);
        }
        if landed || (cfg.t_end - t) * sign <= eps_t {
            let prev = samples.last().map(|s| s.theta).filter(|v| v.is_finite());
            samples.push(sample(gs, &u, t, r, prev)?);
            if cfg.keep_fields {
                fields.push((t, u.clone()));
            }
            recorded_last = true;
            k_record += 1;
            if stop(&samples) {
                termination = Termination::Stopped;
                break;
            }
        }
        if edge_mass(&grid, &u) > cfg.edge_tol {
            termination = Termination::TruncationBreached;
            break;
        }
    }
    if !recorded_last {
        let prev = samples.last().map(|s| s.theta).filter(|v| v.is_finite());
        samples.push(sample(gs, &u, t, r, prev)?);
        if cfg.keep_fields {
            fields.push((t, u.clone()));
        }
    }
    Ok(Trajectory { samples, final_field: u, final_t: t, termination, steps, rejected, fields })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Scatter,
    Blowup,
    ConvergeToGroundState,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Scatter => "scatter",
            Verdict::Blowup => "blowup",
            Verdict::ConvergeToGroundState => "converge",
            Verdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub evolve: EvolveConfig,
    /// Gradient growth factor required alongside step collapse.
    pub blowup_growth: f64,
    /// Required sup-norm decay factor for scattering.
    pub scatter_decay: f64,
    /// Trailing fraction of the run that must stay in the modulation tube.
    pub converge_fraction: f64,
    /// Stop as soon as the scattering detector is satisfied.
    pub stop_on_scatter: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            evolve: EvolveConfig::default(),
            blowup_growth: 10.0,
            scatter_decay: 3.0,
            converge_fraction: 0.3,
            stop_on_scatter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub final_t: f64,
    /// Fitted decay rate of ||g||_{H^1} for convergent runs.
    pub rate: Option<f64>,
    pub grad_growth: f64,
    pub sup_decay: f64,
    pub termination: Termination,
}

fn scatter_ready(samples: &[TrajectorySample], decay: f64) -> bool {
    let first = &samples[0];
    let last = samples.last().expect("nonempty");
    samples.iter().all(|s| s.k_gamma > 0.0) && first.sup_abs >= decay * last.sup_abs && !last.in_modulation
}

pub fn classify_trajectory(traj: &Trajectory, cfg: &ClassifyConfig) -> Classification {
    let s = &traj.samples;
    let first = &s[0];
    let last = s.last().expect("trajectory has samples");
    let grad_growth = last.grad_l2 / first.grad_l2;
    let sup_decay = first.sup_abs / last.sup_abs;
    let mut rate = None;
    let verdict = if traj.termination == Termination::Collapsed && grad_growth >= cfg.blowup_growth {
        Verdict::Blowup
    } else if scatter_ready(s, cfg.scatter_decay) {
        Verdict::Scatter
    } else {
        let t0 = first.t;
        let span = (last.t - t0).abs();
        let tail: Vec<&TrajectorySample> =
            s.iter().filter(|x| (x.t - t0).abs() >= (1.0 - cfg.converge_fraction) * span - 1e-12).collect();
        let locked = span > 0.0 && tail.len() >= 3 && tail.iter().all(|x| x.in_modulation && x.g_h1 > 0.0);
        let fit = if locked {
            let xs: Vec<f64> = s.iter().map(|x| (x.t - t0).abs()).collect();
            let ys: Vec<f64> = s.iter().map(|x| x.g_h1.ln()).collect();
            fit_line(&xs, &ys).ok()
        } else {
            None
        };
        match fit {
            Some(f) if f.slope < 0.0 => {
                rate = Some(-f.slope);
                Verdict::ConvergeToGroundState
            }
            _ => Verdict::Undetermined,
        }
    };
    Classification { verdict, final_t: traj.final_t, rate, grad_growth, sup_decay, termination: traj.termination }
}

/// Evolves and classifies. A wall breach without a verdict is an error.
pub fn classify(gs: &GroundState, u0: &EvenField, cfg: &ClassifyConfig) -> Result<(Classification, Trajectory)> {
    let decay = cfg.scatter_decay;
    let early = cfg.stop_on_scatter;
    let traj = evolve_until(gs, u0, &cfg.evolve, |s| early && scatter_ready(s, decay))?;
    let c = classify_trajectory(&traj, cfg);
    if c.verdict == Verdict::Undetermined && traj.termination == Termination::TruncationBreached {
        let edge = edge_mass(&gs.grid, &traj.final_field);
        return Err(Error::TruncationBreached { t: traj.final_t, edge_mass: edge });
    }
    Ok((c, traj))
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub t0: f64,
    pub bound: f64,
    pub max_diff: f64,
    /// (t, ||u_low(t) - u_high(t)||_{H^1})
    pub diffs: Vec<(f64, f64)>,
}

/// Evolves the order-`low` and order-`high` seeds from the same t0 over 3/e
/// and compares them with 10 e^{-(2 + 1/2) e t0}.
pub fn uniqueness_check(
    gs: &GroundState,
    ops: &OperatorPair,
    spectrum: &LinearizedSpectrum,
    amplitude: f64,
    orders: (usize, usize),
    t0: f64,
    dt: f64,
) -> Result<UniquenessReport> {
    let e = spectrum.e_omega;
    let window = 3.0 / e;
    let cfg = EvolveConfig {
        t_start: t0,
        t_end: t0 + window,
        dt0: dt,
        record_every: window / 30.0,
        keep_fields: true,
        ..EvolveConfig::default()
    };
    let mut runs = Vec::new();
    for k in [orders.0, orders.1] {
        let series = build_series(amplitude, k, spectrum, ops, gs)?;
        let seed = seed_and_residual(&series, ops, gs, t0)?;
        runs.push(evolve(gs, &seed.field, &cfg)?);
    }
    let diffs: Vec<(f64, f64)> = runs[0]
        .fields
        .iter()
        .zip(&runs[1].fields)
        .map(|((t, a), (_, b))| (*t, norms::h1_norm(&gs.grid, &(a - b))))
        .collect();
    let max_diff = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(UniquenessReport { t0, bound: 10.0 * (-2.5 * e * t0).exp(), max_diff, diffs })
}
