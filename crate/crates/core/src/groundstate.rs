//! Sech-power ground state, its translated-soliton form and the sharp
//! Gagliardo-Nirenberg constant.

use crate::error::{Error, Result};
use crate::field::EvenField;
use crate::grid::HalfLineGrid;
use crate::linalg::Tridiag;
use crate::norms::{self, pos_pow};
use crate::params::ModelParams;

/// How the sampled profile was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Closed form sampled at the nodes.
    ClosedForm,
    /// Closed form polished by Newton onto the discrete elliptic equation.
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub params: ModelParams,
    pub grid: HalfLineGrid,
    pub kind: ProfileKind,
    /// Real, positive samples.
    pub profile: EvenField,
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
    /// Integral of Q^(p+1).
    pub lp1: f64,
    pub q0: f64,
    pub xi: f64,
}

/// atanh via the log form, rejecting |x| >= 1.
pub fn atanh_checked(x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("atanh argument {x} outside (-1, 1)")));
    }
    Ok(0.5 * ((1.0 + x) / (1.0 - x)).ln())
}

/// Translation with Q_{omega,gamma}(x) = Q_{omega,0}(x + xi) for x >= 0.
pub fn shift_xi(params: &ModelParams) -> Result<f64> {
    let sw = params.omega.sqrt();
    let arg = params.gamma / (2.0 * sw);
    Ok(2.0 / ((params.p - 1.0) * sw) * atanh_checked(arg)?)
}

fn check_regime(params: &ModelParams) -> Result<()> {
    if !(params.p > 1.0) || !(params.omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ground state needs p > 1 and omega > 0 (got p = {}, omega = {})",
            params.p, params.omega
        )));
    }
    if params.gamma != 0.0 && !params.has_ground_state() {
        return Err(Error::NoGroundState { omega: params.omega, threshold: params.omega_threshold() });
    }
    Ok(())
}

/// Closed-form profile on x >= 0 (gamma = 0 allowed).
pub fn closed_form(params: &ModelParams, x: f64) -> Result<f64> {
    check_regime(params)?;
    let (p, w) = (params.p, params.omega);
    let arg = (p - 1.0) * w.sqrt() * x.abs() / 2.0 + atanh_checked(params.gamma / (2.0 * w.sqrt()))?;
    let sech = 1.0 / arg.cosh();
    Ok(pos_pow((p + 1.0) * w / 2.0 * sech * sech, 1.0 / (p - 1.0)))
}

/// Right derivative of the closed form.
pub fn closed_form_derivative(params: &ModelParams, x: f64) -> Result<f64> {
    let (p, w) = (params.p, params.omega);
    let q = closed_form(params, x)?;
    let arg = (p - 1.0) * w.sqrt() * x / 2.0 + atanh_checked(params.gamma / (2.0 * w.sqrt()))?;
    Ok(-q * w.sqrt() * arg.tanh())
}

/// Q(0), from Q(0)^(p-1) = (p+1)(4 omega - gamma^2)/8.
pub fn q0_closed(params: &ModelParams) -> Result<f64> {
    check_regime(params)?;
    let (p, w, g) = (params.p, params.omega, params.gamma);
    Ok(pos_pow((p + 1.0) * (4.0 * w - g * g) / 8.0, 1.0 / (p - 1.0)))
}

fn with_scalars(params: ModelParams, grid: HalfLineGrid, kind: ProfileKind, profile: EvenField) -> Result<GroundState> {
    let mass = norms::mass(&grid, &profile);
    let lp1 = norms::lp_pow(&grid, &profile, params.p + 1.0);
    let energy = 0.5 * norms::h1_gamma_sq(&grid, &params, &profile) - lp1 / (params.p + 1.0);
    let xi = if params.gamma == 0.0 { 0.0 } else { shift_xi(&params)? };
    Ok(GroundState {
        params,
        grid,
        kind,
        q0: profile.values[0].re,
        profile,
        mass,
        energy,
        action: energy + 0.5 * params.omega * mass,
        lp1,
        xi,
    })
}

/// Samples the closed form and fills the scalars by quadrature.
pub fn ground_state(params: &ModelParams, grid: &HalfLineGrid) -> Result<GroundState> {
    check_regime(params)?;
    let mut re = Vec::with_capacity(grid.len());
    for j in 0..=grid.n {
        re.push(closed_form(params, grid.x(j))?);
    }
    re[grid.n] = 0.0;
    with_scalars(*params, *grid, ProfileKind::ClosedForm, EvenField::from_real(&re))
}

/// Matrix of -Delta_gamma on the unknown nodes 0..N-1 (node N is Dirichlet).
pub fn neg_laplacian(grid: &HalfLineGrid, gamma: f64) -> Tridiag {
    let n = grid.n;
    let h2 = 1.0 / (grid.dx * grid.dx);
    let mut diag = vec![2.0 * h2; n];
    let mut upper = vec![-h2; n - 1];
    let lower = vec![-h2; n - 1];
    diag[0] = 2.0 * h2 - gamma / grid.dx;
    upper[0] = -2.0 * h2;
    Tridiag { lower, diag, upper }
}

/// Newton-polishes the closed form onto (-Delta_gamma + omega) Q = Q^p on the grid.
///
/// The discrete profile annihilates the discrete Nehari and virial functionals
/// and spans the kernel of the discrete L-minus, so it is the reference used by
/// the spectral, series and evolution code.
pub fn discrete_ground_state(params: &ModelParams, grid: &HalfLineGrid) -> Result<GroundState> {
    let start = ground_state(params, grid)?;
    let n = grid.n;
    let p = params.p;
    let a = neg_laplacian(grid, params.gamma);
    let mut q: Vec<f64> = start.profile.values[..n].iter().map(|z| z.re).collect();
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut converged = false;
    for _ in 0..40 {
        let aq = a.apply(&q);
        let f: Vec<f64> = (0..n).map(|j| aq[j] + params.omega * q[j] - q[j].abs().powf(p - 1.0) * q[j]).collect();
        let jac = Tridiag {
            lower: a.lower.clone(),
            diag: (0..n).map(|j| a.diag[j] + params.omega - p * q[j].abs().powf(p - 1.0)).collect(),
            upper: a.upper.clone(),
        };
        let delta = jac.factor()?.solve(&f);
        let step = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            q[j] -= delta[j];
        }
        if step <= 1e-14 * scale {
            converged = true;
            break;
        }
    }
    if !converged || q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NewtonFailed("discrete ground state did not converge in 40 iterations".into()));
    }
    q.push(0.0);
    with_scalars(*params, *grid, ProfileKind::Discrete, EvenField::from_real(&q))
}

impl GroundState {
    pub fn values(&self) -> Vec<f64> {
        self.profile.re()
    }

    /// Homogeneous delta norm squared of Q.
    pub fn h1_gamma_sq(&self) -> f64 {
        norms::h1_gamma_sq(&self.grid, &self.params, &self.profile)
    }

    /// Weighted norm squared, ||Q||_{H^1_{omega,gamma}}^2.
    pub fn h1_omega_gamma_sq(&self) -> f64 {
        self.h1_gamma_sq() + self.params.omega * self.mass
    }

    /// Plain H^1 norm.
    pub fn h1_norm(&self) -> f64 {
        norms::h1_norm(&self.grid, &self.profile)
    }

    /// Q^p at the nodes.
    pub fn q_pow(&self, e: f64) -> Vec<f64> {
        self.profile.values.iter().map(|z| pos_pow(z.re.max(0.0), e)).collect()
    }

    /// Scalar summary as `(name, value)` rows.
    pub fn summary(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mass", self.mass),
            ("energy", self.energy),
            ("action", self.action),
            ("lp1", self.lp1),
            ("q0", self.q0),
            ("xi", self.xi),
        ]
    }
}

/// The three expressions for the inverse sharp constant and their spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnReport {
    /// ||Q||^2_{H^1_{omega,gamma}} / ||Q||^2_{p+1}
    pub via_norms: f64,
    /// (2(p+1)/(p-1) S(Q))^((p-1)/(p+1))
    pub via_action: f64,
    /// ||Q||_{p+1}^(p-1)
    pub via_lp: f64,
    pub max_rel_dev: f64,
}

pub fn gn_identity(gs: &GroundState) -> GnReport {
    let p = gs.params.p;
    let lp_sq = pos_pow(gs.lp1, 2.0 / (p + 1.0));
    let via_norms = gs.h1_omega_gamma_sq() / lp_sq;
    let via_action = pos_pow(2.0 * (p + 1.0) / (p - 1.0) * gs.action, (p - 1.0) / (p + 1.0));
    let via_lp = pos_pow(gs.lp1, (p - 1.0) / (p + 1.0));
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let max_rel_dev = rel(via_norms, via_action).max(rel(via_norms, via_lp)).max(rel(via_action, via_lp));
    GnReport { via_norms, via_action, via_lp, max_rel_dev }
}

/// ||f||^2_{p+1} / ||f||^2_{H^1_{omega,gamma}}; never exceeds C_{omega,gamma}.
pub fn gn_quotient(grid: &HalfLineGrid, params: &ModelParams, f: &EvenField) -> f64 {
    let p = params.p;
    let num = pos_pow(norms::lp_pow(grid, f, p + 1.0), 2.0 / (p + 1.0));
    let den = norms::h1_gamma_sq(grid, params, f) + params.omega * norms::mass(grid, f);
    num / den
}

/// Finite-difference consistency of a real profile against the elliptic equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticResidual {
    /// Max over interior nodes of |-Q'' + omega Q - Q^p|.
    pub interior: f64,
    /// |2 Q'(0+) + gamma Q(0)| with a second-order one-sided derivative.
    pub robin_defect: f64,
}

pub fn elliptic_residual(gs: &GroundState) -> EllipticResidual {
    profile_residual(&gs.params, &gs.grid, &gs.values())
}

/// Residual of arbitrary real samples against the (params) equation.
pub fn profile_residual(params: &ModelParams, grid: &HalfLineGrid, q: &[f64]) -> EllipticResidual {
    let n = grid.n;
    let h2 = 1.0 / (grid.dx * grid.dx);
    let mut interior = 0.0f64;
    for j in 1..n {
        let lap = (q[j + 1] - 2.0 * q[j] + q[j - 1]) * h2;
        let r = -lap + params.omega * q[j] - q[j].abs().powf(params.p - 1.0) * q[j];
        interior = interior.max(r.abs());
    }
    let dq0 = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * grid.dx);
    EllipticResidual { interior, robin_defect: (2.0 * dq0 + params.gamma * q[0]).abs() }
}
