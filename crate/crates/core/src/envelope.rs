//! Threshold curves of mass and energy as functions of the frequency, computed
//! from sech-power integrals of the closed-form profile (no grid).

use crate::error::{Error, Result};
use crate::linalg::{fit_line, gauss_legendre, geomspace, integrate_gl, sampled_derivative, LineFit};
use crate::params::ModelParams;

/// J(a, z) = integral of sech(y)^a over [z, inf).
pub fn sech_power_tail(a: f64, z: f64) -> f64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(16);
    }
    let f = |y: f64| {
        let e = (-2.0 * y.abs()).exp();
        (2.0 * (-y.abs()).exp() / (1.0 + e)).powf(a)
    };
    let top = z.max(0.0) + 40.0 / a;
    let panels = ((top - z) / 0.75).ceil().max(4.0) as usize;
    let body = RULE.with(|rule| integrate_gl(f, z, top, panels, rule));
    // sech^a ~ 2^a e^{-a y} beyond `top`
    body + 2f64.powf(a) * (-a * top).exp() / a
}

/// Full-line integrals of Q_{omega,gamma} from the closed form, gamma <= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileIntegrals {
    pub mass: f64,
    /// ||Q'||^2
    pub grad_sq: f64,
    /// ||Q||_{p+1}^{p+1}
    pub lp1: f64,
    /// Q(0)^2
    pub q0_sq: f64,
    pub energy: f64,
    pub action: f64,
}

pub fn profile_integrals(gamma: f64, p: f64, omega: f64) -> Result<ProfileIntegrals> {
    if !(gamma <= 0.0) || !(p > 1.0) || !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "profile integrals need gamma <= 0, p > 1, omega > 0 (got {gamma}, {p}, {omega})"
        )));
    }
    let r = gamma / (2.0 * omega.sqrt());
    if r <= -1.0 {
        return Err(Error::NoGroundState { omega, threshold: 0.25 * gamma * gamma });
    }
    let z = r.atanh();
    let amp2 = (0.5 * (p + 1.0) * omega).powf(2.0 / (p - 1.0));
    let b = 0.5 * (p - 1.0) * omega.sqrt();
    let a = 4.0 / (p - 1.0);
    let c = 2.0 / (p - 1.0);
    let ja = sech_power_tail(a, z);
    let mass = 2.0 * amp2 / b * ja;
    let grad_sq = 2.0 * amp2 * c * c * b * (ja - sech_power_tail(a + 2.0, z));
    let lp1 = 2.0 * amp2.powf(0.5 * (p + 1.0)) / b * sech_power_tail(2.0 * (p + 1.0) / (p - 1.0), z);
    let q0_sq = amp2 * (1.0 / z.cosh()).powf(a);
    let energy = 0.5 * grad_sq - 0.5 * gamma * q0_sq - lp1 / (p + 1.0);
    Ok(ProfileIntegrals { mass, grad_sq, lp1, q0_sq, energy, action: energy + 0.5 * omega * mass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// omega > gamma^2/4: the delta ground state.
    High,
    /// omega <= gamma^2/4: two copies of the free profile.
    Low,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::High => "high",
            Branch::Low => "low",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub omega: f64,
    pub mass: f64,
    pub energy: f64,
    /// Threshold action r at this omega.
    pub action: f64,
    pub branch: Branch,
}

pub fn envelope_point(params: &ModelParams, omega: f64) -> Result<EnvelopePoint> {
    let (gamma, p) = (params.gamma, params.p);
    if omega > 0.25 * gamma * gamma {
        let q = profile_integrals(gamma, p, omega)?;
        Ok(EnvelopePoint { omega, mass: q.mass, energy: q.energy, action: q.action, branch: Branch::High })
    } else {
        let q = profile_integrals(0.0, p, omega)?;
        Ok(EnvelopePoint {
            omega,
            mass: 2.0 * q.mass,
            energy: 2.0 * q.energy,
            action: 2.0 * q.action,
            branch: Branch::Low,
        })
    }
}

pub fn curve(params: &ModelParams, omegas: &[f64]) -> Result<Vec<EnvelopePoint>> {
    if omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter("omega grid must be positive".into()));
    }
    omegas.iter().map(|&w| envelope_point(params, w)).collect()
}

/// 2 S_{omega,0}(Q_{omega,0}) - S_{omega,gamma}(Q_{omega,gamma}) on the high branch.
pub fn deficit(params: &ModelParams, omega: f64) -> Result<f64> {
    let free = profile_integrals(0.0, params.p, omega)?;
    let bound = profile_integrals(params.gamma, params.p, omega)?;
    Ok(2.0 * free.action - bound.action)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyReport {
    /// (omega, dE/dM, -omega/2) at interior points.
    pub slopes: Vec<(f64, f64, f64)>,
    pub max_rel_err: f64,
    /// Smallest increment of successive chord slopes of E against M, points sorted by M.
    pub min_slope_increment: f64,
    /// Largest |M/2 - dr/domega| relative to M/2 at interior points.
    pub max_dfdw: f64,
}

/// Compares dE/dM with -omega/2 and checks convexity of E against M, per branch.
pub fn tangency_and_convexity(points: &[EnvelopePoint]) -> Result<TangencyReport> {
    let mut slopes = Vec::new();
    let mut max_rel_err = 0.0f64;
    let mut max_dfdw = 0.0f64;
    let mut min_inc = f64::INFINITY;
    for branch in [Branch::High, Branch::Low] {
        let mut pts: Vec<EnvelopePoint> = points.iter().cloned().filter(|p| p.branch == branch).collect();
        if pts.is_empty() {
            continue;
        }
        if pts.len() < 5 {
            return Err(Error::InsufficientPoints { needed: 5, got: pts.len() });
        }
        pts.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let w: Vec<f64> = pts.iter().map(|p| p.omega).collect();
        let m: Vec<f64> = pts.iter().map(|p| p.mass).collect();
        let e: Vec<f64> = pts.iter().map(|p| p.energy).collect();
        let r: Vec<f64> = pts.iter().map(|p| p.action).collect();
        let dm = sampled_derivative(&w, &m, 5)?;
        let de = sampled_derivative(&w, &e, 5)?;
        let dr = sampled_derivative(&w, &r, 5)?;
        for i in 2..pts.len() - 2 {
            let slope = de[i] / dm[i];
            let target = -0.5 * w[i];
            max_rel_err = max_rel_err.max(((slope - target) / target).abs());
            max_dfdw = max_dfdw.max(((0.5 * m[i] - dr[i]) / (0.5 * m[i])).abs());
            slopes.push((w[i], slope, target));
        }
        pts.sort_by(|a, b| a.mass.total_cmp(&b.mass));
        let chords: Vec<f64> = pts.windows(2).map(|p| (p[1].energy - p[0].energy) / (p[1].mass - p[0].mass)).collect();
        for c in chords.windows(2) {
            min_inc = min_inc.min(c[1] - c[0]);
        }
    }
    if slopes.is_empty() {
        return Err(Error::InsufficientPoints { needed: 5, got: points.len() });
    }
    Ok(TangencyReport { slopes, max_rel_err, min_slope_increment: min_inc, max_dfdw })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinkFit {
    pub exponent: f64,
    pub target: f64,
    /// (4 omega - gamma^2, difference quotient)
    pub quotients: Vec<(f64, f64)>,
    pub fit: LineFit,
}

/// Difference quotient of the rescaled mass omega -> M(Q_{1, gamma/sqrt(omega)}) at
/// the kink omega = gamma^2/4, fitted as a power of 4 omega - gamma^2.
pub fn kink_exponent(params: &ModelParams) -> Result<KinkFit> {
    let (gamma, p) = (params.gamma, params.p);
    let g = gamma.abs();
    let a = 4.0 / (p - 1.0);
    let amp2 = (0.5 * (p + 1.0)).powf(2.0 / (p - 1.0));
    let b = 0.5 * (p - 1.0);
    let xs = geomspace(1e-6, 1e-2, 10);
    let mut quotients = Vec::with_capacity(xs.len());
    for &x in &xs {
        let s = (g * g + x).sqrt();
        // 1 - g/s and 1 + g/s without cancellation
        let one_minus = x / (s * (s + g));
        let one_plus = 1.0 + g / s;
        let depth = 0.5 * (one_plus / one_minus).ln();
        // M(Q_{1,-2}) - M(Q_{1,gamma/sqrt(omega)}) = 2 amp^2/b * J(a, depth)
        let tail = sech_power_tail(a, depth);
        if !(tail > 0.0) {
            return Err(Error::SolveFailed(format!("kink tail integral underflows at 4w - g^2 = {x:e}")));
        }
        let q = -2.0 * amp2 / b * tail / (0.25 * x);
        quotients.push((x, q));
    }
    let lx: Vec<f64> = quotients.iter().map(|v| v.0.ln()).collect();
    let ly: Vec<f64> = quotients.iter().map(|v| v.1.abs().ln()).collect();
    let fit = fit_line(&lx, &ly)?;
    Ok(KinkFit { exponent: fit.slope, target: 2.0 / (p - 1.0) - 1.0, quotients, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sech_tail_closed_forms() {
        // int_0^inf sech^2 = 1, int_z^inf sech^2 = 1 - tanh z
        for z in [-3.0, -0.4, 0.0, 1.3] {
            let j = sech_power_tail(2.0, z);
            assert!((j - (1.0 - f64::tanh(z))).abs() < 1e-13, "z={z}");
        }
        // int_R sech = pi
        assert!((sech_power_tail(1.0, -60.0) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn free_profile_scaling() {
        // M(Q_{w,0}) = w^{-(p-5)/(2(p-1))} M(Q_{1,0})
        let p = 7.0;
        let m1 = profile_integrals(0.0, p, 1.0).unwrap().mass;
        for w in [0.1, 0.7, 3.0] {
            let mw = profile_integrals(0.0, p, w).unwrap().mass;
            assert!((mw / m1 - w.powf(-(p - 5.0) / (2.0 * (p - 1.0)))).abs() < 1e-13);
        }
    }

    #[test]
    fn free_profile_is_nehari_critical() {
        // Nehari: ||Q'||^2 + w M = P on the free profile
        let q = profile_integrals(0.0, 9.0, 1.7).unwrap();
        assert!((q.grad_sq + 1.7 * q.mass - q.lp1).abs() < 1e-12 * q.lp1);
    }
}
