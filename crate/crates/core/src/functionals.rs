//! Conserved and variational functionals, the localized virial, and a
//! generator for data on the mass-energy threshold manifold.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::EvenField;
use crate::grid::HalfLineGrid;
use crate::groundstate::GroundState;
use crate::norms::{self, abs_pow_from_sq};
use crate::params::ModelParams;

/// Relative tolerance on mass and energy for the threshold identities.
pub const ME_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
    pub k_gamma: f64,
    pub nehari: f64,
    pub mu: f64,
}

/// Quadratic and nonlinear pieces shared by every functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pieces {
    /// ||u'||^2
    pub grad: f64,
    /// |u(0)|^2
    pub point: f64,
    /// ||u||^2
    pub mass: f64,
    /// ||u||_{p+1}^{p+1}
    pub lp1: f64,
}

impl Pieces {
    pub fn of(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> Self {
        Self {
            grad: norms::grad_sq(grid, u),
            point: u.values[0].norm_sqr(),
            mass: norms::mass(grid, u),
            lp1: norms::lp_pow(grid, u, params.p + 1.0),
        }
    }

    pub fn h1_gamma(&self, params: &ModelParams) -> f64 {
        self.grad - params.gamma * self.point
    }

    pub fn energy(&self, params: &ModelParams) -> f64 {
        0.5 * self.h1_gamma(params) - self.lp1 / (params.p + 1.0)
    }

    pub fn k_alpha_beta(&self, params: &ModelParams, alpha: f64, beta: f64) -> f64 {
        let p = params.p;
        (2.0 * alpha + beta) / 2.0 * self.grad - alpha * params.gamma * self.point
            + params.omega * (2.0 * alpha - beta) / 2.0 * self.mass
            - ((p + 1.0) * alpha - beta) / (p + 1.0) * self.lp1
    }
}

pub fn energy(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> f64 {
    Pieces::of(grid, params, u).energy(params)
}

pub fn action(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> f64 {
    let pc = Pieces::of(grid, params, u);
    pc.energy(params) + 0.5 * params.omega * pc.mass
}

/// Two-parameter scaling derivative of the action.
pub fn k_alpha_beta(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField, alpha: f64, beta: f64) -> f64 {
    Pieces::of(grid, params, u).k_alpha_beta(params, alpha, beta)
}

/// Virial functional, (alpha, beta) = (1/2, 1).
pub fn k_gamma(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> f64 {
    k_alpha_beta(grid, params, u, 0.5, 1.0)
}

/// Nehari functional, (alpha, beta) = (1, 0).
pub fn nehari(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> f64 {
    k_alpha_beta(grid, params, u, 1.0, 0.0)
}

/// ||Q||^2 - ||u||^2 in the homogeneous delta norm.
pub fn mu(gs: &GroundState, u: &EvenField) -> f64 {
    gs.h1_gamma_sq() - norms::h1_gamma_sq(&gs.grid, &gs.params, u)
}

pub fn report(gs: &GroundState, u: &EvenField) -> Result<FunctionalReport> {
    gs.grid.check_len(u.len())?;
    let params = &gs.params;
    let pc = Pieces::of(&gs.grid, params, u);
    let energy = pc.energy(params);
    Ok(FunctionalReport {
        mass: pc.mass,
        energy,
        action: energy + 0.5 * params.omega * pc.mass,
        k_gamma: pc.k_alpha_beta(params, 0.5, 1.0),
        nehari: pc.k_alpha_beta(params, 1.0, 0.0),
        mu: gs.h1_gamma_sq() - pc.h1_gamma(params),
    })
}

/// K_gamma(u) / mu(u): the largest c with K_gamma >= c mu on this sample when
/// both are positive. None when mu vanishes.
pub fn virial_mu_ratio(gs: &GroundState, u: &EvenField) -> Option<f64> {
    let r = report(gs, u).ok()?;
    (r.mu != 0.0).then(|| r.k_gamma / r.mu)
}

/// Relative mass and energy defects against the ground state.
pub fn threshold_defects(gs: &GroundState, u: &EvenField) -> (f64, f64) {
    let pc = Pieces::of(&gs.grid, &gs.params, u);
    let dm = (pc.mass - gs.mass).abs() / gs.mass;
    let de = (pc.energy(&gs.params) - gs.energy).abs() / gs.energy.abs().max(f64::MIN_POSITIVE);
    (dm, de)
}

/// Both sides of K_gamma - c mu = K^{1/2 - 2c/(p-1), 1} for data with the mass and energy of Q.
pub fn k_mu_decomposition(gs: &GroundState, u: &EvenField, c: f64) -> Result<(f64, f64)> {
    let p = gs.params.p;
    if !(c > 0.0 && c < (p - 5.0) / 4.0) {
        return Err(Error::InvalidParameter(format!("c must lie in (0, (p-5)/4) (got {c})")));
    }
    let (dm, de) = threshold_defects(gs, u);
    if dm > ME_TOL || de > ME_TOL {
        return Err(Error::NotOnThresholdManifold { mass_defect: dm, energy_defect: de });
    }
    let pc = Pieces::of(&gs.grid, &gs.params, u);
    let lhs = pc.k_alpha_beta(&gs.params, 0.5, 1.0) - c * (gs.h1_gamma_sq() - pc.h1_gamma(&gs.params));
    let rhs = pc.k_alpha_beta(&gs.params, 0.5 - 2.0 * c / (p - 1.0), 1.0);
    Ok((lhs, rhs))
}

/// The combination ((p-1)a - 2b)/2 ||f'||^2 - gamma ((p-1)a - b)/2 |f(0)|^2.
///
/// On the threshold manifold K^{a,b}(u) - K^{a,b}(Q) equals its value at Q minus its value at u.
pub fn threshold_bracket(grid: &HalfLineGrid, params: &ModelParams, f: &EvenField, alpha: f64, beta: f64) -> f64 {
    let p = params.p;
    let pc = Pieces::of(grid, params, f);
    ((p - 1.0) * alpha - 2.0 * beta) / 2.0 * pc.grad - params.gamma * ((p - 1.0) * alpha - beta) / 2.0 * pc.point
}

/// Smooth even cutoff: phi(x) = x^2 on |x| <= 1, 0 on |x| >= 2, quintic blend between.
///
/// Returns (phi, phi', phi'', phi''') at x >= 0. The blend is C^2, so phi''' jumps
/// at 1 and 2 and the fourth-derivative term is only used in weak form.
pub fn cutoff(x: f64) -> [f64; 4] {
    let r = x.abs();
    if r <= 1.0 {
        return [r * r, 2.0 * r, 2.0, 0.0];
    }
    if r >= 2.0 {
        return [0.0; 4];
    }
    let t = r - 1.0;
    let s = 1.0 - (10.0 * t.powi(3) - 15.0 * t.powi(4) + 6.0 * t.powi(5));
    let s1 = -(30.0 * t * t - 60.0 * t.powi(3) + 30.0 * t.powi(4));
    let s2 = -(60.0 * t - 180.0 * t * t + 120.0 * t.powi(3));
    let s3 = -(60.0 - 360.0 * t + 360.0 * t * t);
    let phi = r * r * s;
    let d1 = 2.0 * r * s + r * r * s1;
    let d2 = 2.0 * s + 4.0 * r * s1 + r * r * s2;
    let d3 = 6.0 * s1 + 6.0 * r * s2 + r * r * s3;
    [phi, d1, d2, d3]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialReport {
    pub r: f64,
    pub j_r: f64,
    pub dj_r: f64,
    pub f_r: f64,
    pub a_r: f64,
}

/// Localized variance R^2 phi(x/R)|u|^2, its time derivative, and the second-derivative
/// functional F_R = A_R + 8 K_gamma.
pub fn localized_virial(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField, r: f64) -> Result<VirialReport> {
    grid.check_len(u.len())?;
    if !(r > 0.0) || 2.0 * r >= grid.l {
        return Err(Error::CutoffExceedsDomain { two_r: 2.0 * r, l: grid.l });
    }
    let p = params.p;
    let dx = grid.dx;
    let (mut j_r, mut nonlin) = (0.0, 0.0);
    for j in 0..=grid.n {
        let c = cutoff(grid.x(j) / r);
        let w = grid.weight(j);
        let m2 = u.values[j].norm_sqr();
        j_r += w * r * r * c[0] * m2;
        nonlin += w * (c[2] - 2.0) * abs_pow_from_sq(m2, p + 1.0);
    }
    // -int a''''|u|^2 = int a''' (|u|^2)', evaluated edge by edge
    let (mut grad_w, mut third, mut momentum) = (0.0, 0.0, 0.0);
    for j in 0..grid.n {
        let mid = (grid.x(j) + 0.5 * dx) / r;
        let c = cutoff(mid);
        let du = u.values[j + 1] - u.values[j];
        grad_w += 2.0 * (c[2] - 2.0) * du.norm_sqr() / dx;
        third += 2.0 * c[3] / r * (u.values[j + 1].norm_sqr() - u.values[j].norm_sqr());
        let ubar = 0.5 * (u.values[j + 1] + u.values[j]).conj();
        momentum += 2.0 * dx * r * c[1] * (ubar * du / dx).im;
    }
    // the point term carries phi''(0) - 2 = 0
    let a_r = 4.0 * grad_w + third - 2.0 * (p - 1.0) / (p + 1.0) * nonlin;
    let f_r = a_r + 8.0 * k_gamma(grid, params, u);
    Ok(VirialReport { r, j_r, dj_r: 2.0 * momentum, f_r, a_r })
}

/// Default cutoff radius min(10, L/3).
pub fn default_cutoff_radius(grid: &HalfLineGrid) -> f64 {
    10f64.min(grid.l / 3.0)
}

/// Catmull-Rom sample of an even field at x >= 0, zero beyond the last node.
pub fn sample_even(grid: &HalfLineGrid, f: &EvenField, x: f64) -> Complex64 {
    let s = x.abs() / grid.dx;
    let k = s.floor() as isize;
    let t = s - k as f64;
    let n = grid.n as isize;
    let at = |i: isize| -> Complex64 {
        let i = i.abs();
        if i > n {
            Complex64::new(0.0, 0.0)
        } else {
            f.values[i as usize]
        }
    };
    if k > n {
        return Complex64::new(0.0, 0.0);
    }
    let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

/// Output of the threshold-manifold generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdData {
    pub field: EvenField,
    pub lambda: f64,
    pub sigma: f64,
    pub k_gamma: f64,
    /// False when only the opposite sign of K_gamma could be reached.
    pub sign_attained: bool,
    pub mass_defect: f64,
    pub energy_defect: f64,
}

/// Builds u = lambda (Q + eps d)(sigma x) with the mass and energy of Q.
///
/// For each sigma the mass fixes lambda exactly; the energy condition is then a
/// scalar root in sigma. Along the mass-preserving dilation the energy has a
/// single maximum, K_gamma > 0 to its left and K_gamma < 0 to its right, and
/// `sign` picks the side.
pub fn generate_threshold_data(gs: &GroundState, direction: &EvenField, eps: f64, sign: i32) -> Result<ThresholdData> {
    let grid = &gs.grid;
    let params = &gs.params;
    grid.check_len(direction.len())?;
    let dnorm = norms::mass(grid, direction).sqrt();
    if dnorm == 0.0 || eps == 0.0 {
        return Ok(ThresholdData {
            field: gs.profile.clone(),
            lambda: 1.0,
            sigma: 1.0,
            k_gamma: k_gamma(grid, params, &gs.profile),
            sign_attained: true,
            mass_defect: 0.0,
            energy_defect: 0.0,
        });
    }
    let mut base = gs.profile.clone();
    base.axpy(Complex64::new(eps, 0.0), direction);

    let build = |sigma: f64| -> (EvenField, f64) {
        let g = if sigma == 1.0 {
            base.clone()
        } else {
            EvenField { values: (0..=grid.n).map(|j| sample_even(grid, &base, sigma * grid.x(j))).collect() }
        };
        let lam = (gs.mass / norms::mass(grid, &g)).sqrt();
        (g.scale_re(lam), lam)
    };
    let defect = |sigma: f64| -> f64 { energy(grid, params, &build(sigma).0) - gs.energy };

    let logs: Vec<f64> = (0..=280).map(|k| -0.7 + 0.005 * k as f64).collect();
    let vals: Vec<f64> = logs.iter().map(|&l| defect(l.exp())).collect();
    let imax = vals.iter().enumerate().fold(0, |best, (i, v)| if *v > vals[best] { i } else { best });
    let find_bracket = |left: bool| -> Option<(f64, f64)> {
        if left {
            (1..=imax).rev().find(|&i| vals[i - 1] <= 0.0 && vals[i] >= 0.0).map(|i| (logs[i - 1], logs[i]))
        } else {
            (imax..vals.len() - 1).find(|&i| vals[i] >= 0.0 && vals[i + 1] <= 0.0).map(|i| (logs[i], logs[i + 1]))
        }
    };
    let want_left = sign >= 0;
    let (bracket, sign_attained) = match find_bracket(want_left) {
        Some(b) => (b, true),
        None => match find_bracket(!want_left) {
            Some(b) => (b, false),
            None => {
                return Err(Error::NewtonFailed(format!(
                    "no dilation reaches the threshold energy (max defect {:.3e})",
                    vals[imax]
                )))
            }
        },
    };

    // safeguarded secant (Illinois) on log sigma
    let (mut a, mut b) = bracket;
    let (mut fa, mut fb) = (defect(a.exp()), defect(b.exp()));
    let tol = 1e-13 * gs.energy.abs();
    let mut root = None;
    for _ in 0..50 {
        let c = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        let c = if c <= a.min(b) || c >= a.max(b) { 0.5 * (a + b) } else { c };
        let fc = defect(c.exp());
        if fc.abs() <= tol || (b - a).abs() < 1e-15 {
            root = Some(c);
            break;
        }
        if (fc > 0.0) == (fb > 0.0) {
            fa *= 0.5;
        } else {
            a = b;
            fa = fb;
        }
        b = c;
        fb = fc;
    }
    let Some(root) = root else {
        return Err(Error::NewtonFailed("threshold solve did not converge in 50 iterations".into()));
    };
    let sigma = root.exp();
    let (field, lambda) = build(sigma);
    let k = k_gamma(grid, params, &field);
    let (mass_defect, energy_defect) = threshold_defects(gs, &field);
    let sign_attained = sign_attained && (sign == 0 || (k > 0.0) == (sign > 0));
    Ok(ThresholdData { field, lambda, sigma, k_gamma: k, sign_attained, mass_defect, energy_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::groundstate::{discrete_ground_state, ground_state};
    use approx::assert_relative_eq;

    fn setup(n: usize) -> GroundState {
        let p = ModelParams::new(-1.0, 7.0, 1.0).unwrap();
        discrete_ground_state(&p, &make_grid(&p, 30.0, n).unwrap()).unwrap()
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        for &x in &[0.5, 1.2, 1.5, 1.9] {
            let h = 1e-4;
            let c = cutoff(x);
            let d1 = (cutoff(x + h)[0] - cutoff(x - h)[0]) / (2.0 * h);
            let d2 = (cutoff(x + h)[1] - cutoff(x - h)[1]) / (2.0 * h);
            let d3 = (cutoff(x + h)[2] - cutoff(x - h)[2]) / (2.0 * h);
            assert_relative_eq!(c[1], d1, epsilon = 1e-6);
            assert_relative_eq!(c[2], d2, epsilon = 1e-5);
            assert_relative_eq!(c[3], d3, epsilon = 1e-4);
        }
        assert_eq!(cutoff(2.5), [0.0; 4]);
    }

    #[test]
    fn discrete_ground_state_is_critical() {
        let gs = setup(3000);
        let scale = gs.h1_omega_gamma_sq();
        // Nehari vanishes to roundoff on the discrete profile; the dilation part is O(dx^2)
        assert!(nehari(&gs.grid, &gs.params, &gs.profile).abs() < 1e-12 * scale);
        for &(a, b) in &[(0.5, 1.0), (1.0, 2.0), (0.3, -0.4)] {
            assert!(k_alpha_beta(&gs.grid, &gs.params, &gs.profile, a, b).abs() < 1e-4 * scale);
        }
        let r = report(&gs, &gs.profile).unwrap();
        assert!(r.mu.abs() < 1e-12);
        assert_relative_eq!(r.action, r.energy + 0.5 * r.mass, max_relative = 1e-15);
    }

    #[test]
    fn doubled_ground_state_has_negative_virial() {
        let gs = setup(1500);
        let u = gs.profile.scale_re(2.0);
        assert!(k_gamma(&gs.grid, &gs.params, &u) < 0.0);
    }

    #[test]
    fn virial_vanishes_on_rotated_ground_state() {
        let mut prev: Option<(f64, f64)> = None;
        for n in [1500, 3000, 6000] {
            let gs = setup(n);
            let u = gs.profile.scale(Complex64::from_polar(1.0, 0.7));
            let v = localized_virial(&gs.grid, &gs.params, &u, 8.0).unwrap();
            let scale = gs.h1_omega_gamma_sq();
            assert!(v.f_r.abs() < 1e-3 * scale && v.a_r.abs() < 1e-3 * scale, "{v:?}");
            assert!(v.dj_r.abs() < 1e-12);
            if let Some((f, a)) = prev {
                assert!(f / v.f_r.abs() > 3.5, "F_R ratio {}", f / v.f_r.abs());
                assert!(a / v.a_r.abs() > 3.5, "A_R ratio {}", a / v.a_r.abs());
            }
            prev = Some((v.f_r.abs(), v.a_r.abs()));
            assert!(localized_virial(&gs.grid, &gs.params, &u, 15.0).is_err());
        }
    }

    #[test]
    fn zero_direction_returns_ground_state() {
        let gs = setup(1500);
        let d = EvenField::zeros(gs.grid.len());
        let t = generate_threshold_data(&gs, &d, 0.05, -1).unwrap();
        assert_eq!(t.field, gs.profile);
        assert_eq!((t.lambda, t.sigma), (1.0, 1.0));
    }

    #[test]
    fn threshold_generator_hits_both_signs() {
        let gs = setup(1500);
        let grid = gs.grid;
        let d = EvenField::from_fn(&grid, |x| Complex64::new((-x * x).exp() * (1.0 - x), 0.2 * (-x).exp()));
        for sign in [-1, 1] {
            let t = generate_threshold_data(&gs, &d, 0.1, sign).unwrap();
            assert!(t.mass_defect < 1e-10 && t.energy_defect < 1e-10, "{t:?}");
            assert!(t.sign_attained);
            assert_eq!(t.k_gamma > 0.0, sign > 0);
        }
        let cf = ground_state(&gs.params, &grid).unwrap();
        assert!(k_mu_decomposition(&gs, &cf.profile.scale_re(1.1), 0.25).is_err());
    }
}
