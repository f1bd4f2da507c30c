//! Discrete inner products and norms.
//!
//! The gradient term is the edge-difference sum `sum 2|u_{j+1}-u_j|^2/dx`,
//! which is exactly the weighted quadratic form of the Robin stencil; the
//! point term at node 0 carries the delta.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::EvenField;
use crate::grid::HalfLineGrid;
use crate::params::ModelParams;

/// |z|^q from |z|^2, with a fast path for even integer q.
#[inline]
pub fn abs_pow_from_sq(norm_sq: f64, q: f64) -> f64 {
    let half = 0.5 * q;
    if half.fract() == 0.0 && half.abs() <= 16.0 {
        norm_sq.powi(half as i32)
    } else if norm_sq == 0.0 {
        0.0
    } else {
        (half * norm_sq.ln()).exp()
    }
}

/// Positive real x^q via exp/log, integer fast path.
#[inline]
pub fn pos_pow(x: f64, q: f64) -> f64 {
    if q.fract() == 0.0 && q.abs() <= 32.0 {
        x.powi(q as i32)
    } else if x <= 0.0 {
        0.0
    } else {
        (q * x.ln()).exp()
    }
}

fn check(grid: &HalfLineGrid, u: &EvenField) -> Result<()> {
    grid.check_len(u.len())
}

/// Re of the full-line L^2 product.
pub fn l2_inner(grid: &HalfLineGrid, u: &EvenField, v: &EvenField) -> f64 {
    let mut acc = 0.0;
    for j in 0..=grid.n {
        let (a, b) = (u.values[j], v.values[j]);
        acc += grid.weight(j) * (a.re * b.re + a.im * b.im);
    }
    acc
}

/// Complex full-line product of u with conj(v).
pub fn l2_inner_complex(grid: &HalfLineGrid, u: &EvenField, v: &EvenField) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=grid.n {
        acc += grid.weight(j) * u.values[j] * v.values[j].conj();
    }
    acc
}

pub fn mass(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    let mut acc = 0.0;
    for j in 0..=grid.n {
        acc += grid.weight(j) * u.values[j].norm_sqr();
    }
    acc
}

/// Re of the gradient product, full line.
pub fn grad_inner(grid: &HalfLineGrid, u: &EvenField, v: &EvenField) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.n {
        let du = u.values[j + 1] - u.values[j];
        let dv = v.values[j + 1] - v.values[j];
        acc += du.re * dv.re + du.im * dv.im;
    }
    2.0 * acc / grid.dx
}

/// ||u'||^2 over the line.
pub fn grad_sq(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.n {
        acc += (u.values[j + 1] - u.values[j]).norm_sqr();
    }
    2.0 * acc / grid.dx
}

/// Full-line integral of |u|^q.
pub fn lp_pow(grid: &HalfLineGrid, u: &EvenField, q: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..=grid.n {
        acc += grid.weight(j) * abs_pow_from_sq(u.values[j].norm_sqr(), q);
    }
    acc
}

/// (u,v) in the homogeneous delta-Sobolev product: Re int u'conj(v') - gamma Re u(0)conj(v(0)).
pub fn h1_gamma_quadratic(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField, v: &EvenField) -> Result<f64> {
    check(grid, u)?;
    check(grid, v)?;
    let (a, b) = (u.values[0], v.values[0]);
    Ok(grad_inner(grid, u, v) - params.gamma * (a.re * b.re + a.im * b.im))
}

/// Same with the omega-weighted L^2 term added.
pub fn h1_omega_gamma_quadratic(
    grid: &HalfLineGrid,
    params: &ModelParams,
    u: &EvenField,
    v: &EvenField,
) -> Result<f64> {
    Ok(h1_gamma_quadratic(grid, params, u, v)? + params.omega * l2_inner(grid, u, v))
}

/// ||u||^2 in the homogeneous delta norm.
pub fn h1_gamma_sq(grid: &HalfLineGrid, params: &ModelParams, u: &EvenField) -> f64 {
    grad_sq(grid, u) - params.gamma * u.values[0].norm_sqr()
}

/// Plain H^1 norm: sqrt(||u'||^2 + ||u||^2).
pub fn h1_norm(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    (grad_sq(grid, u) + mass(grid, u)).sqrt()
}

/// Weighted operator action of the Robin Laplacian on real samples, Dirichlet at node N.
pub fn apply_laplacian_real(grid: &HalfLineGrid, gamma: f64, u: &[f64], out: &mut [f64]) {
    let n = grid.n;
    let h2 = 1.0 / (grid.dx * grid.dx);
    out[0] = 2.0 * (u[1] - u[0]) * h2 + gamma / grid.dx * u[0];
    for j in 1..n {
        let right = if j + 1 < n { u[j + 1] } else { 0.0 };
        out[j] = (right - 2.0 * u[j] + u[j - 1]) * h2;
    }
    out[n] = 0.0;
}
