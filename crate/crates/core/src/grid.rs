use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Largest admissible exp(-sqrt(omega) L).
pub const TRUNCATION_TOL: f64 = 1e-10;

/// Uniform half-line grid x_j = j dx, j = 0..=N.
///
/// Node 0 carries the Robin condition u'(0+) = robin * u(0); node N is a
/// homogeneous Dirichlet node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineGrid {
    pub l: f64,
    pub n: usize,
    pub dx: f64,
    pub robin: f64,
}

/// Builds a grid after checking that states decaying like exp(-sqrt(omega) x)
/// are negligible at x = L.
pub fn make_grid(params: &ModelParams, l: f64, n: usize) -> Result<HalfLineGrid> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidParameter(format!("L must be positive (got {l})")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter(format!("N must be at least 16 (got {n})")));
    }
    if !(params.omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive (got {})", params.omega)));
    }
    let decay = (-params.omega.sqrt() * l).exp();
    if decay >= TRUNCATION_TOL {
        return Err(Error::DomainTooSmall { decay, tol: TRUNCATION_TOL });
    }
    Ok(HalfLineGrid { l, n, dx: l / n as f64, robin: params.robin_coefficient() })
}

impl HalfLineGrid {
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.x(j)).collect()
    }

    /// Quadrature weight of node j for full-line integrals of even integrands.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n {
            self.dx
        } else {
            2.0 * self.dx
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.weight(j)).collect()
    }

    /// Same node count and spacing.
    pub fn compatible(&self, other: &HalfLineGrid) -> bool {
        self.n == other.n && (self.dx - other.dx).abs() <= 1e-14 * self.dx
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!("field has {len} samples, grid has {}", self.len())));
        }
        Ok(())
    }
}

/// Full-line integral of an even integrand sampled on the grid: twice the
/// half-line trapezoid value.
pub fn integrate(grid: &HalfLineGrid, f: &[f64]) -> f64 {
    debug_assert_eq!(f.len(), grid.len());
    let n = grid.n;
    let inner: f64 = f[1..n].iter().sum();
    grid.dx * (f[0] + f[n] + 2.0 * inner)
}

/// Integral of an integrand given as a closure of the node index.
pub fn integrate_with(grid: &HalfLineGrid, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..=grid.n {
        acc += grid.weight(j) * f(j);
    }
    acc
}
