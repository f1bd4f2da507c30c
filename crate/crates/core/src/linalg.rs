//! Small dense/banded kernels: banded LU with partial pivoting, tridiagonal
//! operators, Gauss-Legendre rules, line fits and finite-difference weights.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field scalar usable by the banded solver.
pub trait Scalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// LU factors of a banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored over columns `i-kl ..= i+kl+ku` so that pivoting fill fits.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<T>,
    lower: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    /// Factors the matrix whose entry (i, j) is `entry(i, j)` for |i-j| in band.
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> T) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut rows = vec![T::zero(); n * width];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                rows[i * width + j + kl - i] = entry(i, j);
            }
        }
        let mut lu = Self { n, kl, ku, width, rows, lower: vec![T::zero(); n * kl.max(1)], piv: vec![0; n] };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut scale = 0.0f64;
        for v in &self.rows {
            scale = scale.max(v.modulus());
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.rows[self.at(k, k)].modulus();
            for i in k + 1..=last {
                let m = self.rows[self.at(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if !(best > scale * 1e-300) || !best.is_finite() {
                return Err(Error::SolveFailed(format!("singular banded matrix at row {k}")));
            }
            self.piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.rows.swap(a, b);
                }
            }
            let pivot = self.rows[self.at(k, k)];
            for i in k + 1..=last {
                let m = self.rows[self.at(i, k)] / pivot;
                self.lower[k * kl + (i - k - 1)] = m;
                let ik = self.at(i, k);
                self.rows[ik] = T::zero();
                if m == T::zero() {
                    continue;
                }
                for j in k + 1..=jmax {
                    let (a, b) = (self.at(i, j), self.at(k, j));
                    let upd = self.rows[b] * m;
                    self.rows[a] = self.rows[a] - upd;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] = b[i] - bk * self.lower[k * kl + (i - k - 1)];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s = s - self.rows[self.at(i, j)] * b[j];
            }
            b[i] = s / self.rows[self.at(i, i)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Real tridiagonal matrix; `lower[i]` is entry (i+1, i), `upper[i]` is (i, i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[j]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Copy with `shift` added to the diagonal.
    pub fn shifted(&self, shift: f64) -> Tridiag {
        Tridiag {
            lower: self.lower.clone(),
            diag: self.diag.iter().map(|d| d + shift).collect(),
            upper: self.upper.clone(),
        }
    }

    pub fn factor(&self) -> Result<BandedLu<f64>> {
        BandedLu::factor(self.dim(), 1, 1, |i, j| self.entry(i, j))
    }

    /// Pentadiagonal factors of `self * other + shift * I`.
    pub fn factor_product_shifted(&self, other: &Tridiag, shift: f64) -> Result<BandedLu<f64>> {
        let n = self.dim();
        BandedLu::factor(n, 2, 2, |i, j| {
            let lo = i.saturating_sub(1).max(j.saturating_sub(1));
            let hi = (i + 1).min(j + 1).min(n - 1);
            let mut s = if i == j { shift } else { 0.0 };
            for k in lo..=hi {
                s += self.entry(i, k) * other.entry(k, j);
            }
            s
        })
    }

    /// Dense copy, for small validation problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            s += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Least-squares line y = slope * x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x[..n].iter().zip(&y[..n]).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / nf).sqrt();
    Ok(LineFit { slope, intercept, rms })
}

/// Weights c_k with f'(x0) ~ sum c_k f(xs[k]) from the interpolating polynomial.
pub fn lagrange_derivative_weights(xs: &[f64], x0: f64) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![0.0; n];
    for k in 0..n {
        let mut denom = 1.0;
        for m in 0..n {
            if m != k {
                denom *= xs[k] - xs[m];
            }
        }
        // derivative of prod_{m != k} (x - xs[m]) at x0
        let mut num = 0.0;
        for l in 0..n {
            if l == k {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != k && m != l {
                    prod *= x0 - xs[m];
                }
            }
            num += prod;
        }
        c[k] = num / denom;
    }
    c
}

/// Derivative of sampled data at every point using a sliding stencil of `width` points.
pub fn sampled_derivative(xs: &[f64], ys: &[f64], width: usize) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < width || width < 2 {
        return Err(Error::InsufficientPoints { needed: width.max(2), got: n });
    }
    let half = width / 2;
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            let stencil = &xs[start..start + width];
            let w = lagrange_derivative_weights(stencil, xs[i]);
            w.iter().zip(&ys[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Geometric sequence of `n` points from a to b inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / (n - 1) as f64;
    (0..n).map(|k| a * (r * k as f64).exp()).collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
