//! Linearized operators around the ground state, the unstable eigenpair of the
//! block operator, decay and coercivity probes.
//!
//! Real fields on the grid are length N+1 with the Dirichlet entry last; the
//! operators act on the first N entries.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::EvenField;
use crate::grid::{make_grid, HalfLineGrid};
use crate::groundstate::{discrete_ground_state, neg_laplacian, GroundState};
use crate::linalg::{BandedLu, Tridiag};
use crate::norms::{self, pos_pow};
use crate::params::ModelParams;

/// L+ and L- with potentials omega - p Q^(p-1) and omega - Q^(p-1).
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub grid: HalfLineGrid,
    pub params: ModelParams,
    pub lplus: Tridiag,
    pub lminus: Tridiag,
}

pub fn assemble(gs: &GroundState) -> OperatorPair {
    let grid = gs.grid;
    let a = neg_laplacian(&grid, gs.params.gamma);
    let qp = gs.q_pow(gs.params.p - 1.0);
    let p = gs.params.p;
    let w = gs.params.omega;
    let lplus = Tridiag {
        lower: a.lower.clone(),
        diag: (0..grid.n).map(|j| a.diag[j] + w - p * qp[j]).collect(),
        upper: a.upper.clone(),
    };
    let lminus =
        Tridiag { lower: a.lower.clone(), diag: (0..grid.n).map(|j| a.diag[j] + w - qp[j]).collect(), upper: a.upper };
    OperatorPair { grid, params: gs.params, lplus, lminus }
}

/// Weighted inner product of two real node vectors (any common length up to N+1).
pub fn wdot(grid: &HalfLineGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).enumerate().map(|(j, (x, y))| grid.weight(j) * x * y).sum()
}

pub fn wnorm(grid: &HalfLineGrid, a: &[f64]) -> f64 {
    wdot(grid, a, a).sqrt()
}

fn extend(mut v: Vec<f64>) -> Vec<f64> {
    v.push(0.0);
    v
}

impl OperatorPair {
    /// L+ u for a length N+1 field; the Dirichlet entry of the result is 0.
    pub fn apply_plus(&self, u: &[f64]) -> Vec<f64> {
        extend(self.lplus.apply(&u[..self.grid.n]))
    }

    pub fn apply_minus(&self, u: &[f64]) -> Vec<f64> {
        extend(self.lminus.apply(&u[..self.grid.n]))
    }

    /// <L+ u, u> in the weighted product.
    pub fn form_plus(&self, u: &[f64]) -> f64 {
        wdot(&self.grid, &self.apply_plus(u), u)
    }

    pub fn form_minus(&self, u: &[f64]) -> f64 {
        wdot(&self.grid, &self.apply_minus(u), u)
    }
}

/// Interior max-norm of L- Q, the discrete elliptic residual of `q`.
pub fn kernel_residual(ops: &OperatorPair, q: &[f64]) -> f64 {
    let r = ops.apply_minus(q);
    r[1..ops.grid.n].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Smallest eigenvalue of a weight-symmetric tridiagonal operator, by Sturm bisection.
pub fn lowest_eigenvalue(grid: &HalfLineGrid, t: &Tridiag) -> f64 {
    let n = t.dim();
    // symmetrized off-diagonal squared: (W^{1/2} T W^{-1/2})_{i,i+1}^2 = T_{i,i+1} T_{i+1,i}
    let off2: Vec<f64> = (0..n - 1).map(|i| t.upper[i] * t.lower[i]).collect();
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = t.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let prev = if d == 0.0 { 1e-300 } else { d };
            d = t.diag[i] - x - off2[i - 1] / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let radius = (0..n)
        .map(|i| {
            let mut r = 0.0;
            if i > 0 {
                r += off2[i - 1].abs().sqrt();
            }
            if i + 1 < n {
                r += off2[i].abs().sqrt();
            }
            (t.diag[i] - r, t.diag[i] + r)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    let _ = grid;
    let (mut lo, mut hi) = radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves M z + c q = b subject to <q, z>_W = 0.
///
/// When M is singular along q (L- with its kernel), a node-0 shift
/// M + kappa e0 e0^T regularizes the factorization and a 2x2 system restores
/// the original equations.
struct ConstrainedSolver {
    grid: HalfLineGrid,
    lu: BandedLu<f64>,
    q: Vec<f64>,
    xq: Vec<f64>,
    xe: Option<Vec<f64>>,
    kappa: f64,
}

impl ConstrainedSolver {
    fn new(grid: HalfLineGrid, m: &Tridiag, q: &[f64], regularize: bool) -> Result<Self> {
        let n = grid.n;
        let kappa = if regularize { 1.0 / grid.dx } else { 0.0 };
        let mut shifted = m.clone();
        shifted.diag[0] += kappa;
        let lu = shifted.factor()?;
        let q = q[..n].to_vec();
        let xq = lu.solve(&q);
        let xe = if regularize {
            let mut e0 = vec![0.0; n];
            e0[0] = 1.0;
            Some(lu.solve(&e0))
        } else {
            None
        };
        Ok(Self { grid, lu, q, xq, xe, kappa })
    }

    /// Returns z (length N+1, Dirichlet entry 0).
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let xb = self.lu.solve(&b[..n]);
        let g = &self.grid;
        let (c, beta) = match &self.xe {
            None => (wdot(g, &self.q, &xb) / wdot(g, &self.q, &self.xq), 0.0),
            Some(xe) => {
                // beta (1 - kappa xe0) + kappa c xq0 = kappa xb0
                // -c <q,xq> + beta <q,xe> = -<q,xb>
                let a11 = self.kappa * self.xq[0];
                let a12 = 1.0 - self.kappa * xe[0];
                let r1 = self.kappa * xb[0];
                let a21 = -wdot(g, &self.q, &self.xq);
                let a22 = wdot(g, &self.q, xe);
                let r2 = -wdot(g, &self.q, &xb);
                let det = a11 * a22 - a12 * a21;
                ((r1 * a22 - a12 * r2) / det, (a11 * r2 - a21 * r1) / det)
            }
        };
        let mut z: Vec<f64> = (0..n).map(|j| xb[j] - c * self.xq[j]).collect();
        if let Some(xe) = &self.xe {
            for j in 0..n {
                z[j] += beta * xe[j];
            }
        }
        extend(z)
    }
}

fn project_off(grid: &HalfLineGrid, v: &mut [f64], q: &[f64], qq: f64) {
    let c = wdot(grid, v, q) / qq;
    for (a, b) in v.iter_mut().zip(q) {
        *a -= c * b;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSpectrum {
    pub e_omega: f64,
    /// Most negative generalized Rayleigh value, -e_omega^2.
    pub mu1: f64,
    /// Next generalized eigenvalue above mu1.
    pub mu2: f64,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    /// (||L+ Y1 - e Y2||, ||L- Y2 + e Y1||)
    pub residuals: (f64, f64),
    /// (Q, Y1) in the omega-weighted delta product.
    pub pairing: f64,
    /// e_omega from shift-invert on the block operator.
    pub block_e_omega: f64,
    /// Near-real eigenvalues of the block operator (coarse dense pass, with +-e refined).
    pub real_eigenvalues: Vec<f64>,
    pub lanczos_steps: usize,
}

impl LinearizedSpectrum {
    pub fn y_plus(&self) -> EvenField {
        EvenField::from_parts(&self.y1, &self.y2)
    }

    pub fn y1_field(&self) -> EvenField {
        EvenField::from_real(&self.y1)
    }

    pub fn y2_field(&self) -> EvenField {
        EvenField::from_real(&self.y2)
    }
}

/// (mu1, mu2, xi, G xi, Lanczos steps) from the projected route.
type ProjectedPair = (f64, f64, Vec<f64>, Vec<f64>, usize);

/// Generalized problem P L+ P w = mu P (L-)^{-1} P w on the complement of Q,
/// solved by Lanczos on (P L+ P)^{-1} G in the inner product <G ., .>.
fn projected_route(ops: &OperatorPair, q: &[f64], qp: &[f64]) -> Result<ProjectedPair> {
    let grid = ops.grid;
    let n = grid.n;
    let qq = wdot(&grid, q, q);
    let gsolve = ConstrainedSolver::new(grid, &ops.lminus, q, true)?;
    let psolve = ConstrainedSolver::new(grid, &ops.lplus, q, false)?;
    let apply_g = |v: &[f64]| {
        let mut z = gsolve.solve(v);
        project_off(&grid, &mut z, q, qq);
        z
    };

    let mut v0 = qp.to_vec();
    v0[n] = 0.0;
    project_off(&grid, &mut v0, q, qq);
    let mut g0 = apply_g(&v0);
    let nrm = wdot(&grid, &v0, &g0).sqrt();
    v0.iter_mut().for_each(|x| *x /= nrm);
    g0.iter_mut().for_each(|x| *x /= nrm);

    let max_steps = 400.min(n - 2);
    let mut vs = vec![v0];
    let mut gvs = vec![g0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut result = None;
    for k in 0..max_steps {
        let mut w = psolve.solve(&gvs[k]);
        project_off(&grid, &mut w, q, qq);
        let alpha = wdot(&grid, &w, &gvs[k]);
        alphas.push(alpha);
        for _ in 0..2 {
            for j in 0..vs.len() {
                let c = wdot(&grid, &w, &gvs[j]);
                for (a, b) in w.iter_mut().zip(&vs[j]) {
                    *a -= c * b;
                }
            }
        }
        let gw = apply_g(&w);
        let beta = wdot(&grid, &w, &gw).max(0.0).sqrt();

        let m = alphas.len();
        if m >= 8 && (m.is_multiple_of(4) || beta < 1e-300) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alphas[i]
                } else if i + 1 == j {
                    betas[i]
                } else if j + 1 == i {
                    betas[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (imin, &tmin) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
            let tmax = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let resid = (beta * eig.eigenvectors[(m - 1, imin)]).abs();
            if tmin < 0.0 && (resid <= 1e-13 * tmin.abs() || beta < 1e-300) {
                let s: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, imin)]).collect();
                result = Some((tmin, tmax, s, m));
                break;
            }
        }
        if beta < 1e-300 {
            break;
        }
        betas.push(beta);
        vs.push(w.iter().map(|x| x / beta).collect());
        gvs.push(gw.iter().map(|x| x / beta).collect());
    }
    let Some((tmin, tmax, s, m)) = result else {
        return Err(Error::SpectrumFailed("Lanczos did not isolate a negative Rayleigh value".into()));
    };
    let mut xi = vec![0.0; n + 1];
    let mut gxi = vec![0.0; n + 1];
    for i in 0..m {
        for j in 0..=n {
            xi[j] += s[i] * vs[i][j];
            gxi[j] += s[i] * gvs[i][j];
        }
    }
    Ok((1.0 / tmin, 1.0 / tmax, xi, gxi, m))
}

/// Dense eigenvalues of the block operator on a coarse copy of the problem.
pub fn coarse_block_eigenvalues(params: &ModelParams, l: f64) -> Result<Vec<Complex64>> {
    let lc = l.min(24.0 / params.omega.sqrt());
    let grid = make_grid(params, lc, 240)?;
    let gs = discrete_ground_state(params, &grid)?;
    let ops = assemble(&gs);
    let n = grid.n;
    let block = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => -ops.lminus.entry(i, j - n),
        (false, true) => ops.lplus.entry(i - n, j),
        _ => 0.0,
    });
    Ok(block.complex_eigenvalues().iter().cloned().collect())
}

/// Shift-invert iteration on the block operator at full resolution.
pub fn block_shift_invert(ops: &OperatorPair, q: &[f64], sigma: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let grid = ops.grid;
    let n = grid.n;
    let lu = ops.lplus.factor_product_shifted(&ops.lminus, sigma * sigma)?;
    let mut x1: Vec<f64> = q[..n].iter().map(|v| v * v).collect();
    let mut x2: Vec<f64> = q[..n].to_vec();
    let mut lambda = sigma;
    for it in 0..200 {
        let lb1 = ops.lplus.apply(&x1);
        let rhs: Vec<f64> = (0..n).map(|j| -sigma * x2[j] - lb1[j]).collect();
        let y2 = lu.solve(&rhs);
        let ly2 = ops.lminus.apply(&y2);
        let y1: Vec<f64> = (0..n).map(|j| -(x1[j] + ly2[j]) / sigma).collect();
        let xy = wdot(&grid, &x1, &y1) + wdot(&grid, &x2, &y2);
        let xx = wdot(&grid, &x1, &x1) + wdot(&grid, &x2, &x2);
        let next = sigma + xx / xy;
        let nrm = (wdot(&grid, &y1, &y1) + wdot(&grid, &y2, &y2)).sqrt();
        x1 = y1.iter().map(|v| v / nrm).collect();
        x2 = y2.iter().map(|v| v / nrm).collect();
        let done = it > 0 && (next - lambda).abs() <= 1e-13 * next.abs();
        lambda = next;
        if done {
            return Ok((lambda, extend(x1), extend(x2)));
        }
    }
    Err(Error::SpectrumFailed(format!("shift-invert from {sigma} did not converge")))
}

/// Unstable eigenpair of the block operator [[0, -L-], [L+, 0]] on even fields.
pub fn solve_spectrum(ops: &OperatorPair, gs: &GroundState) -> Result<LinearizedSpectrum> {
    let grid = ops.grid;
    let q = gs.values();
    let qp = gs.q_pow(gs.params.p);
    let (mu1, mu2, xi, gxi, steps) = projected_route(ops, &q, &qp)?;
    if !(mu1 < 0.0) {
        return Err(Error::SpectrumFailed(format!("no negative Rayleigh value (mu1 = {mu1})")));
    }
    let e = (-mu1).sqrt();
    let qq = wdot(&grid, &q, &q);
    let lxi = ops.apply_plus(&xi);
    let resid: Vec<f64> = lxi.iter().zip(&gxi).map(|(a, b)| a - mu1 * b).collect();
    let alpha = wdot(&grid, &resid, &q) / qq;
    let mut y1: Vec<f64> = xi.iter().map(|v| -v).collect();
    let mut y2: Vec<f64> = gxi.iter().zip(&q).map(|(g, qv)| e * g - alpha / e * qv).collect();
    let nrm = (wdot(&grid, &y1, &y1) + wdot(&grid, &y2, &y2)).sqrt();
    y1.iter_mut().for_each(|v| *v /= nrm);
    y2.iter_mut().for_each(|v| *v /= nrm);
    let mut pairing = norms::h1_omega_gamma_quadratic(&grid, &gs.params, &gs.profile, &EvenField::from_real(&y1))?;
    if pairing < 0.0 {
        y1.iter_mut().for_each(|v| *v = -*v);
        y2.iter_mut().for_each(|v| *v = -*v);
        pairing = -pairing;
    }
    let r1: Vec<f64> = ops.apply_plus(&y1).iter().zip(&y2).map(|(a, b)| a - e * b).collect();
    let r2: Vec<f64> = ops.apply_minus(&y2).iter().zip(&y1).map(|(a, b)| a + e * b).collect();
    let residuals = (wnorm(&grid, &r1), wnorm(&grid, &r2));

    // second route: coarse dense spectrum, then shift-invert at full resolution
    let coarse = coarse_block_eigenvalues(&gs.params, grid.l)?;
    let near_real: Vec<f64> = coarse.iter().filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs())).map(|z| z.re).collect();
    let seed = near_real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(seed > 0.0) {
        return Err(Error::SpectrumFailed("block operator has no positive real eigenvalue".into()));
    }
    let (block_e, _, _) = block_shift_invert(ops, &q, seed)?;
    if (block_e - e).abs() > 0.01 * e {
        return Err(Error::SpectrumFailed(format!("Rayleigh route gives {e}, block route gives {block_e}")));
    }
    let mut real_eigenvalues: Vec<f64> = near_real
        .iter()
        .map(|&v| {
            if (v - seed).abs() < 1e-12 {
                block_e
            } else if (v + seed).abs() < 1e-12 {
                -block_e
            } else {
                v
            }
        })
        .collect();
    real_eigenvalues.sort_by(|a, b| a.total_cmp(b));

    Ok(LinearizedSpectrum {
        e_omega: e,
        mu1,
        mu2,
        y1,
        y2,
        residuals,
        pairing,
        block_e_omega: block_e,
        real_eigenvalues,
        lanczos_steps: steps,
    })
}

/// max over x in [1, L-2] of Q^{-1} e^{eta x} (|Y1| + |Y2|).
pub fn decay_check(spectrum: &LinearizedSpectrum, gs: &GroundState, eta: f64) -> f64 {
    let grid = gs.grid;
    let q = gs.values();
    let mut best = 0.0f64;
    for j in 0..=grid.n {
        let x = grid.x(j);
        if x < 1.0 || x > grid.l - 2.0 {
            continue;
        }
        let v = (eta * x).exp() * (spectrum.y1[j].abs() + spectrum.y2[j].abs()) / q[j];
        best = best.max(v);
    }
    best
}

/// Default decay rate 0.05 sqrt(omega).
pub fn default_eta(params: &ModelParams) -> f64 {
    0.05 * params.omega.sqrt()
}

/// Orthogonality sets for the coercivity probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoSet {
    /// (iQ, f) = (Q^p, f) = 0
    G,
    /// (iQ, f) = (Y1, f2) = (Y2, f1) = 0
    GTilde,
}

/// 1/2 <L+ f1, f1> + 1/2 <L- f2, f2>.
pub fn phi_functional(ops: &OperatorPair, f: &EvenField) -> f64 {
    0.5 * ops.form_plus(&f.re()) + 0.5 * ops.form_minus(&f.im())
}

fn gram_schmidt(grid: &HalfLineGrid, v: &mut [f64], basis: &[&[f64]]) {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut u = b.to_vec();
        for o in &ortho {
            let c = wdot(grid, &u, o) / wdot(grid, o, o);
            u.iter_mut().zip(o).for_each(|(a, x)| *a -= c * x);
        }
        ortho.push(u);
    }
    for _ in 0..2 {
        for o in &ortho {
            let c = wdot(grid, v, o) / wdot(grid, o, o);
            v.iter_mut().zip(o).for_each(|(a, x)| *a -= c * x);
        }
    }
}

/// Projects f onto the chosen orthogonality set and returns Phi(f)/||f||_{H^1}^2.
pub fn coercivity_probe(
    ops: &OperatorPair,
    f: &EvenField,
    spectrum: &LinearizedSpectrum,
    gs: &GroundState,
    which: OrthoSet,
) -> Result<f64> {
    let grid = gs.grid;
    grid.check_len(f.len())?;
    let q = gs.values();
    let qp: Vec<f64> = q.iter().map(|v| pos_pow(v.max(0.0), gs.params.p)).collect();
    let mut f1 = f.re();
    let mut f2 = f.im();
    match which {
        OrthoSet::G => {
            gram_schmidt(&grid, &mut f1, &[&qp]);
            gram_schmidt(&grid, &mut f2, &[&q]);
        }
        OrthoSet::GTilde => {
            gram_schmidt(&grid, &mut f1, &[&spectrum.y2]);
            gram_schmidt(&grid, &mut f2, &[&q, &spectrum.y1]);
        }
    }
    let projected = EvenField::from_parts(&f1, &f2);
    let input = norms::mass(&grid, f).sqrt();
    let out = norms::mass(&grid, &projected).sqrt();
    if !(out >= 1e-12 * input) || input == 0.0 {
        return Err(Error::DegenerateProjection { projected: out, input });
    }
    let h1 = norms::h1_norm(&grid, &projected);
    Ok(phi_functional(ops, &projected) / (h1 * h1))
}
