//! Approximate threshold solutions Q + sum_j e^{-j e t} Z_j built by the
//! shifted-resolvent recursion, and the seeds they provide for the integrator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::EvenField;
use crate::groundstate::GroundState;
use crate::linalg::{fit_line, linspace, LineFit};
use crate::norms;
use crate::spectral::{LinearizedSpectrum, OperatorPair};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 6;
/// Terms kept in the small-argument expansion of the remainder.
const SERIES_TERMS: usize = 60;

fn binom(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a - i as f64) / (i as f64 + 1.0))
}

/// a[l][m] = binom((p+1)/2, l) binom((p-1)/2, m), zeroed for l + m < 2.
pub fn taylor_coeffs(p: f64, l_max: usize) -> Vec<Vec<f64>> {
    let a = 0.5 * (p + 1.0);
    let b = 0.5 * (p - 1.0);
    (0..=l_max)
        .map(|l| (0..=l_max).map(|m| if l + m < 2 { 0.0 } else { binom(a, l) * binom(b, m) }).collect())
        .collect()
}

/// N(z) = |1+z|^{p-1}(1+z) - 1 - (p+1)/2 z - (p-1)/2 conj(z).
///
/// Near zero the factorization (1+z)^a (1+zbar)^b = (1 + z T1)(1 + zbar T2) is
/// expanded without forming the cancelling low-order terms.
pub fn n_small(p: f64, z: Complex64) -> Complex64 {
    let a = 0.5 * (p + 1.0);
    let b = 0.5 * (p - 1.0);
    if z.norm() >= 0.5 {
        let one = Complex64::new(1.0, 0.0);
        let w = one + z;
        return w * w.norm().powf(p - 1.0) - one - a * z - b * z.conj();
    }
    let zb = z.conj();
    let (mut t1_tail, mut t2_tail) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let (mut ca, mut cb) = (a, b);
    let (mut pa, mut pb) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let (mut t1, mut t2) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
    for l in 2..=SERIES_TERMS {
        ca *= (a - (l - 1) as f64) / l as f64;
        cb *= (b - (l - 1) as f64) / l as f64;
        pa *= z;
        pb *= zb;
        t1_tail += ca * pa;
        t2_tail += cb * pb;
        if ca == 0.0 && cb == 0.0 {
            break;
        }
    }
    t1 += t1_tail;
    t2 += t2_tail;
    z * t1_tail + zb * t2_tail + z * zb * t1 * t2
}

/// Linear part P(v) and remainder R(v) of |Q+v|^{p-1}(Q+v) - Q^p.
pub fn pr_eval(v: &EvenField, gs: &GroundState) -> Result<(EvenField, EvenField)> {
    gs.grid.check_len(v.len())?;
    let p = gs.params.p;
    let q = gs.values();
    let mut lin = EvenField::zeros(v.len());
    let mut rem = EvenField::zeros(v.len());
    for j in 0..v.len() {
        let qj = q[j].max(0.0);
        let vj = v.values[j];
        let qm = qj.powf(p - 1.0);
        lin.values[j] = 0.5 * (p + 1.0) * qm * vj + 0.5 * (p - 1.0) * qm * vj.conj();
        rem.values[j] = if qj > 0.0 && (vj / qj).norm() < 0.5 {
            qj.powf(p) * n_small(p, vj / qj)
        } else {
            direct_remainder(p, qj, vj)
        };
    }
    Ok((lin, rem))
}

fn direct_remainder(p: f64, q: f64, v: Complex64) -> Complex64 {
    let w = q + v;
    let qm = if q > 0.0 { q.powf(p - 1.0) } else { 0.0 };
    w * w.norm().powf(p - 1.0) - q * qm - p * qm * v.re - Complex64::i() * qm * v.im
}

/// ℒ f = -L- f2 + i L+ f1 for f = f1 + i f2.
pub fn apply_block(ops: &OperatorPair, f: &EvenField) -> EvenField {
    let lm = ops.apply_minus(&f.im());
    let lp = ops.apply_plus(&f.re());
    let re: Vec<f64> = lm.iter().map(|v| -v).collect();
    EvenField::from_parts(&re, &lp)
}

/// Solves (ℒ - sigma) z = b.
pub fn solve_shifted(ops: &OperatorPair, sigma: f64, b: &EvenField) -> Result<EvenField> {
    let n = ops.grid.n;
    let lu = ops.lplus.factor_product_shifted(&ops.lminus, sigma * sigma)?;
    let b1 = &b.re()[..n];
    let b2 = &b.im()[..n];
    let lb1 = ops.lplus.apply(b1);
    let rhs: Vec<f64> = (0..n).map(|j| -sigma * b2[j] - lb1[j]).collect();
    let z2 = lu.solve(&rhs);
    let lz2 = ops.lminus.apply(&z2);
    let mut z1: Vec<f64> = (0..n).map(|j| -(b1[j] + lz2[j]) / sigma).collect();
    let mut z2 = z2;
    z1.push(0.0);
    z2.push(0.0);
    Ok(EvenField::from_parts(&z1, &z2))
}

#[derive(Debug, Clone)]
pub struct SpecialSeries {
    pub amplitude: f64,
    pub order: usize,
    /// Z_1 .. Z_k.
    pub terms: Vec<EvenField>,
    pub e_omega: f64,
    pub taylor: Vec<Vec<f64>>,
}

impl SpecialSeries {
    /// Sum_j s^j Z_j with s = e^{-e t}.
    pub fn eval(&self, t: f64) -> EvenField {
        let s = (-self.e_omega * t).exp();
        let n = self.terms.first().map_or(0, |z| z.len());
        let mut v = EvenField::zeros(n);
        let mut sj = 1.0;
        for z in &self.terms {
            sj *= s;
            v.axpy(Complex64::new(sj, 0.0), z);
        }
        v
    }

    /// Q + V(t), without the e^{i omega t} phase.
    pub fn profile_at(&self, gs: &GroundState, t: f64) -> EvenField {
        let mut u = self.eval(t);
        for (a, q) in u.values.iter_mut().zip(gs.values()) {
            *a += q;
        }
        u
    }
}

/// Coefficient of s^j in -iR(sum_{i<j} s^i Z_i), by truncated multinomial expansion.
pub fn forcing_multinomial(gs: &GroundState, terms: &[EvenField], taylor: &[Vec<f64>], j: usize) -> EvenField {
    let p = gs.params.p;
    let q = gs.values();
    let len = q.len();
    let mut out = EvenField::zeros(len);
    let lmax = taylor.len() - 1;
    for x in 0..len {
        if q[x] <= 0.0 {
            continue;
        }
        // w(s) = sum_i s^i W_i, coefficients 0..=j
        let mut w = vec![Complex64::new(0.0, 0.0); j + 1];
        for (i, z) in terms.iter().enumerate().take(j.saturating_sub(1)) {
            w[i + 1] = z.values[x] / q[x];
        }
        let wb: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let pw = truncated_powers(&w, j);
        let pwb = truncated_powers(&wb, j);
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..=j.min(lmax) {
            for m in 0..=(j - l).min(lmax) {
                if l + m < 2 {
                    continue;
                }
                let a = taylor[l][m];
                if a == 0.0 {
                    continue;
                }
                let c: Complex64 = (0..=j).map(|i| pw[l][i] * pwb[m][j - i]).sum();
                acc += a * c;
            }
        }
        out.values[x] = -Complex64::i() * q[x].powf(p) * acc;
    }
    out
}

fn truncated_powers(w: &[Complex64], deg: usize) -> Vec<Vec<Complex64>> {
    let mut powers = vec![vec![Complex64::new(0.0, 0.0); deg + 1]];
    powers[0][0] = Complex64::new(1.0, 0.0);
    for k in 1..=deg {
        let prev = &powers[k - 1];
        let mut next = vec![Complex64::new(0.0, 0.0); deg + 1];
        for a in 0..=deg {
            if prev[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..=(deg - a) {
                next[a + b] += prev[a] * w[b];
            }
        }
        powers.push(next);
    }
    powers
}

/// Same coefficient recovered by sampling -iR at 2j+1 symmetric values of the
/// formal variable s and inverting the Vandermonde system.
pub fn forcing_vandermonde(gs: &GroundState, terms: &[EvenField], j: usize) -> Result<EvenField> {
    let len = gs.grid.len();
    let q = gs.values();
    let mut wmax = 0.0f64;
    for z in terms.iter().take(j - 1) {
        for x in 0..len {
            if q[x] > 0.0 {
                wmax = wmax.max((z.values[x] / q[x]).norm());
            }
        }
    }
    let h = 0.003 / wmax.max(1e-300);
    let nodes: Vec<f64> = (-(j as i64)..=j as i64).map(|k| k as f64).collect();
    let m = nodes.len();
    let vand = DMatrix::from_fn(m, m, |r, c| nodes[r].powi(c as i32));
    let lu = vand.lu();
    let samples: Vec<EvenField> = nodes
        .iter()
        .map(|&k| {
            let s = k * h;
            let mut v = EvenField::zeros(len);
            let mut si = 1.0;
            for z in terms.iter().take(j - 1) {
                si *= s;
                v.axpy(Complex64::new(si, 0.0), z);
            }
            let (_, r) = pr_eval(&v, gs)?;
            Ok(r.scale(-Complex64::i()))
        })
        .collect::<Result<_>>()?;
    let scale = h.powi(j as i32);
    let mut out = EvenField::zeros(len);
    for x in 0..len {
        for part in 0..2 {
            let rhs = DVector::from_fn(m, |r, _| {
                let v = samples[r].values[x];
                if part == 0 {
                    v.re
                } else {
                    v.im
                }
            });
            let coef = lu.solve(&rhs).ok_or_else(|| Error::SolveFailed("Vandermonde system".into()))?;
            let c = coef[j] / scale;
            if part == 0 {
                out.values[x].re = c;
            } else {
                out.values[x].im = c;
            }
        }
    }
    Ok(out)
}

/// Z_1 = A Y+, then (ℒ - j e) Z_j = -F_j for j = 2..=k.
pub fn build_series(
    amplitude: f64,
    k: usize,
    spectrum: &LinearizedSpectrum,
    ops: &OperatorPair,
    gs: &GroundState,
) -> Result<SpecialSeries> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("series order must be in 1..={MAX_ORDER}, got {k}")));
    }
    let e = spectrum.e_omega;
    let taylor = taylor_coeffs(gs.params.p, k + 1);
    let mut terms = vec![spectrum.y_plus().scale(Complex64::new(amplitude, 0.0))];
    for j in 2..=k {
        let sigma = j as f64 * e;
        for &lam in &spectrum.real_eigenvalues {
            if (sigma - lam).abs() < 1e-3 {
                return Err(Error::ResolventNearSingular { shift: sigma, eigenvalue: lam });
            }
        }
        let f = forcing_multinomial(gs, &terms, &taylor, j);
        let z = solve_shifted(ops, sigma, &f.scale(Complex64::new(-1.0, 0.0)))?;
        terms.push(z);
    }
    Ok(SpecialSeries { amplitude, order: k, terms, e_omega: e, taylor })
}

/// H^1 norm of the residual ∂t V + ℒ V - iR(V) of the truncated series at time t.
pub fn series_residual(series: &SpecialSeries, ops: &OperatorPair, gs: &GroundState, t: f64) -> Result<f64> {
    let grid = gs.grid;
    let s = (-series.e_omega * t).exp();
    let mut eps = EvenField::zeros(grid.len());
    let mut sj = 1.0;
    for (j, z) in series.terms.iter().enumerate() {
        sj *= s;
        let shift = (j + 1) as f64 * series.e_omega;
        eps.axpy(Complex64::new(sj, 0.0), &apply_block(ops, z));
        eps.axpy(Complex64::new(-sj * shift, 0.0), z);
    }
    let (_, r) = pr_eval(&series.eval(t), gs)?;
    eps.axpy(-Complex64::i(), &r);
    Ok(norms::h1_norm(&grid, &eps))
}

#[derive(Debug, Clone)]
pub struct Seed {
    /// Q + V(t0).
    pub field: EvenField,
    pub t0: f64,
    pub fit: LineFit,
    /// (t, ||eps(t)||_{H^1}) samples behind the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Seed u(t0) = Q + V(t0) and the decay slope of log||eps_k(t)|| over [t0, t0 + 3/e].
pub fn seed_and_residual(series: &SpecialSeries, ops: &OperatorPair, gs: &GroundState, t0: f64) -> Result<Seed> {
    let grid = gs.grid;
    let v0 = series.eval(t0);
    let bound = 0.1 * gs.h1_norm();
    let vn = norms::h1_norm(&grid, &v0);
    if vn > bound {
        return Err(Error::T0TooSmall { series: vn, bound });
    }
    let field = series.profile_at(gs, t0);
    let ts = linspace(t0, t0 + 3.0 / series.e_omega, 16);
    let mut samples = Vec::with_capacity(ts.len());
    for &t in &ts {
        samples.push((t, series_residual(series, ops, gs, t)?));
    }
    let usable: Vec<(f64, f64)> = samples.iter().cloned().filter(|(_, r)| *r > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: usable.len() });
    }
    let xs: Vec<f64> = usable.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = usable.iter().map(|s| s.1.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(Seed { field, t0, fit, samples })
}
