use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::HalfLineGrid;

/// Complex samples at the grid nodes, standing for the even extension to the line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvenField {
    pub values: Vec<Complex64>,
}

impl EvenField {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_real(re: &[f64]) -> Self {
        Self { values: re.iter().map(|&r| Complex64::new(r, 0.0)).collect() }
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Self {
        assert_eq!(re.len(), im.len());
        Self { values: re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect() }
    }

    pub fn from_fn(grid: &HalfLineGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Self { values: (0..=grid.n).map(|j| f(grid.x(j))).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|z| z.conj()).collect() }
    }

    pub fn axpy(&mut self, a: Complex64, x: &EvenField) {
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Writes `x,re,im` CSV with 17 significant digits.
    pub fn to_csv(&self, grid: &HalfLineGrid) -> String {
        let mut out = String::with_capacity(self.len() * 72);
        out.push_str("x,re,im\n");
        for (j, z) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", grid.x(j), z.re, z.im);
        }
        out
    }

    /// Parses `x,re,im` CSV and checks the abscissae against the grid.
    pub fn from_csv(text: &str, grid: &HalfLineGrid) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim().replace(' ', "") == "x,re,im" => {}
            Some((i, header)) => {
                return Err(Error::GridMismatch(format!(
                    "line {}: expected header `x,re,im`, found `{}`",
                    i + 1,
                    header.trim()
                )))
            }
            None => return Err(Error::GridMismatch("empty field file".into())),
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::GridMismatch(format!("line {}: expected 3 columns", i + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::GridMismatch(format!("line {}: {e}", i + 1)));
            let x = parse(cols[0])?;
            let j = values.len();
            if j > grid.n || (x - grid.x(j)).abs() > 1e-9 * grid.l.max(1.0) {
                return Err(Error::GridMismatch(format!("line {}: abscissa {x} does not match grid node {j}", i + 1)));
            }
            values.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
        }
        grid.check_len(values.len())?;
        Ok(Self { values })
    }
}

impl Add for &EvenField {
    type Output = EvenField;
    fn add(self, rhs: &EvenField) -> EvenField {
        EvenField { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &EvenField {
    type Output = EvenField;
    fn sub(self, rhs: &EvenField) -> EvenField {
        EvenField { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<f64> for &EvenField {
    type Output = EvenField;
    fn mul(self, rhs: f64) -> EvenField {
        self.scale_re(rhs)
    }
}
