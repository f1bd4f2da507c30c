//! Seeded random even test fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::EvenField;
use crate::grid::HalfLineGrid;

/// Deterministic generator for reproducible probes.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random even field: a few Gaussian-damped cosines with random
/// widths, frequencies and (complex) amplitudes. The Dirichlet node is zeroed.
pub fn random_even_field<R: Rng + ?Sized>(grid: &HalfLineGrid, rng: &mut R, complex: bool) -> EvenField {
    let terms: Vec<(f64, f64, Complex64)> = (0..6)
        .map(|_| {
            let a = rng.random_range(0.2..3.0);
            let b = rng.random_range(0.0..4.0);
            let re = rng.random_range(-1.0..1.0);
            let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            (a, b, Complex64::new(re, im))
        })
        .collect();
    let mut f =
        EvenField::from_fn(grid, |x| terms.iter().map(|(a, b, c)| c * ((-a * x * x).exp() * (b * x).cos())).sum());
    let n = grid.n;
    f.values[n] = Complex64::new(0.0, 0.0);
    f
}
