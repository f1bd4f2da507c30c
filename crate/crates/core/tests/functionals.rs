use dnls_core::functionals::{self, generate_threshold_data};
use dnls_core::sampling::{random_even_field, seeded_rng};
use dnls_core::spectral::{assemble, solve_spectrum};
use dnls_core::*;
use num_complex::Complex64;

fn reference() -> GroundState {
    let p = ModelParams::new(-1.0, 7.0, 1.0).unwrap();
    let grid = make_grid(&p, 30.0, 3000).unwrap();
    discrete_ground_state(&p, &grid).unwrap()
}

fn profile(x: f64) -> Complex64 {
    Complex64::new(1.0, 0.4) * (1.2 * (-0.5 * x * x).exp() + 0.3 * x * x * (-x * x).exp())
}

/// S(e^{alpha l} f(e^{beta l} .)) sampled directly from the analytic profile.
fn scaled_action(grid: &HalfLineGrid, params: &ModelParams, alpha: f64, beta: f64, l: f64) -> f64 {
    let u = EvenField::from_fn(grid, |x| (alpha * l).exp() * profile((beta * l).exp() * x));
    functionals::action(grid, params, &u)
}

#[test]
fn k_alpha_beta_is_the_scaling_derivative_of_the_action() {
    let p = ModelParams::new(-1.0, 7.0, 1.0).unwrap();
    let grid = make_grid(&p, 30.0, 6000).unwrap();
    let f = EvenField::from_fn(&grid, profile);
    let h = 1e-4;
    for (a, b) in [(0.5, 1.0), (1.0, 0.0), (1.0, 2.0), (0.3, -0.4)] {
        let k = functionals::k_alpha_beta(&grid, &p, &f, a, b);
        let fd = (scaled_action(&grid, &p, a, b, h) - scaled_action(&grid, &p, a, b, -h)) / (2.0 * h);
        let scale = functionals::action(&grid, &p, &f).abs() + k.abs();
        assert!((k - fd).abs() < 1e-5 * scale, "({a}, {b}): K = {k}, finite difference {fd}");
    }
}

#[test]
fn unstable_direction_reaches_both_signs_on_the_threshold_manifold() {
    let gs = reference();
    let ops = assemble(&gs);
    let spectrum = solve_spectrum(&ops, &gs).unwrap();
    for sign in [-1, 1] {
        let d = generate_threshold_data(&gs, &spectrum.y1_field(), 0.05, sign).unwrap();
        assert!(d.sign_attained);
        assert!(d.mass_defect < 1e-10 && d.energy_defect < 1e-10, "{} {}", d.mass_defect, d.energy_defect);
        let (dm, de) = functionals::threshold_defects(&gs, &d.field);
        assert!(dm < 1e-10 && de < 1e-10);
        assert_eq!(d.k_gamma.signum(), sign as f64, "K = {}", d.k_gamma);
    }
}

/// Im of the full-line integral of x u' conj(u), central differences.
fn momentum_moment(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    let v = &u.values;
    let mut acc = 0.0;
    for j in 1..grid.n {
        let du = (v[j + 1] - v[j - 1]) / (2.0 * grid.dx);
        acc += grid.weight(j) * grid.x(j) * (du * v[j].conj()).im;
    }
    acc
}

fn second_moment(grid: &HalfLineGrid, u: &EvenField) -> f64 {
    (0..=grid.n).map(|j| grid.weight(j) * grid.x(j).powi(2) * u.values[j].norm_sqr()).sum()
}

#[test]
fn virial_and_mu_share_signs_on_threshold_data() {
    let gs = reference();
    let mut rng = seeded_rng(17);
    for (i, sign) in [-1, 1].into_iter().cycle().take(10).enumerate() {
        let dir = random_even_field(&gs.grid, &mut rng, true);
        let d = generate_threshold_data(&gs, &dir, 0.05, sign).unwrap();
        let mu = functionals::mu(&gs, &d.field);
        assert!(d.k_gamma * mu > 0.0, "sample {i}: K = {}, mu = {mu}", d.k_gamma);
        assert!(functionals::virial_mu_ratio(&gs, &d.field).unwrap() > 0.0);
    }
}

#[test]
fn momentum_moment_is_controlled_by_the_virial() {
    // (Im int x u' conj u)^2 <= C K^2 int x^2 |u|^2 with one C for every sample
    let gs = reference();
    let mut rng = seeded_rng(19);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let dir = random_even_field(&gs.grid, &mut rng, true);
        let eps = [0.02, 0.05, 0.1][i % 3];
        let d = generate_threshold_data(&gs, &dir, eps, -1).unwrap();
        assert!(d.k_gamma < 0.0);
        let m = momentum_moment(&gs.grid, &d.field);
        worst = worst.max(m * m / (d.k_gamma * d.k_gamma * second_moment(&gs.grid, &d.field)));
    }
    assert!(worst <= 1.0, "C = {worst}");
}
