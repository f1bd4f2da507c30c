use dnls_core::evolve::*;
use dnls_core::functionals::{self, localized_virial, mu};
use dnls_core::special::*;
use dnls_core::spectral::*;
use dnls_core::*;
use num_complex::Complex64;

fn reference() -> GroundState {
    let p = ModelParams::new(-1.0, 7.0, 1.0).unwrap();
    let grid = make_grid(&p, 30.0, 3000).unwrap();
    discrete_ground_state(&p, &grid).unwrap()
}

fn fixed_step_error(gs: &GroundState, dt: f64, t: f64) -> f64 {
    let stepper = Stepper::new(&gs.grid, &gs.params, dt).unwrap();
    let mut u = gs.profile.clone();
    for _ in 0..(t / dt).round() as usize {
        stepper.apply(&mut u);
    }
    let exact = gs.profile.scale(Complex64::from_polar(1.0, gs.params.omega * t));
    norms::h1_norm(&gs.grid, &(&u - &exact))
}

#[test]
fn standing_wave_error_is_second_order_before_the_instability() {
    let gs = reference();
    let e1 = fixed_step_error(&gs, 1e-3, 1.0);
    let e2 = fixed_step_error(&gs, 5e-4, 1.0);
    assert!(e1 < 1e-3);
    assert!((3.5..4.5).contains(&(e1 / e2)), "ratio {}", e1 / e2);
}

#[test]
fn virial_second_derivative_matches_f_r() {
    // d^2/dt^2 J_R against F_R along a short run from a perturbed ground state
    let gs = reference();
    let grid = gs.grid;
    let mut u = gs.profile.scale_re(1.05);
    let dt = 1e-3;
    let stepper = Stepper::new(&grid, &gs.params, dt).unwrap();
    let h = 0.02;
    let per = (h / dt).round() as usize;
    let mut js = Vec::new();
    let mut fs = Vec::new();
    let mut djs = Vec::new();
    for _ in 0..3 {
        let v = localized_virial(&grid, &gs.params, &u, 8.0).unwrap();
        js.push(v.j_r);
        fs.push(v.f_r);
        djs.push(v.dj_r);
        for _ in 0..per {
            stepper.apply(&mut u);
        }
    }
    let d2 = (js[2] - 2.0 * js[1] + js[0]) / (h * h);
    assert!((d2 - fs[1]).abs() < 2e-2 * fs[1].abs().max(1.0), "{d2} vs {}", fs[1]);
    let d1 = (js[2] - js[0]) / (2.0 * h);
    assert!((d1 - djs[1]).abs() < 2e-2 * djs[1].abs().max(1.0), "{d1} vs {}", djs[1]);
}

#[test]
fn oversized_ground_state_collapses() {
    let gs = reference();
    let u0 = gs.profile.scale_re(1.2);
    let mut cfg = ClassifyConfig::default();
    cfg.evolve.t_end = 5.0;
    let (c, tr) = classify(&gs, &u0, &cfg).unwrap();
    assert_eq!(c.verdict, Verdict::Blowup);
    assert_eq!(tr.termination, Termination::Collapsed);
    assert!(c.grad_growth >= cfg.blowup_growth);
}

#[test]
fn seeds_keep_the_sign_of_mu() {
    let gs = reference();
    let ops = assemble(&gs);
    let spectrum = solve_spectrum(&ops, &gs).unwrap();
    for a in [1.0, -1.0] {
        let ser = build_series(a, 2, &spectrum, &ops, &gs).unwrap();
        let seed = seed_and_residual(&ser, &ops, &gs, 1.0).unwrap();
        let m0 = mu(&gs, &seed.field);
        assert_eq!(m0.signum(), -a, "A = {a}");
        let cfg = EvolveConfig { t_start: 1.0, t_end: 0.0, record_every: 0.1, ..Default::default() };
        let tr = evolve(&gs, &seed.field, &cfg).unwrap();
        assert!(tr.samples.len() >= 4);
        assert!(tr.samples.iter().all(|s| s.mu.signum() == m0.signum()));
        assert!(tr.samples[..4].iter().all(|s| s.in_modulation));
    }
}

#[test]
fn recorded_rows_round_trip_through_csv() {
    let gs = reference();
    let s = sample(&gs, &gs.profile, 0.5, 8.0, None).unwrap();
    let row = s.csv_row();
    assert_eq!(row.split(',').count(), TrajectorySample::CSV_HEADER.split(',').count());
    let first: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, 0.5);
}

#[test]
fn energy_drift_over_ten_time_units() {
    // sub-threshold data: the standing wave itself leaves Q through the unstable mode
    let gs = reference();
    let stepper = Stepper::new(&gs.grid, &gs.params, 1e-3).unwrap();
    let mut u = gs.profile.scale_re(0.9);
    let e0 = functionals::energy(&gs.grid, &gs.params, &u);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        stepper.apply(&mut u);
        if i % 500 == 499 {
            worst = worst.max((functionals::energy(&gs.grid, &gs.params, &u) - e0).abs() / e0.abs());
        }
    }
    assert!(worst < 1e-6, "relative energy drift {worst:e}");
}

#[test]
fn modulation_parameters_move_at_the_rate_of_mu() {
    // |theta' - omega| and |rho'| stay proportional to |mu| while the seed converges
    let gs = reference();
    let ops = assemble(&gs);
    let spectrum = solve_spectrum(&ops, &gs).unwrap();
    for a in [1.0, -1.0] {
        let ser = build_series(a, 3, &spectrum, &ops, &gs).unwrap();
        let seed = seed_and_residual(&ser, &ops, &gs, 1.0).unwrap();
        let cfg = EvolveConfig {
            t_start: 1.0,
            t_end: 1.0 + 3.0 / spectrum.e_omega,
            record_every: 0.01,
            ..Default::default()
        };
        let tr = evolve(&gs, &seed.field, &cfg).unwrap();
        assert!(tr.samples.len() > 50);
        for pick in [0, 1] {
            let ratios: Vec<f64> = tr
                .samples
                .windows(2)
                .map(|w| {
                    let dt = w[1].t - w[0].t;
                    let rate = if pick == 0 {
                        (w[1].theta - w[0].theta) / dt - gs.params.omega
                    } else {
                        (w[1].rho - w[0].rho) / dt
                    };
                    rate.abs() / (0.5 * (w[0].mu + w[1].mu).abs())
                })
                .collect();
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(hi < 2.0 && hi < 1.5 * lo, "A = {a}, {}: {lo} .. {hi}", ["theta", "rho"][pick]);
        }
    }
}
