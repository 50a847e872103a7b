use nlslab::diagnostics::{energy, momentum};
use nlslab::evolution::*;
use nlslab::ground_state::{place_on, reference_ground_state};
use nlslab::profile::ScaleSeries;
use nlslab::spectral::{Field, Grid};
use nlslab::symmetry::{galilean, pconf_blowup, phase_sym, scale_sym};
use nlslab::LabError;
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian(grid: &Grid, amp: f64, width: f64, x0: f64) -> Field {
    Field::from_fn(grid, |p| {
        let r2 = (p[0] - x0).powi(2) + p[1] * p[1];
        Complex64::new(amp * (-r2 / (width * width)).exp(), 0.0)
    })
}

fn fixed_cfg(dim: u32, t_end: f64, dt: f64) -> SolverConfig {
    // adapt_c / ‖∇u‖² stays above dt for the data used here, so every step is dt.
    let mut cfg = SolverConfig::new(dim, t_end);
    cfg.dt0 = dt;
    cfg.dt_min = dt * 1e-6;
    cfg.adapt_c = 1.0;
    cfg
}

fn sched() -> Schedule {
    Schedule {
        rows: Every::Steps(50),
        snapshots: None,
    }
}

fn rel_dist(a: &Field, b: &Field) -> f64 {
    a.l2_distance(b).unwrap() / b.l2_norm()
}

/// `e^{itΔ} e^{−|x|²}` in closed form: `(1+4it)^{−d/2} e^{−|x|²/(1+4it)}`.
fn gaussian_oracle(grid: &Grid, t: f64) -> Field {
    let z = Complex64::new(1.0, 4.0 * t);
    let pre = z.powf(-0.5 * grid.dim() as f64);
    Field::from_fn(grid, |p| pre * (-(p[0] * p[0] + p[1] * p[1]) / z).exp())
}

#[test]
fn free_propagator_matches_gaussian_formula() {
    for (d, n) in [(1, 512), (2, 256)] {
        let g = Grid::new(d, 40.0, n).unwrap();
        let u0 = gaussian(&g, 1.0, 1.0, 0.0);
        for t in [0.1, 0.5, -0.3] {
            let num = free_propagator(&u0, t);
            let err = num.max_abs_diff(&gaussian_oracle(&g, t)).unwrap();
            assert!(err < 1e-10, "d={d} t={t}: {err:e}");
        }
    }
}

#[test]
fn zero_field_stays_zero() {
    for d in [1, 2] {
        let g = Grid::new(d, 10.0, 32).unwrap();
        let z = Field::zeros(&g);
        assert!(step(&z, 0.1).unwrap().samples().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert_eq!(free_propagator(&z, 3.0).l2_norm(), 0.0);
    }
}

#[test]
fn soliton_rotates_in_phase() {
    let q = reference_ground_state(1).unwrap();
    let mut stepper = Stepper::new(q.grid(), false);
    let mut u = q.field.clone();
    for _ in 0..10_000 {
        u = stepper.step(&u, 1e-4).unwrap();
    }
    let want = q.field.scale(Complex64::from_polar(1.0, 1.0));
    let peak = q.peak();
    let mut modulus: f64 = 0.0;
    let mut phase: f64 = 0.0;
    for (a, b) in u.samples().iter().zip(want.samples()) {
        modulus = modulus.max((a.norm() - b.norm()).abs());
        // Phase is only meaningful where the soliton carries amplitude.
        if b.norm() > 1e-3 * peak {
            phase = phase.max((a / b).arg().abs());
        }
    }
    assert!(modulus < 1e-8, "modulus error {modulus:e}");
    assert!(phase < 1e-6, "phase error {phase:e}");
}

/// Max modulus error of the soliton after `t = 1` at step `dt`.
fn soliton_modulus_error(dt: f64) -> f64 {
    let q = reference_ground_state(1).unwrap();
    let mut stepper = Stepper::new(q.grid(), false);
    let mut u = q.field.clone();
    for _ in 0..(1.0 / dt).round() as usize {
        u = stepper.step(&u, dt).unwrap();
    }
    let want = q.field.scale(Complex64::from_polar(1.0, 1.0));
    u.samples()
        .iter()
        .zip(want.samples())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn soliton_error_is_second_order_in_dt() {
    let (a, b) = (soliton_modulus_error(2e-4), soliton_modulus_error(1e-4));
    let order = (a / b).log2();
    assert!((order - 2.0).abs() < 0.1, "errors {a:e}, {b:e}: order {order}");
}

#[test]
fn splitting_local_error_is_third_order() {
    for d in [1, 2] {
        let g = Grid::new(d, 20.0, if d == 1 { 256 } else { 64 }).unwrap();
        let u = gaussian(&g, 1.2, 1.0, 0.3);
        let defect = |dt: f64| {
            let one = step(&u, dt).unwrap();
            let two = step(&step(&u, 0.5 * dt).unwrap(), 0.5 * dt).unwrap();
            one.l2_distance(&two).unwrap()
        };
        let dts = [0.04, 0.02, 0.01, 0.005];
        let e: Vec<f64> = dts.iter().map(|&dt| defect(dt)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 2.9, "d={d}: defects {e:?}, order {order}");
        }
    }
}

#[test]
fn stepping_back_undoes_a_step() {
    for d in [1, 2] {
        let g = Grid::new(d, 20.0, if d == 1 { 256 } else { 64 }).unwrap();
        let u = gaussian(&g, 1.5, 1.1, -0.4).map(|z| z * Complex64::from_polar(1.0, 0.3));
        for dt in [1e-3, 0.02] {
            let back = step(&step(&u, dt).unwrap(), -dt).unwrap();
            let err = back.max_abs_diff(&u).unwrap();
            assert!(err < 1e-10, "d={d} dt={dt}: {err:e}");
        }
    }
    let g = Grid::new(1, 10.0, 32).unwrap();
    assert!(matches!(step(&Field::zeros(&g), 0.0), Err(LabError::InvalidParameter(_))));
}

#[test]
fn soliton_run_conserves() {
    let q = reference_ground_state(1).unwrap();
    let mut cfg = SolverConfig::new(1, 2.0);
    cfg.dt0 = 1e-3;
    let rec = evolve(&q.field, 0.0, &cfg, &sched()).unwrap();
    assert_eq!(rec.termination, Termination::ReachedTEnd);
    assert_eq!(rec.final_state.t, 2.0);
    let m0 = rec.rows[0].mass;
    let e_scale = rec.rows[0].energy.abs().max(0.5 * rec.rows[0].grad_norm_sq);
    for r in &rec.rows {
        assert!((r.mass - m0).abs() < 1e-10 * m0);
        assert!((r.energy - rec.rows[0].energy).abs() < 1e-6 * e_scale);
        assert!(r.momentum[0].abs() < 1e-12);
    }
    for w in rec.rows.windows(2) {
        assert!(w[1].t > w[0].t);
    }
}

#[test]
fn moving_gaussian_conserves_momentum_and_energy() {
    for d in [1, 2] {
        let g = Grid::new(d, 30.0, if d == 1 { 512 } else { 128 }).unwrap();
        let u0 = galilean(&gaussian(&g, 0.9, 1.3, 0.0), 0.0, [2.0 * 0.6283185307179586, 0.0]).unwrap();
        let mut cfg = SolverConfig::new(d, 0.5);
        cfg.adapt_c = 2e-3;
        let rec = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
        let p0 = momentum(&u0);
        let e0 = energy(&u0);
        let m0 = u0.mass();
        for r in &rec.rows {
            assert!((r.mass - m0).abs() < 1e-9 * m0);
            assert!((r.energy - e0).abs() < 1e-6 * e0.abs().max(0.5 * rec.rows[0].grad_norm_sq), "d={d}");
            for (a, b) in r.momentum.iter().zip(&p0) {
                assert!((a - b).abs() < 1e-9, "d={d}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn phase_equivariance() {
    for d in [1, 2] {
        let g = Grid::new(d, 30.0, if d == 1 { 512 } else { 128 }).unwrap();
        let u0 = gaussian(&g, 1.1, 1.2, 0.5);
        let cfg = SolverConfig::new(d, 0.3);
        let a = evolve(&phase_sym(&u0, 0.77), 0.0, &cfg, &sched()).unwrap();
        let b = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
        let err = rel_dist(&a.final_state.field, &phase_sym(&b.final_state.field, 0.77));
        assert!(err < 1e-9, "d={d}: {err:e}");
    }
}

#[test]
fn scaling_equivariance() {
    // λ² = 2 keeps both step sequences on the dt ladder.
    let lambda = 2f64.sqrt();
    for d in [1, 2] {
        let g = Grid::new(d, 40.0, if d == 1 { 1024 } else { 256 }).unwrap();
        let u0 = gaussian(&g, 0.9, 1.2, 0.0);
        let t = 0.4;
        let mut small = fixed_cfg(d, t, 2e-3);
        small.adapt_c = 2e-3;
        let mut big = fixed_cfg(d, lambda * lambda * t, 4e-3);
        big.adapt_c = 2e-3;
        let a = evolve(&u0, 0.0, &small, &sched()).unwrap();
        let b = evolve(&scale_sym(&u0, lambda).unwrap(), 0.0, &big, &sched()).unwrap();
        assert_eq!(a.steps, b.steps);
        let want = scale_sym(&a.final_state.field, lambda).unwrap();
        let err = rel_dist(&b.final_state.field, &want);
        assert!(err < 1e-6, "d={d}: {err:e}");
    }
}

#[test]
fn galilean_equivariance_1d() {
    let g = Grid::new(1, 40.0, 1024).unwrap();
    let u0 = gaussian(&g, 1.0, 1.2, 0.0);
    // ξ/2 = 2πm/L places the boost on the frequency lattice.
    let xi = [2.0 * 2.0 * std::f64::consts::PI * 3.0 / 40.0, 0.0];
    let t = 0.5;
    let cfg = fixed_cfg(1, t, 5e-4);
    let a = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
    let b = evolve(&galilean(&u0, 0.0, xi).unwrap(), 0.0, &cfg, &sched()).unwrap();
    let want = galilean(&a.final_state.field, t, xi).unwrap();
    let err = rel_dist(&b.final_state.field, &want);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn supercritical_soliton_blows_up() {
    let q = reference_ground_state(1).unwrap();
    let g = Grid::new(1, 60.0, 4096).unwrap();
    let u0 = place_on(&q, &g).unwrap().scale_real(1.05);
    // E((1+α)Q) = ½‖∇Q‖²((1+α)² − (1+α)⁶).
    let e_oracle = 0.5 * q.gradient_norm_sq * (1.05f64.powi(2) - 1.05f64.powi(6));
    assert!(e_oracle < 0.0);
    assert!((energy(&u0) - e_oracle).abs() < 1e-8 * q.gradient_norm_sq);
    let mut cfg = SolverConfig::new(1, 3.0);
    cfg.adapt_c = 1e-3;
    let rec = evolve(&u0, 0.0, &cfg, &Schedule { rows: Every::Steps(20), snapshots: None }).unwrap();
    assert_eq!(rec.termination, Termination::BlowupDetected);
    assert!(rec.final_state.t < 3.0);
    let series = ScaleSeries::from_trajectory(&rec).unwrap();
    assert!(series.lambda_monotone);
    // The run stops once the focusing scale falls below eight cells.
    let last = rec.rows.last().unwrap();
    assert!(last.lambda < RESOLUTION_STOP_CELLS * g.spacing());
    assert!(last.lambda < 0.2 * rec.rows[0].lambda);
    // Mass holds until the final step.
    let m0 = rec.rows[0].mass;
    for r in &rec.rows[..rec.rows.len() - 1] {
        assert!((r.mass - m0).abs() < 1e-9 * m0);
    }
}

#[test]
fn explicit_blowup_is_tracked() {
    // Shorter horizon than the full −1 → −0.05 run, which is an acceptance check.
    let q = reference_ground_state(1).unwrap();
    let g = Grid::new(1, 40.0, 2048).unwrap();
    let s0 = pconf_blowup(&q, &g, -1.0).unwrap();
    let mut cfg = SolverConfig::new(1, -0.25);
    cfg.adapt_c = 2.5e-4;
    let rec = evolve(&s0, -1.0, &cfg, &sched()).unwrap();
    assert_eq!(rec.termination, Termination::ReachedTEnd);
    let want = pconf_blowup(&q, &g, -0.25).unwrap();
    let err = rel_dist(&rec.final_state.field, &want);
    assert!(err < 1e-3, "{err:e}");
}

#[test]
fn evolve_is_deterministic() {
    let g = Grid::new(2, 20.0, 64).unwrap();
    let u0 = gaussian(&g, 1.0, 1.5, 0.2);
    let cfg = SolverConfig::new(2, 0.2);
    let a = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
    let b = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.final_state.field.samples(), b.final_state.field.samples());
}

#[test]
fn underflow_is_reported() {
    let q = reference_ground_state(1).unwrap();
    let g = Grid::new(1, 60.0, 4096).unwrap();
    let u0 = place_on(&q, &g).unwrap().scale_real(1.05);
    let mut cfg = SolverConfig::new(1, 3.0);
    cfg.adapt_c = 1e-3;
    cfg.dt_min = 1e-4;
    let rec = evolve(&u0, 0.0, &cfg, &sched()).unwrap();
    assert_eq!(rec.termination, Termination::DtUnderflow);
    assert!(rec.steps > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_propagator_is_unitary(t in -50.0f64..50.0, amp in 0.1f64..3.0, w in 0.3f64..3.0, d in 1u32..=2) {
        let g = Grid::new(d, 20.0, 64).unwrap();
        let u = gaussian(&g, amp, w, 1.0).map(|z| z * Complex64::from_polar(1.0, 0.2));
        let v = free_propagator(&u, t);
        prop_assert!((v.mass() - u.mass()).abs() <= 1e-13 * u.mass());
    }

    #[test]
    fn steps_are_unitary(dt in 1e-4f64..0.05, amp in 0.1f64..2.0, d in 1u32..=2) {
        let g = Grid::new(d, 20.0, 64).unwrap();
        let u = gaussian(&g, amp, 1.4, 0.0);
        let v = step(&u, dt).unwrap();
        prop_assert!((v.mass() - u.mass()).abs() <= 1e-12 * u.mass());
    }
}
