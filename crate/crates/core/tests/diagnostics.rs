use nlslab::diagnostics::cutoff::{chi_bump, chi_weight, DEFAULT_C};
use nlslab::diagnostics::*;
use nlslab::evolution::{evolve, free_propagator, Every, Schedule, SolverConfig, Stepper};
use nlslab::ground_state::{closed_form_q_1d, reference_ground_state};
use nlslab::spectral::snapshot::Snapshot;
use nlslab::spectral::{Field, Grid};
use nlslab::symmetry::{pconf_blowup, phase_sym};
use nlslab::LabError;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn gaussian(grid: &Grid, amp: f64, width: f64) -> Field {
    Field::from_fn(grid, |p| {
        Complex64::new(amp * (-(p[0] * p[0] + p[1] * p[1]) / (width * width)).exp(), 0.0)
    })
}

/// Sum of a few chirped, boosted Gaussians, smooth on the given grid.
fn random_smooth(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let d2 = grid.dim() == 2;
    let bumps: Vec<[f64; 8]> = (0..rng.gen_range(1..4))
        .map(|_| {
            [
                rng.gen_range(0.2..1.5),
                rng.gen_range(-PI..PI),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.7..2.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.3..0.3),
            ]
        })
        .collect();
    Field::from_fn(grid, |p| {
        bumps
            .iter()
            .map(|&[a, ph, cx, cy, w, kx, ky, chirp]| {
                let dx = p[0] - cx;
                let dy = if d2 { p[1] - cy } else { 0.0 };
                let r2 = dx * dx + dy * dy;
                let theta = ph + kx * dx + if d2 { ky * dy } else { 0.0 } + chirp * r2;
                Complex64::from_polar(a * (-r2 / (w * w)).exp(), theta)
            })
            .sum()
    })
}

fn real_part(f: &Field) -> Vec<f64> {
    f.samples().iter().map(|z| z.re).collect()
}

#[test]
fn conserved_quantities_examples() {
    let q = closed_form_q_1d(&Grid::new(1, 60.0, 1024).unwrap()).unwrap();
    let c = conserved(&q.field);
    assert!(c.energy.abs() < 1e-6 * q.gradient_norm_sq);
    assert!((c.mass - q.mass).abs() < 1e-12);

    let g = Grid::new(2, 20.0, 64).unwrap();
    let u = gaussian(&g, 1.3, 1.7);
    for p in momentum(&u) {
        assert!(p.abs() < 1e-12);
    }
    let v = u.map(|z| z * Complex64::from_polar(1.0, 0.4)).add(&gaussian(&g, 0.2, 3.0)).unwrap();
    assert_eq!(conserved(&phase_sym(&v, 0.0)).mass, conserved(&v).mass);
    assert!((conserved(&phase_sym(&v, 2.1)).mass - v.mass()).abs() < 1e-13 * v.mass());
    // Energy is phase-invariant, momentum too (it is sesquilinear).
    let r = conserved(&phase_sym(&v, 2.1));
    assert!((r.energy - energy(&v)).abs() < 1e-12);
    assert!(r.momentum.iter().zip(momentum(&v)).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn energy_tensor_examples() {
    let g = Grid::new(2, 20.0, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_smooth(&g, &mut rng);
    let t = energy_tensor(&u);
    for (a, z) in t.t00.iter().zip(u.samples()) {
        assert_eq!(*a, z.norm_sqr());
    }
    let real = gaussian(&g, 1.0, 2.0);
    for comp in energy_tensor(&real).t0j {
        assert!(comp.iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn mass_flux_balances_along_trajectory() {
    for d in [1, 2] {
        let g = Grid::new(d, 20.0, if d == 1 { 512 } else { 128 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11 + d as u64);
        let u0 = random_smooth(&g, &mut rng);
        let dt = 1e-4;
        let mut st = Stepper::new(&g, false);
        let um = st.step(&u0, -dt).unwrap();
        let up = st.step(&u0, dt).unwrap();
        let tp = energy_tensor(&up).t00;
        let tm = energy_tensor(&um).t00;
        let t0 = energy_tensor(&u0);
        let mut div = vec![0.0; g.len()];
        for (j, comp) in t0.t0j.iter().enumerate() {
            let dj = Field::from_real(&g, comp).unwrap().derivative(j);
            for (acc, z) in div.iter_mut().zip(dj.samples()) {
                *acc += z.re;
            }
        }
        let resid: Vec<f64> = (0..g.len()).map(|i| (tp[i] - tm[i]) / (2.0 * dt) + div[i]).collect();
        let norm = Field::from_real(&g, &resid).unwrap().l2_norm();
        assert!(norm < 1e-4 * u0.l2_norm(), "d={d}: {norm:e}");
    }
}

fn variance_run(u0: &Field, t_end: f64, tau: f64, dt0: f64, linear: bool) -> (Vec<f64>, Vec<f64>) {
    let mut cfg = SolverConfig::new(u0.grid().dim(), t_end);
    cfg.dt0 = dt0;
    cfg.dt_min = 1e-3 * dt0;
    cfg.adapt_c = 1e-3;
    cfg.linear_only = linear;
    let rec = evolve(u0, 0.0, &cfg, &Schedule { rows: Every::Time(tau), snapshots: None }).unwrap();
    (rec.times(), rec.rows.iter().map(|r| r.variance).collect())
}

#[test]
fn virial_identity_on_gaussian() {
    let g = Grid::new(1, 40.0, 1024).unwrap();
    let u0 = gaussian(&g, 1.0, 1.0);
    let (t, v) = variance_run(&u0, 0.5, 0.01, 1e-3, false);
    let r = virial_check(&t, &v, energy(&u0)).unwrap();
    assert!(r.max_relative_defect < 0.01, "defect {}", r.max_relative_defect);
    assert!(t.last().copied() == Some(0.5));
}

#[test]
fn soliton_variance_is_constant() {
    let q = reference_ground_state(1).unwrap();
    // Splitting error deforms the profile by O(dt²); dt = 1e-4 keeps it small.
    let (_, v) = variance_run(&q.field, 1.0, 0.1, 1e-4, false);
    for x in &v {
        assert!((x - v[0]).abs() < 1e-6 * v[0]);
    }
}

#[test]
fn free_variance_is_quadratic() {
    let g = Grid::new(1, 80.0, 2048).unwrap();
    let u0 = gaussian(&g, 1.0, 1.0).map(|z| z * Complex64::new(1.0, 0.3));
    let (t, v) = variance_run(&u0, 1.0, 0.05, 1e-3, true);
    // Least-squares quadratic via the normal equations.
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&ti, &vi) in t.iter().zip(&v) {
        let basis = [1.0, ti, ti * ti];
        for r in 0..3 {
            b[r] += basis[r] * vi;
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(a, b);
    let worst = t
        .iter()
        .zip(&v)
        .map(|(&ti, &vi)| (vi - (coef[0] + coef[1] * ti + coef[2] * ti * ti)).abs() / vi)
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
    // The curvature is 16 × free energy.
    assert!((2.0 * coef[2] - 16.0 * free_energy(&u0)).abs() < 1e-8 * coef[2].abs());
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for i in 0..3 {
        let p = (i..3).max_by(|&x, &y| a[x][i].abs().total_cmp(&a[y][i].abs())).unwrap();
        a.swap(i, p);
        b.swap(i, p);
        for r in i + 1..3 {
            let f = a[r][i] / a[i][i];
            for c in i..3 {
                a[r][c] -= f * a[i][c];
            }
            b[r] -= f * b[i];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (b[i] - (i + 1..3).map(|c| a[i][c] * x[c]).sum::<f64>()) / a[i][i];
    }
    x
}

#[test]
fn virial_on_trajectory_record() {
    let g = Grid::new(1, 40.0, 1024).unwrap();
    let u0 = gaussian(&g, 1.0, 1.0);
    let mut cfg = SolverConfig::new(1, 0.2);
    cfg.adapt_c = 1e-3;
    let rec = evolve(&u0, 0.0, &cfg, &Schedule { rows: Every::Time(0.01), snapshots: None }).unwrap();
    let r = virial_check_trajectory(&rec).unwrap();
    assert!(r.max_relative_defect < 0.01);
    assert_eq!(r.second_derivative.len(), rec.rows.len() - 2);
    assert!(matches!(virial_check(&[0.0], &[1.0], 1.0), Err(LabError::InsufficientData(_))));
}

#[test]
fn sharp_gn_examples() {
    for d in [1, 2] {
        let q = reference_ground_state(d).unwrap();
        let eq = sharp_gn_defect(&q.field, q.mass);
        assert!(eq.abs() < 1e-6 * q.gradient_norm_sq, "d={d}: {eq:e}");
        let u = q.field.scale_real(0.9);
        assert!((u.mass() - 0.81 * q.mass).abs() < 1e-10 * q.mass);
        assert!(sharp_gn_defect(&u, q.mass) >= -1e-8 * u.gradient_norm_sq());
    }
}

#[test]
fn sharp_gn_randomized_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let grids = [Grid::new(1, 40.0, 512).unwrap(), Grid::new(2, 30.0, 128).unwrap()];
    let qmass = [3f64.sqrt() * PI / 2.0, reference_ground_state(2).unwrap().mass];
    let mut worst = [f64::INFINITY; 2];
    let mut printed_worst = [f64::INFINITY; 2];
    let mut printed_violations = [0usize; 2];
    let mut count = [0usize; 2];
    for i in 0..1000 {
        let k = i % 2;
        let g = &grids[k];
        let raw = random_smooth(g, &mut rng);
        let target = rng.gen_range(0.02..0.999) * qmass[k];
        let u = raw.scale_real((target / raw.mass()).sqrt());
        assert!(u.mass() < qmass[k]);
        let scale = u.gradient_norm_sq();
        let defect = sharp_gn_defect(&u, qmass[k]) / scale;
        let printed = sharp_gn_defect_printed_form(&u, qmass[k]) / scale;
        worst[k] = worst[k].min(defect);
        printed_worst[k] = printed_worst[k].min(printed);
        if printed < -1e-8 {
            printed_violations[k] += 1;
        }
        count[k] += 1;
    }
    for k in 0..2 {
        println!(
            "d={}: {} fields, min defect/‖∇u‖² standard {:.3e}, printed form {:.3e} ({} below −1e−8)",
            k + 1,
            count[k],
            worst[k],
            printed_worst[k],
            printed_violations[k]
        );
        assert!(worst[k] >= -1e-8, "d={}: {:e}", k + 1, worst[k]);
        assert!(printed_worst[k].is_finite());
    }
}

#[test]
fn lp_projection_examples() {
    let g = Grid::new(2, 2.0 * PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_smooth(&Grid::new(2, 20.0, 64).unwrap(), &mut rng);
    for n in [0.5, 2.0, 7.0] {
        let lo = lp_project(&u, n, Side::Low);
        let hi = lp_project(&u, n, Side::High);
        assert!(lo.add(&hi).unwrap().max_abs_diff(&u).unwrap() < 1e-14);
    }
    let slow = Field::from_fn(&g, |p| Complex64::from_polar(1.0, 2.0 * p[0] - 2.0 * p[1]));
    let fast = Field::from_fn(&g, |p| Complex64::from_polar(1.0, 6.0 * p[0] + 5.0 * p[1]));
    assert!(lp_project(&slow, 3.0, Side::Low).max_abs_diff(&slow).unwrap() < 1e-13);
    assert!(lp_project(&fast, 3.0, Side::Low).lp_norm(f64::INFINITY) < 1e-13);
    assert!(lp_project(&fast, 3.0, Side::High).max_abs_diff(&fast).unwrap() < 1e-13);
}

#[test]
fn cutoffs_behave() {
    for i in 0..=1000 {
        let v = chi_bump(i as f64 * 2e-3);
        assert!((0.0..=1.0).contains(&v));
    }
    let g = Grid::new(2, 20.0, 64).unwrap();
    let w = chi_weight(&g, 4.0);
    for (p, v) in g.positions().zip(&w) {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r <= 3.6 {
            assert_eq!(*v, 1.0);
        }
        if r >= 4.0 {
            assert_eq!(*v, 0.0);
        }
    }
    for (d, n) in [(1, 1024), (2, 128)] {
        for radius in [0.7, 2.0, 6.0] {
            let g = Grid::new(d, 30.0, n).unwrap();
            let w = VirialWeight::new(&g, radius);
            assert!(w.min_eigenvalue() >= -1e-10, "d={d} R={radius}");
            for (psi, p) in w.psi.iter().zip(g.positions()) {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r <= radius {
                    assert_eq!(*psi, 1.0);
                } else {
                    assert!(*psi <= 1.5 * radius / r + 1e-12);
                }
            }
        }
    }
}

#[test]
fn morawetz_examples() {
    let q = reference_ground_state(1).unwrap();
    let t = TruncationParams::new(3.0, 4.0, DEFAULT_C).unwrap();
    let cut = Cutoff::psi_virial(3.0);
    assert!(morawetz_action(&q.field, &cut, &t).unwrap().abs() < 1e-12);
    let rotated = phase_sym(&q.field, 1.1);
    assert!(morawetz_action(&rotated, &cut, &t).unwrap().abs() < 1e-12);
    assert!(matches!(morawetz_action(&q.field, &Cutoff::chi(3.0), &t), Err(LabError::InvalidParameter(_))));
}

#[test]
fn morawetz_identity_on_explicit_blowup() {
    // dM/dt from a centred difference of the exact S(t), against the measured
    // pieces of the identity.
    let q = reference_ground_state(1).unwrap();
    let g = Grid::new(1, 40.0, 8192).unwrap();
    let trunc = TruncationParams::new(1.0, 8.0, DEFAULT_C).unwrap();
    let cut = Cutoff::psi_virial(1.0);
    for t in [-0.5f64, -0.2, -0.1] {
        let h = 1e-4 * t.abs();
        let m = |s: f64| morawetz_action(&pconf_blowup(&q, &g, s).unwrap(), &cut, &trunc).unwrap();
        let dmdt = (m(t + h) - m(t - h)) / (2.0 * h);
        let terms = morawetz_terms(&pconf_blowup(&q, &g, t).unwrap(), &cut, &trunc).unwrap();
        let scale = terms.interior.abs() + terms.e1.abs() + terms.e2.abs() + terms.e3.abs();
        let identity = terms.main + terms.e1;
        assert!((dmdt - identity).abs() <= 0.1 * scale, "t={t}: dM/dt {dmdt} vs {identity} ({terms:?})");
        let lower = terms.interior - terms.e1.abs() - terms.e2.abs() - terms.e3.abs();
        assert!(dmdt >= lower - 0.1 * scale, "t={t}: dM/dt {dmdt} below {lower}");
    }
}

#[test]
fn truncated_energy_examples() {
    let g = Grid::new(1, 40.0, 512).unwrap();
    let u = gaussian(&g, 1.1, 1.3).map(|z| z * Complex64::new(0.8, 0.6));
    let wide = TruncationParams::new(19.0, 40.0, DEFAULT_C).unwrap();
    assert!((truncated_energy(&u, &wide) - energy(&u)).abs() < 1e-8);
    let z = Field::zeros(&g);
    assert_eq!(truncated_energy(&z, &wide), 0.0);
    assert_eq!(truncated_energy_ratio(&z, &wide), 0.0);
}

#[test]
fn truncated_energy_ratio_shrinks_on_explicit_blowup() {
    let q = reference_ground_state(1).unwrap();
    let g = Grid::new(1, 40.0, 8192).unwrap();
    // K well above 1/λ = 20 at the last sample.
    let trunc = TruncationParams::new(2.0, 32.0, DEFAULT_C).unwrap();
    let ratios: Vec<f64> = [-0.5, -0.2, -0.1, -0.05]
        .iter()
        .map(|&t| truncated_energy_ratio(&pconf_blowup(&q, &g, t).unwrap(), &trunc))
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(*ratios.last().unwrap() < 0.01, "{ratios:?}");
}

#[test]
fn commutator_examples() {
    // Modes |k| ≤ 1 < K/4; F(u) then lives on |k| ≤ 5 ≤ CK.
    let g = Grid::new(1, 2.0 * PI, 128).unwrap();
    let u = Field::from_fn(&g, |p| Complex64::new(0.7 + 0.3 * p[0].cos(), 0.2 * p[0].sin()));
    let t = TruncationParams::new(1.0, 8.0, 1.0).unwrap();
    assert!(commutator_error(&u, &t) < 1e-10);
    assert_eq!(commutator_error(&Field::zeros(&g), &t), 0.0);

    let g = Grid::new(1, 40.0, 1024).unwrap();
    let v = gaussian(&g, 1.3, 0.6);
    // As K → 0 both terms vanish, so the sweep starts where P_{≤CK} begins
    // to cover the spectrum of u.
    let errs: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&k| commutator_error(&v, &TruncationParams::new(5.0, k, 2.0).unwrap()))
        .collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{errs:?}");
    assert!(errs[0] > 1e-3 && *errs.last().unwrap() < 1e-10, "{errs:?}");
}

fn free_snapshots(u0: &Field, t_end: f64, dt: f64) -> Vec<Snapshot> {
    let n = (t_end / dt).round() as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            Snapshot { t, field: free_propagator(u0, t) }
        })
        .collect()
}

#[test]
fn strichartz_examples() {
    // Box wide enough that the dispersing Gaussian never wraps by t = 50.
    let g = Grid::new(1, 2400.0, 16384).unwrap();
    let u0 = gaussian(&g, 0.3, 1.0);
    let coarse = strichartz_norm(&free_snapshots(&u0, 50.0, 0.02)).unwrap();
    let fine = strichartz_norm(&free_snapshots(&u0, 50.0, 0.01)).unwrap();
    assert!(coarse.is_finite() && fine > 0.0);
    assert!(((coarse - fine) / fine).abs() < 0.01, "{coarse} vs {fine}");

    let z = Field::zeros(&Grid::new(1, 10.0, 32).unwrap());
    let zs = vec![Snapshot { t: 0.0, field: z.clone() }, Snapshot { t: 1.0, field: z }];
    assert_eq!(strichartz_norm(&zs).unwrap(), 0.0);
    assert!(matches!(strichartz_norm(&zs[..1]), Err(LabError::InsufficientData(_))));
}

#[test]
fn strichartz_of_soliton_follows_power_law() {
    let q = reference_ground_state(1).unwrap();
    let mut cfg = SolverConfig::new(1, 4.0);
    cfg.dt0 = 1e-3;
    let rec = evolve(
        &q.field,
        0.0,
        &cfg,
        &Schedule { rows: Every::Time(0.05), snapshots: Some(Every::Time(0.05)) },
    )
    .unwrap();
    let norm_to = |t: f64| {
        let upto: Vec<Snapshot> = rec.snapshots.iter().filter(|s| s.t <= t + 1e-12).cloned().collect();
        strichartz_norm(&upto).unwrap()
    };
    let ts = [0.5f64, 1.0, 2.0, 4.0];
    let logs: Vec<(f64, f64)> = ts.iter().map(|&t| (t.ln(), norm_to(t).ln())).collect();
    let n = logs.len() as f64;
    let (sx, sy) = logs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let want = 1.0 / strichartz_exponent(1);
    assert!(((slope - want) / want).abs() < 0.05, "slope {slope} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn low_projection_contracts(seed in any::<u64>(), n in 0.1f64..10.0, d in 1u32..=2) {
        let g = Grid::new(d, 20.0, 64).unwrap();
        let u = random_smooth(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(lp_project(&u, n, Side::Low).l2_norm() <= u.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn morawetz_cauchy_schwarz(seed in any::<u64>(), r in 0.5f64..6.0, k in 0.5f64..8.0, d in 1u32..=2) {
        let g = Grid::new(d, 24.0, if d == 1 { 256 } else { 64 }).unwrap();
        let u = random_smooth(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let t = TruncationParams::new(r, k, DEFAULT_C).unwrap();
        let m = morawetz_action(&u, &Cutoff::psi_virial(r), &t).unwrap();
        let iu = lp_project(&u, t.frequency(), Side::Low);
        let bound = VirialWeight::new(&g, r).sup_norm() * iu.gradient_norm_sq().sqrt() * iu.l2_norm();
        prop_assert!(m.abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn functionals_are_phase_invariant(seed in any::<u64>(), theta in -PI..PI) {
        let g = Grid::new(2, 20.0, 64).unwrap();
        let u = random_smooth(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let v = phase_sym(&u, theta);
        let t = TruncationParams::new(3.0, 2.0, DEFAULT_C).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        prop_assert!(close(energy(&u), energy(&v)));
        prop_assert!(close(variance(&u), variance(&v)));
        prop_assert!(close(truncated_energy(&u, &t), truncated_energy(&v, &t)));
        prop_assert!(close(commutator_error(&u, &t), commutator_error(&v, &t)));
        let qm = 11.7;
        prop_assert!(close(sharp_gn_defect(&u, qm), sharp_gn_defect(&v, qm)));
        let (a, b) = (real_part(&u.map(|z| Complex64::new(z.norm_sqr(), 0.0))), real_part(&v.map(|z| Complex64::new(z.norm_sqr(), 0.0))));
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-13));
    }
}
