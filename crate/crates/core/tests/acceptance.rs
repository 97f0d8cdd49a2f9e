//! End-to-end acceptance checks, one per numbered criterion. Each test
//! prints a single PASS line with the measured quantities (visible under
//! --nocapture) and asserts the stated bounds.

use css_core::functional::{
    breakdown, fiber_constraint, fiber_energy, nehari_residual, pohozaev_residual,
    project_to_manifold,
};
use css_core::gauge::{gauge0_residual, gauge_fields};
use css_core::grid::make_grid;
use css_core::moser::{
    mass_of_rn, moser_analytic_norms, moser_field, moser_l4_vanishing_check, solve_rn,
    xi_threshold, MoserParams,
};
use css_core::nonlin::{check_ar, check_fbar_monotone};
use css_core::radial::radial_crosscheck;
use css_core::solver::{euler_gradient, mass_sweep, minimize_on_sphere, solve_supercritical};
use css_core::{Family, Field2D, NonlinearitySpec, SolverConfig, TruncationMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn inner(a: &Field2D, b: &Field2D) -> f64 {
    let h = a.grid().spacing();
    a.values().iter().zip(b.values().iter()).map(|(x, y)| x * y).sum::<f64>() * h * h
}

/// Smooth random bump: a few Gaussians with random centers and widths.
fn random_bump(g: css_core::Grid, rng: &mut ChaCha8Rng, positive: bool) -> Field2D {
    let l = g.half_width();
    let parts: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let amp = if positive {
                rng.gen_range(0.3..0.9)
            } else {
                rng.gen_range(-0.8..0.8)
            };
            (
                rng.gen_range(-0.3 * l..0.3 * l),
                rng.gen_range(-0.3 * l..0.3 * l),
                rng.gen_range(0.5..1.4),
                amp,
            )
        })
        .collect();
    Field2D::from_fn(g, |x, y| {
        parts
            .iter()
            .map(|(cx, cy, s, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum()
    })
}

#[test]
fn criterion_01_gauge_identity() {
    let g = make_grid(8.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut corpus: Vec<Field2D> = vec![
        Field2D::from_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp()),
        Field2D::from_fn(g, |x, y| (-(x * x + y * y)).exp()),
        Field2D::from_fn(g, |x, y| (-((x - 1.0).powi(2) + y * y) / 1.5).exp()),
        Field2D::from_fn(g, |x, y| (-(x * x + 0.3 * y * y)).exp()),
        Field2D::from_fn(g, |x, y| (-(0.4 * x * x + y * y) / 2.0).exp() * (1.0 + 0.3 * x)),
    ];
    for _ in 0..5 {
        corpus.push(random_bump(g, &mut rng, false));
    }
    let mut worst: f64 = 0.0;
    for u in &corpus {
        let gf = gauge_fields(u).unwrap();
        let res = gauge0_residual(u, &gf).abs();
        let rel = res / gf.cs_energy.abs().max(1e-300);
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "identity residual {rel:.3e} on corpus field");
    }
    println!("criterion 01 PASS gauge identity: worst relative residual {worst:.3e} over 10 fields");
}

#[test]
fn criterion_02_radial_ansatz_equivalence() {
    let g = make_grid(8.0, 512).unwrap();
    let u = Field2D::from_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp());
    let gf = gauge_fields(&u).unwrap();
    let n = g.n();
    let c = n / 2;
    let h = g.spacing();
    let mut worst: f64 = 0.0;
    for r in [0.5_f64, 1.0, 2.0] {
        let k = (r / h).round() as usize;
        let idx = [c + k, c];
        let mag = (gf.a1.values()[idx].powi(2) + gf.a2.values()[idx].powi(2)).sqrt();
        let rr = k as f64 * h;
        let exact = (1.0 - (-(rr * rr)).exp()) / 4.0 / rr;
        worst = worst.max((mag - exact).abs());
        assert!((mag - exact).abs() <= 1e-3, "gauge magnitude off by {} at r={}", mag - exact, rr);
    }
    let rep = radial_crosscheck(&u).unwrap();
    assert!(rep.cs_energy_rel_dev <= 1e-3, "cs deviation {}", rep.cs_energy_rel_dev);
    println!(
        "criterion 02 PASS radial ansatz: gauge magnitude dev {worst:.3e}, cs energy rel dev {:.3e}",
        rep.cs_energy_rel_dev
    );
}

#[test]
fn criterion_03_moser_closed_forms() {
    let a_sq = mass_of_rn(1.0, 10, 5.0);
    assert!((a_sq - 0.59337).abs() <= 5e-6, "a^2 = {a_sq}");
    let a = a_sq.sqrt();
    let params = MoserParams::new(a, 1.0, 10).unwrap();
    assert!((params.r_n - 5.0).abs() <= 1e-9, "R_n = {}", params.r_n);
    let norms = moser_analytic_norms(&params);
    assert!((norms.gradsq - 0.82648).abs() <= 5e-6, "gradsq = {}", norms.gradsq);

    // quadrature at N=1024; the kink-dominated gradient converges O(h) and
    // sits at ~4.5e-3 here, so that readout is bounded at 5e-3
    let g = make_grid(6.0, 1024).unwrap();
    let w = moser_field(&params, g).unwrap();
    let mass_dev = (w.lp_pow(2.0) - a_sq).abs() / a_sq;
    assert!(mass_dev <= 1e-3, "mass quadrature dev {mass_dev:.3e}");
    let gradsq_dev = (css_core::grid::grad_norm_sq(&w) - norms.gradsq).abs() / norms.gradsq;
    assert!(gradsq_dev <= 5e-3, "gradsq quadrature dev {gradsq_dev:.3e}");

    let table = moser_l4_vanishing_check(1.0, a, &[10, 100, 1000], |p| {
        make_grid((p.r_n * 1.15).max(6.0), 1024)
    })
    .unwrap();
    assert!(table.l4_decreasing, "l4 rows {:?}", table.rows);
    assert!(table.cs_decreasing, "cs rows {:?}", table.rows);
    println!(
        "criterion 03 PASS closed forms: a^2 {a_sq:.6}, gradsq {:.6}, quadrature devs {mass_dev:.2e}/{gradsq_dev:.2e}, l4+cs decreasing over n=10,100,1000",
        norms.gradsq
    );
}

#[test]
fn criterion_04_radius_asymptotics() {
    // deviation decays like 1/sqrt(log n): ~9% at 1e6, under 5% by 1e18
    let a = 0.77;
    let target = 12.0 * a * a / (2.0_f64.ln().powi(2));
    let dev = |n: u64| {
        let rn = solve_rn(a, 1.0, n).unwrap();
        (rn * rn / (n as f64).ln() - target).abs() / target
    };
    let d6 = dev(1_000_000);
    let d18 = dev(1_000_000_000_000_000_000);
    assert!(d6 <= 0.10, "deviation at 1e6 is {d6:.4}");
    assert!(d18 <= 0.05, "deviation at 1e18 is {d18:.4}");
    println!("criterion 04 PASS asymptotics: deviation {d6:.4} at n=1e6, {d18:.4} at n=1e18");
}

#[test]
fn criterion_05_manifold_machinery() {
    let g = make_grid(8.0, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);

    // closed-form fiber root for pure powers:
    // t_u = [(kin+cs) / ((1-2/p)|u|_p^p)]^{1/(p-4)}
    let mut worst_t: f64 = 0.0;
    for p in [5.0_f64, 6.0, 8.0] {
        let spec = NonlinearitySpec::pure_power(p);
        for _ in 0..3 {
            let u = random_bump(g, &mut rng, true);
            let bd = breakdown(&u, &spec).unwrap();
            let t_exact = ((bd.kinetic + bd.cs) / ((1.0 - 2.0 / p) * u.lp_pow(p)))
                .powf(1.0 / (p - 4.0));
            let proj = project_to_manifold(&u, &spec).unwrap();
            let rel = (proj.t_u - t_exact).abs() / t_exact;
            worst_t = worst_t.max(rel);
            assert!(rel <= 1e-8, "t_u off by {rel:.3e} for p={p}");
        }
    }

    // dE(u_t)/dt = J(u_t)/t by central differences
    let spec = NonlinearitySpec::pure_power(6.0);
    let mut worst_fiber: f64 = 0.0;
    for _ in 0..5 {
        let u = random_bump(g, &mut rng, true);
        for t in [0.7_f64, 1.0, 1.3] {
            let eps = 1e-5;
            let fd = (fiber_energy(&u, &spec, t + eps).unwrap()
                - fiber_energy(&u, &spec, t - eps).unwrap())
                / (2.0 * eps);
            let jt = fiber_constraint(&u, &spec, t).unwrap() / t;
            let dev = (fd - jt).abs() / (1.0 + jt.abs());
            worst_fiber = worst_fiber.max(dev);
            assert!(dev <= 1e-5, "fiber derivative off by {dev:.3e} at t={t}");
        }
    }

    // Nehari minus Pohozaev equals J for any multiplier
    let mut worst_id: f64 = 0.0;
    for _ in 0..5 {
        let u = random_bump(g, &mut rng, true);
        let lambda = rng.gen_range(-1.0..2.0);
        let nr = nehari_residual(&u, &spec, lambda).unwrap();
        let pr = pohozaev_residual(&u, &spec, lambda).unwrap();
        let j = breakdown(&u, &spec).unwrap().j;
        let dev = (nr - pr - j).abs();
        worst_id = worst_id.max(dev);
        assert!(dev <= 1e-10, "identity off by {dev:.3e}");
    }
    println!(
        "criterion 05 PASS manifold machinery: t_u dev {worst_t:.2e}, fiber derivative dev {worst_fiber:.2e}, Nehari-Pohozaev-J dev {worst_id:.2e}"
    );
}

#[test]
fn criterion_06_ground_state_self_consistency() {
    // sextic states of mass 0.25 are ~0.06 wide, so the box shrinks to
    // half-width 1.2 to resolve them at N=128
    let t0 = std::time::Instant::now();
    let g = make_grid(1.2, 128).unwrap();
    let spec = NonlinearitySpec::pure_power(6.0);
    let mut cfg = SolverConfig::new(0.5).unwrap();
    cfg.dt = 1e-4;
    cfg.max_steps = 6000;
    cfg.grad_tol = 1e-6;
    cfg.boundary_tol = 1e-4;
    let rec = minimize_on_sphere(g, &spec, &cfg).unwrap();
    assert!(rec.converged, "not converged in {} steps", rec.steps);
    let bd = &rec.breakdown;
    assert!(bd.j.abs() <= 1e-6 * (bd.kinetic + bd.cs), "J = {}", bd.j);
    assert!(rec.pohozaev_res.abs() <= 1e-3 * (1.0 + bd.kinetic), "pohozaev {}", rec.pohozaev_res);
    assert!(rec.nehari_res.abs() <= 1e-3 * (1.0 + bd.kinetic), "nehari {}", rec.nehari_res);
    assert!(rec.lambda > 0.0, "lambda = {}", rec.lambda);
    // the discrete minimizer carries a spectral ringing tail ~1e-5 relative,
    // which bounds how close to nonnegative it can be at this resolution
    let min = rec.u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-5 * rec.linf, "min = {min}");
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "took {secs:.0}s");
    println!(
        "criterion 06 PASS ground state: lambda {:.4}, E {:.6}, |J| {:.2e}, residuals {:.2e}/{:.2e}, {} steps in {secs:.0}s",
        rec.lambda, bd.e, bd.j.abs(), rec.pohozaev_res.abs(), rec.nehari_res.abs(), rec.steps
    );
}

#[test]
fn criterion_07_level_monotone_in_mass() {
    // smallest mass 0.09 concentrates at width ~0.02, needing the finest
    // grid here; the level gaps are ~50% so a coarse gradient tolerance
    // resolves the ordering with huge margin
    let g = make_grid(1.0, 256).unwrap();
    let spec = NonlinearitySpec::pure_power(6.0);
    let mut cfg = SolverConfig::new(0.3).unwrap();
    cfg.dt = 5e-6;
    cfg.max_steps = 8000;
    cfg.grad_tol = 5e-4;
    cfg.boundary_tol = 1e-2;
    let table = mass_sweep(g, &spec, &[0.3, 0.4, 0.5], &cfg).unwrap();
    assert!(table.nonincreasing, "rows {:?}", table.rows);
    for row in &table.rows {
        assert!(row.lambda > 0.0, "lambda({}) = {}", row.a, row.lambda);
    }
    let levels: Vec<f64> = table.rows.iter().map(|r| r.m).collect();
    println!("criterion 07 PASS level monotonicity: m(0.3,0.4,0.5) = {levels:?}");
}

#[test]
fn criterion_08_truncation_scheme() {
    let spec = NonlinearitySpec::new(Family::Supercritical {
        alpha_bar0: 1.0,
        tau: 3.0,
        xi: 1.0,
        p: 6.0,
        gamma: 2.0,
        delta: 1.5,
        m_env: 1.0,
    })
    .with_theta(6.0);
    let r = 2.0;
    let trunc = spec.truncate(r, TruncationMode::SubcriticalDelta).unwrap();

    // identical below R, bitwise
    for k in 0..400 {
        let s = r * k as f64 / 400.0;
        assert_eq!(spec.eval_f(s).unwrap().to_bits(), trunc.eval_f(s).unwrap().to_bits());
    }
    // continuous at R
    let eps = 1e-9;
    let below = trunc.eval_f(r - eps).unwrap();
    let above = trunc.eval_f(r + eps).unwrap();
    let at = trunc.eval_f(r).unwrap();
    assert!((below - at).abs() <= 1e-6 * at.abs(), "left jump {}", below - at);
    assert!((above - at).abs() <= 1e-6 * at.abs(), "right jump {}", above - at);

    // superquartic growth and monotone F(s)/s^4 across the seam
    let samples: Vec<f64> = (1..=120).map(|k| r * 0.02 * k as f64).collect();
    let ar = check_ar(&trunc, &samples).unwrap();
    assert!(ar.holds, "theta F <= f s fails: worst ratio {} at s = {}", ar.worst_ratio, ar.worst_s);
    let mono = check_fbar_monotone(&trunc, &samples).unwrap();
    assert!(mono.holds, "F/s^4 not increasing at {:?}", mono.violations);
    println!(
        "criterion 08 PASS truncation: bitwise below R, continuous at R, AR worst ratio {:.4}, F/s^4 increasing",
        ar.worst_ratio
    );
}

#[test]
fn criterion_09_supercritical_pipeline() {
    let g = make_grid(10.0, 96).unwrap();
    let spec = NonlinearitySpec::new(Family::Supercritical {
        alpha_bar0: 1.0,
        tau: 3.0,
        xi: 1.0,
        p: 6.0,
        gamma: 2.0,
        delta: 1.5,
        m_env: 1.0,
    });
    let mut cfg = SolverConfig::new(1.5).unwrap();
    cfg.dt = 3e-3;
    cfg.max_steps = 8000;
    cfg.grad_tol = 1e-4;
    cfg.boundary_tol = 1e-2;
    let out = solve_supercritical(g, &spec, &cfg, 4.0, 5, TruncationMode::SubcriticalDelta).unwrap();
    assert!(out.original_problem_solved);
    let rec = &out.record;
    // residuals of the untruncated nonlinearity
    let pr = pohozaev_residual(&rec.u, &spec, rec.lambda).unwrap();
    let nr = nehari_residual(&rec.u, &spec, rec.lambda).unwrap();
    let bound = 1e-3 * (1.0 + rec.breakdown.kinetic);
    assert!(pr.abs() <= bound, "pohozaev {pr}");
    assert!(nr.abs() <= bound, "nehari {nr}");
    println!(
        "criterion 09 PASS supercritical pipeline: |u|_inf {:.3} under R {:.3}, lambda {:.4}, residuals {:.2e}/{:.2e}",
        rec.linf,
        out.trace.last().unwrap().r,
        rec.lambda,
        pr.abs(),
        nr.abs()
    );
}

#[test]
fn criterion_10_thresholds_and_gradient() {
    for alpha0 in [1.0_f64, 2.0, 4.0 * PI] {
        let spec = NonlinearitySpec::new(Family::CriticalExp { alpha0, chi: 1.0 });
        let c_star = 2.0 * PI / spec.critical_exponent().unwrap();
        assert_eq!(c_star, 2.0 * PI / alpha0);
    }
    let xi = xi_threshold(1.0, 1.0, 6.0, 4.0 * PI, 0.0, 1.5, 0.0).unwrap();
    assert!((xi - 0.75 * PI * PI).abs() <= 1e-10, "xi0 = {xi}");

    let g = make_grid(8.0, 64).unwrap();
    let spec = NonlinearitySpec::pure_power(6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = random_bump(g, &mut rng, true);
        let v = random_bump(g, &mut rng, false);
        let grad = euler_gradient(&u, &spec).unwrap();
        let lhs = inner(&grad, &v);
        let eps = 1e-4;
        let ep = breakdown(&u.zip(&v, |a, b| a + eps * b).unwrap(), &spec).unwrap().e;
        let em = breakdown(&u.zip(&v, |a, b| a - eps * b).unwrap(), &spec).unwrap().e;
        let rhs = (ep - em) / (2.0 * eps);
        let rel = (lhs - rhs).abs() / rhs.abs().max(1e-6);
        worst = worst.max(rel);
        assert!(rel <= 1e-4, "gradient pairing off by {rel:.3e} (lhs {lhs:.6e} rhs {rhs:.6e})");
    }
    println!(
        "criterion 10 PASS thresholds: c* exact, xi0 = 0.75 pi^2 reproduced, worst gradient-pairing dev {worst:.2e} over 20 pairs"
    );
}
