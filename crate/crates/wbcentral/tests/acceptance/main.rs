//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).


use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wbcentral::fullkt::{self, step_fully_discrete};
use wbcentral::grid::{fill_ghosts, make_grid, BcKind, BoundarySpec, Grid2D, StateField};
use wbcentral::harness::{
    l1_error, run_convergence, run_experiment, ExperimentConfig, ExperimentKind, SchemeKind,
};
use wbcentral::models::{
    euler_flux_x, euler_flux_y, euler_speed_bounds, euler_to_conserved, Axis, EulerModel,
    PotentialGradient, PrimitiveState, ScalarModel, StationaryField, ZeroStationary,
};
use wbcentral::reconstruct::{interface_states, mc_theta_slopes};
use wbcentral::semikt::{
    self, integrate, max_principle_monitor, semi_discrete_rhs, IntegrateOptions, StepControl,
    TimeIntegrator,
};
use wbcentral::SchemeConfig;

fn report(name: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name}: {detail}");
}

// --------------------------------------------------------------------------
// Criterion 1: well-balancedness of both schemes on the isothermal
// equilibrium (ρ0 = 1.21, p0 = 1, φ = (1,1)), 50×50, t = 0.25, ≤ 1e−12.
// --------------------------------------------------------------------------
#[test]
fn criterion_1_well_balancedness() {
    let mut worst: f64 = 0.0;
    for scheme in [SchemeKind::FullyDiscrete, SchemeKind::SemiDiscrete] {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Isothermal);
        cfg.nx = 50;
        cfg.ny = 50;
        cfg.t_end = 0.25;
        cfg.scheme = scheme;
        cfg.write_snapshots = false;
        let run = run_experiment(&cfg).expect("isothermal run");
        for c in 0..4 {
            worst = worst.max(run.max_deviation[c]);
        }
    }
    report(
        "criterion 1 (well-balancedness, both schemes)",
        worst <= 1e-12,
        &format!("max |q − q̃| = {worst:.3e} (tolerance 1e-12)"),
    );
}

// --------------------------------------------------------------------------
// Criterion 2: grid-convergence table of the fully-discrete scheme on the
// perturbed isothermal background (CFL 0.485): grids 40², 80², 160² against
// a 320² self-reference. Rates must increase strictly and reach ≥ 1.3 on the
// finest level for ρ, p, E; L1 errors must lie within a factor of 3 of the
// published values at matching N.
// --------------------------------------------------------------------------
#[test]
fn criterion_2_convergence_table() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::PerturbedIsothermalX);
    cfg.cfl = 0.485;
    // Published table values: the pulse amplitude is not stated alongside
    // them; η = 4e-3 reproduces their magnitudes (the background is exactly
    // well balanced, so the error scales linearly with η).
    cfg.eta = 4e-3;
    cfg.write_snapshots = false;
    let table = run_convergence(&cfg, &[40, 80, 160, 320]).expect("convergence study");
    print!("{}", table.render());

    let published = [
        [1.87e-5, 8.93e-6, 3.42e-6], // rho at 40, 80, 160
        [1.67e-5, 1.05e-5, 3.89e-6], // p
        [4.19e-5, 2.62e-5, 9.72e-6], // E
    ];
    let names = ["rho", "p", "E"];
    let mut pass = true;
    let mut detail = String::new();
    for var in 0..3 {
        let errs: Vec<f64> = table.rows.iter().map(|r| r.err[var]).collect();
        let r80 = table.rows[1].rate[var].unwrap();
        let r160 = table.rows[2].rate[var].unwrap();
        if !(r160 > r80) {
            pass = false;
            detail.push_str(&format!("{} rates not increasing ({r80:.2} → {r160:.2}); ", names[var]));
        }
        if !(r160 >= 1.3) {
            pass = false;
            detail.push_str(&format!("{} finest rate {r160:.2} < 1.3; ", names[var]));
        }
        for (level, (e, t)) in errs.iter().zip(published[var]).enumerate() {
            let ratio = e / t;
            if !(ratio <= 3.0 && ratio >= 1.0 / 3.0) {
                pass = false;
                detail.push_str(&format!(
                    "{} level {} error {e:.3e} is {ratio:.2}x the published {t:.3e}; ",
                    names[var], level
                ));
            }
        }
    }
    if detail.is_empty() {
        detail = format!(
            "rates rho {:.2}→{:.2}, p {:.2}→{:.2}, E {:.2}→{:.2}; errors within 3x of published",
            table.rows[1].rate[0].unwrap(),
            table.rows[2].rate[0].unwrap(),
            table.rows[1].rate[1].unwrap(),
            table.rows[2].rate[1].unwrap(),
            table.rows[1].rate[2].unwrap(),
            table.rows[2].rate[2].unwrap(),
        );
    }
    report("criterion 2 (convergence table)", pass, &detail);
}

// --------------------------------------------------------------------------
// Criterion 3: scalar maximum principle. 2D Burgers on a 64² periodic grid,
// randomized smooth initial data over 20 seeds, forward Euler with the CFL
// ratio clamped to 1/8: zero violations of max non-increase over 200 steps.
// --------------------------------------------------------------------------
fn random_smooth_scalar(grid: &Grid2D, seed: u64) -> StateField<1> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for p in 1..=3u32 {
        for q in 1..=3u32 {
            modes.push((
                rng.gen_range(-1.0..1.0) / (p + q) as f64,
                p as f64,
                q as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ));
        }
    }
    StateField::from_centers(grid, |x, y| {
        let mut u = 0.0;
        for (a, p, q, ph1, ph2) in &modes {
            u += a
                * (std::f64::consts::TAU * p * x + ph1).sin()
                * (std::f64::consts::TAU * q * y + ph2).sin();
        }
        [u]
    })
}

#[test]
fn criterion_3_maximum_principle() {
    let grid = make_grid(64, 64, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
    let model = ScalarModel::Burgers;
    let cfg = SchemeConfig {
        bc: BoundarySpec::uniform(BcKind::Periodic),
        ..SchemeConfig::default()
    };
    let mut total_violations = 0usize;
    let mut all_cfl_ok = true;
    for seed in 0..20u64 {
        let dev0 = random_smooth_scalar(&grid, 1000 + seed);
        let opts = IntegrateOptions {
            method: TimeIntegrator::ForwardEuler,
            control: StepControl::MaxPrincipleBound(0.125),
            record: true,
            max_steps: 200,
        };
        let run = integrate(&dev0, &ZeroStationary, &model, &cfg, f64::INFINITY, &opts)
            .expect("burgers run");
        assert_eq!(run.steps, 200);
        let states: Vec<_> = run.recorded.iter().map(|(_, s)| s.clone()).collect();
        let cfl_ok = run.cfl_reports.iter().all(|r| r.satisfied);
        all_cfl_ok &= cfl_ok;
        let rep = max_principle_monitor(&states, TimeIntegrator::ForwardEuler, cfl_ok);
        total_violations += rep.violations.len();
    }
    report(
        "criterion 3 (maximum principle, 20 seeds x 200 steps)",
        total_violations == 0 && all_cfl_ok,
        &format!("{total_violations} violations, CFL 1/8 held: {all_cfl_ok}"),
    );
}

// --------------------------------------------------------------------------
// Criterion 4: moving equilibrium preserved on 60×10 to t = 0.25, ≤ 1e−11.
// --------------------------------------------------------------------------
#[test]
fn criterion_4_moving_equilibrium() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::MovingX);
    cfg.write_snapshots = false;
    let run = run_experiment(&cfg).expect("moving equilibrium run");
    let worst = run.max_deviation.iter().cloned().fold(0.0, f64::max);
    report(
        "criterion 4 (moving equilibrium 60x10)",
        worst <= 1e-11,
        &format!("max |q − q̃| = {worst:.3e} (tolerance 1e-11)"),
    );
}

// --------------------------------------------------------------------------
// Criterion 5: gravitational shock tube at 100/200/400×10 vs the 800×10 run:
// the L1(ρ) distance decreases strictly under refinement, the evolved
// density deviation never leaves its initial range by more than 1e−3 (the
// full density necessarily exceeds its initial maximum as gravity compresses
// gas against the reflecting wall, so non-oscillation is checked on the
// deviation the limiter acts on), and the projection reconstruction is at
// least as close to the finest run as the piecewise-constant variant.
// --------------------------------------------------------------------------
#[test]
fn criterion_5_shock_tube() {
    let base = ExperimentConfig::defaults(ExperimentKind::ShockTube);
    let run_at = |nx: usize, recon: bool| {
        let mut cfg = base.clone();
        cfg.nx = nx;
        cfg.write_snapshots = false;
        cfg.projection_reconstruction = recon;
        let grid = make_grid(cfg.nx, cfg.ny, cfg.bounds, 2).unwrap();
        let init_range = cfg.initial_deviation(&grid).min_max_interior(0);
        let run = run_experiment(&cfg).expect("shock tube run");
        (run, init_range)
    };
    let (r100, i100) = run_at(100, true);
    let (r200, i200) = run_at(200, true);
    let (r400, i400) = run_at(400, true);
    let (r800, _) = run_at(800, true);
    let (r200nr, _) = run_at(200, false);

    let reference = &r800.snapshot_fields.last().unwrap().1;
    let e100 = l1_error(&r100.snapshot_fields.last().unwrap().1, reference, 0).unwrap();
    let e200 = l1_error(&r200.snapshot_fields.last().unwrap().1, reference, 0).unwrap();
    let e400 = l1_error(&r400.snapshot_fields.last().unwrap().1, reference, 0).unwrap();
    let e200nr = l1_error(&r200nr.snapshot_fields.last().unwrap().1, reference, 0).unwrap();
    let decreasing = e100 > e200 && e200 > e400;

    let mut overshoot: f64 = 0.0;
    for (run, init) in [(&r100, i100), (&r200, i200), (&r400, i400)] {
        let (lo, hi) = run.dev_rho_range;
        overshoot = overshoot.max(init.0 - lo).max(hi - init.1);
    }
    let pass = decreasing && overshoot <= 1e-3 && e200 <= e200nr;
    report(
        "criterion 5 (shock tube refinement + non-oscillation)",
        pass,
        &format!(
            "L1(rho) vs 800x10: {e100:.3e} > {e200:.3e} > {e400:.3e} ({decreasing}); \
             deviation overshoot {overshoot:.2e} (tol 1e-3); \
             reconstruction {e200:.3e} <= no-reconstruction {e200nr:.3e}"
        ),
    );
}

// --------------------------------------------------------------------------
// Criterion 6: perturbation background cleanliness. The η = 0 run is
// criterion 1. With η = 1e−2 the solution must stay within 1e−10 of the
// equilibrium outside the causal cone of the pulse. The Gaussian's own tail
// crosses 1e−10 at radius r_eff = sqrt(ln(η/((γ−1)·1e−10)))/10 ≈ 0.44, so
// the cone radius is r_eff + c_max·t; early snapshot times keep the exterior
// region non-empty on [0,1]².
// --------------------------------------------------------------------------
#[test]
fn criterion_6_perturbation_cleanliness() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::PerturbedIsothermalX);
    cfg.nx = 100;
    cfg.ny = 100;
    cfg.eta = 1e-2;
    cfg.write_snapshots = false;
    cfg.snapshot_times = vec![0.01, 0.02, 0.03, 0.04];
    let run = run_experiment(&cfg).expect("perturbed run");
    let stat = cfg.stationary();
    let grid = make_grid(cfg.nx, cfg.ny, cfg.bounds, 2).unwrap();

    let tol = 1e-10;
    let r_eff = ((cfg.eta / ((cfg.gamma - 1.0) * tol)).ln()).sqrt() / 10.0;

    // Maximal signal speed seen anywhere in the run.
    let mut c_max: f64 = 0.0;
    for (_, full) in &run.snapshot_fields {
        for (j, k) in full.interior() {
            let q = full.at(j, k);
            let w = wbcentral::models::euler_primitive(&q, cfg.gamma).unwrap();
            let c = (cfg.gamma * w.p / w.rho).sqrt();
            c_max = c_max.max(w.u1.abs() + c).max(w.u2.abs() + c);
        }
    }

    let mut worst: f64 = 0.0;
    let mut checked_cells = 0usize;
    for (t, full) in &run.snapshot_fields {
        let radius = r_eff + c_max * t;
        for (j, k) in full.interior() {
            if (grid.xc(j) - 0.5).abs() <= radius {
                continue;
            }
            checked_cells += 1;
            let q = full.at(j, k);
            let qt = stat.value(grid.xc(j), grid.yc(k));
            for c in 0..4 {
                worst = worst.max((q[c] - qt[c]).abs());
            }
        }
    }
    report(
        "criterion 6 (background cleanliness outside the causal cone)",
        worst <= tol && checked_cells > 0,
        &format!(
            "max |q − q̃| = {worst:.3e} over {checked_cells} cells outside r_eff {r_eff:.3} + \
             c_max {c_max:.3}·t (tolerance 1e-10)"
        ),
    );
}

// --------------------------------------------------------------------------
// Criterion 7: oracle equivalence on ≤ 4×4 periodic instances, 1e−12.
// --------------------------------------------------------------------------
struct ScalarOracleLaw {
    model: ScalarModel,
    base: fn(f64, f64) -> [f64; 1],
}

impl oracle::OracleLaw<1> for ScalarOracleLaw {
    fn fx(&self, q: [f64; 1]) -> [f64; 1] {
        [self.model.flux(Axis::X, q[0])]
    }
    fn fy(&self, q: [f64; 1]) -> [f64; 1] {
        [self.model.flux(Axis::Y, q[0])]
    }
    fn bx(&self, q: [f64; 1]) -> (f64, f64) {
        let d = self.model.dflux(Axis::X, q[0]);
        (d, d)
    }
    fn by(&self, q: [f64; 1]) -> (f64, f64) {
        let d = self.model.dflux(Axis::Y, q[0]);
        (d, d)
    }
    fn src(&self, _dq: [f64; 1], _x: f64, _y: f64) -> [f64; 1] {
        [0.0]
    }
    fn qt(&self, x: f64, y: f64) -> [f64; 1] {
        (self.base)(x, y)
    }
}

/// Constant stationary base: the setting of the scalar maximum-principle
/// analysis, where the convex-combination rewrite of the forward-Euler step
/// is an exact identity. (With a spatially varying base the in-cell flux
/// difference mixes two interface bases and no longer vanishes at
/// limiter-clipped cells, leaving an O(Δq̃) remainder in the ratio form.)
fn scalar_const_base(_x: f64, _y: f64) -> [f64; 1] {
    [0.3]
}

fn scalar_base(x: f64, y: f64) -> [f64; 1] {
    [0.25 + 0.05 * (std::f64::consts::TAU * x).sin() * (std::f64::consts::TAU * y).cos()]
}

struct EulerOracleLaw {
    gamma: f64,
    gx: f64,
    gy: f64,
}

impl EulerOracleLaw {
    // Independent transcription of the Euler fluxes and eigenvalue bounds.
    fn pressure(&self, q: [f64; 4]) -> f64 {
        (self.gamma - 1.0) * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / q[0])
    }
}

impl oracle::OracleLaw<4> for EulerOracleLaw {
    fn fx(&self, q: [f64; 4]) -> [f64; 4] {
        let p = self.pressure(q);
        let u = q[1] / q[0];
        [q[1], q[1] * u + p, q[2] * u, (q[3] + p) * u]
    }
    fn fy(&self, q: [f64; 4]) -> [f64; 4] {
        let p = self.pressure(q);
        let v = q[2] / q[0];
        [q[2], q[1] * v, q[2] * v + p, (q[3] + p) * v]
    }
    fn bx(&self, q: [f64; 4]) -> (f64, f64) {
        let c = (self.gamma * self.pressure(q) / q[0]).sqrt();
        let u = q[1] / q[0];
        (u - c, u + c)
    }
    fn by(&self, q: [f64; 4]) -> (f64, f64) {
        let c = (self.gamma * self.pressure(q) / q[0]).sqrt();
        let v = q[2] / q[0];
        (v - c, v + c)
    }
    fn src(&self, dq: [f64; 4], _x: f64, _y: f64) -> [f64; 4] {
        [
            0.0,
            -dq[0] * self.gx,
            -dq[0] * self.gy,
            -dq[1] * self.gx - dq[2] * self.gy,
        ]
    }
    fn qt(&self, x: f64, y: f64) -> [f64; 4] {
        euler_base(x, y)
    }
}

fn euler_base(x: f64, y: f64) -> [f64; 4] {
    let tau = std::f64::consts::TAU;
    let rho = 1.0 + 0.1 * (tau * x).sin() * (tau * y).cos();
    let u1 = 0.1 * (tau * x).cos();
    let u2 = -0.05 * (tau * y).sin();
    let p = 1.0 + 0.08 * (tau * (x + y)).sin();
    euler_to_conserved(
        &PrimitiveState { rho, u1, u2, p },
        1.4,
    )
}

fn random_scalar_dev(grid: &Grid2D, seed: u64, amp: f64) -> StateField<1> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = StateField::zeros(grid);
    for (j, k) in dev.interior().collect::<Vec<_>>() {
        let v = rng.gen_range(-amp..amp);
        dev.set(j, k, [v]);
    }
    dev
}

fn torus_of<const N: usize>(dev: &StateField<N>) -> Vec<[f64; N]> {
    let mut out = Vec::with_capacity(dev.grid.nx * dev.grid.ny);
    for k in 0..dev.grid.ny as isize {
        for j in 0..dev.grid.nx as isize {
            out.push(dev.at(j, k));
        }
    }
    out
}

fn max_diff<const N: usize>(dev: &StateField<N>, flat: &[[f64; N]]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..dev.grid.ny as isize {
        for j in 0..dev.grid.nx as isize {
            let a = dev.at(j, k);
            let b = flat[(k as usize) * dev.grid.nx + j as usize];
            for c in 0..N {
                worst = worst.max((a[c] - b[c]).abs());
            }
        }
    }
    worst
}

#[test]
fn criterion_7_oracle_equivalence() {
    let cfg = SchemeConfig {
        bc: BoundarySpec::uniform(BcKind::Periodic),
        ..SchemeConfig::default()
    };
    let mut worst_full: f64 = 0.0;
    let mut worst_semi: f64 = 0.0;

    // Scalar instances: one fully-discrete step and one rhs evaluation.
    for seed in [7u64, 8, 9] {
        let grid = make_grid(4, 4, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
        let og = oracle::OracleGrid {
            nx: 4,
            ny: 4,
            dx: grid.dx,
            dy: grid.dy,
        };
        let model = ScalarModel::Burgers;
        let law = ScalarOracleLaw {
            model,
            base: scalar_base,
        };
        let dev = random_scalar_dev(&grid, seed, 0.4);
        let flat = torus_of(&dev);
        let dt = 0.2 * grid.dx / 1.0;
        let stepped = step_fully_discrete(&dev, &scalar_base, &model, &cfg, dt).unwrap();
        let expect = oracle::full_step(&og, &law, &flat, cfg.theta, cfg.eps, dt);
        worst_full = worst_full.max(max_diff(&stepped, &expect));

        let mut ghosted = dev.clone();
        fill_ghosts(&mut ghosted, &cfg.bc, &model);
        let rhs = semi_discrete_rhs(&ghosted, &scalar_base, &model, &cfg).unwrap();
        let expect = oracle::semi_rhs(&og, &law, &flat, cfg.theta);
        worst_semi = worst_semi.max(max_diff(&rhs, &expect));
    }

    // Euler instances.
    for seed in [21u64, 22] {
        let grid = make_grid(4, 4, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
        let og = oracle::OracleGrid {
            nx: 4,
            ny: 4,
            dx: grid.dx,
            dy: grid.dy,
        };
        let (gx, gy) = (0.3, -0.2);
        let model = EulerModel::new(1.4, PotentialGradient::Constant { gx, gy }).unwrap();
        let law = EulerOracleLaw { gamma: 1.4, gx, gy };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dev = StateField::<4>::zeros(&grid);
        for (j, k) in dev.interior().collect::<Vec<_>>() {
            dev.set(
                j,
                k,
                [
                    rng.gen_range(-0.03..0.03),
                    rng.gen_range(-0.03..0.03),
                    rng.gen_range(-0.03..0.03),
                    rng.gen_range(-0.03..0.03),
                ],
            );
        }
        let flat = torus_of(&dev);
        let dt = 0.08 * grid.dx / 2.4;
        let stepped = step_fully_discrete(&dev, &euler_base, &model, &cfg, dt).unwrap();
        let expect = oracle::full_step(&og, &law, &flat, cfg.theta, cfg.eps, dt);
        worst_full = worst_full.max(max_diff(&stepped, &expect));

        let mut ghosted = dev.clone();
        fill_ghosts(&mut ghosted, &cfg.bc, &model);
        let rhs = semi_discrete_rhs(&ghosted, &euler_base, &model, &cfg).unwrap();
        let expect = oracle::semi_rhs(&og, &law, &flat, cfg.theta);
        worst_semi = worst_semi.max(max_diff(&rhs, &expect));
    }

    // Forward-Euler step vs the expanded convex-combination form on random
    // scalar data.
    let mut worst_convex: f64 = 0.0;
    for seed in [31u64, 32, 33] {
        let grid = make_grid(4, 4, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
        let og = oracle::OracleGrid {
            nx: 4,
            ny: 4,
            dx: grid.dx,
            dy: grid.dy,
        };
        let model = ScalarModel::Burgers;
        let law = ScalarOracleLaw {
            model,
            base: scalar_const_base,
        };
        let dev = random_scalar_dev(&grid, seed, 0.5);
        let flat = torus_of(&dev);
        // CFL 1/8 clamp: |F'| ≤ max|dev| + max|base| < 0.9.
        let dt = 0.125 * grid.dx.min(grid.dy) / 0.9;
        let mut ghosted = dev.clone();
        fill_ghosts(&mut ghosted, &cfg.bc, &model);
        let base = |x: f64, y: f64| scalar_const_base(x, y);
        let stepped =
            semikt::advance(&ghosted, &base, &model, &cfg, dt, TimeIntegrator::ForwardEuler)
                .unwrap();
        let expect = oracle::scalar_convex_step(&og, &law, &flat, cfg.theta, dt);
        worst_convex = worst_convex.max(max_diff(&stepped, &expect));
    }

    let pass = worst_full <= 1e-12 && worst_semi <= 1e-12 && worst_convex <= 1e-12;
    report(
        "criterion 7 (oracle equivalence)",
        pass,
        &format!(
            "full step {worst_full:.3e}, semi rhs {worst_semi:.3e}, \
             convex-combination form {worst_convex:.3e} (tolerance 1e-12)"
        ),
    );
}

// --------------------------------------------------------------------------
// Criterion 8: property suites — geometry partition, limiter local maximum
// principle, flux consistency, conservation under periodic BCs, and the
// deviation-flux Jacobian agreement.
// --------------------------------------------------------------------------
#[test]
fn criterion_8_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut detail = String::new();

    // Geometry partition: Σ|C^I| = dx·dy per cell on randomized fields and
    // rectangular cells.
    let mut worst_partition: f64 = 0.0;
    for (nx, ny, bounds) in [
        (6usize, 5usize, [0.0, 1.0, 0.0, 1.0]),
        (4, 9, [0.0, 2.0, -1.0, 1.0]),
        (8, 3, [0.0, 1.0, 0.0, 0.25]),
    ] {
        let grid = make_grid(nx, ny, bounds, 2).unwrap();
        let model = ScalarModel::Burgers;
        let cfg = SchemeConfig {
            bc: BoundarySpec::uniform(BcKind::Periodic),
            ..SchemeConfig::default()
        };
        let mut dev = StateField::<1>::zeros(&grid);
        for (j, k) in dev.interior().collect::<Vec<_>>() {
            dev.set(j, k, [rng.gen_range(-1.0..1.0)]);
        }
        fill_ghosts(&mut dev, &cfg.bc, &model);
        let slopes = mc_theta_slopes(&dev, cfg.theta);
        let iface = interface_states(&dev, &slopes);
        let full = fullkt::full_interface_states(&iface, &ZeroStationary, &grid);
        let speeds = fullkt::local_speeds(&full, &model, cfg.eps, &cfg.bc, &grid).unwrap();
        let (ma, mb) = speeds.max_interior(&grid);
        let dt = 0.4 * (grid.dx / ma).min(grid.dy / mb);
        let verts = fullkt::fan_vertices(&speeds, dt, &grid).unwrap();
        let geom = fullkt::fan_geometry(&verts, &grid);
        let cell_area = grid.dx * grid.dy;
        for (j, k) in geom.pieces.iter_indices().collect::<Vec<_>>() {
            let total: f64 = geom.pieces.at(j, k).iter().map(|p| p.area).sum();
            worst_partition = worst_partition.max((total - cell_area).abs() / cell_area);
        }
    }
    detail.push_str(&format!("partition defect {worst_partition:.2e}; "));

    // Limiter local maximum principle: interface values stay within the
    // 3-point neighbourhood bounds for random data and θ ∈ [1, 2].
    let mut worst_bound: f64 = 0.0;
    for _ in 0..40 {
        let grid = make_grid(12, 4, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
        let mut dev = StateField::<1>::zeros(&grid);
        let (jl, jh, kl, kh) = dev.data.bounds();
        for k in kl..=kh {
            for j in jl..=jh {
                dev.set(j, k, [rng.gen_range(-1.0..1.0)]);
            }
        }
        let theta = rng.gen_range(1.0..=2.0);
        let slopes = mc_theta_slopes(&dev, theta);
        let iface = interface_states(&dev, &slopes);
        for (j, k) in dev.interior().collect::<Vec<_>>() {
            let lo = dev.at(j - 1, k)[0].min(dev.at(j, k)[0]).min(dev.at(j + 1, k)[0]);
            let hi = dev.at(j - 1, k)[0].max(dev.at(j, k)[0]).max(dev.at(j + 1, k)[0]);
            for v in [iface.east.at(j, k)[0], iface.west.at(j, k)[0]] {
                worst_bound = worst_bound.max(lo - v).max(v - hi);
            }
            let lo = dev.at(j, k - 1)[0].min(dev.at(j, k)[0]).min(dev.at(j, k + 1)[0]);
            let hi = dev.at(j, k - 1)[0].max(dev.at(j, k)[0]).max(dev.at(j, k + 1)[0]);
            for v in [iface.north.at(j, k)[0], iface.south.at(j, k)[0]] {
                worst_bound = worst_bound.max(lo - v).max(v - hi);
            }
        }
    }
    detail.push_str(&format!("limiter bound excess {worst_bound:.2e}; "));

    // Flux consistency: equal deviations recover F(Δ) for random a± > 0 > a⁻.
    let mut worst_consistency: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.gen_range(-1.0..1.0);
        let qt = rng.gen_range(-0.5..0.5);
        let ap = rng.gen_range(1e-6..3.0);
        let am = -rng.gen_range(1e-6..3.0);
        let model = ScalarModel::Burgers;
        let h = semikt::numerical_flux_x(&[d], &[d], &[qt], ap, am, &model).unwrap();
        let expect = 0.5 * (d + qt) * (d + qt) - 0.5 * qt * qt;
        worst_consistency = worst_consistency.max((h[0] - expect).abs());
    }
    detail.push_str(&format!("flux consistency {worst_consistency:.2e}; "));

    // Conservation: one forward-Euler step on periodic BCs keeps the total
    // integral, homogeneous scalar law.
    let grid = make_grid(16, 12, [0.0, 1.0, 0.0, 1.0], 2).unwrap();
    let model = ScalarModel::Burgers;
    let cfg = SchemeConfig {
        bc: BoundarySpec::uniform(BcKind::Periodic),
        ..SchemeConfig::default()
    };
    let dev0 = random_smooth_scalar(&grid, 4242);
    let before = semikt::total_integral(&dev0)[0];
    let opts = IntegrateOptions {
        method: TimeIntegrator::ForwardEuler,
        control: StepControl::Fixed(5e-4),
        ..IntegrateOptions::default()
    };
    let run = integrate(&dev0, &ZeroStationary, &model, &cfg, 5e-3, &opts).unwrap();
    let after = semikt::total_integral(&run.dev)[0];
    let conservation = (after - before).abs() / before.abs().max(1.0);
    detail.push_str(&format!("conservation drift {conservation:.2e}; "));

    // Deviation-flux Jacobian agreement (finite differences, step 1e−6).
    let mut worst_jac: f64 = 0.0;
    for _ in 0..10 {
        let qt = euler_to_conserved(
            &PrimitiveState {
                rho: rng.gen_range(0.5..2.0),
                u1: rng.gen_range(-0.5..0.5),
                u2: rng.gen_range(-0.5..0.5),
                p: rng.gen_range(0.5..2.0),
            },
            1.4,
        );
        let dq = [
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
        ];
        let h = 1e-6;
        let full = |d: &[f64; 4]| {
            let mut q = *d;
            for c in 0..4 {
                q[c] += qt[c];
            }
            q
        };
        for axis in [Axis::X, Axis::Y] {
            let flux = |q: &[f64; 4]| match axis {
                Axis::X => euler_flux_x(q, 1.4).unwrap(),
                Axis::Y => euler_flux_y(q, 1.4).unwrap(),
            };
            // Deviation flux F(Δ) = f(Δ + q̃) − f(q̃) as its own function.
            let base = flux(&qt);
            let fdev = |d: &[f64; 4]| {
                let f = flux(&full(d));
                let mut o = [0.0; 4];
                for c in 0..4 {
                    o[c] = f[c] - base[c];
                }
                o
            };
            for col in 0..4 {
                let mut dp = dq;
                let mut dm = dq;
                dp[col] += h;
                dm[col] -= h;
                // Jacobian column of the deviation flux at Δ = dq...
                let (ad, bd) = (fdev(&dp), fdev(&dm));
                // ...against the Jacobian column of f at q = Δ + q̃.
                let (af, bf) = (flux(&full(&dp)), flux(&full(&dm)));
                for r in 0..4 {
                    let jd = (ad[r] - bd[r]) / (2.0 * h);
                    let jf = (af[r] - bf[r]) / (2.0 * h);
                    worst_jac = worst_jac.max((jd - jf).abs());
                }
            }
            // The deviation system also carries the same eigenvalue bounds.
            let _ = euler_speed_bounds(&full(&dq), 1.4, axis).unwrap();
        }
    }
    detail.push_str(&format!("jacobian agreement {worst_jac:.2e}"));

    let pass = worst_partition <= 1e-12
        && worst_bound <= 1e-13
        && worst_consistency <= 1e-13
        && conservation <= 1e-12
        && worst_jac <= 1e-6;
    report("criterion 8 (property suites)", pass, &detail);
}
