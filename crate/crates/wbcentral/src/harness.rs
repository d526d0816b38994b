//! Experiment runner: built-in test cases, time-step control, error norms,
//! convergence tables, and CSV snapshot output. Drives both schemes behind
//! the `wbcentral` command-line binary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::fullkt::{self, SpeedField};
use crate::grid::{make_grid, BcKind, BoundarySpec, Grid2D, GridError, StateField};
use crate::models::{
    euler_pressure, euler_to_conserved, Axis, EulerEquilibrium, EulerModel,
    PotentialGradient, StationaryField,
};
use crate::semikt::{self, TimeIntegrator};
use crate::{SchemeConfig, SolverError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("nonpositive error norm: {0}")]
    NonPositiveError(String),
}

impl From<GridError> for HarnessError {
    fn from(e: GridError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// `dt = cfl · min(Δx / max(a⁺, −a⁻), Δy / max(b⁺, −b⁻))` over the interior
/// interfaces. With all speeds zero the quotient is infinite; callers clip
/// to the next event time.
pub fn compute_dt(speeds: &SpeedField, grid: &Grid2D, cfl: f64) -> f64 {
    let (ma, mb) = speeds.max_interior(grid);
    cfl * (grid.dx / ma).min(grid.dy / mb)
}

/// Conservative restriction of a fine field to a coarse grid by block means.
/// The fine grid must cover the same domain with integer refinement ratios.
pub fn restrict<const N: usize>(
    fine: &StateField<N>,
    coarse: &Grid2D,
) -> Result<StateField<N>, HarnessError> {
    let fg = fine.grid;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0);
    if !(same(fg.x_min, coarse.x_min)
        && same(fg.x_max, coarse.x_max)
        && same(fg.y_min, coarse.y_min)
        && same(fg.y_max, coarse.y_max))
    {
        return Err(HarnessError::GridMismatch(
            "domains differ between solution and reference".into(),
        ));
    }
    if fg.nx % coarse.nx != 0 || fg.ny % coarse.ny != 0 {
        return Err(HarnessError::GridMismatch(format!(
            "non-integer refinement ratio: {}x{} onto {}x{}",
            fg.nx, fg.ny, coarse.nx, coarse.ny
        )));
    }
    let rx = (fg.nx / coarse.nx) as isize;
    let ry = (fg.ny / coarse.ny) as isize;
    let mut out = StateField::zeros(coarse);
    let inv = 1.0 / (rx * ry) as f64;
    for k in 0..coarse.ny as isize {
        for j in 0..coarse.nx as isize {
            let mut acc = [0.0; N];
            for t in 0..ry {
                for s in 0..rx {
                    let q = fine.at(j * rx + s, k * ry + t);
                    for c in 0..N {
                        acc[c] += q[c];
                    }
                }
            }
            for c in acc.iter_mut() {
                *c *= inv;
            }
            out.set(j, k, acc);
        }
    }
    Ok(out)
}

/// `Σ |u − u_ref| · Δx·Δy` over the interior for one component; a finer
/// reference is restricted by conservative block means first.
pub fn l1_error<const N: usize>(
    field: &StateField<N>,
    reference: &StateField<N>,
    comp: usize,
) -> Result<f64, HarnessError> {
    let reference = if reference.grid.nx == field.grid.nx && reference.grid.ny == field.grid.ny
    {
        reference.clone()
    } else {
        restrict(reference, &field.grid)?
    };
    let grid = field.grid;
    let mut acc = 0.0;
    for (j, k) in field.interior() {
        acc += (field.at(j, k)[comp] - reference.at(j, k)[comp]).abs();
    }
    Ok(acc * grid.dx * grid.dy)
}

/// `rate_i = log2(e_{i−1} / e_i)` for a ratio-2 refinement sequence.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>, HarnessError> {
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(HarnessError::NonPositiveError(format!("{errors:?}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Scheme selector for an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    FullyDiscrete,
    SemiDiscrete,
}

impl SchemeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fully_discrete" => Some(SchemeKind::FullyDiscrete),
            "semi_discrete" => Some(SchemeKind::SemiDiscrete),
            _ => None,
        }
    }
}

/// Built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Isothermal hydrostatic equilibrium held exactly.
    Isothermal,
    /// Isothermal background with a small Gaussian pressure pulse along x.
    PerturbedIsothermalX,
    /// Same along y.
    PerturbedIsothermalY,
    /// Moving equilibrium along the x-axis (60×10).
    MovingX,
    /// Moving equilibrium along the y-axis (10×60).
    MovingY,
    /// Gravitational shock tube along x with reflecting walls.
    ShockTube,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Isothermal => "isothermal",
            ExperimentKind::PerturbedIsothermalX => "perturbed_isothermal_x",
            ExperimentKind::PerturbedIsothermalY => "perturbed_isothermal_y",
            ExperimentKind::MovingX => "moving_x",
            ExperimentKind::MovingY => "moving_y",
            ExperimentKind::ShockTube => "shock_tube",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL_EXPERIMENTS.iter().copied().find(|e| e.name() == s)
    }
}

pub const ALL_EXPERIMENTS: [ExperimentKind; 6] = [
    ExperimentKind::Isothermal,
    ExperimentKind::PerturbedIsothermalX,
    ExperimentKind::PerturbedIsothermalY,
    ExperimentKind::MovingX,
    ExperimentKind::MovingY,
    ExperimentKind::ShockTube,
];

/// Stationary-field selector (config key `equilibrium`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    None,
    Isothermal,
    Moving,
    PerturbedIsothermalX,
    PerturbedIsothermalY,
}

impl EquilibriumKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(EquilibriumKind::None),
            "isothermal" => Some(EquilibriumKind::Isothermal),
            "moving" => Some(EquilibriumKind::Moving),
            "perturbed_isothermal_x" => Some(EquilibriumKind::PerturbedIsothermalX),
            "perturbed_isothermal_y" => Some(EquilibriumKind::PerturbedIsothermalY),
            _ => None,
        }
    }
}

/// Full description of one run; built from an experiment's defaults plus
/// config-file overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scheme: SchemeKind,
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    pub t_end: f64,
    pub cfl: f64,
    pub theta: f64,
    pub eps: f64,
    pub eta: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub p0: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub g_moving: f64,
    pub equilibrium: EquilibriumKind,
    pub bc: BoundarySpec,
    pub integrator: TimeIntegrator,
    pub projection_reconstruction: bool,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub write_snapshots: bool,
}

impl ExperimentConfig {
    /// Defaults matching the published setup of each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            scheme: SchemeKind::FullyDiscrete,
            nx: 200,
            ny: 200,
            bounds: [0.0, 1.0, 0.0, 1.0],
            t_end: 0.25,
            cfl: 0.45,
            theta: 1.5,
            eps: 1e-8,
            eta: 1e-2,
            gamma: 1.4,
            rho0: 1.21,
            p0: 1.0,
            phi_x: 1.0,
            phi_y: 1.0,
            g_moving: 1.0,
            equilibrium: EquilibriumKind::Isothermal,
            bc: BoundarySpec::uniform(BcKind::Outflow),
            integrator: TimeIntegrator::SspRk2,
            projection_reconstruction: true,
            output_dir: PathBuf::from("out"),
            snapshot_times: Vec::new(),
            write_snapshots: true,
        };
        match kind {
            ExperimentKind::Isothermal => base,
            ExperimentKind::PerturbedIsothermalX => ExperimentConfig {
                rho0: 1.0,
                phi_x: 1.0,
                phi_y: 0.0,
                ..base
            },
            ExperimentKind::PerturbedIsothermalY => ExperimentConfig {
                rho0: 1.0,
                phi_x: 0.0,
                phi_y: 1.0,
                ..base
            },
            ExperimentKind::MovingX => ExperimentConfig {
                nx: 60,
                ny: 10,
                rho0: 1.0,
                equilibrium: EquilibriumKind::Moving,
                ..base
            },
            ExperimentKind::MovingY => ExperimentConfig {
                nx: 10,
                ny: 60,
                rho0: 1.0,
                equilibrium: EquilibriumKind::Moving,
                ..base
            },
            ExperimentKind::ShockTube => ExperimentConfig {
                nx: 400,
                ny: 10,
                t_end: 0.2,
                phi_x: 1.0,
                phi_y: 0.0,
                bc: BoundarySpec::uniform(BcKind::Reflecting),
                ..base
            },
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            theta: self.theta,
            eps: self.eps,
            cfl: self.cfl,
            bc: self.bc,
            zero_fan_floor: 1e-12,
            projection_reconstruction: self.projection_reconstruction,
        }
    }

    pub fn model(&self) -> EulerModel {
        let gravity = match self.equilibrium {
            EquilibriumKind::Moving => PotentialGradient::MovingEquilibrium { gamma: self.gamma },
            _ => PotentialGradient::Constant {
                gx: self.phi_x,
                gy: self.phi_y,
            },
        };
        EulerModel { gamma: self.gamma, gravity }
    }

    pub fn stationary(&self) -> EulerEquilibrium {
        match self.equilibrium {
            EquilibriumKind::None => EulerEquilibrium::None,
            EquilibriumKind::Isothermal => EulerEquilibrium::Isothermal {
                rho0: self.rho0,
                p0: self.p0,
                phi_x: self.phi_x,
                phi_y: self.phi_y,
                gamma: self.gamma,
            },
            EquilibriumKind::Moving => EulerEquilibrium::Moving {
                rho0: self.rho0,
                p0: self.p0,
                g: self.g_moving,
                gamma: self.gamma,
            },
            EquilibriumKind::PerturbedIsothermalX => EulerEquilibrium::PerturbedIsothermal {
                eta: self.eta,
                axis: Axis::X,
                gamma: self.gamma,
            },
            EquilibriumKind::PerturbedIsothermalY => EulerEquilibrium::PerturbedIsothermal {
                eta: self.eta,
                axis: Axis::Y,
                gamma: self.gamma,
            },
        }
    }

    /// Initial deviation `Δq₀ = q₀ − q̃` sampled at cell centers. Runs whose
    /// initial data is the stationary field itself start from exact zeros.
    pub fn initial_deviation(&self, grid: &Grid2D) -> StateField<4> {
        let stat = self.stationary();
        let gamma = self.gamma;
        match self.kind {
            ExperimentKind::Isothermal | ExperimentKind::MovingX | ExperimentKind::MovingY => {
                StateField::zeros(grid)
            }
            ExperimentKind::PerturbedIsothermalX | ExperimentKind::PerturbedIsothermalY => {
                let axis = if self.kind == ExperimentKind::PerturbedIsothermalX {
                    Axis::X
                } else {
                    Axis::Y
                };
                let eta = self.eta;
                StateField::from_centers(grid, |x, y| {
                    let w = crate::models::perturbed_isothermal(x, y, eta, axis);
                    let q0 = euler_to_conserved(&w, gamma);
                    let qt = stat.value(x, y);
                    let mut dq = [0.0; 4];
                    for c in 0..4 {
                        dq[c] = q0[c] - qt[c];
                    }
                    dq
                })
            }
            ExperimentKind::ShockTube => StateField::from_centers(grid, |x, y| {
                let (rho, p) = if x <= 0.5 { (1.0, 1.0) } else { (0.125, 0.1) };
                let q0 = euler_to_conserved(
                    &crate::models::PrimitiveState {
                        rho,
                        u1: 0.0,
                        u2: 0.0,
                        p,
                    },
                    gamma,
                );
                let qt = stat.value(x, y);
                let mut dq = [0.0; 4];
                for c in 0..4 {
                    dq[c] = q0[c] - qt[c];
                }
                dq
            }),
        }
    }
}

/// Result of one experiment run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: usize,
    pub wall_seconds: f64,
    pub final_t: f64,
    pub snapshots: Vec<(f64, PathBuf)>,
    /// Full-state snapshots kept in memory (same times as `snapshots` when
    /// files are written, always including the final time).
    pub snapshot_fields: Vec<(f64, StateField<4>)>,
    pub final_dev: StateField<4>,
    /// max |Δq| per component at the final time.
    pub max_deviation: [f64; 4],
    /// Running min/max of the density deviation over all steps.
    pub dev_rho_range: (f64, f64),
}

fn add4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for c in 0..4 {
        out[c] = a[c] + b[c];
    }
    out
}

/// Full state `Δq + q̃` on the interior (ghosts zeroed).
pub fn full_state<S: StationaryField<4>>(dev: &StateField<4>, stat: &S) -> StateField<4> {
    let grid = dev.grid;
    let mut out = StateField::zeros(&grid);
    for (j, k) in dev.interior() {
        out.set(
            j,
            k,
            add4(&dev.at(j, k), &stat.value(grid.xc(j), grid.yc(k))),
        );
    }
    out
}

/// Runs one configured experiment to `t_end`, writing snapshots at the
/// requested times (always at `t_end`).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    cfg.bc.validate()?;
    if !(cfg.cfl > 0.0 && cfg.cfl < 1.0) {
        return Err(HarnessError::Config(format!(
            "cfl must lie in (0, 1), got {}",
            cfg.cfl
        )));
    }
    if !(1.0..=2.0).contains(&cfg.theta) {
        return Err(HarnessError::Config(format!(
            "theta must lie in [1, 2], got {}",
            cfg.theta
        )));
    }
    let grid = make_grid(cfg.nx, cfg.ny, cfg.bounds, 2)?;
    let model = cfg.model();
    let stat = cfg.stationary();
    let scheme = cfg.scheme_config();
    let mut dev = cfg.initial_deviation(&grid);
    let mut events: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t < cfg.t_end)
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();
    events.push(cfg.t_end);

    let started = Instant::now();
    let mut t = 0.0;
    let mut steps = 0usize;
    let (mut rho_lo, mut rho_hi) = dev.min_max_interior(0);
    let mut snapshots = Vec::new();
    let mut snapshot_fields = Vec::new();

    for &event in &events {
        while t < event {
            let prelude = fullkt::step_prelude(&dev, &stat, &model, &scheme)?;
            let mut dt = compute_dt(&prelude.speeds, &grid, scheme.cfl);
            if !dt.is_finite() {
                dt = event - t;
            }
            dt = dt.min(event - t);
            match cfg.scheme {
                SchemeKind::FullyDiscrete => {
                    let step =
                        fullkt::FullKtStep::from_prelude(prelude, &stat, &model, &scheme, dt)?;
                    let inter = step.evolve_subdomains()?;
                    dev = step.project(&inter);
                }
                SchemeKind::SemiDiscrete => {
                    dev = semikt::advance(&prelude.dev, &stat, &model, &scheme, dt, cfg.integrator)?;
                }
            }
            t += dt;
            steps += 1;
            let (lo, hi) = dev.min_max_interior(0);
            rho_lo = rho_lo.min(lo);
            rho_hi = rho_hi.max(hi);
            if steps > 10_000_000 {
                return Err(HarnessError::Config("step limit exceeded".into()));
            }
        }
        let full = full_state(&dev, &stat);
        if cfg.write_snapshots {
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg
                .output_dir
                .join(format!("{}_t{:.6}.csv", cfg.kind.name(), event));
            write_snapshot(&full, &grid, event, Some(cfg.gamma), &path)?;
            snapshots.push((event, path));
        }
        snapshot_fields.push((event, full));
    }

    let mut max_deviation = [0.0; 4];
    for (c, m) in max_deviation.iter_mut().enumerate() {
        *m = dev.max_abs_interior(c);
    }
    Ok(RunReport {
        steps,
        wall_seconds: started.elapsed().as_secs_f64(),
        final_t: t,
        snapshots,
        snapshot_fields,
        final_dev: dev,
        max_deviation,
        dev_rho_range: (rho_lo, rho_hi),
    })
}

/// Writes a full-state snapshot as CSV: a `# nx ny x_min x_max y_min y_max t`
/// header, then one `x,y,rho,u1,u2,E,p` row per cell (`x,y,u` for scalar
/// fields), row-major by k then j, at 17 significant digits.
pub fn write_snapshot<const N: usize>(
    full: &StateField<N>,
    grid: &Grid2D,
    t: f64,
    gamma_for_pressure: Option<f64>,
    path: &Path,
) -> Result<(), HarnessError> {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# {} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
        grid.nx, grid.ny, grid.x_min, grid.x_max, grid.y_min, grid.y_max, t
    );
    for k in 0..grid.ny as isize {
        for j in 0..grid.nx as isize {
            let q = full.at(j, k);
            let _ = write!(text, "{:.16e},{:.16e}", grid.xc(j), grid.yc(k));
            if N == 4 {
                let gamma = gamma_for_pressure.unwrap_or(1.4);
                let rho = q[0];
                let u1 = q[1] / rho;
                let u2 = q[2] / rho;
                let p = euler_pressure(&[q[0], q[1], q[2], q[3]], gamma)
                    .map_err(|e| SolverError::nonphysical(format!("snapshot cell ({j}, {k})"), e))?;
                let _ = write!(
                    text,
                    ",{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    rho, u1, u2, q[3], p
                );
            } else {
                for c in q.iter() {
                    let _ = write!(text, ",{:.16e}", c);
                }
            }
            text.push('\n');
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`] back into per-row values.
pub fn read_snapshot(path: &Path) -> Result<(Grid2D, f64, Vec<Vec<f64>>), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config("empty snapshot".into()))?;
    let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    if fields.len() != 7 {
        return Err(HarnessError::Config("malformed snapshot header".into()));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| HarnessError::Config("bad nx".into()))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| HarnessError::Config("bad ny".into()))?;
    let vals: Vec<f64> = fields[2..]
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| HarnessError::Config("bad header number".into()))?;
    let grid = make_grid(nx, ny, [vals[0], vals[1], vals[2], vals[3]], 2)?;
    let t = vals[4];
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| HarnessError::Config("bad data row".into()))?;
        rows.push(row);
    }
    Ok((grid, t, rows))
}

/// Pressure field derived from a full conserved state.
pub fn pressure_field(full: &StateField<4>, gamma: f64) -> Result<StateField<1>, HarnessError> {
    let mut out = StateField::zeros(&full.grid);
    for (j, k) in full.interior().collect::<Vec<_>>() {
        let q = full.at(j, k);
        let p = euler_pressure(&q, gamma)
            .map_err(|e| SolverError::nonphysical(format!("cell ({j}, {k})"), e))?;
        out.set(j, k, [p]);
    }
    Ok(out)
}

/// One row of a grid-convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    /// L1 errors for (ρ, p, E).
    pub err: [f64; 3],
    /// Rates vs the previous row (None on the first row).
    pub rate: [Option<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference_n: usize,
}

/// Runs the experiment at each level (square grids) against the finest
/// level as reference, mirroring the L1-error/rate table layout.
pub fn run_convergence(
    base: &ExperimentConfig,
    levels: &[usize],
) -> Result<ConvergenceTable, HarnessError> {
    if levels.len() < 2 {
        return Err(HarnessError::Config(
            "convergence needs at least two levels".into(),
        ));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    let reference_n = *levels.last().unwrap();
    let run_level = |n: usize| -> Result<(StateField<4>, StateField<1>), HarnessError> {
        let mut cfg = base.clone();
        cfg.nx = n;
        cfg.ny = n;
        cfg.write_snapshots = false;
        let report = run_experiment(&cfg)?;
        let full = report.snapshot_fields.last().unwrap().1.clone();
        let p = pressure_field(&full, cfg.gamma)?;
        Ok((full, p))
    };
    let (ref_full, ref_p) = run_level(reference_n)?;

    let mut rows = Vec::new();
    let mut prev: Option<[f64; 3]> = None;
    for &n in levels.iter().take(levels.len() - 1) {
        let (full, p) = run_level(n)?;
        let err = [
            l1_error(&full, &ref_full, 0)?,
            l1_error(&p, &ref_p, 0)?,
            l1_error(&full, &ref_full, 3)?,
        ];
        let rate = match prev {
            None => [None, None, None],
            Some(pe) => {
                let mut r = [None, None, None];
                for c in 0..3 {
                    r[c] = Some((pe[c] / err[c]).log2());
                }
                r
            }
        };
        rows.push(ConvergenceRow { n, err, rate });
        prev = Some(err);
    }
    Ok(ConvergenceTable { rows, reference_n })
}

impl ConvergenceTable {
    /// Aligned text table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6}   (reference {}x{})",
            "N", "err_rho", "rate", "err_p", "rate", "err_E", "rate", self.reference_n, self.reference_n
        );
        for row in &self.rows {
            let fmt_rate = |r: Option<f64>| match r {
                None => "-".to_string(),
                Some(v) => format!("{v:.2}"),
            };
            let _ = writeln!(
                out,
                "{:>8} {:>12.3e} {:>6} {:>12.3e} {:>6} {:>12.3e} {:>6}",
                format!("{0}^2", row.n),
                row.err[0],
                fmt_rate(row.rate[0]),
                row.err[1],
                fmt_rate(row.rate[1]),
                row.err[2],
                fmt_rate(row.rate[2]),
            );
        }
        out
    }

    /// CSV with columns `N,err_rho,rate_rho,err_p,rate_p,err_E,rate_E`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,err_rho,rate_rho,err_p,rate_p,err_E,rate_E\n");
        for row in &self.rows {
            let fmt_rate = |r: Option<f64>| match r {
                None => "-".to_string(),
                Some(v) => format!("{v:.6}"),
            };
            let _ = writeln!(
                out,
                "{},{:.6e},{},{:.6e},{},{:.6e},{}",
                row.n,
                row.err[0],
                fmt_rate(row.rate[0]),
                row.err[1],
                fmt_rate(row.rate[1]),
                row.err[2],
                fmt_rate(row.rate[2]),
            );
        }
        out
    }
}

/// Parses a flat `key = value` config file (`#` comments) into an
/// [`ExperimentConfig`]. The `experiment` key picks the defaults; every
/// other key overrides one field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    let experiment = pairs
        .iter()
        .find(|(k, _)| k == "experiment")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| HarnessError::Config("missing 'experiment' key".into()))?;
    let kind = ExperimentKind::parse(&experiment)
        .ok_or_else(|| HarnessError::Config(format!("unknown experiment '{experiment}'")))?;
    let mut cfg = ExperimentConfig::defaults(kind);

    let bad = |key: &str, value: &str| {
        HarnessError::Config(format!("invalid value '{value}' for key '{key}'"))
    };
    for (key, value) in &pairs {
        match key.as_str() {
            "experiment" => {}
            "scheme" => {
                cfg.scheme = SchemeKind::parse(value).ok_or_else(|| bad(key, value))?;
            }
            "nx" => cfg.nx = value.parse().map_err(|_| bad(key, value))?,
            "ny" => cfg.ny = value.parse().map_err(|_| bad(key, value))?,
            "x_min" => cfg.bounds[0] = value.parse().map_err(|_| bad(key, value))?,
            "x_max" => cfg.bounds[1] = value.parse().map_err(|_| bad(key, value))?,
            "y_min" => cfg.bounds[2] = value.parse().map_err(|_| bad(key, value))?,
            "y_max" => cfg.bounds[3] = value.parse().map_err(|_| bad(key, value))?,
            "t_end" => cfg.t_end = value.parse().map_err(|_| bad(key, value))?,
            "cfl" => cfg.cfl = value.parse().map_err(|_| bad(key, value))?,
            "theta" => cfg.theta = value.parse().map_err(|_| bad(key, value))?,
            "eps" => cfg.eps = value.parse().map_err(|_| bad(key, value))?,
            "eta" => cfg.eta = value.parse().map_err(|_| bad(key, value))?,
            "gamma" => cfg.gamma = value.parse().map_err(|_| bad(key, value))?,
            "rho0" => cfg.rho0 = value.parse().map_err(|_| bad(key, value))?,
            "p0" => cfg.p0 = value.parse().map_err(|_| bad(key, value))?,
            "phi_x" => cfg.phi_x = value.parse().map_err(|_| bad(key, value))?,
            "phi_y" => cfg.phi_y = value.parse().map_err(|_| bad(key, value))?,
            "g" => cfg.g_moving = value.parse().map_err(|_| bad(key, value))?,
            "equilibrium" => {
                cfg.equilibrium = EquilibriumKind::parse(value).ok_or_else(|| bad(key, value))?;
            }
            "bc" => {
                cfg.bc = BoundarySpec::uniform(BcKind::parse(value).map_err(|e| {
                    HarnessError::Config(e.to_string())
                })?);
            }
            "bc_x" => {
                let kind = BcKind::parse(value).map_err(|e| HarnessError::Config(e.to_string()))?;
                cfg.bc.west = kind;
                cfg.bc.east = kind;
            }
            "bc_y" => {
                let kind = BcKind::parse(value).map_err(|e| HarnessError::Config(e.to_string()))?;
                cfg.bc.south = kind;
                cfg.bc.north = kind;
            }
            "integrator" => {
                cfg.integrator =
                    TimeIntegrator::parse(value).ok_or_else(|| bad(key, value))?;
            }
            "projection_reconstruction" => {
                cfg.projection_reconstruction = value.parse().map_err(|_| bad(key, value))?;
            }
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "snapshot_times" => {
                cfg.snapshot_times = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(key, value))?;
            }
            other => {
                return Err(HarnessError::Config(format!("unknown config key '{other}'")));
            }
        }
    }
    cfg.bc.validate()?;
    Ok(cfg)
}
