//! Constrained minimization on the mass sphere: explicit projected gradient
//! flow with adaptive step control and periodic fiber projection, plus the
//! truncation / L-infinity feedback loop for nonlinearities growing too fast
//! to handle directly.
//!
//! Sign convention: the Euler-Lagrange equation reads
//! -Delta u + lambda u + (A0 + A1^2 + A2^2) u = f(u), so bound states carry
//! lambda > 0.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CssError, Result};
use crate::functional::{
    breakdown_with_gauge, lagrange_multiplier_with, nehari_residual_with, pohozaev_residual_with,
    project_to_manifold, EnergyBreakdown,
};
use crate::gauge::{gauge_fields, GaugeFields};
use crate::grid::{fiber_resample, laplacian, spectral_gradient, Field2D, Grid};
use crate::io::load_field;
use crate::moser::MoserParams;
use crate::nonlin::{NonlinearitySpec, TruncationMode};

/// Starting field of the flow, always rescaled to the target mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitKind {
    /// a pi^{-1/2} e^{-|x|^2/(2 sigma^2)}.
    Gaussian { sigma: f64 },
    /// Truncated-logarithm profile with plateau index n, rho = 1.
    MoserLike { n: u64 },
    FromFile { path: PathBuf },
}

impl Default for InitKind {
    fn default() -> Self {
        InitKind::Gaussian { sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target mass is a^2; a must be nonzero.
    pub a: f64,
    /// Initial flow step.
    pub dt: f64,
    pub max_steps: usize,
    /// Stop once the tangential gradient norm falls below this times the
    /// full gradient norm (floored at 1).
    pub grad_tol: f64,
    /// Constraint tolerance: converged records satisfy
    /// |J| <= j_tol * (kinetic + cs).
    pub j_tol: f64,
    #[serde(default)]
    pub init: InitKind,
    #[serde(default)]
    pub seed: u64,
    /// Fiber-projection cadence in accepted steps.
    #[serde(default = "default_cadence")]
    pub project_every: usize,
    /// Largest tolerated |u| on the outermost grid ring at convergence.
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
}

fn default_cadence() -> usize {
    25
}

fn default_boundary_tol() -> f64 {
    1e-8
}

impl SolverConfig {
    pub fn new(a: f64) -> Result<Self> {
        let cfg = SolverConfig {
            a,
            dt: 2e-3,
            max_steps: 20_000,
            grad_tol: 1e-6,
            j_tol: 1e-6,
            init: InitKind::default(),
            seed: 0,
            project_every: default_cadence(),
            boundary_tol: default_boundary_tol(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a == 0.0 || !self.a.is_finite() {
            return Err(CssError::InvalidParam("mass parameter a must be nonzero".into()));
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(CssError::InvalidParam(format!("dt must be positive, got {}", self.dt)));
        }
        if self.grad_tol <= 0.0 || self.j_tol <= 0.0 {
            return Err(CssError::InvalidParam("tolerances must be positive".into()));
        }
        if self.project_every == 0 {
            return Err(CssError::InvalidParam("project_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged (or best-effort) output of one minimization.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub u: Field2D,
    pub lambda: f64,
    pub breakdown: EnergyBreakdown,
    pub pohozaev_res: f64,
    pub nehari_res: f64,
    pub linf: f64,
    pub steps: usize,
    pub converged: bool,
}

/// One progress sample of the flow.
#[derive(Debug, Clone, Copy)]
pub struct ProgressLine {
    pub step: usize,
    pub e: f64,
    pub j: f64,
    pub grad_rel: f64,
    pub mass: f64,
}

pub fn linf_norm(u: &Field2D) -> f64 {
    u.linf()
}

/// L^2 gradient of the energy: -Delta u + (A0 + A1^2 + A2^2) u - f(u).
pub fn euler_gradient(u: &Field2D, spec: &NonlinearitySpec) -> Result<Field2D> {
    let gf = gauge_fields(u)?;
    euler_gradient_with(u, spec, &gf)
}

pub fn euler_gradient_with(
    u: &Field2D,
    spec: &NonlinearitySpec,
    gf: &GaugeFields,
) -> Result<Field2D> {
    euler_gradient_core(u, spec, gf, &laplacian(u))
}

fn euler_gradient_core(
    u: &Field2D,
    spec: &NonlinearitySpec,
    gf: &GaugeFields,
    lap: &Field2D,
) -> Result<Field2D> {
    let mut out = Field2D::zeros(u.grid());
    {
        let vals = out.values_mut();
        let uv = u.values();
        let lv = lap.values();
        let a0 = gf.a0.values();
        let a1 = gf.a1.values();
        let a2 = gf.a2.values();
        for (idx, v) in vals.indexed_iter_mut() {
            let s = uv[idx];
            *v = -lv[idx] + (a0[idx] + a1[idx] * a1[idx] + a2[idx] * a2[idx]) * s
                - spec.eval_f(s)?;
        }
    }
    if !out.is_finite() {
        return Err(CssError::NonFinite("euler gradient".into()));
    }
    Ok(out)
}

/// L^2 gradient of the constraint functional J:
/// -2 Delta u + 2(A0 + A1^2 + A2^2)u - f'(u)u + f(u).
fn constraint_gradient(
    u: &Field2D,
    spec: &NonlinearitySpec,
    gf: &GaugeFields,
    lap: &Field2D,
) -> Result<Field2D> {
    let mut out = Field2D::zeros(u.grid());
    {
        let vals = out.values_mut();
        let uv = u.values();
        let lv = lap.values();
        let a0 = gf.a0.values();
        let a1 = gf.a1.values();
        let a2 = gf.a2.values();
        for (idx, v) in vals.indexed_iter_mut() {
            let s = uv[idx];
            *v = -2.0 * lv[idx]
                + 2.0 * (a0[idx] + a1[idx] * a1[idx] + a2[idx] * a2[idx]) * s
                - spec.eval_fprime(s)? * s
                + spec.eval_f(s)?;
        }
    }
    Ok(out)
}

/// d/dt J(u_t) at t = 1:
/// 2(kin+cs) + 3 int f(u)u - 4 int F(u) - int f'(u)u^2.
fn fiber_constraint_slope(
    u: &Field2D,
    spec: &NonlinearitySpec,
    bd: &EnergyBreakdown,
) -> Result<f64> {
    let fu = bd.kinetic + bd.cs + 2.0 * bd.potential - bd.j;
    let h = u.grid().spacing();
    let mut fprime_uu = 0.0;
    for &v in u.values() {
        fprime_uu += spec.eval_fprime(v)? * v * v;
    }
    fprime_uu *= h * h;
    Ok(2.0 * (bd.kinetic + bd.cs) + 3.0 * fu - 4.0 * bd.potential - fprime_uu)
}

fn inner(a: &Field2D, b: &Field2D) -> f64 {
    let h = a.grid().spacing();
    let mut acc = 0.0;
    for (x, y) in a.values().iter().zip(b.values().iter()) {
        acc += x * y;
    }
    acc * h * h
}

fn renormalize(u: &Field2D, a: f64) -> Result<Field2D> {
    let mass = u.lp_pow(2.0);
    if mass <= 0.0 || !mass.is_finite() {
        return Err(CssError::ZeroMass);
    }
    Ok(u.scale(a.abs() / mass.sqrt()))
}

/// The starting profile as an exact function of the accumulated fiber
/// dilation, so the manifold start below needs no grid resampling for the
/// analytic profiles.
fn build_init(grid: Grid, cfg: &SolverConfig, t: f64) -> Result<Field2D> {
    Ok(match &cfg.init {
        InitKind::Gaussian { sigma } => {
            if *sigma <= 0.0 {
                return Err(CssError::InvalidParam(format!("sigma must be positive, got {sigma}")));
            }
            let s2 = 2.0 * (sigma / t) * (sigma / t);
            let amp = cfg.a.abs() / std::f64::consts::PI.sqrt();
            Field2D::from_fn(grid, |x, y| amp * (-(x * x + y * y) / s2).exp())
        }
        InitKind::MoserLike { n } => {
            let params = MoserParams::new(cfg.a.abs().max(0.8), 1.0, *n)?;
            if grid.half_width() <= params.r_n / t {
                return Err(CssError::SupportExceedsDomain {
                    rn: params.r_n / t,
                    l: grid.half_width(),
                });
            }
            Field2D::from_fn(grid, |x, y| t * params.profile(t * (x * x + y * y).sqrt()))
        }
        InitKind::FromFile { path } => {
            let (u, _) = load_field(path)?;
            if u.grid() != grid {
                return Err(CssError::GridMismatch(format!(
                    "stored field is {}x{} on L={}, solver grid is {}x{} on L={}",
                    u.grid().n(),
                    u.grid().n(),
                    u.grid().half_width(),
                    grid.n(),
                    grid.n(),
                    grid.half_width()
                )));
            }
            if t == 1.0 {
                u
            } else {
                fiber_resample(&u, t)
            }
        }
    })
}

/// Dilate the starting profile until it sits on the constraint manifold
/// (iterating because the grid readouts are not exactly scale-covariant for
/// badly resolved profiles), then apply the seed ripple.
fn initial_field(grid: Grid, cfg: &SolverConfig, spec: &NonlinearitySpec) -> Result<Field2D> {
    let mut t_acc = 1.0;
    let mut u = renormalize(&build_init(grid, cfg, t_acc)?, cfg.a)?;
    for _ in 0..12 {
        match project_to_manifold(&u, spec) {
            Ok(p) => {
                if (p.t_u - 1.0).abs() < 1e-6 {
                    break;
                }
                t_acc *= p.t_u;
                u = renormalize(&build_init(grid, cfg, t_acc)?, cfg.a)?;
            }
            // a spec whose fiber constraint never changes sign (f too weak);
            // start from the undilated profile and let the flow judge it
            Err(CssError::NoBracket { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if cfg.seed != 0 {
        // a deterministic low-mode ripple to break symmetry between runs;
        // the amplitude is small enough not to disturb the basin
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let l = grid.half_width();
        let amp = 1e-2 * u.linf();
        let modes: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-3.0..3.0) * std::f64::consts::PI / l,
                    rng.gen_range(-3.0..3.0) * std::f64::consts::PI / l,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let ripple = Field2D::from_fn(grid, |x, y| {
            let env = (-(x * x + y * y) / 8.0).exp();
            amp * env
                * modes.iter().map(|(kx, ky, ph)| (kx * x + ky * y + ph).cos()).sum::<f64>()
                / 6.0
        });
        u = renormalize(&u.zip(&ripple, |a, b| a + b)?, cfg.a)?;
    }
    Ok(u)
}

struct FlowState {
    u: Field2D,
    gauge: GaugeFields,
    bd: EnergyBreakdown,
}

impl FlowState {
    fn at(u: Field2D, spec: &NonlinearitySpec) -> Result<Self> {
        let gauge = gauge_fields(&u)?;
        let bd = breakdown_with_gauge(&u, spec, &gauge)?;
        Ok(FlowState { u, gauge, bd })
    }
}

/// Projected gradient descent on the sphere of mass a^2, with step halving
/// on energy increase and fiber projection every `project_every` accepted
/// steps. A run that exhausts `max_steps` returns its best field with
/// `converged = false`; a converged field whose boundary ring is not
/// negligible is an error, since the box then clips the state.
pub fn minimize_on_sphere(
    grid: Grid,
    spec: &NonlinearitySpec,
    cfg: &SolverConfig,
) -> Result<SolutionRecord> {
    minimize_on_sphere_traced(grid, spec, cfg, &mut |_| {})
}

pub fn minimize_on_sphere_traced(
    grid: Grid,
    spec: &NonlinearitySpec,
    cfg: &SolverConfig,
    progress: &mut dyn FnMut(ProgressLine),
) -> Result<SolutionRecord> {
    cfg.validate()?;
    let a_sq = cfg.a * cfg.a;
    let mut state = FlowState::at(initial_field(grid, cfg, spec)?, spec)?;
    let mut dt = cfg.dt;
    let mut accepts_in_row = 0usize;
    let mut since_projection = 0usize;
    let mut steps = 0usize;
    let mut converged = false;

    while steps < cfg.max_steps {
        steps += 1;
        let lap = laplacian(&state.u);
        let g = euler_gradient_core(&state.u, spec, &state.gauge, &lap)?;
        let g_norm_sq = g.lp_pow(2.0);
        let radial = inner(&g, &state.u) / a_sq;
        let g_tan = g.zip(&state.u, |gv, uv| gv - radial * uv)?;

        // descend tangentially to BOTH constraints: the sphere and the
        // manifold {J = 0}; otherwise each step walks off the manifold at
        // first order (the manifold point maximizes its own fiber, so E has
        // a descent direction straight through it)
        let jg = constraint_gradient(&state.u, spec, &state.gauge, &lap)?;
        let j_radial = inner(&jg, &state.u) / a_sq;
        let jg_tan = jg.zip(&state.u, |gv, uv| gv - j_radial * uv)?;
        let jg_sq = jg_tan.lp_pow(2.0);
        let step_dir = if jg_sq > 0.0 {
            let along = inner(&g_tan, &jg_tan) / jg_sq;
            g_tan.zip(&jg_tan, |gv, wv| gv - along * wv)?
        } else {
            g_tan.clone()
        };
        let grad_rel = step_dir.lp_pow(2.0).sqrt() / g_norm_sq.sqrt().max(1.0);

        // mass-neutral fiber tangent u + x . grad u, used below to undo the
        // second-order constraint drift by a linearized dilation
        let (ux, uy) = spectral_gradient(&state.u);
        let grid_ref = state.u.grid();
        let fiber_dir = {
            let mut w = Field2D::zeros(grid_ref);
            {
                let wv = w.values_mut();
                let uv = state.u.values();
                let gx = ux.values();
                let gy = uy.values();
                let n = grid_ref.n();
                for i in 0..n {
                    let x = grid_ref.coord(i);
                    for j in 0..n {
                        let y = grid_ref.coord(j);
                        wv[[i, j]] = uv[[i, j]] + x * gx[[i, j]] + y * gy[[i, j]];
                    }
                }
            }
            w
        };
        let j_slope = fiber_constraint_slope(&state.u, spec, &state.bd)?;
        let delta_t = if j_slope.abs() > 1e-14 * (state.bd.kinetic + state.bd.cs).max(1.0) {
            (-state.bd.j / j_slope).clamp(-0.1, 0.1)
        } else {
            0.0
        };

        progress(ProgressLine {
            step: steps,
            e: state.bd.e,
            j: state.bd.j,
            grad_rel,
            mass: state.bd.mass,
        });

        if grad_rel <= cfg.grad_tol {
            converged = true;
            break;
        }

        // trial step, renormalized back onto the sphere; restoring the
        // constraint climbs the fiber toward its maximum, so the decrease
        // test gets a second-order allowance for that climb
        let mut trial = state.u.zip(&step_dir, |uv, gv| uv - dt * gv)?;
        if delta_t != 0.0 {
            trial = trial.zip(&fiber_dir, |uv, wv| uv + delta_t * wv)?;
        }
        let trial = renormalize(&trial, cfg.a)?;
        let trial_state = FlowState::at(trial, spec)?;
        // 1e-12 scaled by |E|: the energy quadrature's own rounding floor
        // exceeds an absolute 1e-12 once |E| is of order ten
        let allowance = 1e-12 * (1.0 + state.bd.e.abs()) + delta_t * delta_t * j_slope.abs();
        if trial_state.bd.e <= state.bd.e + allowance {
            state = trial_state;
            accepts_in_row += 1;
            since_projection += 1;
            if accepts_in_row >= 20 {
                dt *= 1.1;
                accepts_in_row = 0;
            }
        } else {
            dt *= 0.5;
            accepts_in_row = 0;
            if dt < 1e-15 {
                // the energy landscape is flat to rounding; treat the point
                // as stationary and let the residual checks judge it
                converged = grad_rel <= cfg.grad_tol.max(1e-3);
                break;
            }
            continue;
        }

        if since_projection >= cfg.project_every {
            since_projection = 0;
            if state.bd.j.abs() > 0.5 * cfg.j_tol * (state.bd.kinetic + state.bd.cs) {
                state = project_state(state, spec, cfg)?;
            }
        }
    }

    // land exactly on the constraint manifold before reporting
    if converged && state.bd.j.abs() > cfg.j_tol * (state.bd.kinetic + state.bd.cs) {
        state = project_state(state, spec, cfg)?;
    }

    if converged {
        let ring = state.u.boundary_ring_max();
        if ring > cfg.boundary_tol {
            return Err(CssError::DomainTooSmall { ring_max: ring, tol: cfg.boundary_tol });
        }
    }

    let lm = lagrange_multiplier_with(&state.u, spec, &state.gauge)?;
    let lambda = lm.lambda_raw;
    let pohozaev_res = pohozaev_residual_with(&state.u, spec, lambda, &state.gauge)?;
    let nehari_res = nehari_residual_with(&state.u, spec, lambda, &state.gauge)?;
    let linf = state.u.linf();
    Ok(SolutionRecord {
        u: state.u,
        lambda,
        breakdown: state.bd,
        pohozaev_res,
        nehari_res,
        linf,
        steps,
        converged,
    })
}

/// Move the state to the zero of the fiber constraint through its point:
/// resample u_t, put the mass back exactly, refresh the cached readouts.
fn project_state(state: FlowState, spec: &NonlinearitySpec, cfg: &SolverConfig) -> Result<FlowState> {
    let proj = project_to_manifold(&state.u, spec)?;
    if (proj.t_u - 1.0).abs() < 1e-13 {
        return Ok(state);
    }
    let moved = renormalize(&fiber_resample(&state.u, proj.t_u), cfg.a)?;
    FlowState::at(moved, spec)
}

/// One row of a mass sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub m: f64,
    pub lambda: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// True when m(a) never strictly increases beyond 1e-4 along the sweep.
    pub nonincreasing: bool,
}

/// Minimize once per mass in an increasing list and tabulate m(a).
pub fn mass_sweep(
    grid: Grid,
    spec: &NonlinearitySpec,
    a_list: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepTable> {
    if a_list.is_empty() {
        return Err(CssError::InvalidParam("empty mass list".into()));
    }
    if a_list.windows(2).any(|w| w[0] >= w[1]) || a_list[0] <= 0.0 {
        return Err(CssError::InvalidParam(
            "mass list must be positive and strictly increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(a_list.len());
    for &a in a_list {
        let mut row_cfg = cfg.clone();
        row_cfg.a = a;
        let rec = minimize_on_sphere(grid, spec, &row_cfg)?;
        rows.push(SweepRow { a, m: rec.breakdown.e, lambda: rec.lambda, converged: rec.converged });
    }
    let nonincreasing = rows.windows(2).all(|w| w[1].m <= w[0].m + 1e-4);
    Ok(SweepTable { rows, nonincreasing })
}

/// One outer iteration of the truncation loop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OuterTraceRow {
    pub r: f64,
    pub linf: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SupercriticalRecord {
    pub record: SolutionRecord,
    pub trace: Vec<OuterTraceRow>,
    /// True when the final field never left [0, R], so the truncated and the
    /// original nonlinearity coincide along the whole solution.
    pub original_problem_solved: bool,
}

/// Solve with f truncated at level R, growing R geometrically until the
/// minimizer's sup norm fits under it. Acceptance means the truncation was
/// inactive on the final field, i.e. the original equation is solved.
pub fn solve_supercritical(
    grid: Grid,
    spec: &NonlinearitySpec,
    cfg: &SolverConfig,
    r_init: f64,
    max_outer: usize,
    mode: TruncationMode,
) -> Result<SupercriticalRecord> {
    if r_init <= 0.0 {
        return Err(CssError::NonpositiveR(r_init));
    }
    if max_outer == 0 {
        return Err(CssError::InvalidParam("max_outer must be at least 1".into()));
    }
    let mut r = r_init;
    let mut trace = Vec::new();
    let mut last: Option<SolutionRecord> = None;
    for _ in 0..max_outer {
        let truncated = spec.truncate(r, mode)?;
        let rec = minimize_on_sphere(grid, &truncated, cfg)?;
        let linf = rec.linf;
        let accepted = linf <= r;
        trace.push(OuterTraceRow { r, linf, accepted });
        last = Some(rec);
        if accepted {
            return Ok(SupercriticalRecord {
                record: last.unwrap(),
                trace,
                original_problem_solved: true,
            });
        }
        r = (2.0 * r).max(1.1 * linf);
    }
    Ok(SupercriticalRecord {
        record: last.unwrap(),
        trace,
        original_problem_solved: false,
    })
}
