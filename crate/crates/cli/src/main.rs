//! Batch front-end: one JSON config, one subcommand per invocation, artifacts
//! under a run directory. Exit codes: 0 success, 1 configuration error,
//! 2 step budget exhausted, 3 domain too small, 4 verification failure,
//! 5 no fixed point of the truncation loop.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use css_core::error::CssError;
use css_core::functional::{breakdown, fiber_constraint, fiber_energy, nehari_residual, pohozaev_residual};
use css_core::gauge::{gauge0_residual, gauge_fields};
use css_core::grid::{grad_norm_sq, make_grid};
use css_core::moser::{moser_l4_vanishing_check, threshold_check, MoserParams};
use css_core::nonlin::{
    check_ar, check_fbar_monotone, check_h_envelope, growth_envelope_check, superquadratic_combo,
    GrowthClass,
};
use css_core::solver::{mass_sweep, minimize_on_sphere_traced, solve_supercritical, SolutionRecord};
use css_core::{Family, Field2D, Grid, NonlinearitySpec, SolverConfig, TruncationMode};

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_MAX_STEPS: i32 = 2;
const EXIT_DOMAIN: i32 = 3;
const EXIT_VERIFY: i32 = 4;
const EXIT_NO_FIXED_POINT: i32 = 5;

#[derive(Parser)]
#[command(name = "css", about = "Ground states of the planar gauged Schrodinger system", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: runs/<timestamp>-<config hash>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dump fields as raw little-endian f64 instead of CSV.
    #[arg(long, global = true)]
    binary: bool,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy on the constraint manifold at prescribed mass.
    Solve,
    /// Concentrating-profile table and the compactness-threshold check.
    Moser,
    /// Run the identity / inequality suite on a synthetic corpus.
    Verify,
    /// m(a) over an increasing mass list.
    Sweep,
    /// Truncation loop for fast-growing nonlinearities.
    Supercritical,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlock {
    l: f64,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoserBlock {
    rho: f64,
    a: f64,
    n_list: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepBlock {
    a_list: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupercriticalBlock {
    r_init: f64,
    max_outer: usize,
    #[serde(default = "default_mode")]
    mode: TruncationMode,
}

fn default_mode() -> TruncationMode {
    TruncationMode::SubcriticalDelta
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyBlock {
    #[serde(default = "default_corpus")]
    corpus: usize,
}

fn default_corpus() -> usize {
    6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    grid: GridBlock,
    spec: NonlinearitySpec,
    #[serde(default)]
    solver: Option<SolverConfig>,
    #[serde(default)]
    moser: Option<MoserBlock>,
    #[serde(default)]
    sweep: Option<SweepBlock>,
    #[serde(default)]
    supercritical: Option<SupercriticalBlock>,
    #[serde(default)]
    verify: Option<VerifyBlock>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli));
}

fn run(cli: &Cli) -> i32 {
    let path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config <path> is required");
            return EXIT_CONFIG;
        }
    };
    let raw = match fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let mut de = serde_json::Deserializer::from_str(&raw);
    let cfg: RunConfig = match serde_path_to_error::deserialize(&mut de) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error at `{}`: {}", e.path(), e.inner());
            return EXIT_CONFIG;
        }
    };
    let grid = match make_grid(cfg.grid.l, cfg.grid.n) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("config error at `grid`: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = match prepare_out_dir(cli, &raw) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: cannot create output directory: {e}");
            return EXIT_CONFIG;
        }
    };
    if !cli.quiet {
        eprintln!("writing artifacts to {}", out.display());
    }
    let code = match cli.command {
        Command::Solve => cmd_solve(cli, &cfg, grid, &out),
        Command::Moser => cmd_moser(cli, &cfg, &out),
        Command::Verify => cmd_verify(&cfg, grid, &out),
        Command::Sweep => cmd_sweep(&cfg, grid, &out),
        Command::Supercritical => cmd_supercritical(cli, &cfg, grid, &out),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn exit_for(e: &CssError) -> i32 {
    match e {
        CssError::DomainTooSmall { .. } => EXIT_DOMAIN,
        CssError::NoFixedPoint(_) => EXIT_NO_FIXED_POINT,
        _ => EXIT_CONFIG,
    }
}

fn prepare_out_dir(cli: &Cli, raw_config: &str) -> std::io::Result<PathBuf> {
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => {
            let mut h = DefaultHasher::new();
            raw_config.hash(&mut h);
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_secs();
            PathBuf::from("runs").join(format!("{secs}-{:08x}", h.finish() as u32))
        }
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CssError> {
    let mut f = fs::File::create(out.join(name))?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// solve

#[derive(Serialize)]
struct SolutionSummary {
    lambda: f64,
    converged: bool,
    steps: usize,
    linf: f64,
    pohozaev_res: f64,
    nehari_res: f64,
    breakdown: css_core::EnergyBreakdown,
}

fn summarize(rec: &SolutionRecord) -> SolutionSummary {
    SolutionSummary {
        lambda: rec.lambda,
        converged: rec.converged,
        steps: rec.steps,
        linf: rec.linf,
        pohozaev_res: rec.pohozaev_res,
        nehari_res: rec.nehari_res,
        breakdown: rec.breakdown,
    }
}

fn solver_block(cfg: &RunConfig) -> Result<SolverConfig, CssError> {
    let sc = cfg
        .solver
        .clone()
        .ok_or_else(|| CssError::InvalidParam("missing `solver` block".into()))?;
    sc.validate()?;
    Ok(sc)
}

fn cmd_solve(cli: &Cli, cfg: &RunConfig, grid: Grid, out: &Path) -> Result<i32, CssError> {
    let sc = solver_block(cfg)?;
    let quiet = cli.quiet;
    let rec = minimize_on_sphere_traced(grid, &cfg.spec, &sc, &mut |p| {
        if !quiet && p.step % 250 == 0 {
            eprintln!(
                "step {:>6}  E {:+.9e}  J {:+.3e}  grad {:.3e}",
                p.step, p.e, p.j, p.grad_rel
            );
        }
    })?;
    write_json(out, "solution.json", &summarize(&rec))?;
    css_core::io::save_field(&out.join("field"), "field", &rec.u, cli.binary)?;
    Ok(if rec.converged { EXIT_OK } else { EXIT_MAX_STEPS })
}

// ---------------------------------------------------------------------------
// moser

fn cmd_moser(cli: &Cli, cfg: &RunConfig, out: &Path) -> Result<i32, CssError> {
    let blk = cfg
        .moser
        .as_ref()
        .ok_or_else(|| CssError::InvalidParam("missing `moser` block".into()))?;
    let n_grid = cfg.grid.n;
    let table = moser_l4_vanishing_check(blk.rho, blk.a, &blk.n_list, |p| {
        make_grid((p.r_n * 1.15).max(cfg.grid.l), n_grid)
    })?;
    let mut csv = String::from("n,r_n,l4_quadrature,l4_analytic,cs\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            row.n, row.r_n, row.l4_quadrature, row.l4_analytic, row.cs
        ));
    }
    fs::write(out.join("moser.csv"), csv)?;
    write_json(out, "moser.json", &table)?;

    if cfg.spec.critical_exponent().is_some() {
        let last = *blk.n_list.last().unwrap();
        let params = MoserParams::new(blk.a, blk.rho, last)?;
        let grid = make_grid((params.r_n * 1.15).max(cfg.grid.l), n_grid)?;
        let report = threshold_check(&cfg.spec, &params, grid)?;
        write_json(out, "threshold.json", &report)?;
        if !cli.quiet {
            eprintln!("threshold: max fiber energy {:.6} vs c* {:.6}", report.max_fiber_e, report.c_star);
        }
    } else {
        write_json(out, "threshold.json", &serde_json::json!({ "skipped": true }))?;
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct CheckResult {
    name: &'static str,
    pass: bool,
    value: f64,
}

/// Deterministic corpus: centered, shifted, and anisotropic bumps.
fn verify_corpus(grid: Grid, count: usize) -> Vec<Field2D> {
    (0..count)
        .map(|k| {
            let t = k as f64;
            let (cx, cy) = (0.3 * (t * 0.7).sin(), 0.3 * (t * 1.3).cos());
            let (sx, sy) = (1.0 + 0.15 * (t * 0.9).sin(), 1.0 - 0.12 * (t * 1.1).cos());
            let amp = 0.6 + 0.08 * t;
            Field2D::from_fn(grid, move |x, y| {
                amp * (-((x - cx) * (x - cx) / sx + (y - cy) * (y - cy) / sy) / 2.0).exp()
            })
        })
        .collect()
}

fn cmd_verify(cfg: &RunConfig, grid: Grid, out: &Path) -> Result<i32, CssError> {
    let count = cfg.verify.as_ref().map(|v| v.corpus).unwrap_or_else(default_corpus);
    if count == 0 {
        return Err(CssError::InvalidParam("verify corpus is empty, nothing to verify".into()));
    }
    let corpus = verify_corpus(grid, count);
    let spec = &cfg.spec;
    let samples: Vec<f64> = (1..=120).map(|k| 0.025 * k as f64).collect();
    let mut checks: Vec<CheckResult> = Vec::new();

    // gauge identity int A0 u^2 = 2 int (A1^2 + A2^2) u^2
    let mut worst = 0.0f64;
    for u in &corpus {
        let gf = gauge_fields(u)?;
        worst = worst.max(gauge0_residual(u, &gf).abs() / gf.cs_energy.abs().max(1e-300));
    }
    checks.push(CheckResult { name: "gauge_identity", pass: worst <= 1e-6, value: worst });

    // Nehari minus Pohozaev equals the constraint, for arbitrary multipliers
    let mut worst = 0.0f64;
    for (k, u) in corpus.iter().enumerate() {
        let lambda = -0.5 + 0.3 * k as f64;
        let nr = nehari_residual(u, spec, lambda)?;
        let pr = pohozaev_residual(u, spec, lambda)?;
        let j = breakdown(u, spec)?.j;
        worst = worst.max((nr - pr - j).abs());
    }
    checks.push(CheckResult { name: "nehari_pohozaev_j", pass: worst <= 1e-10, value: worst });

    // dE(u_t)/dt = J(u_t)/t along the fiber
    let mut worst = 0.0f64;
    for u in &corpus {
        for t in [0.8, 1.0, 1.25] {
            let eps = 1e-5;
            let fd = (fiber_energy(u, spec, t + eps)? - fiber_energy(u, spec, t - eps)?) / (2.0 * eps);
            let jt = fiber_constraint(u, spec, t)? / t;
            worst = worst.max((fd - jt).abs() / (1.0 + jt.abs()));
        }
    }
    checks.push(CheckResult { name: "fiber_derivative", pass: worst <= 1e-5, value: worst });

    let ar = check_ar(spec, &samples)?;
    checks.push(CheckResult { name: "ar", pass: ar.holds, value: ar.worst_ratio });

    let mono = check_fbar_monotone(spec, &samples)?;
    checks.push(CheckResult {
        name: "fbar_monotone",
        pass: mono.holds,
        value: mono.violations.len() as f64,
    });

    let mut min_combo = f64::INFINITY;
    for &s in &samples {
        min_combo = min_combo.min(superquadratic_combo(spec, s)?);
    }
    checks.push(CheckResult {
        name: "superquadratic_combo",
        pass: min_combo >= -1e-12,
        value: min_combo,
    });

    // growth envelope: supercritical families get the h-envelope instead,
    // since no fixed Gaussian-weight envelope can hold for them
    match (&spec.family, spec.growth_class()) {
        (Family::Supercritical { .. }, GrowthClass::SupercriticalExp) => {
            let ok = check_h_envelope(spec, &samples)?;
            checks.push(CheckResult { name: "h_envelope", pass: ok, value: 0.0 });
        }
        _ => {
            let alpha = spec.critical_exponent().unwrap_or(1.0);
            let rep = growth_envelope_check(spec, 0.25, alpha, 4.5, &samples);
            checks.push(CheckResult { name: "growth_envelope", pass: rep.holds, value: rep.c_eps });
        }
    }

    // quartic interpolation: |u|_4^4 / (|u|_2^2 |grad u|_2^2) stays under
    // the planar best constant ~0.1709
    let mut worst = 0.0f64;
    for u in &corpus {
        let ratio = u.lp_pow(4.0) / (u.lp_pow(2.0) * grad_norm_sq(u));
        worst = worst.max(ratio);
    }
    checks.push(CheckResult { name: "quartic_interpolation", pass: worst <= 0.172, value: worst });

    // exponential-moment boundedness on gradient-normalized fields at half
    // the critical weight
    let mut worst = 0.0f64;
    let mut finite = true;
    for u in &corpus {
        let v = u.scale(1.0 / grad_norm_sq(u).sqrt());
        let moment = v.map(|s| (2.0 * std::f64::consts::PI * s * s).exp() - 1.0).integrate();
        finite &= moment.is_finite();
        worst = worst.max(moment / (1.0 + v.lp_pow(2.0)));
    }
    checks.push(CheckResult { name: "exp_moment", pass: finite && worst <= 100.0, value: worst });

    write_json(out, "verify.json", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("verification failed: {}", failed.join(", "));
        Ok(EXIT_VERIFY)
    }
}

// ---------------------------------------------------------------------------
// sweep

fn cmd_sweep(cfg: &RunConfig, grid: Grid, out: &Path) -> Result<i32, CssError> {
    let blk = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CssError::InvalidParam("missing `sweep` block".into()))?;
    let sc = solver_block(cfg)?;
    let table = mass_sweep(grid, &cfg.spec, &blk.a_list, &sc)?;
    let mut csv = String::from("a,m,lambda,converged,nonincreasing\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{},{}\n",
            row.a, row.m, row.lambda, row.converged, table.nonincreasing
        ));
    }
    fs::write(out.join("sweep.csv"), csv)?;
    write_json(out, "sweep.json", &table)?;
    if table.rows.iter().any(|r| !r.converged) {
        return Ok(EXIT_MAX_STEPS);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// supercritical

#[derive(Serialize)]
struct SupercriticalSummary {
    original_problem_solved: bool,
    trace: Vec<css_core::solver::OuterTraceRow>,
    solution: SolutionSummary,
}

fn cmd_supercritical(cli: &Cli, cfg: &RunConfig, grid: Grid, out: &Path) -> Result<i32, CssError> {
    let blk = cfg
        .supercritical
        .as_ref()
        .ok_or_else(|| CssError::InvalidParam("missing `supercritical` block".into()))?;
    let sc = solver_block(cfg)?;
    let res = solve_supercritical(grid, &cfg.spec, &sc, blk.r_init, blk.max_outer, blk.mode)?;
    write_json(
        out,
        "supercritical.json",
        &SupercriticalSummary {
            original_problem_solved: res.original_problem_solved,
            trace: res.trace.clone(),
            solution: summarize(&res.record),
        },
    )?;
    css_core::io::save_field(&out.join("field"), "field", &res.record.u, cli.binary)?;
    if !res.original_problem_solved {
        eprintln!("{}", CssError::NoFixedPoint(blk.max_outer));
        return Ok(EXIT_NO_FIXED_POINT);
    }
    Ok(if res.record.converged { EXIT_OK } else { EXIT_MAX_STEPS })
}
