//! Truncated-logarithm (Moser type) concentration profiles: the radius
//! equation tying the mass to the support radius, pointwise sampling of the
//! four-branch profile, its closed-form norms, and the energy-threshold
//! diagnostics they feed.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CssError, Result};
use crate::functional::{project_on_fiber, Fiber};
use crate::gauge::gauge_fields;
use crate::grid::{Field2D, Grid};
use crate::nonlin::NonlinearitySpec;

/// Parameters of one profile w_n: plateau index n, inner scale rho, mass
/// a^2, support radius r_n solving the radius equation, plus the exponents
/// entering the threshold diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MoserParams {
    pub n: u64,
    pub rho: f64,
    pub a: f64,
    pub r_n: f64,
    pub alpha0: f64,
    pub theta: f64,
    pub beta0: f64,
}

/// Smallest admissible support radius for a given rho.
pub fn min_rn(rho: f64) -> f64 {
    let l2 = std::f64::consts::LN_2;
    (2.0 + l2) / (2.0 * (2.0 - l2)) * rho
}

/// Right side of the radius equation as a function of R_n.
pub fn mass_of_rn(rho: f64, n: u64, rn: f64) -> f64 {
    let l2 = std::f64::consts::LN_2;
    let ln_n = (n as f64).ln();
    let n2 = (n as f64) * (n as f64);
    rho * rho / (16.0 * ln_n) * (2.0 * l2 * l2 + 2.0 * l2 + 1.0 - 8.0 * ln_n / n2 - 4.0 / n2)
        + (2.0 * rn - rho) * (2.0 * rn + 3.0 * rho) * l2 * l2 / (48.0 * ln_n)
}

/// Invert the radius equation: the R_n >= min_rn(rho) with mass a^2.
/// The right side is strictly increasing in R_n, so plain bisection works.
pub fn solve_rn(a: f64, rho: f64, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(CssError::InvalidParam(format!("n must be at least 2, got {n}")));
    }
    if rho <= 0.0 {
        return Err(CssError::InvalidParam(format!("rho must be positive, got {rho}")));
    }
    let a_sq = a * a;
    let mut lo = min_rn(rho);
    let floor = mass_of_rn(rho, n, lo);
    if a_sq < floor {
        return Err(CssError::NoRoot { a_sq, min: floor });
    }
    let mut hi = lo.max(1.0);
    while mass_of_rn(rho, n, hi) < a_sq {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(CssError::InvalidParam("radius equation runaway".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_of_rn(rho, n, mid) < a_sq {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl MoserParams {
    pub fn new(a: f64, rho: f64, n: u64) -> Result<Self> {
        let r_n = solve_rn(a, rho, n)?;
        Ok(MoserParams { n, rho, a, r_n, alpha0: 1.0, theta: 4.5, beta0: 1.0 })
    }

    pub fn with_exponents(mut self, alpha0: f64, theta: f64, beta0: f64) -> Self {
        self.alpha0 = alpha0;
        self.theta = theta;
        self.beta0 = beta0;
        self
    }

    /// Lower bound on rho demanded by the threshold argument:
    /// rho > (1/(alpha0 beta0)) sqrt(pi (theta-2)/theta).
    pub fn rho_floor(&self) -> f64 {
        (PI * (self.theta - 2.0) / self.theta).sqrt() / (self.alpha0 * self.beta0)
    }

    /// Radial profile value (before grid sampling).
    pub fn profile(&self, r: f64) -> f64 {
        let ln_n = (self.n as f64).ln();
        let scale = 1.0 / (2.0 * PI).sqrt();
        let rho = self.rho;
        let rn = self.r_n;
        scale
            * if r <= rho / self.n as f64 {
                ln_n.sqrt()
            } else if r <= rho / 2.0 {
                (rho / r).ln() / ln_n.sqrt()
            } else if r < rn {
                2.0 * (rn - r) * std::f64::consts::LN_2 / ((2.0 * rn - rho) * ln_n.sqrt())
            } else {
                0.0
            }
    }
}

/// Sample the profile on a grid; the support must fit inside the domain.
pub fn moser_field(params: &MoserParams, grid: Grid) -> Result<Field2D> {
    if grid.half_width() <= params.r_n {
        return Err(CssError::SupportExceedsDomain { rn: params.r_n, l: grid.half_width() });
    }
    Ok(Field2D::from_fn(grid, |x, y| params.profile((x * x + y * y).sqrt())))
}

/// Closed-form norms of the profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MoserNorms {
    /// |w_n|_2^2, equal to a^2 by construction.
    pub l2sq: f64,
    /// |grad w_n|_2^2.
    pub gradsq: f64,
    /// The three |w_n|_4^4 contributions: plateau disk, logarithmic annulus,
    /// linear outer annulus.
    pub l4_pieces: (f64, f64, f64),
}

pub fn moser_analytic_norms(params: &MoserParams) -> MoserNorms {
    let l2 = std::f64::consts::LN_2;
    let ln_n = (params.n as f64).ln();
    let (rho, rn, n) = (params.rho, params.r_n, params.n as f64);
    let l2sq = mass_of_rn(params.rho, params.n, rn);
    let gradsq = 1.0 - l2 / ln_n + (2.0 * rn + rho) * l2 * l2 / (2.0 * (2.0 * rn - rho) * ln_n);
    let inner = rho * rho * ln_n * ln_n / (4.0 * PI * n * n);
    // antiderivative of t^4 e^{2t} is e^{2t}(2t^4 - 4t^3 + 6t^2 - 6t + 3)/4
    let anti = |t: f64| (2.0 * t.powi(4) - 4.0 * t.powi(3) + 6.0 * t * t - 6.0 * t + 3.0) * (2.0 * t).exp();
    let middle = rho * rho / (8.0 * PI * ln_n * ln_n)
        * (anti(0.5f64.ln()) - anti((1.0 / n).ln()));
    // integral over [rho/2, R_n] of (R_n - r)^4 r dr = R_n c^5/5 - c^6/6
    let c = rn - rho / 2.0;
    let outer = 8.0 * l2.powi(4) / (PI * ln_n * ln_n * (2.0 * rn - rho).powi(4))
        * (rn * c.powi(5) / 5.0 - c.powi(6) / 6.0);
    MoserNorms { l2sq, gradsq, l4_pieces: (inner, middle, outer) }
}

/// One row of the concentration diagnostic along an n-list.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct L4Row {
    pub n: u64,
    pub r_n: f64,
    pub l4_quadrature: f64,
    pub l4_analytic: f64,
    pub cs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct L4Table {
    pub rows: Vec<L4Row>,
    pub l4_decreasing: bool,
    pub cs_decreasing: bool,
}

/// |w_n|_4^4 (quadrature and closed form) and the Chern-Simons term along an
/// increasing n-list; both sequences must fall for the concentration argument
/// to go through, and the flags record whether they do.
pub fn moser_l4_vanishing_check(
    rho: f64,
    a: f64,
    n_list: &[u64],
    grid_for: impl Fn(&MoserParams) -> Result<Grid>,
) -> Result<L4Table> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CssError::InvalidParam("n_list must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = MoserParams::new(a, rho, n)?;
        let grid = grid_for(&params)?;
        let w = moser_field(&params, grid)?;
        let norms = moser_analytic_norms(&params);
        let gf = gauge_fields(&w)?;
        rows.push(L4Row {
            n,
            r_n: params.r_n,
            l4_quadrature: w.lp_pow(4.0),
            l4_analytic: norms.l4_pieces.0 + norms.l4_pieces.1 + norms.l4_pieces.2,
            cs: gf.cs_energy,
        });
    }
    let l4_decreasing = rows.windows(2).all(|w| w[1].l4_quadrature < w[0].l4_quadrature);
    let cs_decreasing = rows.windows(2).all(|w| w[1].cs < w[0].cs);
    Ok(L4Table { rows, l4_decreasing, cs_decreasing })
}

// ---------------------------------------------------------------------------
// Thresholds

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub max_fiber_e: f64,
    pub t_at_max: f64,
    pub c_star: f64,
    pub passes: bool,
    /// Number of fiber evaluations that overflowed during the scan.
    pub overflows: usize,
}

/// Maximize the fiber energy of the profile and compare with the critical
/// level 2 pi / alpha0: the compactness threshold passes when the max stays
/// strictly below it.
pub fn threshold_check(
    spec: &NonlinearitySpec,
    params: &MoserParams,
    grid: Grid,
) -> Result<ThresholdReport> {
    let alpha0 = spec
        .critical_exponent()
        .ok_or_else(|| CssError::InvalidParam("threshold needs a critical-growth spec".into()))?;
    let c_star = 2.0 * PI / alpha0;
    let w = moser_field(params, grid)?;
    let fiber = Fiber::new(&w, spec)?;
    let mut overflows = 0usize;
    let mut eval = |t: f64| -> Result<f64> {
        match fiber.energy(t) {
            Ok(v) => Ok(v),
            Err(CssError::Overflow { .. }) => {
                overflows += 1;
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    };
    // coarse log-spaced scan, then golden-section refinement
    let (lt_lo, lt_hi) = (-7.0f64, 6.0); // log t
    let scans = 240;
    let mut best = (f64::NEG_INFINITY, 0.0f64);
    for i in 0..=scans {
        let lt = lt_lo + (lt_hi - lt_lo) * i as f64 / scans as f64;
        let v = eval(lt.exp())?;
        if v > best.0 {
            best = (v, lt);
        }
    }
    let step = (lt_hi - lt_lo) / scans as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1.exp())?;
    let mut f2 = eval(x2.exp())?;
    for _ in 0..120 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2.exp())?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1.exp())?;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    let lt = 0.5 * (a + b);
    let max_fiber_e = eval(lt.exp())?;
    Ok(ThresholdReport {
        max_fiber_e,
        t_at_max: lt.exp(),
        c_star,
        passes: max_fiber_e < c_star,
        overflows,
    })
}

/// Coefficient threshold for the truncated supercritical problem:
/// xi above this level forces the mountain-pass level under the compactness
/// bound. `c_bar_r` is the empirical gauge-bound constant.
pub fn xi_threshold(
    r: f64,
    a: f64,
    p: f64,
    gamma: f64,
    alpha_bar0: f64,
    delta: f64,
    c_bar_r: f64,
) -> Result<f64> {
    if p <= 4.0 {
        return Err(CssError::InvalidParam(format!("xi threshold needs p > 4, got {p}")));
    }
    if r <= 0.0 {
        return Err(CssError::NonpositiveR(r));
    }
    let eff = gamma + alpha_bar0 * r.powf(delta - 2.0);
    let lead = p * (1.0 + 16.0 * c_bar_r * c_bar_r * a.powi(3)).powf(p - 2.0)
        / ((p - 2.0) * a.powf(p));
    Ok(lead
        * PI.powf((p - 2.0) / 2.0)
        * ((p - 4.0) * eff / (4.0 * PI * (p - 2.0))).powf((p - 4.0) / 2.0))
}

/// Fiber projection of the profile by the root-finder shared with the
/// solver, for cross-checking the golden-section maximum.
pub fn project_profile(
    spec: &NonlinearitySpec,
    params: &MoserParams,
    grid: Grid,
) -> Result<crate::functional::Projection> {
    let w = moser_field(params, grid)?;
    let fiber = Fiber::new(&w, spec)?;
    project_on_fiber(&fiber)
}
