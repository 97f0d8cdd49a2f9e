//! Chern-Simons gauge fields determined by a density u^2.
//!
//! With G the logarithmic fundamental solution of the Laplacian, the curl and
//! divergence constraints give
//!
//!   A1 = d2 G * (u^2 / 2),   A2 = -d1 G * (u^2 / 2),
//!   A0 = d1 G * (A2 u^2) - d2 G * (A1 u^2),
//!
//! so in frequency space A1 and A2 come from the Riesz multipliers
//! -i k2/(2|k|^2) and +i k1/(2|k|^2) applied to the transform of u^2. These
//! signs are fixed by the curl equation d1 A2 - d2 A1 = -u^2/2; they are the
//! ones under which the integral identity
//!
//!   integral A0 u^2 = 2 * integral (A1^2 + A2^2) u^2
//!
//! holds exactly for the discrete operators, and they agree with the radial
//! ansatz A1 = (x2/|x|^2) h(|x|), A2 = -(x1/|x|^2) h(|x|) with h >= 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CssError, Result};
use crate::grid::{check_same_grid, convolve_free, convolve_free_kernel, fiber_resample, Field2D};

/// The triple (A0, A1, A2) with the Chern-Simons energy term.
#[derive(Debug, Clone)]
pub struct GaugeFields {
    pub a0: Field2D,
    pub a1: Field2D,
    pub a2: Field2D,
    /// integral (A1^2 + A2^2) u^2
    pub cs_energy: f64,
}

/// Kernel discretization route. `Spectral` is the primary path; `RealSpace`
/// samples the kernels pointwise (origin value 0) for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRoute {
    #[default]
    Spectral,
    RealSpace,
}

/// J0 Bessel function by the classical rational approximations
/// (absolute error below 5e-8 on the whole axis).
fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        let t = (ax / 3.0) * (ax / 3.0);
        1.0 + t
            * (-2.2499997
                + t * (1.2656208
                    + t * (-0.3163866 + t * (0.0444479 + t * (-0.0039444 + t * 0.0002100)))))
    } else {
        let t = 3.0 / ax;
        let f0 = 0.79788456
            + t * (-0.00000077
                + t * (-0.00552740
                    + t * (-0.00009512
                        + t * (0.00137237 + t * (-0.00072805 + t * 0.00014476)))));
        let theta0 = ax - 0.78539816
            + t * (-0.04166397
                + t * (-0.00003954
                    + t * (0.00262573
                        + t * (-0.00054125 + t * (-0.00029333 + t * 0.00013558)))));
        f0 * theta0.cos() / ax.sqrt()
    }
}

fn riesz_convolve(density: &Field2D, component: usize, route: KernelRoute) -> Field2D {
    // kernel d_j G = x_j / (2 pi |x|^2), transform -i k_j / |k|^2.
    //
    // The spectral route convolves with the kernel truncated to |x| < 2L
    // (transform -i k_j (1 - J0(2L|k|)) / |k|^2): the truncated kernel fits
    // inside the padded period, so the wrapped images that the raw 1/|k|
    // multiplier drags in are cut off at the source. Fields of interest are
    // negligible at distance 2L, so the truncation itself costs nothing.
    match route {
        KernelRoute::Spectral => {
            let r0 = 2.0 * density.grid().half_width();
            convolve_free(density, |kx, ky| {
                let k2 = kx * kx + ky * ky;
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let kj = if component == 1 { kx } else { ky };
                    Complex64::new(0.0, -kj * (1.0 - bessel_j0(k2.sqrt() * r0)) / k2)
                }
            })
        }
        KernelRoute::RealSpace => convolve_free_kernel(density, |dx, dy| {
            let r2 = dx * dx + dy * dy;
            if r2 == 0.0 {
                0.0
            } else {
                let xj = if component == 1 { dx } else { dy };
                xj / (2.0 * PI * r2)
            }
        }),
    }
}

/// A1 and A2 from the density u^2.
pub fn compute_a12(u: &Field2D) -> (Field2D, Field2D) {
    compute_a12_with(u, KernelRoute::Spectral)
}

pub fn compute_a12_with(u: &Field2D, route: KernelRoute) -> (Field2D, Field2D) {
    let half_density = u.map(|v| 0.5 * v * v);
    let a1 = riesz_convolve(&half_density, 2, route);
    let a2 = riesz_convolve(&half_density, 1, route).scale(-1.0);
    (a1, a2)
}

/// A0 from u^2 and the matching (A1, A2).
pub fn compute_a0(u: &Field2D, a1: &Field2D, a2: &Field2D) -> Result<Field2D> {
    compute_a0_with(u, a1, a2, KernelRoute::Spectral)
}

pub fn compute_a0_with(
    u: &Field2D,
    a1: &Field2D,
    a2: &Field2D,
    route: KernelRoute,
) -> Result<Field2D> {
    check_same_grid(u, a1)?;
    check_same_grid(u, a2)?;
    let g1 = u.zip(a2, |uv, av| av * uv * uv)?;
    let g2 = u.zip(a1, |uv, av| av * uv * uv)?;
    let first = riesz_convolve(&g1, 1, route);
    let second = riesz_convolve(&g2, 2, route);
    first.zip(&second, |a, b| a - b)
}

/// integral (A1^2 + A2^2) u^2.
pub fn cs_energy(u: &Field2D, a1: &Field2D, a2: &Field2D) -> f64 {
    let h = u.grid().spacing();
    let mut acc = 0.0;
    let (uv, v1, v2) = (u.values(), a1.values(), a2.values());
    for ((a, b), c) in uv.iter().zip(v1.iter()).zip(v2.iter()) {
        acc += (b * b + c * c) * a * a;
    }
    acc * h * h
}

/// Compute the full gauge triple and the Chern-Simons energy.
pub fn gauge_fields(u: &Field2D) -> Result<GaugeFields> {
    gauge_fields_with(u, KernelRoute::Spectral)
}

pub fn gauge_fields_with(u: &Field2D, route: KernelRoute) -> Result<GaugeFields> {
    let (a1, a2) = compute_a12_with(u, route);
    let a0 = compute_a0_with(u, &a1, &a2, route)?;
    let cs = cs_energy(u, &a1, &a2);
    if !(a0.is_finite() && a1.is_finite() && a2.is_finite() && cs.is_finite()) {
        return Err(CssError::NonFinite("gauge fields".into()));
    }
    Ok(GaugeFields { a0, a1, a2, cs_energy: cs })
}

/// Residual of the integral identity relating A0 to the Chern-Simons term,
/// i.e. integral A0 u^2 - 2 * integral (A1^2+A2^2) u^2.
pub fn gauge0_residual(u: &Field2D, g: &GaugeFields) -> f64 {
    let a0u2 = u.zip(&g.a0, |uv, a| a * uv * uv).expect("same grid").integrate();
    a0u2 - 2.0 * g.cs_energy
}

// ---------------------------------------------------------------------------
// Diagnostic bounds

/// Empirical ratios for the Hardy-Littlewood-Sobolev bounds on the gauge
/// fields: |A_j|_{r_hat} / |u|_{2r}^2 and |A_j u|_2 / ||u||_{H^1}^3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeBoundsReport {
    pub r: f64,
    pub r_hat: f64,
    pub ratio_a1: f64,
    pub ratio_a2: f64,
    pub ratio_gauge1: f64,
    pub corpus_size: usize,
    pub degenerate: bool,
}

/// Diagnostic estimate of the bound constants for a single field.
/// `r` must lie in (1, 2); `r_hat` solves 1/r - 1/r_hat = 1/2.
pub fn gauge_bounds_report(u: &Field2D, r: f64) -> Result<GaugeBoundsReport> {
    gauge_bounds_report_corpus(std::slice::from_ref(u), r)
}

/// Same ratios, maximized over a corpus of fields.
pub fn gauge_bounds_report_corpus(corpus: &[Field2D], r: f64) -> Result<GaugeBoundsReport> {
    if !(1.0 < r && r < 2.0) {
        return Err(CssError::InvalidParam(format!("r must lie in (1, 2), got {r}")));
    }
    let r_hat = 1.0 / (1.0 / r - 0.5);
    let mut report = GaugeBoundsReport {
        r,
        r_hat,
        ratio_a1: 0.0,
        ratio_a2: 0.0,
        ratio_gauge1: 0.0,
        corpus_size: corpus.len(),
        degenerate: true,
    };
    for u in corpus {
        let (a1, a2) = compute_a12(u);
        let u2r = u.lp_pow(2.0 * r).powf(1.0 / (2.0 * r));
        if u2r == 0.0 {
            continue;
        }
        report.degenerate = false;
        let h1_cubed = (crate::grid::grad_norm_sq(u) + u.lp_pow(2.0)).powf(1.5);
        for (a, slot) in [(&a1, 0usize), (&a2, 1)] {
            let a_rhat = a.lp_pow(r_hat).powf(1.0 / r_hat);
            let ratio = a_rhat / (u2r * u2r);
            if slot == 0 {
                report.ratio_a1 = report.ratio_a1.max(ratio);
            } else {
                report.ratio_a2 = report.ratio_a2.max(ratio);
            }
            let au_l2 = a.zip(u, |av, uv| av * uv)?.lp_pow(2.0).sqrt();
            report.ratio_gauge1 = report.ratio_gauge1.max(au_l2 / h1_cubed);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Disjoint-support additivity

/// Per-t residual |CS(u_t + v) - CS(u_t) - CS(v)| for the dilations
/// u_t(x) = t u(tx); the residual vanishes as t -> 0+ when the supports of
/// u_t and v stay disjoint.
pub fn disjoint_support_additivity_check(
    u: &Field2D,
    v: &Field2D,
    t_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_same_grid(u, v)?;
    let cs_of = |w: &Field2D| -> Result<f64> {
        let (a1, a2) = compute_a12(w);
        Ok(cs_energy(w, &a1, &a2))
    };
    let cs_v = cs_of(v)?;
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if t <= 0.0 {
            return Err(CssError::InvalidParam(format!("t must be positive, got {t}")));
        }
        let ut = fiber_resample(u, t);
        // support overlap check on the grid
        let overlap = ut
            .values()
            .iter()
            .zip(v.values().iter())
            .any(|(a, b)| a.abs() > 1e-14 && b.abs() > 1e-14);
        if overlap {
            return Err(CssError::SupportsOverlap(t));
        }
        let sum = ut.zip(v, |a, b| a + b)?;
        let residual = (cs_of(&sum)? - cs_of(&ut)? - cs_v).abs();
        out.push((t, residual));
    }
    Ok(out)
}
