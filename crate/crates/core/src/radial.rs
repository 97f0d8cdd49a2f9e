//! 1-D radial reduction: for u = u(|x|) the gauge triple collapses to a
//! single profile h(s) = (1/2) int_0^s r u^2(r) dr, the tangential gauge
//! magnitude is h(r)/r, and the full gauge coefficient in the stationary
//! equation becomes V(r) = int_r^inf (h(s)/s) u^2(s) ds + h^2(r)/r^2.
//! Used to cross-validate the 2-D code paths, plus a cheap 1-D ground-state
//! solve on the same constraint manifold.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{CssError, Result};
use crate::grid::Field2D;
use crate::nonlin::NonlinearitySpec;

/// Profile u(r_i) on the uniform radial grid r_i = i * dr, i = 0..m-1,
/// with r_max = (m-1) * dr.
#[derive(Debug, Clone)]
pub struct RadialField {
    r_max: f64,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(r_max: f64, values: Vec<f64>) -> Result<Self> {
        if r_max <= 0.0 || !r_max.is_finite() {
            return Err(CssError::NonpositiveL(r_max));
        }
        if values.len() < 4 {
            return Err(CssError::InvalidParam(format!(
                "radial grid needs at least 4 nodes, got {}",
                values.len()
            )));
        }
        Ok(RadialField { r_max, values })
    }

    pub fn from_fn(r_max: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dr = r_max / (m.max(2) - 1) as f64;
        RadialField::new(r_max, (0..m).map(|i| f(i as f64 * dr)).collect())
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dr(&self) -> f64 {
        self.r_max / (self.values.len() - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// 2 pi int u^2 r dr by trapezoid.
    pub fn mass(&self) -> f64 {
        let dr = self.dr();
        let mut acc = 0.0;
        for i in 0..self.values.len() - 1 {
            let a = self.values[i] * self.values[i] * self.r(i);
            let b = self.values[i + 1] * self.values[i + 1] * self.r(i + 1);
            acc += 0.5 * (a + b) * dr;
        }
        2.0 * std::f64::consts::PI * acc
    }
}

/// h(s) = int_0^s (r/2) u^2(r) dr, cumulative trapezoid; h(0) = 0.
pub fn radial_h(u: &RadialField) -> RadialField {
    let dr = u.dr();
    let mut out = vec![0.0; u.len()];
    for i in 1..u.len() {
        let a = u.r(i - 1) * u.values[i - 1] * u.values[i - 1];
        let b = u.r(i) * u.values[i] * u.values[i];
        out[i] = out[i - 1] + 0.25 * (a + b) * dr;
    }
    RadialField { r_max: u.r_max, values: out }
}

/// V(r) = int_r^{r_max} (h(s)/s) u^2(s) ds + h^2(r)/r^2. The integrand and
/// the second term both extend continuously by 0 at r = 0 since h = O(r^2).
pub fn radial_cs_potential(u: &RadialField) -> RadialField {
    let h = radial_h(u);
    let dr = u.dr();
    let m = u.len();
    // integrand h(s)/s * u^2(s), with the s = 0 limit 0
    let g: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                h.values[i] / u.r(i) * u.values[i] * u.values[i]
            }
        })
        .collect();
    let mut tail = vec![0.0; m];
    for i in (0..m - 1).rev() {
        tail[i] = tail[i + 1] + 0.5 * (g[i] + g[i + 1]) * dr;
    }
    let mut out = vec![0.0; m];
    for i in 0..m {
        let sq = if i == 0 {
            0.0
        } else {
            let hv = h.values[i] / u.r(i);
            hv * hv
        };
        out[i] = tail[i] + sq;
    }
    RadialField { r_max: u.r_max, values: out }
}

/// 2 pi int (h^2/r^2) u^2 r dr: the part of the gauge energy that the 2-D
/// code reports as its cs term.
pub fn radial_cs_energy(u: &RadialField) -> f64 {
    let h = radial_h(u);
    let dr = u.dr();
    let mut acc = 0.0;
    for i in 1..u.len() - 1 {
        // integrand (h^2/r^2) u^2 r = h^2 u^2 / r, zero at r = 0
        acc += h.values[i] * h.values[i] * u.values[i] * u.values[i] / u.r(i);
    }
    let last = u.len() - 1;
    acc += 0.5 * h.values[last] * h.values[last] * u.values[last] * u.values[last] / u.r(last);
    2.0 * std::f64::consts::PI * acc * dr
}

/// Deviation report of the 2-D gauge code against the radial reduction.
#[derive(Debug, Clone, Copy)]
pub struct CrosscheckReport {
    /// max over sampled radii of |sqrt(A1^2+A2^2) - h(r)/r|
    pub gauge_magnitude_dev: f64,
    /// relative deviation of the 2-D cs readout from the radial quadrature
    pub cs_energy_rel_dev: f64,
}

/// Angular asymmetry of a 2-D field: max over radii of the spread between
/// the four axis samples, relative to the sup norm.
fn angular_deviation(u: &Field2D) -> f64 {
    let g = u.grid();
    let n = g.n();
    let c = n / 2;
    let sup = u.linf().max(1e-300);
    let v = u.values();
    let mut worst: f64 = 0.0;
    for k in 1..c {
        let samples = [
            v[[c + k, c]],
            v[[c - k, c]],
            v[[c, c + k]],
            v[[c, c - k]],
        ];
        let hi = samples.iter().cloned().fold(f64::MIN, f64::max);
        let lo = samples.iter().cloned().fold(f64::MAX, f64::min);
        worst = worst.max((hi - lo) / sup);
    }
    worst
}

const RADIAL_TOL: f64 = 1e-6;

/// Extract the profile along the positive x half-axis and compare the 2-D
/// gauge magnitude and cs energy against the radial formulas.
pub fn radial_crosscheck(u2d: &Field2D) -> Result<CrosscheckReport> {
    let dev = angular_deviation(u2d);
    if dev > RADIAL_TOL {
        return Err(CssError::NotRadial(dev));
    }
    let g = u2d.grid();
    let n = g.n();
    let c = n / 2;
    let ray: Vec<f64> = (0..c).map(|k| u2d.values()[[c + k, c]]).collect();
    let profile = RadialField::new((c - 1) as f64 * g.spacing(), ray)?;
    let h = radial_h(&profile);

    let gf = crate::gauge::gauge_fields(u2d)?;
    let mut gauge_dev: f64 = 0.0;
    for k in 1..c {
        let idx = [c + k, c];
        let mag = (gf.a1.values()[idx].powi(2) + gf.a2.values()[idx].powi(2)).sqrt();
        gauge_dev = gauge_dev.max((mag - h.values[k] / profile.r(k)).abs());
    }
    let cs_r = radial_cs_energy(&profile);
    let cs_rel = if gf.cs_energy.abs() > 1e-300 {
        (cs_r - gf.cs_energy).abs() / gf.cs_energy.abs()
    } else {
        (cs_r - gf.cs_energy).abs()
    };
    Ok(CrosscheckReport { gauge_magnitude_dev: gauge_dev, cs_energy_rel_dev: cs_rel })
}

// ---------------------------------------------------------------------------
// 1-D ground-state solve

/// Scalar readouts of a radial profile, mirroring the 2-D breakdown.
#[derive(Debug, Clone, Copy)]
pub struct RadialBreakdown {
    pub kinetic: f64,
    pub cs: f64,
    pub potential: f64,
    pub e: f64,
    pub j: f64,
    pub mass: f64,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Finite-volume node weights: cell [r_i - dr/2, r_i + dr/2] clipped to
/// [0, r_max], measure 2 pi r dr. Positive at every node, unlike the
/// trapezoid weight which vanishes at r = 0.
fn fv_weights(u: &RadialField) -> Vec<f64> {
    let dr = u.dr();
    let m = u.len();
    let mut w = vec![0.0; m];
    w[0] = TWO_PI * dr * dr / 8.0;
    for (i, slot) in w.iter_mut().enumerate().take(m - 1).skip(1) {
        *slot = TWO_PI * u.r(i) * dr;
    }
    w[m - 1] = TWO_PI * (u.r(m - 1) - 0.25 * dr) * 0.5 * dr;
    w
}

fn weighted_inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((wi, ai), bi)| wi * ai * bi).sum()
}

/// 2 pi int u'^2 r dr with midpoint cells: the discrete form whose exact
/// gradient the flow uses.
fn radial_kinetic(u: &RadialField) -> f64 {
    let dr = u.dr();
    let mut acc = 0.0;
    for i in 0..u.len() - 1 {
        let d = (u.values[i + 1] - u.values[i]) / dr;
        acc += d * d * (u.r(i) + 0.5 * dr) * dr;
    }
    TWO_PI * acc
}

fn radial_breakdown(u: &RadialField, spec: &NonlinearitySpec) -> Result<RadialBreakdown> {
    let w = fv_weights(u);
    let kinetic = radial_kinetic(u);
    let cs = radial_cs_energy(u);
    let mut potential = 0.0;
    let mut fu = 0.0;
    for (i, &v) in u.values.iter().enumerate() {
        potential += w[i] * spec.eval_big_f(v)?;
        fu += w[i] * spec.eval_f(v)? * v;
    }
    let mass: f64 = u.values.iter().enumerate().map(|(i, &v)| w[i] * v * v).sum();
    Ok(RadialBreakdown {
        kinetic,
        cs,
        potential,
        e: 0.5 * (kinetic + cs) - potential,
        j: kinetic + cs - (fu - 2.0 * potential),
        mass,
    })
}

/// Exact gradient of the discrete kinetic form w.r.t. the weighted inner
/// product; equals -u'' - u'/r up to O(dr^2) with a Neumann node at r = 0.
fn kinetic_gradient(u: &RadialField, w: &[f64]) -> Vec<f64> {
    let dr = u.dr();
    let m = u.len();
    let mut g = vec![0.0; m];
    for i in 0..m - 1 {
        let flux = TWO_PI * 2.0 * (u.values[i + 1] - u.values[i]) / dr * (u.r(i) + 0.5 * dr);
        g[i] -= flux;
        g[i + 1] += flux;
    }
    for i in 0..m {
        g[i] /= w[i];
    }
    g
}

fn radial_euler_gradient(
    u: &RadialField,
    spec: &NonlinearitySpec,
    w: &[f64],
    v_cs: &RadialField,
) -> Result<Vec<f64>> {
    let mut g = kinetic_gradient(u, w);
    for i in 0..u.len() {
        // E carries (kin + cs)/2, and the cs variation yields 2 V u
        g[i] = 0.5 * g[i] + v_cs.values[i] * u.values[i] - spec.eval_f(u.values[i])?;
    }
    Ok(g)
}

fn radial_constraint_gradient(
    u: &RadialField,
    spec: &NonlinearitySpec,
    w: &[f64],
    v_cs: &RadialField,
) -> Result<Vec<f64>> {
    let mut g = kinetic_gradient(u, w);
    for i in 0..u.len() {
        let s = u.values[i];
        g[i] += 2.0 * v_cs.values[i] * s - spec.eval_fprime(s)? * s + spec.eval_f(s)?;
    }
    Ok(g)
}

/// J(u_t) along the dilation fiber u_t(r) = t u(t r), by linear resampling
/// of the profile (u_t is supported where tr <= r_max; beyond that u ~ 0).
fn radial_fiber_constraint(u: &RadialField, spec: &NonlinearitySpec, t: f64) -> Result<f64> {
    let m = u.len();
    let mut vals = vec![0.0; m];
    for (i, slot) in vals.iter_mut().enumerate() {
        let s = t * i as f64;
        let k = s.floor() as usize;
        *slot = t * if k + 1 < m {
            let frac = s - k as f64;
            u.values[k] * (1.0 - frac) + u.values[k + 1] * frac
        } else {
            0.0
        };
    }
    let ut = RadialField { r_max: u.r_max, values: vals };
    Ok(radial_breakdown(&ut, spec)?.j)
}

/// Dilation factor t with J(u_t) = 0, by bracket expansion and bisection.
fn radial_project_t(u: &RadialField, spec: &NonlinearitySpec) -> Result<f64> {
    let j1 = radial_fiber_constraint(u, spec, 1.0)?;
    let (mut lo, mut hi);
    if j1 > 0.0 {
        // J > 0 at t = 1: expand upward (more concentration) until J < 0
        lo = 1.0;
        hi = 1.0;
        for _ in 0..60 {
            hi *= 1.5;
            if radial_fiber_constraint(u, spec, hi)? < 0.0 {
                break;
            }
            lo = hi;
        }
        if radial_fiber_constraint(u, spec, hi)? >= 0.0 {
            return Err(CssError::NoBracket { lo, hi });
        }
    } else {
        hi = 1.0;
        lo = 1.0;
        for _ in 0..60 {
            lo /= 1.5;
            if radial_fiber_constraint(u, spec, lo)? > 0.0 {
                break;
            }
            hi = lo;
        }
        if radial_fiber_constraint(u, spec, lo)? <= 0.0 {
            return Err(CssError::NoBracket { lo, hi });
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if radial_fiber_constraint(u, spec, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn radial_resample(u: &RadialField, t: f64) -> RadialField {
    let m = u.len();
    let mut vals = vec![0.0; m];
    for (i, slot) in vals.iter_mut().enumerate() {
        let s = t * i as f64;
        let k = s.floor() as usize;
        *slot = t * if k + 1 < m {
            let frac = s - k as f64;
            u.values[k] * (1.0 - frac) + u.values[k + 1] * frac
        } else {
            0.0
        };
    }
    RadialField { r_max: u.r_max, values: vals }
}

/// Converged radial minimizer.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub u: RadialField,
    pub lambda: f64,
    pub breakdown: RadialBreakdown,
    pub steps: usize,
    pub converged: bool,
}

/// Minimize the radial energy over {mass = a^2} intersected with {J = 0}
/// with the same tangent-descent scheme as the 2-D flow: project the
/// gradient onto the intersection of the two tangent spaces, renormalize
/// every step, re-project onto {J = 0} by exact dilation when the
/// constraint drifts.
pub fn radial_minimize(
    r_max: f64,
    m: usize,
    spec: &NonlinearitySpec,
    a: f64,
    dt0: f64,
    max_steps: usize,
    grad_tol: f64,
) -> Result<RadialSolution> {
    if a == 0.0 || !a.is_finite() {
        return Err(CssError::InvalidParam("mass parameter a must be nonzero".into()));
    }
    // Gaussian start, dilated onto {J = 0} in closed form (sigma -> sigma/t)
    let mut sigma = 0.35 * r_max;
    let mut u = RadialField::from_fn(r_max, m, |r| (-(r * r) / (2.0 * sigma * sigma)).exp())?;
    let mut w = fv_weights(&u);
    renorm(&mut u, &w, a);
    for _ in 0..12 {
        let t = match radial_project_t(&u, spec) {
            Ok(t) => t,
            Err(_) => break,
        };
        if (t - 1.0).abs() < 1e-8 {
            break;
        }
        sigma /= t;
        u = RadialField::from_fn(r_max, m, |r| (-(r * r) / (2.0 * sigma * sigma)).exp())?;
        renorm(&mut u, &w, a);
    }

    let mut dt = dt0;
    let mut bd = radial_breakdown(&u, spec)?;
    let mut converged = false;
    let mut steps = 0;
    let mut accepts = 0usize;
    for step in 0..max_steps {
        steps = step + 1;
        let v_cs = radial_cs_potential(&u);
        let g = radial_euler_gradient(&u, spec, &w, &v_cs)?;
        let jg = radial_constraint_gradient(&u, spec, &w, &v_cs)?;
        // tangent to the sphere, then to {J = 0}
        let mut gt: Vec<f64> = g.clone();
        let gu = weighted_inner(&w, &g, &u.values);
        for (i, x) in gt.iter_mut().enumerate() {
            *x -= gu / (a * a) * u.values[i];
        }
        let mut jt = jg.clone();
        let ju = weighted_inner(&w, &jg, &u.values);
        for (i, x) in jt.iter_mut().enumerate() {
            *x -= ju / (a * a) * u.values[i];
        }
        let jj = weighted_inner(&w, &jt, &jt);
        if jj > 0.0 {
            let mix = weighted_inner(&w, &gt, &jt) / jj;
            for (i, x) in gt.iter_mut().enumerate() {
                *x -= mix * jt[i];
            }
        }
        let gnorm = weighted_inner(&w, &g, &g).sqrt();
        let snorm = weighted_inner(&w, &gt, &gt).sqrt();
        if snorm / gnorm.max(1.0) < grad_tol {
            converged = true;
            break;
        }
        loop {
            let mut trial = u.clone();
            for (i, x) in trial.values_mut().iter_mut().enumerate() {
                *x -= dt * gt[i];
            }
            *trial.values.last_mut().unwrap() = 0.0;
            let wt = fv_weights(&trial);
            renorm(&mut trial, &wt, a);
            let bd_t = radial_breakdown(&trial, spec)?;
            if bd_t.e <= bd.e + 1e-12 * (1.0 + bd.e.abs()) {
                u = trial;
                w = wt;
                bd = bd_t;
                accepts += 1;
                if accepts % 25 == 0 && bd.j.abs() > 1e-10 * (bd.kinetic + bd.cs) {
                    if let Ok(t) = radial_project_t(&u, spec) {
                        u = radial_resample(&u, t);
                        renorm(&mut u, &w, a);
                        bd = radial_breakdown(&u, spec)?;
                    }
                }
                if accepts % 20 == 0 {
                    dt *= 1.1;
                }
                break;
            }
            dt *= 0.5;
            if dt < 1e-18 {
                break;
            }
        }
        if dt < 1e-18 {
            break;
        }
    }
    if let Ok(t) = radial_project_t(&u, spec) {
        if (t - 1.0).abs() > 1e-12 {
            u = radial_resample(&u, t);
            renorm(&mut u, &w, a);
        }
    }
    let bd = radial_breakdown(&u, spec)?;
    let v_cs = radial_cs_potential(&u);
    let g = radial_euler_gradient(&u, spec, &w, &v_cs)?;
    let lambda = -weighted_inner(&w, &g, &u.values) / (a * a);
    Ok(RadialSolution { u, lambda, breakdown: bd, steps, converged })
}

fn renorm(u: &mut RadialField, w: &[f64], a: f64) {
    let mass: f64 = u.values.iter().enumerate().map(|(i, &v)| w[i] * v * v).sum();
    let c = a.abs() / mass.sqrt();
    for v in u.values.iter_mut() {
        *v *= c;
    }
}

// ---------------------------------------------------------------------------
// CSV round trip

pub fn save_radial_csv(path: &Path, u: &RadialField) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "r,u")?;
    for (i, v) in u.values.iter().enumerate() {
        writeln!(f, "{:.17e},{:.17e}", u.r(i), v)?;
    }
    Ok(())
}

pub fn load_radial_csv(path: &Path) -> Result<RadialField> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    let mut r_last = 0.0;
    for (ln, line) in f.lines().enumerate() {
        let line = line?;
        if ln == 0 {
            continue;
        }
        let mut parts = line.split(',');
        let (r, v) = match (parts.next(), parts.next()) {
            (Some(r), Some(v)) => (r.trim(), v.trim()),
            _ => {
                return Err(CssError::InvalidParam(format!("malformed csv row {}", ln + 1)));
            }
        };
        r_last = r
            .parse::<f64>()
            .map_err(|e| CssError::InvalidParam(format!("row {}: {e}", ln + 1)))?;
        rows.push(
            v.parse::<f64>()
                .map_err(|e| CssError::InvalidParam(format!("row {}: {e}", ln + 1)))?,
        );
    }
    RadialField::new(r_last, rows)
}
