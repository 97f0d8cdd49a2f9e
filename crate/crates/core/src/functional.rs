//! Energy and constraint functionals, the fiber map t -> t u(t x), manifold
//! projection, stationarity residuals and the Lagrange multiplier.
//!
//! Sign convention: the stationary equation reads
//!   -Lap u + lambda u + (A0 + A1^2 + A2^2) u = f(u),
//! so bound states have lambda > 0.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::error::{CssError, Result};
use crate::gauge::{gauge_fields, GaugeFields};
use crate::grid::{grad_norm_sq, Field2D};
use crate::nonlin::NonlinearitySpec;

/// The six scalar readouts of a field: kinetic = integral |grad u|^2,
/// cs = integral (A1^2+A2^2)u^2, potential = integral F(u), mass =
/// integral u^2, and the derived energy and constraint values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub cs: f64,
    pub potential: f64,
    /// E = (kinetic + cs)/2 - potential
    pub e: f64,
    /// J = kinetic + cs - integral (f(u)u - 2F(u))
    pub j: f64,
    pub mass: f64,
}

/// integral F(u) by grid quadrature.
pub(crate) fn integral_big_f(u: &Field2D, spec: &NonlinearitySpec) -> Result<f64> {
    let h = u.grid().spacing();
    let mut acc = 0.0;
    for &v in u.values() {
        acc += spec.eval_big_f(v)?;
    }
    Ok(acc * h * h)
}

/// integral f(u)u by grid quadrature.
pub(crate) fn integral_fu(u: &Field2D, spec: &NonlinearitySpec) -> Result<f64> {
    let h = u.grid().spacing();
    let mut acc = 0.0;
    for &v in u.values() {
        acc += spec.eval_f(v)? * v;
    }
    Ok(acc * h * h)
}

pub fn breakdown(u: &Field2D, spec: &NonlinearitySpec) -> Result<EnergyBreakdown> {
    let gf = gauge_fields(u)?;
    breakdown_with_gauge(u, spec, &gf)
}

/// Same readouts with the gauge triple already in hand.
pub fn breakdown_with_gauge(
    u: &Field2D,
    spec: &NonlinearitySpec,
    gf: &GaugeFields,
) -> Result<EnergyBreakdown> {
    let kinetic = grad_norm_sq(u);
    let cs = gf.cs_energy;
    let potential = integral_big_f(u, spec)?;
    let fu = integral_fu(u, spec)?;
    let mass = u.lp_pow(2.0);
    Ok(EnergyBreakdown {
        kinetic,
        cs,
        potential,
        e: 0.5 * (kinetic + cs) - potential,
        j: kinetic + cs - (fu - 2.0 * potential),
        mass,
    })
}

// ---------------------------------------------------------------------------
// Fiber map

/// Readouts along the fiber u_t(x) = t u(t x) through exact scaling
/// identities (no resampling): |grad u_t|^2 = t^2 |grad u|^2,
/// CS(u_t) = t^2 CS(u), integral F(u_t) = t^-2 integral F(t u).
///
/// Caches the gauge computation once and the last few pointwise passes.
pub struct Fiber<'a> {
    u: &'a Field2D,
    spec: &'a NonlinearitySpec,
    kin_cs: f64,
    // (t bits, integral F(tu), integral f(tu)tu)
    cache: RefCell<Vec<(u64, f64, f64)>>,
}

const FIBER_CACHE_CAP: usize = 32;

impl<'a> Fiber<'a> {
    pub fn new(u: &'a Field2D, spec: &'a NonlinearitySpec) -> Result<Self> {
        let gf = gauge_fields(u)?;
        Ok(Fiber::with_kin_cs(u, spec, grad_norm_sq(u) + gf.cs_energy))
    }

    /// Skip the gauge solve when kinetic + cs is already known.
    pub fn with_kin_cs(u: &'a Field2D, spec: &'a NonlinearitySpec, kin_cs: f64) -> Self {
        Fiber { u, spec, kin_cs, cache: RefCell::new(Vec::new()) }
    }

    pub fn kin_cs(&self) -> f64 {
        self.kin_cs
    }

    fn scaled_integrals(&self, t: f64) -> Result<(f64, f64)> {
        let key = t.to_bits();
        if let Some(&(_, bf, fu)) =
            self.cache.borrow().iter().find(|(k, _, _)| *k == key)
        {
            return Ok((bf, fu));
        }
        let h = self.u.grid().spacing();
        let mut bf = 0.0;
        let mut fu = 0.0;
        for &v in self.u.values() {
            let s = t * v;
            bf += self.spec.eval_big_f(s)?;
            fu += self.spec.eval_f(s)? * s;
        }
        bf *= h * h;
        fu *= h * h;
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= FIBER_CACHE_CAP {
            cache.remove(0);
        }
        cache.push((key, bf, fu));
        Ok((bf, fu))
    }

    /// E(u_t) = (t^2/2)(kinetic + cs) - t^-2 integral F(tu).
    pub fn energy(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(CssError::InvalidParam(format!("fiber parameter must be positive, got {t}")));
        }
        let (bf, _) = self.scaled_integrals(t)?;
        Ok(0.5 * t * t * self.kin_cs - bf / (t * t))
    }

    /// J(u_t) = t^2(kinetic + cs) - t^-2 integral [f(tu)tu - 2F(tu)].
    pub fn constraint(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(CssError::InvalidParam(format!("fiber parameter must be positive, got {t}")));
        }
        let (bf, fu) = self.scaled_integrals(t)?;
        Ok(t * t * self.kin_cs - (fu - 2.0 * bf) / (t * t))
    }
}

pub fn fiber_energy(u: &Field2D, spec: &NonlinearitySpec, t: f64) -> Result<f64> {
    Fiber::new(u, spec)?.energy(t)
}

pub fn fiber_constraint(u: &Field2D, spec: &NonlinearitySpec, t: f64) -> Result<f64> {
    Fiber::new(u, spec)?.constraint(t)
}

// ---------------------------------------------------------------------------
// Manifold projection

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Projection {
    pub t_u: f64,
    pub e_at_tu: f64,
}

const T_MIN: f64 = 1e-6;
const T_MAX: f64 = 1e6;
const MAX_ROOT_ITERS: usize = 80;

/// Root of the fiber constraint: the unique t_u with J(u_{t_u}) = 0, located
/// by geometric bracket expansion from t = 1 and bisection in log t with a
/// safeguarded secant step, then verified to be the fiber-energy maximum.
pub fn project_to_manifold(u: &Field2D, spec: &NonlinearitySpec) -> Result<Projection> {
    let fiber = Fiber::new(u, spec)?;
    project_on_fiber(&fiber)
}

pub(crate) fn project_on_fiber(fiber: &Fiber<'_>) -> Result<Projection> {
    if fiber.kin_cs() == 0.0 {
        return Err(CssError::ZeroMass);
    }
    // J(u_t) > 0 for small t, < 0 beyond the fiber max; an overflow during
    // upward expansion means the potential term exploded, i.e. J < 0 there
    let eval = |t: f64| -> Result<Option<f64>> {
        match fiber.constraint(t) {
            Ok(v) => Ok(Some(v)),
            Err(CssError::Overflow { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let j1 = eval(1.0)?;
    let (mut lo, mut hi, mut j_lo, mut j_hi);
    match j1 {
        Some(v) if v > 0.0 => {
            // expand upward until J turns negative (or overflows)
            lo = 1.0;
            j_lo = v;
            hi = 2.0;
            loop {
                if hi > T_MAX {
                    return Err(CssError::NoBracket { lo: T_MIN, hi: T_MAX });
                }
                match eval(hi)? {
                    Some(jv) if jv > 0.0 => {
                        lo = hi;
                        j_lo = jv;
                        hi *= 2.0;
                    }
                    Some(jv) => {
                        j_hi = jv;
                        break;
                    }
                    None => {
                        j_hi = f64::NEG_INFINITY;
                        break;
                    }
                }
            }
        }
        _ => {
            // J(1) <= 0 or overflowed: expand downward until J turns positive
            hi = 1.0;
            j_hi = j1.unwrap_or(f64::NEG_INFINITY);
            if j_hi == 0.0 {
                let e = fiber.energy(1.0)?;
                return verify_max(fiber, 1.0, e);
            }
            lo = 0.5;
            loop {
                if lo < T_MIN {
                    return Err(CssError::NoBracket { lo: T_MIN, hi: T_MAX });
                }
                match eval(lo)? {
                    Some(jv) if jv > 0.0 => {
                        j_lo = jv;
                        break;
                    }
                    Some(jv) => {
                        hi = lo;
                        j_hi = jv;
                        lo *= 0.5;
                    }
                    None => {
                        hi = lo;
                        j_hi = f64::NEG_INFINITY;
                        lo *= 0.5;
                    }
                }
            }
        }
    }
    // Illinois-weighted false position in log t (the stagnant endpoint's
    // stored value is halved, which keeps the bracket shrinking from both
    // sides), with the bisection midpoint as fallback while an endpoint
    // value is infinite
    let tol = 1e-10 * fiber.kin_cs();
    let mut t = (lo * hi).sqrt();
    let mut last_side = 0i8;
    for _ in 0..MAX_ROOT_ITERS {
        let mut cand = (lo * hi).sqrt();
        if j_hi.is_finite() && j_lo != j_hi {
            let (llo, lhi) = (lo.ln(), hi.ln());
            let guess = (llo - j_lo * (lhi - llo) / (j_hi - j_lo)).exp();
            if guess > lo && guess < hi {
                cand = guess;
            }
        }
        t = cand;
        let jt = match eval(t)? {
            Some(v) => v,
            None => {
                hi = t;
                j_hi = f64::NEG_INFINITY;
                last_side = 0;
                continue;
            }
        };
        if jt.abs() <= tol || (hi - lo) <= 1e-15 * t {
            break;
        }
        if jt > 0.0 {
            lo = t;
            j_lo = jt;
            if last_side == 1 && j_hi.is_finite() {
                j_hi *= 0.5;
            }
            last_side = 1;
        } else {
            hi = t;
            j_hi = jt;
            if last_side == -1 {
                j_lo *= 0.5;
            }
            last_side = -1;
        }
    }
    let e = fiber.energy(t)?;
    verify_max(fiber, t, e)
}

fn verify_max(fiber: &Fiber<'_>, t: f64, e: f64) -> Result<Projection> {
    for probe in [0.99 * t, 1.01 * t] {
        let ep = fiber.energy(probe)?;
        if ep > e + 1e-12 * (1.0 + e.abs()) {
            return Err(CssError::NotUnique(t));
        }
    }
    Ok(Projection { t_u: t, e_at_tu: e })
}

// ---------------------------------------------------------------------------
// Stationarity residuals and multiplier

/// lambda * integral u^2 + 2 integral (A1^2+A2^2)u^2 - 2 integral F(u).
pub fn pohozaev_residual(u: &Field2D, spec: &NonlinearitySpec, lambda: f64) -> Result<f64> {
    let gf = gauge_fields(u)?;
    pohozaev_residual_with(u, spec, lambda, &gf)
}

pub fn pohozaev_residual_with(
    u: &Field2D,
    spec: &NonlinearitySpec,
    lambda: f64,
    gf: &GaugeFields,
) -> Result<f64> {
    Ok(lambda * u.lp_pow(2.0) + 2.0 * gf.cs_energy - 2.0 * integral_big_f(u, spec)?)
}

/// integral [|grad u|^2 + 3(A1^2+A2^2)u^2] + lambda * integral u^2
/// - integral f(u)u.
pub fn nehari_residual(u: &Field2D, spec: &NonlinearitySpec, lambda: f64) -> Result<f64> {
    let gf = gauge_fields(u)?;
    nehari_residual_with(u, spec, lambda, &gf)
}

pub fn nehari_residual_with(
    u: &Field2D,
    spec: &NonlinearitySpec,
    lambda: f64,
    gf: &GaugeFields,
) -> Result<f64> {
    Ok(grad_norm_sq(u) + 3.0 * gf.cs_energy + lambda * u.lp_pow(2.0) - integral_fu(u, spec)?)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LagrangeMultipliers {
    /// -(1/a^2) { kinetic + 3 cs - integral f(u)u }: the multiplier of a
    /// stationary point regardless of the constraint.
    pub lambda_raw: f64,
    /// (2/a^2) { kinetic + 3 integral F - integral f(u)u }: equivalent form
    /// on the manifold; the two agree iff J(u) = 0.
    pub lambda_manifold: f64,
}

pub fn lagrange_multiplier(u: &Field2D, spec: &NonlinearitySpec) -> Result<LagrangeMultipliers> {
    let gf = gauge_fields(u)?;
    lagrange_multiplier_with(u, spec, &gf)
}

pub fn lagrange_multiplier_with(
    u: &Field2D,
    spec: &NonlinearitySpec,
    gf: &GaugeFields,
) -> Result<LagrangeMultipliers> {
    let mass = u.lp_pow(2.0);
    if mass == 0.0 {
        return Err(CssError::ZeroMass);
    }
    let kin = grad_norm_sq(u);
    let fu = integral_fu(u, spec)?;
    let bf = integral_big_f(u, spec)?;
    Ok(LagrangeMultipliers {
        lambda_raw: -(kin + 3.0 * gf.cs_energy - fu) / mass,
        lambda_manifold: 2.0 * (kin + 3.0 * bf - fu) / mass,
    })
}
