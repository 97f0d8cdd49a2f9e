//! Nonlinearity families f with primitive F and derivative f', the
//! supercritical form h(t) exp(a0 |t|^tau) with its truncation, and sampling
//! checkers for the structural hypotheses (Ambrosetti-Rabinowitz, monotone
//! quotient, growth envelopes).
//!
//! Every family vanishes identically on (-inf, 0].

use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};

/// Default cap on exponential arguments; beyond it evaluation reports
/// Overflow instead of returning Inf.
pub const DEFAULT_EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// f(s) = 0
    Zero,
    /// f(s) = s^(p-1)
    PurePower { p: f64 },
    /// f(s) = mu s^(q-1) + s^(p-1)
    CombinedPower { mu: f64, q: f64, p: f64 },
    /// f(s) = s^(chi-1) (exp(alpha0 s^2) - 1): critical exponential growth
    /// with exponent alpha0 and vanishing order chi at zero.
    CriticalExp { alpha0: f64, chi: f64 },
    /// f(s) = h(s) exp(alpha_bar0 s^tau) with h(s) = xi s^(p-1);
    /// gamma, delta, m_env parametrize the envelope |h| <= M exp(gamma |t|^delta).
    Supercritical {
        alpha_bar0: f64,
        tau: f64,
        xi: f64,
        p: f64,
        gamma: f64,
        delta: f64,
        m_env: f64,
    },
}

/// Which tail exponent the truncation uses for s >= R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// delta_bar = delta from the envelope hypothesis (subcritical tail).
    SubcriticalDelta,
    /// delta_bar = 2 (critical tail with effective exponent
    /// gamma + alpha_bar0 R^(delta-2)).
    CriticalTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub r: f64,
    pub delta_bar: f64,
}

/// Growth class reported by a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Polynomial,
    SubcriticalExp,
    /// Critical exponential growth with the given exponent.
    CriticalExp,
    SupercriticalExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub family: Family,
    /// Ambrosetti-Rabinowitz exponent theta > 4.
    pub theta: f64,
    /// Vanishing order at zero, chi >= 4.
    pub chi: f64,
    pub truncation: Option<Truncation>,
    /// Overflow guard on exponential arguments.
    #[serde(default = "default_cap")]
    pub exp_cap: f64,
}

fn default_cap() -> f64 {
    DEFAULT_EXP_CAP
}

impl NonlinearitySpec {
    pub fn new(family: Family) -> Self {
        // theta = p for pure powers, 4.5 for exponential families
        let (theta, chi) = match &family {
            Family::Zero => (4.5, 4.0),
            Family::PurePower { p } => (*p, p.max(4.0)),
            Family::CombinedPower { q, .. } => (*q, q.max(4.0)),
            Family::CriticalExp { chi, .. } => (4.5, *chi),
            Family::Supercritical { p, .. } => (4.5, *p),
        };
        NonlinearitySpec { family, theta, chi, truncation: None, exp_cap: DEFAULT_EXP_CAP }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn pure_power(p: f64) -> Self {
        Self::new(Family::PurePower { p })
    }

    pub fn growth_class(&self) -> GrowthClass {
        match (&self.family, &self.truncation) {
            (Family::Zero | Family::PurePower { .. } | Family::CombinedPower { .. }, _) => {
                GrowthClass::Polynomial
            }
            (Family::CriticalExp { .. }, _) => GrowthClass::CriticalExp,
            (Family::Supercritical { .. }, None) => GrowthClass::SupercriticalExp,
            (Family::Supercritical { delta, .. }, Some(tr)) => {
                if tr.delta_bar < 2.0 && *delta < 2.0 {
                    GrowthClass::SubcriticalExp
                } else {
                    GrowthClass::CriticalExp
                }
            }
        }
    }

    /// Effective critical exponent of the growth class: alpha0 for the
    /// critical family, gamma + alpha_bar0 R^(delta-2) for a delta_bar = 2
    /// truncation, None otherwise.
    pub fn critical_exponent(&self) -> Option<f64> {
        match (&self.family, &self.truncation) {
            (Family::CriticalExp { alpha0, .. }, _) => Some(*alpha0),
            (Family::Supercritical { alpha_bar0, gamma, delta, .. }, Some(tr))
                if tr.delta_bar == 2.0 =>
            {
                Some(gamma + alpha_bar0 * tr.r.powf(delta - 2.0))
            }
            _ => None,
        }
    }

    fn guard_exp(&self, arg: f64) -> Result<f64> {
        if arg > self.exp_cap {
            Err(CssError::Overflow { arg, cap: self.exp_cap })
        } else {
            Ok(arg.exp())
        }
    }

    /// The untruncated f on s > 0 (internal branch shared by the truncated
    /// path for s <= R, so both agree bitwise there).
    fn f_raw(&self, s: f64) -> Result<f64> {
        Ok(match &self.family {
            Family::Zero => 0.0,
            Family::PurePower { p } => s.powf(p - 1.0),
            Family::CombinedPower { mu, q, p } => mu * s.powf(q - 1.0) + s.powf(p - 1.0),
            Family::CriticalExp { alpha0, chi } => {
                s.powf(chi - 1.0) * (self.guard_exp(alpha0 * s * s)? - 1.0)
            }
            Family::Supercritical { alpha_bar0, tau, xi, p, .. } => {
                xi * s.powf(p - 1.0) * self.guard_exp(alpha_bar0 * s.powf(*tau))?
            }
        })
    }

    fn fprime_raw(&self, s: f64) -> Result<f64> {
        Ok(match &self.family {
            Family::Zero => 0.0,
            Family::PurePower { p } => (p - 1.0) * s.powf(p - 2.0),
            Family::CombinedPower { mu, q, p } => {
                mu * (q - 1.0) * s.powf(q - 2.0) + (p - 1.0) * s.powf(p - 2.0)
            }
            Family::CriticalExp { alpha0, chi } => {
                let e = self.guard_exp(alpha0 * s * s)?;
                (chi - 1.0) * s.powf(chi - 2.0) * (e - 1.0) + 2.0 * alpha0 * s.powf(*chi) * e
            }
            Family::Supercritical { alpha_bar0, tau, xi, p, .. } => {
                let e = self.guard_exp(alpha_bar0 * s.powf(*tau))?;
                xi * e
                    * ((p - 1.0) * s.powf(p - 2.0)
                        + alpha_bar0 * tau * s.powf(tau - 1.0) * s.powf(p - 1.0))
            }
        })
    }

    /// Tail branch h(s) exp(a0 R^(tau - delta_bar) s^delta_bar) for s >= R.
    fn f_tail(&self, s: f64, tr: &Truncation) -> Result<f64> {
        match &self.family {
            Family::Supercritical { alpha_bar0, tau, xi, p, .. } => {
                let coeff = alpha_bar0 * tr.r.powf(tau - tr.delta_bar);
                Ok(xi * s.powf(p - 1.0) * self.guard_exp(coeff * s.powf(tr.delta_bar))?)
            }
            _ => Err(CssError::NotSupercritical),
        }
    }

    fn fprime_tail(&self, s: f64, tr: &Truncation) -> Result<f64> {
        match &self.family {
            Family::Supercritical { alpha_bar0, tau, xi, p, .. } => {
                let coeff = alpha_bar0 * tr.r.powf(tau - tr.delta_bar);
                let e = self.guard_exp(coeff * s.powf(tr.delta_bar))?;
                Ok(xi * e
                    * ((p - 1.0) * s.powf(p - 2.0)
                        + coeff * tr.delta_bar * s.powf(tr.delta_bar - 1.0) * s.powf(p - 1.0)))
            }
            _ => Err(CssError::NotSupercritical),
        }
    }

    pub fn eval_f(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        match &self.truncation {
            Some(tr) if s > tr.r => self.f_tail(s, tr),
            _ => self.f_raw(s),
        }
    }

    /// f' with the right-sided branch at the truncation knot s = R.
    pub fn eval_fprime(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        match &self.truncation {
            Some(tr) if s >= tr.r => self.fprime_tail(s, tr),
            _ => self.fprime_raw(s),
        }
    }

    /// The exact primitive F(s) = integral of f over [0, s]; closed forms for
    /// the power families, cached-panel Gauss-Legendre quadrature otherwise.
    pub fn eval_big_f(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        match &self.family {
            Family::Zero => Ok(0.0),
            Family::PurePower { p } => Ok(s.powf(*p) / p),
            Family::CombinedPower { mu, q, p } => Ok(mu * s.powf(*q) / q + s.powf(*p) / p),
            _ => match &self.truncation {
                Some(tr) if s > tr.r => {
                    let head = self.quadrature_big_f(tr.r, |x| self.f_raw(x))?;
                    let tail = gauss_panels(tr.r, s, |x| self.f_tail(x, tr))?;
                    Ok(head + tail)
                }
                _ => self.quadrature_big_f(s, |x| self.f_raw(x)),
            },
        }
    }

    /// Cumulative quadrature of the untruncated branch with cached panel
    /// values at a fixed knot spacing.
    fn quadrature_big_f(&self, s: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        const KNOT: f64 = 0.25;
        let k = (s / KNOT).floor() as usize;
        // panel cache is per-call-free: recompute knots; the panel count is
        // small (s is bounded by the overflow cap) and GL15 panels are cheap
        let mut acc = 0.0;
        let mut x0 = 0.0;
        for i in 0..k {
            let x1 = (i + 1) as f64 * KNOT;
            acc += gauss_panel(x0, x1, &f)?;
            x0 = x1;
        }
        acc += gauss_panel(x0, s, &f)?;
        Ok(acc)
    }

    /// Truncate a supercritical spec at level R.
    pub fn truncate(&self, r: f64, mode: TruncationMode) -> Result<NonlinearitySpec> {
        let delta = match &self.family {
            Family::Supercritical { delta, .. } => *delta,
            _ => return Err(CssError::NotSupercritical),
        };
        if r <= 0.0 {
            return Err(CssError::NonpositiveR(r));
        }
        let delta_bar = match mode {
            TruncationMode::SubcriticalDelta => delta,
            TruncationMode::CriticalTwo => 2.0,
        };
        let mut out = self.clone();
        out.truncation = Some(Truncation { r, delta_bar });
        Ok(out)
    }
}

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
const GL15_X: [f64; 15] = [
    -0.9879925180204854,
    -0.9372733924007060,
    -0.8482065834104272,
    -0.7244177313601700,
    -0.5709721726085388,
    -0.3941513470775634,
    -0.2011940939974345,
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601700,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
];
const GL15_W: [f64; 15] = [
    0.0307532419961173,
    0.0703660474881081,
    0.1071592204671719,
    0.1395706779261543,
    0.1662692058169939,
    0.1861610000155622,
    0.1984314853271116,
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
];

fn gauss_panel(a: f64, b: f64, f: &impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL15_X.iter().zip(GL15_W.iter()) {
        acc += w * f(c + d * x)?;
    }
    Ok(acc * d)
}

fn gauss_panels(a: f64, b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    const STEP: f64 = 0.25;
    let n = (((b - a) / STEP).ceil() as usize).max(1);
    let w = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += gauss_panel(a + i as f64 * w, a + (i + 1) as f64 * w, &f)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Hypothesis checkers

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArReport {
    pub holds: bool,
    pub worst_ratio: f64,
    pub worst_s: f64,
}

/// Ambrosetti-Rabinowitz check: theta F(s) <= f(s) s and F(s) > 0 on the
/// positive samples. Reports the worst ratio theta F / (f s).
pub fn check_ar(spec: &NonlinearitySpec, samples: &[f64]) -> Result<ArReport> {
    let mut worst_ratio = 0.0f64;
    let mut worst_s = f64::NAN;
    let mut holds = true;
    for &s in samples.iter().filter(|s| **s > 0.0) {
        let f = spec.eval_f(s)?;
        let big_f = spec.eval_big_f(s)?;
        if big_f <= 0.0 {
            holds = false;
        }
        let fs = f * s;
        if fs <= 0.0 {
            holds = false;
            continue;
        }
        let ratio = spec.theta * big_f / fs;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_s = s;
        }
    }
    if worst_ratio > 1.0 + 1e-9 {
        holds = false;
    }
    Ok(ArReport { holds, worst_ratio, worst_s })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub holds: bool,
    /// Pairs (s_i, s_{i+1}) where strict increase failed.
    pub violations: Vec<(f64, f64)>,
}

/// Checks that Fbar(s)/s^4 with Fbar = f s - 2F is strictly increasing across
/// the (increasing, positive) sample grid.
pub fn check_fbar_monotone(spec: &NonlinearitySpec, samples: &[f64]) -> Result<MonotoneReport> {
    let quotient = |s: f64| -> Result<f64> {
        Ok((spec.eval_f(s)? * s - 2.0 * spec.eval_big_f(s)?) / s.powi(4))
    };
    let mut violations = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &s in samples.iter().filter(|s| **s > 0.0) {
        let q = quotient(s)?;
        if let Some((ps, pq)) = prev {
            if !(q > pq * (1.0 + 1e-12) || (pq <= 0.0 && q > pq + 1e-300)) {
                violations.push((ps, s));
            }
        }
        prev = Some((s, q));
    }
    Ok(MonotoneReport { holds: violations.is_empty(), violations })
}

/// f'(s) s^2 - 5 f(s) s + 8 F(s); positive for all s > 0 when the structural
/// hypotheses hold.
pub fn superquadratic_combo(spec: &NonlinearitySpec, s: f64) -> Result<f64> {
    Ok(spec.eval_fprime(s)? * s * s - 5.0 * spec.eval_f(s)? * s + 8.0 * spec.eval_big_f(s)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub holds: bool,
    pub c_eps: f64,
}

/// Finds the smallest C with |f(s)| <= eps |s|^(chi-1) + C |s|^(q-1)
/// (exp(alpha s^2) - 1) on the samples; reports holds = false if the
/// required C keeps growing at the tail (or overflows), which is the
/// signature of alpha below the critical exponent.
pub fn growth_envelope_check(
    spec: &NonlinearitySpec,
    eps: f64,
    alpha: f64,
    q: f64,
    samples: &[f64],
) -> EnvelopeReport {
    let mut cs: Vec<(f64, f64)> = Vec::new();
    for &s in samples.iter().filter(|s| **s > 0.0) {
        let f = match spec.eval_f(s) {
            Ok(v) => v,
            Err(_) => return EnvelopeReport { holds: false, c_eps: f64::INFINITY },
        };
        let slack = f.abs() - eps * s.powf(spec.chi - 1.0);
        if slack <= 0.0 {
            cs.push((s, 0.0));
            continue;
        }
        let denom_exp = alpha * s * s;
        if denom_exp > spec.exp_cap {
            return EnvelopeReport { holds: false, c_eps: f64::INFINITY };
        }
        let denom = s.powf(q - 1.0) * (denom_exp.exp() - 1.0);
        cs.push((s, slack / denom));
    }
    let c_eps = cs.iter().fold(0.0f64, |m, (_, c)| m.max(*c));
    if cs.is_empty() || c_eps == 0.0 {
        return EnvelopeReport { holds: true, c_eps };
    }
    // diverging tail: the required C at the end of the sample range dwarfs
    // what the first half of the range needed
    let last = cs.last().unwrap().1;
    let head = cs[..cs.len() / 2].iter().fold(0.0f64, |m, (_, c)| m.max(*c));
    let holds = c_eps.is_finite() && !(head > 0.0 && last > 2.0 * head);
    EnvelopeReport { holds, c_eps }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct F4F5Report {
    pub f4_holds: bool,
    pub f5_liminf: f64,
    pub f5_holds: bool,
}

/// Sampling diagnostic for the tail hypotheses: (f4) 0 < s^vartheta F(s) <=
/// M0 f(s) for s >= s0, and (f5) liminf F(s) exp(-alpha0 s^2) >= beta0.
/// The constants have no canonical values; they are caller inputs.
pub fn check_f4_f5(
    spec: &NonlinearitySpec,
    s0: f64,
    m0: f64,
    vartheta: f64,
    alpha0: f64,
    beta0: f64,
    samples: &[f64],
) -> Result<F4F5Report> {
    let mut f4_holds = true;
    let mut f5_liminf = f64::INFINITY;
    for &s in samples.iter().filter(|s| **s >= s0) {
        let f = spec.eval_f(s)?;
        let big_f = spec.eval_big_f(s)?;
        if !(s.powf(vartheta) * big_f > 0.0 && s.powf(vartheta) * big_f <= m0 * f) {
            f4_holds = false;
        }
        let arg = -alpha0 * s * s;
        f5_liminf = f5_liminf.min(big_f * arg.exp());
    }
    Ok(F4F5Report { f4_holds, f5_liminf, f5_holds: f5_liminf >= beta0 })
}

/// Envelope hypothesis on h for supercritical specs:
/// |h(t)| <= M exp(gamma |t|^delta) on the samples.
pub fn check_h_envelope(spec: &NonlinearitySpec, samples: &[f64]) -> Result<bool> {
    let (xi, p, gamma, delta, m_env) = match &spec.family {
        Family::Supercritical { xi, p, gamma, delta, m_env, .. } => (*xi, *p, *gamma, *delta, *m_env),
        _ => return Err(CssError::NotSupercritical),
    };
    Ok(samples.iter().filter(|s| **s > 0.0).all(|&s| {
        let h = xi * s.powf(p - 1.0);
        h.abs() <= m_env * (gamma * s.powf(delta)).exp() * (1.0 + 1e-12)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn supercritical(alpha_bar0: f64, tau: f64, xi: f64, p: f64, gamma: f64, delta: f64) -> NonlinearitySpec {
        NonlinearitySpec::new(Family::Supercritical {
            alpha_bar0,
            tau,
            xi,
            p,
            gamma,
            delta,
            m_env: xi.max(1.0) * 10.0,
        })
    }

    #[test]
    fn pure_power_values() {
        let spec = NonlinearitySpec::pure_power(6.0);
        assert_abs_diff_eq!(spec.eval_f(2.0).unwrap(), 32.0);
        assert_abs_diff_eq!(spec.eval_big_f(2.0).unwrap(), 64.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.eval_fprime(2.0).unwrap(), 5.0 * 16.0);
    }

    #[test]
    fn vanishes_on_nonpositive_axis() {
        for spec in [
            NonlinearitySpec::pure_power(6.0),
            NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 4.0 }),
            supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5),
        ] {
            assert_eq!(spec.eval_f(-3.0).unwrap(), 0.0);
            assert_eq!(spec.eval_big_f(-3.0).unwrap(), 0.0);
            assert_eq!(spec.eval_fprime(-3.0).unwrap(), 0.0);
            assert_eq!(spec.eval_f(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncation_continuous_at_knot() {
        let spec = supercritical(0.7, 3.0, 2.0, 6.0, 1.0, 1.5);
        let tr = spec.truncate(2.0, TruncationMode::SubcriticalDelta).unwrap();
        let r = 2.0;
        let left = spec.eval_f(r).unwrap();
        // the tail branch at s = R has exponent a0 R^(tau-d) R^d = a0 R^tau
        let right = tr.f_tail(r, tr.truncation.as_ref().unwrap()).unwrap();
        assert_relative_eq!(left, right, max_relative = 1e-14);
    }

    #[test]
    fn truncation_identical_below_knot() {
        let spec = supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5);
        let tr = spec.truncate(2.0, TruncationMode::SubcriticalDelta).unwrap();
        for s in [0.1, 0.7, 1.4, 2.0] {
            // same code path: bitwise equality
            assert_eq!(spec.eval_f(s).unwrap().to_bits(), tr.eval_f(s).unwrap().to_bits());
            assert_eq!(
                spec.eval_big_f(s).unwrap().to_bits(),
                tr.eval_big_f(s).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn truncation_rejects_non_supercritical() {
        let spec = NonlinearitySpec::pure_power(6.0);
        assert!(matches!(
            spec.truncate(2.0, TruncationMode::SubcriticalDelta),
            Err(CssError::NotSupercritical)
        ));
    }

    #[test]
    fn truncation_critical_two_effective_exponent() {
        let spec = supercritical(1.0, 2.2, 1.0, 6.0, 0.3, 1.5);
        let tr = spec.truncate(4.0, TruncationMode::CriticalTwo).unwrap();
        assert_eq!(tr.growth_class(), GrowthClass::CriticalExp);
        assert_relative_eq!(
            tr.critical_exponent().unwrap(),
            0.3 + 4.0f64.powf(-0.5),
            max_relative = 1e-14
        );
        let sub = spec.truncate(4.0, TruncationMode::SubcriticalDelta).unwrap();
        assert_eq!(sub.growth_class(), GrowthClass::SubcriticalExp);
    }

    #[test]
    fn overflow_guard() {
        let spec = NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 4.0 });
        assert!(matches!(spec.eval_f(30.0), Err(CssError::Overflow { .. })));
    }

    #[test]
    fn primitive_matches_numeric_derivative() {
        let specs = [
            NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 4.0 }),
            supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5)
                .truncate(1.5, TruncationMode::SubcriticalDelta)
                .unwrap(),
        ];
        for spec in &specs {
            for s in [0.3, 0.9, 1.3, 2.1, 3.0] {
                let eps = 1e-5;
                let dfd = (spec.eval_big_f(s + eps).unwrap() - spec.eval_big_f(s - eps).unwrap())
                    / (2.0 * eps);
                assert_relative_eq!(dfd, spec.eval_f(s).unwrap(), max_relative = 1e-6);
                if (s - 1.5).abs() > 0.1 {
                    let dfp = (spec.eval_f(s + eps).unwrap() - spec.eval_f(s - eps).unwrap())
                        / (2.0 * eps);
                    assert_relative_eq!(dfp, spec.eval_fprime(s).unwrap(), max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn tail_monotone_in_truncation_level() {
        // for fixed s >= R, the truncated f is nondecreasing in R (tau > delta)
        let spec = supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5);
        let s = 4.0;
        let mut prev = 0.0;
        for r in [1.0, 2.0, 3.0, 4.0] {
            let tr = spec.truncate(r, TruncationMode::SubcriticalDelta).unwrap();
            let v = tr.eval_f(s).unwrap();
            assert!(v >= prev, "tail not monotone at R={r}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn ar_pure_power() {
        let samples: Vec<f64> = (1..50).map(|i| i as f64 * 0.1).collect();
        let spec = NonlinearitySpec::pure_power(6.0); // theta = 6
        let rep = check_ar(&spec, &samples).unwrap();
        assert!(rep.holds);
        assert_abs_diff_eq!(rep.worst_ratio, 1.0, epsilon = 1e-9);

        let spec7 = NonlinearitySpec::pure_power(6.0).with_theta(7.0);
        let rep = check_ar(&spec7, &samples).unwrap();
        assert!(!rep.holds);
        assert_abs_diff_eq!(rep.worst_ratio, 7.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn ar_truncated_supercritical() {
        // delta in [8/theta, 2): theta = 4.5 -> delta >= 1.777...
        let spec = supercritical(0.5, 3.0, 1.0, 5.0, 1.0, 1.8)
            .truncate(1.0, TruncationMode::SubcriticalDelta)
            .unwrap();
        let samples: Vec<f64> = (1..=60).map(|i| i as f64 * 0.05).collect(); // up to 3R
        let rep = check_ar(&spec, &samples).unwrap();
        assert!(rep.holds, "worst ratio {} at {}", rep.worst_ratio, rep.worst_s);
    }

    #[test]
    fn fbar_monotone_pure_powers() {
        let samples: Vec<f64> = (1..40).map(|i| i as f64 * 0.1).collect();
        let p6 = check_fbar_monotone(&NonlinearitySpec::pure_power(6.0), &samples).unwrap();
        assert!(p6.holds);
        // p = 4 gives a constant quotient: not strictly increasing
        let p4 = check_fbar_monotone(&NonlinearitySpec::pure_power(4.0), &samples).unwrap();
        assert!(!p4.holds);
    }

    #[test]
    fn fbar_monotone_across_truncation_knot() {
        let spec = supercritical(0.5, 3.0, 1.0, 5.0, 1.0, 1.8)
            .truncate(1.0, TruncationMode::SubcriticalDelta)
            .unwrap();
        // samples straddling R = 1, knot excluded
        let samples: Vec<f64> = (1..=40).map(|i| i as f64 * 0.049).collect();
        let rep = check_fbar_monotone(&spec, &samples).unwrap();
        assert!(rep.holds, "violations: {:?}", rep.violations);
    }

    #[test]
    fn superquadratic_pure_powers() {
        // s^p (p-2)(p-4)/p ... at p = 6, s = 1: f' - 5 f + 8 F = 5 - 5 + 8/6
        let p6 = NonlinearitySpec::pure_power(6.0);
        assert_abs_diff_eq!(superquadratic_combo(&p6, 1.0).unwrap(), 4.0 / 3.0, epsilon = 1e-12);
        let p4 = NonlinearitySpec::pure_power(4.0);
        assert_abs_diff_eq!(superquadratic_combo(&p4, 1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn superquadratic_positive_for_critical_family() {
        let spec = NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 5.0 });
        for s in [0.2, 0.8, 1.5, 2.5] {
            assert!(superquadratic_combo(&spec, s).unwrap() > 0.0);
        }
    }

    #[test]
    fn envelope_zero_family() {
        let spec = NonlinearitySpec::new(Family::Zero);
        let samples: Vec<f64> = (1..20).map(|i| i as f64 * 0.5).collect();
        let rep = growth_envelope_check(&spec, 0.1, 1.0, 4.0, &samples);
        assert!(rep.holds);
        assert_eq!(rep.c_eps, 0.0);
    }

    #[test]
    fn envelope_critical_above_and_below() {
        let spec = NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 4.0 });
        let samples: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let above = growth_envelope_check(&spec, 0.1, 1.2, 4.0, &samples);
        assert!(above.holds, "C_eps = {}", above.c_eps);
        assert!(above.c_eps.is_finite());
        let below = growth_envelope_check(&spec, 0.1, 0.8, 4.0, &samples);
        assert!(!below.holds);
    }

    #[test]
    fn h_envelope_holds_for_canonical_h() {
        let spec = supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5);
        let samples: Vec<f64> = (1..=50).map(|i| i as f64 * 0.2).collect();
        assert!(check_h_envelope(&spec, &samples).unwrap());
    }

    #[test]
    fn f4_f5_diagnostic_runs() {
        let spec = NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, chi: 4.0 });
        let samples: Vec<f64> = (1..=100).map(|i| 1.0 + i as f64 * 0.15).collect();
        let rep = check_f4_f5(&spec, 1.0, 10.0, 1.0, 1.0, 1e-6, &samples).unwrap();
        assert!(rep.f5_liminf.is_finite());
        assert!(rep.f5_holds);
    }

    #[test]
    fn serde_round_trip() {
        let spec = supercritical(0.5, 3.0, 1.0, 6.0, 1.0, 1.5)
            .truncate(2.0, TruncationMode::CriticalTwo)
            .unwrap();
        let js = serde_json::to_string(&spec).unwrap();
        let back: NonlinearitySpec = serde_json::from_str(&js).unwrap();
        assert_eq!(spec, back);
    }
}
