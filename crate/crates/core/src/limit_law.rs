//! The limit ν of the rescaled powers (μ^{⊠n})^{1/n}, and the logarithmic
//! functionals of μ that can be written as integrals of ln S_μ(t - 1).
//!
//! ν has an atom of mass δ = μ({0}) at 0 and quantile t ↦ 1/S_μ(t - 1) on
//! (δ, 1). Every functional below is an integral over t in (δ, 1), computed
//! with endpoint-refined Gauss–Legendre panels.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{out_of_domain, Error, Result};
use crate::family::family_limit_cdf;
use crate::measure::{EmpiricalDist, Measure};
use crate::quadrature::{integrate_unit, UnitRule};
use crate::transforms::STransform;

/// Step in t for the finite-difference density of ν.
const DENSITY_STEP: f64 = 1e-5;

/// The law ν attached to a measure μ.
#[derive(Debug, Clone)]
pub struct LimitLaw {
    st: STransform,
}

impl LimitLaw {
    pub fn new(st: STransform) -> Self {
        LimitLaw { st }
    }

    pub fn from_measure(m: &Measure) -> Self {
        Self::new(STransform::new(m))
    }

    pub fn s_transform(&self) -> &STransform {
        &self.st
    }

    /// ν({0}) = δ.
    pub fn atom_at_zero(&self) -> f64 {
        self.st.delta()
    }

    /// Support (a, b) of ν.
    pub fn support(&self) -> (f64, f64) {
        self.st.endpoints()
    }

    /// 1 / S(t - 1) for t in (δ, 1).
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > self.st.delta() && t < 1.0) {
            return Err(out_of_domain(t, format!("({}, 1)", self.st.delta())));
        }
        Ok((-self.st.ln_s_at(t, 1.0 - t)?).exp())
    }

    /// ν([0, x]).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(out_of_domain(x, "[0, inf)"));
        }
        if let Some(c) = self.st.dirac_location() {
            return Ok(if x >= c { 1.0 } else { 0.0 });
        }
        if let Some((p, scale)) = self.st.source().as_family() {
            if x == 0.0 {
                return Ok(0.0);
            }
            return family_limit_cdf(p, x / scale);
        }
        let delta = self.st.delta();
        let (a, b) = self.support();
        if x <= a {
            return Ok(delta);
        }
        if x >= b {
            return Ok(1.0);
        }
        // bisection in the logit of r = (t - δ)/(1 - δ)
        let ln_x = x.ln();
        let pair = |y: f64| {
            let r = 1.0 / (1.0 + (-y).exp());
            let rc = 1.0 / (1.0 + y.exp());
            (delta + (1.0 - delta) * r, (1.0 - delta) * rc)
        };
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (t, s) = pair(mid);
            let ln_q = match self.st.ln_s_at(t, s) {
                Ok(v) => -v,
                // the solver gives up only at the extreme ends of (δ, 1)
                Err(_) => {
                    if mid < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                }
            };
            if ln_q <= ln_x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(pair(0.5 * (lo + hi)).0)
    }

    /// Density of ν at x by central differences of the quantile.
    /// Approximate; zero outside the support.
    pub fn density_approx(&self, x: f64) -> Result<f64> {
        if self.st.is_dirac() {
            return Err(Error::DiracInput);
        }
        let (a, b) = self.support();
        if x <= a || x >= b {
            return Ok(0.0);
        }
        let t = self.cdf(x)?;
        let delta = self.st.delta();
        let h = DENSITY_STEP.min(0.5 * (t - delta)).min(0.5 * (1.0 - t));
        let dq = (self.quantile(t + h)? - self.quantile(t - h)?) / (2.0 * h);
        Ok(1.0 / dq)
    }
}

/// ν([0, x]).
pub fn limit_cdf(ll: &LimitLaw, x: f64) -> Result<f64> {
    ll.cdf(x)
}

/// (1/N) Σ (1 + ((1-t)/t) S(t-1)ⁿ xⁿ)⁻¹ - t over the samples, evaluated in
/// log space.
pub fn lln_identity_residual(st: &STransform, emp: &EmpiricalDist, n: u32, t: f64) -> Result<f64> {
    if !(t > st.delta() && t < 1.0) {
        return Err(out_of_domain(t, format!("({}, 1)", st.delta())));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let s = 1.0 - t;
    let nf = n as f64;
    let base = (s / t).ln() + nf * st.ln_s_at(t, s)?;
    let total: f64 = emp
        .samples()
        .iter()
        .map(|&x| {
            if x == 0.0 {
                return 1.0;
            }
            let l = base + nf * x.ln();
            if l > 0.0 {
                let e = (-l).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + l.exp())
            }
        })
        .sum();
    Ok(total / emp.len() as f64 - t)
}

/// E ln x, ρ and V ln x of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMoments {
    pub mean_ln: f64,
    pub rho: f64,
    pub var_ln: f64,
}

fn rule_for(st: &STransform) -> UnitRule {
    if st.is_closed_form() {
        UnitRule::default()
    } else {
        // each node costs a root solve; stop the end refinement early
        UnitRule::default().with_min_width(1e-13)
    }
}

/// ∫_δ^1 f(t, 1 - t, ln S(t - 1)) dt, propagating solver errors.
fn t_integral<F: Fn(f64, f64, f64) -> f64>(st: &STransform, f: F) -> Result<f64> {
    let delta = st.delta();
    let err = RefCell::new(None);
    let v = integrate_unit(&rule_for(st), |r, rc| {
        let (t, s) = (delta + (1.0 - delta) * r, (1.0 - delta) * rc);
        match st.ln_s_at(t, s) {
            Ok(ln_s) => f(t, s, ln_s),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok((1.0 - delta) * v)
}

fn require_no_zero_atom(st: &STransform, what: &str) -> Result<()> {
    if st.delta() > 0.0 {
        Err(Error::Diverges(format!("{what}: the measure has an atom at 0")))
    } else {
        Ok(())
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Diverges(what.to_string()))
    }
}

/// ∫ ln x dμ = -∫₀¹ ln S(t - 1) dt.
pub fn log_mean(m: &Measure) -> Result<f64> {
    log_mean_of(&STransform::new(m))
}

fn log_mean_of(st: &STransform) -> Result<f64> {
    if let Some(c) = st.dirac_location() {
        return Ok(c.ln());
    }
    require_no_zero_atom(st, "E ln x")?;
    finite(-t_integral(st, |_, _, ln_s| ln_s)?, "∫ ln S(t-1) dt")
}

/// ρ(μ) = ∫₀¹ ln((1 - t)/t) ln S(t - 1) dt.
pub fn rho(m: &Measure) -> Result<f64> {
    rho_of(&STransform::new(m))
}

fn rho_of(st: &STransform) -> Result<f64> {
    if st.is_dirac() {
        return Ok(0.0);
    }
    require_no_zero_atom(st, "ρ")?;
    let v = finite(t_integral(st, |t, s, ln_s| (s / t).ln() * ln_s)?, "∫ ln((1-t)/t) ln S(t-1) dt")?;
    Ok(v.max(0.0))
}

/// (V_μ ln x, V_ν ln x); both infinite when ∫ ln² S diverges or μ has an
/// atom at 0.
pub fn log_variance(m: &Measure) -> Result<(f64, f64)> {
    log_variance_of(&STransform::new(m))
}

fn log_variance_of(st: &STransform) -> Result<(f64, f64)> {
    if st.is_dirac() {
        return Ok((0.0, 0.0));
    }
    if st.delta() > 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let i2 = t_integral(st, |_, _, ln_s| ln_s * ln_s)?;
    if !i2.is_finite() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let i1 = -log_mean_of(st)?;
    let var_nu = (i2 - i1 * i1).max(0.0);
    let var_mu = var_nu + 2.0 * rho_of(st)?;
    Ok((var_mu, var_nu))
}

/// V ln x under μ^{⊠n}: n² V_ν + 2nρ.
pub fn nfold_log_variance(m: &Measure, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let st = STransform::new(m);
    if st.is_dirac() {
        return Ok(0.0);
    }
    let (_, var_nu) = log_variance_of(&st)?;
    if !var_nu.is_finite() {
        return Ok(f64::INFINITY);
    }
    let nf = n as f64;
    Ok(nf * nf * var_nu + 2.0 * nf * rho_of(&st)?)
}

/// E ln x, ρ and V ln x in one call.
pub fn log_moments(m: &Measure) -> Result<LogMoments> {
    let st = STransform::new(m);
    Ok(LogMoments { mean_ln: log_mean_of(&st)?, rho: rho_of(&st)?, var_ln: log_variance_of(&st)?.0 })
}

fn sinc_pi(gamma: f64) -> f64 {
    let x = PI * gamma;
    if gamma.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// ∫ x^γ dμ for -1 < γ < 1, as
/// (sin πγ / πγ) ∫ ((1 - t)/t · S(t - 1))^{-γ} dt; `inf` when divergent.
pub fn fractional_moment(m: &Measure, gamma: f64) -> Result<f64> {
    if !(gamma > -1.0 && gamma < 1.0) {
        return Err(out_of_domain(gamma, "(-1, 1)"));
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let st = STransform::new(m);
    if let Some(c) = st.dirac_location() {
        return Ok(c.powf(gamma));
    }
    if gamma < 0.0 && st.delta() > 0.0 {
        return Ok(f64::INFINITY);
    }
    let v = t_integral(&st, |t, s, ln_s| (-gamma * ((s / t).ln() + ln_s)).exp())?;
    Ok(if v.is_finite() { sinc_pi(gamma) * v } else { f64::INFINITY })
}

/// ∫ x^γ dν = ∫ S(t - 1)^{-γ} dt over (δ, 1), plus the atom at 0.
pub fn limit_fractional_moment(ll: &LimitLaw, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let st = ll.s_transform();
    if let Some(c) = st.dirac_location() {
        return Ok(c.powf(gamma));
    }
    if gamma < 0.0 && st.delta() > 0.0 {
        return Ok(f64::INFINITY);
    }
    let v = t_integral(st, |_, _, ln_s| (-gamma * ln_s).exp())?;
    Ok(if v.is_finite() { v } else { f64::INFINITY })
}
