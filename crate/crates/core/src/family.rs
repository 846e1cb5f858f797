//! The two-parameter ⊠-semigroup μ(α, β) with S-transform
//! `S(z) = (-z)^β / (1 + z)^α` on (-1, 0).
//!
//! Densities are evaluated through the angle parametrization: for
//! θ = π t in (0, π) put
//!
//! ```text
//! φ₁ = (π - θ) / (α + 1),   φ₂ = θ / (β + 1),
//! x(θ) = sin^{α+1}φ₂ · sin^{β-α}(φ₁ + φ₂) / sin^{β+1}φ₁,
//! f(x(θ)) = sin φ₁ sin φ₂ / (π x sin(φ₁ + φ₂)).
//! ```
//!
//! x(θ) is strictly increasing, so the same map doubles as a change of
//! variables that turns every integral against μ(α, β) into a smooth
//! integral over (0, 1) (see [`theta_integral`]).
//!
//! All angles are built from `t` and `1 - t` separately, and
//! `π - φ₁ - φ₂ = π (α s/(α+1) + β t/(β+1))` is formed without
//! cancellation, so the parametrization stays accurate at both ends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{out_of_domain, Error, Result};
use crate::measure::QuantileTable;
use crate::quadrature::{gauss_legendre, integrate_unit, UnitRule};
use crate::roots::{bisect_logistic, Monotone};

/// Below this value a parameter is treated as exactly zero by the
/// density dispatch.
pub const DEGENERATE_PARAM: f64 = 1e-8;

/// Index (α, β) ≥ 0 of μ(α, β); (0, 0) is the point mass at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl FamilyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "family parameters must be finite and nonnegative, got ({alpha}, {beta})"
            )));
        }
        Ok(FamilyParams { alpha, beta })
    }

    /// μ(0, 0) = δ₁.
    pub fn is_identity(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    /// ln S(t - 1) as a function of t and its complement s = 1 - t.
    pub(crate) fn ln_s(&self, t: f64, s: f64) -> f64 {
        let mut v = 0.0;
        if self.beta != 0.0 {
            v += self.beta * s.ln();
        }
        if self.alpha != 0.0 {
            v -= self.alpha * t.ln();
        }
        v
    }

    fn require_nontrivial(&self) -> Result<()> {
        if self.is_identity() {
            Err(Error::InvalidParameter("μ(0,0) is the point mass at 1".into()))
        } else {
            Ok(())
        }
    }
}

/// Angles of the density parametrization at x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPair {
    pub phi1: f64,
    pub phi2: f64,
    pub theta: f64,
}

/// S-transform of μ(α, β) at z in (-1, 0).
pub fn family_s(p: FamilyParams, z: f64) -> Result<f64> {
    if !(z > -1.0 && z < 0.0) {
        return Err(out_of_domain(z, "(-1, 0)"));
    }
    Ok(p.ln_s(1.0 + z, -z).exp())
}

fn sinc_pi(gamma: f64) -> f64 {
    let x = PI * gamma;
    if gamma.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// ln(sin(πa) / (πa)) for a in (0, 1), given a and c = 1 - a separately.
fn ln_sin_ratio(a: f64, c: f64) -> f64 {
    let u = PI * a;
    if u < 0.1 {
        let u2 = u * u;
        let m = -u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)));
        m.ln_1p()
    } else if a <= 0.5 {
        (u.sin() / u).ln()
    } else {
        (PI * c).sin().ln() - u.ln()
    }
}

/// Fractional moment ∫ x^γ dμ(α, β); `inf` outside the admissible range.
pub fn family_moment(p: FamilyParams, gamma: f64) -> f64 {
    let FamilyParams { alpha, beta } = p;
    if gamma == 0.0 || p.is_identity() {
        return 1.0;
    }
    if beta == 0.0 {
        if gamma <= -1.0 / (1.0 + alpha) {
            return f64::INFINITY;
        }
        return (ln_gamma(1.0 + gamma * (1.0 + alpha)) - ln_gamma(1.0 + gamma) - ln_gamma(2.0 + gamma * alpha)).exp();
    }
    if alpha == 0.0 {
        if gamma >= 1.0 / (1.0 + beta) {
            return f64::INFINITY;
        }
        return (ln_gamma(1.0 - gamma * (1.0 + beta)) - ln_gamma(1.0 - gamma) - ln_gamma(2.0 - gamma * beta)).exp();
    }
    if gamma <= -1.0 / (1.0 + alpha) || gamma >= 1.0 / (1.0 + beta) {
        return f64::INFINITY;
    }
    sinc_pi(gamma)
        * (ln_gamma(1.0 + gamma + gamma * alpha) + ln_gamma(1.0 - gamma - gamma * beta)
            - ln_gamma(2.0 + gamma * alpha - gamma * beta))
        .exp()
}

/// Closed support [lo, hi] of μ(α, β).
pub fn family_support(p: FamilyParams) -> Result<(f64, f64)> {
    p.require_nontrivial()?;
    let FamilyParams { alpha, beta } = p;
    let hi = if beta == 0.0 {
        ((alpha + 1.0) * (alpha + 1.0).ln() - alpha * alpha.ln()).exp()
    } else {
        f64::INFINITY
    };
    let lo = if alpha == 0.0 {
        (beta * beta.ln() - (beta + 1.0) * (beta + 1.0).ln()).exp()
    } else {
        0.0
    };
    Ok((lo, hi))
}

/// Angles at θ = π t, with s = 1 - t.
#[derive(Debug, Clone, Copy)]
struct Angles {
    phi1: f64,
    phi2: f64,
    /// π - φ₁ - φ₂
    rest: f64,
    sin1: f64,
    sin2: f64,
}

fn angles(p: FamilyParams, t: f64, s: f64) -> Angles {
    let a1 = p.alpha + 1.0;
    let b1 = p.beta + 1.0;
    let phi1 = PI * s / a1;
    let phi2 = PI * t / b1;
    // φ₁ approaches π only when α = 0 (and φ₂ only when β = 0); take the
    // sine from the complementary angle there
    let sin1 = phi1.min(PI * (p.alpha + t) / a1).sin();
    let sin2 = phi2.min(PI * (p.beta + s) / b1).sin();
    Angles { phi1, phi2, rest: PI * (s * p.alpha / a1 + t * p.beta / b1), sin1, sin2 }
}

/// ln x(θ) at θ = π t.
pub fn ln_u_of_theta(p: FamilyParams, t: f64, s: f64) -> f64 {
    let a = angles(p, t, s);
    let mut v = (p.alpha + 1.0) * a.sin2.ln() - (p.beta + 1.0) * a.sin1.ln();
    if p.beta != p.alpha {
        v += (p.beta - p.alpha) * a.rest.sin().ln();
    }
    v
}

/// Density of the pushforward of μ(α, β) to t = θ/π, i.e. dμ = w(t) dt.
fn t_density(p: FamilyParams, a: &Angles) -> f64 {
    let a1 = p.alpha + 1.0;
    let b1 = p.beta + 1.0;
    let (s1, c1) = (a.sin1, a.phi1.cos());
    let (s2, c2) = (a.sin2, a.phi2.cos());
    let (sr, cr) = a.rest.sin_cos();
    let d = p.alpha - p.beta;
    let v = (a1 * a1 * c2 * s1 + b1 * b1 * c1 * s2) / sr + d * d * s1 * s2 * cr / (sr * sr);
    (v / (a1 * b1)).max(0.0)
}

/// ∫ g(ln x) dμ(α, β)(x) through the angle substitution.
pub fn theta_integral<G: FnMut(f64) -> f64>(p: FamilyParams, rule: &UnitRule, mut g: G) -> f64 {
    if p.is_identity() {
        return g(0.0);
    }
    integrate_unit(rule, |t, s| {
        let w = t_density(p, &angles(p, t, s));
        if w == 0.0 {
            0.0
        } else {
            g(ln_u_of_theta(p, t, s)) * w
        }
    })
}

/// Fixed quadrature nodes (x, weight) for μ(α, β), truncated at
/// distance `min_width` from the ends of the angle range.
pub(crate) fn theta_nodes(p: FamilyParams, min_width: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(32);
    let panels = 32usize;
    let h = 1.0 / panels as f64;
    let mut cells: Vec<(f64, f64, bool)> = Vec::new();
    for k in 1..panels - 1 {
        cells.push((k as f64 * h, (k + 1) as f64 * h, false));
    }
    // end panels, in distance-to-end coordinates
    let mut hi = h;
    while hi > min_width {
        let lo = hi * 0.1;
        cells.push((lo, hi, true));
        hi = lo;
    }
    let mut nodes = Vec::new();
    for &(a, b, end) in &cells {
        for (d, w) in gl.mapped(a, b) {
            let pts: &[(f64, f64)] = if end { &[(d, 1.0 - d), (1.0 - d, d)] } else { &[(d, 1.0 - d)] };
            for &(t, s) in pts {
                let dens = t_density(p, &angles(p, t, s));
                if dens > 0.0 {
                    nodes.push((ln_u_of_theta(p, t, s).exp(), w * dens));
                }
            }
        }
    }
    // Renormalize the truncated rule to unit mass.
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(out_of_domain(x, "(0, inf)"));
    }
    Ok(())
}

/// Solves x(θ) = x for the angle pair; errors when x lies outside the
/// range of the parametrization (only possible when α or β is 0).
pub fn solve_phi(p: FamilyParams, x: f64) -> Result<PhiPair> {
    check_x(x)?;
    p.require_nontrivial()?;
    let (t, s) = solve_theta(p, x.ln())?;
    let a = angles(p, t, s);
    Ok(PhiPair { phi1: a.phi1, phi2: a.phi2, theta: PI * t })
}

fn solve_theta(p: FamilyParams, ln_x: f64) -> Result<(f64, f64)> {
    bisect_logistic(|t, s| ln_u_of_theta(p, t, s), ln_x, Monotone::Increasing)
}

/// Both printed forms of the general density at x, computed from the
/// same angle pair: `(statement form, proof form)`.
pub fn density_forms(p: FamilyParams, x: f64) -> Result<(f64, f64)> {
    p.require_nontrivial()?;
    check_x(x)?;
    let (t, s) = solve_theta(p, x.ln())?;
    let ang = angles(p, t, s);
    let (s1, s2, s12) = (ang.sin1, ang.sin2, ang.rest.sin());
    let a = p.alpha;
    let b = p.beta;
    let statement = s1.powf(b + 2.0) * s12.powf(a - b - 1.0) / (PI * s2.powf(a));
    let proof = s1 * s2 / (PI * x * s12);
    Ok((statement, proof))
}

/// Density of μ(α, β) at x > 0; zero outside the support.
pub fn family_density(p: FamilyParams, x: f64) -> Result<f64> {
    check_x(x)?;
    p.require_nontrivial()?;
    let (lo, hi) = family_support(p)?;
    if x <= lo || x >= hi {
        return Ok(0.0);
    }
    if p.beta < DEGENERATE_PARAM {
        return density_beta_zero(p.alpha, x);
    }
    if p.alpha < DEGENERATE_PARAM {
        return density_alpha_zero(p.beta, x);
    }
    let (t, s) = solve_theta(p, x.ln())?;
    let a = angles(p, t, s);
    Ok(a.sin1 * a.sin2 / (PI * x * a.rest.sin()))
}

/// Explicit density of μ(α, α).
pub fn density_equal_params(alpha: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let k = 1.0 / (alpha + 1.0);
    let angle = PI * k;
    Ok(angle.sin() / (PI * x * (x.powf(k) + 2.0 * angle.cos() + x.powf(-k))))
}

/// Density of μ(0, β) via the single-angle form
/// x = sin φ sin^β(βφ) / sin^{β+1}((β+1)φ), φ in (0, π/(β+1)).
pub fn density_alpha_zero(beta: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let b1 = beta + 1.0;
    // ln(x / lo) as a function of r, with φ = π r / (β+1)
    let ln_ratio = |r: f64, rc: f64| {
        ln_sin_ratio(r / b1, (beta + rc) / b1) + beta * ln_sin_ratio(beta * r / b1, (1.0 + beta * rc) / b1)
            - b1 * ln_sin_ratio(r, rc)
    };
    let lo = (beta * beta.ln() - b1 * b1.ln()).exp();
    if x <= lo {
        return Ok(0.0);
    }
    let (r, rc) = bisect_logistic(ln_ratio, (x / lo).ln(), Monotone::Increasing)?;
    let phi = PI * r / b1;
    let top = (PI * r.min(rc)).sin();
    Ok(top.powf(beta + 2.0) / (PI * (beta * phi).sin().powf(b1)))
}

/// Density of μ(α, 0) via the single-angle form
/// x = sin^{α+1}((α+1)φ) / (sin φ sin^α(αφ)), φ in (0, π/(α+1)).
pub fn density_beta_zero(alpha: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let a1 = alpha + 1.0;
    // ln(x / hi) as a function of r, with φ = π r / (α+1)
    let ln_ratio = |r: f64, rc: f64| {
        a1 * ln_sin_ratio(r, rc)
            - ln_sin_ratio(r / a1, (alpha + rc) / a1)
            - alpha * ln_sin_ratio(alpha * r / a1, (1.0 + alpha * rc) / a1)
    };
    let hi = (a1 * a1.ln() - alpha * alpha.ln()).exp();
    if x >= hi {
        return Ok(0.0);
    }
    let (r, rc) = bisect_logistic(ln_ratio, (x / hi).ln(), Monotone::Decreasing)?;
    let phi = PI * r / a1;
    let top = (PI * r.min(rc)).sin();
    Ok(phi.sin().powi(2) * (alpha * phi).sin().powf(alpha - 1.0) / (PI * top.powf(alpha)))
}

/// CDF of the limit law ν(α, β), defined by F(t^α / (1-t)^β) = t.
pub fn family_limit_cdf(p: FamilyParams, x: f64) -> Result<f64> {
    check_x(x)?;
    let FamilyParams { alpha, beta } = p;
    if p.is_identity() {
        return Ok(if x >= 1.0 { 1.0 } else { 0.0 });
    }
    if beta == 0.0 {
        return Ok(if x >= 1.0 { 1.0 } else { x.powf(1.0 / alpha) });
    }
    if alpha == 0.0 {
        return Ok(if x <= 1.0 { 0.0 } else { 1.0 - x.powf(-1.0 / beta) });
    }
    if alpha == beta {
        return Ok(1.0 / (1.0 + x.powf(-1.0 / alpha)));
    }
    let (t, _) = bisect_logistic(|t, s| alpha * t.ln() - beta * s.ln(), x.ln(), Monotone::Increasing)?;
    Ok(t)
}

/// Parameters of the image of μ(α, β) under x ↦ 1/x.
pub fn family_dual(p: FamilyParams) -> FamilyParams {
    FamilyParams { alpha: p.beta, beta: p.alpha }
}

/// Parameters of the ⊠-power μ(α, β)^{⊠n}, for any real n > 0.
pub fn family_power(p: FamilyParams, n: f64) -> Result<FamilyParams> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("power must be positive, got {n}")));
    }
    FamilyParams::new(n * p.alpha, n * p.beta)
}

/// Both sides of (sin θ / π) ∫₀^∞ t^γ / (t² + 2t cos θ + 1) dt = sin(θγ) / sin(πγ).
///
/// The left side is computed by quadrature after folding (1, ∞) onto (0, 1).
pub fn sin_ratio_integral_check(theta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(theta.abs() < PI) {
        return Err(out_of_domain(theta, "(-pi, pi)"));
    }
    if !(gamma.abs() < 1.0) {
        return Err(out_of_domain(gamma, "(-1, 1)"));
    }
    let c = theta.cos();
    let integral = integrate_unit(&UnitRule::default(), |t, _| {
        let num = t.powf(gamma) + t.powf(-gamma);
        num / (t * t + 2.0 * c * t + 1.0)
    });
    let lhs = theta.sin() / PI * integral;
    let rhs = if gamma.abs() < 1e-8 {
        theta / PI * (1.0 + (PI * PI - theta * theta) * gamma * gamma / 6.0)
    } else {
        (theta * gamma).sin() / (PI * gamma).sin()
    };
    Ok((lhs, rhs))
}

/// Quantile table of μ(α, β) on `points + 1` Chebyshev-spaced angles.
///
/// Cumulative probabilities come from Gauss–Legendre integration of the
/// angle density over each cell. When the support is unbounded above the
/// last node is dropped, leaving a tail of order `points⁻²` in probability.
pub fn quantile_table(p: FamilyParams, points: usize) -> Result<QuantileTable> {
    p.require_nontrivial()?;
    let points = points.max(8);
    let (lo, hi) = family_support(p)?;
    let gl = gauss_legendre(16);
    let half_step = PI / (2.0 * points as f64);
    let node = |k: usize| {
        let a = half_step * k as f64;
        (a.sin().powi(2), a.cos().powi(2))
    };
    let mut cum = vec![0.0; points + 1];
    for k in 0..points {
        let (t0, _) = node(k);
        let (t1, s1) = node(k + 1);
        // integrate in whichever coordinate is better conditioned
        let mass = if t1 <= 0.5 {
            gl.integrate(t0, t1, |t| t_density(p, &angles(p, t, 1.0 - t)))
        } else {
            let s0 = node(k).1;
            gl.integrate(s1, s0, |s| t_density(p, &angles(p, 1.0 - s, s)))
        };
        cum[k + 1] = cum[k] + mass;
    }
    let total = cum[points];
    let mut u = Vec::with_capacity(points + 1);
    let mut x = Vec::with_capacity(points + 1);
    u.push(0.0);
    x.push(lo);
    for (k, c) in cum.iter().enumerate().take(points).skip(1) {
        let (t, s) = node(k);
        let xv = ln_u_of_theta(p, t, s).exp();
        let uv = c / total;
        if xv > *x.last().unwrap() && uv > *u.last().unwrap() && xv.is_finite() {
            u.push(uv);
            x.push(xv);
        }
    }
    if hi.is_finite() {
        while x.len() > 1 && (*x.last().unwrap() >= hi || *u.last().unwrap() >= 1.0) {
            x.pop();
            u.pop();
        }
        u.push(1.0);
        x.push(hi);
    }
    QuantileTable::new(u, x)
}
