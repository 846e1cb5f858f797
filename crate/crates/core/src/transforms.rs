//! ψ, its inverse χ, and the S-transform of a measure on [0, ∞).
//!
//! For u < 0, ψ(u) = ∫ xu / (1 - xu) dμ(x) maps (-∞, 0) increasingly onto
//! (δ - 1, 0), where δ = μ({0}). With v = -u > 0 it is convenient to work
//! with g(v) = -ψ(-v) = ∫ xv / (1 + xv) dμ and its complement
//! h(v) = 1 - g(v) = ∫ 1 / (1 + xv) dμ. Solving g(v) = -z (or h(v) = 1 + z,
//! whichever is better conditioned) gives χ(z) = -v and
//! S(z) = (1 + z) v / (-z).

use std::sync::OnceLock;

use crate::error::{out_of_domain, Error, Result};
use crate::family::FamilyParams;
use crate::measure::{mean_and_inverse_mean, Measure};

const V_MIN: f64 = 1e-300;
const V_MAX: f64 = 1e300;
const MAX_ITER: usize = 200;
const CACHE_POINTS: usize = 1024;
const CACHE_EPS: f64 = 1e-6;

/// Sums needed by the solver at v = -u.
struct Sums {
    /// ∫ xv / (1 + xv)
    g: f64,
    /// ∫ 1 / (1 + xv)
    h: f64,
    /// v g'(v) = ∫ xv / (1 + xv)²
    dg: f64,
}

fn sums(rule: &[(f64, f64)], v: f64) -> Sums {
    let (mut g, mut h, mut dg) = (0.0, 0.0, 0.0);
    for &(x, w) in rule {
        let xv = x * v;
        let r = 1.0 / (1.0 + xv);
        g += w * xv * r;
        h += w * r;
        dg += w * xv * r * r;
    }
    Sums { g, h, dg }
}

/// ψ_μ(u) for u < 0.
pub fn psi(m: &Measure, u: f64) -> Result<f64> {
    if !(u < 0.0) || u.is_infinite() {
        return Err(out_of_domain(u, "(-inf, 0)"));
    }
    Ok(-sums(m.rule(), -u).g)
}

/// ψ_μ'(u) = ∫ x / (1 - ux)² dμ for u < 0.
pub fn psi_prime(m: &Measure, u: f64) -> Result<f64> {
    if !(u < 0.0) || u.is_infinite() {
        return Err(out_of_domain(u, "(-inf, 0)"));
    }
    Ok(m.rule().iter().map(|&(x, w)| w * x / (1.0 - u * x).powi(2)).sum())
}

/// χ_μ(z), the inverse of ψ_μ, for z in (δ - 1, 0).
pub fn chi(m: &Measure, z: f64) -> Result<f64> {
    let delta = m.delta();
    if !(z > delta - 1.0 && z < 0.0) {
        return Err(out_of_domain(z, format!("({}, 0)", delta - 1.0)));
    }
    Ok(-solve_v(m.rule(), delta, 1.0 + z, -z)?)
}

/// Finds v > 0 with g(v) = s, equivalently h(v) = t, where t + s = 1.
fn solve_v(rule: &[(f64, f64)], delta: f64, t: f64, s: f64) -> Result<f64> {
    // residual in the better-conditioned form; increasing in y = ln v
    let use_g = s <= 0.5;
    let resid = |y: f64| {
        let q = sums(rule, y.exp());
        if use_g {
            (q.g - s, q.dg)
        } else {
            (t - q.h, q.dg)
        }
    };
    let target = if use_g { s } else { t - delta };
    let tol = 4.0 * f64::EPSILON * target.abs().max(f64::MIN_POSITIVE);

    // bracket by doubling or halving from v = 1
    let ln2 = std::f64::consts::LN_2;
    let (mut lo, mut hi);
    let (r0, _) = resid(0.0);
    if r0 == 0.0 {
        return Ok(1.0);
    }
    if r0 < 0.0 {
        lo = 0.0;
        hi = ln2;
        while resid(hi).0 < 0.0 {
            lo = hi;
            hi += ln2;
            if hi > V_MAX.ln() {
                return Err(Error::NoConvergence(format!("ψ does not reach {} below |u| = 1e300", t - 1.0)));
            }
        }
    } else {
        hi = 0.0;
        lo = -ln2;
        while resid(lo).0 > 0.0 {
            hi = lo;
            lo -= ln2;
            if lo < V_MIN.ln() {
                return Err(Error::NoConvergence(format!("ψ does not reach {} above |u| = 1e-300", t - 1.0)));
            }
        }
    }

    let mut y = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (r, d) = resid(y);
        if r.is_nan() {
            return Err(Error::NoConvergence(format!("NaN in ψ at ln|u| = {y}")));
        }
        if r.abs() <= tol {
            return Ok(y.exp());
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
            return Ok(y.exp());
        }
        let newton = y - r / d;
        y = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::NoConvergence(format!("χ did not converge at z = {}", t - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Dirac(f64),
    Family { params: FamilyParams, scale: f64 },
    Numeric,
}

/// The S-transform of a measure, with its domain (δ - 1, 0) and the
/// endpoints a, b of its image.
#[derive(Debug, Clone)]
pub struct STransform {
    source: Measure,
    kind: Kind,
    delta: f64,
    a: f64,
    b: f64,
    cache: OnceLock<Vec<(f64, f64)>>,
}

impl STransform {
    pub fn new(source: &Measure) -> Self {
        let kind = if let Some(c) = source.dirac_location() {
            Kind::Dirac(c)
        } else if let Some((params, scale)) = source.as_family() {
            Kind::Family { params, scale }
        } else {
            Kind::Numeric
        };
        let (b, a) = mean_and_inverse_mean(source);
        STransform { source: source.clone(), kind, delta: source.delta(), a, b, cache: OnceLock::new() }
    }

    pub fn source(&self) -> &Measure {
        &self.source
    }

    /// δ = μ({0}).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// (a, b) = ((∫ x⁻¹ dμ)⁻¹, ∫ x dμ).
    pub fn endpoints(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.kind, Kind::Dirac(_))
    }

    /// The location c when the source is δ_c.
    pub fn dirac_location(&self) -> Option<f64> {
        match self.kind {
            Kind::Dirac(c) => Some(c),
            _ => None,
        }
    }

    /// True when S has a closed form (point mass or family member).
    pub fn is_closed_form(&self) -> bool {
        !matches!(self.kind, Kind::Numeric)
    }

    /// S(z) for z in (δ - 1, 0).
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z > self.delta - 1.0 && z < 0.0) {
            return Err(out_of_domain(z, format!("({}, 0)", self.delta - 1.0)));
        }
        Ok(self.ln_s_at(1.0 + z, -z)?.exp())
    }

    /// ln S(t - 1) given t and s = 1 - t separately, for t in (δ, 1).
    pub fn ln_s_at(&self, t: f64, s: f64) -> Result<f64> {
        match self.kind {
            Kind::Dirac(c) => Ok(-c.ln()),
            Kind::Family { params, scale } => Ok(params.ln_s(t, s) - scale.ln()),
            Kind::Numeric => {
                if !(t > self.delta && s > 0.0) {
                    return Err(out_of_domain(t - 1.0, format!("({}, 0)", self.delta - 1.0)));
                }
                let v = solve_v(self.source.rule(), self.delta, t, s)?;
                Ok(t.ln() + v.ln() - s.ln())
            }
        }
    }

    /// (z, S(z)) on a 1024-point grid in (δ - 1 + ε, -ε), built on first use.
    ///
    /// The grid is Chebyshev-spaced, or log-spaced toward δ - 1 when δ > 0.
    pub fn cache(&self) -> Result<&[(f64, f64)]> {
        if let Some(c) = self.cache.get() {
            return Ok(c);
        }
        let lo = self.delta - 1.0 + CACHE_EPS;
        let hi = -CACHE_EPS;
        let n = CACHE_POINTS;
        let mut grid = Vec::with_capacity(n);
        for k in 0..n {
            let r = k as f64 / (n - 1) as f64;
            let z = if self.delta > 0.0 {
                let span = hi - (self.delta - 1.0);
                self.delta - 1.0 + CACHE_EPS * (span / CACHE_EPS).powf(r)
            } else {
                let c = 0.5 * (1.0 - (std::f64::consts::PI * r).cos());
                lo + (hi - lo) * c
            };
            grid.push((z, self.eval(z)?));
        }
        Ok(self.cache.get_or_init(|| grid))
    }

    /// True when the cached values decrease strictly (constant for a point mass).
    pub fn cache_is_monotone(&self) -> Result<bool> {
        let c = self.cache()?;
        if self.is_dirac() {
            let (mn, mx) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
            return Ok(mx - mn < 1e-10);
        }
        Ok(c.windows(2).all(|w| w[1].1 < w[0].1))
    }
}

/// S(z) of the transform's source.
pub fn s_eval(st: &STransform, z: f64) -> Result<f64> {
    st.eval(z)
}

/// (inf S, sup S) = (1/b, 1/a) over the domain; 1/a = ∞ when a = 0.
pub fn s_image_endpoints(st: &STransform) -> Result<(f64, f64)> {
    if st.is_dirac() {
        return Err(Error::DiracInput);
    }
    let inf = if st.b.is_infinite() { 0.0 } else { 1.0 / st.b };
    let sup = if st.a == 0.0 { f64::INFINITY } else { 1.0 / st.a };
    Ok((inf, sup))
}
