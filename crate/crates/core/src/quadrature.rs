//! Composite Gauss–Legendre quadrature.
//!
//! Everything in the crate that integrates over a probability variable
//! ends up in [`integrate_unit`]: uniform panels on the open unit interval,
//! with the two end panels split geometrically so that logarithmic and
//! integrable power singularities at 0 and 1 are resolved. The integrand
//! receives both the abscissa `t` and its complement `1 - t`, the latter
//! computed exactly near the right end.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Partial sums beyond this magnitude are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared, lazily computed n-point rule.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
        .clone()
}

/// Default panel count, overridable through `FREELLN_PANELS`.
pub fn default_panels() -> usize {
    static PANELS: OnceLock<usize> = OnceLock::new();
    *PANELS.get_or_init(|| {
        std::env::var("FREELLN_PANELS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&p| p >= 2)
            .unwrap_or(16)
    })
}

/// Composite rule on (0, 1) with geometric refinement of both end panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitRule {
    /// Number of uniform panels on (0, 1); at least 2.
    pub panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Ratio between consecutive end-panel widths.
    pub ratio: f64,
    /// Refinement stops once an end panel is narrower than this.
    pub min_width: f64,
}

impl Default for UnitRule {
    fn default() -> Self {
        UnitRule { panels: default_panels(), order: 64, ratio: 0.1, min_width: 1e-300 }
    }
}

impl UnitRule {
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(2);
        self
    }

    pub fn with_min_width(mut self, min_width: f64) -> Self {
        self.min_width = min_width;
        self
    }
}

/// Integrates `f(t, 1 - t)` over (0, 1).
///
/// Returns `±inf` when a partial sum exceeds [`DIVERGENCE_THRESHOLD`] or
/// when the end refinement reaches `min_width` while the level
/// contributions are not shrinking geometrically; NaN from `f` is passed
/// through.
pub fn integrate_unit<F: FnMut(f64, f64) -> f64>(rule: &UnitRule, mut f: F) -> f64 {
    let gl = gauss_legendre(rule.order);
    let panels = rule.panels.max(2);
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for k in 1..panels - 1 {
        let a = k as f64 * h;
        let b = if k + 1 == panels - 1 { 1.0 - h } else { a + h };
        acc += gl.integrate(a, b, |t| f(t, 1.0 - t));
        if acc.is_nan() {
            return f64::NAN;
        }
    }
    let left = refine_end(rule, &gl, h, |d| f(d, 1.0 - d));
    if !left.is_finite() {
        return left;
    }
    let right = refine_end(rule, &gl, h, |d| f(1.0 - d, d));
    if !right.is_finite() {
        return right;
    }
    let total = acc + left + right;
    if total.abs() > DIVERGENCE_THRESHOLD {
        return f64::INFINITY.copysign(total);
    }
    total
}

/// Integral of `g(d)` over d in (0, h), walking geometric levels toward 0.
fn refine_end<G: FnMut(f64) -> f64>(rule: &UnitRule, gl: &GaussLegendre, h: f64, mut g: G) -> f64 {
    let mut sum = 0.0f64;
    let mut hi = h;
    let mut quiet = 0;
    // contributions of the last two levels
    let (mut before, mut last) = (f64::NAN, f64::NAN);
    loop {
        let lo = hi * rule.ratio;
        if lo < rule.min_width {
            if !(last.abs() > 1e-15 * sum.abs()) {
                return sum;
            }
            // an integrable end singularity gives geometrically shrinking
            // level contributions; extrapolate the rest of the series
            let q = last / before;
            if !(q > 0.0 && q < 0.995) {
                return f64::INFINITY.copysign(sum);
            }
            return sum + last * q / (1.0 - q);
        }
        let c = gl.integrate(lo, hi, &mut g);
        sum += c;
        if sum.is_nan() {
            return f64::NAN;
        }
        if sum.abs() > DIVERGENCE_THRESHOLD {
            return f64::INFINITY.copysign(sum);
        }
        if c.abs() <= 1e-17 * sum.abs() || c == 0.0 {
            quiet += 1;
            if quiet >= 2 {
                return sum + gl.integrate(0.0, lo, &mut g);
            }
        } else {
            quiet = 0;
        }
        (before, last) = (last, c);
        hi = lo;
    }
}

/// Globally adaptive 21-point Gauss–Legendre quadrature on [a, b].
///
/// Intervals are bisected until the difference between the whole-interval
/// estimate and the sum over its halves drops below the local share of
/// `tol` (absolute), or until `max_intervals` is exhausted.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    const MAX_INTERVALS: usize = 200_000;
    let gl = gauss_legendre(21);
    let whole = gl.integrate(a, b, &mut f);
    let mut stack = vec![(a, b, whole, tol, 0usize)];
    let mut total = 0.0;
    let mut visited = 0;
    while let Some((lo, hi, est, local_tol, depth)) = stack.pop() {
        visited += 1;
        let mid = 0.5 * (lo + hi);
        let left = gl.integrate(lo, mid, &mut f);
        let right = gl.integrate(mid, hi, &mut f);
        let refined = left + right;
        if (refined - est).abs() <= local_tol || depth >= 60 || visited > MAX_INTERVALS || mid == lo || mid == hi {
            total += refined;
        } else {
            stack.push((lo, mid, left, 0.5 * local_tol, depth + 1));
            stack.push((mid, hi, right, 0.5 * local_tol, depth + 1));
        }
    }
    total
}
