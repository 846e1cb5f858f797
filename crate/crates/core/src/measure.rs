//! Probability measures on [0, ∞).
//!
//! A [`Measure`] is a finite list of atoms plus an optional continuous part.
//! The continuous part is either a tabulated quantile function, linear
//! between nodes, or a member of the μ(α, β) family (possibly scaled), whose
//! integrals are evaluated through its angle parametrization.

use std::cell::Cell;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{self, FamilyParams};
use crate::quadrature::{default_panels, gauss_legendre, UnitRule};

const MASS_TOLERANCE: f64 = 1e-12;
const FAMILY_TABLE_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// Strictly increasing table u_k ↦ x_k, linear in between.
///
/// The table describes a probability distribution on its own: probability
/// u_0 sits at x_0 and probability 1 - u_last at x_last.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    u: Vec<f64>,
    x: Vec<f64>,
}

impl QuantileTable {
    pub fn new(u: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidMeasure(format!("quantile table: {msg}")));
        if u.len() != x.len() {
            return bad("u and x differ in length");
        }
        if u.len() < 2 {
            return bad("needs at least two nodes");
        }
        if u.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if x.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return bad("locations must be finite and nonnegative");
        }
        if u.windows(2).any(|w| w[0] >= w[1]) || x.windows(2).any(|w| w[0] >= w[1]) {
            return bad("must be strictly increasing in both coordinates");
        }
        if u[0] > 0.0 && x[0] == 0.0 {
            return bad("leading clamp mass at 0 must be given as an atom");
        }
        Ok(QuantileTable { u, x })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    fn last(&self) -> usize {
        self.u.len() - 1
    }

    /// Quantile at probability p, clamped to [x_0, x_last].
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= self.u[0] {
            return self.x[0];
        }
        let n = self.last();
        if p >= self.u[n] {
            return self.x[n];
        }
        let k = self.u.partition_point(|&v| v <= p) - 1;
        let r = (p - self.u[k]) / (self.u[k + 1] - self.u[k]);
        self.x[k] + r * (self.x[k + 1] - self.x[k])
    }

    /// Distribution function of the table's measure.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.last();
        if x < self.x[0] {
            return 0.0;
        }
        if x >= self.x[n] {
            return 1.0;
        }
        let k = self.x.partition_point(|&v| v <= x) - 1;
        let r = (x - self.x[k]) / (self.x[k + 1] - self.x[k]);
        self.u[k] + r * (self.u[k + 1] - self.u[k])
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let n = self.last();
        if x <= self.x[0] {
            return 0.0;
        }
        if x > self.x[n] {
            return 1.0;
        }
        if x == self.x[n] {
            return self.u[n];
        }
        self.cdf(x)
    }

    /// (∫ x, ∫ 1/x), exact for the piecewise-linear quantile.
    fn mean_and_reciprocal_mean(&self) -> (f64, f64) {
        let n = self.last();
        let mut mean = self.u[0] * self.x[0] + (1.0 - self.u[n]) * self.x[n];
        let mut recip = if self.u[0] > 0.0 { self.u[0] / self.x[0] } else { 0.0 };
        recip += (1.0 - self.u[n]) / self.x[n];
        for k in 0..n {
            let du = self.u[k + 1] - self.u[k];
            let (x0, x1) = (self.x[k], self.x[k + 1]);
            mean += 0.5 * du * (x0 + x1);
            recip += if x0 == 0.0 { f64::INFINITY } else { du * (x1 / x0).ln() / (x1 - x0) };
        }
        (mean, recip)
    }

    fn scaled(&self, c: f64) -> QuantileTable {
        QuantileTable { u: self.u.clone(), x: self.x.iter().map(|v| v * c).collect() }
    }

    /// Quadrature nodes (x, w) for u ↦ x(u), with weights summing to 1.
    ///
    /// Each linear segment is split into pieces no wider than
    /// `1 / (4 panels)` and integrated with 8-point Gauss–Legendre. When the
    /// table starts at x = 0 the first segment is refined geometrically
    /// toward it, so that x⁻ᵖ and ln-type singularities are resolved.
    fn nodes(&self, panels: usize) -> Vec<(f64, f64)> {
        let gl8 = gauss_legendre(8);
        let gl16 = gauss_legendre(16);
        let max_width = 1.0 / (4 * panels.max(2)) as f64;
        let n = self.last();
        let mut out = Vec::new();
        if self.u[0] > 0.0 {
            out.push((self.x[0], self.u[0]));
        }
        for k in 0..n {
            let (u0, u1) = (self.u[k], self.u[k + 1]);
            let (x0, x1) = (self.x[k], self.x[k + 1]);
            let du = u1 - u0;
            let slope = (x1 - x0) / du;
            let pieces = (du / max_width).ceil().max(1.0) as usize;
            let h = du / pieces as f64;
            let first = if k == 0 && x0 == 0.0 {
                // geometric levels in the offset d from u0, x = slope * d
                let mut hi = h;
                while hi > 1e-16 * du.max(1e-300) {
                    let lo = hi * 0.25;
                    out.extend(gl16.mapped(lo, hi).map(|(d, w)| (slope * d, w)));
                    hi = lo;
                }
                out.extend(gl16.mapped(0.0, hi).map(|(d, w)| (slope * d, w)));
                1
            } else {
                0
            };
            for j in first..pieces {
                let (a, b) = (j as f64 * h, ((j + 1) as f64 * h).min(du));
                out.extend(gl8.mapped(a, b).map(|(d, w)| (x0 + slope * d, w)));
            }
        }
        if self.u[n] < 1.0 {
            out.push((self.x[n], 1.0 - self.u[n]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ContinuousPart {
    None,
    Quantile(QuantileTable),
    Family { params: FamilyParams, scale: f64 },
}

/// A probability measure on [0, ∞).
#[derive(Debug, Clone)]
pub struct Measure {
    atoms: Vec<Atom>,
    cont: ContinuousPart,
    cont_mass: f64,
    rule: OnceLock<Vec<(f64, f64)>>,
    family_table: OnceLock<QuantileTable>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.cont == other.cont && self.cont_mass == other.cont_mass
    }
}

impl Measure {
    fn build(mut atoms: Vec<Atom>, cont: ContinuousPart, cont_mass: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        for a in &atoms {
            if !(a.x >= 0.0 && a.x.is_finite()) {
                return bad(format!("atom location {} must be finite and nonnegative", a.x));
            }
            if !(a.w > 0.0 && a.w <= 1.0) {
                return bad(format!("atom mass {} must lie in (0, 1]", a.w));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        if atoms.windows(2).any(|w| w[0].x == w[1].x) {
            return bad("atom locations must be distinct".into());
        }
        if !(0.0..=1.0).contains(&cont_mass) {
            return bad(format!("continuous mass {cont_mass} must lie in [0, 1]"));
        }
        let total: f64 = atoms.iter().map(|a| a.w).sum::<f64>() + cont_mass;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return bad(format!("total mass {total} differs from 1"));
        }
        let cont = if cont_mass == 0.0 { ContinuousPart::None } else { cont };
        if cont_mass > 0.0 && cont == ContinuousPart::None {
            return bad("positive continuous mass without a continuous part".into());
        }
        let m = Measure { atoms, cont, cont_mass, rule: OnceLock::new(), family_table: OnceLock::new() };
        if m.delta() >= 1.0 {
            return bad("measure is concentrated at 0".into());
        }
        Ok(m)
    }

    /// Point mass at c ≥ 0. A point mass at 0 is rejected.
    pub fn dirac(c: f64) -> Result<Self> {
        Self::build(vec![Atom { x: c, w: 1.0 }], ContinuousPart::None, 0.0)
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        Self::build(atoms, ContinuousPart::None, 0.0)
    }

    /// Atoms plus a continuous part of total mass `cont_mass`.
    pub fn from_parts(atoms: Vec<Atom>, table: QuantileTable, cont_mass: f64) -> Result<Self> {
        Self::build(atoms, ContinuousPart::Quantile(table), cont_mass)
    }

    /// Continuous measure with the given quantile table.
    pub fn from_quantile(table: QuantileTable) -> Result<Self> {
        Self::from_parts(Vec::new(), table, 1.0)
    }

    /// μ(α, β); μ(0, 0) becomes the point mass at 1.
    pub fn family(p: FamilyParams) -> Self {
        if p.is_identity() {
            return Self::dirac(1.0).expect("unit point mass is valid");
        }
        Self::build(Vec::new(), ContinuousPart::Family { params: p, scale: 1.0 }, 1.0)
            .expect("family measures are valid")
    }

    /// Tabulated μ(α, β) with `points` quantile nodes.
    pub fn family_tabulated(p: FamilyParams, points: usize) -> Result<Self> {
        if p.is_identity() {
            return Self::dirac(1.0);
        }
        Self::from_quantile(family::quantile_table(p, points)?)
    }

    /// Parses the JSON measure format.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MeasureSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidMeasure(format!("bad measure JSON: {e}")))?;
        spec.into_measure()
    }

    /// Image under x ↦ c x.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {c}")));
        }
        let atoms = self.atoms.iter().map(|a| Atom { x: a.x * c, w: a.w }).collect();
        let cont = match &self.cont {
            ContinuousPart::None => ContinuousPart::None,
            ContinuousPart::Quantile(q) => ContinuousPart::Quantile(q.scaled(c)),
            ContinuousPart::Family { params, scale } => ContinuousPart::Family { params: *params, scale: scale * c },
        };
        Self::build(atoms, cont, self.cont_mass)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn cont_mass(&self) -> f64 {
        self.cont_mass
    }

    pub fn quantile_table(&self) -> Option<&QuantileTable> {
        match &self.cont {
            ContinuousPart::Quantile(q) => Some(q),
            _ => None,
        }
    }

    /// The family parameters and scale, when the measure is a scaled μ(α, β).
    pub fn as_family(&self) -> Option<(FamilyParams, f64)> {
        match self.cont {
            ContinuousPart::Family { params, scale } => Some((params, scale)),
            _ => None,
        }
    }

    /// Location of the point mass, if the measure is one.
    pub fn dirac_location(&self) -> Option<f64> {
        match (self.atoms.as_slice(), &self.cont) {
            ([a], ContinuousPart::None) => Some(a.x),
            _ => None,
        }
    }

    pub fn is_dirac(&self) -> bool {
        self.dirac_location().is_some()
    }

    /// μ({0}).
    pub fn delta(&self) -> f64 {
        self.atoms.iter().filter(|a| a.x == 0.0).map(|a| a.w).sum()
    }

    fn build_rule(&self, panels: usize) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.x, a.w)).collect();
        let cont = match &self.cont {
            ContinuousPart::None => Vec::new(),
            ContinuousPart::Quantile(q) => q.nodes(panels),
            ContinuousPart::Family { params, scale } => {
                family::theta_nodes(*params, 1e-16).into_iter().map(|(x, w)| (x * scale, w)).collect()
            }
        };
        out.extend(cont.into_iter().filter(|n| n.1 > 0.0).map(|(x, w)| (x, w * self.cont_mass)));
        out
    }

    /// Fixed quadrature rule (x, w) for the whole measure; weights sum to 1.
    pub(crate) fn rule(&self) -> &[(f64, f64)] {
        self.rule.get_or_init(|| self.build_rule(default_panels()))
    }

    /// ∫ f dμ with the default panel count.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.integrate_with(default_panels(), f)
    }

    /// ∫ f dμ with an explicit panel count for tabulated parts.
    pub fn integrate_with<F: Fn(f64) -> f64>(&self, panels: usize, f: F) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            let v = f(a.x);
            if !v.is_finite() {
                return Err(Error::NonFinite { x: a.x, value: v });
            }
            total += a.w * v;
        }
        let cont = match &self.cont {
            ContinuousPart::None => 0.0,
            ContinuousPart::Quantile(q) => {
                let owned;
                let nodes: &[(f64, f64)] = if panels == default_panels() && self.atoms.is_empty() {
                    self.rule()
                } else {
                    owned = q.nodes(panels);
                    &owned
                };
                let mut s = 0.0;
                for &(x, w) in nodes {
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(Error::NonFinite { x, value: v });
                    }
                    s += w * v;
                }
                s
            }
            ContinuousPart::Family { params, scale } => {
                let bad = Cell::new(None);
                let rule = UnitRule::default().with_panels(panels);
                let s = family::theta_integral(*params, &rule, |ln_x| {
                    let x = ln_x.exp() * scale;
                    let v = f(x);
                    if !v.is_finite() && bad.get().is_none() && x > 0.0 && x.is_finite() {
                        bad.set(Some((x, v)));
                    }
                    v
                });
                if let Some((x, value)) = bad.get() {
                    return Err(Error::NonFinite { x, value });
                }
                s
            }
        };
        Ok(total + self.cont_mass * cont)
    }

    fn family_table(&self) -> Option<&QuantileTable> {
        match self.cont {
            ContinuousPart::Family { params, scale } => Some(self.family_table.get_or_init(|| {
                family::quantile_table(params, FAMILY_TABLE_POINTS)
                    .expect("non-trivial family has a quantile table")
                    .scaled(scale)
            })),
            _ => None,
        }
    }

    fn cont_table(&self) -> Option<&QuantileTable> {
        match &self.cont {
            ContinuousPart::Quantile(q) => Some(q),
            ContinuousPart::Family { .. } => self.family_table(),
            ContinuousPart::None => None,
        }
    }

    /// `count` independent draws by inverse-CDF sampling.
    ///
    /// Family measures are sampled through their 2048-node quantile table.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(count, &mut rng)
    }

    pub(crate) fn sample_with<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        let table = self.cont_table();
        (0..count)
            .map(|_| {
                let mut p: f64 = rng.random();
                for a in &self.atoms {
                    if p < a.w {
                        return a.x;
                    }
                    p -= a.w;
                }
                match table {
                    Some(q) => q.quantile((p / self.cont_mass).min(1.0)),
                    // rounding left a sliver of probability past the last atom
                    None => self.atoms.last().map_or(0.0, |a| a.x),
                }
            })
            .collect()
    }

    /// Distribution function μ([0, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.x <= x).map(|a| a.w).sum();
        let cont = self.cont_table().map_or(0.0, |q| q.cdf(x));
        (atoms + self.cont_mass * cont).min(1.0)
    }

    /// μ([0, x)).
    pub fn cdf_left(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.x < x).map(|a| a.w).sum();
        let cont = self.cont_table().map_or(0.0, |q| q.cdf_left(x));
        (atoms + self.cont_mass * cont).min(1.0)
    }
}

/// (b, a) = (∫ x dμ, (∫ x⁻¹ dμ)⁻¹) as extended reals; a = 0 when the
/// reciprocal integral diverges or μ has an atom at 0.
pub fn mean_and_inverse_mean(m: &Measure) -> (f64, f64) {
    let mut mean = 0.0;
    let mut recip = 0.0;
    for a in &m.atoms {
        mean += a.w * a.x;
        recip += if a.x == 0.0 { f64::INFINITY } else { a.w / a.x };
    }
    let (cm, cr) = match &m.cont {
        ContinuousPart::None => (0.0, 0.0),
        ContinuousPart::Quantile(q) => q.mean_and_reciprocal_mean(),
        ContinuousPart::Family { params, scale } => {
            (family::family_moment(*params, 1.0) * scale, family::family_moment(*params, -1.0) / scale)
        }
    };
    mean += m.cont_mass * cm;
    recip += m.cont_mass * cr;
    let a = if m.delta() > 0.0 || recip.is_infinite() { 0.0 } else { 1.0 / recip };
    (mean, a)
}

/// Sorted sample of nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    sorted: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidMeasure("empirical distribution needs at least one sample".into()));
        }
        if let Some(&v) = samples.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidMeasure(format!("sample {v} is not a finite nonnegative number")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDist { sorted: samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Fraction of samples ≤ x.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// A distribution function, with its left limits.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    /// F(x⁻); defaults to F(x), which is right for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

impl Cdf for Measure {
    fn cdf(&self, x: f64) -> f64 {
        Measure::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        Measure::cdf_left(self, x)
    }
}

/// Kolmogorov–Smirnov distance sup |F_emp − F|.
pub fn ks_distance<C: Cdf + ?Sized>(e: &EmpiricalDist, cdf: &C) -> f64 {
    ks_distance_with_slack(e, cdf, 0.0)
}

/// KS distance where each sample may move by a relative amount `slack`
/// before being compared, absorbing rounding in samples that should sit
/// exactly on a jump of F.
pub fn ks_distance_with_slack<C: Cdf + ?Sized>(e: &EmpiricalDist, cdf: &C, slack: f64) -> f64 {
    let xs = &e.sorted;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        let h = slack * x.abs();
        // the most favourable comparison inside [x - h, x + h]
        let (r_lo, r_hi) = (cdf.cdf(x - h), cdf.cdf(x + h));
        let (l_lo, l_hi) = (cdf.cdf_left(x - h), cdf.cdf_left(x + h));
        d = d.max(gap(at, r_lo, r_hi)).max(gap(below, l_lo, l_hi));
        i = j + 1;
    }
    d.min(1.0)
}

fn gap(level: f64, lo: f64, hi: f64) -> f64 {
    if level < lo {
        lo - level
    } else if level > hi {
        level - hi
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuantileSpec {
    u: Vec<f64>,
    x: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MeasureSpec {
    Family {
        family: FamilyParams,
    },
    Table {
        #[serde(default)]
        atoms: Vec<Atom>,
        #[serde(default)]
        quantile: Option<QuantileSpec>,
        #[serde(default)]
        cont_mass: Option<f64>,
    },
}

impl MeasureSpec {
    fn into_measure(self) -> Result<Measure> {
        match self {
            MeasureSpec::Family { family } => Ok(Measure::family(FamilyParams::new(family.alpha, family.beta)?)),
            MeasureSpec::Table { atoms, quantile, cont_mass } => {
                let atom_mass: f64 = atoms.iter().map(|a| a.w).sum();
                match quantile {
                    None => {
                        if cont_mass.is_some_and(|c| c != 0.0) {
                            return Err(Error::InvalidMeasure("cont_mass given without a quantile table".into()));
                        }
                        Measure::from_atoms(atoms)
                    }
                    Some(q) => {
                        let table = QuantileTable::new(q.u, q.x)?;
                        let cm = cont_mass.unwrap_or((1.0 - atom_mass).max(0.0));
                        Measure::from_parts(atoms, table, cm)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform() -> Measure {
        Measure::from_quantile(QuantileTable::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()).unwrap()
    }

    fn two_atoms() -> Measure {
        Measure::from_atoms(vec![Atom { x: 1.0, w: 0.5 }, Atom { x: 2.0, w: 0.5 }]).unwrap()
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(Measure::dirac(1.0).unwrap().integrate(|x| x.ln().powi(2)).unwrap(), 0.0);
        let l2 = uniform().integrate(|x| x.ln().powi(2)).unwrap();
        assert!((l2 - 2.0).abs() < 1e-10, "{l2}");
        assert!((two_atoms().integrate(|x| 1.0 / x).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn integrate_reports_non_finite_atoms() {
        let m = Measure::from_atoms(vec![Atom { x: 0.0, w: 0.5 }, Atom { x: 1.0, w: 0.5 }]).unwrap();
        assert!(matches!(m.integrate(|x| 1.0 / x), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn mean_and_inverse_mean_examples() {
        assert_eq!(mean_and_inverse_mean(&Measure::dirac(3.0).unwrap()), (3.0, 3.0));
        let (b, a) = mean_and_inverse_mean(&two_atoms());
        assert!((b - 1.5).abs() < 1e-15 && (a - 4.0 / 3.0).abs() < 1e-15);
        let fp = FamilyParams::new(1.0, 0.0).unwrap();
        let (b, a) = mean_and_inverse_mean(&Measure::family(fp));
        assert!((b - 1.0).abs() < 1e-12 && a == 0.0);
        let (b, a) = mean_and_inverse_mean(&Measure::family_tabulated(fp, 2048).unwrap());
        assert!((b - 1.0).abs() < 1e-5 && a == 0.0, "{b}");
    }

    #[test]
    fn sample_examples() {
        assert_eq!(Measure::dirac(2.0).unwrap().sample(3, 7), vec![2.0, 2.0, 2.0]);
        let s = uniform().sample(100_000, 1);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert_eq!(uniform().sample(50, 9), uniform().sample(50, 9));
    }

    #[test]
    fn ks_examples() {
        let e = EmpiricalDist::new(vec![0.5]).unwrap();
        assert!((ks_distance(&e, &|x: f64| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
        let n = 200;
        let e = EmpiricalDist::new((1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect()).unwrap();
        assert!(ks_distance(&e, &|x: f64| x.clamp(0.0, 1.0)) <= 0.5 / n as f64 + 1e-12);
        let e = EmpiricalDist::new(uniform().sample(10_000, 3)).unwrap();
        assert!(ks_distance(&e, &|x: f64| x.clamp(0.0, 1.0)) < 0.03);
    }

    #[test]
    fn ks_uses_left_limits_at_atoms() {
        let m = two_atoms();
        let e = EmpiricalDist::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(ks_distance(&e, &m), 0.0);
        // samples rounded off a jump are a full unit away without slack
        let step = |x: f64| if x >= 1.0 { 1.0 } else { 0.0 };
        for x in [1.0 - 1e-15, 1.0 + 1e-15] {
            let e = EmpiricalDist::new(vec![x; 4]).unwrap();
            assert_eq!(ks_distance(&e, &step), 1.0);
            assert_eq!(ks_distance_with_slack(&e, &step, 1e-12), 0.0);
        }
    }

    #[test]
    fn validation() {
        assert!(Measure::dirac(0.0).is_err());
        assert!(Measure::from_atoms(vec![Atom { x: 1.0, w: 0.5 }]).is_err());
        assert!(Measure::from_atoms(vec![Atom { x: 1.0, w: 0.5 }, Atom { x: 1.0, w: 0.5 }]).is_err());
        assert!(QuantileTable::new(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 2.0]).is_err());
        assert!(QuantileTable::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(EmpiricalDist::new(vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = Measure::from_json(r#"{"atoms":[{"x":1,"w":0.5},{"w":0.5,"x":2}]}"#).unwrap();
        assert_eq!(m, two_atoms());
        let m = Measure::from_json(r#"{"family":{"alpha":1,"beta":0}}"#).unwrap();
        assert!(m.as_family().is_some());
        let m = Measure::from_json(r#"{"quantile":{"u":[0,1],"x":[0,1]},"cont_mass":1}"#).unwrap();
        assert_eq!(m, uniform());
        assert!(Measure::from_json(r#"{"family":{"alpha":-1,"beta":0}}"#).is_err());
    }

    #[test]
    fn scaling_moves_everything() {
        let m = two_atoms().scaled(2.0).unwrap();
        assert_eq!(m.atoms()[1].x, 4.0);
        let fam = Measure::family(FamilyParams::new(1.0, 0.0).unwrap()).scaled(3.0).unwrap();
        let mean = fam.integrate(|x| x).unwrap();
        assert!((mean - 3.0).abs() < 1e-10, "{mean}");
    }

    #[test]
    fn family_integrals() {
        let m = Measure::family(FamilyParams::new(1.0, 0.0).unwrap());
        assert!((m.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.integrate(|x| x * x).unwrap() - 2.0).abs() < 1e-10);
        let w: f64 = m.rule().iter().map(|n| n.1).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn atom_measures_have_unit_mass(xs in prop::collection::vec(0.01f64..100.0, 1..6)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let w = 1.0 / xs.len() as f64;
            let m = Measure::from_atoms(xs.iter().map(|&x| Atom { x, w }).collect()).unwrap();
            prop_assert!((m.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn integrate_is_linear(k in 2usize..40, c in 0.1f64..5.0) {
            let u: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
            let x: Vec<f64> = u.iter().map(|&p| c * (p + p * p)).collect();
            let m = Measure::from_quantile(QuantileTable::new(u, x).unwrap()).unwrap();
            let f = |x: f64| x.sqrt();
            let g = |x: f64| (1.0 + x).ln();
            let both = m.integrate(|x| f(x) + g(x)).unwrap();
            let sep = m.integrate(f).unwrap() + m.integrate(g).unwrap();
            prop_assert!((both - sep).abs() < 1e-12);
            prop_assert!((m.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
