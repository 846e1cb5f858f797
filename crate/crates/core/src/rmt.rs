//! Random-matrix model of μ^{⊠n}.
//!
//! Each factor is M = U diag(√x₁, …, √x_N) U* with x drawn from μ and U
//! Haar-distributed; the squared singular values of B = M_n ⋯ M_1 are an
//! approximate sample of μ^{⊠n} for large N. For the free Poisson law
//! μ(1, 0) the factors are plain Ginibre matrices G/√N instead.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::FamilyParams;
use crate::limit_law::lln_identity_residual;
use crate::measure::{ks_distance_with_slack, Cdf, EmpiricalDist, Measure};
use crate::transforms::STransform;

type C64 = Complex<f64>;

/// Multiplications between two renormalizations of the running product.
const RENORM_EVERY: usize = 4;
/// Relative location slack when comparing samples with the reference CDF.
pub const KS_SLACK: f64 = 1e-12;
/// Probabilities at which the fixed-point identity is checked.
pub const RESIDUAL_TS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone)]
pub enum McSource {
    Measure(Measure),
    Family(FamilyParams),
}

impl McSource {
    fn measure(&self) -> Measure {
        match self {
            McSource::Measure(m) => m.clone(),
            McSource::Family(p) => Measure::family(*p),
        }
    }

    fn is_free_poisson(&self) -> bool {
        matches!(self, McSource::Family(p) if p.alpha == 1.0 && p.beta == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct McConfig {
    pub dim: usize,
    pub n_factors: u32,
    pub trials: usize,
    pub seed: u64,
    pub source: McSource,
}

impl McConfig {
    pub fn new(source: McSource, dim: usize, n_factors: u32, trials: usize, seed: u64) -> Result<Self> {
        let cfg = McConfig { dim, n_factors, trials, seed, source };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {}", self.dim)));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter("at least one trial is needed".into()));
        }
        if self.n_factors < 1 {
            return Err(Error::InvalidParameter("at least one factor is needed".into()));
        }
        Ok(())
    }
}

/// Sorted spectrum of B*B from one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    pub n: u32,
    pub trial: usize,
    pub seed: u64,
}

/// Per-trial random stream derived from (seed, trial).
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn ginibre<R: Rng>(dim: usize, rng: &mut R, scale: f64) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix, with the
/// columns of Q rotated by the phases of diag(R).
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = ginibre(dim, rng, std::f64::consts::FRAC_1_SQRT_2);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        for v in q.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    q
}

fn factor<R: Rng>(source: &McSource, m: &Measure, dim: usize, rng: &mut R) -> DMatrix<C64> {
    if source.is_free_poisson() {
        return ginibre(dim, rng, 1.0 / (2.0 * dim as f64).sqrt());
    }
    let x = m.sample_with(dim, rng);
    let roots: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    if roots.iter().all(|&r| r == roots[0]) {
        return DMatrix::from_diagonal_element(dim, dim, C64::new(roots[0], 0.0));
    }
    let mut u = haar_unitary(dim, rng);
    let ua = u.adjoint();
    for (j, &r) in roots.iter().enumerate() {
        for v in u.column_mut(j).iter_mut() {
            *v *= r;
        }
    }
    u * ua
}

fn max_column_norm(b: &DMatrix<C64>) -> f64 {
    b.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Spectrum of B*B with B = M_n ⋯ M_1 for one trial.
///
/// The eigenvalues are computed as squared singular values of B, which
/// keeps the small ones accurate relative to the largest.
pub fn product_spectrum(cfg: &McConfig, trial: usize) -> Result<SpectralSample> {
    cfg.validate()?;
    let m = cfg.source.measure();
    product_spectrum_with(cfg, &m, trial)
}

fn product_spectrum_with(cfg: &McConfig, m: &Measure, trial: usize) -> Result<SpectralSample> {
    let mut rng = trial_rng(cfg.seed, trial);
    let dim = cfg.dim;
    let mut b = factor(&cfg.source, m, dim, &mut rng);
    let mut ln_scale = 0.0;
    for k in 1..cfg.n_factors as usize {
        let mk = factor(&cfg.source, m, dim, &mut rng);
        b = mk * b;
        if (k + 1) % RENORM_EVERY == 0 {
            let c = max_column_norm(&b);
            if c > 0.0 && c.is_finite() {
                b /= C64::new(c, 0.0);
                ln_scale += c.ln();
            }
        }
    }
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::EigFailure(format!("non-finite entries in the product (trial {trial})")));
    }
    let svd = b
        .try_svd(false, false, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigFailure(format!("singular value iteration did not converge (trial {trial})")))?;
    let mut eig: Vec<f64> = svd.singular_values.iter().map(|&s| (2.0 * (s.ln() + ln_scale)).exp()).collect();
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure(format!("non-finite eigenvalue (trial {trial})")));
    }
    eig.sort_by(f64::total_cmp);
    Ok(SpectralSample { eigenvalues: eig, dim, n: cfg.n_factors, trial, seed: cfg.seed })
}

/// All trials of a configuration, in trial order.
pub fn product_spectra(cfg: &McConfig) -> Result<Vec<SpectralSample>> {
    cfg.validate()?;
    let m = cfg.source.measure();
    (0..cfg.trials).into_par_iter().map(|t| product_spectrum_with(cfg, &m, t)).collect()
}

/// x ↦ x^{1/n} applied to a spectrum.
pub fn nth_root_rescale(s: &SpectralSample) -> EmpiricalDist {
    let inv = 1.0 / s.n as f64;
    let v = match s.n {
        1 => s.eigenvalues.clone(),
        2 => s.eigenvalues.iter().map(|x| x.sqrt()).collect(),
        _ => s.eigenvalues.iter().map(|x| x.powf(inv)).collect(),
    };
    EmpiricalDist::new(v).expect("spectra are nonempty and nonnegative")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub value: f64,
}

/// Comparison of rescaled spectra with the limit law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnReport {
    pub dim: usize,
    pub n: u32,
    pub trials: usize,
    pub seed: u64,
    pub ks: Vec<f64>,
    pub ks_mean: f64,
    pub ks_max: f64,
    /// Fixed-point identity residuals over the pooled samples.
    pub residuals: Vec<ResidualPoint>,
}

/// Runs every trial, measures the KS distance of each rescaled spectrum
/// to `reference`, and checks the fixed-point identity on the pooled
/// samples at t = 1/4, 1/2, 3/4.
pub fn lln_convergence_report<C: Cdf + Sync + ?Sized>(cfg: &McConfig, reference: &C) -> Result<LlnReport> {
    let spectra = product_spectra(cfg)?;
    lln_report_from_spectra(cfg, &spectra, reference)
}

pub fn lln_report_from_spectra<C: Cdf + Sync + ?Sized>(
    cfg: &McConfig,
    spectra: &[SpectralSample],
    reference: &C,
) -> Result<LlnReport> {
    let rescaled: Vec<EmpiricalDist> = spectra.iter().map(nth_root_rescale).collect();
    let ks: Vec<f64> = rescaled.iter().map(|e| ks_distance_with_slack(e, reference, KS_SLACK)).collect();
    let ks_mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let ks_max = ks.iter().copied().fold(0.0, f64::max);
    let st = STransform::new(&cfg.source.measure());
    let pooled = EmpiricalDist::new(rescaled.iter().flat_map(|e| e.samples().iter().copied()).collect())?;
    let residuals = RESIDUAL_TS
        .iter()
        .filter(|&&t| t > st.delta())
        .map(|&t| Ok(ResidualPoint { t, value: lln_identity_residual(&st, &pooled, cfg.n_factors, t)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LlnReport { dim: cfg.dim, n: cfg.n_factors, trials: cfg.trials, seed: cfg.seed, ks, ks_mean, ks_max, residuals })
}

/// Writes spectra as CSV rows `trial,index,value`.
pub fn write_spectra_csv<W: Write>(out: &mut W, spectra: &[SpectralSample]) -> std::io::Result<()> {
    writeln!(out, "trial,index,value")?;
    for s in spectra {
        for (i, v) in s.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{},{:.16e}", s.trial, i, v)?;
        }
    }
    Ok(())
}

pub fn report_json(report: &LlnReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    #[test]
    fn haar_is_unitary() {
        let mut rng = trial_rng(5, 0);
        let u = haar_unitary(64, &mut rng);
        let e = u.adjoint() * &u - DMatrix::<C64>::identity(64, 64);
        assert!(e.norm() < 1e-10);
        let u1 = haar_unitary(1, &mut rng);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_trace_is_centered() {
        let mut rng = trial_rng(11, 0);
        let n = 16;
        let draws = 100;
        let mut sum = C64::new(0.0, 0.0);
        for _ in 0..draws {
            sum += haar_unitary(n, &mut rng).trace();
        }
        // tr U has unit variance for Haar U
        assert!((sum / draws as f64).norm() < 3.0 / (draws as f64).sqrt());
    }

    #[test]
    fn dirac_products_are_scalar() {
        for n in [1u32, 2] {
            let cfg = McConfig::new(McSource::Measure(Measure::dirac(1.7).unwrap()), 8, n, 1, 3).unwrap();
            let s = product_spectrum(&cfg, 0).unwrap();
            for &v in &s.eigenvalues {
                assert!((v - 1.7f64.powi(n as i32)).abs() < 1e-9);
            }
            for &v in nth_root_rescale(&s).samples() {
                assert!((v - 1.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = Measure::from_atoms(vec![Atom { x: 1.0, w: 0.5 }, Atom { x: 3.0, w: 0.5 }]).unwrap();
        let cfg = McConfig::new(McSource::Measure(m), 16, 3, 2, 99).unwrap();
        let a = product_spectra(&cfg).unwrap();
        let b = product_spectra(&cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].eigenvalues, a[1].eigenvalues);
    }

    #[test]
    fn rescale_is_monotone_root() {
        let s = SpectralSample { eigenvalues: vec![0.0, 1.0, 4.0, 9.0], dim: 4, n: 2, trial: 0, seed: 0 };
        assert_eq!(nth_root_rescale(&s).samples(), &[0.0, 1.0, 2.0, 3.0]);
        let s1 = SpectralSample { n: 1, ..s.clone() };
        assert_eq!(nth_root_rescale(&s1).samples(), s.eigenvalues.as_slice());
    }

    #[test]
    fn config_validation() {
        let src = McSource::Family(FamilyParams::new(1.0, 0.0).unwrap());
        assert!(McConfig::new(src.clone(), 1, 2, 1, 0).is_err());
        assert!(McConfig::new(src.clone(), 4, 2, 0, 0).is_err());
        assert!(McConfig::new(src, 4, 0, 1, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = SpectralSample { eigenvalues: vec![0.5, 2.0], dim: 2, n: 1, trial: 3, seed: 0 };
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "trial,index,value\n3,0,5.0000000000000000e-1\n3,1,2.0000000000000000e0\n");
    }
}
