use freelln::family::{family_moment, family_support};
use freelln::limit_law::{
    limit_cdf, lln_identity_residual, log_mean, log_moments, log_variance, nfold_log_variance, rho,
};
use freelln::measure::ks_distance;
use freelln::rmt::{haar_unitary, nth_root_rescale, product_spectra, product_spectrum, trial_rng};
use freelln::{Atom, FamilyParams, LimitLaw, McConfig, McSource, Measure, STransform};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn fp(a: f64, b: f64) -> FamilyParams {
    FamilyParams::new(a, b).unwrap()
}

fn two_atoms(x1: f64, x2: f64, w: f64) -> Measure {
    Measure::from_atoms(vec![Atom { x: x1, w }, Atom { x: x2, w: 1.0 - w }]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // μ(α₁, β₁) ⊠ μ(α₂, β₂) = μ(α₁ + α₂, β₁ + β₂) and ρ adds under ⊠
    #[test]
    fn rho_is_additive_on_the_family(a1 in 0.2f64..2.0, b1 in 0.2f64..2.0, a2 in 0.2f64..2.0, b2 in 0.2f64..2.0) {
        let r1 = rho(&Measure::family(fp(a1, b1))).unwrap();
        let r2 = rho(&Measure::family(fp(a2, b2))).unwrap();
        let r12 = rho(&Measure::family(fp(a1 + a2, b1 + b2))).unwrap();
        prop_assert!((r1 + r2 - r12).abs() < 1e-9 * r12.max(1.0));
    }

    #[test]
    fn log_functionals_under_scaling(x1 in 0.1f64..5.0, x2 in 5.5f64..40.0, w in 0.1f64..0.9, c in 0.1f64..10.0) {
        let m = two_atoms(x1, x2, w);
        let mc = m.scaled(c).unwrap();
        prop_assert!((log_mean(&mc).unwrap() - log_mean(&m).unwrap() - c.ln()).abs() < 1e-9);
        let (r, rc) = (rho(&m).unwrap(), rho(&mc).unwrap());
        prop_assert!((r - rc).abs() < 1e-9 * r.max(1e-3));
    }

    #[test]
    fn variance_split_and_bounds(x1 in 0.1f64..5.0, x2 in 5.5f64..40.0, w in 0.1f64..0.9) {
        let m = two_atoms(x1, x2, w);
        let (vm, vn) = log_variance(&m).unwrap();
        let r = rho(&m).unwrap();
        prop_assert!(r > 0.0 && vn >= 0.0 && vn <= vm);
        prop_assert!((vm - vn - 2.0 * r).abs() < 1e-9 * vm);
        // the direct variance of a two-point law
        let d = (x2 / x1).ln();
        prop_assert!((vm - w * (1.0 - w) * d * d).abs() < 1e-8 * vm);
        // n = 1 of the n-fold formula is V_μ
        prop_assert!((nfold_log_variance(&m, 1).unwrap() - vm).abs() < 1e-9 * vm);
    }

    #[test]
    fn limit_cdf_inverts_quantile(x1 in 0.1f64..5.0, x2 in 5.5f64..40.0, w in 0.1f64..0.9, t in 0.01f64..0.99) {
        let ll = LimitLaw::from_measure(&two_atoms(x1, x2, w));
        let x = ll.quantile(t).unwrap();
        let (a, b) = ll.support();
        prop_assert!(x > a && x < b);
        prop_assert!((limit_cdf(&ll, x).unwrap() - t).abs() < 1e-9);
    }

    #[test]
    fn family_limit_quantile_round_trip(a in 0.0f64..3.0, b in 0.0f64..3.0, t in 0.01f64..0.99) {
        prop_assume!(a + b > 0.1);
        let ll = LimitLaw::from_measure(&Measure::family(fp(a, b)));
        let x = ll.quantile(t).unwrap();
        // F(t^α / (1 - t)^β) = t
        prop_assert!((x.ln() - (a * t.ln() - b * (1.0 - t).ln())).abs() < 1e-12 * x.ln().abs().max(1.0));
        prop_assert!((limit_cdf(&ll, x).unwrap() - t).abs() < 1e-10);
    }

    #[test]
    fn s_is_multiplicative_on_the_family(a1 in 0.0f64..2.0, b1 in 0.0f64..2.0, a2 in 0.0f64..2.0, b2 in 0.0f64..2.0, z in -0.99f64..-0.01) {
        prop_assume!(a1 + b1 > 0.05 && a2 + b2 > 0.05);
        let s = |a, b| STransform::new(&Measure::family(fp(a, b))).eval(z).unwrap();
        let prod = s(a1, b1) * s(a2, b2);
        prop_assert!((prod - s(a1 + a2, b1 + b2)).abs() < 1e-12 * prod);
    }
}

#[test]
fn numeric_s_matches_closed_form_for_tabulated_family() {
    for &(a, b) in &[(1.0, 0.0), (1.0, 1.0), (0.5, 2.0)] {
        let closed = STransform::new(&Measure::family(fp(a, b)));
        let numeric = STransform::new(&Measure::family_tabulated(fp(a, b), 4096).unwrap());
        assert!(!numeric.is_closed_form());
        for k in 1..20 {
            let z = -(k as f64) / 20.0;
            let (c, n) = (closed.eval(z).unwrap(), numeric.eval(z).unwrap());
            assert!((c - n).abs() < 1e-3 * c, "({a}, {b}) at z = {z}: {c} vs {n}");
        }
    }
}

#[test]
fn log_moments_of_tabulated_family_match_closed_form() {
    let p = fp(1.0, 1.0);
    let exact = log_moments(&Measure::family(p)).unwrap();
    let table = log_moments(&Measure::family_tabulated(p, 512).unwrap()).unwrap();
    assert!((exact.mean_ln - table.mean_ln).abs() < 1e-3);
    assert!((exact.rho - table.rho).abs() < 1e-3);
    assert!((exact.var_ln - table.var_ln).abs() < 1e-2 * exact.var_ln);
}

#[test]
fn doubling_panels_changes_little() {
    let m = Measure::family_tabulated(fp(1.0, 0.0), 2048).unwrap();
    for f in [|x: f64| x, |x: f64| x.sqrt(), |x: f64| x * x] {
        let a = m.integrate_with(16, f).unwrap();
        let b = m.integrate_with(32, f).unwrap();
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
    }
}

fn hermitian_factor(dim: usize, seed: u64, trial: usize) -> DMatrix<Complex<f64>> {
    let mut rng = trial_rng(seed, trial);
    let u = haar_unitary(dim, &mut rng);
    let d = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex::new(0.5 + (i as f64) / dim as f64, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    &u * d * u.adjoint()
}

fn gram_spectrum(b: &DMatrix<Complex<f64>>) -> Vec<f64> {
    let mut e: Vec<f64> = (b.adjoint() * b).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn spectrum_invariant_under_reversed_ordering() {
    let dim = 24;
    let ms: Vec<_> = (0..4).map(|k| hermitian_factor(dim, 9, k)).collect();
    let forward = ms.iter().fold(DMatrix::identity(dim, dim), |b, m| m * b);
    let reversed = ms.iter().rev().fold(DMatrix::identity(dim, dim), |b, m| m * b);
    let (e1, e2) = (gram_spectrum(&forward), gram_spectrum(&reversed));
    let top = e1[dim - 1];
    for (a, b) in e1.iter().zip(&e2) {
        assert!((a - b).abs() < 1e-8 * top);
    }
}

#[test]
fn spectra_are_deterministic_per_seed() {
    let cfg = McConfig::new(McSource::Family(fp(1.0, 1.0)), 32, 3, 3, 11).unwrap();
    let a = product_spectra(&cfg).unwrap();
    let b = product_spectra(&cfg).unwrap();
    assert_eq!(a, b);
    // a trial does not depend on how many others ran
    assert_eq!(product_spectrum(&cfg, 2).unwrap(), a[2]);
    let other = McConfig::new(McSource::Family(fp(1.0, 1.0)), 32, 3, 3, 12).unwrap();
    assert_ne!(product_spectra(&other).unwrap()[0], a[0]);
}

#[test]
fn zero_atom_is_preserved_in_spectra() {
    let m = Measure::from_atoms(vec![Atom { x: 0.0, w: 0.3 }, Atom { x: 1.0, w: 0.4 }, Atom { x: 3.0, w: 0.3 }]).unwrap();
    let dim = 100;
    let cfg = McConfig::new(McSource::Measure(m), dim, 3, 5, 5).unwrap();
    for s in product_spectra(&cfg).unwrap() {
        assert!(s.eigenvalues.iter().all(|&x| x >= 0.0));
        let top = s.eigenvalues[dim - 1];
        let zeros = s.eigenvalues.iter().filter(|&&x| x <= 1e-10 * top).count() as f64;
        // each factor has a Binomial(N, 0.3) kernel; generic kernels do not add up
        let sd = (dim as f64 * 0.3 * 0.7).sqrt();
        assert!((zeros - 0.3 * dim as f64).abs() <= 3.0 * sd, "{zeros} zero eigenvalues");
    }
}

#[test]
fn free_poisson_product_matches_exact_moments() {
    // μ(1,0)^{⊠4} = μ(4,0): mean 1, and x^{1/4} has mean family_moment(μ(4,0), 1/4)
    let cfg = McConfig::new(McSource::Family(fp(1.0, 0.0)), 128, 4, 4, 3).unwrap();
    let spectra = product_spectra(&cfg).unwrap();
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    let root_mean = spectra.iter().map(|s| nth_root_rescale(s).mean()).sum::<f64>() / spectra.len() as f64;
    let exact = family_moment(fp(4.0, 0.0), 0.25);
    assert!((root_mean - exact).abs() < 0.01, "{root_mean} vs {exact}");
    // and the rescaled spectrum is close to the exact n = 4 law
    let law = Measure::family(fp(4.0, 0.0));
    let (_, hi) = family_support(fp(4.0, 0.0)).unwrap();
    for s in &spectra {
        let ks = ks_distance(&nth_root_rescale(s), &|x: f64| if x <= 0.0 { 0.0 } else { law.cdf(x.powi(4).min(hi)) });
        assert!(ks < 0.06, "KS {ks}");
    }
}

#[test]
fn identity_residual_is_small_for_matched_law() {
    let p = fp(1.0, 1.0);
    let n = 2;
    let cfg = McConfig::new(McSource::Family(p), 128, n, 4, 8).unwrap();
    let pooled: Vec<f64> =
        product_spectra(&cfg).unwrap().iter().flat_map(|s| nth_root_rescale(s).samples().to_vec()).collect();
    let emp = freelln::EmpiricalDist::new(pooled).unwrap();
    let st = STransform::new(&Measure::family(p));
    for t in [0.25, 0.5, 0.75] {
        let r = lln_identity_residual(&st, &emp, n, t).unwrap();
        assert!(r.abs() < 3.0 / (4.0f64 * 128.0).sqrt(), "t = {t}: {r}");
    }
}
