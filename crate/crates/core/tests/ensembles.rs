mod common;

use betalab::ensembles::*;
use betalab::equilibrium::cdf_sc;
use betalab::func::SmoothFn;
use betalab::potentials::{make_potential, PotentialSpec};
use betalab::stats::{ks_one_sample, ks_two_sample, moments};
use common::quartic_01;
use proptest::prelude::*;

fn pooled(s: &EnsembleSample) -> Vec<f64> {
    s.configs.clone()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let v = quartic_01().potential().clone();
    let tuning = McmcTuning { burn_in: 200, pilot: 400, ..Default::default() };
    let a = in_pool(1, || sample_mcmc(&v, 12, 2.0, 40, 9, &tuning).unwrap());
    let b = in_pool(3, || sample_mcmc(&v, 12, 2.0, 40, 9, &tuning).unwrap());
    assert_eq!(a, b);
    let a = in_pool(1, || sample_gaussian(30, 1.0, 50, 4).unwrap());
    let b = in_pool(3, || sample_gaussian(30, 1.0, 50, 4).unwrap());
    assert_eq!(a.configs, b.configs);
    assert_ne!(a.configs, sample_gaussian(30, 1.0, 50, 5).unwrap().configs);
}

#[test]
fn semicircle_law_for_tridiagonal_model() {
    for beta in [1.0, 2.0, 4.0] {
        let s = sample_gaussian(200, beta, 500, 21).unwrap();
        let ks = ks_one_sample(&pooled(&s), cdf_sc);
        assert!(ks < 0.03, "β = {beta}: KS = {ks}");
        assert!(s.iter().all(|c| c.windows(2).all(|w| w[0] <= w[1])));
    }
}

#[test]
fn two_samplers_agree_for_gaussian_potential() {
    let v = make_potential(&PotentialSpec::Gaussian).unwrap();
    let m = sample_mcmc(&v, 50, 2.0, 2000, 3, &McmcTuning::default()).unwrap();
    let t = sample_gaussian(50, 2.0, 2000, 3).unwrap();
    let ks = ks_two_sample(&pooled(&m), &pooled(&t));
    assert!(ks < 0.05, "KS = {ks}");
}

#[test]
fn quartic_chain_matches_equilibrium_density() {
    let p = quartic_01();
    let s = sample_mcmc(p.potential(), 200, 2.0, 400, 17, &McmcTuning::default()).unwrap();
    let ks = ks_one_sample(&pooled(&s), |x| p.equilibrium.cdf(x));
    assert!(ks < 0.03, "KS = {ks}");
    let d = &s.diagnostics;
    let rate = d.acceptance_rate.unwrap();
    assert!((0.2..=0.6).contains(&rate) && !d.flagged, "{d:?}");
    assert!(s.configs.iter().all(|x| *x >= s.window.0 && *x <= s.window.1));
    assert!(s.iter().all(|c| c.windows(2).all(|w| w[0] <= w[1])));
}

#[test]
fn zero_width_rejects_everything() {
    let v = make_potential(&PotentialSpec::Gaussian).unwrap();
    let tuning = McmcTuning { width: 0.0, ..Default::default() };
    assert_eq!(sample_mcmc(&v, 4, 2.0, 10, 1, &tuning).unwrap_err().kind(), "all-rejected");
}

#[test]
fn quadrature_reference_values() {
    let v = make_potential(&PotentialSpec::Gaussian).unwrap();
    assert!((direct_expectation(&v, 2, 2.0, &|_| 1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!(direct_expectation(&v, 2, 2.0, &|x| x[0] + x[1]).unwrap().abs() < 1e-12);
    assert_eq!(direct_expectation(&v, 5, 2.0, &|_| 1.0).unwrap_err().kind(), "dimension-too-large");
}

// The tridiagonal scaling and the weight exp(βH/2) describe the same law:
// compare the spread at n = 2 with the quadrature value.
#[test]
fn tridiagonal_variance_convention_at_n2() {
    let v = make_potential(&PotentialSpec::Gaussian).unwrap();
    for beta in [1.0, 2.0, 4.0] {
        // The tridiagonal law is untruncated, so integrate over a wide window.
        let tr2 = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let exact = direct_expectations(&v, 2, beta, (-9.0, 9.0), &[&tr2]).unwrap()[0];
        assert!((exact - (1.0 + 2.0 / beta)).abs() < 1e-10);
        let s = sample_gaussian(2, beta, 40_000, 8).unwrap();
        let m = moments(&linear_statistic(&s, &SmoothFn::named("x^2").unwrap()));
        assert!((m.mean - exact).abs() < 3.0 * m.se_mean, "β = {beta}: {} vs {exact}", m.mean);
    }
}

#[test]
fn linear_statistics() {
    let s = sample_gaussian(100, 2.0, 400, 2).unwrap();
    assert!(linear_statistic(&s, &SmoothFn::constant(1.0)).iter().all(|v| *v == 100.0));
    // E Tr M² = n at β = 2.
    let m = moments(&linear_statistic(&s, &SmoothFn::named("x^2").unwrap()));
    assert!((m.mean - 100.0).abs() < 3.0 * m.se_mean);
    let small = sample_gaussian(2, 2.0, 4000, 2).unwrap();
    let m = moments(&linear_statistic(&small, &SmoothFn::named("x").unwrap()));
    assert!(m.mean.abs() < 3.0 * m.se_mean);
}

#[test]
fn container_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.samples.bin");
    let s = sample_gaussian(5, 2.0, 3, 1).unwrap();
    write_sample(&s, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.pop();
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(read_sample(&path).unwrap_err().kind(), "format");
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(read_sample(&path).unwrap_err().kind(), "format");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn container_round_trip(n in 2usize..8, count in 1usize..6, seed in 0u64..1000, beta in 0.5f64..4.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.samples.bin");
        let s = sample_gaussian(n, beta, count, seed).unwrap();
        write_sample(&s, &path).unwrap();
        prop_assert_eq!(read_sample(&path).unwrap(), s);
    }

    #[test]
    fn same_seed_same_sample(n in 2usize..20, seed in 0u64..1000) {
        let a = sample_gaussian(n, 2.0, 5, seed).unwrap();
        let b = sample_gaussian(n, 2.0, 5, seed).unwrap();
        prop_assert_eq!(a.configs, b.configs);
    }
}
