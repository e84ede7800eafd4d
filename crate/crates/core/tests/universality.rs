mod common;

use betalab::ensembles::*;
use betalab::equilibrium::{compute_p, rho_sc, EquilibriumOptions};
use betalab::func::SmoothFn;
use betalab::potentials::{make_potential, PotentialSpec};
use betalab::stats::{ks_two_sample, moments};
use betalab::universality::*;
use common::{gaussian, quartic_01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn h(name: &str) -> SmoothFn {
    SmoothFn::named(name).unwrap()
}

fn random_configs(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect()).collect()
}

#[test]
fn predicted_cumulants() {
    let e = &gaussian().equilibrium;
    let s = sample_gaussian(20, 2.0, 200, 1).unwrap();
    let r = clt_report(&s, &h("x"), e, 2.0).unwrap();
    assert_eq!(r.predicted_mean, 0.0);
    assert!((r.predicted_variance - 1.0).abs() < 1e-12);
    let s1 = sample_gaussian(20, 1.0, 200, 1).unwrap();
    let r = clt_report(&s1, &h("x^2"), e, 1.0).unwrap();
    assert!((r.predicted_mean - 1.0).abs() < 1e-10);
    assert!(r.se_mean > 0.0 && r.se_variance > 0.0 && r.predicted_variance >= 0.0);
    let r = clt_report(&s, &h("cos"), &quartic_01().equilibrium, 2.0).unwrap();
    assert_eq!(r.predicted_mean, 0.0);
}

#[test]
fn too_few_samples() {
    let s = sample_gaussian(20, 2.0, 99, 1).unwrap();
    let err = clt_report(&s, &h("x"), &gaussian().equilibrium, 2.0).unwrap_err();
    assert_eq!(err.kind(), "insufficient-samples");
}

// Var(Tr M) = 1 exactly at β = 2 for every n.
#[test]
fn trace_variance_anchor_at_small_n() {
    for n in [3, 7, 15] {
        let s = sample_gaussian(n, 2.0, 20_000, n as u64).unwrap();
        let m = moments(&linear_statistic(&s, &h("x")));
        assert!((m.var - 1.0).abs() < 3.0 * m.se_var, "n = {n}: {}", m.var);
    }
}

#[test]
fn clt_z_scores_and_normality_for_gaussian_ensemble() {
    let e = &gaussian().equilibrium;
    for beta in [1.0, 2.0, 4.0] {
        let s = sample_gaussian(200, beta, 5000, 100 + beta as u64).unwrap();
        for name in ["x", "x^2", "x^3", "cos"] {
            let r = clt_report(&s, &h(name), e, beta).unwrap();
            assert!(r.z_mean.abs() < 3.0 && r.z_variance.abs() < 3.0, "β = {beta}, {name}: {r:?}");
            assert!(r.normality_p > 0.01, "β = {beta}, {name}: p = {}", r.normality_p);
        }
    }
}

#[test]
fn unfolding_and_window_errors() {
    let s = sample_gaussian(400, 2.0, 300, 5).unwrap();
    let e = &gaussian().equilibrium;
    let r = unfold_and_gaps(&s, e, 0.0, 0.5).unwrap();
    assert!((r.mean_gap - 1.0).abs() < 0.05, "{}", r.mean_gap);
    assert!(r.gaps.iter().all(|g| *g > 0.0));
    let narrow = compute_p(&make_potential(&PotentialSpec::Gaussian).unwrap(), &EquilibriumOptions {
        epsilon: 0.1,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(unfold_and_gaps(&s, &narrow, 1.999, 0.1).unwrap_err().kind(), "precondition-violation");
    assert_eq!(unfold_and_gaps(&s, e, 0.0, 1e-9).unwrap_err().kind(), "empty-window");
}

#[test]
fn independent_gaussian_runs_share_gap_law() {
    let a = sample_gaussian(400, 2.0, 300, 41).unwrap();
    let b = sample_gaussian(400, 2.0, 300, 42).unwrap();
    let e = &gaussian().equilibrium;
    let ga = unfold_and_gaps(&a, e, 0.0, 0.5).unwrap().gaps;
    let gb = unfold_and_gaps(&b, e, 0.0, 0.5).unwrap().gaps;
    assert!(ga.len() > 20_000);
    let ks = ks_two_sample(&ga, &gb);
    assert!(ks < 0.02, "KS = {ks}");
}

#[test]
fn phi_estimates() {
    let e = &gaussian().equilibrium;
    let a = sample_gaussian(400, 2.0, 400, 61).unwrap();
    let b = sample_gaussian(400, 2.0, 400, 62).unwrap();
    let zero = Bump { scale: 0.0, ..Bump::new(0.0, 1.0) };
    assert_eq!(phi_estimate(&a, e, 0.0, &[zero], None).unwrap().value, 0.0);
    let one = phi_estimate(&a, e, 0.0, &[Bump::new(0.0, 2.0)], None).unwrap();
    assert!((one.value - 1.0).abs() < 3.0 * one.se, "{one:?}");
    let pair = [Bump::new(0.0, 1.5), Bump::new(1.0, 1.5)];
    let pa = phi_estimate(&a, e, 0.0, &pair, None).unwrap();
    let pb = phi_estimate(&b, e, 0.0, &pair, None).unwrap();
    assert!((pa.value - pb.value).abs() < 2.0 * pa.se.hypot(pb.se), "{pa:?} {pb:?}");
    for l0 in [0.0, 0.5] {
        let x = phi_estimate(&a, e, l0, &pair, Some(0.5)).unwrap();
        let y = phi_estimate(&a, e, l0 + 1.0 / 400.0, &pair, Some(0.5)).unwrap();
        assert!((x.value - y.value).abs() < 2.0 * x.se.max(y.se), "{x:?} {y:?}");
    }
}

#[test]
fn gaussian_is_translation_invariant_in_the_bulk() {
    let s = sample_gaussian(400, 2.0, 600, 71).unwrap();
    let reference = sample_gaussian(400, 2.0, 600, 72).unwrap();
    let opts = BulkOptions { halfwidth: 0.5, ..Default::default() };
    let floor = split_sample_ks(&reference, 0.0, 0.5, rho_sc(0.0)).unwrap();
    let d = universality_distance(&s, &reference, 0.5, &gaussian().equilibrium, &opts).unwrap();
    assert!(d.ks < floor + 0.02, "{} vs floor {floor}", d.ks);
    let other = sample_gaussian(300, 2.0, 10, 1).unwrap();
    let err = universality_distance(&s, &other, 0.0, &gaussian().equilibrium, &opts).unwrap_err();
    assert_eq!(err.kind(), "mismatched-parameters");
}

// Cross-ensemble distance should exceed the split-sample floor no more often
// than a same-law pair would.
#[test]
fn cross_ensemble_distance_is_within_same_law_floor() {
    let p = quartic_01();
    let tuning = McmcTuning { burn_in: 1000, pilot: 2000, ..Default::default() };
    let (n, count, hw) = (60, 400, 0.5);
    let mut cross_above = 0;
    let mut split_above = 0;
    for rep in 0..25u64 {
        let v = sample_mcmc(p.potential(), n, 2.0, count, 1000 + rep, &tuning).unwrap();
        let g = sample_gaussian(n, 2.0, count, 2000 + rep).unwrap();
        let floor = split_sample_ks(&g, 0.0, hw, rho_sc(0.0)).unwrap();
        let cross = universality_distance(&v, &g, 0.0, &p.equilibrium, &BulkOptions { halfwidth: hw, ..Default::default() })
            .unwrap()
            .ks;
        cross_above += usize::from(cross > floor);
        split_above += usize::from(floor > cross);
    }
    println!("cross above floor in {cross_above}/25, floor above cross in {split_above}/25");
    assert!(cross_above <= 10, "{cross_above}/25");
}

#[test]
fn hamiltonian_identity() {
    let g = gaussian();
    let configs = random_configs(8, 50, 3);
    assert!(hamiltonian_identity_residual(&g.equilibrium, &g.transport, &g.spectrum, 2.0, &configs) < 1e-9);
    let q = quartic_01();
    for beta in [1.0, 2.0, 4.0] {
        let r = hamiltonian_identity_residual(&q.equilibrium, &q.transport, &q.spectrum, beta, &configs);
        assert!(r < 1e-6, "β = {beta}: {r:e}");
    }
    let cut = hamiltonian_identity_residual(&q.equilibrium, &q.transport, &q.spectrum.truncated(2), 2.0, &configs);
    assert!(cut > 1e-2, "{cut:e}");
}

#[test]
fn linearization() {
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let opts = LinearizationOptions::default();
    let g = linearization_check(gaussian(), 2, 1.0, 3, &sq, &opts).unwrap();
    assert!(g.relative_discrepancy < 1e-10);
    let q = linearization_check(quartic_01(), 2, 1.0, 3, &sq, &opts).unwrap();
    assert!(q.relative_discrepancy < 1e-3, "{q:?}");
    let dropped = LinearizationOptions { drop_log_jacobian: true, ..opts };
    let bad = linearization_check(quartic_01(), 2, 1.0, 3, &sq, &dropped).unwrap();
    assert!(bad.relative_discrepancy > 1e-2, "{bad:?}");
    let err = linearization_check(quartic_01(), 5, 1.0, 3, &sq, &opts).unwrap_err();
    assert_eq!(err.kind(), "dimension-too-large");
}
