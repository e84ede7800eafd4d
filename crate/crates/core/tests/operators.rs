mod common;

use std::f64::consts::PI;

use betalab::cheb::ChebGrid;
use betalab::equilibrium::rho_sc;
use betalab::func::SmoothFn;
use betalab::operators::*;
use betalab::quad;
use common::{gaussian, linspace, quartic, quartic_01};
use nalgebra::DVector;
use proptest::prelude::*;

fn test_functions() -> Vec<SmoothFn> {
    let mut fs: Vec<SmoothFn> = ["x", "x^2", "x^3", "x^4", "cos", "sin", "exp_half", "t3"]
        .iter()
        .map(|n| SmoothFn::named(n).unwrap())
        .collect();
    fs.push(SmoothFn::constant(1.0));
    fs.push(SmoothFn::polynomial(&[0.3, -1.0, 0.0, 0.2, 0.0, -0.05]));
    fs
}

/// `∫ log|λ−μ| ρ_sc(μ) dμ` in the angle variable `μ = 2cos θ`, graded
/// toward the logarithmic singularity.
fn log_potential_direct(lambda: f64) -> f64 {
    let rule = quad::gauss_legendre(200).mapped(0.0, 1.0);
    let t0 = (lambda / 2.0).acos();
    let side = |len: f64, dir: f64| {
        rule.apply(|s| {
            let th = t0 + dir * len * s.powi(4);
            (lambda - 2.0 * th.cos()).abs().ln() * 2.0 / PI * th.sin().powi(2) * 4.0 * len * s.powi(3)
        })
    };
    side(t0, -1.0) + side(PI - t0, 1.0)
}

#[test]
fn semicircle_log_potential_by_direct_quadrature() {
    let l = log_kernel_apply(rho_sc);
    for x in [0.0, 1.0] {
        let direct = log_potential_direct(x);
        assert!((l.eval(x) - direct).abs() < 1e-8, "{x}: {} vs {direct}", l.eval(x));
        assert!((l.eval(x) - (0.25 * x * x - 0.5)).abs() < 1e-12);
    }
}

#[test]
fn hilbert_transform_of_linear_function() {
    let h = SmoothFn::polynomial(&[0.0, 1.0]);
    for x in linspace(-1.9, 1.9, 39) {
        let expect = x / (PI * (4.0 - x * x).sqrt());
        assert!((apply_d(&h, x).unwrap() - expect).abs() < 1e-12);
    }
}

#[test]
fn identity_with_rank_one_term_for_ten_functions() {
    for h in test_functions() {
        let r = identity_1_21_residual(&h);
        assert!(r < 1e-6, "{}: {r:e}", h.label());
    }
}

#[test]
fn kernel_matrix_matches_direct_evaluation() {
    let t = &quartic_01().transport;
    let grid = ChebGrid::new(-2.2, 2.2, 24).unwrap();
    let km = kernel_matrix(t, &grid).unwrap();
    for i in 0..24 {
        let (x, dz) = (grid.nodes[i], t.zeta_prime(grid.nodes[i]));
        assert!((km.raw[(i, i)] - dz.ln()).abs() < 1e-12);
        for j in 0..24 {
            assert_eq!(km.symmetric[(i, j)], km.symmetric[(j, i)]);
            if i != j {
                let y = grid.nodes[j];
                let direct = ((t.zeta(x) - t.zeta(y)) / (x - y)).ln();
                assert!((km.raw[(i, j)] - direct).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn quartic_spectrum_is_orthonormal_and_decays() {
    let p = quartic_01();
    let s = &p.spectrum;
    assert!(s.decay_rate.unwrap() > 0.0);
    assert!(s.m > 3 && s.m < s.etas.len());
    let km = kernel_matrix(&p.transport, &s.grid).unwrap();
    assert!(s.reconstruction_error(&km) < 1e-10);
    for j in 0..s.m {
        for k in 0..s.m {
            let ip: f64 = s.grid.weights.iter().zip(&s.phis[j]).zip(&s.phis[k]).map(|((w, a), b)| w * a * b).sum();
            let delta = if j == k { 1.0 } else { 0.0 };
            assert!((ip - delta).abs() < 1e-8);
        }
    }
}

#[test]
fn contraction_on_quartic_family() {
    for g in [0.02, 0.05, 0.1, 0.2] {
        let c = contraction_matrices(&quartic(g).spectrum);
        assert!(c.norm_plus < 1.0 - 1e-3, "g = {g}: {}", c.norm_plus);
        for m in [&c.k_plus, &c.k_minus] {
            for j in 0..m.len() {
                for k in 0..m.len() {
                    assert!((m[j][k] - m[k][j]).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn nu_beta_reference_values() {
    let e = &gaussian().equilibrium;
    let sq = SmoothFn::named("x^2").unwrap();
    assert!((nu_beta_pairing(&sq, e, 1.0) - 0.5).abs() < 1e-10);
    assert_eq!(nu_beta_pairing(&sq, &quartic_01().equilibrium, 2.0), 0.0);
    for odd in ["x", "x^3", "sin"] {
        assert!(nu_beta_pairing(&SmoothFn::named(odd).unwrap(), e, 1.0).abs() < 1e-12);
    }
}

#[test]
fn deformation_identity_and_negative_control() {
    let grid = ChebGrid::new(-2.2, 2.2, 64).unwrap();
    let g = gaussian();
    assert!(deformation_identity_residual(&g.equilibrium, &g.transport, &grid) < 1e-8);
    let mean = deformation_identity_values(&g.equilibrium, &IdentityMap, &grid).iter().sum::<f64>() / 64.0;
    assert!(mean.abs() < 1e-8, "constant {mean}");
    let q = quartic_01();
    assert!(deformation_identity_residual(&q.equilibrium, &q.transport, &grid) < 1e-6);
    let bent = PerturbedMap { inner: &q.transport, amplitude: 0.01 };
    assert!(deformation_identity_residual(&q.equilibrium, &bent, &grid) > 1e-3);
}

fn random_poly(c: &[f64]) -> SmoothFn {
    SmoothFn::polynomial(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn dbar_routes_agree_and_are_positive(c in proptest::collection::vec(-1.0f64..1.0, 1..=11)) {
        let f = dbar_form(&random_poly(&c));
        prop_assert!(f.rel_discrepancy < 1e-6, "{f:?}");
        prop_assert!(f.pv >= -1e-12 && f.chebyshev >= -1e-12);
    }

    #[test]
    fn discrete_d_adjointness(a in proptest::collection::vec(-1.0f64..1.0, 4), w in 0.2f64..1.5) {
        let dd = DiscreteD::new(64);
        let u: Vec<f64> = dd.nodes.iter().map(|x| a[0] + a[1] * x + a[2] * x * x + a[3] * (w * x).sin()).collect();
        let v: Vec<f64> = dd.nodes.iter().map(|x| (w * x).cos() + a[0] * x.powi(3)).collect();
        let du = &dd.d * DVector::from_column_slice(&u);
        let dsv = &dd.d_star * DVector::from_column_slice(&v);
        let dv = &dd.d * DVector::from_column_slice(&v);
        prop_assert!((dd.inner(du.as_slice(), &v) - dd.inner(&u, dsv.as_slice())).abs() < 1e-8);
        prop_assert!((dd.inner(du.as_slice(), &v) - dd.inner(&u, dv.as_slice())).abs() < 1e-8);
    }

    // Σ_{i,j} L(λ_i, λ_j) against the truncated spectral sum.
    #[test]
    fn spectral_sum_reproduces_double_sum(x in proptest::collection::vec(-2.2f64..2.2, 16)) {
        let p = quartic_01();
        let s = &p.spectrum;
        let mut direct = 0.0;
        for &a in &x {
            for &b in &x {
                direct += deformation_kernel(&p.transport, a, b);
            }
        }
        let spectral: f64 = (0..s.m).map(|k| s.etas[k] * x.iter().map(|&l| s.phi(k, l)).sum::<f64>().powi(2)).sum();
        prop_assert!((direct - spectral).abs() < 1e-9, "{direct} vs {spectral}");
    }
}

#[test]
fn default_grid_resolves_the_spectrum() {
    let p = quartic_01();
    let coarse = kernel_spectrum(&p.transport, p.epsilon(), 64).unwrap();
    let fine = kernel_spectrum(&p.transport, p.epsilon(), 256).unwrap();
    for k in 0..6 {
        let d = (coarse.etas[k] - fine.etas[k]).abs();
        println!("eta_{k}: 64 -> {:e}, 256 -> {:e}, diff {d:e}", coarse.etas[k], fine.etas[k]);
        assert!(d < 1e-12, "eta_{k} differs by {d:e}");
    }
}
