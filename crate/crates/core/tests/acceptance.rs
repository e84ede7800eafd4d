//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails or overruns its time budget.

mod common;

use std::time::{Duration, Instant};

use betalab::cheb::ChebGrid;
use betalab::ensembles::*;
use betalab::equilibrium::{rho_sc, EquilibriumData};
use betalab::func::SmoothFn;
use betalab::operators::*;
use betalab::pipeline::{Pipeline, PipelineOptions};
use betalab::potentials::{make_potential, support_endpoints, PotentialSpec};
use betalab::stats::moments;
use betalab::universality::*;
use common::linspace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, notes: Vec::new() }
    }

    fn expect(&mut self, cond: bool, note: String) {
        if !cond {
            self.ok = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn done(self) -> Outcome {
        Outcome { ok: self.ok, detail: self.notes.join("; ") }
    }
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let ok = out.ok && in_time;
    println!(
        "criterion {id} [{name}]: {} in {:.1}s (budget {}s) :: {}",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs(),
        out.detail
    );
    ok
}

fn build(spec: PotentialSpec) -> Pipeline {
    Pipeline::build(&spec, &PipelineOptions::default()).unwrap()
}

fn max_over(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.iter().map(|&x| f(x)).fold(0.0, f64::max)
}

fn gaussian_degeneracy() -> Outcome {
    let p = build(PotentialSpec::Gaussian);
    let eps = p.epsilon();
    let mut c = Check::new();
    let dp = max_over(&linspace(-2.0, 2.0, 1001), |x| (p.equilibrium.p(x) - 1.0).abs());
    c.expect(dp < 1e-10, format!("max|P−1| = {dp:.1e}"));
    let dz = max_over(&linspace(-2.0 - eps, 2.0 + eps, 1001), |x| (p.transport.zeta(x) - x).abs());
    c.expect(dz < 1e-8, format!("max|ζ−λ| = {dz:.1e}"));
    let eta = p.spectrum.etas.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    c.expect(eta < 1e-10, format!("max|η| = {eta:.1e}"));
    c.done()
}

fn quartic_pipeline() -> Outcome {
    let g = 0.1;
    let mut c = Check::new();
    let (a, b) = support_endpoints(&make_potential(&PotentialSpec::EvenQuartic { g }).unwrap()).unwrap();
    let de = (a + 2.0).abs().max((b - 2.0).abs());
    c.expect(de < 1e-8, format!("endpoint error {de:.1e}"));
    let p = build(PotentialSpec::EvenQuartic { g });
    let eps = p.epsilon();
    let dp = max_over(&linspace(-2.0 - eps, 2.0 + eps, 1001), |x| (p.equilibrium.p(x) - (g * x * x + 1.0 - g)).abs());
    c.expect(dp < 1e-8, format!("max|P − (gz²+1−g)| = {dp:.1e}"));
    c.expect(p.transport.residual < 1e-7, format!("transport residual {:.1e}", p.transport.residual));
    c.expect(p.transport.overlap_mismatch < 1e-8, format!("overlap mismatch {:.1e}", p.transport.overlap_mismatch));
    c.done()
}

fn operator_identities() -> Outcome {
    let mut c = Check::new();
    let mut fns: Vec<SmoothFn> = ["x", "x^2", "x^3", "x^4", "cos", "sin", "exp_half", "t3"]
        .iter()
        .map(|n| SmoothFn::named(n).unwrap())
        .collect();
    fns.push(SmoothFn::constant(1.0));
    fns.push(SmoothFn::chebyshev_mode(5));
    let worst = fns.iter().map(identity_1_21_residual).fold(0.0, f64::max);
    c.expect(worst < 1e-6, format!("rank-one identity residual {worst:.1e} over {} functions", fns.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disc: f64 = 0.0;
    for _ in 0..20 {
        let deg = rng.random_range(1..=10);
        let coeffs: Vec<f64> = (0..=deg).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        disc = disc.max(dbar_form(&SmoothFn::polynomial(&coeffs)).rel_discrepancy);
    }
    c.expect(disc < 1e-6, format!("PV vs Chebyshev route {disc:.1e}"));

    let mut norms = Vec::new();
    for g in [0.02, 0.05, 0.1, 0.2] {
        let p = build(PotentialSpec::EvenQuartic { g });
        norms.push(contraction_matrices(&p.spectrum).norm_plus);
        if g == 0.1 {
            let km = kernel_matrix(&p.transport, &p.spectrum.grid).unwrap();
            let rate = p.spectrum.decay_rate.unwrap_or(0.0);
            let rec = p.spectrum.reconstruction_error(&km);
            c.expect(rate > 0.0, format!("decay rate {rate:.2}"));
            c.expect(rec < 1e-10, format!("reconstruction {rec:.1e}"));
        }
    }
    let worst = norms.iter().copied().fold(0.0, f64::max);
    c.expect(worst < 1.0 - 1e-3, format!("max ‖K⁺‖ = {worst:.3}"));
    c.done()
}

fn structural_identities() -> Outcome {
    let mut c = Check::new();
    let p = build(PotentialSpec::EvenQuartic { g: 0.1 });
    let grid = ChebGrid::new(-2.0 - p.epsilon(), 2.0 + p.epsilon(), 64).unwrap();
    let r = deformation_identity_residual(&p.equilibrium, &p.transport, &grid);
    c.expect(r < 1e-6, format!("deformation identity {r:.1e}"));
    let bent = PerturbedMap { inner: &p.transport, amplitude: 0.01 };
    let r = deformation_identity_residual(&p.equilibrium, &bent, &grid);
    c.expect(r > 1e-2, format!("perturbed-ζ control {r:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let configs: Vec<Vec<f64>> = (0..50).map(|_| (0..8).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect()).collect();
    let r = hamiltonian_identity_residual(&p.equilibrium, &p.transport, &p.spectrum, 2.0, &configs);
    c.expect(r < 1e-6, format!("Hamiltonian identity {r:.1e}"));
    let r = hamiltonian_identity_residual(&p.equilibrium, &p.transport, &p.spectrum.truncated(2), 2.0, &configs);
    c.expect(r > 1e-2, format!("truncated-M control {r:.1e}"));

    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let lin = linearization_check(&p, 2, 1.0, 3, &sq, &LinearizationOptions::default()).unwrap();
    c.expect(lin.relative_discrepancy < 1e-3, format!("linearization {:.1e}", lin.relative_discrepancy));
    c.done()
}

fn clt_line(c: &mut Check, s: &EnsembleSample, e: &EquilibriumData, h: &str, beta: f64) {
    let r = clt_report(s, &SmoothFn::named(h).unwrap(), e, beta).unwrap();
    c.expect(
        r.z_mean.abs() < 3.0 && r.z_variance.abs() < 3.0,
        format!("β={beta} {h} z=({:.2},{:.2})", r.z_mean, r.z_variance),
    );
}

fn clt_suite() -> Outcome {
    let mut c = Check::new();
    let g = build(PotentialSpec::Gaussian);
    for beta in [1.0, 2.0, 4.0] {
        let s = sample_gaussian(200, beta, 5000, 500 + beta as u64).unwrap();
        for h in ["x", "x^2", "cos"] {
            clt_line(&mut c, &s, &g.equilibrium, h, beta);
        }
        if beta == 2.0 {
            let m = moments(&linear_statistic(&s, &SmoothFn::named("x").unwrap()));
            c.expect((m.var - 1.0).abs() < 3.0 * m.se_var, format!("Var Tr = {:.4} ± {:.4}", m.var, m.se_var));
        }
    }
    let q = build(PotentialSpec::EvenQuartic { g: 0.1 });
    let s = sample_mcmc(q.potential(), 200, 2.0, 2000, 77, &McmcTuning::default()).unwrap();
    clt_line(&mut c, &s, &q.equilibrium, "x^2", 2.0);
    c.done()
}

fn bulk_suite() -> Outcome {
    let mut c = Check::new();
    let q = build(PotentialSpec::EvenQuartic { g: 0.1 });
    let (n, count, hw) = (400, 340, 0.5);
    let opts = BulkOptions { halfwidth: hw, ..Default::default() };
    for beta in [2.0, 1.0, 4.0] {
        let seed = 900 + beta as u64;
        let reference = sample_gaussian(n, beta, 2 * count, seed).unwrap();
        let v = sample_mcmc(q.potential(), n, beta, count, seed, &McmcTuning::default()).unwrap();
        let floor = split_sample_ks(&reference, 0.0, hw, rho_sc(0.0)).unwrap();
        for l0 in [0.0, 0.5, -1.0] {
            let gaps = unfold_and_gaps(&v, &q.equilibrium, l0, hw).unwrap().gaps.len();
            let d = universality_distance(&v, &reference, l0, &q.equilibrium, &opts).unwrap();
            c.expect(
                d.ks < floor + 0.02 && gaps >= 20_000,
                format!("β={beta} λ0={l0} KS {:.4} floor {floor:.4} gaps {gaps}", d.ks),
            );
        }
    }
    c.done()
}

fn tiny_n_suite() -> Outcome {
    let mut c = Check::new();
    let observables: [(&str, &dyn Fn(&[f64]) -> f64); 5] = [
        ("Σλ", &|x| x.iter().sum()),
        ("Σλ²", &|x| x.iter().map(|v| v * v).sum()),
        ("Σλ⁴", &|x| x.iter().map(|v| v.powi(4)).sum()),
        ("λmax", &|x| x[x.len() - 1]),
        ("log gap", &|x| (x[1] - x[0]).ln()),
    ];
    let obs: Vec<&dyn Fn(&[f64]) -> f64> = observables.iter().map(|o| o.1).collect();
    for spec in [PotentialSpec::Gaussian, PotentialSpec::EvenQuartic { g: 0.1 }] {
        let v = make_potential(&spec).unwrap();
        for n in [2, 3] {
            let exact = direct_expectations(&v, n, 2.0, v.domain, &obs).unwrap();
            let s = sample_mcmc(&v, n, 2.0, 20_000, 31 + n as u64, &McmcTuning::default()).unwrap();
            for ((name, o), ex) in observables.iter().zip(&exact) {
                let vals: Vec<f64> = s.iter().map(|cfg| o(cfg)).collect();
                let m = moments(&vals);
                let z = (m.mean - ex) / m.se_mean;
                c.expect(z.abs() < 3.0, format!("{} n={n} {name} z={z:.2}", v.id()));
            }
        }
    }
    c.done()
}

#[test]
fn acceptance_criteria() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        run(1, "gaussian degeneracy", Duration::from_secs(10), gaussian_degeneracy),
        run(2, "quartic pipeline", Duration::from_secs(60), quartic_pipeline),
        run(3, "operator identities", Duration::from_secs(600), operator_identities),
        run(4, "structural identities", min(5), structural_identities),
        run(5, "central limit theorem", min(20), clt_suite),
        run(6, "bulk universality", min(60), bulk_suite),
        run(7, "tiny-n oracle", Duration::from_secs(600), tiny_n_suite),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}
