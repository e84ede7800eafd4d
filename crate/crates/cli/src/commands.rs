//! Subcommand bodies. Every artifact is a pure function of the config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use betalab::cheb::ChebGrid;
use betalab::ensembles::{read_sample, sample_gaussian, sample_mcmc, write_sample, EnsembleSample};
use betalab::equilibrium::{compute_p, eval_density, rho_sc, EquilibriumData};
use betalab::func::SmoothFn;
use betalab::operators::{contraction_matrices, dbar_form, deformation_identity_residual, identity_1_21_residual};
use betalab::pipeline::Pipeline;
use betalab::potentials::{make_potential, normalize_support, support_endpoints, Potential, PotentialSpec};
use betalab::universality::{
    clt_report, hamiltonian_identity_residual, linearization_check, split_sample_ks, unfold_and_gaps,
    universality_distance, BulkOptions, LinearizationOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SamplerChoice};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    fn path(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}.{suffix}", self.cfg.name))
    }

    fn write_json(&self, suffix: &str, command: &str, result: impl Serialize) -> Result<(), CliError> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "betalab",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": self.cfg,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("config and results serialize");
        text.push('\n');
        std::fs::write(self.path(suffix), text)?;
        Ok(())
    }

    fn write_text(&self, suffix: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.path(suffix), text)?;
        Ok(())
    }

    fn pipeline(&self) -> Result<Pipeline, CliError> {
        Ok(Pipeline::build(&self.cfg.potential.spec(), &self.cfg.pipeline_options())?)
    }

    /// The potential rescaled to support `[-2, 2]`.
    fn normalized(&self) -> Result<Potential, CliError> {
        let v = make_potential(&self.cfg.potential.spec())?;
        let s = support_endpoints(&v)?;
        Ok(normalize_support(&v, s)?.0)
    }

    fn equilibrium_data(&self) -> Result<EquilibriumData, CliError> {
        Ok(compute_p(&self.normalized()?, &self.cfg.equilibrium)?)
    }

    fn draw(&self) -> Result<EnsembleSample, CliError> {
        let e = &self.cfg.ensemble;
        let gaussian = matches!(self.cfg.potential.spec(), PotentialSpec::Gaussian);
        match (e.sampler, gaussian) {
            (SamplerChoice::Auto, true) | (SamplerChoice::Tridiagonal, true) => {
                Ok(sample_gaussian(e.n, e.beta, e.count, e.seed)?)
            }
            (SamplerChoice::Tridiagonal, false) => {
                Err(CliError::Config("the tridiagonal sampler needs the gaussian potential".into()))
            }
            _ => Ok(sample_mcmc(&self.normalized()?, e.n, e.beta, e.count, e.seed, &self.cfg.mcmc)?),
        }
    }
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

pub fn equilibrium(ctx: &Context) -> Result<(), CliError> {
    let e = ctx.equilibrium_data()?;
    let mut csv = String::from("lambda,rho,p\n");
    let eps = e.epsilon;
    for x in grid(-2.0 - eps, 2.0 + eps, 401) {
        writeln!(csv, "{x},{},{}", eval_density(&e, x), e.p(x)).unwrap();
    }
    ctx.write_text("density.csv", &csv)?;
    ctx.write_json("equilibrium.json", "equilibrium", &e)
}

pub fn transport(ctx: &Context) -> Result<(), CliError> {
    let p = ctx.pipeline()?;
    let t = &p.transport;
    let mut csv = String::from("lambda,zeta,zeta_prime,residual\n");
    for x in grid(-2.0, 2.0, 401) {
        let (z, dz) = t.eval_with_derivative(x);
        let r = (eval_density(&p.equilibrium, z) * dz - rho_sc(x)).abs();
        writeln!(csv, "{x},{z},{dz},{r}").unwrap();
    }
    ctx.write_text("transport.csv", &csv)?;
    ctx.write_json("transport.json", "transport", t)
}

pub fn spectrum(ctx: &Context) -> Result<(), CliError> {
    let p = ctx.pipeline()?;
    let s = &p.spectrum;
    let mut csv = String::from("k,eta,kept\n");
    for (k, eta) in s.etas.iter().enumerate() {
        writeln!(csv, "{},{eta},{}", k + 1, u8::from(k < s.m)).unwrap();
    }
    ctx.write_text("spectrum.csv", &csv)?;
    let c = contraction_matrices(s);
    ctx.write_json(
        "spectrum.json",
        "spectrum",
        json!({
            "m": s.m,
            "decay_rate": s.decay_rate,
            "etas": &s.etas[..s.m],
            "norm_plus": c.norm_plus,
            "norm_minus": c.norm_minus,
            "asymmetry": c.asymmetry,
        }),
    )
}

pub fn sample(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.draw()?;
    write_sample(&s, &ctx.path("samples.bin"))?;
    Ok(())
}

pub fn clt(ctx: &Context, samples: Option<&Path>) -> Result<(), CliError> {
    let s = match samples {
        Some(p) => read_sample(p)?,
        None => ctx.draw()?,
    };
    let e = ctx.equilibrium_data()?;
    let mut reports = Vec::new();
    let mut csv = String::from("h,empirical_mean,se_mean,predicted_mean,z_mean,empirical_variance,se_variance,predicted_variance,z_variance,normality_p\n");
    for name in &ctx.cfg.clt.functions {
        let h = SmoothFn::named(name).map_err(|e| CliError::Config(e.to_string()))?;
        let r = clt_report(&s, &h, &e, s.beta)?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.h_id,
            r.empirical_mean,
            r.se_mean,
            r.predicted_mean,
            r.z_mean,
            r.empirical_variance,
            r.se_variance,
            r.predicted_variance,
            r.z_variance,
            r.normality_p
        )
        .unwrap();
        reports.push(r);
    }
    ctx.write_text("clt.csv", &csv)?;
    ctx.write_json("clt.report.json", "clt", json!({ "sample": s, "reports": reports }))
}

fn histogram(gaps: &[f64], bins: usize) -> Vec<f64> {
    let width = 4.0 / bins as f64;
    let mut h = vec![0.0; bins];
    for g in gaps {
        let b = (g / width) as usize;
        if b < bins {
            h[b] += 1.0;
        }
    }
    h.iter().map(|c| c / (gaps.len() as f64 * width)).collect()
}

pub fn bulk(ctx: &Context) -> Result<(), CliError> {
    let b = &ctx.cfg.bulk;
    let e = ctx.equilibrium_data()?;
    let s = ctx.draw()?;
    let en = &ctx.cfg.ensemble;
    let reference = sample_gaussian(en.n, en.beta, en.count, en.seed.wrapping_add(1))?;
    let floor = split_sample_ks(&reference, 0.0, b.halfwidth, rho_sc(0.0))?;
    let opts = BulkOptions { halfwidth: b.halfwidth, ..Default::default() };
    let ref_gaps = betalab::universality::gaps_with_density(&reference, 0.0, b.halfwidth, rho_sc(0.0))?;
    let mut columns = vec![histogram(&ref_gaps, b.bins)];
    let mut windows = Vec::new();
    for &l0 in &b.lambda0 {
        let r = unfold_and_gaps(&s, &e, l0, b.halfwidth)?;
        let d = universality_distance(&s, &reference, l0, &e, &opts)?;
        columns.push(histogram(&r.gaps, b.bins));
        windows.push(json!({
            "lambda0": l0,
            "unfolding_density": r.unfolding_density,
            "gap_count": r.gaps.len(),
            "mean_gap": r.mean_gap,
            "ks_distance": d.ks,
            "within_floor": d.ks < floor + 0.02,
            "phi_differences": d.phi_differences,
            "phi_se": d.phi_se,
        }));
    }
    let mut csv = String::from("bin_left,bin_right,reference");
    for l0 in &b.lambda0 {
        write!(csv, ",lambda0={l0}").unwrap();
    }
    csv.push('\n');
    let width = 4.0 / b.bins as f64;
    for i in 0..b.bins {
        write!(csv, "{},{}", i as f64 * width, (i + 1) as f64 * width).unwrap();
        for c in &columns {
            write!(csv, ",{}", c[i]).unwrap();
        }
        csv.push('\n');
    }
    ctx.write_text("gaps.csv", &csv)?;
    ctx.write_json(
        "bulk.report.json",
        "bulk",
        json!({
            "sample": s,
            "reference": reference,
            "central_fraction": betalab::universality::CENTRAL_FRACTION,
            "split_sample_floor": floor,
            "windows": windows,
        }),
    )
}

#[derive(Serialize)]
struct CheckResult {
    name: &'static str,
    value: f64,
    tolerance: f64,
    /// `below` when the value must stay under the tolerance.
    pass: bool,
}

fn below(name: &'static str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult { name, value, tolerance, pass: value < tolerance }
}

pub fn verify(ctx: &Context) -> Result<(), CliError> {
    let v = &ctx.cfg.verify;
    let beta = ctx.cfg.ensemble.beta;
    let p = ctx.pipeline()?;
    let eps = p.epsilon();
    let mut checks = vec![
        below("transport-residual", p.transport.residual, 1e-7),
        below("overlap-mismatch", p.transport.overlap_mismatch, 1e-8),
    ];
    let g = ChebGrid::new(-2.0 - eps, 2.0 + eps, 64)?;
    checks.push(below("deformation-identity", deformation_identity_residual(&p.equilibrium, &p.transport, &g), 1e-6));
    let mut fns: Vec<SmoothFn> = ["x", "x^2", "x^3", "x^4", "cos", "sin", "exp_half", "t3"]
        .iter()
        .map(|n| SmoothFn::named(n).expect("built-in name"))
        .collect();
    fns.push(SmoothFn::constant(1.0));
    fns.push(SmoothFn::chebyshev_mode(5));
    checks.push(below("rank-one-identity", fns.iter().map(identity_1_21_residual).fold(0.0, f64::max), 1e-6));
    checks.push(below("dbar-routes", fns.iter().map(|h| dbar_form(h).rel_discrepancy).fold(0.0, f64::max), 1e-6));
    checks.push(below("contraction-norm", contraction_matrices(&p.spectrum).norm_plus, 1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.ensemble.seed);
    let configs: Vec<Vec<f64>> =
        (0..v.configs).map(|_| (0..v.hamiltonian_n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect()).collect();
    checks.push(below(
        "hamiltonian-identity",
        hamiltonian_identity_residual(&p.equilibrium, &p.transport, &p.spectrum, beta, &configs),
        1e-6,
    ));
    let sq = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>();
    let lin = linearization_check(&p, v.linearization_n, beta, v.modes, &sq, &LinearizationOptions::default())?;
    checks.push(below("linearization", lin.relative_discrepancy, 1e-3));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    ctx.write_json("verify.report.json", "verify", json!({ "passed": failed.is_empty(), "checks": checks }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}
