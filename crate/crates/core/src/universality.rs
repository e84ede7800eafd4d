//! Fluctuation and universality checks built on samples and operator data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensembles::{direct_expectations, simplex_quadrature, EnsembleSample, MAX_QUADRATURE_N, QUADRATURE_NODES};
use crate::equilibrium::{eval_density, rho_sc, EquilibriumData};
use crate::error::{Error, Result};
use crate::func::SmoothFn;
use crate::operators::{dbar_form, nu_beta_pairing, sc_average, KernelSpectrum};
use crate::pipeline::Pipeline;
use crate::quad;
use crate::stats;
use crate::transport::TransportMap;

pub const MIN_CLT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub h_id: String,
    pub beta: f64,
    pub n: usize,
    pub count: usize,
    pub empirical_mean: f64,
    pub se_mean: f64,
    pub empirical_variance: f64,
    pub se_variance: f64,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    pub z_mean: f64,
    pub z_variance: f64,
    pub normality_p: f64,
}

/// `(ρ, h)` for the equilibrium density.
pub fn rho_pairing(e: &EquilibriumData, h: &SmoothFn) -> f64 {
    quad::chebyshev_second(-2.0, 2.0, 256).apply(|x| h.value(x) * e.p(x)) / (2.0 * PI)
}

/// Per-configuration `Σ h(λ_i) − n(ρ, h)`.
pub fn centered_statistic(sample: &EnsembleSample, e: &EquilibriumData, h: &SmoothFn) -> Vec<f64> {
    let center = sample.n as f64 * rho_pairing(e, h);
    sample.iter().map(|c| c.iter().map(|&x| h.value(x)).sum::<f64>() - center).collect()
}

/// Compares the first two cumulants of `𝒩_n[ḣ]` with `(2/β)(h, ν_β)` and
/// `(1/β)(D̄h, h)`.
pub fn clt_report(sample: &EnsembleSample, h: &SmoothFn, e: &EquilibriumData, beta: f64) -> Result<CltReport> {
    if sample.count < MIN_CLT_SAMPLES {
        return Err(Error::InsufficientSamples { got: sample.count, needed: MIN_CLT_SAMPLES });
    }
    let stat = centered_statistic(sample, e, h);
    let m = stats::moments(&stat);
    let predicted_mean = 2.0 / beta * nu_beta_pairing(h, e, beta);
    let predicted_variance = dbar_form(h).pv / beta;
    // Shapiro–Wilk is calibrated up to 5000 points.
    let take = stat.len().min(5000);
    let (_, normality_p) = stats::shapiro_wilk(&stat[..take])?;
    Ok(CltReport {
        h_id: h.label().to_string(),
        beta,
        n: sample.n,
        count: sample.count,
        empirical_mean: m.mean,
        se_mean: m.se_mean,
        empirical_variance: m.var,
        se_variance: m.se_var,
        predicted_mean,
        predicted_variance,
        z_mean: (m.mean - predicted_mean) / m.se_mean,
        z_variance: (m.var - predicted_variance) / m.se_var,
        normality_p,
    })
}

// ------------------------------------------------------------------- bulk

/// Smooth bump `exp(−1/(1−u²))` on `[c−r, c+r]`, scaled to unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    /// Overall multiplier, 1 for a unit-integral bump.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// `∫_{−1}^{1} exp(−1/(1−u²)) du`.
const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

impl Bump {
    pub fn new(center: f64, radius: f64) -> Self {
        Bump { center, radius, scale: 1.0 }
    }

    pub fn id(&self) -> String {
        format!("bump({},{})", self.center, self.radius)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.radius;
        if u.abs() >= 1.0 || self.scale == 0.0 {
            return 0.0;
        }
        self.scale * (-1.0 / (1.0 - u * u)).exp() / (BUMP_MASS * self.radius)
    }
}

/// Default bank: single bumps and a few two-point products.
pub fn default_bank() -> Vec<Vec<Bump>> {
    vec![
        vec![Bump::new(0.0, 1.5)],
        vec![Bump::new(0.0, 3.0)],
        vec![Bump::new(0.0, 1.5), Bump::new(1.0, 1.5)],
        vec![Bump::new(0.0, 1.5), Bump::new(2.0, 1.5)],
        vec![Bump::new(-1.0, 2.0), Bump::new(1.0, 2.0)],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub ids: Vec<String>,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkReport {
    pub lambda0: f64,
    pub halfwidth: f64,
    pub central_fraction: f64,
    pub unfolding_density: f64,
    pub gaps: Vec<f64>,
    pub mean_gap: f64,
    pub ks_distance: Option<f64>,
    pub phi: Vec<PhiEstimate>,
}

/// Fraction of the window from which gaps are kept.
pub const CENTRAL_FRACTION: f64 = 0.6;

fn check_bulk(e: &EquilibriumData, lambda0: f64) -> Result<()> {
    let margin = e.epsilon;
    if !(lambda0.abs() <= 2.0 - margin) {
        return Err(Error::Precondition(format!("λ0 = {lambda0} lies outside [−2+ε, 2−ε] for ε = {margin}")));
    }
    Ok(())
}

/// Unfolded spacings with a given unfolding density, pooled over configs.
pub fn gaps_with_density(sample: &EnsembleSample, lambda0: f64, halfwidth: f64, rho0: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (lambda0 - CENTRAL_FRACTION * halfwidth, lambda0 + CENTRAL_FRACTION * halfwidth);
    let scale = sample.n as f64 * rho0;
    let mut gaps = Vec::new();
    for c in sample.iter() {
        let mut sorted = c.to_vec();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[0] >= lo && w[1] <= hi {
                gaps.push((w[1] - w[0]) * scale);
            }
        }
    }
    if gaps.is_empty() {
        return Err(Error::EmptyWindow { lambda0 });
    }
    Ok(gaps)
}

pub fn unfold_and_gaps(sample: &EnsembleSample, e: &EquilibriumData, lambda0: f64, halfwidth: f64) -> Result<BulkReport> {
    check_bulk(e, lambda0)?;
    let rho0 = eval_density(e, lambda0);
    let gaps = gaps_with_density(sample, lambda0, halfwidth, rho0)?;
    Ok(BulkReport {
        lambda0,
        halfwidth,
        central_fraction: CENTRAL_FRACTION,
        unfolding_density: rho0,
        mean_gap: stats::mean(&gaps),
        gaps,
        ks_distance: None,
        phi: Vec::new(),
    })
}

fn phi_values(sample: &EnsembleSample, lambda0: f64, rho0: f64, phis: &[Bump], shifts: &[f64]) -> Vec<f64> {
    let scale = sample.n as f64 * rho0;
    sample
        .iter()
        .map(|c| {
            let mut acc = 0.0;
            for t in shifts {
                let center = lambda0 + t;
                acc += phis
                    .iter()
                    .map(|b| c.iter().map(|&x| b.eval(scale * (x - center))).sum::<f64>())
                    .product::<f64>();
            }
            acc / shifts.len() as f64
        })
        .collect()
}

fn phi_with_density(sample: &EnsembleSample, lambda0: f64, rho0: f64, phis: &[Bump], average: Option<f64>) -> PhiEstimate {
    let shifts: Vec<f64> = match average {
        // Nine equispaced shifts with |t| ≤ n^{−1+ε′}.
        Some(eps) => {
            let r = (sample.n as f64).powf(-1.0 + eps);
            (0..9).map(|i| r * (i as f64 / 4.0 - 1.0)).collect()
        }
        None => vec![0.0],
    };
    let v = phi_values(sample, lambda0, rho0, phis, &shifts);
    let m = stats::moments(&v);
    PhiEstimate { ids: phis.iter().map(Bump::id).collect(), value: m.mean, se: m.se_mean }
}

/// Monte Carlo average of `Π_j Σ_i φ_j(nρ(λ0)(λ_i − λ0))`, optionally
/// averaged over `λ0 + t` with `|t| ≤ n^{−1+ε′}`.
pub fn phi_estimate(
    sample: &EnsembleSample,
    e: &EquilibriumData,
    lambda0: f64,
    phis: &[Bump],
    average: Option<f64>,
) -> Result<PhiEstimate> {
    check_bulk(e, lambda0)?;
    Ok(phi_with_density(sample, lambda0, eval_density(e, lambda0), phis, average))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityDistance {
    pub ks: f64,
    pub phi_differences: Vec<f64>,
    /// Combined standard errors matching `phi_differences`.
    pub phi_se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkOptions {
    pub halfwidth: f64,
    pub bank: Vec<Vec<Bump>>,
}

impl Default for BulkOptions {
    fn default() -> Self {
        BulkOptions { halfwidth: 0.25, bank: default_bank() }
    }
}

/// Distance between the local statistics of `sample_v` at λ0 and those of a
/// Gaussian sample at the origin.
pub fn universality_distance(
    sample_v: &EnsembleSample,
    sample_gauss: &EnsembleSample,
    lambda0: f64,
    e_v: &EquilibriumData,
    opts: &BulkOptions,
) -> Result<UniversalityDistance> {
    if sample_v.n != sample_gauss.n || sample_v.beta != sample_gauss.beta {
        return Err(Error::MismatchedParameters(format!(
            "(n, β) = ({}, {}) vs ({}, {})",
            sample_v.n, sample_v.beta, sample_gauss.n, sample_gauss.beta
        )));
    }
    let report = unfold_and_gaps(sample_v, e_v, lambda0, opts.halfwidth)?;
    let reference = gaps_with_density(sample_gauss, 0.0, opts.halfwidth, rho_sc(0.0))?;
    let ks = stats::ks_two_sample(&report.gaps, &reference);
    let mut phi_differences = Vec::new();
    let mut phi_se = Vec::new();
    for phis in &opts.bank {
        let a = phi_with_density(sample_v, lambda0, report.unfolding_density, phis, None);
        let b = phi_with_density(sample_gauss, 0.0, rho_sc(0.0), phis, None);
        phi_differences.push((a.value - b.value).abs());
        phi_se.push(a.se.hypot(b.se));
    }
    Ok(UniversalityDistance { ks, phi_differences, phi_se })
}

/// KS distance between the pooled gaps of the two halves of one sample.
pub fn split_sample_ks(sample: &EnsembleSample, lambda0: f64, halfwidth: f64, rho0: f64) -> Result<f64> {
    let half = sample.count / 2;
    let (a, b) = (subsample(sample, 0, half), subsample(sample, half, sample.count));
    let ga = gaps_with_density(&a, lambda0, halfwidth, rho0)?;
    let gb = gaps_with_density(&b, lambda0, halfwidth, rho0)?;
    Ok(stats::ks_two_sample(&ga, &gb))
}

/// Configurations `from..to` as a new sample with the same metadata.
pub fn subsample(sample: &EnsembleSample, from: usize, to: usize) -> EnsembleSample {
    let mut out = sample.clone();
    out.configs = sample.configs[from * sample.n..to * sample.n].to_vec();
    out.count = to - from;
    out
}

// ------------------------------------------------------ structural checks

/// `−nΣV(ζ_i) + Σ_{i≠j} log|ζ_i − ζ_j| + (2/β)Σ log ζ′(λ_i)`.
fn deformed_hamiltonian(e: &EquilibriumData, t: &TransportMap, beta: f64, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let zz: Vec<(f64, f64)> = x.iter().map(|&l| t.eval_with_derivative(l)).collect();
    let mut h = 0.0;
    for (i, &(z, dz)) in zz.iter().enumerate() {
        h += -n * e.potential().v(z) + 2.0 / beta * dz.ln();
        for &(w, _) in &zz[..i] {
            h += 2.0 * (z - w).abs().ln();
        }
    }
    h
}

/// `−nΣλ²/2 + Σ_{i≠j} log|λ_i − λ_j|`.
fn gaussian_hamiltonian(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut h = 0.0;
    for i in 0..x.len() {
        h -= 0.5 * n * x[i] * x[i];
        for j in 0..i {
            h += 2.0 * (x[i] - x[j]).abs().ln();
        }
    }
    h
}

/// Centered mode sums `q_k = Σ_j (φ_k(λ_j) − (φ_k, ρ_sc))` for k < M.
fn mode_sums(s: &KernelSpectrum, centers: &[f64], x: &[f64]) -> Vec<f64> {
    centers.iter().enumerate().map(|(k, c)| x.iter().map(|&l| s.phi(k, l) - c).sum()).collect()
}

fn mode_centers(s: &KernelSpectrum) -> Vec<f64> {
    (0..s.m).map(|k| sc_average(|x| s.phi(k, x))).collect()
}

/// Largest deviation from the median of `H^(ζ) − [H* + (2/β−1)Σ log ζ′ + Σ η_k q_k²]`
/// over the configurations.
pub fn hamiltonian_identity_residual(
    e: &EquilibriumData,
    t: &TransportMap,
    s: &KernelSpectrum,
    beta: f64,
    configs: &[Vec<f64>],
) -> f64 {
    let centers = mode_centers(s);
    let mut diffs: Vec<f64> = configs
        .iter()
        .map(|x| {
            let lhs = deformed_hamiltonian(e, t, beta, x);
            let logs: f64 = x.iter().map(|&l| t.eval_with_derivative(l).1.ln()).sum();
            let q = mode_sums(s, &centers, x);
            let spectral: f64 = q.iter().zip(&s.etas).map(|(q, eta)| eta * q * q).sum();
            let rhs = gaussian_hamiltonian(x) + (2.0 / beta - 1.0) * logs + spectral;
            lhs - rhs
        })
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    diffs.iter().map(|d| (d - median).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationOptions {
    pub hermite_nodes: usize,
    /// Negative control: leave out the `(2/β − 1)Σ log ζ′` weight.
    pub drop_log_jacobian: bool,
}

impl Default for LinearizationOptions {
    fn default() -> Self {
        LinearizationOptions { hermite_nodes: 24, drop_log_jacobian: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationCheck {
    pub left: f64,
    pub right: f64,
    pub relative_discrepancy: f64,
    /// Share of `Σ|η_k|` carried by the modes kept.
    pub captured_mass: f64,
}

/// Two quadratures of `⟨Φ⟩_{V,n}`: directly under V on `ζ(σ_{ε/2})`, and
/// under the Gaussian weight on `σ_{ε/2}` with each `exp{(β/2)η_k q_k²}`
/// written as a Gauss–Hermite integral over `u_k`.
pub fn linearization_check(
    p: &Pipeline,
    n: usize,
    beta: f64,
    m: usize,
    observable: &dyn Fn(&[f64]) -> f64,
    opts: &LinearizationOptions,
) -> Result<LinearizationCheck> {
    if n > MAX_QUADRATURE_N {
        return Err(Error::DimensionTooLarge { n, max: MAX_QUADRATURE_N });
    }
    let t = &p.transport;
    let s = p.spectrum.truncated(m);
    let half = 2.0 + 0.5 * p.epsilon();
    let window = (t.eval_with_derivative(-half).0, t.eval_with_derivative(half).0);
    let left = direct_expectations(p.potential(), n, beta, window, &[observable])?[0];

    let centers = mode_centers(&s);
    let gh = quad::gauss_hermite(opts.hermite_nodes);
    // exp{(β/2)ηq²} = π^{−1/2} Σ w_i exp(√(2βη)·q·t_i), imaginary root for η < 0.
    let factor = |eta: f64, q: f64| -> f64 {
        let c = (2.0 * beta * eta.abs()).sqrt() * q;
        let sum: f64 = gh
            .nodes
            .iter()
            .zip(&gh.weights)
            .map(|(t, w)| w * if eta >= 0.0 { (c * t).cosh() } else { (c * t).cos() })
            .sum();
        sum / PI.sqrt()
    };
    let (mut num, mut den) = (0.0, 0.0);
    let mut zeta = vec![0.0; n];
    simplex_quadrature(n, (-half, half), QUADRATURE_NODES, &mut |x, w| {
        let mut logw = 0.5 * beta * gaussian_hamiltonian(x);
        for (i, &l) in x.iter().enumerate() {
            let (z, dz) = t.eval_with_derivative(l);
            zeta[i] = z;
            if !opts.drop_log_jacobian {
                logw += (1.0 - 0.5 * beta) * dz.ln();
            }
        }
        let q = mode_sums(&s, &centers, x);
        let lin: f64 = q.iter().zip(&s.etas).map(|(&q, &eta)| factor(eta, q)).product();
        let weight = w * logw.exp() * lin;
        num += weight * observable(&zeta);
        den += weight;
    });
    let right = num / den;
    let total: f64 = p.spectrum.etas[..p.spectrum.m].iter().map(|e| e.abs()).sum();
    let kept: f64 = s.etas[..s.m].iter().map(|e| e.abs()).sum();
    Ok(LinearizationCheck {
        left,
        right,
        relative_discrepancy: (right - left).abs() / left.abs(),
        captured_mass: if total > 0.0 { kept / total } else { 1.0 },
    })
}
