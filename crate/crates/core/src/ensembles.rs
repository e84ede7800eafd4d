//! Eigenvalue configurations: the tridiagonal model for the Gaussian
//! ensemble, a Metropolis log-gas sampler for general V, and nested
//! Gauss–Legendre quadrature for n ≤ 4.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::cdf_sc;
use crate::error::{Error, Result};
use crate::func::SmoothFn;
use crate::potentials::Potential;
use crate::quad;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    GaussianTridiag,
    Mcmc,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub acceptance_rate: Option<f64>,
    /// Integrated autocorrelation time in sweeps, max over N[λ] and N[λ²].
    pub tau_int: Option<f64>,
    pub burn_in: usize,
    pub sweeps_between_samples: usize,
    pub proposal_width: Option<f64>,
    pub chains: usize,
    /// Eigenvalues falling outside the truncation window (tridiagonal only).
    pub out_of_window: usize,
    /// Set when the tuned acceptance rate leaves [0.2, 0.6].
    pub flagged: bool,
}

impl Diagnostics {
    fn exact(out_of_window: usize) -> Self {
        Diagnostics {
            acceptance_rate: None,
            tau_int: None,
            burn_in: 0,
            sweeps_between_samples: 0,
            proposal_width: None,
            chains: 0,
            out_of_window,
            flagged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSample {
    pub beta: f64,
    pub n: usize,
    pub count: usize,
    pub potential_id: String,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub window: (f64, f64),
    pub diagnostics: Diagnostics,
    /// Row-major `count × n`, each row ascending.
    #[serde(skip)]
    pub configs: Vec<f64>,
}

impl EnsembleSample {
    pub fn config(&self, i: usize) -> &[f64] {
        &self.configs[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.configs.chunks_exact(self.n)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ------------------------------------------------------------- tridiagonal

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i+1`) by implicit QL.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 100, "implicit QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// One draw of the tridiagonal β-Hermite model scaled to the semicircle on
/// `[-2, 2]`: diagonal `N(0,1)·c`, off-diagonal `χ_{β(n−i)}/√2·c` with
/// `c = √(2/(βn))`.
fn tridiagonal_draw(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c = (2.0 / (beta * n as f64)).sqrt();
    let d: Vec<f64> = (0..n).map(|_| c * rng.sample::<f64, _>(StandardNormal)).collect();
    let off: Vec<f64> = (1..n)
        .map(|i| {
            let chi2 = ChiSquared::new(beta * (n - i) as f64).expect("positive degrees of freedom");
            c * (chi2.sample(rng) / 2.0).sqrt()
        })
        .collect();
    tridiagonal_eigenvalues(d, &off)
}

/// S independent spectra of the Gaussian β-ensemble (V = λ²/2). Sample `i`
/// uses its own RNG stream, so results do not depend on the thread count.
pub fn sample_gaussian(n: usize, beta: f64, count: usize, seed: u64) -> Result<EnsembleSample> {
    if n < 2 || !(beta > 0.0) || count == 0 {
        return Err(Error::Precondition(format!("need n ≥ 2, β > 0, S ≥ 1 (got n={n}, β={beta}, S={count})")));
    }
    let rows: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| tridiagonal_draw(n, beta, &mut rng_for(seed, i as u64)))
        .collect();
    let window = (-2.0 - 0.5 * crate::potentials::DEFAULT_EPSILON, 2.0 + 0.5 * crate::potentials::DEFAULT_EPSILON);
    let configs: Vec<f64> = rows.into_iter().flatten().collect();
    let outside = configs.iter().filter(|x| **x < window.0 || **x > window.1).count();
    Ok(EnsembleSample {
        beta,
        n,
        count,
        potential_id: "gaussian".into(),
        sampler: SamplerKind::GaussianTridiag,
        seed,
        window,
        diagnostics: Diagnostics::exact(outside),
        configs,
    })
}

// ------------------------------------------------------------------- MCMC

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcTuning {
    /// Initial single-site proposal width in units of the mean spacing 4/n.
    pub width: f64,
    pub burn_in: usize,
    /// Sweeps used to measure the autocorrelation time after burn-in.
    pub pilot: usize,
    pub chains: usize,
    /// Upper bound on production sweeps per chain.
    pub max_sweeps: usize,
    pub adapt: bool,
    /// End every sweep with a global translation and dilation.
    pub global_moves: bool,
}

impl Default for McmcTuning {
    fn default() -> Self {
        McmcTuning { width: 1.0, burn_in: 2000, pilot: 4000, chains: 4, max_sweeps: 2_000_000, adapt: true, global_moves: true }
    }
}

struct Chain<'a> {
    v: &'a Potential,
    n: usize,
    beta: f64,
    x: Vec<f64>,
    window: (f64, f64),
    width: f64,
    accepted: u64,
    proposed: u64,
    rng: ChaCha8Rng,
}

impl Chain<'_> {
    /// Σ_{j≠i} log|y − x_j| − log|x_i − x_j|, with one log per 32 factors.
    fn pair_delta(&self, i: usize, y: f64) -> f64 {
        let xi = self.x[i];
        let mut acc = 0.0;
        let mut prod = 1.0;
        for (j, &xj) in self.x.iter().enumerate() {
            if j == i {
                continue;
            }
            prod *= (y - xj) / (xi - xj);
            if j % 32 == 31 {
                acc += prod.abs().ln();
                prod = 1.0;
            }
        }
        acc + prod.abs().ln()
    }

    fn sweep(&mut self) {
        let n = self.n;
        let nf = n as f64;
        for i in 0..n {
            let y = self.x[i] + self.width * self.rng.sample::<f64, _>(StandardNormal);
            self.proposed += 1;
            if y <= self.window.0 || y >= self.window.1 {
                continue;
            }
            let d = 0.5 * self.beta * (-nf * (self.v.v(y) - self.v.v(self.x[i])) + 2.0 * self.pair_delta(i, y));
            if d >= 0.0 || self.rng.random::<f64>() < d.exp() {
                self.x[i] = y;
                self.accepted += 1;
            }
        }
    }

    /// Translation then dilation about the origin.
    fn global(&mut self) {
        let nf = self.n as f64;
        let shift = 0.5 * self.width * self.rng.sample::<f64, _>(StandardNormal);
        let moved: Vec<f64> = self.x.iter().map(|x| x + shift).collect();
        if moved.iter().all(|y| *y > self.window.0 && *y < self.window.1) {
            let dv: f64 = moved.iter().zip(&self.x).map(|(y, x)| self.v.v(*y) - self.v.v(*x)).sum();
            let d = -0.5 * self.beta * nf * dv;
            if d >= 0.0 || self.rng.random::<f64>() < d.exp() {
                self.x = moved;
            }
        }
        let log_s = 0.5 * self.width * self.rng.sample::<f64, _>(StandardNormal) / 2.0;
        let s = log_s.exp();
        let moved: Vec<f64> = self.x.iter().map(|x| x * s).collect();
        if moved.iter().all(|y| *y > self.window.0 && *y < self.window.1) {
            let dv: f64 = moved.iter().zip(&self.x).map(|(y, x)| self.v.v(*y) - self.v.v(*x)).sum();
            // Pair term changes by n(n−1)·log s, the volume element by s^n.
            let d = 0.5 * self.beta * (-nf * dv + nf * (nf - 1.0) * log_s) + nf * log_s;
            if d >= 0.0 || self.rng.random::<f64>() < d.exp() {
                self.x = moved;
            }
        }
    }

    fn step(&mut self, global: bool) {
        self.sweep();
        if global {
            self.global();
        }
    }

    fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn stats(&self) -> (f64, f64) {
        (self.x.iter().sum(), self.x.iter().map(|x| x * x).sum())
    }
}

/// Initial positions at the semicircle quantiles `(i + 1/2)/n`.
fn semicircle_quantiles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let q = (i as f64 + 0.5) / n as f64;
            let (mut lo, mut hi) = (-2.0, 2.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if cdf_sc(mid) < q {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

struct ChainOutput {
    rows: Vec<Vec<f64>>,
    acceptance: f64,
    tau: f64,
    thin: usize,
    width: f64,
}

fn run_chain(
    v: &Potential,
    n: usize,
    beta: f64,
    count: usize,
    seed: u64,
    index: usize,
    tuning: &McmcTuning,
) -> Result<ChainOutput> {
    let mut chain = Chain {
        v,
        n,
        beta,
        x: semicircle_quantiles(n),
        window: v.domain,
        width: tuning.width * 4.0 / n as f64,
        accepted: 0,
        proposed: 0,
        rng: rng_for(seed, index as u64),
    };
    // Burn-in with multiplicative width adaptation every 50 sweeps.
    for _ in 0..tuning.burn_in.div_ceil(50) {
        chain.accepted = 0;
        chain.proposed = 0;
        for _ in 0..50 {
            chain.step(tuning.global_moves);
        }
        if tuning.adapt {
            let a = chain.acceptance();
            chain.width *= ((a - 0.4) * 2.0).exp();
        }
    }
    chain.accepted = 0;
    chain.proposed = 0;
    let mut s1 = Vec::with_capacity(tuning.pilot);
    let mut s2 = Vec::with_capacity(tuning.pilot);
    for _ in 0..tuning.pilot {
        chain.step(tuning.global_moves);
        let (a, b) = chain.stats();
        s1.push(a);
        s2.push(b);
    }
    let acceptance = chain.acceptance();
    if chain.accepted == 0 {
        return Err(Error::AllRejected);
    }
    let tau = stats::integrated_autocorrelation(&s1).max(stats::integrated_autocorrelation(&s2));
    let thin = (5.0 * tau).ceil().max(1.0) as usize;
    if thin.saturating_mul(count) > tuning.max_sweeps {
        return Err(Error::PoorMixing { tau, budget: tuning.max_sweeps });
    }
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thin {
            chain.step(tuning.global_moves);
        }
        let mut row = chain.x.clone();
        row.sort_by(f64::total_cmp);
        rows.push(row);
    }
    Ok(ChainOutput { rows, acceptance, tau, thin, width: chain.width })
}

/// Metropolis sampler for `exp{βH/2}` restricted to the potential's window.
pub fn sample_mcmc(v: &Potential, n: usize, beta: f64, count: usize, seed: u64, tuning: &McmcTuning) -> Result<EnsembleSample> {
    if n < 2 || !(beta > 0.0) || count == 0 || tuning.chains == 0 {
        return Err(Error::Precondition("need n ≥ 2, β > 0, S ≥ 1 and at least one chain".into()));
    }
    if !(tuning.width > 0.0) {
        return Err(Error::AllRejected);
    }
    let chains = tuning.chains.min(count);
    let per: Vec<usize> = (0..chains).map(|c| count / chains + usize::from(c < count % chains)).collect();
    let outs: Vec<Result<ChainOutput>> =
        (0..chains).into_par_iter().map(|c| run_chain(v, n, beta, per[c], seed, c, tuning)).collect();
    let outs: Vec<ChainOutput> = outs.into_iter().collect::<Result<_>>()?;
    let acceptance = outs.iter().map(|o| o.acceptance).sum::<f64>() / chains as f64;
    let tau = outs.iter().map(|o| o.tau).fold(0.0, f64::max);
    let thin = outs.iter().map(|o| o.thin).max().unwrap_or(1);
    let width = outs.iter().map(|o| o.width).sum::<f64>() / chains as f64;
    let configs: Vec<f64> = outs.into_iter().flat_map(|o| o.rows.into_iter().flatten()).collect();
    Ok(EnsembleSample {
        beta,
        n,
        count,
        potential_id: v.id(),
        sampler: SamplerKind::Mcmc,
        seed,
        window: v.domain,
        diagnostics: Diagnostics {
            acceptance_rate: Some(acceptance),
            tau_int: Some(tau),
            burn_in: tuning.burn_in,
            sweeps_between_samples: thin,
            proposal_width: Some(width),
            chains,
            out_of_window: 0,
            flagged: !(0.2..=0.6).contains(&acceptance),
        },
        configs,
    })
}

// ------------------------------------------------------------- quadrature

pub const MAX_QUADRATURE_N: usize = 4;
pub const QUADRATURE_NODES: usize = 96;

/// Visits the nodes of a nested Gauss–Legendre rule over the ordered simplex
/// `lo < x₁ < … < x_n < hi`, passing each point and its weight.
pub fn simplex_quadrature(n: usize, window: (f64, f64), nodes: usize, visit: &mut dyn FnMut(&[f64], f64)) {
    fn recurse(level: usize, lo: f64, hi: f64, weight: f64, x: &mut [f64], rule: &quad::Rule, visit: &mut dyn FnMut(&[f64], f64)) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            x[level] = mid + half * t;
            let wt = weight * w * half;
            if level + 1 == x.len() {
                visit(x, wt);
            } else {
                let next = x[level];
                recurse(level + 1, next, hi, wt, x, rule, visit);
            }
        }
    }
    let rule = quad::gauss_legendre(nodes);
    let mut x = vec![0.0; n];
    recurse(0, window.0, window.1, 1.0, &mut x, &rule, visit);
}

/// `⟨Φ_m⟩` for several observables at once by nested Gauss–Legendre over
/// the ordered simplex, where the Vandermonde factor is smooth.
pub fn direct_expectations(
    v: &Potential,
    n: usize,
    beta: f64,
    window: (f64, f64),
    observables: &[&dyn Fn(&[f64]) -> f64],
) -> Result<Vec<f64>> {
    if n > MAX_QUADRATURE_N {
        return Err(Error::DimensionTooLarge { n, max: MAX_QUADRATURE_N });
    }
    if n == 0 || !(beta > 0.0) || !(window.1 > window.0) {
        return Err(Error::Precondition("need n ≥ 1, β > 0 and a proper window".into()));
    }
    let nf = n as f64;
    // Shift the exponent by the potential's minimum on the window to keep
    // weights in range.
    let vmin = (0..=200).map(|i| v.v(window.0 + (window.1 - window.0) * i as f64 / 200.0)).fold(f64::INFINITY, f64::min);
    let mut acc = vec![0.0; observables.len() + 1];
    simplex_quadrature(n, window, QUADRATURE_NODES, &mut |x, w| {
        let mut logp = 0.0;
        for i in 0..x.len() {
            logp -= 0.5 * beta * nf * (v.v(x[i]) - vmin);
            for j in 0..i {
                logp += beta * (x[i] - x[j]).ln();
            }
        }
        let p = w * logp.exp();
        acc[0] += p;
        for (m, o) in observables.iter().enumerate() {
            acc[m + 1] += p * o(x);
        }
    });
    if !(acc[0] > 0.0) {
        return Err(Error::Precondition("partition function vanished on the window".into()));
    }
    Ok(acc[1..].iter().map(|a| a / acc[0]).collect())
}

pub fn direct_expectation(v: &Potential, n: usize, beta: f64, observable: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    Ok(direct_expectations(v, n, beta, v.domain, &[observable])?[0])
}

/// `𝒩_n[h] = Σ_i h(λ_i)` per configuration.
pub fn linear_statistic(sample: &EnsembleSample, h: &SmoothFn) -> Vec<f64> {
    sample.iter().map(|c| c.iter().map(|&x| h.value(x)).sum()).collect()
}

// -------------------------------------------------------------- container

/// File magic of the sample container.
pub const MAGIC: &[u8; 8] = b"BLABSMP1";

/// Layout: 8-byte magic, u64 LE header length, JSON header, then
/// `count·n` little-endian f64 values row by row.
pub fn write_sample(sample: &EnsembleSample, path: &Path) -> Result<()> {
    let header = serde_json::to_vec(sample).map_err(|e| Error::Format(e.to_string()))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(header.len() as u64).to_le_bytes())?;
    f.write_all(&header)?;
    for x in &sample.configs {
        f.write_all(&x.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_sample(path: &Path) -> Result<EnsembleSample> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 8];
    f.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut header = vec![0u8; len];
    f.read_exact(&mut header)?;
    let mut sample: EnsembleSample = serde_json::from_slice(&header).map_err(|e| Error::Format(e.to_string()))?;
    let total = sample.count * sample.n;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.len() != 8 * total {
        return Err(Error::Format(format!("payload has {} bytes, expected {}", buf.len(), 8 * total)));
    }
    sample.configs = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(sample)
}
