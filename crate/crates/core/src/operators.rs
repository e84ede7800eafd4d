//! Log kernel, the covariance operator D̄ on `[-2, 2]`, the deformation
//! kernel with its eigenpairs, the K± matrices and the measure ν_β.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cheb::{ChebGrid, ChebSeries};
use crate::equilibrium::EquilibriumData;
use crate::error::{Error, Result};
use crate::func::SmoothFn;
use crate::quad;

const PI: f64 = std::f64::consts::PI;

/// Inner and outer node counts of the PV route. Coprime-ish sizes keep the
/// two Chebyshev–Gauss node sets disjoint.
const PV_INNER: usize = 257;
const PV_OUTER: usize = 256;

/// Coefficients `h_k = (2/π)∫₀^π h(2cos θ) cos kθ dθ` for `k = 0..=K`,
/// by the midpoint rule in θ on `4K` points.
pub fn cheb_coeffs(h: impl Fn(f64) -> f64, k_max: usize) -> Vec<f64> {
    let m = (4 * k_max).max(4);
    let thetas: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * PI / m as f64).collect();
    let vals: Vec<f64> = thetas.iter().map(|t| h(2.0 * t.cos())).collect();
    (0..=k_max)
        .map(|k| {
            let s: f64 = thetas.iter().zip(&vals).map(|(t, v)| v * (k as f64 * t).cos()).sum();
            2.0 / m as f64 * s
        })
        .collect()
}

// ---------------------------------------------------------------- log kernel

/// `L[f]` for `f = g/√(4−λ²)`, stored through the expansion
/// `g = Σ a_k T_k(λ/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPotential {
    pub coeffs: Vec<f64>,
}

impl LogPotential {
    /// Valid on and off `[-2, 2]`.
    pub fn eval(&self, x: f64) -> f64 {
        let a = &self.coeffs;
        if x.abs() <= 2.0 {
            // Σ_{k≥1} a_k(−π/k)T_k(x/2) by Clenshaw on the rescaled series.
            let t = 0.5 * x;
            let (mut b1, mut b2) = (0.0, 0.0);
            for k in (1..a.len()).rev() {
                let c = -PI / k as f64 * a[k];
                let b0 = c + 2.0 * t * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            // The k = 0 slot of the recurrence is empty, so finish by hand.
            t * b1 - b2
        } else {
            let t = 0.5 * x;
            let w = t + t.signum() * (t * t - 1.0).sqrt();
            let inv = 1.0 / w;
            let mut p = 1.0;
            let mut s = a[0] * PI * w.abs().ln();
            for (k, ak) in a.iter().enumerate().skip(1) {
                p *= inv;
                s += -PI / k as f64 * ak * p;
            }
            s
        }
    }
}

/// Nodes used to expand `f·√(4−λ²)` before applying the log kernel.
const LOG_NODES: usize = 256;

/// Applies `L[f](λ) = ∫ log|λ−μ| f(μ) dμ` over `[-2, 2]`.
pub fn log_kernel_apply(f: impl Fn(f64) -> f64) -> LogPotential {
    log_kernel_apply_weighted(|x| f(x) * (4.0 - x * x).sqrt())
}

/// Same as [`log_kernel_apply`] but takes `g = f·√(4−λ²)` directly, which
/// avoids forming `0·∞` for densities with inverse square-root edges.
pub fn log_kernel_apply_weighted(g: impl Fn(f64) -> f64) -> LogPotential {
    let s = ChebSeries::interpolate(g, -2.0, 2.0, LOG_NODES).chopped(1e-17);
    LogPotential { coeffs: s.coeffs }
}

// ------------------------------------------------------------------- D route

/// `g(λ) = √(4−λ²)·D u(λ) = π⁻²∫ (F(μ)−F(λ))/(λ−μ) dμ/√(4−μ²)` with
/// `F = u′·(4−μ²)`; the subtracted PV term vanishes on the open interval.
fn weighted_d(du: &dyn Fn(f64) -> f64, lambda: f64, inner: &quad::Rule) -> f64 {
    let fl = du(lambda) * (4.0 - lambda * lambda);
    let mut s = 0.0;
    for (&mu, &w) in inner.nodes.iter().zip(&inner.weights) {
        let d = lambda - mu;
        if d == 0.0 {
            return weighted_d(du, lambda, &quad::chebyshev_first(-2.0, 2.0, inner.len() + 1));
        }
        s += w * (du(mu) * (4.0 - mu * mu) - fl) / d;
    }
    s / (PI * PI)
}

/// `D h(λ)` for `|λ| < 2`.
pub fn apply_d(h: &SmoothFn, lambda: f64) -> Result<f64> {
    if !(lambda.abs() < 2.0) {
        return Err(Error::EdgeEvaluation(lambda));
    }
    let inner = quad::chebyshev_first(-2.0, 2.0, PV_INNER);
    Ok(weighted_d(&|x| h.deriv(x), lambda, &inner) / (4.0 - lambda * lambda).sqrt())
}

/// Bilinear PV form `(D u, v)` over `[-2, 2]` given `u′` and `v`.
pub fn d_bilinear(du: &dyn Fn(f64) -> f64, v: &dyn Fn(f64) -> f64) -> f64 {
    let inner = quad::chebyshev_first(-2.0, 2.0, PV_INNER);
    let outer = quad::chebyshev_first(-2.0, 2.0, PV_OUTER);
    outer.nodes.iter().zip(&outer.weights).map(|(&x, &w)| w * weighted_d(du, x, &inner) * v(x)).sum()
}

/// Both routes to `(D̄h, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarForm {
    /// Principal-value definition, the reference value.
    pub pv: f64,
    /// `Σ k (κ h_k)²`.
    pub chebyshev: f64,
    /// The calibration constant κ².
    pub kappa_sq: f64,
    pub rel_discrepancy: f64,
}

/// Number of Chebyshev coefficients kept in the sum route.
const DBAR_MODES: usize = 64;

fn chebyshev_sum(h: &SmoothFn) -> f64 {
    cheb_coeffs(|x| h.value(x), DBAR_MODES).iter().enumerate().map(|(k, c)| k as f64 * c * c).sum()
}

/// κ² found by matching the two routes on `h(λ) = λ`.
pub fn kappa_sq() -> f64 {
    let h = SmoothFn::polynomial(&[0.0, 1.0]);
    d_bilinear(&|x| h.deriv(x), &|x| h.value(x)) / chebyshev_sum(&h)
}

pub fn dbar_form(h: &SmoothFn) -> DbarForm {
    let pv = d_bilinear(&|x| h.deriv(x), &|x| h.value(x));
    let k2 = kappa_sq();
    let chebyshev = k2 * chebyshev_sum(h);
    let scale = pv.abs().max(chebyshev.abs());
    let rel_discrepancy = if scale < 1e-14 { (pv - chebyshev).abs() } else { (pv - chebyshev).abs() / scale };
    DbarForm { pv, chebyshev, kappa_sq: k2, rel_discrepancy }
}

/// Max over interior points of `|L D̄ v + v − π⁻¹(v, X^{−1/2})|`.
pub fn identity_1_21_residual(v: &SmoothFn) -> f64 {
    let inner = quad::chebyshev_first(-2.0, 2.0, PV_INNER);
    let ld = log_kernel_apply_weighted(|x| weighted_d(&|t| v.deriv(t), x, &inner));
    let rank_one = quad::chebyshev_first(-2.0, 2.0, 512).apply(|x| v.value(x)) / PI;
    (0..256)
        .map(|i| {
            let x = 2.0 * ((i as f64 + 0.5) * PI / 256.0).cos();
            (ld.eval(x) + v.value(x) - rank_one).abs()
        })
        .fold(0.0, f64::max)
}

/// D on nodal values at Chebyshev–Gauss points of `[-2, 2]`.
#[derive(Debug, Clone)]
pub struct DiscreteD {
    pub nodes: Vec<f64>,
    /// Weights of `∫_{-2}^{2} f dλ`, i.e. `(π/N)√(4−x_i²)`.
    pub weights: Vec<f64>,
    pub d: DMatrix<f64>,
    /// `W⁻¹DᵀW`, the adjoint in the weighted inner product.
    pub d_star: DMatrix<f64>,
    pub dbar: DMatrix<f64>,
}

impl DiscreteD {
    pub fn new(n: usize) -> Self {
        let rule = quad::chebyshev_first(-2.0, 2.0, n);
        let x = rule.nodes.clone();
        let weights: Vec<f64> = x.iter().map(|xi| PI / n as f64 * (4.0 - xi * xi).sqrt()).collect();
        let diff = differentiation_matrix(&x);
        let mut cauchy = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for m in 0..n {
                if m != i {
                    let c = 1.0 / (x[i] - x[m]);
                    cauchy[(i, m)] = c;
                    diag -= c;
                }
            }
            cauchy[(i, i)] = diag;
        }
        let cauchy = cauchy - &diff;
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, x.iter().map(|t| 4.0 - t * t)));
        let pre = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            x.iter().map(|t| 1.0 / (PI * n as f64 * (4.0 - t * t).sqrt())),
        ));
        let d = pre * cauchy * q * diff;
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&weights));
        let w_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, weights.iter().map(|v| 1.0 / v)));
        let d_star = &w_inv * d.transpose() * &w;
        let dbar = (&d + &d_star) * 0.5;
        DiscreteD { nodes: x, weights, d, d_star, dbar }
    }

    /// Weighted inner product `Σ w_i u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }
}

/// Spectral differentiation on the given Chebyshev–Gauss nodes.
fn differentiation_matrix(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let s = ChebSeries::from_gauss_values(&e, -2.0, 2.0).derivative();
        for i in 0..n {
            out[(i, j)] = s.eval(x[i]);
        }
    }
    out
}

// ------------------------------------------------------- deformation kernel

/// A smooth increasing change of variables on σ_ε.
pub trait Deformation: Send + Sync {
    fn zeta(&self, x: f64) -> f64;
    fn zeta_prime(&self, x: f64) -> f64;
}

/// ζ(λ) = λ.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl Deformation for IdentityMap {
    fn zeta(&self, x: f64) -> f64 {
        x
    }
    fn zeta_prime(&self, _x: f64) -> f64 {
        1.0
    }
}

/// `ζ + a·sin`, a negative control for identities that need the true map.
pub struct PerturbedMap<'a> {
    pub inner: &'a dyn Deformation,
    pub amplitude: f64,
}

impl Deformation for PerturbedMap<'_> {
    fn zeta(&self, x: f64) -> f64 {
        self.inner.zeta(x) + self.amplitude * x.sin()
    }
    fn zeta_prime(&self, x: f64) -> f64 {
        self.inner.zeta_prime(x) + self.amplitude * x.cos()
    }
}

/// `L^(ζ)(λ, μ) = log|(ζ(λ)−ζ(μ))/(λ−μ)|` with the diagonal limit log ζ′.
pub fn deformation_kernel(t: &dyn Deformation, x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1e-12 * (1.0 + x.abs()) {
        t.zeta_prime(0.5 * (x + y)).ln()
    } else {
        ((t.zeta(x) - t.zeta(y)) / (x - y)).abs().ln()
    }
}

/// Raw kernel values on a grid and their weight-symmetrized form.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub grid: ChebGrid,
    pub raw: DMatrix<f64>,
    /// `W^{1/2} L W^{1/2}`.
    pub symmetric: DMatrix<f64>,
}

pub fn kernel_matrix(t: &dyn Deformation, grid: &ChebGrid) -> Result<KernelMatrix> {
    let n = grid.len();
    for i in 1..n {
        if !(grid.nodes[i] > grid.nodes[i - 1]) {
            return Err(Error::CoincidentNodes(i));
        }
    }
    let z: Vec<f64> = grid.nodes.iter().map(|&x| t.zeta(x)).collect();
    let mut raw = DMatrix::zeros(n, n);
    for i in 0..n {
        raw[(i, i)] = t.zeta_prime(grid.nodes[i]).ln();
        for j in 0..i {
            let v = ((z[i] - z[j]) / (grid.nodes[i] - grid.nodes[j])).abs().ln();
            raw[(i, j)] = v;
            raw[(j, i)] = v;
        }
    }
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut symmetric = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = sw[i] * raw[(i, j)] * sw[j];
            symmetric[(i, j)] = v;
            symmetric[(j, i)] = v;
        }
    }
    Ok(KernelMatrix { grid: grid.clone(), raw, symmetric })
}

/// Tail tolerance that fixes the truncation M.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpectrum {
    /// Sorted by decreasing |η|.
    pub etas: Vec<f64>,
    pub m: usize,
    /// Fitted c in `|η_k| ≈ C e^{−ck}`; absent when fewer than three modes.
    pub decay_rate: Option<f64>,
    pub grid: ChebGrid,
    /// Grid samples of φ_k, orthonormal under the grid weights.
    pub phis: Vec<Vec<f64>>,
    #[serde(skip)]
    interp: Vec<ChebSeries>,
}

impl KernelSpectrum {
    /// φ_k off the grid through its Chebyshev interpolant (k is 0-based).
    pub fn phi(&self, k: usize, x: f64) -> f64 {
        match self.interp.get(k) {
            Some(s) => s.eval(x),
            None => self.grid.interpolant(&self.phis[k]).eval(x),
        }
    }

    pub fn phi_deriv(&self, k: usize) -> ChebSeries {
        self.grid.interpolant(&self.phis[k]).derivative()
    }

    /// Max entry of `W^{1/2}LW^{1/2} − Σ_{k≤M} η_k v_k v_kᵀ`.
    pub fn reconstruction_error(&self, km: &KernelMatrix) -> f64 {
        let n = self.grid.len();
        let sw: Vec<f64> = self.grid.weights.iter().map(|w| w.sqrt()).collect();
        let mut approx = DMatrix::<f64>::zeros(n, n);
        for k in 0..self.m {
            let v = nalgebra::DVector::from_iterator(n, (0..n).map(|i| sw[i] * self.phis[k][i]));
            approx += self.etas[k] * &v * v.transpose();
        }
        (&km.symmetric - approx).amax()
    }

    /// Returns a copy keeping only the first `m` modes in sums.
    pub fn truncated(&self, m: usize) -> KernelSpectrum {
        let mut out = self.clone();
        out.m = m.min(self.m);
        out
    }

    pub fn with_interpolants(mut self) -> Self {
        let count = (self.m + 4).min(self.phis.len());
        self.interp = self.phis[..count].iter().map(|p| self.grid.interpolant(p)).collect();
        self
    }
}

pub fn eigendecompose(km: &KernelMatrix) -> KernelSpectrum {
    let n = km.grid.len();
    let eig = SymmetricEigen::new(km.symmetric.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let etas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let isw: Vec<f64> = km.grid.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let phis: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            // Fix the sign so φ_k is positive at its largest entry.
            let big = col.iter().fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
            let s = if big < 0.0 { -1.0 } else { 1.0 };
            (0..n).map(|r| s * col[r] * isw[r]).collect()
        })
        .collect();
    let mut tail = 0.0;
    let mut m = n;
    for k in (0..n).rev() {
        if tail + etas[k].abs() >= TAIL_TOL {
            break;
        }
        tail += etas[k].abs();
        m = k;
    }
    let decay_rate = fit_decay(&etas[..m]);
    KernelSpectrum { etas, m, decay_rate, grid: km.grid.clone(), phis, interp: Vec::new() }.with_interpolants()
}

/// Least-squares slope of `log|η_k|` against k, negated.
fn fit_decay(etas: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        etas.iter().enumerate().filter(|(_, e)| e.abs() > 0.0).map(|(k, e)| ((k + 1) as f64, e.abs().ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Builds the spectrum of `L^(ζ)` on the default grid over σ_ε.
pub fn kernel_spectrum(t: &dyn Deformation, epsilon: f64, nodes: usize) -> Result<KernelSpectrum> {
    let grid = ChebGrid::new(-2.0 - epsilon, 2.0 + epsilon, nodes)?;
    Ok(eigendecompose(&kernel_matrix(t, &grid)?))
}

// -------------------------------------------------------------- K± matrices

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionMatrices {
    /// Mode indices (0-based) with η > 0 and η < 0 among the first M.
    pub i_plus: Vec<usize>,
    pub i_minus: Vec<usize>,
    pub k_plus: Vec<Vec<f64>>,
    pub k_minus: Vec<Vec<f64>>,
    pub norm_plus: f64,
    pub norm_minus: f64,
    /// Max |B − Bᵀ| of the unsymmetrized PV Gram matrix, a quadrature check.
    pub asymmetry: f64,
}

/// Gram matrix `(D φ_k, φ_j)` over σ by the PV route.
fn d_gram(s: &KernelSpectrum, modes: &[usize]) -> DMatrix<f64> {
    let inner = quad::chebyshev_first(-2.0, 2.0, PV_INNER);
    let outer = quad::chebyshev_first(-2.0, 2.0, PV_OUTER);
    let derivs: Vec<ChebSeries> = modes.iter().map(|&k| s.phi_deriv(k)).collect();
    let g: Vec<Vec<f64>> = derivs
        .iter()
        .map(|d| outer.nodes.iter().map(|&x| weighted_d(&|t| d.eval(t), x, &inner)).collect())
        .collect();
    let vals: Vec<Vec<f64>> = modes.iter().map(|&k| outer.nodes.iter().map(|&x| s.phi(k, x)).collect()).collect();
    let m = modes.len();
    DMatrix::from_fn(m, m, |j, k| outer.weights.iter().zip(&g[k]).zip(&vals[j]).map(|((w, a), b)| w * a * b).sum())
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn contraction_matrices(s: &KernelSpectrum) -> ContractionMatrices {
    let i_plus: Vec<usize> = (0..s.m).filter(|&k| s.etas[k] > 0.0).collect();
    let i_minus: Vec<usize> = (0..s.m).filter(|&k| s.etas[k] < 0.0).collect();
    let mut asymmetry: f64 = 0.0;
    let mut build = |idx: &[usize]| -> DMatrix<f64> {
        let b = d_gram(s, idx);
        asymmetry = asymmetry.max((&b - b.transpose()).amax());
        let dbar = (&b + b.transpose()) * 0.5;
        DMatrix::from_fn(idx.len(), idx.len(), |j, k| {
            s.etas[idx[j]].abs().sqrt() * s.etas[idx[k]].abs().sqrt() * dbar[(j, k)]
        })
    };
    let kp = build(&i_plus);
    let km = build(&i_minus);
    let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
    ContractionMatrices {
        norm_plus: spectral_norm(&kp),
        norm_minus: spectral_norm(&km),
        k_plus: rows(&kp),
        k_minus: rows(&km),
        i_plus,
        i_minus,
        asymmetry,
    }
}

// --------------------------------------------------------------------- ν_β

/// `(h, ν_β) = (1−β/2)[¼(h(−2)+h(2)) − (1/2π)∫h/√(4−λ²) − ½(D log P, h)]`.
pub fn nu_beta_pairing(h: &SmoothFn, e: &EquilibriumData, beta: f64) -> f64 {
    let pref = 1.0 - 0.5 * beta;
    if pref == 0.0 {
        return 0.0;
    }
    let edge = 0.25 * (h.value(-2.0) + h.value(2.0));
    let arc = quad::chebyshev_first(-2.0, 2.0, 256).apply(|x| h.value(x)) / (2.0 * PI);
    let dp = e.p_cheb.derivative();
    let dlogp = move |x: f64| dp.eval(x) / e.p(x);
    let dterm = d_bilinear(&dlogp, &|x| h.value(x));
    pref * (edge - arc - 0.5 * dterm)
}

// ------------------------------------------------------ deformation identity

/// Samples of `g(λ) = 2∫L^(ζ)(λ,μ)ρ_sc(μ)dμ − V(ζ(λ)) + λ²/2`.
pub fn deformation_identity_values(e: &EquilibriumData, t: &dyn Deformation, grid: &ChebGrid) -> Vec<f64> {
    let rule = quad::chebyshev_second(-2.0, 2.0, 256);
    grid.nodes
        .iter()
        .map(|&x| {
            let integral = rule.apply(|mu| deformation_kernel(t, x, mu)) / (2.0 * PI);
            2.0 * integral - e.potential().v(t.zeta(x)) + 0.5 * x * x
        })
        .collect()
}

/// `max|g − mean g|` over the grid.
pub fn deformation_identity_residual(e: &EquilibriumData, t: &dyn Deformation, grid: &ChebGrid) -> f64 {
    let g = deformation_identity_values(e, t, grid);
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}

/// ρ_sc-average of a function, used to center mode functions.
pub fn sc_average(f: impl Fn(f64) -> f64) -> f64 {
    quad::chebyshev_second(-2.0, 2.0, 256).apply(f) / (2.0 * PI)
}
