//! The increasing map ζ with `ρ(ζ(λ))ζ′(λ) = ρ_sc(λ)`: an interior
//! Chebyshev interpolant of the ODE solution, continued by power series at
//! the two square-root edges.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::ChebSeries;
use crate::equilibrium::{cdf_sc, rho_sc, eval_density, EquilibriumData};
use crate::error::{Error, Result};
use crate::ode;
use crate::operators::Deformation;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportOptions {
    pub delta_e: f64,
    pub order: usize,
    pub interior_nodes: usize,
    pub ode_tol: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { delta_e: 0.1, order: 32, interior_nodes: 96, ode_tol: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
}

/// Near an edge, `ζ = ∓2 ± a·x·w(x)` with `x = 2 ± λ` the distance to the
/// edge and `a = P₀^{−2/3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSeries {
    pub edge: Edge,
    pub p0: f64,
    pub scale: f64,
    /// Taylor coefficients of w, with `w(0) = 1`; `w − 1` is ζ₀.
    pub w: Vec<f64>,
    /// Root-test estimate of the radius of convergence in x.
    pub radius: f64,
}

impl EdgeSeries {
    /// Coefficients ζ_k of ζ₀ = w − 1.
    pub fn zeta_coeffs(&self) -> Vec<f64> {
        let mut c = self.w.clone();
        c[0] = 0.0;
        c
    }

    fn local(&self, lambda: f64) -> f64 {
        match self.edge {
            Edge::Left => lambda + 2.0,
            Edge::Right => 2.0 - lambda,
        }
    }

    fn w_at(&self, x: f64) -> (f64, f64) {
        let v = self.w.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let d = (1..self.w.len()).rev().fold(0.0, |acc, k| acc * x + k as f64 * self.w[k]);
        (v, d)
    }

    /// `(ζ, ζ′ from the series)` at λ.
    pub fn eval(&self, lambda: f64) -> (f64, f64) {
        let x = self.local(lambda);
        let (w, dw) = self.w_at(x);
        let y = self.scale * x * w;
        let dy = self.scale * (w + x * dw);
        match self.edge {
            Edge::Left => (-2.0 + y, dy),
            Edge::Right => (2.0 - y, dy),
        }
    }

    /// `y/x = a·w(x)`, the ratio needed to evaluate ζ′ from the ODE near the edge.
    fn ratio(&self, lambda: f64) -> f64 {
        self.scale * self.w_at(self.local(lambda)).0
    }
}

/// Taylor coefficients of `t ↦ P(edge ± t)` pointing into the support, by a
/// DFT of the complex Chebyshev evaluation on a small circle.
fn p_taylor(e: &EquilibriumData, edge: Edge, len: usize, r0: f64) -> Vec<f64> {
    let m = (2 * len).max(64);
    let (centre, dir) = match edge {
        Edge::Left => (-2.0, 1.0),
        Edge::Right => (2.0, -1.0),
    };
    let vals: Vec<Complex64> = (0..m)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            e.p_complex(Complex64::new(centre, 0.0) + dir * Complex64::from_polar(r0, th))
        })
        .collect();
    (0..len)
        .map(|k| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64))
                .sum();
            (s / m as f64).re / r0.powi(k as i32)
        })
        .collect()
}

/// Solves `s + (2/3)x s′ = P₀√(4−x)/(P(edge ± a x w)√(4 − a x w))` with
/// `s = w^{3/2}` coefficient by coefficient: `(1 + 2k/3) s_k = G_k`.
pub fn edge_series(e: &EquilibriumData, edge: Edge, order: usize) -> Result<EdgeSeries> {
    if order == 0 || order > 64 {
        return Err(Error::Precondition(format!("edge series order {order} outside 1..=64")));
    }
    let len = order + 1;
    let x_edge = match edge {
        Edge::Left => -2.0,
        Edge::Right => 2.0,
    };
    let p0 = e.p(x_edge);
    if p0.abs() < 1e-14 {
        return Err(Error::ZeroLeadingP { edge: x_edge });
    }
    let r0 = (0.5 * e.potential().analyticity_radius).min(1.0);
    let ptay = p_taylor(e, edge, len, r0);
    let a = p0.abs().powf(-2.0 / 3.0);
    let sqrt_4mx = Series::linear(4.0, -1.0, len).powf(0.5);
    let mut s = Series::constant(1.0, len);
    for k in 1..len {
        let w = s.powf(2.0 / 3.0);
        let t = w.shift_up().scale(a);
        let pt = t.compose_into(&ptay);
        let root = (&Series::constant(4.0, len) - &t).powf(0.5);
        let g = (&(&sqrt_4mx * &pt.recip()) * &root.recip()).scale(p0);
        s.0[k] = g.0[k] / (1.0 + 2.0 * k as f64 / 3.0);
    }
    let w = s.powf(2.0 / 3.0);
    let radius = root_test(&w.0);
    Ok(EdgeSeries { edge, p0, scale: a, w: w.0, radius })
}

fn root_test(c: &[f64]) -> f64 {
    let k0 = c.len() / 2;
    let mut best = f64::INFINITY;
    for (k, v) in c.iter().enumerate().skip(k0.max(1)) {
        if v.abs() > 1e-300 {
            best = best.min(v.abs().powf(-1.0 / k as f64));
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportMap {
    pub schema_version: u32,
    pub epsilon: f64,
    pub delta_e: f64,
    /// ζ(0), fixed by `F_ρ(ζ(0)) = 1/2`.
    pub zeta0: f64,
    pub interior: ChebSeries,
    pub left: EdgeSeries,
    pub right: EdgeSeries,
    /// Max |interior − series| over the two overlap windows.
    pub overlap_mismatch: f64,
    /// Max over a 512-point grid of `|ρ(ζ)ζ′ − ρ_sc|` with ζ′ differentiated.
    pub residual: f64,
    /// Largest ε on the probe ladder for which the continuation stays valid.
    pub max_valid_epsilon: f64,
    p: ChebSeries,
    #[serde(skip)]
    interior_deriv: Option<ChebSeries>,
}

/// Width of each overlap window, inside the interior interpolant's range.
const OVERLAP: f64 = 0.05;

fn ode_rhs(e: &EquilibriumData) -> impl Fn(f64, f64) -> f64 + '_ {
    move |l: f64, z: f64| (4.0 - l * l).sqrt() / (e.p(z) * (4.0 - z * z).sqrt())
}

/// Root of `F_ρ(z) = F_sc(λ)` by bisection, an independent route to ζ(λ).
pub fn cdf_matching(e: &EquilibriumData, lambda: f64) -> f64 {
    let target = cdf_sc(lambda);
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn solve_transport(e: &EquilibriumData, opts: &TransportOptions) -> Result<TransportMap> {
    if !(e.genericity_margin > 0.0) {
        return Err(Error::NotGeneric { margin: e.genericity_margin });
    }
    if !(opts.delta_e > OVERLAP && opts.delta_e < 1.0) || opts.interior_nodes < 8 {
        return Err(Error::Precondition("transport options out of range".into()));
    }
    let zeta0 = cdf_matching(e, 0.0);
    let hi = 2.0 - opts.delta_e;
    let nodes: Vec<f64> = crate::cheb::gauss_angles(opts.interior_nodes).iter().map(|t| hi * t.cos()).collect();
    let rhs = ode_rhs(e);
    let pos: Vec<f64> = nodes.iter().copied().filter(|&x| x >= 0.0).collect();
    let neg: Vec<f64> = nodes.iter().rev().copied().filter(|&x| x < 0.0).collect();
    let up = ode::integrate(&rhs, 0.0, zeta0, &pos, opts.ode_tol)?;
    let down = ode::integrate(&rhs, 0.0, zeta0, &neg, opts.ode_tol)?;
    let mut values = vec![0.0; nodes.len()];
    for (i, x) in nodes.iter().enumerate() {
        values[i] = if *x >= 0.0 {
            up[pos.iter().position(|p| p == x).unwrap()]
        } else {
            down[neg.iter().position(|p| p == x).unwrap()]
        };
    }
    let interior = ChebSeries::from_gauss_values(&values, -hi, hi);
    let left = edge_series(e, Edge::Left, opts.order)?;
    let right = edge_series(e, Edge::Right, opts.order)?;
    let reach = opts.delta_e.max(e.epsilon) + OVERLAP;
    for s in [&left, &right] {
        if s.radius < 1.2 * reach {
            return Err(Error::SeriesDivergence(format!(
                "{:?} edge series radius {:.3} below required reach {:.3}",
                s.edge, s.radius, reach
            )));
        }
    }
    let mut map = TransportMap {
        schema_version: 1,
        epsilon: e.epsilon,
        delta_e: opts.delta_e,
        zeta0,
        interior_deriv: Some(interior.derivative()),
        interior,
        left,
        right,
        overlap_mismatch: 0.0,
        residual: 0.0,
        max_valid_epsilon: 0.0,
        p: e.p_cheb.clone(),
    };
    let mut mismatch: f64 = 0.0;
    for i in 0..=16 {
        let x = hi - OVERLAP * i as f64 / 16.0;
        mismatch = mismatch.max((map.interior.eval(x) - map.right.eval(x).0).abs());
        mismatch = mismatch.max((map.interior.eval(-x) - map.left.eval(-x).0).abs());
    }
    map.overlap_mismatch = mismatch;
    if mismatch > 1e-6 {
        return Err(Error::SeriesDivergence(format!("edge series and ODE disagree by {mismatch:.3e}")));
    }
    map.residual = (0..512)
        .map(|i| {
            let l = -2.0 + 4.0 * (i as f64 + 0.5) / 512.0;
            let (z, dz) = map.eval_with_derivative(l);
            (eval_density(e, z) * dz - rho_sc(l)).abs()
        })
        .fold(0.0, f64::max);
    map.max_valid_epsilon = map.largest_valid_epsilon();
    if map.max_valid_epsilon < e.epsilon {
        return Err(Error::SeriesDivergence(format!(
            "map stays valid only up to ε = {:.3}, below the requested {:.3}",
            map.max_valid_epsilon, e.epsilon
        )));
    }
    Ok(map)
}

impl TransportMap {
    fn deriv_series(&self) -> ChebSeries {
        match &self.interior_deriv {
            Some(d) => d.clone(),
            None => self.interior.derivative(),
        }
    }

    /// Rebuilds cached derivatives after deserialization.
    pub fn prepared(mut self) -> Self {
        self.interior_deriv = Some(self.interior.derivative());
        self
    }

    fn p(&self, z: f64) -> f64 {
        self.p.eval(z)
    }

    fn in_domain(&self, lambda: f64) -> Result<()> {
        let lim = 2.0 + self.epsilon;
        if lambda.abs() > lim * (1.0 + 1e-12) || lambda.is_nan() {
            return Err(Error::OutOfDomain { x: lambda, lo: -lim, hi: lim });
        }
        Ok(())
    }

    /// ζ together with ζ′ from differentiating the interpolant or series.
    pub fn eval_with_derivative(&self, lambda: f64) -> (f64, f64) {
        let hi = 2.0 - self.delta_e;
        if lambda > hi {
            self.right.eval(lambda)
        } else if lambda < -hi {
            self.left.eval(lambda)
        } else {
            let d = match &self.interior_deriv {
                Some(d) => d.eval(lambda),
                None => self.deriv_series().eval(lambda),
            };
            (self.interior.eval(lambda), d)
        }
    }

    /// ζ′ from the defining relation `ρ_sc(λ)/ρ(ζ(λ))`, continued through
    /// the edge by the ratio `(4−λ²)/(4−ζ²)` in local coordinates.
    pub fn zeta_prime_relation(&self, lambda: f64) -> f64 {
        let hi = 2.0 - self.delta_e;
        let (z, _) = self.eval_with_derivative(lambda);
        let edge = if lambda > hi {
            Some(&self.right)
        } else if lambda < -hi {
            Some(&self.left)
        } else {
            None
        };
        match edge {
            Some(s) => {
                let x = s.local(lambda);
                let y = s.local(z);
                ((4.0 - x) / (s.ratio(lambda) * (4.0 - y))).sqrt() / self.p(z)
            }
            None => (4.0 - lambda * lambda).sqrt() / (self.p(z) * (4.0 - z * z).sqrt()),
        }
    }

    /// Probes ε on a ladder and returns the largest one where the series
    /// converges, ζ′ stays positive and the relation residual is small.
    fn largest_valid_epsilon(&self) -> f64 {
        let mut best = 0.0;
        for j in 1..=40 {
            let eps = 0.025 * j as f64;
            if self.left.radius < 1.2 * eps || self.right.radius < 1.2 * eps {
                break;
            }
            let ok = (0..=16).all(|i| {
                let x = eps * i as f64 / 16.0;
                [2.0 + x, -2.0 - x].iter().all(|&l| {
                    let (_, d) = self.eval_with_derivative(l);
                    let r = self.zeta_prime_relation(l);
                    d > 0.0 && r.is_finite() && (d - r).abs() < 1e-7 * d.abs().max(1.0)
                })
            });
            if !ok {
                break;
            }
            best = eps;
        }
        best
    }
}

pub fn eval_zeta(t: &TransportMap, lambda: f64) -> Result<f64> {
    t.in_domain(lambda)?;
    Ok(t.eval_with_derivative(lambda).0)
}

pub fn eval_zeta_prime(t: &TransportMap, lambda: f64) -> Result<f64> {
    t.in_domain(lambda)?;
    Ok(t.zeta_prime_relation(lambda))
}

impl Deformation for TransportMap {
    fn zeta(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }
    fn zeta_prime(&self, x: f64) -> f64 {
        self.zeta_prime_relation(x)
    }
}
