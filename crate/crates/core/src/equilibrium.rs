//! Equilibrium density `ρ = P·√(4−λ²)/2π` of a potential normalized to
//! support `[-2, 2]`, with genericity and variational checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::ChebSeries;
use crate::error::{Error, Result};
use crate::func::SmoothFn;
use crate::operators::{log_kernel_apply, LogPotential};
use crate::potentials::{moment_residuals, Potential, DEFAULT_EPSILON};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumOptions {
    /// Half-width of the margin: P is represented on `[-2−ε, 2+ε]`.
    pub epsilon: f64,
    pub contour_nodes: usize,
    pub cheb_nodes: usize,
    /// Multiplier applied to the contour offset; 1 is the default contour.
    pub contour_scale: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions { epsilon: DEFAULT_EPSILON, contour_nodes: 512, cheb_nodes: 128, contour_scale: 1.0 }
    }
}

/// The contour used for P: an ellipse with foci-free axes `(A, B)`,
/// a circle when `A = B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumData {
    pub schema_version: u32,
    pub epsilon: f64,
    /// Chebyshev series of P on σ_ε.
    pub p_cheb: ChebSeries,
    pub contour: Contour,
    /// inf of P over σ.
    pub genericity_margin: f64,
    pub robin_constant: f64,
    /// max over σ of |v − robin_constant|.
    pub v_residual: f64,
    /// Largest `v − robin_constant` over the probes outside σ; negative when
    /// the inequality holds.
    pub outside_excess: f64,
    pub mass: f64,
    #[serde(skip)]
    potential: Option<Potential>,
}

/// `X^{1/2}(z) = √(z−2)·√(z+2)`, cut on `[-2, 2]` and `~ z` at infinity.
pub fn sqrt_x(z: Complex64) -> Complex64 {
    (z - 2.0).sqrt() * (z + 2.0).sqrt()
}

fn contour_for(v: &Potential, opts: &EquilibriumOptions) -> Contour {
    let d = 0.5 * v.analyticity_radius.min(1.0) * opts.contour_scale;
    if v.analyticity_radius.is_infinite() {
        let r = (2.0 + opts.epsilon + 0.5) * opts.contour_scale;
        Contour { semi_major: r, semi_minor: r, nodes: opts.contour_nodes }
    } else {
        Contour { semi_major: 2.0 + opts.epsilon + d, semi_minor: d, nodes: opts.contour_nodes }
    }
}

/// Trapezoid evaluation of `(1/2πi)∮ (V′(ζ)−V′(z))/((ζ−z)X^{1/2}(ζ)) dζ`.
fn p_contour(v: &Potential, c: &Contour, z: f64) -> f64 {
    let dvz = v.dv(z);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..c.nodes {
        let t = 2.0 * std::f64::consts::PI * j as f64 / c.nodes as f64;
        let zeta = Complex64::new(c.semi_major * t.cos(), c.semi_minor * t.sin());
        let dzeta = Complex64::new(-c.semi_major * t.sin(), c.semi_minor * t.cos());
        let num = v.dv_complex(zeta) - dvz;
        acc += num / ((zeta - z) * sqrt_x(zeta)) * dzeta;
    }
    // (1/2πi)·Σ f·ζ′(t)·(2π/N)
    (acc / Complex64::new(0.0, c.nodes as f64)).re
}

/// Sample P on σ_ε and return its Chebyshev series.
pub fn p_series(v: &Potential, opts: &EquilibriumOptions) -> (ChebSeries, Contour) {
    let c = contour_for(v, opts);
    let lim = 2.0 + opts.epsilon;
    let s = ChebSeries::interpolate(|x| p_contour(v, &c, x), -lim, lim, opts.cheb_nodes).chopped(1e-13);
    (s, c)
}

/// Number of probe points outside σ on each side.
const PROBES: usize = 16;

pub fn compute_p(v: &Potential, opts: &EquilibriumOptions) -> Result<EquilibriumData> {
    if !(opts.epsilon > 0.0) || opts.contour_nodes < 16 || opts.cheb_nodes < 8 {
        return Err(Error::Precondition("equilibrium options out of range".into()));
    }
    let (r0, r1) = moment_residuals(v, -2.0, 2.0);
    if r0.abs().max(r1.abs()) > 1e-8 {
        return Err(Error::Precondition(format!(
            "potential is not normalized to support [-2, 2] (moment residuals {r0:.2e}, {r1:.2e})"
        )));
    }
    let (p, contour) = p_series(v, opts);
    let margin = (0..=512).map(|i| p.eval(-2.0 + 4.0 * i as f64 / 512.0)).fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(Error::NotGeneric { margin });
    }
    let mut data = EquilibriumData {
        schema_version: 1,
        epsilon: opts.epsilon,
        p_cheb: p,
        contour,
        genericity_margin: margin,
        robin_constant: 0.0,
        v_residual: 0.0,
        outside_excess: 0.0,
        mass: 0.0,
        potential: Some(v.clone()),
    };
    data.mass = quad::chebyshev_second(-2.0, 2.0, 256).apply(|x| data.p(x)) / (2.0 * std::f64::consts::PI);
    let lp = data.log_potential();
    let grid: Vec<f64> = (0..512).map(|i| 2.0 * ((i as f64 + 0.5) * std::f64::consts::PI / 512.0).cos()).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| 2.0 * lp.eval(x) - v.v(x)).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    data.robin_constant = 0.5 * (lo + hi);
    data.v_residual = 0.5 * (hi - lo);
    let mut excess = f64::NEG_INFINITY;
    for j in 1..=PROBES {
        let off = 0.5 * opts.epsilon * j as f64 / PROBES as f64;
        for x in [-2.0 - off, 2.0 + off] {
            excess = excess.max(2.0 * lp.eval(x) - v.v(x) - data.robin_constant);
        }
    }
    data.outside_excess = excess;
    if data.v_residual > 1e-6 {
        return Err(Error::VariationalFailure(format!("v varies by {:.3e} on the support", data.v_residual)));
    }
    if excess >= 0.0 {
        return Err(Error::VariationalFailure(format!("v exceeds its support value by {excess:.3e} outside σ")));
    }
    if (data.mass - 1.0).abs() > 1e-8 {
        return Err(Error::VariationalFailure(format!("density has mass {}", data.mass)));
    }
    Ok(data)
}

impl EquilibriumData {
    pub fn p(&self, x: f64) -> f64 {
        self.p_cheb.eval(x)
    }

    pub fn p_complex(&self, z: Complex64) -> Complex64 {
        self.p_cheb.eval_complex(z)
    }

    /// The potential this density was computed from.
    pub fn potential(&self) -> &Potential {
        self.potential.as_ref().expect("equilibrium data without potential (deserialized?)")
    }

    /// `L[ρ]` through the Chebyshev diagonalization of the log kernel.
    pub fn log_potential(&self) -> LogPotential {
        log_kernel_apply(|x| eval_density(self, x))
    }

    /// The effective potential `v = 2L[ρ] − V`.
    pub fn effective_potential(&self, x: f64) -> f64 {
        2.0 * self.log_potential().eval(x) - self.potential().v(x)
    }

    /// Distribution function of ρ.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= -2.0 {
            return 0.0;
        }
        if z >= 2.0 {
            return 1.0;
        }
        // F(z) = (2/π)∫_{θ_z}^π P(2cosθ) sin²θ dθ with z = 2cos θ_z.
        let theta_z = (0.5 * z).acos();
        let rule = quad::gauss_legendre(64).mapped(theta_z, std::f64::consts::PI);
        (2.0 / std::f64::consts::PI) * rule.apply(|t| self.p(2.0 * t.cos()) * t.sin().powi(2))
    }
}

pub fn eval_density(e: &EquilibriumData, x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        e.p(x) * (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Semicircle density on `[-2, 2]`.
pub fn rho_sc(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Semicircle distribution function.
pub fn cdf_sc(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let t = (0.5 * x).asin();
    0.5 + (t + 0.5 * (2.0 * t).sin()) / std::f64::consts::PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecenteringCoeffs {
    pub c1: f64,
    pub c2: f64,
}

/// `c₁ = π⁻¹∫h′/X^{1/2}`, `c₂ = π⁻¹∫λh′/(2X^{1/2})` on `[-2, 2]`.
pub fn recentering_coeffs(_e: &EquilibriumData, h: &SmoothFn) -> RecenteringCoeffs {
    let rule = quad::chebyshev_first(-2.0, 2.0, 256);
    let pi = std::f64::consts::PI;
    RecenteringCoeffs {
        c1: rule.apply(|x| h.deriv(x)) / pi,
        c2: rule.apply(|x| x * h.deriv(x)) / (2.0 * pi),
    }
}
