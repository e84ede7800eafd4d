//! Chebyshev series on an interval and the first-kind Chebyshev grids they
//! are sampled on.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angles `(j + 1/2)π/N`, ordered so the corresponding nodes `cos θ` ascend.
pub fn gauss_angles(n: usize) -> Vec<f64> {
    (0..n)
        .rev()
        .map(|j| (j as f64 + 0.5) * PI / n as f64)
        .collect()
}

/// Truncated Chebyshev expansion `f(x) = Σ c_k T_k(t)` with
/// `t = (2x − a − b)/(b − a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Interpolates `f` at `n` first-kind Chebyshev points of `[a, b]`.
    pub fn interpolate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let angles = gauss_angles(n);
        let values: Vec<f64> = angles
            .iter()
            .map(|th| f(0.5 * (a + b) + 0.5 * (b - a) * th.cos()))
            .collect();
        Self::from_gauss_values(&values, a, b)
    }

    /// Builds the interpolant from values at the ascending first-kind nodes
    /// produced by [`ChebGrid::new`] with the same `a`, `b` and length.
    pub fn from_gauss_values(values: &[f64], a: f64, b: f64) -> Self {
        let n = values.len();
        let angles = gauss_angles(n);
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let s: f64 = values
                .iter()
                .zip(&angles)
                .map(|(v, th)| v * (k as f64 * th).cos())
                .sum();
            *c = 2.0 * s / n as f64;
        }
        if let Some(c0) = coeffs.first_mut() {
            *c0 *= 0.5;
        }
        ChebSeries { a, b, coeffs }
    }

    /// Drops trailing coefficients below `tol` relative to the largest one.
    pub fn chopped(mut self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        while self.coeffs.len() > 1 && self.coeffs.last().map_or(false, |c| c.abs() <= tol * scale) {
            self.coeffs.pop();
        }
        self
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = self.to_unit(x);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Clenshaw evaluation at a complex point (analytic continuation).
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let t = (2.0 * z - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn derivative(&self) -> ChebSeries {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        let mut d = vec![0.0; n + 1];
        for k in (0..n - 1).rev() {
            d[k] = d[k + 2] + 2.0 * (k + 1) as f64 * self.coeffs[k + 1];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / (self.b - self.a);
        for c in &mut d {
            *c *= scale;
        }
        ChebSeries { a: self.a, b: self.b, coeffs: d }
    }

    pub fn min_on_grid(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| self.eval(self.a + (self.b - self.a) * i as f64 / (points - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// First-kind Chebyshev points on `[a, b]` with Fejér weights for the
/// unweighted integral `∫_a^b f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebGrid {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n == 0 {
            return Err(Error::DegenerateInterval { width: b - a });
        }
        let half = 0.5 * (b - a);
        let angles = gauss_angles(n);
        let nodes = angles.iter().map(|th| 0.5 * (a + b) + half * th.cos()).collect();
        let weights = angles
            .iter()
            .map(|th| {
                let s: f64 = (1..=n / 2)
                    .map(|k| (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0))
                    .sum();
                half * 2.0 / n as f64 * (1.0 - 2.0 * s)
            })
            .collect();
        Ok(ChebGrid { a, b, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Interpolant through values sampled at this grid's nodes.
    pub fn interpolant(&self, values: &[f64]) -> ChebSeries {
        ChebSeries::from_gauss_values(values, self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_polynomial_exactly() {
        let s = ChebSeries::interpolate(|x| 1.0 + x - 2.0 * x.powi(3), -2.0, 3.0, 12).chopped(1e-14);
        assert_eq!(s.coeffs.len(), 4);
        for &x in &[-2.0, -0.3, 1.7, 3.0] {
            assert!((s.eval(x) - (1.0 + x - 2.0 * x.powi(3))).abs() < 1e-12);
        }
        let d = s.derivative();
        assert!((d.eval(0.5) - (1.0 - 6.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn complex_eval_matches_polynomial() {
        let s = ChebSeries::interpolate(|x| x * x, -2.0, 2.0, 8);
        let z = Complex64::new(1.0, 0.5);
        assert!((s.eval_complex(z) - z * z).norm() < 1e-13);
    }

    #[test]
    fn fejer_weights_integrate_smooth_functions() {
        let g = ChebGrid::new(-2.2, 2.2, 64).unwrap();
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        let exact = 2.0 * 2.2_f64.sin();
        assert!((g.integrate(f64::cos) - exact).abs() < 1e-14);
    }
}
