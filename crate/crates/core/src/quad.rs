//! Classical Gaussian rules.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// A quadrature rule as parallel node and weight vectors.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affinely maps a rule on `[-1, 1]` with unit weight to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        Rule {
            nodes: self.nodes.iter().map(|t| m + h * t).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
        }
    }
}

/// Gauss–Legendre on `[-1, 1]`, ascending nodes, via Newton on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * x * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (x * p1 - p2) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite for the weight `e^{-x²}` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> Rule {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64 / 2.0).sqrt();
        jac[(i, i - 1)] = off;
        jac[(i - 1, i)] = off;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Chebyshev–Gauss rule for `∫_a^b f(x) dx / √((b−x)(x−a))`; nodes ascend.
pub fn chebyshev_first(a: f64, b: f64, n: usize) -> Rule {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    Rule {
        nodes: (0..n)
            .rev()
            .map(|j| m + h * ((j as f64 + 0.5) * PI / n as f64).cos())
            .collect(),
        weights: vec![PI / n as f64; n],
    }
}

/// Chebyshev–Gauss rule of the second kind for `∫_a^b f(x) √((b−x)(x−a)) dx`.
pub fn chebyshev_second(a: f64, b: f64, n: usize) -> Rule {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let step = PI / (n + 1) as f64;
    let (nodes, weights) = (1..=n)
        .rev()
        .map(|j| {
            let th = j as f64 * step;
            (m + h * th.cos(), h * h * step * th.sin().powi(2))
        })
        .unzip();
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_exact_for_high_degree() {
        let r = gauss_legendre(20);
        assert!((r.apply(|x| x.powi(38)) - 2.0 / 39.0).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let r96 = gauss_legendre(96);
        assert!((r96.apply(f64::exp) - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(30);
        assert!((r.apply(|_| 1.0) - PI.sqrt()).abs() < 1e-12);
        assert!((r.apply(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-12);
        assert!((r.apply(|x| (0.7 * x).exp()) - PI.sqrt() * (0.49f64 / 4.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_rules_on_semicircle_interval() {
        let r1 = chebyshev_first(-2.0, 2.0, 64);
        assert!((r1.apply(|x| x * x) - 2.0 * PI).abs() < 1e-12);
        let r2 = chebyshev_second(-2.0, 2.0, 64);
        assert!((r2.apply(|_| 1.0) - 2.0 * PI).abs() < 1e-12);
        assert!((r2.apply(|x| x * x) / (2.0 * PI) - 1.0).abs() < 1e-12);
    }
}
