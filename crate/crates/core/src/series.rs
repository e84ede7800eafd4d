//! Truncated real power series `Σ_{k<len} a_k x^k`.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<f64>);

impl Series {
    pub fn zeros(len: usize) -> Self {
        Series(vec![0.0; len])
    }

    pub fn constant(c: f64, len: usize) -> Self {
        let mut s = Self::zeros(len);
        s.0[0] = c;
        s
    }

    /// `c0 + c1·x`, truncated to `len` terms.
    pub fn linear(c0: f64, c1: f64, len: usize) -> Self {
        let mut s = Self::constant(c0, len);
        if len > 1 {
            s.0[1] = c1;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, c: f64) -> Series {
        Series(self.0.iter().map(|a| a * c).collect())
    }

    /// Multiplies by `x`, dropping the term that falls off the end.
    pub fn shift_up(&self) -> Series {
        let mut v = vec![0.0; self.len()];
        v[1..].copy_from_slice(&self.0[..self.len() - 1]);
        Series(v)
    }

    /// `f^α` for `f_0 > 0`, by the J. C. P. Miller recurrence.
    pub fn powf(&self, alpha: f64) -> Series {
        let f = &self.0;
        let n = f.len();
        let mut g = vec![0.0; n];
        g[0] = f[0].powf(alpha);
        for k in 1..n {
            let s: f64 = (1..=k)
                .map(|j| ((alpha + 1.0) * j as f64 - k as f64) * f[j] * g[k - j])
                .sum();
            g[k] = s / (k as f64 * f[0]);
        }
        Series(g)
    }

    pub fn recip(&self) -> Series {
        let f = &self.0;
        let n = f.len();
        let mut g = vec![0.0; n];
        g[0] = 1.0 / f[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| f[j] * g[k - j]).sum();
            g[k] = -s / f[0];
        }
        Series(g)
    }

    /// `Σ_j p_j · self^j` for a series with zero constant term (Horner).
    pub fn compose_into(&self, poly: &[f64]) -> Series {
        let n = self.len();
        let mut acc = Series::zeros(n);
        for &p in poly.iter().rev() {
            acc = &acc * self;
            acc.0[0] += p;
        }
        acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        let mut out = vec![0.0; n];
        for (i, &a) in self.0.iter().enumerate().take(n) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.0.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        Series(out)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        Series(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        Series(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}
