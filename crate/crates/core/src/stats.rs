//! Small statistics toolkit: moments, Kolmogorov–Smirnov distances,
//! the Shapiro–Wilk test and integrated autocorrelation times.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Mean, variance and their standard errors for i.i.d. data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

/// Moments with standard errors; the variance error uses the fourth
/// central moment so it stays honest for non-Gaussian data.
pub fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let m = mean(x);
    let var = variance(x);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let var_of_var = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    Moments { mean: m, var, se_mean: (var / n).sqrt(), se_var: var_of_var.sqrt() }
}

/// One-sample KS distance of `x` against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS distance sup |F_x − F_y|.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Shapiro–Wilk W statistic and p-value (Royston's approximation),
/// valid for 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { got: n, needed: 3 });
    }
    if n > 5000 {
        return Err(Error::Precondition(format!("Shapiro–Wilk needs n ≤ 5000, got {n}")));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let nf = n as f64;
    let m: Vec<f64> = (1..=n).map(|i| normal.inverse_cdf((i as f64 - 0.375) / (nf + 0.25))).collect();
    let msum: f64 = m.iter().map(|v| v * v).sum();
    let u = 1.0 / nf.sqrt();
    let mut a = vec![0.0; n];
    if n == 3 {
        a[0] = -std::f64::consts::FRAC_1_SQRT_2;
        a[2] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let c1 = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        let c2 = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let an = m[n - 1] / msum.sqrt() + poly(&c1, u);
        let an1 = m[n - 2] / msum.sqrt() + poly(&c2, u);
        let phi = if n > 5 {
            (msum - 2.0 * m[n - 1].powi(2) - 2.0 * m[n - 2].powi(2)) / (1.0 - 2.0 * an * an - 2.0 * an1 * an1)
        } else {
            (msum - 2.0 * m[n - 1].powi(2)) / (1.0 - 2.0 * an * an)
        };
        let k = if n > 5 { 2 } else { 1 };
        for i in 0..n {
            a[i] = m[i] / phi.sqrt();
        }
        a[n - 1] = an;
        a[0] = -an;
        if k == 2 {
            a[n - 2] = an1;
            a[1] = -an1;
        }
    }
    let mu = mean(&s);
    let ss: f64 = s.iter().map(|v| (v - mu) * (v - mu)).sum();
    if ss <= 0.0 {
        return Err(Error::Precondition("Shapiro–Wilk on constant data".into()));
    }
    let num: f64 = a.iter().zip(&s).map(|(ai, xi)| ai * xi).sum();
    let w = (num * num / ss).min(1.0);
    let p = if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - (0.75f64).sqrt().asin());
        p.max(0.0)
    } else if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], nf);
        let mu = poly(&[0.5440, -0.39978, 0.025054, -6.714e-4], nf);
        let sigma = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp();
        let y = -(gamma - (1.0 - w).ln()).ln();
        1.0 - normal.cdf((y - mu) / sigma)
    } else {
        let ln = nf.ln();
        let mu = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln);
        let sigma = poly(&[-0.4803, -0.082676, 0.0030302], ln).exp();
        1.0 - normal.cdf(((1.0 - w).ln() - mu) / sigma)
    };
    Ok((w, p))
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (c = 6). Returns 1 for white noise.
pub fn integrated_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let c0: f64 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c: f64 = (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= 6.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}
