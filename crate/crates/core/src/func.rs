//! Test functions carrying their own derivative.

use std::fmt;
use std::sync::Arc;

use crate::cheb::ChebSeries;
use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function together with its derivative.
#[derive(Clone)]
pub struct SmoothFn {
    label: String,
    f: RealFn,
    df: RealFn,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn").field("label", &self.label).finish()
    }
}

impl SmoothFn {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFn { label: label.into(), f: Arc::new(f), df: Arc::new(df) }
    }

    /// `Σ c_k x^k` with ascending coefficients.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let dc: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        let label = format!("poly{:?}", coeffs);
        SmoothFn::new(label, move |x| horner(&c, x), move |x| horner(&dc, x))
    }

    pub fn constant(c: f64) -> Self {
        SmoothFn::new(format!("const({c})"), move |_| c, |_| 0.0)
    }

    /// `T_k(x/2)`, the Chebyshev mode adapted to `[-2, 2]`.
    pub fn chebyshev_mode(k: usize) -> Self {
        let kf = k as f64;
        SmoothFn::new(
            format!("T{k}(x/2)"),
            move |x: f64| {
                let t = (0.5 * x).clamp(-1.0, 1.0);
                (kf * t.acos()).cos()
            },
            move |x: f64| {
                if k == 0 {
                    return 0.0;
                }
                let t = (0.5 * x).clamp(-1.0, 1.0);
                let th = t.acos();
                let s = th.sin();
                if s.abs() < 1e-12 {
                    // T_k'(±1) = (±1)^{k+1} k²
                    let sign = if t > 0.0 || k % 2 == 1 { 1.0 } else { -1.0 };
                    0.5 * sign * kf * kf
                } else {
                    0.5 * kf * (kf * th).sin() / s
                }
            },
        )
    }

    pub fn from_cheb(label: impl Into<String>, s: ChebSeries) -> Self {
        let d = s.derivative();
        SmoothFn::new(label, move |x| s.eval(x), move |x| d.eval(x))
    }

    /// Derivative taken spectrally from a Chebyshev interpolant on `[a, b]`.
    pub fn numeric(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static, a: f64, b: f64) -> Self {
        let s = ChebSeries::interpolate(&f, a, b, 96).chopped(1e-16);
        let d = s.derivative();
        SmoothFn::new(label, f, move |x| d.eval(x))
    }

    /// Named functions accepted in run configurations.
    pub fn named(name: &str) -> Result<Self> {
        let f = match name {
            "x" => SmoothFn::polynomial(&[0.0, 1.0]),
            "x^2" => SmoothFn::polynomial(&[0.0, 0.0, 1.0]),
            "x^3" => SmoothFn::polynomial(&[0.0, 0.0, 0.0, 1.0]),
            "x^4" => SmoothFn::polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0]),
            "cos" => SmoothFn::new("cos", f64::cos, |x| -x.sin()),
            "sin" => SmoothFn::new("sin", f64::sin, f64::cos),
            "exp_half" => SmoothFn::new("exp_half", |x| (0.5 * x).exp(), |x| 0.5 * (0.5 * x).exp()),
            "t3" => SmoothFn::chebyshev_mode(3),
            other => return Err(Error::InvalidSpec(format!("unknown test function '{other}'"))),
        };
        Ok(f.with_label(name))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.df)(x)
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_mode_matches_polynomial() {
        // T3(x/2) = 4(x/2)^3 - 3(x/2) = x^3/2 - 3x/2
        let t3 = SmoothFn::chebyshev_mode(3);
        for &x in &[-1.9, -0.4, 0.0, 1.3] {
            assert!((t3.value(x) - (0.5 * x.powi(3) - 1.5 * x)).abs() < 1e-13);
            assert!((t3.deriv(x) - (1.5 * x * x - 1.5)).abs() < 1e-12);
        }
        assert!((t3.deriv(2.0) - 4.5).abs() < 1e-12);
        assert!((t3.deriv(-2.0) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn numeric_derivative_is_spectral() {
        let f = SmoothFn::numeric("exp", f64::exp, -2.2, 2.2);
        assert!((f.deriv(0.3) - 0.3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(SmoothFn::named("tan").is_err());
    }
}
