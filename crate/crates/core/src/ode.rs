//! Adaptive scalar integrator: 4-stage Gauss–Legendre implicit Runge–Kutta
//! (order 8) with step-doubling error control.

use crate::error::{Error, Result};
use crate::quad;

const STAGES: usize = 4;

struct Tableau {
    a: [[f64; STAGES]; STAGES],
    b: [f64; STAGES],
    c: [f64; STAGES],
}

impl Tableau {
    fn gauss() -> Self {
        let rule = quad::gauss_legendre(STAGES);
        let mut c = [0.0; STAGES];
        let mut b = [0.0; STAGES];
        for i in 0..STAGES {
            c[i] = 0.5 * (1.0 + rule.nodes[i]);
            b[i] = 0.5 * rule.weights[i];
        }
        let lagrange = |j: usize, s: f64| {
            (0..STAGES).filter(|&m| m != j).map(|m| (s - c[m]) / (c[j] - c[m])).product::<f64>()
        };
        let mut a = [[0.0; STAGES]; STAGES];
        for i in 0..STAGES {
            let sub = rule.mapped(0.0, c[i]);
            for j in 0..STAGES {
                a[i][j] = sub.apply(|s| lagrange(j, s));
            }
        }
        Tableau { a, b, c }
    }
}

/// Result of a single step, `None` if the stage iteration diverged.
fn step(tab: &Tableau, f: &dyn Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> Option<f64> {
    let mut k = [f(t, y); STAGES];
    for _ in 0..100 {
        let mut next = [0.0; STAGES];
        for i in 0..STAGES {
            let yi = y + h * (0..STAGES).map(|j| tab.a[i][j] * k[j]).sum::<f64>();
            next[i] = f(t + tab.c[i] * h, yi);
        }
        let diff = (0..STAGES).map(|i| (next[i] - k[i]).abs()).fold(0.0, f64::max);
        let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
        k = next;
        if !diff.is_finite() {
            return None;
        }
        if diff <= 1e-15 * scale {
            break;
        }
    }
    let y1 = y + h * (0..STAGES).map(|i| tab.b[i] * k[i]).sum::<f64>();
    y1.is_finite().then_some(y1)
}

/// Integrates `y′ = f(t, y)` from `(t0, y0)` and returns `y` at each target.
/// Targets must be monotone and lie on one side of `t0`.
pub fn integrate(f: &dyn Fn(f64, f64) -> f64, t0: f64, y0: f64, targets: &[f64], tol: f64) -> Result<Vec<f64>> {
    let tab = Tableau::gauss();
    let mut out = Vec::with_capacity(targets.len());
    let (mut t, mut y) = (t0, y0);
    let span = targets.iter().map(|s| (s - t0).abs()).fold(0.0, f64::max);
    let mut h = (span / 8.0).max(1e-3);
    let min_h = 1e-12 * span.max(1.0);
    for &target in targets {
        let dir = (target - t).signum();
        if dir != 0.0 && (target - t0).signum() != (targets[0] - t0).signum() {
            return Err(Error::OdeFailure("targets are not monotone".into()));
        }
        while (target - t).abs() > 1e-15 * (1.0 + target.abs()) {
            let hh = h.min((target - t).abs()) * dir;
            let full = step(&tab, f, t, y, hh);
            let half = step(&tab, f, t, y, 0.5 * hh).and_then(|ym| step(&tab, f, t + 0.5 * hh, ym, 0.5 * hh));
            match (full, half) {
                (Some(a), Some(b)) => {
                    let err = (b - a).abs() / 255.0;
                    let allowed = tol * b.abs().max(1.0);
                    if err <= allowed {
                        t += hh;
                        y = b + (b - a) / 255.0;
                        let grow = if err == 0.0 { 2.0 } else { (0.9 * (allowed / err).powf(1.0 / 9.0)).clamp(0.2, 2.0) };
                        h = hh.abs() * grow;
                    } else {
                        h = hh.abs() * (0.9 * (allowed / err).powf(1.0 / 9.0)).clamp(0.1, 0.9);
                    }
                }
                _ => h = hh.abs() * 0.25,
            }
            if h < min_h {
                return Err(Error::OdeFailure(format!("step size underflow near t = {t}")));
            }
        }
        t = target;
        out.push(y);
    }
    Ok(out)
}
