//! Confining potentials, the one-cut support search and the affine change
//! that moves the support to `[-2, 2]`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::horner;
use crate::quad;

/// Nodes of the Chebyshev–Gauss rule used for the moment conditions.
pub const SUPPORT_NODES: usize = 256;
/// Default half-width ε of the analyticity margin σ_ε.
pub const DEFAULT_EPSILON: f64 = 0.2;

/// A potential given by user code, analytic in a strip around the real axis.
pub trait AnalyticPotential: Send + Sync {
    fn v(&self, z: Complex64) -> Complex64;
    fn dv(&self, z: Complex64) -> Complex64;
    fn d2v(&self, z: Complex64) -> Complex64;
}

/// Closed-form tag of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    Gaussian,
    EvenQuartic { g: f64 },
    Polynomial { coeffs: Vec<f64> },
    UserAnalytic { label: String },
}

/// Description from which [`make_potential`] builds a [`Potential`].
#[derive(Clone)]
pub enum PotentialSpec {
    Gaussian,
    /// `V = ((1−3g)/2)λ² + (g/4)λ⁴`, whose support is `[-2, 2]` for every `g`.
    EvenQuartic { g: f64 },
    /// Ascending monomial coefficients of `V`.
    Polynomial { coeffs: Vec<f64> },
    UserAnalytic { label: String, f: Arc<dyn AnalyticPotential>, strip: f64 },
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Gaussian => write!(f, "Gaussian"),
            PotentialSpec::EvenQuartic { g } => write!(f, "EvenQuartic({g})"),
            PotentialSpec::Polynomial { coeffs } => write!(f, "Polynomial({coeffs:?})"),
            PotentialSpec::UserAnalytic { label, strip, .. } => write!(f, "UserAnalytic({label}, strip {strip})"),
        }
    }
}

#[derive(Clone)]
enum Repr {
    Polynomial { c: Vec<f64>, dc: Vec<f64>, d2c: Vec<f64> },
    Analytic(Arc<dyn AnalyticPotential>),
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    if d.is_empty() {
        vec![0.0]
    } else {
        d
    }
}

fn horner_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

impl Repr {
    fn polynomial(c: Vec<f64>) -> Self {
        let dc = derivative_coeffs(&c);
        let d2c = derivative_coeffs(&dc);
        Repr::Polynomial { c, dc, d2c }
    }
}

/// Immutable evaluator bundle for `V`, `V′`, `V″`.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    repr: Repr,
    /// Half-width of the strip around ℝ in which `V` is analytic.
    pub analyticity_radius: f64,
    /// Window on which confinement was checked and samples are drawn.
    pub domain: (f64, f64),
    /// Recorded ε_c with `V > (1+ε_c) log(1+λ²)` at the domain endpoints.
    pub confinement_margin: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("confinement_margin", &self.confinement_margin)
            .finish()
    }
}

impl Potential {
    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Short identifier stored in sample provenance.
    pub fn id(&self) -> String {
        match &self.kind {
            PotentialKind::Gaussian => "gaussian".into(),
            PotentialKind::EvenQuartic { g } => format!("even-quartic(g={g})"),
            PotentialKind::Polynomial { coeffs } => format!("polynomial{coeffs:?}"),
            PotentialKind::UserAnalytic { label } => format!("user-analytic({label})"),
        }
    }

    /// Ascending monomial coefficients, when `V` is a polynomial.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Polynomial { c, .. } => Some(c),
            Repr::Analytic(_) => None,
        }
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { c, .. } => horner(c, x),
            Repr::Analytic(f) => f.v(Complex64::new(x, 0.0)).re,
        }
    }

    #[inline]
    pub fn dv(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { dc, .. } => horner(dc, x),
            Repr::Analytic(f) => f.dv(Complex64::new(x, 0.0)).re,
        }
    }

    #[inline]
    pub fn d2v(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { d2c, .. } => horner(d2c, x),
            Repr::Analytic(f) => f.d2v(Complex64::new(x, 0.0)).re,
        }
    }

    pub fn dv_complex(&self, z: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Polynomial { dc, .. } => horner_c(dc, z),
            Repr::Analytic(f) => f.dv(z),
        }
    }
}

/// Smallest `V(λ)/log(1+λ²) − 1` over the two domain endpoints.
fn confinement_margin(v: impl Fn(f64) -> f64, domain: (f64, f64)) -> f64 {
    [domain.0, domain.1]
        .iter()
        .map(|&x| v(x) / (1.0 + x * x).ln() - 1.0)
        .fold(f64::INFINITY, f64::min)
}

/// Builds a potential checked for confinement on `[-halfwidth, halfwidth]`.
pub fn make_potential_on(spec: &PotentialSpec, halfwidth: f64) -> Result<Potential> {
    if !(halfwidth.is_finite() && halfwidth > 0.0) {
        return Err(Error::InvalidSpec(format!("domain half-width {halfwidth} must be positive")));
    }
    let (kind, repr, radius) = match spec {
        PotentialSpec::Gaussian => (PotentialKind::Gaussian, Repr::polynomial(vec![0.0, 0.0, 0.5]), f64::INFINITY),
        PotentialSpec::EvenQuartic { g } => {
            if !(g.is_finite() && *g >= 0.0) {
                return Err(Error::InvalidSpec(format!("quartic parameter g = {g} must be finite and ≥ 0")));
            }
            let c = vec![0.0, 0.0, 0.5 * (1.0 - 3.0 * g), 0.0, 0.25 * g];
            (PotentialKind::EvenQuartic { g: *g }, Repr::polynomial(c), f64::INFINITY)
        }
        PotentialSpec::Polynomial { coeffs } => {
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSpec("polynomial coefficients must be finite and non-empty".into()));
            }
            (PotentialKind::Polynomial { coeffs: coeffs.clone() }, Repr::polynomial(coeffs.clone()), f64::INFINITY)
        }
        PotentialSpec::UserAnalytic { label, f, strip } => {
            if !(*strip > 0.0) {
                return Err(Error::InvalidSpec("analyticity strip must be positive".into()));
            }
            (PotentialKind::UserAnalytic { label: label.clone() }, Repr::Analytic(f.clone()), *strip)
        }
    };
    let domain = (-halfwidth, halfwidth);
    let mut pot = Potential { kind, repr, analyticity_radius: radius, domain, confinement_margin: 0.0 };
    let margin = confinement_margin(|x| pot.v(x), domain);
    if !(margin > 0.0) {
        return Err(Error::ConfinementViolation { margin });
    }
    pot.confinement_margin = margin;
    Ok(pot)
}

/// Builds a potential on the default window `σ_{ε/2}` with ε = 0.2.
pub fn make_potential(spec: &PotentialSpec) -> Result<Potential> {
    make_potential_on(spec, 2.0 + 0.5 * DEFAULT_EPSILON)
}

/// Residuals of the two one-cut moment conditions on `[a, b]`:
/// `(1/π)∫V′/√((b−λ)(λ−a))` and `(1/2π)∫λV′/√((b−λ)(λ−a)) − 1`.
pub fn moment_residuals(v: &Potential, a: f64, b: f64) -> (f64, f64) {
    let rule = quad::chebyshev_first(a, b, SUPPORT_NODES);
    let r0 = rule.apply(|x| v.dv(x)) / std::f64::consts::PI;
    let r1 = rule.apply(|x| x * v.dv(x)) / (2.0 * std::f64::consts::PI) - 1.0;
    (r0, r1)
}

/// Solves the moment conditions for the one-cut support `(a, b)` by damped
/// Newton from `(-2, 2)`.
pub fn support_endpoints(v: &Potential) -> Result<(f64, f64)> {
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 200;
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let (mut a, mut b) = (-2.0, 2.0);
    let mut r = moment_residuals(v, a, b);
    let mut stalls = 0;
    for it in 0..MAX_ITER {
        if norm(r) < TOL {
            return Ok((a, b));
        }
        let h = 1e-7 * (b - a);
        let ra_p = moment_residuals(v, a + h, b);
        let ra_m = moment_residuals(v, a - h, b);
        let rb_p = moment_residuals(v, a, b + h);
        let rb_m = moment_residuals(v, a, b - h);
        let j00 = (ra_p.0 - ra_m.0) / (2.0 * h);
        let j10 = (ra_p.1 - ra_m.1) / (2.0 * h);
        let j01 = (rb_p.0 - rb_m.0) / (2.0 * h);
        let j11 = (rb_p.1 - rb_m.1) / (2.0 * h);
        let det = j00 * j11 - j01 * j10;
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::NoConvergence { iterations: it, residual: norm(r) });
        }
        let da = -(j11 * r.0 - j01 * r.1) / det;
        let db = -(-j10 * r.0 + j00 * r.1) / det;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let (na, nb) = (a + t * da, b + t * db);
            if nb - na > 1e-12 && na.is_finite() && nb.is_finite() {
                let nr = moment_residuals(v, na, nb);
                if norm(nr) < norm(r) {
                    a = na;
                    b = nb;
                    r = nr;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            stalls += 1;
            if norm(r) < 1e-10 {
                return Ok((a, b));
            }
            if stalls > 3 {
                return Err(Error::MultiCutSuspected { residual: norm(r) });
            }
        }
    }
    if norm(r) < 1e-10 {
        Ok((a, b))
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: norm(r) })
    }
}

/// `x = scale·(λ − shift)` maps the original support onto `[-2, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineChange {
    pub scale: f64,
    pub shift: f64,
}

impl AffineChange {
    pub const IDENTITY: AffineChange = AffineChange { scale: 1.0, shift: 0.0 };

    pub fn to_normalized(&self, lambda: f64) -> f64 {
        self.scale * (lambda - self.shift)
    }

    pub fn to_original(&self, x: f64) -> f64 {
        self.shift + x / self.scale
    }
}

struct Composed {
    inner: Arc<dyn AnalyticPotential>,
    change: AffineChange,
}

impl AnalyticPotential for Composed {
    fn v(&self, z: Complex64) -> Complex64 {
        self.inner.v(self.change.shift + z / self.change.scale)
    }
    fn dv(&self, z: Complex64) -> Complex64 {
        self.inner.dv(self.change.shift + z / self.change.scale) / self.change.scale
    }
    fn d2v(&self, z: Complex64) -> Complex64 {
        self.inner.d2v(self.change.shift + z / self.change.scale) / (self.change.scale * self.change.scale)
    }
}

/// Polynomial coefficients of `x ↦ p(shift + x·inv)`.
fn compose_affine(c: &[f64], shift: f64, inv: f64) -> Vec<f64> {
    // Horner in the polynomial ring: acc = acc·(shift + inv·x) + c_k.
    let mut acc: Vec<f64> = vec![0.0; c.len()];
    for &ck in c.iter().rev() {
        let mut next = vec![0.0; c.len()];
        for (i, &a) in acc.iter().enumerate() {
            next[i] += a * shift;
            if i + 1 < next.len() {
                next[i + 1] += a * inv;
            }
        }
        next[0] += ck;
        acc = next;
    }
    acc
}

/// Pushes `V` forward under the affine change sending `(a, b)` to `(-2, 2)`.
pub fn normalize_support(v: &Potential, support: (f64, f64)) -> Result<(Potential, AffineChange)> {
    let (a, b) = support;
    if !(b - a >= 1e-12) {
        return Err(Error::DegenerateInterval { width: b - a });
    }
    let change = AffineChange { scale: 4.0 / (b - a), shift: 0.5 * (a + b) };
    if (change.scale - 1.0).abs() < 1e-15 && change.shift.abs() < 1e-15 {
        return Ok((v.clone(), AffineChange::IDENTITY));
    }
    let inv = 1.0 / change.scale;
    let (kind, repr) = match &v.repr {
        Repr::Polynomial { c, .. } => {
            let nc = compose_affine(c, change.shift, inv);
            (PotentialKind::Polynomial { coeffs: nc.clone() }, Repr::polynomial(nc))
        }
        Repr::Analytic(f) => {
            let label = match &v.kind {
                PotentialKind::UserAnalytic { label } => format!("{label}∘affine"),
                other => format!("{other:?}∘affine"),
            };
            (PotentialKind::UserAnalytic { label }, Repr::Analytic(Arc::new(Composed { inner: f.clone(), change })))
        }
    };
    let domain = (change.to_normalized(v.domain.0), change.to_normalized(v.domain.1));
    let mut out = Potential {
        kind,
        repr,
        analyticity_radius: v.analyticity_radius * change.scale,
        domain,
        confinement_margin: 0.0,
    };
    out.confinement_margin = confinement_margin(|x| out.v(x), domain);
    Ok((out, change))
}
