//! Test-function pairs `(f, fhat)` with `fhat(xi) = int f(x) e(-x xi) dx`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::composite_rule;

/// Radius beyond which the gaussian transform is below 1e-16.
pub const GAUSSIAN_EFFECTIVE_RADIUS: f64 = 3.424_5;

/// Largest probe-grid discrepancy accepted between `f` and the inverse transform of `fhat`.
pub const PAIR_TOLERANCE: f64 = 1e-8;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WindowKind {
    /// `f(x) = C (sin(pi C x)/(pi C x))^2`, `fhat(xi) = max(0, 1 - |xi|/C)`.
    Fejer { c: f64 },
    /// `f(x) = fhat(x) = exp(-pi x^2)`.
    Gaussian,
    Custom { label: String, f: RealFn, fhat: RealFn },
}

/// Serializable description of the built-in windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindowSpec {
    Fejer { c: f64 },
    Gaussian,
}

#[derive(Clone)]
pub struct Window {
    kind: WindowKind,
    f0: f64,
    fhat0: f64,
    support_radius: f64,
    effective_radius: f64,
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Window")
            .field("id", &self.id())
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl Window {
    pub fn fejer(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Window(format!("fejer scale must be positive, got {c}")));
        }
        Self::verified(Self {
            kind: WindowKind::Fejer { c },
            f0: c,
            fhat0: 1.0,
            support_radius: c,
            effective_radius: c,
        })
    }

    pub fn gaussian() -> Self {
        Self::verified(Self {
            kind: WindowKind::Gaussian,
            f0: 1.0,
            fhat0: 1.0,
            support_radius: f64::INFINITY,
            effective_radius: GAUSSIAN_EFFECTIVE_RADIUS,
        })
        .expect("gaussian is self-dual")
    }

    /// A user-supplied pair. `support_radius` may be infinite, in which case
    /// the effective radius is where `|fhat|` first stays below 1e-16.
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fhat: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_radius: f64,
    ) -> Result<Self> {
        if !(support_radius > 0.0) {
            return Err(Error::Window("support radius must be positive".into()));
        }
        let effective_radius = if support_radius.is_finite() {
            support_radius
        } else {
            let mut r = 0.25;
            while r < 1e3 && (fhat(r).abs() >= 1e-16 || fhat(-r).abs() >= 1e-16) {
                r += 0.25;
            }
            r
        };
        let (f0, fhat0) = (f(0.0), fhat(0.0));
        Self::verified(Self {
            kind: WindowKind::Custom { label: label.into(), f: Arc::new(f), fhat: Arc::new(fhat) },
            f0,
            fhat0,
            support_radius,
            effective_radius,
        })
    }

    pub fn from_spec(spec: &WindowSpec) -> Result<Self> {
        match *spec {
            WindowSpec::Fejer { c } => Self::fejer(c),
            WindowSpec::Gaussian => Ok(Self::gaussian()),
        }
    }

    pub fn spec(&self) -> Option<WindowSpec> {
        match self.kind {
            WindowKind::Fejer { c } => Some(WindowSpec::Fejer { c }),
            WindowKind::Gaussian => Some(WindowSpec::Gaussian),
            WindowKind::Custom { .. } => None,
        }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            WindowKind::Fejer { c } => format!("fejer(C={c})"),
            WindowKind::Gaussian => "gaussian".into(),
            WindowKind::Custom { label, .. } => format!("custom({label})"),
        }
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    // Inverse transform of fhat on a probe grid scaled to the support.
    fn verified(self) -> Result<Self> {
        let r = self.effective_radius;
        let rule = composite_rule(-r, r, 64, 16);
        let mut worst: f64 = 0.0;
        for k in -16i32..=16 {
            let x = k as f64 / (4.0 * r);
            let inv: f64 = rule
                .iter()
                .map(|&(xi, w)| w * self.fhat(xi) * (2.0 * std::f64::consts::PI * x * xi).cos())
                .sum();
            worst = worst.max((inv - self.f(x)).abs());
        }
        if worst > PAIR_TOLERANCE {
            return Err(Error::Window(format!(
                "{} is not a Fourier pair: probe error {worst:e}",
                self.id()
            )));
        }
        Ok(self)
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.kind {
            WindowKind::Fejer { c } => {
                let u = std::f64::consts::PI * c * x;
                if u.abs() < 1e-4 {
                    c * (1.0 - u * u / 3.0)
                } else {
                    let s = u.sin() / u;
                    c * s * s
                }
            }
            WindowKind::Gaussian => (-std::f64::consts::PI * x * x).exp(),
            WindowKind::Custom { f, .. } => f(x),
        }
    }

    pub fn fhat(&self, xi: f64) -> f64 {
        match &self.kind {
            WindowKind::Fejer { c } => (1.0 - xi.abs() / c).max(0.0),
            WindowKind::Gaussian => (-std::f64::consts::PI * xi * xi).exp(),
            WindowKind::Custom { fhat, .. } => fhat(xi),
        }
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn fhat0(&self) -> f64 {
        self.fhat0
    }

    /// Radius of `supp fhat`; infinite for the gaussian.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Radius outside which `fhat` is zero or below 1e-16.
    pub fn effective_radius(&self) -> f64 {
        self.effective_radius
    }

    pub fn is_compact(&self) -> bool {
        self.support_radius.is_finite()
    }

    /// Smallest trace-table length covering `fhat(l/n)` for all `l` it reaches.
    pub fn required_ell_max(&self, n: usize) -> usize {
        (self.effective_radius * n as f64).ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_values() {
        let w = Window::fejer(0.8).unwrap();
        assert_eq!(w.f0(), 0.8);
        assert_eq!(w.fhat0(), 1.0);
        assert_eq!(w.support_radius(), 0.8);
        assert_eq!(w.fhat(0.4), 0.5);
        assert_eq!(w.fhat(-1.0), 0.0);
        assert!((w.f(1.25) - 0.0).abs() < 1e-15); // sin(pi) = 0
        assert_eq!(w.required_ell_max(256), 205);
    }

    #[test]
    fn rejects_bad_parameters_and_pairs() {
        assert!(Window::fejer(0.0).is_err());
        assert!(Window::fejer(-1.0).is_err());
        // triangle transform paired with the wrong f
        let bad = Window::custom("bad", |x: f64| (-x * x).exp(), |xi: f64| (1.0 - xi.abs()).max(0.0), 1.0);
        assert!(matches!(bad, Err(Error::Window(_))));
    }

    #[test]
    fn custom_pair_is_accepted() {
        // scaled gaussian: f(x) = exp(-pi x^2 / s^2)/... with s = 2
        let s = 2.0;
        let w = Window::custom(
            "wide",
            move |x: f64| s * (-std::f64::consts::PI * s * s * x * x).exp(),
            move |xi: f64| (-std::f64::consts::PI * xi * xi / (s * s)).exp(),
            f64::INFINITY,
        )
        .unwrap();
        assert!(w.effective_radius() > 6.0 && w.effective_radius() < 8.0);
        assert_eq!(w.f0(), 2.0);
    }

    #[test]
    fn spec_round_trip() {
        let w = Window::from_spec(&WindowSpec::Fejer { c: 3.0 }).unwrap();
        assert_eq!(w.spec(), Some(WindowSpec::Fejer { c: 3.0 }));
        let json = serde_json::to_string(&WindowSpec::Gaussian).unwrap();
        assert_eq!(json, r#"{"kind":"gaussian"}"#);
    }
}
