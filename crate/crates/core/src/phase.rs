//! Classical Hamiltonians `H = Phi(I)` as polyhomogeneous phases and the
//! eigenphase spectra of their quantum maps.
//!
//! A phase is `Phi(x, N) = phi(x) + phi_m1(x)/N + phi_m2(x)/N^2` on the
//! action interval `[0, 1]`. The quantum map at time `t` and Planck
//! parameter `N` has eigenvalues `e(t N Phi(j/N, N))`, `j = 1..=N`, and the
//! spectrum stores their angles rescaled to the circle of circumference `N`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Error, Result};
use crate::numeric::DoubleDouble;
use crate::poly::{Interval, Polynomial};
use crate::quad::gauss_legendre;

/// How many lower-order symbols enter `Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Order {
    Principal,
    First,
    Second,
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        match o {
            Order::Principal => 0,
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Order::Principal),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(domain(format!("truncation order must be 0, 1 or 2, got {v}"))),
        }
    }
}

/// JSON form of a phase: polynomial coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub phi: Vec<f64>,
    #[serde(default)]
    pub phi_m1: Vec<f64>,
    #[serde(default)]
    pub phi_m2: Vec<f64>,
}

/// Polyhomogeneous phase with certified enclosures of `phi'` and `phi''`
/// on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    phi: Polynomial,
    phi_m1: Polynomial,
    phi_m2: Polynomial,
    d1_bounds: Interval,
    d2_bounds: Interval,
}

impl Phase {
    pub fn new(phi: Polynomial, phi_m1: Polynomial, phi_m2: Polynomial) -> Result<Self> {
        if !(phi.is_finite() && phi_m1.is_finite() && phi_m2.is_finite()) {
            return Err(domain("phase coefficients must be finite"));
        }
        let d1 = phi.derivative();
        let d2 = d1.derivative();
        let d1_bounds = d1.range_unit();
        let d2_bounds = d2.range_unit();
        if !(d1_bounds.lo.is_finite() && d1_bounds.hi.is_finite()) {
            return Err(domain("derivative bounds overflow"));
        }
        Ok(Self { phi, phi_m1, phi_m2, d1_bounds, d2_bounds })
    }

    /// Phase with principal symbol only.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(coeffs.to_vec()), Polynomial::zero(), Polynomial::zero())
    }

    pub fn from_spec(spec: &PhaseSpec) -> Result<Self> {
        if spec.phi.is_empty() {
            return Err(domain("phi needs at least one coefficient"));
        }
        Self::new(
            Polynomial::new(spec.phi.clone()),
            Polynomial::new(spec.phi_m1.clone()),
            Polynomial::new(spec.phi_m2.clone()),
        )
    }

    pub fn to_spec(&self) -> PhaseSpec {
        let coeffs = |p: &Polynomial| {
            if p.is_zero() {
                Vec::new()
            } else {
                p.coeffs().to_vec()
            }
        };
        PhaseSpec {
            phi: if self.phi.is_zero() { vec![0.0] } else { coeffs(&self.phi) },
            phi_m1: coeffs(&self.phi_m1),
            phi_m2: coeffs(&self.phi_m2),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PhaseSpec =
            serde_json::from_str(text).map_err(|e| domain(format!("phase JSON: {e}")))?;
        Self::from_spec(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("phase spec serializes")
    }

    pub fn phi(&self) -> &Polynomial {
        &self.phi
    }

    pub fn phi_m1(&self) -> &Polynomial {
        &self.phi_m1
    }

    pub fn phi_m2(&self) -> &Polynomial {
        &self.phi_m2
    }

    pub fn d1_bounds(&self) -> Interval {
        self.d1_bounds
    }

    pub fn d2_bounds(&self) -> Interval {
        self.d2_bounds
    }

    /// Certified lower bound on `|phi'|`, or an error if it may vanish.
    pub fn require_monotone(&self) -> Result<f64> {
        let c = self.d1_bounds.min_abs();
        if c > 0.0 {
            Ok(c)
        } else {
            Err(precondition(format!(
                "|phi'| is not bounded away from zero: phi'([0,1]) in [{}, {}]",
                self.d1_bounds.lo, self.d1_bounds.hi
            )))
        }
    }

    /// Certified lower bound on `|phi''|`, or an error if it may vanish.
    pub fn require_convex(&self) -> Result<f64> {
        let c = self.d2_bounds.min_abs();
        if c > 0.0 {
            Ok(c)
        } else {
            Err(precondition(format!(
                "|phi''| is not bounded away from zero: phi''([0,1]) in [{}, {}]",
                self.d2_bounds.lo, self.d2_bounds.hi
            )))
        }
    }

    /// `Phi(x, n)` truncated at `order`, in plain f64.
    pub fn value(&self, x: f64, n: usize, order: Order) -> f64 {
        let n = n as f64;
        let mut v = self.phi.eval(x);
        if order >= Order::First {
            v += self.phi_m1.eval(x) / n;
        }
        if order >= Order::Second {
            v += self.phi_m2.eval(x) / (n * n);
        }
        v
    }

    /// `Phi(j/n, n)` in double-double precision.
    pub fn value_at_level_dd(&self, j: usize, n: usize, order: Order) -> DoubleDouble {
        let nf = n as f64;
        let x = DoubleDouble::ratio(j as f64, nf);
        let mut v = self.phi.eval_dd(x);
        if order >= Order::First && !self.phi_m1.is_zero() {
            v = v.add(self.phi_m1.eval_dd(x).div_f64(nf));
        }
        if order >= Order::Second && !self.phi_m2.is_zero() {
            v = v.add(self.phi_m2.eval_dd(x).div_f64(nf).div_f64(nf));
        }
        v
    }

    /// Reduced eigenphase angles `frac(t n Phi(j/n, n))` for `j = 1..=n`.
    pub fn eigen_angles(&self, t: f64, n: usize, order: Order) -> Vec<DoubleDouble> {
        let tn = {
            let (hi, lo) = crate::numeric::two_prod(t, n as f64);
            DoubleDouble { hi, lo }
        };
        (1..=n)
            .map(|j| self.value_at_level_dd(j, n, order).mul(tn).frac())
            .collect()
    }
}

/// `Phi(x, n)` truncated at `order`; `x` must lie in `[0, 1]`.
pub fn eval_phase(phase: &Phase, x: f64, n: usize, order: Order) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("x = {x} is outside [0, 1]")));
    }
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    Ok(phase.value(x, n, order))
}

/// Member `alpha * phi + beta * x` of the two-parameter family over a base phase.
#[derive(Debug, Clone, Copy)]
pub struct FamilyPoint<'a> {
    pub alpha: f64,
    pub beta: f64,
    pub base: &'a Phase,
}

/// The phase `x -> alpha phi(x) + beta x`; lower-order symbols scale by
/// `alpha`, derivative bounds follow by interval arithmetic on the base bounds.
pub fn family_phase(point: FamilyPoint<'_>) -> Phase {
    let FamilyPoint { alpha, beta, base } = point;
    let phi = base.phi.scale(alpha).add(&Polynomial::identity().scale(beta));
    Phase {
        phi,
        phi_m1: base.phi_m1.scale(alpha),
        phi_m2: base.phi_m2.scale(alpha),
        d1_bounds: base.d1_bounds.affine(alpha, beta),
        d2_bounds: base.d2_bounds.affine(alpha, 0.0),
    }
}

/// Point `xi in [0, n]` with `phi(j/n) - phi(k/n) = phi'(xi/n) (j - k)/n`.
///
/// The averaged derivative over the segment is integrated with a
/// Gauss–Legendre rule exact for `phi'`, then `phi'` is inverted on the
/// segment by bisection safeguarded Newton iteration.
pub fn mean_value_point(phase: &Phase, j: usize, k: usize, n: usize) -> Result<f64> {
    if n == 0 || j == 0 || k == 0 || j > n || k > n {
        return Err(domain(format!("need 1 <= j, k <= n, got j={j}, k={k}, n={n}")));
    }
    if j == k {
        return Err(domain("mean-value point needs j != k"));
    }
    phase.require_convex()?;
    let d1 = phase.phi.derivative();
    let d2 = d1.derivative();
    let nf = n as f64;
    let (lo, hi) = if j < k { (j as f64 / nf, k as f64 / nf) } else { (k as f64 / nf, j as f64 / nf) };

    let (nodes, weights) = gauss_legendre(d1.degree() / 2 + 1);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let target: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(s, w)| 0.5 * w * d1.eval(mid + half * s))
        .sum();

    let g = |x: f64| d1.eval(x) - target;
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Ok(a * nf);
    }
    if gb == 0.0 {
        return Ok(b * nf);
    }
    let increasing = gb > ga;
    let tol = (1e-13 / nf).max(4.0 * f64::EPSILON);
    let mut x = mid;
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            break;
        }
        if (gx > 0.0) == increasing {
            b = x;
        } else {
            a = x;
        }
        if b - a < tol {
            x = 0.5 * (a + b);
            break;
        }
        let slope = d2.eval(x);
        let step = gx / slope;
        let newton = x - step;
        if slope != 0.0 && newton > a && newton < b {
            x = newton;
            if step.abs() < 0.25 * tol {
                break;
            }
        } else {
            x = 0.5 * (a + b);
        }
    }
    Ok(x * nf)
}

/// Where a spectrum came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMeta {
    pub phase: Option<PhaseSpec>,
    pub order: Option<Order>,
}

/// Eigenphases on the circle `[0, n)` with unit mean spacing, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    t: f64,
    points: Vec<f64>,
    meta: SpectrumMeta,
}

impl Spectrum {
    /// Spectrum from explicit points; they are reduced into `[0, n)` and sorted.
    pub fn from_points(n: usize, points: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(domain("n must be >= 1"));
        }
        if points.len() != n {
            return Err(domain(format!("expected {n} points, got {}", points.len())));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(domain("spectrum points must be finite"));
        }
        let nf = n as f64;
        let mut points: Vec<f64> = points.into_iter().map(|p| wrap(p, nf)).collect();
        points.sort_by(f64::total_cmp);
        Ok(Self { n, t: f64::NAN, points, meta: SpectrumMeta { phase: None, order: None } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn meta(&self) -> &SpectrumMeta {
        &self.meta
    }

    /// Every point shifted by `c` around the circle.
    pub fn rotated(&self, c: f64) -> Self {
        let nf = self.n as f64;
        let mut points: Vec<f64> = self.points.iter().map(|p| wrap(p + c, nf)).collect();
        points.sort_by(f64::total_cmp);
        Self { points, ..self.clone() }
    }
}

fn wrap(p: f64, n: f64) -> f64 {
    let r = p.rem_euclid(n);
    if r >= n {
        0.0
    } else {
        r
    }
}

/// Spectrum of the quantum map `exp(2 pi i t n Phi(I))`:
/// `x_j = n * frac(t n Phi(j/n, n))`, sorted.
pub fn spectrum(phase: &Phase, t: f64, n: usize, order: Order) -> Result<Spectrum> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if !t.is_finite() {
        return Err(domain("t must be finite"));
    }
    let nf = n as f64;
    let mut points: Vec<f64> = phase
        .eigen_angles(t, n, order)
        .into_iter()
        .map(|a| wrap(a.value() * nf, nf))
        .collect();
    points.sort_by(f64::total_cmp);
    Ok(Spectrum {
        n,
        t,
        points,
        meta: SpectrumMeta { phase: Some(phase.to_spec()), order: Some(order) },
    })
}
