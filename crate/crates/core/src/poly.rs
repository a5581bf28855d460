//! Real polynomials on the unit interval.

use serde::{Deserialize, Serialize};

use crate::numeric::DoubleDouble;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Smallest absolute value attained on the interval.
    pub fn min_abs(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `s * self + shift`.
    pub fn affine(&self, s: f64, shift: f64) -> Self {
        let a = s * self.lo + shift;
        let b = s * self.hi + shift;
        Self::new(a.min(b), a.max(b))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

/// Polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The identity `x`.
    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    pub fn monomial(degree: usize) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[degree] = 1.0;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc.mul_add(x, c))
    }

    pub fn eval_dd(&self, x: DoubleDouble) -> DoubleDouble {
        self.coeffs
            .iter()
            .rev()
            .fold(DoubleDouble::ZERO, |acc, &c| acc.mul(x).add_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        Self::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &c| acc.mul(inner).add(&Self::constant(c)))
    }

    /// Exact `int_0^1 p(x) dx`.
    pub fn integral_unit(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / (i + 1) as f64)
            .sum()
    }

    fn bernstein(&self) -> Vec<f64> {
        let n = self.degree();
        if self.is_zero() {
            return vec![0.0];
        }
        // b_k = sum_{i<=k} C(k,i)/C(n,i) a_i
        (0..=n)
            .map(|k| {
                let mut acc = 0.0;
                let mut ratio = 1.0; // C(k,i)/C(n,i) at i = 0
                for i in 0..=k {
                    acc += ratio * self.coeffs[i];
                    ratio *= (k - i) as f64 / (n - i) as f64;
                }
                acc
            })
            .collect()
    }

    /// Enclosure of `p([0,1])` from Bernstein coefficients, refined by
    /// de Casteljau bisection wherever an interior coefficient is extremal.
    pub fn range_unit(&self) -> Interval {
        const MAX_DEPTH: u32 = 24;
        fn refine(b: &[f64], depth: u32) -> Interval {
            let lo = b.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (first, last) = (b[0], b[b.len() - 1]);
            let tight = lo == first.min(last) && hi == first.max(last);
            if tight || depth == 0 {
                return Interval::new(lo, hi);
            }
            let (left, right) = de_casteljau_split(b);
            refine(&left, depth - 1).union(&refine(&right, depth - 1))
        }
        refine(&self.bernstein(), MAX_DEPTH)
    }
}

fn de_casteljau_split(b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    let mut work = b.to_vec();
    let mut left = Vec::with_capacity(n);
    let mut right = vec![0.0; n];
    left.push(work[0]);
    right[n - 1] = work[n - 1];
    for level in 1..n {
        for i in 0..n - level {
            work[i] = 0.5 * (work[i] + work[i + 1]);
        }
        left.push(work[0]);
        right[n - 1 - level] = work[n - 1 - level];
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compose_and_integrate() {
        // (x + x^2/2)^2 integrates to 1/3 + 1/4 + 1/20
        let phi = Polynomial::new(vec![0.0, 1.0, 0.5]);
        let g = Polynomial::monomial(2);
        let h = g.compose(&phi);
        assert!((h.integral_unit() - (1.0 / 3.0 + 0.25 + 0.05)).abs() < 1e-15);
    }

    #[test]
    fn range_is_exact_for_monotone_and_constant() {
        assert_eq!(Polynomial::new(vec![1.0, 1.0]).range_unit(), Interval::new(1.0, 2.0));
        assert_eq!(Polynomial::constant(4.0).range_unit(), Interval::point(4.0));
        assert_eq!(Polynomial::new(vec![2.0, 6.0]).range_unit(), Interval::new(2.0, 8.0));
    }

    #[test]
    fn range_refines_interior_extremum() {
        // 4x(1-x) has max 1 at 1/2; the raw Bernstein hull gives 2
        let p = Polynomial::new(vec![0.0, 4.0, -4.0]);
        let r = p.range_unit();
        assert_eq!(r.lo, 0.0);
        assert!(r.hi >= 1.0 && r.hi < 1.0 + 1e-6);
    }

    proptest! {
        #[test]
        fn range_encloses_samples(c in prop::collection::vec(-5.0f64..5.0, 1..6)) {
            let p = Polynomial::new(c);
            let r = p.range_unit();
            for i in 0..=200 {
                let v = p.eval(i as f64 / 200.0);
                prop_assert!(v >= r.lo - 1e-12 && v <= r.hi + 1e-12);
            }
        }
    }
}
