//! Floating-point building blocks: double-double arithmetic for argument
//! reduction and a deterministic compensated reduction.
//!
//! The reduction contract: inputs are split into fixed chunks of
//! [`CHUNK`] terms, each chunk is summed left to right with Neumaier
//! compensation, and chunk partials are combined by a balanced pairwise tree
//! whose shape depends only on the input length. The bits of the result are
//! therefore independent of how many threads computed the chunk partials.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Number of terms per reduction chunk.
pub const CHUNK: usize = 4096;

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// `num / den` correctly rounded to about 106 bits.
    #[inline]
    pub fn ratio(num: f64, den: f64) -> Self {
        let q = num / den;
        let r = -q.mul_add(den, -num);
        let (hi, lo) = quick_two_sum(q, r / den);
        Self { hi, lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    #[inline]
    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Self {
        let q = self.hi / b;
        let (p, e) = two_prod(q, b);
        let r = ((self.hi - p) - e + self.lo) / b;
        let (hi, lo) = quick_two_sum(q, r);
        Self { hi, lo }
    }

    /// Fractional part in `[0, 1)`.
    #[inline]
    pub fn frac(self) -> Self {
        let k = self.hi.floor();
        let (mut hi, mut lo) = two_sum(self.hi - k, self.lo);
        if hi < 0.0 || (hi == 0.0 && lo < 0.0) {
            let r = two_sum(hi + 1.0, lo);
            hi = r.0;
            lo = r.1;
        } else if hi >= 1.0 {
            let r = two_sum(hi - 1.0, lo);
            hi = r.0;
            lo = r.1;
        }
        if hi >= 1.0 {
            // lo pushed the rounded sum onto 1
            return Self::ZERO;
        }
        Self { hi, lo }
    }
}

/// `e(y) = exp(2 pi i y)` for `y` already reduced to `[0, 1)`.
#[inline]
pub fn unit_circle(y: f64) -> Complex64 {
    let centred = if y > 0.5 { y - 1.0 } else { y };
    let (s, c) = (TAU * centred).sin_cos();
    Complex64::new(c, s)
}

/// `e(y)` for arbitrary real `y`.
#[inline]
pub fn expi(y: f64) -> Complex64 {
    unit_circle(y - y.floor())
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn merge(mut self, other: Self) -> Self {
        self.add(other.sum);
        self.comp += other.comp;
        self
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ComplexAcc {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexAcc {
    fn merge(self, other: Self) -> Self {
        Self {
            re: self.re.merge(other.re),
            im: self.im.merge(other.im),
        }
    }
}

fn tree_combine<T: Copy>(parts: &[T], merge: &impl Fn(T, T) -> T, zero: T) -> T {
    match parts.len() {
        0 => zero,
        1 => parts[0],
        n => {
            let mid = n.div_ceil(2);
            merge(
                tree_combine(&parts[..mid], merge, zero),
                tree_combine(&parts[mid..], merge, zero),
            )
        }
    }
}

fn chunk_ranges(len: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
    (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(len))
}

/// Deterministic sum of `term(i)` for `i in 0..len`.
pub fn reduce_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let parts: Vec<CompensatedSum> = chunk_ranges(len)
        .map(|r| {
            let mut acc = CompensatedSum::new();
            for i in r {
                acc.add(term(i));
            }
            acc
        })
        .collect();
    tree_combine(&parts, &|a, b| a.merge(b), CompensatedSum::new()).value()
}

/// Deterministic complex sum of `term(i)` for `i in 0..len`.
pub fn reduce_sum_complex<F>(len: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let parts: Vec<ComplexAcc> = chunk_ranges(len)
        .map(|r| {
            let mut acc = ComplexAcc::default();
            for i in r {
                let z = term(i);
                acc.re.add(z.re);
                acc.im.add(z.im);
            }
            acc
        })
        .collect();
    let total = tree_combine(&parts, &|a, b| a.merge(b), ComplexAcc::default());
    Complex64::new(total.re.value(), total.im.value())
}

/// Column sums of the `len x width` array whose row `i` is written by
/// `row(i, buf)`, each column reduced as in [`reduce_sum_complex`].
pub fn reduce_sum_complex_rows<F>(len: usize, width: usize, row: F) -> Vec<Complex64>
where
    F: Fn(usize, &mut [Complex64]) + Sync,
{
    let parts: Vec<Vec<ComplexAcc>> = chunk_ranges(len)
        .map(|r| {
            let mut acc = vec![ComplexAcc::default(); width];
            let mut buf = vec![Complex64::new(0.0, 0.0); width];
            for i in r {
                row(i, &mut buf);
                for (a, z) in acc.iter_mut().zip(&buf) {
                    a.re.add(z.re);
                    a.im.add(z.im);
                }
            }
            acc
        })
        .collect();
    (0..width)
        .map(|k| {
            let column: Vec<ComplexAcc> = parts.iter().map(|p| p[k]).collect();
            let total = tree_combine(&column, &|a, b| a.merge(b), ComplexAcc::default());
            Complex64::new(total.re.value(), total.im.value())
        })
        .collect()
}

/// Deterministic sum of a slice.
pub fn sum_slice(values: &[f64]) -> f64 {
    reduce_sum(values.len(), |i| values[i])
}
