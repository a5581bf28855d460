//! Exponential sums `S_t(N, l) = sum_j e(t l N Phi(j/N, N))`, exact
//! quadratic Gauss sum magnitudes, and closed-form time averages of
//! `|S_t|^2`.

use std::io::Write;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, precondition, Result};
use crate::numeric::{reduce_sum, reduce_sum_complex, reduce_sum_complex_rows, unit_circle, DoubleDouble};
use crate::phase::{Order, Phase, Spectrum};

/// `sum_j e(l * angle_j)` with each product reduced mod 1 in double-double.
pub fn sum_over_angles(angles: &[DoubleDouble], ell: i64) -> Complex64 {
    if ell == 0 {
        return Complex64::new(angles.len() as f64, 0.0);
    }
    let l = ell as f64;
    reduce_sum_complex(angles.len(), |j| unit_circle(angles[j].mul_f64(l).frac().hi))
}

/// `S_t(n, ell)` for the phase truncated at `order`.
pub fn exp_sum(phase: &Phase, t: f64, n: usize, ell: i64, order: Order) -> Result<Complex64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    Ok(sum_over_angles(&phase.eigen_angles(t, n, order), ell))
}

/// Consecutive frequencies sharing one exact argument reduction in a trace table.
pub const TRACE_BLOCK: usize = 32;

/// Traces `Tr U^l = S_t(n, l)` for `l = 0..=ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub n: usize,
    pub t: f64,
    pub ell_max: usize,
    pub values: Vec<Complex64>,
}

#[derive(Serialize)]
struct TraceRow {
    ell: usize,
    re: f64,
    im: f64,
    abs2: f64,
}

impl TraceTable {
    // Blocks of TRACE_BLOCK consecutive l: e(l0 theta) is reduced exactly,
    // then advanced by repeated multiplication with e(theta).
    fn from_angles(angles: &[DoubleDouble], n: usize, t: f64, ell_max: usize) -> Self {
        let steps: Vec<Complex64> = angles.iter().map(|a| unit_circle(a.hi)).collect();
        let blocks = (ell_max + 1).div_ceil(TRACE_BLOCK);
        let values = (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let l0 = b * TRACE_BLOCK;
                let width = TRACE_BLOCK.min(ell_max + 1 - l0);
                reduce_sum_complex_rows(angles.len(), width, |j, row| {
                    let mut z = unit_circle(angles[j].mul_f64(l0 as f64).frac().hi);
                    for slot in row.iter_mut() {
                        *slot = z;
                        z *= steps[j];
                    }
                })
            })
            .collect();
        Self { n, t, ell_max, values }
    }

    /// Traces `sum_j e(l x_j / n)` of an arbitrary spectrum.
    pub fn from_spectrum(spec: &Spectrum, ell_max: usize) -> Self {
        let nf = spec.n() as f64;
        let angles: Vec<DoubleDouble> =
            spec.points().iter().map(|&x| DoubleDouble::ratio(x, nf)).collect();
        Self::from_angles(&angles, spec.n(), spec.t(), ell_max)
    }

    /// `|Tr U^l|^2` for any integer `l`, using conjugate symmetry.
    pub fn abs2(&self, ell: i64) -> f64 {
        self.values[ell.unsigned_abs() as usize].norm_sqr()
    }

    /// CSV with columns `ell,re,im,abs2`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (ell, v) in self.values.iter().enumerate() {
            w.serialize(TraceRow { ell, re: v.re, im: v.im, abs2: v.norm_sqr() })
                .map_err(std::io::Error::other)?;
        }
        w.flush()
    }
}

/// Traces of the quantum map for `l = 0..=ell_max`, parallel over `l`.
pub fn trace_table(
    phase: &Phase,
    t: f64,
    n: usize,
    ell_max: usize,
    order: Order,
) -> Result<TraceTable> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    let angles = phase.eigen_angles(t, n, order);
    Ok(TraceTable::from_angles(&angles, n, t, ell_max))
}

/// `|G(l, 0; n)|` for the complete quadratic Gauss sum `sum_{j=1}^n e(l j^2 / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussMagnitude {
    pub magnitude: f64,
    /// `gcd(l, n)`.
    pub gcd_factor: u64,
}

impl GaussMagnitude {
    /// `|G|^2` as an exact integer.
    pub fn squared(&self, n: u64) -> u64 {
        let g = self.gcd_factor;
        let r = n / g;
        g * g * reduced_square(r)
    }
}

fn reduced_square(r: u64) -> u64 {
    match r % 4 {
        1 | 3 => r,
        0 => 2 * r,
        _ => 0,
    }
}

/// Magnitude of `G(l, 0; n)` from the residue of `n / gcd(l, n)` mod 4.
pub fn gauss_sum_exact(ell: u64, n: u64) -> Result<GaussMagnitude> {
    if ell == 0 || n == 0 {
        return Err(domain("gauss_sum_exact needs l >= 1 and n >= 1"));
    }
    let g = ell.gcd(&n);
    let r = n / g;
    let magnitude = g as f64 * (reduced_square(r) as f64).sqrt();
    Ok(GaussMagnitude { magnitude, gcd_factor: g })
}

/// Closed-form time average of `|S_t(n, l)|^2` and its large-sieve envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HilbertAverage {
    /// `(1/(b-a)) int_a^b |S_t|^2 dt`.
    pub average: f64,
    /// `n + 1.5 sum_j (1/delta_j) / (b - a)`; infinite when two frequencies coincide.
    pub bound: f64,
    /// `n - 1.5 sum_j (1/delta_j) / (b - a)`.
    pub lower_bound: f64,
}

/// Exact `(1/(b-a)) int_a^b |S_t(n, l)|^2 dt` with `mu_j = l n Phi(j/n, n)`.
pub fn hilbert_average(
    phase: &Phase,
    n: usize,
    ell: i64,
    a: f64,
    b: f64,
    order: Order,
) -> Result<HilbertAverage> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if ell == 0 {
        return Err(domain("l must be nonzero"));
    }
    if !(a < b) {
        return Err(domain(format!("need a < b, got [{a}, {b}]")));
    }
    phase.require_monotone()?;
    let nf = n as f64;
    let scale = ell as f64 * nf;
    let mu: Vec<f64> = (1..=n).map(|j| scale * phase.value(j as f64 / nf, n, order)).collect();
    let len = b - a;

    // sum over ordered pairs j != k of avg e((mu_j - mu_k) t)
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            reduce_sum(n - j - 1, |i| {
                let d = mu[j] - mu[j + 1 + i];
                if d == 0.0 {
                    2.0
                } else {
                    let sb = (2.0 * std::f64::consts::PI * (b * d).rem_euclid(1.0)).sin();
                    let sa = (2.0 * std::f64::consts::PI * (a * d).rem_euclid(1.0)).sin();
                    (sb - sa) / (std::f64::consts::PI * d * len)
                }
            })
        })
        .collect();
    let average = nf + crate::numeric::sum_slice(&rows);

    let mut sorted = mu.clone();
    sorted.sort_by(f64::total_cmp);
    let mut inv_gap = 0.0;
    let mut coincident = false;
    for i in 0..n {
        if n == 1 {
            break;
        }
        let left = if i > 0 { sorted[i] - sorted[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { sorted[i + 1] - sorted[i] } else { f64::INFINITY };
        let delta = left.min(right);
        if delta == 0.0 {
            coincident = true;
        } else {
            inv_gap += 1.0 / delta;
        }
    }
    let slack = 1.5 * inv_gap / len;
    let (bound, lower_bound) = if coincident {
        (f64::INFINITY, f64::NEG_INFINITY)
    } else {
        (nf + slack, nf - slack)
    };
    Ok(HilbertAverage { average, bound, lower_bound })
}

/// Precondition helper shared by the statistics: the table must reach `needed`.
pub(crate) fn require_ell_max(table: &TraceTable, needed: usize) -> Result<()> {
    if table.ell_max < needed {
        Err(precondition(format!(
            "trace table stops at l = {} but the window needs l up to {needed}",
            table.ell_max
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_gauss(ell: u64, n: u64) -> Complex64 {
        (1..=n)
            .map(|j| {
                let r = (ell as u128 * (j as u128) * (j as u128)) % n as u128;
                crate::numeric::expi(r as f64 / n as f64)
            })
            .sum()
    }

    #[test]
    fn zero_frequency_is_n() {
        let p = Phase::polynomial(&[0.1, 1.0, 0.5]).unwrap();
        assert_eq!(exp_sum(&p, 1.3, 17, 0, Order::Second).unwrap(), Complex64::new(17.0, 0.0));
    }

    #[test]
    fn quadratic_sum_at_five() {
        let p = Phase::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let s = exp_sum(&p, 1.0, 5, 1, Order::Principal).unwrap();
        assert!((s.norm() - 5f64.sqrt()).abs() < 1e-12);
        assert!((s - direct_gauss(1, 5)).norm() < 1e-12);
    }

    #[test]
    fn constant_phase_sum() {
        let c = 0.137;
        let p = Phase::polynomial(&[c]).unwrap();
        let (t, n, ell) = (0.71, 9usize, 3i64);
        let s = exp_sum(&p, t, n, ell, Order::Principal).unwrap();
        let expected = crate::numeric::expi(t * ell as f64 * n as f64 * c) * n as f64;
        assert!((s - expected).norm() < 1e-12);
    }

    #[test]
    fn trace_table_matches_exact_sums() {
        let p = Phase::polynomial(&[0.0, 1.0, 0.5, -0.2]).unwrap();
        let n = 300;
        let table = trace_table(&p, 1.37, n, 1000, Order::Principal).unwrap();
        for ell in (0..=1000).step_by(7) {
            let exact = exp_sum(&p, 1.37, n, ell as i64, Order::Principal).unwrap();
            assert!((table.values[ell] - exact).norm() < 1e-12 * n as f64, "l={ell}");
        }
    }

    #[test]
    fn trace_table_examples() {
        let p = Phase::polynomial(&[0.3, 1.0, 0.25]).unwrap();
        let single = trace_table(&p, 0.8, 1, 5, Order::Principal).unwrap();
        for v in &single.values {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }

        let lin = Phase::polynomial(&[0.0, 1.0]).unwrap();
        let table = trace_table(&lin, 0.25, 4, 4, Order::Principal).unwrap();
        let expected = [4.0, 0.0, 0.0, 0.0, 4.0];
        for (v, e) in table.values.iter().zip(expected) {
            assert!((v - Complex64::new(e, 0.0)).norm() < 1e-12, "{v}");
        }

        let q = Phase::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let t2 = trace_table(&q, 1.0, 2, 1, Order::Principal).unwrap();
        assert!(t2.values[1].norm() < 1e-12);
    }

    #[test]
    fn gauss_table_examples() {
        let m = |l, n| gauss_sum_exact(l, n).unwrap();
        assert!((m(1, 5).magnitude - 5f64.sqrt()).abs() < 1e-15);
        assert!((m(1, 4).magnitude - 8f64.sqrt()).abs() < 1e-15);
        assert!((m(2, 6).magnitude - 2.0 * 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(m(2, 6).gcd_factor, 2);
        assert_eq!(m(3, 2).magnitude, 0.0);
        assert_eq!(m(2, 6).squared(6), 12);
        assert!(gauss_sum_exact(0, 3).is_err());
    }

    #[test]
    fn gauss_sum_agrees_with_direct_evaluation() {
        for n in 1..=96u64 {
            for ell in 1..=24u64 {
                let direct = direct_gauss(ell, n).norm();
                let exact = gauss_sum_exact(ell, n).unwrap().magnitude;
                assert!((direct - exact).abs() <= 1e-9 * n as f64, "l={ell} n={n}");
            }
        }
    }

    #[test]
    fn gauss_sum_range_shift_is_invariant() {
        // j = 1..n versus j = 0..n-1
        for n in 1..=40u64 {
            for ell in 1..=6u64 {
                let shifted: Complex64 = (0..n)
                    .map(|j| crate::numeric::expi(((ell * j * j) % n) as f64 / n as f64))
                    .sum();
                assert!((shifted - direct_gauss(ell, n)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hilbert_examples() {
        let lin = Phase::polynomial(&[0.0, 1.0]).unwrap();
        let h = hilbert_average(&lin, 4, 1, 0.0, 1.0, Order::Principal).unwrap();
        assert!((h.average - 4.0).abs() < 1e-12);

        let one = hilbert_average(&lin, 1, 3, 0.2, 0.9, Order::Principal).unwrap();
        assert_eq!(one.average, 1.0);
        assert_eq!(one.bound, 1.0);

        let p = Phase::polynomial(&[0.0, 1.0, 0.5]).unwrap();
        let h = hilbert_average(&p, 64, 8, 1.0, 2.0, Order::Principal).unwrap();
        assert!(h.lower_bound <= h.average && h.average <= h.bound, "{h:?}");
    }

    #[test]
    fn hilbert_average_matches_quadrature() {
        let p = Phase::polynomial(&[0.0, 1.0, 0.5]).unwrap();
        let (n, ell, a, b) = (12usize, 2i64, 0.3, 0.8);
        let h = hilbert_average(&p, n, ell, a, b, Order::Principal).unwrap();
        let rule = crate::quad::composite_rule(a, b, 200, 20);
        let quad: f64 = rule
            .iter()
            .map(|&(t, w)| w * exp_sum(&p, t, n, ell, Order::Principal).unwrap().norm_sqr())
            .sum::<f64>()
            / (b - a);
        assert!((quad - h.average).abs() < 1e-9, "{quad} vs {}", h.average);
    }

    #[test]
    fn hilbert_rejects_non_monotone() {
        let q = Phase::polynomial(&[0.0, -1.0, 1.0]).unwrap();
        assert!(hilbert_average(&q, 8, 1, 0.0, 1.0, Order::Principal).is_err());
    }

    #[test]
    fn csv_export_has_header() {
        let lin = Phase::polynomial(&[0.0, 1.0]).unwrap();
        let t = trace_table(&lin, 0.25, 4, 2, Order::Principal).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ell,re,im,abs2\n0,4.0,0.0,16.0\n"), "{text}");
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_and_bound(
            c1 in 0.5f64..2.0, c2 in -1.0f64..1.0, t in -3.0f64..3.0,
            n in 1usize..200, ell in 1i64..300,
        ) {
            let p = Phase::polynomial(&[0.0, c1, c2]).unwrap();
            let s = exp_sum(&p, t, n, ell, Order::Principal).unwrap();
            let m = exp_sum(&p, t, n, -ell, Order::Principal).unwrap();
            prop_assert!((s - m.conj()).norm() < 1e-9);
            prop_assert!(s.norm() <= n as f64 * (1.0 + 1e-12));
        }

        #[test]
        fn hilbert_inequality(
            c2 in 0.0f64..1.0, n in 2usize..40, ell in 1i64..20, a in -2.0f64..2.0, w in 0.05f64..3.0,
        ) {
            let p = Phase::polynomial(&[0.0, 1.0, c2]).unwrap();
            let h = hilbert_average(&p, n, ell, a, a + w, Order::Principal).unwrap();
            prop_assert!(h.average <= h.bound && h.average >= h.lower_bound);
        }
    }
}
