//! Classical limit of the pair correlation of `H = phi(I)`: periods,
//! correlation volume and the closed-form limit, plus the empirical pair
//! correlation of the Hamiltonian eigenvalues it is compared against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Result};
use crate::numeric::{sum_slice, CompensatedSum};
use crate::phase::{Order, Phase};
use crate::quad::integrate;
use crate::window::Window;

/// Tolerance of the adaptive quadrature for each `k` term.
pub const TERM_TOLERANCE: f64 = 1e-10;
/// Tolerance of the adaptive quadrature for the correlation volume.
pub const VOLUME_TOLERANCE: f64 = 1e-12;

/// Minimal period `1/|phi'(i)|` of the flow on the level `I = i`.
pub fn period(phase: &Phase, i: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&i) {
        return Err(domain(format!("action {i} is outside [0, 1]")));
    }
    phase.require_monotone()?;
    Ok(1.0 / phase.phi().derivative().eval(i).abs())
}

/// `V = int_0^1 dx / |phi'(x)|`.
pub fn correlation_volume(phase: &Phase) -> Result<f64> {
    phase.require_monotone()?;
    let d1 = phase.phi().derivative();
    match d1.coeffs() {
        [a] => Ok(1.0 / a.abs()),
        // phi' = a + b x keeps its sign on [0, 1]
        [a, b] => Ok(((a + b) / a).ln() / b),
        _ => integrate(|x| 1.0 / d1.eval(x).abs(), 0.0, 1.0, VOLUME_TOLERANCE),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KTerm {
    pub k: i64,
    pub value: f64,
}

/// The limit `V fhat(0) + sum_{k != 0} int fhat(k T) T^2 dE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalPcf {
    pub v: f64,
    pub terms: Vec<KTerm>,
    pub total: f64,
}

impl ClassicalPcf {
    /// The total had the `k = 0` term also been kept in the `k`-sum.
    pub fn total_including_k0(&self, window: &Window) -> f64 {
        self.total + self.v * window.fhat0()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values serialize")
    }
}

/// Smallest `k_max` after which every `fhat(k / phi')` term vanishes
/// (or falls below 1e-16 for non-compact windows).
pub fn required_k_max(phase: &Phase, window: &Window) -> usize {
    (window.effective_radius() * phase.d1_bounds().max_abs()).ceil().max(1.0) as usize
}

/// Terms `int_0^1 fhat(k / phi'(x)) / |phi'(x)| dx` for `0 < |k| <= k_max`.
pub fn theorem_a_pcf(phase: &Phase, window: &Window, k_max: usize) -> Result<ClassicalPcf> {
    if k_max == 0 {
        return Err(domain("k_max must be >= 1"));
    }
    phase.require_monotone()?;
    let needed = required_k_max(phase, window);
    if k_max < needed {
        return Err(precondition(format!(
            "k_max = {k_max} does not cover the support of fhat; need >= {needed}"
        )));
    }
    let v = correlation_volume(phase)?;
    let d1 = phase.phi().derivative();
    let ks: Vec<i64> = (1..=k_max as i64).flat_map(|k| [-k, k]).collect();
    let terms: Vec<KTerm> = ks
        .par_iter()
        .map(|&k| {
            let value = integrate(
                |x| {
                    let p = d1.eval(x);
                    window.fhat(k as f64 / p) / p.abs()
                },
                0.0,
                1.0,
                TERM_TOLERANCE,
            )?;
            Ok(KTerm { k, value })
        })
        .collect::<Result<_>>()?;
    let mut acc = CompensatedSum::new();
    acc.add(v * window.fhat0());
    for t in &terms {
        acc.add(t.value);
    }
    Ok(ClassicalPcf { v, terms, total: acc.value() })
}

/// `(1/N) sum_{i,j} f(N (Phi(i/N) - Phi(j/N)))` over pairs within
/// `half_width` of each other; `f` beyond that is dropped.
pub fn hamiltonian_pcf_empirical(phase: &Phase, n: usize, window: &Window, half_width: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if half_width == 0 {
        return Err(domain("window half-width must be >= 1"));
    }
    let nf = n as f64;
    let w = half_width as f64;
    let mut mu: Vec<f64> = (1..=n).map(|j| nf * phase.value(j as f64 / nf, n, Order::Second)).collect();
    mu.sort_by(f64::total_cmp);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = mu.partition_point(|&m| m < mu[i] - w);
            let hi = mu.partition_point(|&m| m <= mu[i] + w);
            let mut acc = CompensatedSum::new();
            for &m in &mu[lo..hi] {
                acc.add(window.f(mu[i] - m));
            }
            acc.value()
        })
        .collect();
    Ok(sum_slice(&rows) / nf)
}
