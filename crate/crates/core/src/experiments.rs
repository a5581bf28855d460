//! Monte Carlo over the family `alpha phi + beta x`, the sparse Planck
//! subsequence and the pure quadratic case.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Result};
use crate::expsum::{gauss_sum_exact, trace_table};
use crate::kernel::SineKernel;
use crate::numeric::{reduce_sum, sum_slice};
use crate::phase::{family_phase, FamilyPoint, Order, Phase};
use crate::stats::{pcf_spectral, poisson_reference};
use crate::window::Window;

/// Identifier of the sample generator written into every sweep record.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng (rand_chacha 0.9), seed_from_u64(seed), stream = sample index";
/// Identifier of the floating-point reduction order.
pub const REDUCTION_SCHEDULE: &str = "chunks of 4096, Neumaier within chunk, fixed pairwise tree across chunks";

/// Draws with `|alpha|` below this are discarded and redrawn.
pub const ALPHA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub alpha: f64,
    pub beta: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub rng: String,
    pub reduction: String,
    /// Total number of draws rejected for `|alpha| < 1e-12`.
    pub resampled: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n: usize,
    pub t: f64,
    pub window: String,
    pub num_samples: usize,
    pub seed: u64,
    pub deviations: Vec<SweepSample>,
    pub variance: f64,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    /// One `{"sample": ..}` line per draw, then one `{"summary": ..}` line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, s) in self.deviations.iter().enumerate() {
            let row = serde_json::json!({ "sample": i, "alpha": s.alpha, "beta": s.beta, "deviation": s.deviation });
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        let summary = serde_json::json!({
            "summary": {
                "n": self.n,
                "t": self.t,
                "window": self.window,
                "num_samples": self.num_samples,
                "seed": self.seed,
                "variance": self.variance,
                "metadata": self.metadata,
            }
        });
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")
    }
}

/// `(alpha, beta)` for sample `index`, uniform on `[-T, T]^2`, with the
/// number of rejected draws.
pub fn sample_point(seed: u64, index: u64, t_range: f64) -> (f64, f64, u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut rejected = 0;
    loop {
        let alpha = rng.random_range(-t_range..=t_range);
        let beta = rng.random_range(-t_range..=t_range);
        if alpha.abs() >= ALPHA_FLOOR {
            return (alpha, beta, rejected);
        }
        rejected += 1;
    }
}

fn family_deviation(base: &Phase, alpha: f64, beta: f64, t: f64, n: usize, window: &Window) -> Result<f64> {
    let phase = family_phase(FamilyPoint { alpha, beta, base });
    let table = trace_table(&phase, t, n, window.required_ell_max(n), Order::Second)?;
    Ok(pcf_spectral(&table, window)? - poisson_reference(window))
}

fn check_sweep(base: &Phase, t: f64, n: usize, samples: usize) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        return Err(domain("t must be finite and nonzero"));
    }
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if samples == 0 {
        return Err(domain("num_samples must be >= 1"));
    }
    base.require_convex().map(|_| ())
}

fn finish(n: usize, t: f64, window: &Window, seed: u64, deviations: Vec<SweepSample>, resampled: u64) -> SweepResult {
    let squares: Vec<f64> = deviations.iter().map(|s| s.deviation * s.deviation).collect();
    let variance = sum_slice(&squares) / deviations.len() as f64;
    SweepResult {
        n,
        t,
        window: window.id(),
        num_samples: deviations.len(),
        seed,
        deviations,
        variance,
        metadata: SweepMetadata { rng: RNG_ALGORITHM.into(), reduction: REDUCTION_SCHEDULE.into(), resampled },
    }
}

/// PCF deviations from Poisson for `num_samples` random members of the family.
pub fn param_sweep(
    base: &Phase,
    t: f64,
    n: usize,
    t_range: f64,
    num_samples: usize,
    seed: u64,
    window: &Window,
) -> Result<SweepResult> {
    check_sweep(base, t, n, num_samples)?;
    if !(t_range > 0.0 && t_range.is_finite()) {
        return Err(domain("T must be positive"));
    }
    let rows: Vec<(SweepSample, u64)> = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let (alpha, beta, rejected) = sample_point(seed, i, t_range);
            let deviation = family_deviation(base, alpha, beta, t, n, window)?;
            Ok((SweepSample { alpha, beta, deviation }, rejected))
        })
        .collect::<Result<_>>()?;
    let resampled = rows.iter().map(|r| r.1).sum();
    Ok(finish(n, t, window, seed, rows.into_iter().map(|r| r.0).collect(), resampled))
}

/// As [`param_sweep`] at prescribed `(alpha, beta)` points; no resampling.
pub fn param_sweep_at(
    base: &Phase,
    t: f64,
    n: usize,
    points: &[(f64, f64)],
    window: &Window,
) -> Result<SweepResult> {
    check_sweep(base, t, n, points.len())?;
    let deviations: Vec<SweepSample> = points
        .par_iter()
        .map(|&(alpha, beta)| {
            Ok(SweepSample { alpha, beta, deviation: family_deviation(base, alpha, beta, t, n, window)? })
        })
        .collect::<Result<_>>()?;
    Ok(finish(n, t, window, 0, deviations, 0))
}

/// `max(2, floor(m (ln m)^4))`.
pub fn planck_subsequence(m: u64) -> Result<u64> {
    if m < 2 {
        return Err(domain(format!("m must be >= 2, got {m}")));
    }
    let mf = m as f64;
    Ok(((mf * mf.ln().powi(4)).floor() as u64).max(2))
}

/// `(1/N^2) sum_{l != 0} fhat(l/N) |G(l, 0; N)|^2` with exact `|G|^2`.
pub fn quadratic_in(n: usize, window: &Window) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if !window.is_compact() {
        return Err(precondition("quadratic_IN needs compactly supported fhat"));
    }
    let nf = n as f64;
    let ell_max = window.required_ell_max(n);
    let sum = reduce_sum(ell_max, |i| {
        let ell = (i + 1) as u64;
        let g = gauss_sum_exact(ell, n as u64).expect("ell, n >= 1");
        window.fhat(ell as f64 / nf) * g.squared(n as u64) as f64
    });
    Ok(2.0 * sum / (nf * nf))
}

/// Off-diagonal part of the PCF of `t N x^2` averaged over `t in [-T, T]`:
/// `(1/N^2) sum_{j != k} sum_{l != 0} fhat(l/N) sinc(2 pi l T (j^2 - k^2)/N)`.
pub fn quadratic_time_average(n: usize, window: &Window, t_range: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if !(t_range > 0.0 && t_range.is_finite()) {
        return Err(domain("T must be positive"));
    }
    if !window.is_compact() {
        return Err(precondition("closed-form time average needs compactly supported fhat"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let kernel = SineKernel::new(window, n);
    let rows: Vec<f64> = (1..n)
        .into_par_iter()
        .map(|j| {
            let jf = j as f64;
            reduce_sum(n - j, |i| {
                let k = (j + 1 + i) as f64;
                let y = t_range * (k * k - jf * jf) / nf;
                2.0 * kernel.eval(y) / y
            })
        })
        .collect();
    Ok(sum_slice(&rows) / (nf * nf))
}
