//! Counts of the lattice points `(j1, k1, j2, k2) in [1, N]^4`, `j_i != k_i`, with
//!
//! ```text
//! |l1 (j1^2 - k1^2) / N - l2 (j2^2 - k2^2) / N| <= delta
//! |l1 (j1 - k1) - l2 (j2 - k2)|                 <= delta
//! ```
//!
//! split by `h_i = j_i - k_i`, `m_i = j_i + k_i` into homogeneous solutions
//! (`l1 h1 = l2 h2` and `m1 = m2`) and the rest.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, precondition, Error, Result};
use crate::phase::Phase;

/// Largest `N` accepted by the exhaustive counter.
pub const BRUTEFORCE_MAX_N: usize = 128;
/// Largest `N` accepted by the divisor-structure counter.
pub const FAST_MAX_N: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeCount {
    pub n: usize,
    pub ell1: i64,
    pub ell2: i64,
    pub delta: f64,
    pub count: u64,
    pub homogeneous: u64,
    pub inhomogeneous: u64,
}

/// Which differences enter the first condition.
#[derive(Debug, Clone, Copy)]
pub enum LatticePhase<'a> {
    /// `phi(x) = x^2`, in exact integer arithmetic.
    Quadratic,
    /// `l1 (phi(j1/N) - phi(k1/N)) - l2 (phi(j2/N) - phi(k2/N))` against `delta / N`.
    General(&'a Phase),
}

fn check_common(n: usize, ell1: i64, ell2: i64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if ell1 == 0 || ell2 == 0 {
        return Err(domain("l1 and l2 must be nonzero"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Exhaustive count over `[1, N]^4`.
pub fn lattice_count_bruteforce(
    n: usize,
    ell1: i64,
    ell2: i64,
    delta: f64,
    phase: LatticePhase<'_>,
) -> Result<LatticeCount> {
    check_common(n, ell1, ell2, delta)?;
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::Size(format!("bruteforce lattice count needs n <= {BRUTEFORCE_MAX_N}, got {n}")));
    }
    let ni = n as i64;
    let nf = n as f64;
    let phi: Vec<f64> = match phase {
        LatticePhase::Quadratic => Vec::new(),
        LatticePhase::General(p) => (0..=n).map(|j| p.phi().eval(j as f64 / nf)).collect(),
    };
    let first_ok = |j1: i64, k1: i64, j2: i64, k2: i64| -> bool {
        match phase {
            LatticePhase::Quadratic => {
                let q = ell1 * (j1 * j1 - k1 * k1) - ell2 * (j2 * j2 - k2 * k2);
                (q.abs() as f64) <= delta * nf
            }
            LatticePhase::General(_) => {
                let d1 = phi[j1 as usize] - phi[k1 as usize];
                let d2 = phi[j2 as usize] - phi[k2 as usize];
                (ell1 as f64 * d1 - ell2 as f64 * d2).abs() <= delta / nf
            }
        }
    };
    let (hom, inhom) = (1..=ni)
        .into_par_iter()
        .map(|j1| {
            let (mut hom, mut inhom) = (0u64, 0u64);
            for k1 in (1..=ni).filter(|&k| k != j1) {
                for j2 in 1..=ni {
                    for k2 in (1..=ni).filter(|&k| k != j2) {
                        let lin = ell1 * (j1 - k1) - ell2 * (j2 - k2);
                        if (lin.abs() as f64) > delta || !first_ok(j1, k1, j2, k2) {
                            continue;
                        }
                        if lin == 0 && j1 + k1 == j2 + k2 {
                            hom += 1;
                        } else {
                            inhom += 1;
                        }
                    }
                }
            }
            (hom, inhom)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(LatticeCount { n, ell1, ell2, delta, count: hom + inhom, homogeneous: hom, inhomogeneous: inhom })
}

/// Number of `m = a + 2i`, `0 <= i < len`, with `lo <= m <= hi`.
fn progression_hits(a: i64, len: i64, lo: i64, hi: i64) -> i64 {
    let first = if lo <= a { 0 } else { (lo - a + 1) / 2 };
    let last = if hi < a { -1 } else { ((hi - a) / 2).min(len - 1) };
    (last - first + 1).max(0)
}

/// Count for the quadratic phase when `delta < 1`, where the second
/// condition forces `l1 h1 = l2 h2` and the first becomes
/// `|l1 h1| |m1 - m2| <= delta N`.
pub fn lattice_count_fast(n: usize, ell1: i64, ell2: i64, delta: f64) -> Result<LatticeCount> {
    check_common(n, ell1, ell2, delta)?;
    if delta >= 1.0 {
        return Err(precondition(format!("fast lattice count needs delta < 1, got {delta}")));
    }
    if n > FAST_MAX_N {
        return Err(Error::Size(format!("fast lattice count needs n <= {FAST_MAX_N}, got {n}")));
    }
    let ni = n as i64;
    let (hom, total) = (1 - ni..ni)
        .into_par_iter()
        .filter(|&h1| h1 != 0 && (ell1 * h1) % ell2 == 0)
        .map(|h1| {
            let h2 = ell1 * h1 / ell2;
            if h2 == 0 || h2.abs() >= ni {
                return (0i64, 0i64);
            }
            // m_i ranges over |h_i| + 2, |h_i| + 4, ..., 2N - |h_i|
            let (a1, len1) = (h1.abs() + 2, ni - h1.abs());
            let (a2, len2) = (h2.abs() + 2, ni - h2.abs());
            let reach = (delta * ni as f64 / (ell1 * h1).abs() as f64).floor() as i64;
            let total: i64 = (0..len1).map(|i| {
                let m1 = a1 + 2 * i;
                progression_hits(a2, len2, m1 - reach, m1 + reach)
            }).sum();
            let hom = if (h1 - h2) % 2 == 0 { ni - h1.abs().max(h2.abs()) } else { 0 };
            (hom, total)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(LatticeCount {
        n,
        ell1,
        ell2,
        delta,
        count: total as u64,
        homogeneous: hom as u64,
        inhomogeneous: (total - hom) as u64,
    })
}

/// CSV with header `n,ell1,ell2,delta,total,hom,inhom`.
pub fn write_csv<W: Write>(out: W, rows: &[LatticeCount]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "ell1", "ell2", "delta", "total", "hom", "inhom"]).map_err(std::io::Error::other)?;
    for r in rows {
        w.write_record(&[
            r.n.to_string(),
            r.ell1.to_string(),
            r.ell2.to_string(),
            r.delta.to_string(),
            r.count.to_string(),
            r.homogeneous.to_string(),
            r.inhomogeneous.to_string(),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}
