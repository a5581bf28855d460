//! Pair correlation, number variance, density of states and gap statistics
//! of eigenphase spectra on the circle of circumference `N`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, precondition, Result};
use crate::expsum::{require_ell_max, trace_table, TraceTable};
use crate::kernel::SineKernel;
use crate::numeric::{reduce_sum, sum_slice, CompensatedSum};
use crate::phase::{spectrum, Order, Phase, Spectrum};
use crate::poly::Polynomial;
use crate::quad::composite_rule;
use crate::window::Window;

/// Poisson value `f(0) + fhat(0)` of the pair correlation.
pub fn poisson_reference(window: &Window) -> f64 {
    window.f0() + window.fhat0()
}

/// `(1/N^2) sum_{|l| <= ell_max} fhat(l/N) |Tr U^l|^2`.
///
/// For a compactly supported `fhat` the table must reach `ceil(C N)`, and
/// then the sum is exact; for the gaussian it must reach the radius where
/// `fhat < 1e-16`.
pub fn pcf_spectral(traces: &TraceTable, window: &Window) -> Result<f64> {
    let n = traces.n;
    require_ell_max(traces, window.required_ell_max(n))?;
    let nf = n as f64;
    let off = reduce_sum(traces.ell_max, |i| {
        let ell = i + 1;
        window.fhat(ell as f64 / nf) * traces.values[ell].norm_sqr()
    });
    Ok(window.fhat0() + 2.0 * off / (nf * nf))
}

/// `(1/N) sum_{j,k} sum_{|m| <= n_max} f(x_j - x_k + m N)`.
pub fn pcf_direct(spec: &Spectrum, window: &Window, n_max: usize) -> Result<f64> {
    if n_max == 0 {
        return Err(domain("n_max must be >= 1"));
    }
    let n = spec.n();
    let nf = n as f64;
    let x = spec.points();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = CompensatedSum::new();
            for k in 0..n {
                let d = x[j] - x[k];
                for m in -(n_max as i64)..=(n_max as i64) {
                    acc.add(window.f(d + m as f64 * nf));
                }
            }
            acc.value()
        })
        .collect();
    Ok(sum_slice(&rows) / nf)
}

/// Exact `(1/N) int_0^N (#{x_j in (u - L/2, u + L/2]} - L)^2 du` on the circle.
pub fn number_variance_direct(spec: &Spectrum, l: f64) -> Result<f64> {
    let n = spec.n();
    let nf = n as f64;
    if !(0.0..=nf).contains(&l) {
        return Err(domain(format!("L = {l} must lie in [0, {n}]")));
    }
    if l == 0.0 {
        return Ok(0.0);
    }
    // count(u) = #{j : u in [x_j - L/2, x_j + L/2)}
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * n);
    let mut count0: i64 = 0;
    for &x in spec.points() {
        let start = (x - 0.5 * l).rem_euclid(nf);
        let start = if start >= nf { 0.0 } else { start };
        let end = (x + 0.5 * l).rem_euclid(nf);
        let end = if end >= nf { 0.0 } else { end };
        if (-start).rem_euclid(nf) < l || start == 0.0 {
            count0 += 1;
        }
        events.push((start, 1));
        events.push((end, -1));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    let mut count = count0;
    for (pos, delta) in events {
        let dev = count as f64 - l;
        acc.add(dev * dev * (pos - prev));
        prev = pos;
        // intervals through 0 are already in count0
        if pos != 0.0 {
            count += delta as i64;
        }
    }
    let dev = count as f64 - l;
    acc.add(dev * dev * (nf - prev));
    Ok(acc.value() / nf)
}

/// Partial sum of the spectral number-variance series and its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralNumberVariance {
    pub value: f64,
    /// `(2/pi^2) N^2 / ell_max`, bounding the omitted terms since `|Tr U^l| <= N`.
    pub tail_bound: f64,
}

/// `(2/pi^2) sum_{l=1}^{ell_max} sin^2(pi l L / N) |Tr U^l|^2 / l^2`.
pub fn number_variance_spectral(traces: &TraceTable, l: f64) -> Result<SpectralNumberVariance> {
    let nf = traces.n as f64;
    if !(0.0..=nf).contains(&l) {
        return Err(domain(format!("L = {l} must lie in [0, {}]", traces.n)));
    }
    let pi = std::f64::consts::PI;
    let sum = reduce_sum(traces.ell_max, |i| {
        let ell = (i + 1) as f64;
        // sin(pi l L / N) with l L reduced mod N
        let s = (pi * ((ell * l) % nf) / nf).sin();
        s * s * traces.values[i + 1].norm_sqr() / (ell * ell)
    });
    let tail_bound = if traces.ell_max == 0 {
        f64::INFINITY
    } else {
        2.0 / (pi * pi) * nf * nf / traces.ell_max as f64
    };
    Ok(SpectralNumberVariance { value: 2.0 / (pi * pi) * sum, tail_bound })
}

const MAX_DOS_DEGREE: usize = 8;

fn check_dos_test_function(g: &Polynomial) -> Result<()> {
    if g.degree() > MAX_DOS_DEGREE {
        return Err(precondition(format!(
            "test polynomial has degree {} > {MAX_DOS_DEGREE}",
            g.degree()
        )));
    }
    Ok(())
}

/// `(1/N) sum_{j=1}^N g(phi(j/N))`.
pub fn dos_empirical(phase: &Phase, n: usize, g: &Polynomial) -> Result<f64> {
    check_dos_test_function(g)?;
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    let nf = n as f64;
    Ok(reduce_sum(n, |i| g.eval(phase.phi().eval((i + 1) as f64 / nf))) / nf)
}

/// `int_0^1 g(phi(x)) dx`, exact through polynomial composition.
pub fn dos_limit(phase: &Phase, g: &Polynomial) -> Result<f64> {
    check_dos_test_function(g)?;
    Ok(g.compose(phase.phi()).integral_unit())
}

/// A cluster of equal nearest-neighbour gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapClass {
    pub value: f64,
    pub multiplicity: usize,
}

/// Default gap-clustering tolerance `1e-9 N`.
pub fn default_gap_tolerance(n: usize) -> f64 {
    1e-9 * n as f64
}

/// Distinct gaps of the circularly closed spectrum, clustered within `tol`.
pub fn gap_spectrum(spec: &Spectrum, tol: f64) -> Result<Vec<GapClass>> {
    if !(tol > 0.0) {
        return Err(domain("gap tolerance must be positive"));
    }
    let x = spec.points();
    let n = x.len();
    let mut gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(x[0] + spec.n() as f64 - x[n - 1]);
    gaps.sort_by(f64::total_cmp);

    let mut classes: Vec<(f64, f64, usize)> = Vec::new(); // (first, sum, count)
    for g in gaps {
        match classes.last_mut() {
            Some((first, sum, count)) if g - *first <= tol => {
                *sum += g;
                *count += 1;
            }
            _ => classes.push((g, g, 1)),
        }
    }
    Ok(classes
        .into_iter()
        .map(|(_, sum, count)| GapClass { value: sum / count as f64, multiplicity: count })
        .collect())
}

/// How a time average over `t in [a, b]` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TimeAverage {
    /// Every cross term integrated exactly in `t`.
    ClosedForm,
    /// Composite Gauss–Legendre rule with `panels` panels of `order` nodes.
    GaussLegendre { panels: usize, order: usize },
}

/// `(1/(b-a)) int_a^b pcf_t dt` for the quantum maps of `phase`.
pub fn pcf_time_average(
    phase: &Phase,
    n: usize,
    window: &Window,
    a: f64,
    b: f64,
    order: Order,
    method: TimeAverage,
) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if !(a < b) {
        return Err(domain(format!("need a < b, got [{a}, {b}]")));
    }
    match method {
        TimeAverage::GaussLegendre { panels, order: nodes } => {
            let rule = composite_rule(a, b, panels, nodes);
            let ell_max = window.required_ell_max(n);
            let mut acc = CompensatedSum::new();
            for (t, w) in rule {
                let table = trace_table(phase, t, n, ell_max, order)?;
                acc.add(w * pcf_spectral(&table, window)?);
            }
            Ok(acc.value() / (b - a))
        }
        TimeAverage::ClosedForm => {
            if !window.is_compact() {
                return Err(precondition("closed-form time average needs compactly supported fhat"));
            }
            let nf = n as f64;
            let ell_max = window.required_ell_max(n);
            let diagonal = 2.0 * reduce_sum(ell_max, |i| window.fhat((i + 1) as f64 / nf)) / nf;
            let kernel = SineKernel::new(window, n);
            // D_jk = N (Phi_j - Phi_k); each unordered pair contributes
            // 2 (R(b D) - R(a D)) / ((b - a) D)
            let mu: Vec<f64> = (1..=n).map(|j| nf * phase.value(j as f64 / nf, n, order)).collect();
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|j| reduce_sum(n - j - 1, |i| 2.0 * kernel.averaged(a, b, mu[j] - mu[j + 1 + i])))
                .collect();
            Ok(window.fhat0() + diagonal + sum_slice(&rows) / (nf * nf))
        }
    }
}

/// `(1/(b-a)) int_a^b Sigma_2(L; t) dt` by a composite Gauss–Legendre rule
/// over exact number variances.
pub fn nv_time_average(
    phase: &Phase,
    n: usize,
    l: f64,
    a: f64,
    b: f64,
    order: Order,
    panels: usize,
    nodes: usize,
) -> Result<f64> {
    if !(a < b) {
        return Err(domain(format!("need a < b, got [{a}, {b}]")));
    }
    let rule = composite_rule(a, b, panels, nodes);
    let values: Vec<f64> = rule
        .par_iter()
        .map(|&(t, w)| Ok(w * number_variance_direct(&spectrum(phase, t, n, order)?, l)?))
        .collect::<Result<_>>()?;
    Ok(sum_slice(&values) / (b - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Pcf,
    Nv,
    Dos,
    Gap,
}

/// A statistic value with the parameters needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticEstimate {
    pub kind: StatKind,
    pub value: f64,
    pub params: BTreeMap<String, Value>,
}

impl StatisticEstimate {
    pub fn new(kind: StatKind, value: f64) -> Self {
        Self { kind, value, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.to_string(), serde_json::to_value(value).expect("param serializes"));
        self
    }
}

/// One JSON object per line: `{"kind", "value", "params": {...}}`.
pub fn write_jsonl<W: Write>(mut out: W, rows: &[StatisticEstimate]) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

/// CSV mirror of the JSONL rows; nested params are flattened to dotted columns.
pub fn write_csv<W: Write>(out: W, rows: &[StatisticEstimate]) -> std::io::Result<()> {
    let flat: Vec<BTreeMap<String, String>> = rows
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            for (k, v) in &r.params {
                flatten(k, v, &mut m);
            }
            m
        })
        .collect();
    let mut columns: Vec<String> = flat.iter().flat_map(|m| m.keys().cloned()).collect();
    columns.sort();
    columns.dedup();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["kind".to_string(), "value".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(std::io::Error::other)?;
    for (r, m) in rows.iter().zip(&flat) {
        let kind = serde_json::to_value(r.kind).expect("kind serializes");
        let mut rec = vec![kind.as_str().unwrap_or_default().to_string(), r.value.to_string()];
        rec.extend(columns.iter().map(|c| m.get(c).cloned().unwrap_or_default()));
        w.write_record(&rec).map_err(std::io::Error::other)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Spectrum;
    use proptest::prelude::*;

    fn picket(n: usize) -> Spectrum {
        Spectrum::from_points(n, (0..n).map(|j| j as f64).collect()).unwrap()
    }

    /// Brute-force number variance by midpoint sampling on a fine grid.
    fn nv_sampled(spec: &Spectrum, l: f64, samples: usize) -> f64 {
        let nf = spec.n() as f64;
        let mut acc = 0.0;
        for s in 0..samples {
            let u = (s as f64 + 0.5) * nf / samples as f64;
            let c = spec
                .points()
                .iter()
                .filter(|&&x| {
                    let d = (x - (u - 0.5 * l)).rem_euclid(nf);
                    d > 0.0 && d <= l
                })
                .count() as f64;
            acc += (c - l) * (c - l);
        }
        acc / samples as f64
    }

    #[test]
    fn poisson_reference_examples() {
        assert!((poisson_reference(&Window::fejer(0.8).unwrap()) - 1.8).abs() < 1e-15);
        assert_eq!(poisson_reference(&Window::gaussian()), 2.0);
        assert_eq!(poisson_reference(&Window::fejer(3.0).unwrap()), 4.0);
    }

    #[test]
    fn picket_fence_pcf_is_one() {
        let w = Window::fejer(0.8).unwrap();
        for n in [1usize, 7, 64] {
            let t = TraceTable::from_spectrum(&picket(n), w.required_ell_max(n));
            assert!((pcf_spectral(&t, &w).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn single_level_gaussian_is_theta_value() {
        let w = Window::gaussian();
        let spec = picket(1);
        let t = TraceTable::from_spectrum(&spec, w.required_ell_max(1));
        let theta: f64 = (-10i32..=10).map(|l| (-std::f64::consts::PI * (l * l) as f64).exp()).sum();
        assert!((pcf_spectral(&t, &w).unwrap() - theta).abs() < 1e-14);
        assert!((pcf_direct(&spec, &w, 8).unwrap() - theta).abs() < 1e-14);
        assert!((theta - 1.086_434_811_213_308).abs() < 1e-14);
    }

    #[test]
    fn pcf_spectral_rejects_short_table() {
        let w = Window::fejer(0.8).unwrap();
        let t = TraceTable::from_spectrum(&picket(16), 5);
        assert!(matches!(pcf_spectral(&t, &w), Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn picket_fence_gaussian_direct_is_theta() {
        let w = Window::gaussian();
        let theta: f64 = (-10i32..=10).map(|l| (-std::f64::consts::PI * (l * l) as f64).exp()).sum();
        let v = pcf_direct(&picket(20), &w, 8).unwrap();
        assert!((v - theta).abs() < 1e-12);
    }

    #[test]
    fn number_variance_examples() {
        let p = picket(10);
        assert!((number_variance_direct(&p, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(number_variance_direct(&p, 0.0).unwrap(), 0.0);
        assert!(number_variance_direct(&p, 2.0).unwrap().abs() < 1e-12);
        assert!(number_variance_direct(&p, 10.0).unwrap().abs() < 1e-12);
        assert!(number_variance_direct(&p, 10.5).is_err());
        assert!(number_variance_direct(&p, -1.0).is_err());
    }

    #[test]
    fn number_variance_matches_sampling() {
        let spec = Spectrum::from_points(6, vec![0.0, 0.4, 0.45, 2.0, 5.2, 5.9]).unwrap();
        for l in [0.3, 1.0, 2.5, 5.9] {
            let exact = number_variance_direct(&spec, l).unwrap();
            let sampled = nv_sampled(&spec, l, 600_000);
            assert!((exact - sampled).abs() < 1e-3, "L={l}: {exact} vs {sampled}");
        }
    }

    #[test]
    fn spectral_number_variance_on_picket_fence() {
        let t = TraceTable::from_spectrum(&picket(8), 400);
        let nv = number_variance_spectral(&t, 3.0).unwrap();
        assert!(nv.value.abs() < 1e-20);
        let one = TraceTable::from_spectrum(&picket(1), 10);
        assert_eq!(number_variance_spectral(&one, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn dos_examples() {
        let lin = Phase::polynomial(&[0.0, 1.0]).unwrap();
        let id = Polynomial::identity();
        let n = 40;
        assert!((dos_empirical(&lin, n, &id).unwrap() - (n as f64 + 1.0) / (2.0 * n as f64)).abs() < 1e-15);
        assert!((dos_limit(&lin, &id).unwrap() - 0.5).abs() < 1e-15);
        let q = Phase::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        assert!((dos_limit(&q, &id).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let p = Phase::polynomial(&[0.0, 1.0, 0.5]).unwrap();
        let sq = Polynomial::monomial(2);
        assert!((dos_limit(&p, &sq).unwrap() - (1.0 / 3.0 + 0.25 + 0.05)).abs() < 1e-15);
        assert!(dos_limit(&p, &Polynomial::monomial(9)).is_err());
    }

    #[test]
    fn gap_examples() {
        let g = gap_spectrum(&picket(12), default_gap_tolerance(12)).unwrap();
        assert_eq!(g, vec![GapClass { value: 1.0, multiplicity: 12 }]);
        let c = Spectrum::from_points(5, vec![1.5; 5]).unwrap();
        let g = gap_spectrum(&c, default_gap_tolerance(5)).unwrap();
        assert_eq!(
            g,
            vec![GapClass { value: 0.0, multiplicity: 4 }, GapClass { value: 5.0, multiplicity: 1 }]
        );
    }

    #[test]
    fn golden_rotation_has_three_gaps() {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let lin = Phase::polynomial(&[0.0, golden]).unwrap();
        // t N phi(j/N) = golden * j when t = 1
        let s = spectrum(&lin, 1.0, 100, Order::Principal).unwrap();
        let g = gap_spectrum(&s, default_gap_tolerance(100)).unwrap();
        assert!(g.len() <= 3, "{g:?}");
    }

    #[test]
    fn closed_form_time_average_matches_quadrature() {
        let p = Phase::polynomial(&[0.0, 1.0, 0.5]).unwrap();
        let w = Window::fejer(0.8).unwrap();
        let n = 16;
        let exact = pcf_time_average(&p, n, &w, 1.0, 2.0, Order::Second, TimeAverage::ClosedForm).unwrap();
        let gl = pcf_time_average(
            &p,
            n,
            &w,
            1.0,
            2.0,
            Order::Second,
            TimeAverage::GaussLegendre { panels: 64, order: 32 },
        )
        .unwrap();
        assert!((exact - gl).abs() < 1e-8, "{exact} vs {gl}");
    }

    #[test]
    fn estimate_rows_serialize() {
        let row = StatisticEstimate::new(StatKind::Pcf, 1.0)
            .with("n", 4)
            .with("window", serde_json::json!({"kind": "fejer", "c": 0.8}));
        let mut buf = Vec::new();
        write_jsonl(&mut buf, std::slice::from_ref(&row)).unwrap();
        let back: StatisticEstimate = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, row);
        let mut csv_buf = Vec::new();
        write_csv(&mut csv_buf, &[row]).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "kind,value,n,window.c,window.kind");
        assert_eq!(text.lines().nth(1).unwrap(), "pcf,1,4,0.8,fejer");
    }

    fn arb_spectrum() -> impl Strategy<Value = Spectrum> {
        (1usize..24).prop_flat_map(|n| {
            prop::collection::vec(0.0f64..n as f64, n)
                .prop_map(move |pts| Spectrum::from_points(n, pts).unwrap())
        })
    }

    proptest! {
        #[test]
        fn estimators_agree_on_gaussian(spec in arb_spectrum()) {
            let w = Window::gaussian();
            let t = TraceTable::from_spectrum(&spec, w.required_ell_max(spec.n()));
            let a = pcf_spectral(&t, &w).unwrap();
            let b = pcf_direct(&spec, &w, 8).unwrap();
            prop_assert!((a - b).abs() < 1e-8);
            prop_assert!(a >= 0.0 && b >= 0.0);
        }

        #[test]
        fn rotation_invariance(spec in arb_spectrum(), c in -50.0f64..50.0, l in 0.0f64..1.0) {
            let r = spec.rotated(c);
            let w = Window::gaussian();
            let n = spec.n();
            let lw = l * n as f64;
            prop_assert!((pcf_direct(&spec, &w, 8).unwrap() - pcf_direct(&r, &w, 8).unwrap()).abs() < 1e-10);
            let t1 = TraceTable::from_spectrum(&spec, w.required_ell_max(n));
            let t2 = TraceTable::from_spectrum(&r, w.required_ell_max(n));
            prop_assert!((pcf_spectral(&t1, &w).unwrap() - pcf_spectral(&t2, &w).unwrap()).abs() < 1e-10);
            let v1 = number_variance_direct(&spec, lw).unwrap();
            let v2 = number_variance_direct(&r, lw).unwrap();
            prop_assert!((v1 - v2).abs() < 1e-9);
            prop_assert!(v1 >= 0.0);
            let g1 = gap_spectrum(&spec, 1e-6).unwrap();
            let g2 = gap_spectrum(&r, 1e-6).unwrap();
            prop_assert_eq!(g1.len(), g2.len());
        }

        #[test]
        fn permutation_invariance(pts in prop::collection::vec(0.0f64..10.0, 10), seed in 0u64..1000) {
            let mut shuffled = pts.clone();
            let k = (seed as usize) % 10;
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = Spectrum::from_points(10, pts).unwrap();
            let b = Spectrum::from_points(10, shuffled).unwrap();
            prop_assert_eq!(a.points(), b.points());
        }
    }
}
