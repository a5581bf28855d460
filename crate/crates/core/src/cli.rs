//! Configuration-driven experiment runner behind the `specgap` binary.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classical::{hamiltonian_pcf_empirical, required_k_max, theorem_a_pcf};
use crate::error::Error;
use crate::experiments::{self, param_sweep, planck_subsequence, quadratic_in, RNG_ALGORITHM};
use crate::expsum::{gauss_sum_exact, hilbert_average, trace_table};
use crate::lattice::{self, lattice_count_bruteforce, lattice_count_fast, LatticePhase};
use crate::phase::{spectrum, Order, Phase, PhaseSpec};
use crate::poly::Polynomial;
use crate::stats::{
    self, default_gap_tolerance, dos_empirical, dos_limit, gap_spectrum, number_variance_direct, nv_time_average,
    pcf_direct, pcf_spectral, pcf_time_average, StatKind, StatisticEstimate, TimeAverage,
};
use crate::window::{Window, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Pcf,
    Nv,
    Dos,
    Gauss,
    ThreeGap,
    Hilbert,
    TheoremA,
    Sweep,
    Lattice,
    QuadraticIn,
    TAverage,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        Self::Spectrum,
        Self::Pcf,
        Self::Nv,
        Self::Dos,
        Self::Gauss,
        Self::ThreeGap,
        Self::Hilbert,
        Self::TheoremA,
        Self::Sweep,
        Self::Lattice,
        Self::QuadraticIn,
        Self::TAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Pcf => "pcf",
            Self::Nv => "nv",
            Self::Dos => "dos",
            Self::Gauss => "gauss",
            Self::ThreeGap => "three_gap",
            Self::Hilbert => "hilbert",
            Self::TheoremA => "theorem_a",
            Self::Sweep => "sweep",
            Self::Lattice => "lattice",
            Self::QuadraticIn => "quadratic_in",
            Self::TAverage => "t_average",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::Spectrum => "rescaled eigenphases of the quantum map (spectrum.csv)",
            Self::Pcf => "pair correlation at fixed t, spectral or direct estimator (stats.jsonl, stats.csv)",
            Self::Nv => "exact number variance at fixed t (stats.jsonl, stats.csv)",
            Self::Dos => "density of states against x^d, d = 0..3, empirical and limit (stats.jsonl, stats.csv)",
            Self::Gauss => "exact quadratic Gauss sum magnitudes (gauss.csv)",
            Self::ThreeGap => "distinct nearest-neighbour gaps (gaps.csv)",
            Self::Hilbert => "time-averaged |Tr U^l|^2 with its large-sieve envelope (hilbert.jsonl)",
            Self::TheoremA => "classical-limit pair correlation, optionally with the empirical value (theorem_a.json)",
            Self::Sweep => "PCF variance over the family alpha phi + beta x (sweep_n<N>.jsonl)",
            Self::Lattice => "lattice-point counts with homogeneous split (lattice.csv)",
            Self::QuadraticIn => "off-diagonal pair correlation of the pure quadratic map (quadratic_in.csv)",
            Self::TAverage => "pair correlation and number variance averaged over t (stats.jsonl, stats.csv)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subsequence {
    pub m_min: u64,
    pub m_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Spectral,
    Direct,
}

/// A validated configuration with every applicable default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsequence: Option<Subsequence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<Order>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_pair: Option<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_average: Option<TimeAverage>,
    pub out_path: String,
}

pub const KNOWN_FIELDS: [&str; 22] = [
    "experiment",
    "phase",
    "window",
    "n",
    "n_list",
    "subsequence",
    "t",
    "L",
    "T",
    "num_samples",
    "seed",
    "ell_max",
    "order",
    "ell",
    "ell_pair",
    "delta",
    "interval",
    "n_max",
    "k_max",
    "estimator",
    "time_average",
    "out_path",
];

pub const DEFAULT_OUT_PATH: &str = "specgap-out";
pub const DEFAULT_FEJER_C: f64 = 0.8;
pub const DEFAULT_NUM_SAMPLES: usize = 200;
pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_DIRECT_N_MAX: usize = 8;
pub const DEFAULT_EMPIRICAL_HALF_WIDTH: usize = 2000;
pub const DEFAULT_NV_PANELS: usize = 64;
pub const DEFAULT_NV_NODES: usize = 8;

/// Failure of a CLI operation, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Schema(Vec<String>),
    Precondition(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Machine-readable form written to standard error.
    pub fn to_json(&self) -> String {
        let v = match self {
            CliError::Schema(errors) => serde_json::json!({ "kind": "schema", "errors": errors }),
            CliError::Precondition(m) => serde_json::json!({ "kind": "precondition", "errors": [m] }),
            CliError::Io(m) => serde_json::json!({ "kind": "io", "errors": [m] }),
        };
        v.to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    errors: Vec<String>,
}

impl Fields<'_> {
    fn get<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.map.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.errors.push(format!("{key}: {e}"));
                None
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Need {
    No,
    Optional,
    Required,
}

struct Usage {
    phase: Need,
    window: bool,
    sizes: Need,
    t: bool,
    order: bool,
}

fn usage(kind: ExperimentKind) -> Usage {
    use ExperimentKind::*;
    use Need::*;
    let (phase, window, sizes, t, order) = match kind {
        Spectrum | Nv | ThreeGap => (Required, false, Required, true, true),
        Pcf => (Required, true, Required, true, true),
        Dos => (Required, false, Required, false, false),
        Gauss | Lattice => (No, false, Required, false, false),
        Hilbert | TAverage => (Required, kind == TAverage, Required, false, true),
        TheoremA => (Required, true, Optional, false, false),
        Sweep => (Required, true, Required, true, false),
        QuadraticIn => (No, true, Required, false, false),
    };
    Usage { phase, window, sizes, t, order }
}

/// Sizes named by `n`, `n_list` or `subsequence`.
pub fn resolve_sizes(config: &ResolvedConfig) -> Vec<usize> {
    if let Some(n) = config.n {
        vec![n]
    } else if let Some(list) = &config.n_list {
        list.clone()
    } else if let Some(s) = config.subsequence {
        (s.m_min..=s.m_max).map(|m| planck_subsequence(m).expect("validated m >= 2") as usize).collect()
    } else {
        Vec::new()
    }
}

/// Parses and checks a configuration, listing every violation found.
pub fn validate(text: &str) -> Result<ResolvedConfig, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Schema(vec![format!("invalid JSON: {e}")]))?;
    let Value::Object(map) = value else {
        return Err(CliError::Schema(vec!["config must be a JSON object".into()]));
    };
    let mut f = Fields { map: &map, errors: Vec::new() };
    for key in map.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            f.errors.push(format!("unknown field `{key}`"));
        }
    }

    let experiment: Option<ExperimentKind> = f.get("experiment");
    if !map.contains_key("experiment") {
        f.errors.push("experiment: missing required field".into());
    }
    let phase: Option<PhaseSpec> = f.get("phase");
    let window: Option<WindowSpec> = f.get("window");
    let n: Option<usize> = f.get("n");
    let n_list: Option<Vec<usize>> = f.get("n_list");
    let subsequence: Option<Subsequence> = f.get("subsequence");
    let t: Option<f64> = f.get("t");
    let l: Option<f64> = f.get("L");
    let t_range: Option<f64> = f.get("T");
    let num_samples: Option<usize> = f.get("num_samples");
    let seed: Option<u64> = f.get("seed");
    let ell_max: Option<usize> = f.get("ell_max");
    let order: Option<Order> = f.get("order");
    let ell: Option<i64> = f.get("ell");
    let ell_pair: Option<[i64; 2]> = f.get("ell_pair");
    let delta: Option<f64> = f.get("delta");
    let interval: Option<[f64; 2]> = f.get("interval");
    let n_max: Option<usize> = f.get("n_max");
    let k_max: Option<usize> = f.get("k_max");
    let estimator: Option<Estimator> = f.get("estimator");
    let time_average: Option<TimeAverage> = f.get("time_average");
    let out_path: Option<String> = f.get("out_path");
    let mut errors = f.errors;

    if n == Some(0) {
        errors.push("n must be ≥ 1".into());
    }
    if let Some(list) = &n_list {
        if list.is_empty() {
            errors.push("n_list must not be empty".into());
        }
        if list.contains(&0) {
            errors.push("n_list: every n must be ≥ 1".into());
        }
    }
    if let Some(s) = subsequence {
        if s.m_min < 2 {
            errors.push("subsequence.m_min must be ≥ 2".into());
        }
        if s.m_max < s.m_min {
            errors.push("subsequence.m_max must be ≥ m_min".into());
        }
    }
    let size_keys = [n.is_some(), n_list.is_some(), subsequence.is_some()].iter().filter(|&&b| b).count();
    if size_keys > 1 {
        errors.push("give only one of n, n_list, subsequence".into());
    }
    if let Some(WindowSpec::Fejer { c }) = window {
        if !(c > 0.0 && c.is_finite()) {
            errors.push(format!("window.c must be > 0, got {c}"));
        }
    }
    let mut built_phase = None;
    if let Some(p) = &phase {
        match Phase::from_spec(p) {
            Ok(ph) => built_phase = Some(ph),
            Err(e) => errors.push(format!("phase: {e}")),
        }
    }
    if let Some(t) = t {
        if !t.is_finite() || t == 0.0 {
            errors.push("t must be finite and nonzero".into());
        }
    }
    if let Some(l) = l {
        if !(l >= 0.0 && l.is_finite()) {
            errors.push("L must be ≥ 0".into());
        }
    }
    if let Some(tr) = t_range {
        if !(tr > 0.0 && tr.is_finite()) {
            errors.push("T must be > 0".into());
        }
    }
    if num_samples == Some(0) {
        errors.push("num_samples must be ≥ 1".into());
    }
    if ell == Some(0) {
        errors.push("ell must be nonzero".into());
    }
    if let Some([a, b]) = ell_pair {
        if a == 0 || b == 0 {
            errors.push("ell_pair entries must be nonzero".into());
        }
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d.is_finite()) {
            errors.push("delta must be > 0".into());
        }
    }
    if let Some([a, b]) = interval {
        if !(a < b && a.is_finite() && b.is_finite()) {
            errors.push("interval must satisfy a < b".into());
        }
    }
    if n_max == Some(0) {
        errors.push("n_max must be ≥ 1".into());
    }
    if k_max == Some(0) {
        errors.push("k_max must be ≥ 1".into());
    }
    if let Some(TimeAverage::GaussLegendre { panels, order }) = time_average {
        if panels == 0 || order == 0 {
            errors.push("time_average: panels and order must be ≥ 1".into());
        }
    }

    let Some(kind) = experiment else {
        return Err(CliError::Schema(errors));
    };
    let u = usage(kind);
    if u.phase == Need::Required && phase.is_none() {
        errors.push(format!("phase: required by experiment `{}`", kind.name()));
    }
    if u.sizes == Need::Required && size_keys == 0 {
        errors.push(format!("one of n, n_list, subsequence is required by experiment `{}`", kind.name()));
    }
    if !errors.is_empty() {
        return Err(CliError::Schema(errors));
    }

    let window = if u.window { Some(window.unwrap_or(WindowSpec::Fejer { c: DEFAULT_FEJER_C })) } else { window };
    let use_if = |cond: bool, v: Option<f64>, d: f64| if cond { Some(v.unwrap_or(d)) } else { v };
    let mut cfg = ResolvedConfig {
        experiment: kind,
        phase,
        window,
        n,
        n_list,
        subsequence,
        t: use_if(u.t, t, 1.0),
        l: use_if(matches!(kind, ExperimentKind::Nv), l, 1.0),
        t_range: use_if(matches!(kind, ExperimentKind::Sweep), t_range, 1.0),
        num_samples: if kind == ExperimentKind::Sweep { Some(num_samples.unwrap_or(DEFAULT_NUM_SAMPLES)) } else { num_samples },
        seed: Some(seed.unwrap_or(0)),
        ell_max,
        order: if u.order { Some(order.unwrap_or(Order::Second)) } else { order },
        ell: if kind == ExperimentKind::Hilbert { Some(ell.unwrap_or(1)) } else { ell },
        ell_pair: if kind == ExperimentKind::Lattice { Some(ell_pair.unwrap_or([1, 1])) } else { ell_pair },
        delta: use_if(kind == ExperimentKind::Lattice, delta, DEFAULT_DELTA),
        interval: if matches!(kind, ExperimentKind::Hilbert | ExperimentKind::TAverage) {
            Some(interval.unwrap_or([1.0, 2.0]))
        } else {
            interval
        },
        n_max,
        k_max,
        estimator: if kind == ExperimentKind::Pcf { Some(estimator.unwrap_or(Estimator::Spectral)) } else { estimator },
        time_average: if kind == ExperimentKind::TAverage {
            Some(time_average.unwrap_or(TimeAverage::ClosedForm))
        } else {
            time_average
        },
        out_path: out_path.unwrap_or_else(|| DEFAULT_OUT_PATH.into()),
    };
    let win = cfg.window.as_ref().map(Window::from_spec).transpose().map_err(|e| CliError::Schema(vec![format!("window: {e}")]))?;
    match kind {
        ExperimentKind::Pcf => match cfg.estimator {
            Some(Estimator::Direct) => cfg.n_max = Some(cfg.n_max.unwrap_or(DEFAULT_DIRECT_N_MAX)),
            _ => {
                if let (Some(n), Some(w), None) = (cfg.n, &win, cfg.ell_max) {
                    cfg.ell_max = Some(w.required_ell_max(n));
                }
            }
        },
        ExperimentKind::TheoremA => {
            if let (Some(ph), Some(w)) = (&built_phase, &win) {
                if cfg.k_max.is_none() {
                    cfg.k_max = Some(required_k_max(ph, w));
                }
            }
            if size_keys > 0 && cfg.n_max.is_none() {
                cfg.n_max = Some(DEFAULT_EMPIRICAL_HALF_WIDTH);
            }
        }
        _ => {}
    }
    Ok(cfg)
}

/// Paths written by a run, relative to the output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outputs: Vec<String>,
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>, CliError> {
    let file = File::create(dir.join(name)).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    outputs.push(name.to_string());
    Ok(BufWriter::new(file))
}

fn write_stats(dir: &Path, rows: &[StatisticEstimate], outputs: &mut Vec<String>) -> Result<(), CliError> {
    let mut w = create(dir, "stats.jsonl", outputs)?;
    stats::write_jsonl(&mut w, rows)?;
    w.flush()?;
    let mut w = create(dir, "stats.csv", outputs)?;
    stats::write_csv(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

fn write_csv_rows(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(dir, name, outputs)?);
    let io = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs an experiment into `out_dir`, writing `metadata.json` last.
pub fn run(config: &ResolvedConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let phase = config.phase.as_ref().map(Phase::from_spec).transpose()?;
    let window = config.window.as_ref().map(Window::from_spec).transpose()?;
    let sizes = resolve_sizes(config);
    let order = config.order.unwrap_or(Order::Second);
    let t = config.t.unwrap_or(1.0);
    let mut outputs = Vec::new();
    let phase_ref = || phase.as_ref().expect("validated: phase present");
    let window_ref = || window.as_ref().expect("validated: window present");

    // hypotheses checked before any output is produced
    match config.experiment {
        ExperimentKind::TheoremA | ExperimentKind::Hilbert => {
            phase_ref().require_monotone()?;
        }
        ExperimentKind::Sweep => {
            phase_ref().require_convex()?;
        }
        ExperimentKind::TAverage if matches!(config.time_average, Some(TimeAverage::ClosedForm)) => {
            if !window_ref().is_compact() {
                return Err(CliError::Precondition("closed-form time average needs a compactly supported fhat".into()));
            }
        }
        ExperimentKind::QuadraticIn if !window_ref().is_compact() => {
            return Err(CliError::Precondition("quadratic_in needs a compactly supported fhat".into()));
        }
        _ => {}
    }

    match config.experiment {
        ExperimentKind::Spectrum => {
            let mut rows = Vec::new();
            for &n in &sizes {
                let s = spectrum(phase_ref(), t, n, order)?;
                for (i, x) in s.points().iter().enumerate() {
                    rows.push(vec![n.to_string(), i.to_string(), x.to_string()]);
                }
            }
            write_csv_rows(out_dir, "spectrum.csv", &["n", "index", "x"], &rows, &mut outputs)?;
        }
        ExperimentKind::Pcf => {
            let w = window_ref();
            let mut rows = Vec::new();
            for &n in &sizes {
                let base = StatisticEstimate::new(StatKind::Pcf, 0.0)
                    .with("phase", phase_ref().to_spec())
                    .with("t", t)
                    .with("n", n)
                    .with("order", order)
                    .with("window", w.spec());
                let row = match config.estimator {
                    Some(Estimator::Direct) => {
                        let n_max = config.n_max.unwrap_or(DEFAULT_DIRECT_N_MAX);
                        let v = pcf_direct(&spectrum(phase_ref(), t, n, order)?, w, n_max)?;
                        StatisticEstimate { value: v, ..base }.with("estimator", "direct").with("n_max", n_max)
                    }
                    _ => {
                        let ell_max = config.ell_max.unwrap_or_else(|| w.required_ell_max(n));
                        let table = trace_table(phase_ref(), t, n, ell_max, order)?;
                        let v = pcf_spectral(&table, w)?;
                        StatisticEstimate { value: v, ..base }.with("estimator", "spectral").with("ell_max", ell_max)
                    }
                };
                rows.push(row);
            }
            write_stats(out_dir, &rows, &mut outputs)?;
        }
        ExperimentKind::Nv => {
            let l = config.l.unwrap_or(1.0);
            let mut rows = Vec::new();
            for &n in &sizes {
                let v = number_variance_direct(&spectrum(phase_ref(), t, n, order)?, l)?;
                rows.push(
                    StatisticEstimate::new(StatKind::Nv, v)
                        .with("phase", phase_ref().to_spec())
                        .with("t", t)
                        .with("n", n)
                        .with("order", order)
                        .with("L", l)
                        .with("estimator", "direct"),
                );
            }
            write_stats(out_dir, &rows, &mut outputs)?;
        }
        ExperimentKind::Dos => {
            let mut rows = Vec::new();
            for &n in &sizes {
                for d in 0..=3 {
                    let g = Polynomial::monomial(d);
                    let emp = dos_empirical(phase_ref(), n, &g)?;
                    let lim = dos_limit(phase_ref(), &g)?;
                    for (value, est) in [(emp, "empirical"), (lim, "limit")] {
                        rows.push(
                            StatisticEstimate::new(StatKind::Dos, value)
                                .with("phase", phase_ref().to_spec())
                                .with("n", n)
                                .with("degree", d)
                                .with("estimator", est),
                        );
                    }
                }
            }
            write_stats(out_dir, &rows, &mut outputs)?;
        }
        ExperimentKind::Gauss => {
            let mut rows = Vec::new();
            for &n in &sizes {
                let top = config.ell_max.unwrap_or(n);
                for ell in 1..=top {
                    let g = gauss_sum_exact(ell as u64, n as u64)?;
                    rows.push(vec![ell.to_string(), n.to_string(), g.magnitude.to_string(), g.gcd_factor.to_string()]);
                }
            }
            write_csv_rows(out_dir, "gauss.csv", &["ell", "n", "magnitude", "gcd"], &rows, &mut outputs)?;
        }
        ExperimentKind::ThreeGap => {
            let mut rows = Vec::new();
            for &n in &sizes {
                let s = spectrum(phase_ref(), t, n, order)?;
                for g in gap_spectrum(&s, default_gap_tolerance(n))? {
                    rows.push(vec![n.to_string(), g.value.to_string(), g.multiplicity.to_string()]);
                }
            }
            write_csv_rows(out_dir, "gaps.csv", &["n", "value", "multiplicity"], &rows, &mut outputs)?;
        }
        ExperimentKind::Hilbert => {
            let [a, b] = config.interval.expect("defaulted");
            let ell = config.ell.expect("defaulted");
            let mut w = create(out_dir, "hilbert.jsonl", &mut outputs)?;
            for &n in &sizes {
                let h = hilbert_average(phase_ref(), n, ell, a, b, order)?;
                let row = serde_json::json!({
                    "n": n, "ell": ell, "interval": [a, b],
                    "average": h.average, "bound": h.bound, "lower_bound": h.lower_bound,
                });
                serde_json::to_writer(&mut w, &row).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        ExperimentKind::TheoremA => {
            let w = window_ref();
            let k_max = config.k_max.unwrap_or_else(|| required_k_max(phase_ref(), w));
            let c = theorem_a_pcf(phase_ref(), w, k_max)?;
            let empirical: Vec<Value> = sizes
                .iter()
                .map(|&n| {
                    let hw = config.n_max.unwrap_or(DEFAULT_EMPIRICAL_HALF_WIDTH);
                    let v = hamiltonian_pcf_empirical(phase_ref(), n, w, hw)?;
                    Ok(serde_json::json!({ "n": n, "n_max": hw, "value": v }))
                })
                .collect::<Result<_, CliError>>()?;
            let doc = serde_json::json!({
                "v": c.v,
                "terms": c.terms,
                "total": c.total,
                "total_including_k0": c.total_including_k0(w),
                "empirical": empirical,
            });
            let mut f = create(out_dir, "theorem_a.json", &mut outputs)?;
            serde_json::to_writer_pretty(&mut f, &doc).map_err(std::io::Error::from)?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        ExperimentKind::Sweep => {
            let w = window_ref();
            for &n in &sizes {
                let r = param_sweep(
                    phase_ref(),
                    t,
                    n,
                    config.t_range.expect("defaulted"),
                    config.num_samples.expect("defaulted"),
                    config.seed.unwrap_or(0),
                    w,
                )?;
                let mut f = create(out_dir, &format!("sweep_n{n}.jsonl"), &mut outputs)?;
                r.write_jsonl(&mut f)?;
                f.flush()?;
            }
        }
        ExperimentKind::Lattice => {
            let [l1, l2] = config.ell_pair.expect("defaulted");
            let delta = config.delta.expect("defaulted");
            let rows = sizes
                .iter()
                .map(|&n| {
                    if delta < 1.0 {
                        lattice_count_fast(n, l1, l2, delta)
                    } else {
                        lattice_count_bruteforce(n, l1, l2, delta, LatticePhase::Quadratic)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut f = create(out_dir, "lattice.csv", &mut outputs)?;
            lattice::write_csv(&mut f, &rows)?;
            f.flush()?;
        }
        ExperimentKind::QuadraticIn => {
            let w = window_ref();
            let rows = sizes
                .iter()
                .map(|&n| Ok(vec![n.to_string(), quadratic_in(n, w)?.to_string()]))
                .collect::<Result<Vec<_>, CliError>>()?;
            write_csv_rows(out_dir, "quadratic_in.csv", &["n", "value"], &rows, &mut outputs)?;
        }
        ExperimentKind::TAverage => {
            let w = window_ref();
            let [a, b] = config.interval.expect("defaulted");
            let method = config.time_average.expect("defaulted");
            let mut rows = Vec::new();
            for &n in &sizes {
                let v = pcf_time_average(phase_ref(), n, w, a, b, order, method)?;
                rows.push(
                    StatisticEstimate::new(StatKind::Pcf, v)
                        .with("phase", phase_ref().to_spec())
                        .with("n", n)
                        .with("order", order)
                        .with("window", w.spec())
                        .with("interval", [a, b])
                        .with("time_average", method),
                );
                if let Some(l) = config.l {
                    let v = nv_time_average(phase_ref(), n, l, a, b, order, DEFAULT_NV_PANELS, DEFAULT_NV_NODES)?;
                    rows.push(
                        StatisticEstimate::new(StatKind::Nv, v)
                            .with("phase", phase_ref().to_spec())
                            .with("n", n)
                            .with("order", order)
                            .with("L", l)
                            .with("interval", [a, b])
                            .with(
                                "time_average",
                                TimeAverage::GaussLegendre { panels: DEFAULT_NV_PANELS, order: DEFAULT_NV_NODES },
                            ),
                    );
                }
            }
            write_stats(out_dir, &rows, &mut outputs)?;
        }
    }

    let mut meta = BTreeMap::new();
    meta.insert("tool", Value::from("specgap"));
    meta.insert("version", Value::from(env!("CARGO_PKG_VERSION")));
    meta.insert("config", serde_json::to_value(config).expect("config serializes"));
    meta.insert("rng", Value::from(RNG_ALGORITHM));
    meta.insert("reduction", Value::from(experiments::REDUCTION_SCHEDULE));
    meta.insert("outputs", serde_json::to_value(&outputs).expect("strings serialize"));
    meta.insert("wall_time_seconds", Value::from(start.elapsed().as_secs_f64()));
    let mut f = create(out_dir, "metadata.json", &mut Vec::new())?;
    serde_json::to_writer_pretty(&mut f, &meta).map_err(std::io::Error::from)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(RunSummary { outputs })
}

/// Output directory: the `--out` flag wins over the config's `out_path`.
pub fn output_dir(config: &ResolvedConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.out_path))
}

/// Reads a config file; unreadable files are I/O failures.
pub fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
