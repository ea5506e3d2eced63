//! Experiment configuration, grid scans over `(N, S, alpha)`, output and presets.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{kronecker_experiment, pair_estimate, rng_stream};
use crate::error::{Budget, Error, Result};
use crate::fixed::Dyadic;
use crate::points::{dilate_mod1, generate_terms, Alpha, SequenceSpec};
use crate::variance::{variance_pairwise_many, AlphaTag, VarianceRecord};

/// CSV header of emitted scans.
pub const CSV_HEADER: [&str; 6] = ["N", "S_num", "S_den", "alpha_hex", "V", "ratio"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::parse(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Which dilation parameters a scan visits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphaSpec {
    /// `count` uniform 128-bit numerators drawn from the config seed.
    Random { count: usize },
    List(Vec<Alpha>),
}

impl AlphaSpec {
    fn canonical(&self) -> String {
        match self {
            AlphaSpec::Random { count } => format!("random:{count}"),
            AlphaSpec::List(v) => v.iter().map(Alpha::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

/// A scan over `N_grid x S_grid x alphas`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sequence: SequenceSpec,
    /// Sequence as written in the config, kept for hashing.
    pub sequence_text: String,
    pub alphas: AlphaSpec,
    pub n_grid: Vec<usize>,
    pub s_grid: Vec<Dyadic>,
    pub seed: Option<u64>,
    pub budget: Budget,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_int<T: FromStr>(key: &str, s: &str) -> Result<T> {
    let cleaned: String = s.trim().chars().filter(|&c| c != '_').collect();
    if let Some((m, e)) = cleaned.split_once('e') {
        // integer scientific notation such as 1e5
        let m: u128 = m.parse().map_err(|_| Error::parse(format!("{key}: bad integer '{s}'")))?;
        let e: u32 = e.parse().map_err(|_| Error::parse(format!("{key}: bad integer '{s}'")))?;
        let v = m
            .checked_mul(10u128.checked_pow(e).unwrap_or(u128::MAX))
            .ok_or_else(|| Error::parse(format!("{key}: '{s}' out of range")))?;
        return v
            .to_string()
            .parse()
            .map_err(|_| Error::parse(format!("{key}: '{s}' out of range")));
    }
    cleaned
        .parse()
        .map_err(|_| Error::parse(format!("{key}: bad integer '{s}'")))
}

/// `logspace:a..b` gives `2^-v` for `v = a..=b`; otherwise a comma list of dyadics.
pub fn parse_s_grid(value: &str) -> Result<Vec<Dyadic>> {
    if let Some(range) = value.trim().strip_prefix("logspace:") {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| Error::parse(format!("expected logspace:a..b, got '{value}'")))?;
        let a: u32 = parse_int("s_grid", a)?;
        let b: u32 = parse_int("s_grid", b)?;
        if a > b {
            return Err(Error::parse(format!("empty range in '{value}'")));
        }
        return (a..=b).map(Dyadic::pow2_inv).collect();
    }
    parse_list(value, Dyadic::from_str)
}

impl ExperimentConfig {
    /// Parse the flat `key = value` format (`#` starts a comment).
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("line {}: expected key = value", lineno + 1)))?;
            let k = k.trim().to_owned();
            if fields.insert(k.clone(), v.trim().to_owned()).is_some() {
                return Err(Error::parse(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        Self::from_fields(fields, base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path.parent())
    }

    fn from_fields(mut f: BTreeMap<String, String>, base_dir: Option<&Path>) -> Result<Self> {
        let mut take = |k: &str| f.remove(k);
        let sequence_text = take("sequence").ok_or_else(|| Error::parse("missing key 'sequence'"))?;
        let sequence = SequenceSpec::parse_with_base(&sequence_text, base_dir)?;
        let alphas = match take("alphas") {
            None => return Err(Error::parse("missing key 'alphas'")),
            Some(v) => match v.strip_prefix("random:") {
                Some(k) => AlphaSpec::Random {
                    count: parse_int("alphas", k)?,
                },
                None => AlphaSpec::List(parse_list(&v, Alpha::from_str)?),
            },
        };
        let n_grid = parse_list(
            &take("n_grid").ok_or_else(|| Error::parse("missing key 'n_grid'"))?,
            |s| parse_int("n_grid", s),
        )?;
        let s_grid = parse_s_grid(&take("s_grid").ok_or_else(|| Error::parse("missing key 's_grid'"))?)?;
        let seed = take("seed").map(|s| parse_int("seed", &s)).transpose()?;
        let mut budget = Budget::default();
        if let Some(p) = take("budget_pairs") {
            budget.pairs = parse_int("budget_pairs", &p)?;
        }
        if let Some(m) = take("budget_memory") {
            budget.memory = parse_int("budget_memory", &m)?;
        }
        let output = take("output").map(PathBuf::from);
        let format = take("format").map(|s| s.parse()).transpose()?.unwrap_or_default();
        if let Some(k) = f.keys().next() {
            return Err(Error::parse(format!("unknown key '{k}'")));
        }
        let cfg = ExperimentConfig {
            sequence,
            sequence_text,
            alphas,
            n_grid,
            s_grid,
            seed,
            budget,
            output,
            format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.s_grid.is_empty() {
            return Err(Error::parse("n_grid and s_grid must be nonempty"));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::parse("n_grid entries must be positive"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse("n_grid must be strictly ascending"));
        }
        match &self.alphas {
            AlphaSpec::Random { count: 0 } => Err(Error::parse("alphas: random count must be positive")),
            AlphaSpec::Random { .. } if self.seed.is_none() => {
                Err(Error::parse("random alphas need a seed"))
            }
            AlphaSpec::List(v) if v.is_empty() => Err(Error::parse("alphas list is empty")),
            _ => Ok(()),
        }
    }

    /// Sorted `key=value` lines covering every field that affects results.
    pub fn canonical_text(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("alphas", self.alphas.canonical());
        m.insert(
            "n_grid",
            self.n_grid.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        );
        m.insert(
            "s_grid",
            self.s_grid.iter().map(Dyadic::to_string).collect::<Vec<_>>().join(","),
        );
        m.insert("sequence", self.sequence_text.clone());
        if let Some(seed) = self.seed {
            m.insert("seed", seed.to_string());
        }
        m.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The concrete dilation parameters, in scan order.
    pub fn alpha_values(&self) -> Vec<Alpha> {
        match &self.alphas {
            AlphaSpec::List(v) => v.clone(),
            AlphaSpec::Random { count } => {
                let seed = self.seed.unwrap_or(0);
                (0..*count as u64)
                    .map(|i| Alpha::random(&mut rng_stream(seed, "alpha", i)))
                    .collect()
            }
        }
    }
}

/// A grid cell left out because it exceeded the pair budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub n: usize,
    pub s: Dyadic,
    pub estimated_pairs: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub config_hash: String,
    pub code_version: String,
    pub wall_time_secs: f64,
    pub skipped: Vec<SkippedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<VarianceRecord>,
    pub metadata: ScanMetadata,
}

const BYTES_PER_POINT: u128 = 16 + 2 * 32 + 2 * 32;

/// Runs the scan, handing each completed `N` block of rows to `sink` in order.
pub fn run_scan_streaming(
    config: &ExperimentConfig,
    skip_over_budget: bool,
    mut sink: impl FnMut(&[VarianceRecord]) -> Result<()>,
) -> Result<ScanResult> {
    config.validate()?;
    let start = Instant::now();
    let max_n = *config.n_grid.last().expect("validated nonempty");
    let budget = &config.budget;
    budget.check_memory("scan", max_n as u128 * BYTES_PER_POINT)?;
    let terms = generate_terms(&config.sequence, max_n)?;
    let alphas = config.alpha_values();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &n in &config.n_grid {
        let mut lengths = Vec::with_capacity(config.s_grid.len());
        for &s in &config.s_grid {
            let estimated = pair_estimate(n, s);
            match budget.check_pairs("scan cell", estimated, Some(&format!("N = {n}, S = {s}"))) {
                Ok(()) => lengths.push(s),
                Err(_) if skip_over_budget => skipped.push(SkippedCell {
                    n,
                    s,
                    estimated_pairs: estimated,
                }),
                Err(e) => return Err(e),
            }
        }
        let per_alpha: Vec<Vec<f64>> = alphas
            .par_iter()
            .map(|&alpha| {
                let points = dilate_mod1(&terms[..n], alpha)?;
                Ok(variance_pairwise_many(&points, &lengths)
                    .into_iter()
                    .map(|v| v.to_f64())
                    .collect())
            })
            .collect::<Result<_>>()?;
        let block: Vec<VarianceRecord> = lengths
            .iter()
            .enumerate()
            .flat_map(|(si, &s)| {
                alphas.iter().zip(&per_alpha).map(move |(&alpha, vs)| {
                    VarianceRecord::new(n, s, AlphaTag::Fixed { alpha }, vs[si])
                })
            })
            .collect();
        sink(&block)?;
        rows.extend(block);
    }
    Ok(ScanResult {
        rows,
        metadata: ScanMetadata {
            config_hash: config.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            skipped,
        },
    })
}

pub fn run_scan(config: &ExperimentConfig, skip_over_budget: bool) -> Result<ScanResult> {
    run_scan_streaming(config, skip_over_budget, |_| Ok(()))
}

fn float_text(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}

/// Writes records as CSV rows, optionally preceded by the header.
pub fn write_csv_rows<W: Write>(out: W, rows: &[VarianceRecord], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    for r in rows {
        let (p, q) = r.s.reduced();
        w.write_record([
            r.n.to_string(),
            p.to_string(),
            q.to_string(),
            r.alpha.label(),
            float_text(r.v),
            r.ratio.map(float_text).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })
}

/// Serializes a scan in the requested format.
pub fn emit(result: &ScanResult, format: OutputFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv_rows(&mut buf, &result.rows, true)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, result).map_err(|e| Error::Io {
                path: "<json>".into(),
                message: e.to_string(),
            })?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes [`emit`] output to `path`, attaching the path to any I/O error.
pub fn emit_to_path(result: &ScanResult, format: OutputFormat, path: &Path) -> Result<()> {
    let bytes = emit(result, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses CSV produced by [`emit`].
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<VarianceRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(format!("unexpected CSV header {header:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(format!("bad number '{}'", field(i))))
            };
            let n: usize = parse_int("N", field(0))?;
            let s = Dyadic::from_ratio(parse_int("S_num", field(1))?, parse_int("S_den", field(2))?)?;
            let alpha = AlphaTag::parse_label(field(3))?;
            let v = num(4)?;
            let ratio = if field(5).is_empty() { None } else { Some(num(5)?) };
            Ok(VarianceRecord { n, s, alpha, v, ratio })
        })
        .collect()
}

/// Parses JSON produced by [`emit`].
pub fn parse_json(input: &[u8]) -> Result<ScanResult> {
    serde_json::from_slice(input).map_err(|e| Error::parse(e.to_string()))
}

/// One named pass/fail check of a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetCheck {
    pub label: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetReport {
    pub name: String,
    pub checks: Vec<PresetCheck>,
    pub passed: bool,
    pub result: ScanResult,
}

pub const PRESETS: [&str; 2] = ["thm1-quadratic", "prop1-golden"];

/// Config of the quadratic Poisson-trend preset.
pub fn thm1_quadratic_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        sequence: SequenceSpec::Polynomial(vec![0, 0, 1]),
        sequence_text: "poly:0,0,1".into(),
        alphas: AlphaSpec::Random { count: 100 },
        n_grid: vec![100_000],
        s_grid: (5..=12).map(|v| Dyadic::pow2_inv(v).expect("v <= 64")).collect(),
        seed: Some(seed),
        budget: Budget::default(),
        output: None,
        format: OutputFormat::Csv,
    }
}

/// Median over alpha of `V / (N S (1 - S))` must lie in `[0.85, 1.15]` for every `S`.
pub fn thm1_checks(result: &ScanResult) -> Vec<PresetCheck> {
    let mut by_s: BTreeMap<Dyadic, Vec<f64>> = BTreeMap::new();
    for r in &result.rows {
        let s = r.s.to_f64();
        by_s.entry(r.s)
            .or_default()
            .push(r.v / (r.n as f64 * s * (1.0 - s)));
    }
    by_s.into_iter()
        .rev()
        .map(|(s, mut ratios)| {
            ratios.sort_by(f64::total_cmp);
            let k = ratios.len();
            let median = if k % 2 == 1 {
                ratios[k / 2]
            } else {
                0.5 * (ratios[k / 2 - 1] + ratios[k / 2])
            };
            PresetCheck {
                label: format!("median V/(NS(1-S)) at S = {s}"),
                value: median,
                pass: (0.85..=1.15).contains(&median),
            }
        })
        .collect()
}

/// Golden-ratio Kronecker sequence at Fibonacci `N <= 10^5`, `S = k/64`: `max V <= 9`.
pub fn prop1_golden() -> Result<PresetReport> {
    let start = Instant::now();
    let alpha = Alpha::golden();
    let grid: Vec<Dyadic> = (1..64).map(|k| Dyadic::from_ratio(k, 64)).collect::<Result<_>>()?;
    let report = kronecker_experiment(alpha, &grid, 100_000)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for rec in &report.records {
        for (&s, &v) in grid.iter().zip(&rec.values) {
            rows.push(VarianceRecord::new(rec.n, s, AlphaTag::Fixed { alpha }, v));
        }
        checks.push(PresetCheck {
            label: format!("max V at N = {}", rec.n),
            value: rec.max_v,
            pass: rec.max_v <= 9.0,
        });
    }
    let passed = !checks.is_empty() && checks.iter().all(|c| c.pass);
    Ok(PresetReport {
        name: "prop1-golden".into(),
        checks,
        passed,
        result: ScanResult {
            rows,
            metadata: ScanMetadata {
                config_hash: String::new(),
                code_version: env!("CARGO_PKG_VERSION").to_owned(),
                wall_time_secs: start.elapsed().as_secs_f64(),
                skipped: Vec::new(),
            },
        },
    })
}

/// Runs a named preset.
pub fn run_preset(name: &str, seed: u64) -> Result<PresetReport> {
    match name {
        "thm1-quadratic" => {
            let result = run_scan(&thm1_quadratic_config(seed), false)?;
            let checks = thm1_checks(&result);
            let passed = checks.iter().all(|c| c.pass);
            Ok(PresetReport {
                name: name.into(),
                checks,
                passed,
                result,
            })
        }
        "prop1-golden" => prop1_golden(),
        other => Err(Error::parse(format!(
            "unknown preset '{other}' (available: {})",
            PRESETS.join(", ")
        ))),
    }
}
