//! `opflab` command line: subcommands that run the certification suites and
//! emit versioned JSON reports or aligned tables built from the same records.
//!
//! Seed resolution order is `--seed`, then the config file, then the
//! `OPFLAB_SEED` environment variable, then [`DEFAULT_SEED`]. Exit status is 0
//! when every record passes, 1 when some check fails, 2 on errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{self, DensityMatrix, Instrument};
use crate::error::{Error, Result};
use crate::estimation::{self, affine_reconstruct, feature_basis, random_probes};
use crate::irreps::{self, dim_mn, dim_nn};
use crate::json::to_pretty;
use crate::linalg::{self, CMat};
use crate::opf::{distinguishability_gap, Ensemble};
use crate::random::{random_opf, rng_from_seed, trial_rng};
use crate::tensor::Ket;
use crate::theories::{self, star_by_name, Certificate, ContextualMeasurement};
use crate::tol::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "OPFLAB_SEED";
/// Largest `d^n` any subcommand will touch.
pub const DIMENSION_BUDGET: u64 = 512;

/// Anchor identifiers a record may carry; `docs/anchors.md` maps each to its source.
pub const ANCHORS: &[&str] = &[
    "plumbing",
    "dimensional-matching",
    "star-axioms",
    "associativity",
    "schur-weyl-probe",
    "state-estimation",
    "contextual-witness",
    "instruments",
    "sequential-measurement",
    "distinguishability",
];

#[derive(Debug, Parser)]
#[command(name = "opflab", version, about = "Outcome-probability-function certification runs")]
pub struct Cli {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true, conflicts_with = "table")]
    pub json: bool,
    #[arg(long, global = true)]
    pub table: bool,
    /// Record wall-clock time in the report (breaks byte-identity between runs).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Dimension bookkeeping of the symmetric operator spaces.
    Dims {
        /// Inclusive range `lo..hi` or a single value.
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        n: Option<String>,
    },
    /// Star-product axioms and associativity.
    Verify {
        /// `quantum` or `toy`; optional with `--replay`.
        star: Option<String>,
        /// Comma-separated subsystem dimensions `a,b,c`.
        #[arg(long)]
        dims: Option<String>,
        /// Where to write the associativity certificate when one is found.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Replay a certificate instead of searching.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Casimir probes of Schur–Weyl blocks (`licit` or `tripartite`).
    Probe {
        kind: String,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value = "toy")]
        star: String,
    },
    /// Finite state estimation (`quantum`, `toy` or `contextual`).
    Estimate {
        theory: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Instrument calculus over random Kraus maps.
    Dynamics {
        #[arg(long)]
        d: Option<usize>,
    },
    /// Distinguishability of uniform ensembles over two unbiased bases.
    Distinguish {
        #[arg(long)]
        d: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dims { .. } => "dims",
            Command::Verify { .. } => "verify",
            Command::Probe { .. } => "probe",
            Command::Estimate { .. } => "estimate",
            Command::Dynamics { .. } => "dynamics",
            Command::Distinguish { .. } => "distinguish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

/// Inclusive integer range; `hi < lo` is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimRange {
    pub lo: usize,
    pub hi: usize,
}

impl DimRange {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for DimRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad range {s:?}; expected lo..hi or a single value"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match s.split_once("..") {
            Some((lo, hi)) => Ok(DimRange {
                lo: num(lo)?,
                hi: num(hi.trim_start_matches('='))?,
            }),
            None => {
                let v = num(s)?;
                Ok(DimRange { lo: v, hi: v })
            }
        }
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| Error::InvalidArgument(format!("bad dimension list {s:?}")))
        })
        .collect()
}

const CONFIG_PARAMS: &[&str] = &["d", "n", "n_max", "dims"];

/// Resolved run settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: Option<usize>,
    pub tolerances: Tolerances,
    /// Subcommand parameters taken from the config file.
    pub params: BTreeMap<String, String>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            trials: None,
            tolerances: Tolerances::default(),
            params: BTreeMap::new(),
            format: Format::Json,
            out: None,
            timing: false,
        }
    }
}

impl RunConfig {
    /// Parses the key = value format. `#` starts a comment line.
    pub fn parse_file_contents(text: &str) -> Result<(RunConfig, bool)> {
        let mut cfg = RunConfig::default();
        let mut seed_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::InvalidArgument(format!("config line {}: bad {what} {value:?}", lineno + 1));
            match key {
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| bad("seed"))?;
                    seed_set = true;
                }
                "trials" => cfg.trials = Some(value.parse().map_err(|_| bad("trial count"))?),
                "format" => {
                    cfg.format = match value {
                        "json" => Format::Json,
                        "table" => Format::Table,
                        _ => return Err(bad("format")),
                    }
                }
                "out" => cfg.out = Some(PathBuf::from(value)),
                k if k.starts_with("tol.") => {
                    let v: f64 = value.parse().map_err(|_| bad("tolerance"))?;
                    if !cfg.tolerances.set(&k[4..], v) {
                        return Err(Error::UnknownName(format!("tolerance {}", &k[4..])));
                    }
                }
                k if CONFIG_PARAMS.contains(&k) => {
                    cfg.params.insert(k.to_string(), value.to_string());
                }
                k => return Err(Error::UnknownName(format!("config key {k}"))),
            }
        }
        Ok((cfg, seed_set))
    }

    /// Merges flags, config file and environment.
    pub fn resolve(cli: &Cli) -> Result<RunConfig> {
        let (mut cfg, seed_in_file) = match &cli.config {
            Some(path) => RunConfig::parse_file_contents(&std::fs::read_to_string(path)?)?,
            None => (RunConfig::default(), false),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        } else if !seed_in_file {
            if let Ok(v) = std::env::var(SEED_ENV) {
                cfg.seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={v:?} is not a u64")))?;
            }
        }
        if cli.trials.is_some() {
            cfg.trials = cli.trials;
        }
        if cli.json {
            cfg.format = Format::Json;
        } else if cli.table {
            cfg.format = Format::Table;
        }
        if cli.out.is_some() {
            cfg.out = cli.out.clone();
        }
        cfg.timing = cli.timing;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tolerances.all_positive() {
            return Err(Error::InvalidArgument("tolerances must be positive and finite".into()));
        }
        if self.trials == Some(0) {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }

    fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    fn param<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.params.get(key) {
            Some(s) => s
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("config value {key} = {s:?}"))),
            None => Ok(default),
        }
    }

    fn dims_param(&self, flag: &Option<String>, default: &[usize]) -> Result<Vec<usize>> {
        match flag.as_deref().or(self.params.get("dims").map(String::as_str)) {
            Some(s) => parse_dims(s),
            None => Ok(default.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, metric: f64, threshold: f64) -> bool {
        match self {
            Relation::Lt => metric < threshold,
            Relation::Le => metric <= threshold,
            Relation::Gt => metric > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

/// One check: passes iff `metric relation threshold`. NaN metrics fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub metric: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl Record {
    pub fn new(name: impl Into<String>, anchor: &str, metric: f64, relation: Relation, threshold: f64) -> Self {
        debug_assert!(ANCHORS.contains(&anchor), "unlisted anchor {anchor}");
        let status = if relation.holds(metric, threshold) {
            Status::Pass
        } else {
            Status::Fail
        };
        Record {
            name: name.into(),
            anchor: anchor.to_string(),
            status,
            metric,
            relation,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    /// Effective subcommand parameters after defaults.
    pub parameters: BTreeMap<String, Value>,
    pub passed: bool,
    pub records: Vec<Record>,
    pub artifacts: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

impl Report {
    fn new(command: &str, config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: config.clone(),
            parameters: BTreeMap::new(),
            passed: true,
            records: Vec::new(),
            artifacts: BTreeMap::new(),
            wall_clock_ms: None,
        }
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.into(), json!(value));
    }

    fn artifact(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.artifacts.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    fn finish(mut self) -> Self {
        self.passed = self.records.iter().all(Record::passed);
        self
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_pretty(self)
    }

    /// Aligned text built from the records.
    pub fn to_table(&self) -> String {
        let width = self
            .records
            .iter()
            .map(|r| r.name.chars().count())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut s = format!("opflab {}  seed {}\n", self.command, self.config.seed);
        s += &format!(
            "{:<width$}  {:<6} {:>13}  {:<2} {:>10}  {}\n",
            "check", "status", "metric", "", "threshold", "anchor"
        );
        for r in &self.records {
            let pad = width - r.name.chars().count();
            s += &format!(
                "{}{}  {:<6} {:>13.6e}  {:<2} {:>10.3e}  {}\n",
                r.name,
                " ".repeat(pad),
                r.status.to_string(),
                r.metric,
                r.relation.symbol(),
                r.threshold,
                r.anchor
            );
        }
        s += &format!(
            "{} of {} checks passed\n",
            self.records.iter().filter(|r| r.passed()).count(),
            self.records.len()
        );
        if let Some(ms) = self.wall_clock_ms {
            s += &format!("wall clock {ms} ms\n");
        }
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Table => Ok(self.to_table()),
        }
    }
}

/// Dimension table over inclusive ranges of `d` and `n`.
pub fn cmd_dims(d_range: DimRange, n_range: DimRange, cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new("dims", cfg);
    report.param("d", d_range);
    report.param("n", n_range);
    for d in d_range.iter() {
        for n in n_range.iter() {
            if d < 2 || n < 1 {
                return Err(Error::InvalidArgument("need d >= 2 and n >= 1".into()));
            }
            check_budget(&[d], n)?;
        }
    }
    let mut rows = Vec::new();
    for d in d_range.iter() {
        for n in n_range.iter() {
            let (m, top, prev) = (dim_mn(d, n), dim_nn(d, n), dim_mn(d, n - 1));
            report.push(Record::new(
                format!("dim M(d={d},n={n}) = dim N + dim M(n-1)"),
                "dimensional-matching",
                m.abs_diff(top + prev) as f64,
                Relation::Le,
                0.0,
            ));
            let numerical = if d.pow(n as u32) <= 27 {
                let r = estimation::numerical_estimability_dimension(n, d, cfg.seed) as u64 + 1;
                report.push(Record::new(
                    format!("numerical rank of M(d={d},n={n})"),
                    "dimensional-matching",
                    r.abs_diff(m) as f64,
                    Relation::Le,
                    0.0,
                ));
                Some(r)
            } else {
                None
            };
            rows.push(json!({
                "d": d, "n": n, "dim_mn": m, "dim_nn": top, "dim_mn_prev": prev, "numerical_rank": numerical,
            }));
        }
    }
    report.artifact("rows", rows)?;
    Ok(report.finish())
}

/// Refuses runs whose `(Π dims)^degree` exceeds [`DIMENSION_BUDGET`].
fn check_budget(dims: &[usize], degree: usize) -> Result<()> {
    let total = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .and_then(|local| local.checked_pow(degree as u32));
    match total {
        Some(t) if t <= DIMENSION_BUDGET => Ok(()),
        _ => Err(Error::BudgetExceeded(format!(
            "dimensions {dims:?} at degree {degree} exceed total dimension {DIMENSION_BUDGET}"
        ))),
    }
}

fn three_dims(dims: &[usize]) -> Result<[usize; 3]> {
    <[usize; 3]>::try_from(dims).map_err(|_| Error::InvalidArgument(format!("expected three dimensions, got {dims:?}")))
}

/// Axiom checks at `(a, b)` plus an associativity search at `(a, b, c)` with
/// five times as many trials.
pub fn cmd_verify(star_name: &str, dims: [usize; 3], cert_out: Option<&Path>, cfg: &RunConfig) -> Result<Report> {
    let star = star_by_name(star_name)?;
    check_budget(&dims, star.degree())?;
    let trials = cfg.trials_or(200);
    let tol = cfg.tolerances.axiom;
    let [a, b, c] = dims;
    let mut report = Report::new("verify", cfg);
    report.param("star", star.name());
    report.param("dims", dims);
    report.param("axiom_trials", trials);
    report.param("associativity_trials", 5 * trials);

    let axioms = theories::verify_star_axioms(star.as_ref(), a, b, trials, tol, cfg.seed)?;
    for check in &axioms.checks {
        report.push(Record::new(
            format!("axiom {}", check.name),
            "star-axioms",
            check.max_deviation,
            Relation::Lt,
            tol,
        ));
    }
    let assoc = theories::associativity_gap(star.as_ref(), a, b, c, 5 * trials, cfg.seed)?;
    report.push(Record::new(
        "associativity",
        "associativity",
        assoc.gap,
        Relation::Lt,
        tol,
    ));
    report.artifact(
        "associativity",
        json!({ "gap": assoc.gap, "trials": assoc.trials, "trial_index": assoc.certificate.trial_index }),
    )?;
    if assoc.gap >= tol {
        if let Some(path) = cert_out {
            std::fs::write(path, to_pretty(&assoc.certificate)?)?;
            report.artifact("certificate_path", path.display().to_string())?;
        } else {
            report.artifact("certificate", &assoc.certificate)?;
        }
    }
    Ok(report.finish())
}

/// Re-derives a stored certificate from its seed and recomputes its gap.
pub fn cmd_replay(path: &Path, cfg: &RunConfig) -> Result<Report> {
    let cert: Certificate = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut report = Report::new("verify", cfg);
    report.param("replay", true);
    report.param("star", &cert.star);
    report.param("dims", cert.dims);
    let replayed = cert.replay()?;
    let recomputed = cert.recompute_gap()?;
    let operators = [
        replayed.f.max_abs_diff(&cert.f),
        replayed.g.max_abs_diff(&cert.g),
        replayed.h.max_abs_diff(&cert.h),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    report.push(Record::new(
        "replayed gap",
        "associativity",
        (replayed.gap - cert.gap).abs(),
        Relation::Le,
        1e-15,
    ));
    report.push(Record::new(
        "recomputed gap",
        "associativity",
        (recomputed - cert.gap).abs(),
        Relation::Le,
        1e-15,
    ));
    report.push(Record::new(
        "replayed operators",
        "plumbing",
        operators,
        Relation::Le,
        1e-15,
    ));
    report.artifact("gap", cert.gap)?;
    Ok(report.finish())
}

fn nearest_relative(spectrum: &[(f64, usize)], target: f64) -> f64 {
    spectrum
        .iter()
        .map(|&(x, _)| (x - target).abs() / target.abs().max(1.0))
        .fold(f64::INFINITY, f64::min)
}

const LEAKAGE_LIMIT: f64 = 1e-8;

pub fn cmd_probe(kind: &str, star_name: &str, dims: &[usize], cfg: &RunConfig) -> Result<Report> {
    let star = star_by_name(star_name)?;
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidArgument(format!(
            "probe dimensions must be at least 2, got {dims:?}"
        )));
    }
    check_budget(dims, 2)?;
    let probe = match (kind, dims) {
        ("licit", &[a, b]) => irreps::licit_probe(star.as_ref(), a, b, cfg.seed)?,
        ("tripartite", &[a, c, e]) => irreps::tripartite_probe(star.as_ref(), a, c, e, cfg.seed)?,
        ("licit" | "tripartite", _) => {
            return Err(Error::InvalidArgument(format!(
                "wrong number of dimensions for {kind}: {dims:?}"
            )))
        }
        _ => return Err(Error::UnknownName(format!("probe {kind}"))),
    };
    let tol = cfg.tolerances.casimir;
    let mut report = Report::new("probe", cfg);
    report.param("kind", kind);
    report.param("star", star.name());
    report.param("dims", dims);
    report.push(Record::new(
        "block projector rank",
        "schur-weyl-probe",
        probe.projector_rank as f64,
        Relation::Gt,
        0.0,
    ));
    for a in &probe.assertions {
        let distance = nearest_relative(&a.spectrum, a.target_value);
        let relation = if a.expect_present { Relation::Le } else { Relation::Gt };
        report.push(Record::new(a.name.clone(), "schur-weyl-probe", distance, relation, tol));
        report.push(Record::new(
            format!("{} (invariance leak)", a.name),
            "schur-weyl-probe",
            a.leakage,
            Relation::Lt,
            LEAKAGE_LIMIT,
        ));
    }
    report.artifact("probe", &probe)?;
    Ok(report.finish())
}

/// Fit of a random degree-`n` OPF on the full feature basis and on the basis
/// minus its last element.
fn reconstruction_records(report: &mut Report, d: usize, n: usize, cfg: &RunConfig) -> Result<()> {
    let mut rng = rng_from_seed(cfg.seed);
    let target = random_opf(&mut rng, d, n);
    let features = feature_basis(d, n);
    let k = features.len();
    let dim = dim_mn(d, n) as usize;
    let probes = random_probes(&mut rng, d, 4 * dim + 8);
    let holdout = random_probes(&mut rng, d, 2 * dim + 8);

    let numerical = estimation::numerical_estimability_dimension(n, d, cfg.seed) as u64;
    report.push(Record::new(
        format!(
            "estimability dimension k = {}",
            estimation::estimability_dimension(n, d)
        ),
        "state-estimation",
        numerical.abs_diff(estimation::estimability_dimension(n, d)) as f64,
        Relation::Le,
        0.0,
    ));
    let full = affine_reconstruct(&features, &target, &probes, &holdout)?;
    report.push(Record::new(
        format!("reconstruction from k = {k} features"),
        "state-estimation",
        full.residual,
        Relation::Lt,
        cfg.tolerances.residual,
    ));
    let short = affine_reconstruct(&features[..k - 1], &target, &probes, &holdout)?;
    report.push(Record::new(
        format!("reconstruction from k = {} features fails", k - 1),
        "state-estimation",
        short.residual,
        Relation::Gt,
        cfg.tolerances.witness,
    ));
    report.artifact("full", &full)?;
    report.artifact("truncated", &short)?;
    Ok(())
}

pub fn cmd_estimate(theory: &str, d: usize, n_max: usize, cfg: &RunConfig) -> Result<Report> {
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    check_budget(&[d], if theory == "contextual" { n_max } else { 2 })?;
    let mut report = Report::new("estimate", cfg);
    report.param("theory", theory);
    report.param("d", d);
    match theory {
        "quantum" | "toy" => {
            let star = star_by_name(theory)?;
            let n = star.degree();
            report.param("n", n);
            reconstruction_records(&mut report, d, n, cfg)?;
        }
        "contextual" => {
            report.param("n_max", n_max);
            let table = estimation::non_polynomial_witness(&ContextualMeasurement::computational(d), n_max, cfg.seed)?;
            for row in &table.contextual {
                report.push(Record::new(
                    format!("contextual rule, degree {} fit fails", row.n),
                    "contextual-witness",
                    row.residual,
                    Relation::Gt,
                    cfg.tolerances.witness,
                ));
            }
            report.push(Record::new(
                "Born rule control fit",
                "contextual-witness",
                table.born_control.residual,
                Relation::Lt,
                cfg.tolerances.control,
            ));
            report.artifact("witness", &table)?;
        }
        other => return Err(Error::UnknownName(format!("theory {other}"))),
    }
    Ok(report.finish())
}

#[derive(Default)]
struct MaxDev {
    consistency: f64,
    completeness: f64,
    chain: f64,
    choi: f64,
}

fn completeness(inst: &Instrument) -> f64 {
    let d = inst.d();
    let total = inst
        .outcomes()
        .iter()
        .fold(CMat::zeros(d, d), |acc, m| acc + m.effect());
    linalg::max_abs_diff(&total, &linalg::identity(d))
}

fn dynamics_trial(d: usize, seed: u64, index: u64, dev: &mut MaxDev) -> Result<()> {
    let mut rng = trial_rng(seed, index);
    let rho = dynamics::random_density(&mut rng, d);
    let first = dynamics::random_instrument(&mut rng, d, 3, 2);
    let then = dynamics::random_instrument(&mut rng, d, 2, 2);
    let joint = dynamics::compose(&first, &then)?;

    for inst in [&first, &then, &joint] {
        dev.completeness = dev.completeness.max(completeness(inst));
        for m in inst.outcomes() {
            let f = dynamics::povm_of(m)?;
            let born = (f.matrix() * rho.matrix()).trace().re;
            let p = dynamics::outcome_probability(m, &rho)?;
            dev.consistency = dev.consistency.max((p - born).abs());
            let (_, min_eig) = dynamics::cp_check_choi(&dynamics::choi_of(m));
            dev.choi = dev.choi.max(-min_eig);
        }
    }
    for (i, mi) in first.outcomes().iter().enumerate() {
        let pi = dynamics::outcome_probability(mi, &rho)?;
        let post: Option<DensityMatrix> = if pi > 1e-12 {
            Some(dynamics::post_state(mi, &rho)?)
        } else {
            None
        };
        for (j, mj) in then.outcomes().iter().enumerate() {
            let joint_p = dynamics::outcome_probability(&joint.outcomes()[i * then.len() + j], &rho)?;
            let product = match &post {
                Some(s) => dynamics::outcome_probability(mj, s)? * pi,
                None => 0.0,
            };
            dev.chain = dev.chain.max((joint_p - product).abs());
        }
    }
    Ok(())
}

pub fn cmd_dynamics(d: usize, cfg: &RunConfig) -> Result<Report> {
    if d < 1 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    // The instrument isometry acts on C^d ⊗ C^6.
    check_budget(&[d, 6], 1)?;
    let trials = cfg.trials_or(100);
    let mut dev = MaxDev::default();
    for i in 0..trials as u64 {
        dynamics_trial(d, cfg.seed, i, &mut dev)?;
    }
    let tol = &cfg.tolerances;
    let (_, transpose_min) = dynamics::cp_check_choi(&dynamics::transpose_choi(d));
    let mut report = Report::new("dynamics", cfg);
    report.param("d", d);
    report.param("trials", trials);
    report.push(Record::new(
        "outcome probability = tr(F rho)",
        "instruments",
        dev.consistency,
        Relation::Lt,
        tol.axiom,
    ));
    report.push(Record::new(
        "instrument completeness",
        "instruments",
        dev.completeness,
        Relation::Lt,
        tol.axiom,
    ));
    report.push(Record::new(
        "P(j,i) = P(j|i) P(i)",
        "sequential-measurement",
        dev.chain,
        Relation::Lt,
        tol.axiom,
    ));
    report.push(Record::new(
        "Kraus maps have PSD Choi",
        "instruments",
        dev.choi,
        Relation::Lt,
        tol.psd,
    ));
    report.push(Record::new(
        "transpose map rejected",
        "instruments",
        transpose_min,
        Relation::Lt,
        -tol.psd,
    ));
    report.artifact("transpose_min_eigenvalue", transpose_min)?;
    Ok(report.finish())
}

/// Uniform ensembles over the computational and Fourier bases.
pub fn unbiased_ensembles(d: usize) -> Result<(Ensemble, Ensemble)> {
    let z = Ensemble::uniform((0..d).map(|k| Ket::basis(d, k)).collect())?;
    let f = Ensemble::uniform((0..d).map(|k| Ket::fourier(d, k)).collect())?;
    Ok((z, f))
}

pub fn cmd_distinguish(d: usize, cfg: &RunConfig) -> Result<Report> {
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    check_budget(&[d], 2)?;
    let (e1, e2) = unbiased_ensembles(d)?;
    let one = distinguishability_gap(&e1, &e2, 1)?;
    let two = distinguishability_gap(&e1, &e2, 2)?;
    let tol = &cfg.tolerances;
    let mut report = Report::new("distinguish", cfg);
    report.param("d", d);
    report.push(Record::new(
        "degree 1 gap vanishes",
        "distinguishability",
        one.gap,
        Relation::Lt,
        tol.axiom,
    ));
    report.push(Record::new(
        "degree 2 gap positive",
        "distinguishability",
        two.gap,
        Relation::Gt,
        tol.witness,
    ));
    let witness_error = match two.witness_values {
        Some((p, q)) => ((p - q) - two.epsilon * two.gap).abs(),
        None => f64::INFINITY,
    };
    report.push(Record::new(
        "witness separates by the gap",
        "distinguishability",
        witness_error,
        Relation::Lt,
        tol.axiom,
    ));
    report.artifact(
        "gaps",
        json!({ "n1": one.gap, "n2": two.gap, "witness_values": two.witness_values, "epsilon": two.epsilon }),
    )?;
    report.artifact("witness", two.witness.as_ref())?;
    Ok(report.finish())
}

/// Runs the parsed command under a resolved configuration.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let mut report = match command {
        Command::Dims { d, n } => {
            let d = cfg.param(
                d.as_deref().map(str::parse).transpose()?,
                "d",
                DimRange { lo: 2, hi: 3 },
            )?;
            let n = cfg.param(
                n.as_deref().map(str::parse).transpose()?,
                "n",
                DimRange { lo: 1, hi: 3 },
            )?;
            cmd_dims(d, n, cfg)?
        }
        Command::Verify {
            star,
            dims,
            cert,
            replay,
        } => match (replay, star) {
            (Some(path), _) => cmd_replay(path, cfg)?,
            (None, Some(star)) => cmd_verify(
                star,
                three_dims(&cfg.dims_param(dims, &[2, 2, 2])?)?,
                cert.as_deref(),
                cfg,
            )?,
            (None, None) => return Err(Error::InvalidArgument("verify needs a star name or --replay".into())),
        },
        Command::Probe { kind, dims, star } => {
            let default: &[usize] = if kind == "licit" { &[2, 4] } else { &[2, 2, 2] };
            cmd_probe(kind, star, &cfg.dims_param(dims, default)?, cfg)?
        }
        Command::Estimate { theory, d, n_max } => {
            cmd_estimate(theory, cfg.param(*d, "d", 2)?, cfg.param(*n_max, "n_max", 3)?, cfg)?
        }
        Command::Dynamics { d } => cmd_dynamics(cfg.param(*d, "d", 2)?, cfg)?,
        Command::Distinguish { d } => cmd_distinguish(cfg.param(*d, "d", 2)?, cfg)?,
    };
    if cfg.timing {
        report.wall_clock_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(report)
}

/// Full entry point: parse, run, write; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Parses `args` (program name first) and runs the command without writing
/// any output; the report is returned to the caller.
pub fn report_for_args<I, T>(args: I) -> Result<Report>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cfg = RunConfig::resolve(&cli)?;
    execute(&cli.command, &cfg)
}

fn run_cli(cli: &Cli) -> Result<i32> {
    let cfg = RunConfig::resolve(cli)?;
    let report = execute(&cli.command, &cfg)?;
    let text = report.render(cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}
