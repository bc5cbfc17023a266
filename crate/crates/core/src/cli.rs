//! Scenario files, command dispatch and report emission for the command-line tool.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when verification finds a
//! failing claim.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::disclosure_opt::{
    self, Claim, CorpusConfig, CounterexampleClaim, DisclosureError, OptimizeConfig, PolicyRegime, TradeoffBreakdown,
};
use crate::dist_core::{rational, Distribution, GridConfig, InfoLevel, Law, Rational};
use crate::engine::{Backend, EngineError, Estimate, EstimatorConfig};
use crate::fees::{self, RevenueReport};
use crate::orderstats::{self, OrderStatError};
use crate::presets;
use crate::scenario::{lattice, AwarenessSet, DisclosurePolicy, Perspective, Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;

/// Agreement tolerance between quadrature and closed forms in `orderstats`.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// A number written either as a JSON number or as an exact string such as `"7/4"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberEntry {
    Text(String),
    Float(f64),
}

impl NumberEntry {
    fn to_rational(&self) -> Result<Rational, String> {
        match self {
            NumberEntry::Text(t) => rational::parse(t).ok_or_else(|| format!("'{t}' is not a number")),
            NumberEntry::Float(v) => rational::from_f64_decimal(*v).ok_or_else(|| format!("{v} is not finite")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub value: NumberEntry,
    pub prob: NumberEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionEntry {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Discrete { atoms: Vec<AtomEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// One law per bidder.
    pub distribution: Vec<DistributionEntry>,
}

/// `"none"`, `"full"`, `{"cutpoints": [...]}` or `{"cells": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InfoEntry {
    Named(String),
    Cutpoints { cutpoints: Vec<f64> },
    Cells { cells: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorEntry {
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_backend() -> String {
    "mc".into()
}

fn default_samples() -> u64 {
    EstimatorConfig::default().n_samples
}

impl Default for EstimatorEntry {
    fn default() -> Self {
        Self { backend: default_backend(), samples: default_samples(), seed: 0 }
    }
}

/// On-disk scenario: laws per characteristic and bidder, awareness as 1-based ids,
/// information per bidder keyed by characteristic id (missing aware entries mean
/// full information) and the estimator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub bidders: usize,
    pub characteristics: Vec<CharacteristicEntry>,
    pub awareness: Vec<Vec<usize>>,
    #[serde(default)]
    pub info: Vec<BTreeMap<String, InfoEntry>>,
    #[serde(default)]
    pub estimator: EstimatorEntry,
}

/// Parse or validation failure with the location it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    /// Field path such as `characteristics[1].distribution[0]`, or `line L, column C`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for FileError {}

fn at(location: impl Into<String>, message: impl fmt::Display) -> FileError {
    FileError { location: location.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub policy: DisclosurePolicy,
    pub estimator: EstimatorConfig,
}

pub fn parse_scenario_str(text: &str) -> Result<ParsedScenario, FileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let location = if path == "." || path.is_empty() {
            format!("line {}, column {}", inner.line(), inner.column())
        } else {
            format!("{path} (line {}, column {})", inner.line(), inner.column())
        };
        let message = inner.to_string();
        let message = message.split(" at line ").next().unwrap_or(&message).to_string();
        at(location, message)
    })?;
    file.build()
}

pub fn parse_scenario(path: &Path) -> Result<ParsedScenario, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| at(path.display().to_string(), e))?;
    parse_scenario_str(&text).map_err(|e| at(format!("{}: {}", path.display(), e.location), e.message))
}

fn distribution(entry: &DistributionEntry) -> Result<Distribution, String> {
    let d = match entry {
        DistributionEntry::Uniform { lo, hi } => Distribution::uniform(*lo, *hi),
        DistributionEntry::Normal { mean, sd } => Distribution::normal(*mean, *sd),
        DistributionEntry::Discrete { atoms } => {
            let mut support = Vec::with_capacity(atoms.len());
            for (k, a) in atoms.iter().enumerate() {
                let v = a.value.to_rational().map_err(|e| format!("atom {}: value {e}", k + 1))?;
                let p = a.prob.to_rational().map_err(|e| format!("atom {}: prob {e}", k + 1))?;
                support.push((v, p));
            }
            Distribution::discrete(support)
        }
    };
    d.map_err(|e| e.to_string())
}

fn info_level(entry: &InfoEntry) -> Result<InfoLevel, String> {
    match entry {
        InfoEntry::Named(name) => match name.as_str() {
            "none" => Ok(InfoLevel::NoInfo),
            "full" => Ok(InfoLevel::FullInfo),
            other => Err(format!("unknown information level '{other}' (expected none, full, cutpoints or cells)")),
        },
        InfoEntry::Cutpoints { cutpoints } => Ok(InfoLevel::Cutpoints(cutpoints.clone())),
        InfoEntry::Cells { cells } => Ok(InfoLevel::Cells(cells.clone())),
    }
}

fn backend(name: &str) -> Option<Backend> {
    match name {
        "mc" => Some(Backend::MonteCarlo),
        "exact" => Some(Backend::ExactDiscrete),
        _ => None,
    }
}

impl ScenarioFile {
    pub fn build(&self) -> Result<ParsedScenario, FileError> {
        let n = self.bidders;
        let m = self.characteristics.len();
        if n == 0 {
            return Err(at("bidders", ScenarioError::NoBidders));
        }
        let mut laws = vec![None; n * m];
        for (j, c) in self.characteristics.iter().enumerate() {
            if c.distribution.len() != n {
                return Err(at(
                    format!("characteristics[{j}].distribution"),
                    format!("expected one law per bidder ({n}), got {}", c.distribution.len()),
                ));
            }
            for (i, d) in c.distribution.iter().enumerate() {
                let law = distribution(d).map_err(|e| {
                    at(format!("characteristics[{j}].distribution[{i}]"), format!("bidder {}, characteristic {}: {e}", i + 1, j + 1))
                })?;
                laws[i * m + j] = Some(law);
            }
        }
        let laws = laws.into_iter().map(|l| l.expect("every cell filled")).collect();
        let scenario = Scenario::new(n, m, laws).map_err(|e| at("characteristics", e))?;

        if self.awareness.len() != n {
            return Err(at("awareness", format!("expected one awareness list per bidder ({n}), got {}", self.awareness.len())));
        }
        let mut sets = Vec::with_capacity(n);
        for (i, ids) in self.awareness.iter().enumerate() {
            if let Some(&bad) = ids.iter().find(|&&id| id == 0 || id > m) {
                return Err(at(format!("awareness[{i}]"), ScenarioError::UnknownCharacteristic(bad)));
            }
            sets.push(AwarenessSet::from_ids(ids));
        }
        if !self.info.is_empty() && self.info.len() != n {
            return Err(at("info", format!("expected one information map per bidder ({n}), got {}", self.info.len())));
        }
        let mut info = vec![vec![None; m]; n];
        for (i, row) in self.info.iter().enumerate() {
            for (key, entry) in row {
                let j = key
                    .parse::<usize>()
                    .ok()
                    .filter(|&id| id >= 1 && id <= m)
                    .ok_or_else(|| at(format!("info[{i}].{key}"), format!("'{key}' is not a characteristic id")))?;
                let level = info_level(entry).map_err(|e| at(format!("info[{i}].{key}"), e))?;
                info[i][j - 1] = Some(level);
            }
        }
        for (i, set) in sets.iter().enumerate() {
            for j in set.iter() {
                info[i][j].get_or_insert(InfoLevel::FullInfo);
            }
        }
        let policy = DisclosurePolicy::validate(&scenario, sets, info).map_err(|e| {
            let location = match &e {
                ScenarioError::MissingDefault { bidder } => format!("awareness[{}]", bidder - 1),
                ScenarioError::InfoOnUnaware { bidder, characteristic }
                | ScenarioError::Info { bidder, characteristic, .. }
                | ScenarioError::MissingInfo { bidder, characteristic } => format!("info[{}].{characteristic}", bidder - 1),
                _ => "awareness".into(),
            };
            at(location, e)
        })?;

        let backend = backend(&self.estimator.backend)
            .ok_or_else(|| at("estimator.backend", format!("unknown backend '{}' (expected mc or exact)", self.estimator.backend)))?;
        let estimator = EstimatorConfig {
            n_samples: self.estimator.samples,
            seed: self.estimator.seed,
            backend,
            ..EstimatorConfig::default()
        };
        Ok(ParsedScenario { scenario, policy, estimator })
    }

    /// File form of a scenario, policy and estimator. Discrete values are written
    /// as exact strings.
    pub fn from_parts(s: &Scenario, p: &DisclosurePolicy, est: &EstimatorConfig) -> Self {
        let (n, m) = (s.bidders(), s.characteristics());
        let characteristics = (0..m)
            .map(|j| CharacteristicEntry {
                name: None,
                distribution: (0..n)
                    .map(|i| match s.law(i, j) {
                        Distribution::Uniform(u) => DistributionEntry::Uniform { lo: u.lo(), hi: u.hi() },
                        Distribution::Normal(x) => DistributionEntry::Normal { mean: x.mean(), sd: x.sd() },
                        Distribution::Discrete(a) => DistributionEntry::Discrete {
                            atoms: a
                                .atoms()
                                .map(|(v, q)| AtomEntry {
                                    value: NumberEntry::Text(rational::format(v)),
                                    prob: NumberEntry::Text(rational::format(q)),
                                })
                                .collect(),
                        },
                    })
                    .collect(),
            })
            .collect();
        let info = (0..n)
            .map(|i| {
                p.awareness(i)
                    .iter()
                    .map(|j| {
                        let level = p.info(i, j).expect("aware pairs carry information");
                        let entry = match level {
                            InfoLevel::NoInfo => InfoEntry::Named("none".into()),
                            l if l.is_full(s.law(i, j)) => InfoEntry::Named("full".into()),
                            InfoLevel::Cutpoints(c) => InfoEntry::Cutpoints { cutpoints: c.clone() },
                            InfoLevel::Cells(c) => InfoEntry::Cells { cells: c.clone() },
                            InfoLevel::FullInfo => InfoEntry::Named("full".into()),
                        };
                        ((j + 1).to_string(), entry)
                    })
                    .collect()
            })
            .collect();
        Self {
            bidders: n,
            characteristics,
            awareness: p.awareness_sets().iter().map(|a| a.ids()).collect(),
            info,
            estimator: EstimatorEntry { backend: est.backend.label().into(), samples: est.n_samples, seed: est.seed },
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("serializable");
        text.push('\n');
        text
    }
}

/// Formats like `%.12g`: 12 significant digits, trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exponent) {
        trim(&format!("{:.*}", (11 - exponent) as usize, x))
    } else {
        format!("{}e{exponent}", trim(mantissa))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub field: String,
    pub value: Value,
    pub stderr: Option<f64>,
    pub backend: String,
}

/// Rows of `field, value, stderr, backend`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDocument {
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

impl ReportDocument {
    pub fn text(&mut self, field: impl Into<String>, value: impl fmt::Display, backend: &str) {
        self.rows.push(Row { field: field.into(), value: Value::Text(value.to_string()), stderr: None, backend: backend.into() });
    }

    pub fn float(&mut self, field: impl Into<String>, value: f64, backend: &str) {
        self.rows.push(Row { field: field.into(), value: Value::Float(value), stderr: None, backend: backend.into() });
    }

    /// One row for the value and, for exact results, a `.exact` row with `p/q`.
    pub fn estimate(&mut self, field: &str, e: &Estimate, backend: Backend) {
        self.rows.push(Row {
            field: field.into(),
            value: Value::Float(e.value),
            stderr: e.std_error,
            backend: backend.label().into(),
        });
        if let Some(r) = &e.exact {
            self.text(format!("{field}.exact"), rational::format(r), backend.label());
        }
    }

    pub fn exact(&mut self, field: &str, r: &Rational, backend: &str) {
        self.float(field, rational::to_f64(r), backend);
        self.text(format!("{field}.exact"), rational::format(r), backend);
    }

    fn cells(row: &Row) -> [String; 4] {
        let value = match &row.value {
            Value::Float(v) => format_float(*v),
            Value::Text(t) => t.clone(),
        };
        [row.field.clone(), value, row.stderr.map(format_float).unwrap_or_default(), row.backend.clone()]
    }

    pub fn emit(&self, format: Format) -> Vec<u8> {
        const HEADER: [&str; 4] = ["field", "value", "stderr", "backend"];
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                w.write_record(HEADER).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(Self::cells(row)).expect("in-memory write");
                }
                w.into_inner().expect("in-memory flush")
            }
            Format::Text => {
                let table: Vec<[String; 4]> = std::iter::once(HEADER.map(String::from))
                    .chain(self.rows.iter().map(Self::cells))
                    .collect();
                let widths: Vec<usize> =
                    (0..4).map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
                let mut out = String::new();
                for r in &table {
                    let line: Vec<String> = (0..4).map(|c| format!("{:<width$}", r[c], width = widths[c])).collect();
                    out.push_str(line.join("  ").trim_end());
                    out.push('\n');
                }
                out.into_bytes()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mc,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Individual,
    PublicNoInfo,
    PublicFullInfo,
    CommonFreeInfo,
}

impl From<RegimeArg> for PolicyRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Individual => PolicyRegime::IndividualExogenousInfo,
            RegimeArg::PublicNoInfo => PolicyRegime::PublicNoInfo,
            RegimeArg::PublicFullInfo => PolicyRegime::PublicFullInfo,
            RegimeArg::CommonFreeInfo => PolicyRegime::CommonAwarenessFreeInfo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClaimArg {
    Prop2Converse,
    Prop5Converse,
}

/// Bundled example scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    D1,
    D1Extended,
    Example1,
    Example1Discretized,
    Example2,
    Prop4Demo,
    Prop5Demo,
    Prop6Demo,
    PublicFullInfo,
    Hidden,
    Coins,
}

impl PresetArg {
    pub const ALL: [PresetArg; 11] = [
        PresetArg::D1,
        PresetArg::D1Extended,
        PresetArg::Example1,
        PresetArg::Example1Discretized,
        PresetArg::Example2,
        PresetArg::Prop4Demo,
        PresetArg::Prop5Demo,
        PresetArg::Prop6Demo,
        PresetArg::PublicFullInfo,
        PresetArg::Hidden,
        PresetArg::Coins,
    ];

    pub fn name(self) -> String {
        self.to_possible_value().expect("not skipped").get_name().to_string()
    }

    pub fn file(self) -> ScenarioFile {
        let (s, p) = match self {
            PresetArg::D1 => presets::d1(),
            PresetArg::D1Extended => presets::d1_extended(),
            PresetArg::Example1 => presets::example1(),
            PresetArg::Example1Discretized => presets::example1_discretized(),
            PresetArg::Example2 => presets::example2(1.0, 1.0, -0.5, 2.0),
            PresetArg::Prop4Demo => presets::public_no_info(rational::ratio(-1, 2)),
            PresetArg::Prop5Demo => presets::public_negative_max(),
            PresetArg::Prop6Demo => presets::common_awareness(),
            PresetArg::PublicFullInfo => presets::public_full_info(),
            PresetArg::Hidden => presets::hidden_characteristic(-1),
            PresetArg::Coins => presets::coins(),
        };
        let est = if s.is_all_discrete() {
            EstimatorConfig::exact()
        } else {
            EstimatorConfig::monte_carlo(EstimatorConfig::default().n_samples, 1)
        };
        ScenarioFile::from_parts(&s, &p, &est)
    }
}

#[derive(Debug, Parser)]
#[command(name = "awareness-auction", version, about = "Second-price auctions with entry fees and bidder unawareness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Seed for Monte Carlo draws; overrides the file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count; overrides the file.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Estimator backend; overrides the file.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Forces a verification failure to exercise the exit status.
    #[arg(long, global = true, hide = true)]
    inject_failure: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entry fees and unawareness rents.
    Fees,
    /// Revenue by both decompositions.
    Revenue,
    /// Winner's curse gap per bidder.
    Curse,
    /// Expected order statistics of estimated valuations.
    Orderstats,
    /// Revenue-maximizing disclosure policy under a regime.
    Optimize {
        #[arg(long, value_enum)]
        regime: RegimeArg,
        /// Use greedy search when the regime is too large to enumerate.
        #[arg(long)]
        greedy: bool,
    },
    /// Revenue trade-off of making one more bidder aware of a characteristic.
    Tradeoff {
        /// 1-based bidder to make aware.
        #[arg(long)]
        bidder: usize,
        /// 1-based characteristic.
        #[arg(long = "char")]
        characteristic: usize,
    },
    /// Exact checks of the revenue results on a seeded random corpus.
    Verify {
        #[arg(long, default_value_t = 0)]
        corpus_seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Searches a seeded corpus for cases against a converse.
    Counterexamples {
        #[arg(long, value_enum)]
        claim: ClaimArg,
        #[arg(long, default_value_t = 0)]
        corpus_seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Prints a bundled scenario file.
    Example {
        #[arg(value_enum)]
        preset: PresetArg,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Verification(ReportDocument),
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<DisclosureError> for Failure {
    fn from(e: DisclosureError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<OrderStatError> for Failure {
    fn from(e: OrderStatError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load(cli: &Cli) -> Result<ParsedScenario, Failure> {
    let path = cli.scenario.as_ref().ok_or_else(|| Failure::Input("this command needs --scenario PATH".into()))?;
    let mut parsed = parse_scenario(path)?;
    if let Some(seed) = cli.seed {
        parsed.estimator.seed = seed;
    }
    if let Some(samples) = cli.samples {
        parsed.estimator.n_samples = samples;
    }
    if let Some(b) = cli.backend {
        parsed.estimator.backend = match b {
            BackendArg::Mc => Backend::MonteCarlo,
            BackendArg::Exact => Backend::ExactDiscrete,
        };
    }
    Ok(parsed)
}

fn describe_info(s: &Scenario, p: &DisclosurePolicy, i: usize) -> String {
    p.awareness(i)
        .iter()
        .map(|j| {
            let level = match p.info(i, j).expect("aware") {
                InfoLevel::NoInfo => "none".to_string(),
                l if l.is_full(s.law(i, j)) => "full".to_string(),
                InfoLevel::Cells(c) => format!("cells{c:?}"),
                InfoLevel::Cutpoints(c) => format!("cutpoints{c:?}"),
                InfoLevel::FullInfo => "full".to_string(),
            };
            format!("{}:{level}", j + 1)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn meta(doc: &mut ReportDocument, samples: Option<u64>, outcomes: Option<u128>, backend: Backend) {
    if let Some(n) = samples {
        doc.text("samples", n, backend.label());
    }
    if let Some(n) = outcomes {
        doc.text("outcomes", n, backend.label());
    }
}

fn revenue_rows(doc: &mut ReportDocument, r: &RevenueReport) {
    let b = r.backend;
    doc.estimate("first_order", &r.first_order, b);
    doc.estimate("second_order", &r.second_order, b);
    for (i, f) in r.fees.bidders.iter().enumerate() {
        doc.estimate(&format!("bidder.{}.fee", i + 1), &f.fee, b);
        doc.estimate(&format!("bidder.{}.rent", i + 1), &f.rent, b);
    }
    doc.estimate("total_revenue", &r.total_revenue, b);
    doc.estimate("revenue_via_rents", &r.revenue_via_rents, b);
    doc.estimate("residual", &r.residual, b);
    doc.estimate("total_rent", &r.total_rent(), b);
}

fn fees_command(p: &ParsedScenario) -> Result<ReportDocument, Failure> {
    let bundle = crate::engine::estimate(&p.scenario, &p.policy, &p.estimator)?;
    let f = fees::FeeSchedule::from_bundle(&bundle);
    let mut doc = ReportDocument::default();
    meta(&mut doc, bundle.samples, bundle.outcomes, bundle.backend);
    for (i, b) in f.bidders.iter().enumerate() {
        doc.estimate(&format!("bidder.{}.fee", i + 1), &b.fee, bundle.backend);
        doc.estimate(&format!("bidder.{}.fee_full_view", i + 1), &b.fee_full_view, bundle.backend);
        doc.estimate(&format!("bidder.{}.rent", i + 1), &b.rent, bundle.backend);
    }
    Ok(doc)
}

fn revenue_command(p: &ParsedScenario) -> Result<ReportDocument, Failure> {
    let r = fees::revenue(&p.scenario, &p.policy, &p.estimator)?;
    let mut doc = ReportDocument::default();
    meta(&mut doc, r.samples, None, r.backend);
    revenue_rows(&mut doc, &r);
    Ok(doc)
}

fn curse_command(p: &ParsedScenario) -> Result<ReportDocument, Failure> {
    let c = fees::curse_gap(&p.scenario, &p.policy, &p.estimator)?;
    let mut doc = ReportDocument::default();
    for (i, e) in c.bidders.iter().enumerate() {
        let f = |name: &str| format!("bidder.{}.{name}", i + 1);
        doc.estimate(&f("perceived_payoff"), &e.perceived_payoff, c.backend);
        doc.estimate(&f("actual_payoff"), &e.actual_payoff, c.backend);
        doc.estimate(&f("gap"), &e.gap, c.backend);
        doc.estimate(&f("rent"), &e.rent, c.backend);
        doc.estimate(&f("win_probability"), &e.win_probability, c.backend);
        doc.estimate(&f("hidden_mean"), &e.hidden_mean, c.backend);
    }
    Ok(doc)
}

fn agreement(doc: &mut ReportDocument, field: &str, analytic: f64, closed: f64) {
    let ok = (analytic - closed).abs() <= AGREEMENT_TOLERANCE;
    doc.text(format!("{field}.agreement"), if ok { "yes" } else { "no" }, "analytic");
}

fn orderstats_command(p: &ParsedScenario) -> Result<ReportDocument, Failure> {
    let (s, pol) = (&p.scenario, &p.policy);
    let n = s.bidders();
    let grid = GridConfig::default();
    let mut views: Vec<AwarenessSet> = vec![s.full_set()];
    views.extend(pol.awareness_sets().iter().copied());
    let order: Vec<AwarenessSet> = lattice(s.characteristics());
    views.sort_by_key(|v| std::cmp::Reverse(order.iter().position(|x| x == v)));
    views.dedup();
    let mut doc = ReportDocument::default();
    for view in views {
        let laws = orderstats::valuation_laws(s, pol, Perspective::new(view).expect("admissible"), &grid)?;
        for rank in 1..=n {
            let ids: Vec<String> = view.ids().iter().map(usize::to_string).collect();
            let field = format!("view.{}.order{rank}", ids.join("_"));
            let law = orderstats::order_cdf(laws.clone(), rank)?;
            let value = orderstats::expected_order_stat(&law)?;
            doc.float(&field, value, "analytic");
            if let Some(exact) = law.expected_exact() {
                doc.text(format!("{field}.exact"), rational::format(&exact), "analytic");
            } else if let Some(exact) = orderstats::expected_piecewise_exact(&law) {
                doc.text(format!("{field}.closed_form"), rational::format(&exact), "analytic");
                agreement(&mut doc, &field, value, rational::to_f64(&exact));
            }
            if rank == 1 && n == 2 {
                if let [Law::Normal { mean: m1, sd: s1 }, Law::Normal { mean: m2, sd: s2 }] = laws.as_slice() {
                    let clark = orderstats::clark_normal_max(*m1, s1 * s1, *m2, s2 * s2);
                    doc.float(format!("{field}.clark"), clark, "analytic");
                    agreement(&mut doc, &field, value, clark);
                }
            }
        }
    }
    Ok(doc)
}

fn optimize_command(p: &ParsedScenario, regime: PolicyRegime, greedy: bool) -> Result<ReportDocument, Failure> {
    let cfg = OptimizeConfig { estimator: p.estimator.clone(), greedy };
    let r = disclosure_opt::optimize(&p.scenario, &p.policy, regime, &cfg)?;
    let mut doc = ReportDocument::default();
    let b = r.report.backend.label();
    doc.text("regime", regime, b);
    doc.text("search", if r.exhaustive { "exhaustive" } else { "greedy" }, b);
    doc.text("evaluated", r.trace.len(), b);
    for i in 0..p.scenario.bidders() {
        doc.text(format!("bidder.{}.awareness", i + 1), r.policy.awareness(i), b);
        doc.text(format!("bidder.{}.info", i + 1), describe_info(&p.scenario, &r.policy, i), b);
    }
    revenue_rows(&mut doc, &r.report);
    const TRACE_ROWS: usize = 64;
    if r.trace.len() <= TRACE_ROWS {
        for (k, e) in r.trace.iter().enumerate() {
            let sets: Vec<String> = e.policy.awareness_sets().iter().map(|a| a.to_string()).collect();
            doc.text(format!("trace.{}.awareness", k + 1), sets.join(" "), b);
            doc.estimate(&format!("trace.{}.revenue", k + 1), &e.revenue, r.report.backend);
        }
    }
    Ok(doc)
}

fn tradeoff_rows(doc: &mut ReportDocument, t: &TradeoffBreakdown, backend: Backend) {
    doc.text("bidder", t.target + 1, backend.label());
    doc.text("characteristic", t.characteristic + 1, backend.label());
    doc.estimate("delta_first_order_stat", &t.delta_first_order_stat, backend);
    doc.estimate("delta_rents_remaining_unaware", &t.delta_rents_remaining_unaware, backend);
    doc.estimate("lost_rent_newly_aware", &t.lost_rent_newly_aware, backend);
    doc.text("decision", t.decision.label(), backend.label());
    doc.estimate("revenue_before", &t.revenue_before, backend);
    doc.estimate("revenue_after", &t.revenue_after, backend);
}

fn tradeoff_command(p: &ParsedScenario, bidder: usize, characteristic: usize) -> Result<ReportDocument, Failure> {
    if bidder == 0 || characteristic == 0 {
        return Err(Failure::Input("--bidder and --char are 1-based".into()));
    }
    let t = disclosure_opt::check_tradeoff(&p.scenario, &p.policy, bidder - 1, characteristic - 1, &p.estimator)?;
    let mut doc = ReportDocument::default();
    tradeoff_rows(&mut doc, &t, p.estimator.backend);
    Ok(doc)
}

fn verify_command(seed: u64, count: usize, inject: bool) -> Result<ReportDocument, Failure> {
    let cfg = CorpusConfig { count, seed, ..CorpusConfig::default() };
    let mut report = disclosure_opt::verify_suite(&cfg);
    if inject {
        report.checks.push(disclosure_opt::ClaimCheck {
            claim: Claim::Cor1,
            scenario: count,
            setup: "injected".into(),
            hypothesis: true,
            holds: false,
            margin: rational::int(-1),
        });
    }
    let mut doc = ReportDocument::default();
    let b = "exact";
    doc.text("corpus_seed", seed, b);
    doc.text("scenarios", report.scenarios, b);
    for claim in Claim::ALL {
        let s = report.summary(claim);
        let f = |name: &str| format!("{}.{name}", claim.label());
        doc.text(f("instances"), s.instances, b);
        doc.text(f("hypothesis_satisfied"), s.hypothesis_satisfied, b);
        doc.text(f("failures"), s.failures, b);
        if let Some(m) = &s.min_margin {
            doc.text(f("min_margin"), rational::format(m), b);
        }
    }
    for (k, c) in report.failures().enumerate() {
        doc.text(
            format!("failure.{}", k + 1),
            format!("{} scenario {} {} margin {}", c.claim.label(), c.scenario, c.setup, rational::format(&c.margin)),
            b,
        );
    }
    let passed = report.passed();
    doc.text("status", if passed { "pass" } else { "fail" }, b);
    if passed { Ok(doc) } else { Err(Failure::Verification(doc)) }
}

fn counterexamples_command(claim: ClaimArg, seed: u64, count: usize) -> ReportDocument {
    let claim = match claim {
        ClaimArg::Prop2Converse => CounterexampleClaim::Prop2Converse,
        ClaimArg::Prop5Converse => CounterexampleClaim::Prop5Converse,
    };
    let cfg = CorpusConfig { count, seed, ..CorpusConfig::default() };
    let found = disclosure_opt::counterexample_search(claim, &cfg);
    let mut doc = ReportDocument::default();
    doc.text("claim", claim.label(), "exact");
    doc.text("found", found.len(), "exact");
    for (k, c) in found.iter().enumerate() {
        let f = |name: &str| format!("case.{}.{name}", k + 1);
        doc.text(f("scenario"), c.scenario, "exact");
        doc.text(f("setup"), &c.setup, "exact");
        doc.text(f("step"), c.step.label(), "exact");
        doc.exact(&f("mean"), &c.mean, "exact");
        doc.exact(&f("expected_max"), &c.expected_max, "exact");
        doc.exact(&f("revenue_change"), &c.revenue_change, "exact");
    }
    doc
}

fn dispatch(cli: &Cli) -> Result<Vec<u8>, Failure> {
    let doc = match &cli.command {
        Command::Example { preset } => return Ok(preset.file().to_json().into_bytes()),
        Command::Verify { corpus_seed, count } => verify_command(*corpus_seed, *count, cli.inject_failure)?,
        Command::Counterexamples { claim, corpus_seed, count } => counterexamples_command(*claim, *corpus_seed, *count),
        Command::Fees => fees_command(&load(cli)?)?,
        Command::Revenue => revenue_command(&load(cli)?)?,
        Command::Curse => curse_command(&load(cli)?)?,
        Command::Orderstats => orderstats_command(&load(cli)?)?,
        Command::Optimize { regime, greedy } => optimize_command(&load(cli)?, (*regime).into(), *greedy)?,
        Command::Tradeoff { bidder, characteristic } => tradeoff_command(&load(cli)?, *bidder, *characteristic)?,
    };
    Ok(doc.emit(cli.format))
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(bytes) => {
            let _ = out.write_all(&bytes);
            EXIT_OK
        }
        Err(Failure::Input(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_INPUT
        }
        Err(Failure::Verification(doc)) => {
            let _ = out.write_all(&doc.emit(cli.format));
            let _ = writeln!(err, "verification failed");
            EXIT_VERIFICATION
        }
    }
}

#[cfg(test)]
mod tests;
