//! Run artifacts: raw samples, summaries, latency/cost tables, heatmap
//! matrices, MLS tables, the payload corpus and a manifest.
//!
//! Everything is rendered in memory first and written once at the end. Every
//! CSV starts with a `# run_digest=` line and every JSON file carries a
//! `run_digest` field naming the manifest it belongs to.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bench::{run_benchmark, BenchError, BenchRun, OpSummary, RelativeMetric, SummaryStats};
use crate::config::{BenchConfig, ConfigError};
use crate::did::OperationKind;
use crate::digest;
use crate::ledger::Platform;
use crate::mls::{aggregate_mls, analyze_corpus, mls_per_operation, read_corpus, AggregateMls, FlattenOptions, MlsError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Operations whose payloads feed MLS. Create is excluded because an
/// off-chain create exposes nothing.
pub const MLS_OPERATIONS: [OperationKind; 3] = [OperationKind::Update, OperationKind::Revoke, OperationKind::Delete];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot read {path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Mls(#[from] MlsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Table,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Table => "txt",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            other => Err(format!("unknown format {other:?} (expected csv, json or table)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Analyze,
    Report,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_digest: String,
    pub tool_version: String,
    pub mode: Mode,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    /// Simulated start time for simulate runs; wall-clock time is not
    /// recorded so identical inputs give identical bytes.
    pub timestamp: Option<String>,
    pub outputs: Vec<OutputFile>,
}

fn run_digest(mode: Mode, parts: &[&[u8]]) -> String {
    let mode = serde_json::to_string(&mode).expect("mode serializes");
    let mut all: Vec<&[u8]> = vec![TOOL_VERSION.as_bytes(), mode.as_bytes()];
    all.extend_from_slice(parts);
    digest::hex(&digest::digest(&all))[..16].to_owned()
}

/// Rendered files keyed by path relative to the output directory.
#[derive(Debug, Default)]
struct Artifacts {
    files: BTreeMap<String, String>,
}

impl Artifacts {
    fn add(&mut self, path: impl Into<String>, contents: String) {
        self.files.insert(path.into(), contents);
    }

    fn write(self, out: &Path, mut manifest: RunManifest) -> Result<RunManifest, ReportError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| ReportError::Io { path, source }
        };
        fs::create_dir_all(out).map_err(io(out))?;
        for (rel, contents) in &self.files {
            let path = out.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io(parent))?;
            }
            fs::write(&path, contents).map_err(io(&path))?;
            manifest.outputs.push(OutputFile {
                path: rel.clone(),
                sha256: digest::hex(&digest::digest(&[contents.as_bytes()])),
            });
        }
        let path = out.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(io(&path))?;
        Ok(manifest)
    }
}

/// A rectangular table rendered as CSV, aligned text or JSON rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(title: &str, headers: &[&str]) -> Self {
        Self {
            title: title.to_owned(),
            headers: headers.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn render(&self, format: Format, run_digest: &str) -> String {
        match format {
            Format::Csv => self.csv(run_digest),
            Format::Table => self.text(run_digest),
            Format::Json => self.json(run_digest),
        }
    }

    fn csv(&self, run_digest: &str) -> String {
        let mut out = format!("# run_digest={run_digest}\n");
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn text(&self, run_digest: &str) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.headers[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| if i < 2 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
                .collect();
            padded.join("  ").trim_end().to_owned() + "\n"
        };
        let mut out = format!("{}\n", self.title);
        out.push_str(&line(&self.headers));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        for note in &self.notes {
            let _ = writeln!(out, "Note: {note}");
        }
        let _ = writeln!(out, "run_digest: {run_digest}");
        out
    }

    fn json(&self, run_digest: &str) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, Value> = self
                    .headers
                    .iter()
                    .zip(row)
                    .map(|(h, c)| {
                        let v = c.parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or_else(|| json!(c), Value::Number);
                        (h.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({"run_digest": run_digest, "title": self.title, "notes": self.notes, "rows": rows});
        serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
    }
}

/// Per-platform statistics kept in `summary.json`; enough to re-render
/// every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSummary {
    pub baseline_interval_s: f64,
    pub native_transfer_fee_usd: f64,
    pub setup_fee_usd: f64,
    pub operations: BTreeMap<OperationKind, OpSummary>,
    pub full_cycle: CycleSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub latency: SummaryStats,
    pub cost_usd: SummaryStats,
    pub relative_latency: RelativeMetric,
    pub relative_cost: RelativeMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub run_digest: String,
    pub std: String,
    pub priced_on: String,
    pub operations: Vec<OperationKind>,
    pub platforms: BTreeMap<Platform, PlatformSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlsFile {
    pub run_digest: String,
    pub flatten: FlattenOptions,
    pub chains: BTreeMap<String, AggregateMls>,
}

pub fn summary_file(run: &BenchRun, config: &BenchConfig, operations: &[OperationKind], run_digest: &str) -> SummaryFile {
    let platforms = run
        .platforms
        .iter()
        .map(|(p, r)| {
            let summary = PlatformSummary {
                baseline_interval_s: r.baseline_interval_s,
                native_transfer_fee_usd: r.transfer_fee_usd,
                setup_fee_usd: r.setup.iter().map(|s| s.fee_usd).fold(0.0, |a, b| a + b),
                operations: r.summary.iter().filter(|(op, _)| operations.contains(op)).map(|(op, s)| (*op, s.clone())).collect(),
                full_cycle: CycleSummary {
                    latency: r.full_cycle.latency_summary,
                    cost_usd: r.full_cycle.cost_summary,
                    relative_latency: r.full_cycle_relative_latency,
                    relative_cost: r.full_cycle_relative_cost,
                },
            };
            (*p, summary)
        })
        .collect();
    SummaryFile {
        run_digest: run_digest.to_owned(),
        std: "population".to_owned(),
        priced_on: config.priced_on.clone(),
        operations: operations.to_vec(),
        platforms,
    }
}

fn stats_table(summary: &SummaryFile, title: &str, decimals: usize, pick: fn(&OpSummary) -> SummaryStats, cycle: fn(&CycleSummary) -> SummaryStats) -> Table {
    let mut headers = vec!["Platform".to_owned(), "Metric".to_owned()];
    headers.extend(summary.operations.iter().map(|op| format!("DID {}", op.label())));
    headers.push("Full Cycle".to_owned());
    let mut table = Table { title: title.to_owned(), headers, rows: Vec::new(), notes: Vec::new() };
    for (platform, p) in &summary.platforms {
        for (name, metric) in [
            ("Mean", (|s: &SummaryStats| s.mean) as fn(&SummaryStats) -> f64),
            ("Std", |s| s.std),
            ("Min", |s| s.min),
            ("Max", |s| s.max),
        ] {
            let mut row = vec![platform.label().to_owned(), name.to_owned()];
            row.extend(summary.operations.iter().map(|op| format!("{:.decimals$}", metric(&pick(&p.operations[op])))));
            row.push(format!("{:.decimals$}", metric(&cycle(&p.full_cycle))));
            table.rows.push(row);
        }
    }
    table.notes.push("std is the population standard deviation".to_owned());
    table
}

pub fn latency_table(summary: &SummaryFile) -> Table {
    stats_table(summary, "Summary statistics of DID operation latencies (in seconds) by DLT.", 3, |s| s.latency, |c| c.latency)
}

pub fn cost_table(summary: &SummaryFile) -> Table {
    let mut t =
        stats_table(summary, "Summary statistics of DID operation costs (in USD) by DLT.", 6, |s| s.fee_usd, |c| c.cost_usd);
    t.notes.push(format!("USD prices as of {}", summary.priced_on));
    t
}

/// Operations × platforms matrix of relative metrics, with a baseline legend row.
pub fn heatmap_csv(summary: &SummaryFile, cost: bool, run_digest: &str) -> String {
    let mut out = format!("# run_digest={run_digest}\n");
    let kind = if cost { "cost" } else { "latency" };
    let _ = writeln!(out, "# kind={kind} unit=percent");
    let platforms: Vec<&Platform> = summary.platforms.keys().collect();
    out.push_str("operation");
    for p in &platforms {
        let _ = write!(out, ",{}", p.as_str());
    }
    out.push('\n');
    let cell = |m: &RelativeMetric| format!("{}", m.value);
    for op in &summary.operations {
        out.push_str(op.as_str());
        for p in &platforms {
            let s = &summary.platforms[*p].operations[op];
            let _ = write!(out, ",{}", cell(if cost { &s.relative_cost } else { &s.relative_latency }));
        }
        out.push('\n');
    }
    out.push_str("full_cycle");
    for p in &platforms {
        let c = &summary.platforms[*p].full_cycle;
        let _ = write!(out, ",{}", cell(if cost { &c.relative_cost } else { &c.relative_latency }));
    }
    out.push('\n');
    out.push_str(if cost { "baseline_transfer_fee_usd" } else { "baseline_interval_s" });
    for p in &platforms {
        let s = &summary.platforms[*p];
        let _ = write!(out, ",{}", if cost { s.native_transfer_fee_usd } else { s.baseline_interval_s });
    }
    out.push('\n');
    out
}

pub fn mls_operations_table(mls: &MlsFile) -> Table {
    let mut t = Table::new("MLS for DID Operations", &["Chain", "Operation", "Bits/Token", "Avg Tokens", "Bits/Txn", "Txns"]);
    for (chain, agg) in &mls.chains {
        for (op, r) in &agg.per_op {
            t.rows.push(vec![
                chain.clone(),
                op.label().to_owned(),
                format!("{:.4}", r.bits_per_token),
                format!("{:.1}", r.avg_tokens_per_txn),
                format!("{:.3}", r.bits_per_txn),
                r.txn_count.to_string(),
            ]);
        }
    }
    t
}

pub fn mls_total_table(mls: &MlsFile) -> Table {
    let mut t = Table::new(
        "Total MLS across all operations",
        &["Chain", "Operations", "Bits/Token", "Tokens/Txn", "Bits/Txn", "Bits (Total)", "Bits (Weighted)", "Txns"],
    );
    for (chain, agg) in &mls.chains {
        let ops: Vec<&str> = agg.per_op.keys().map(|op| op.as_str()).collect();
        t.rows.push(vec![
            chain.clone(),
            ops.join("+"),
            format!("{:.4}", agg.bits_per_token),
            format!("{:.1}", agg.tokens_per_txn),
            format!("{:.3}", agg.bits_per_txn_total),
            format!("{:.1}", agg.bits_total),
            format!("{:.1}", agg.bits_total_weighted),
            agg.txn_count.to_string(),
        ]);
    }
    t.notes.push("Bits (Total) = summed per-operation bits/txn times all transactions".to_owned());
    t.notes.push("Bits (Weighted) = sum over operations of bits/txn times that operation's transactions".to_owned());
    t
}

fn samples_csv(run: &BenchRun, operations: &[OperationKind], run_digest: &str) -> String {
    let mut out = format!("# run_digest={run_digest}\nplatform,op,iteration,latency_s,fee_usd,fee_native\n");
    for (platform, r) in &run.platforms {
        for op in operations {
            for s in &r.samples[op] {
                let _ = writeln!(out, "{},{},{},{},{},{}", platform.as_str(), op.as_str(), s.iteration, s.latency_s, s.fee_usd, s.fee_native);
            }
        }
    }
    out
}

fn json_text<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes") + "\n"
}

fn add_tables(artifacts: &mut Artifacts, summary: Option<&SummaryFile>, mls: Option<&MlsFile>, format: Format, run_digest: &str) {
    let ext = format.extension();
    if let Some(summary) = summary {
        artifacts.add(format!("latency_table.{ext}"), latency_table(summary).render(format, run_digest));
        artifacts.add(format!("cost_table.{ext}"), cost_table(summary).render(format, run_digest));
        artifacts.add("heatmap_latency.csv", heatmap_csv(summary, false, run_digest));
        artifacts.add("heatmap_cost.csv", heatmap_csv(summary, true, run_digest));
    }
    if let Some(mls) = mls {
        artifacts.add(format!("mls_operations.{ext}"), mls_operations_table(mls).render(format, run_digest));
        artifacts.add(format!("mls_total.{ext}"), mls_total_table(mls).render(format, run_digest));
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub out: PathBuf,
    pub format: Format,
    /// Operations to report; the full cycle always runs.
    pub operations: Vec<OperationKind>,
}

/// MLS over the run's Update/Revoke/Delete payloads, restricted to `operations`.
pub fn run_mls(run: &BenchRun, options: &FlattenOptions, operations: &[OperationKind]) -> Result<BTreeMap<String, AggregateMls>, MlsError> {
    let mut chains = BTreeMap::new();
    for (platform, r) in &run.platforms {
        let mut per_op = BTreeMap::new();
        for op in MLS_OPERATIONS.iter().filter(|op| operations.contains(op)) {
            if let Some(payloads) = r.payloads.get(op).filter(|p| !p.is_empty()) {
                per_op.insert(*op, mls_per_operation(payloads, options)?);
            }
        }
        if !per_op.is_empty() {
            chains.insert(platform.as_str().to_owned(), aggregate_mls(&per_op)?);
        }
    }
    Ok(chains)
}

pub fn simulate(config: &BenchConfig, options: &SimulateOptions) -> Result<RunManifest, ReportError> {
    config.validate()?;
    let operations: Vec<OperationKind> = OperationKind::ALL.into_iter().filter(|op| options.operations.contains(op)).collect();
    let run = run_benchmark(config)?;
    let config_digest = config.digest();
    let ops_key = serde_json::to_string(&operations).expect("operations serialize");
    let format_key = format!("{:?}", options.format);
    let digest = run_digest(Mode::Simulate, &[config_digest.as_bytes(), ops_key.as_bytes(), format_key.as_bytes()]);

    let summary = summary_file(&run, config, &operations, &digest);
    let mls = MlsFile { run_digest: digest.clone(), flatten: config.mls.clone(), chains: run_mls(&run, &config.mls, &operations)? };

    let mut artifacts = Artifacts::default();
    artifacts.add("samples.csv", samples_csv(&run, &operations, &digest));
    artifacts.add("summary.json", json_text(&summary));
    artifacts.add("mls.json", json_text(&mls));
    add_tables(&mut artifacts, Some(&summary), Some(&mls), options.format, &digest);
    for (platform, r) in &run.platforms {
        for op in MLS_OPERATIONS.iter().filter(|op| operations.contains(op)) {
            for (i, payload) in r.payloads.get(op).into_iter().flatten().enumerate() {
                artifacts.add(format!("corpus/{}/{}/{i:04}.json", platform.as_str(), op.as_str()), json_text(payload));
            }
        }
    }
    let timestamp = chrono::DateTime::from_timestamp(config.sim_epoch_unix_s as i64, 0)
        .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string());
    let manifest = RunManifest {
        run_digest: digest,
        tool_version: TOOL_VERSION.to_owned(),
        mode: Mode::Simulate,
        config_digest: Some(config_digest),
        seed: Some(config.seed),
        timestamp,
        outputs: Vec::new(),
    };
    artifacts.write(&options.out, manifest)
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub manifest: RunManifest,
    pub mls: MlsFile,
    pub warnings: Vec<String>,
}

/// MLS tables for a `<chain>/<operation>/*.json` corpus.
pub fn analyze(corpus_dir: &Path, out: &Path, format: Format, options: &FlattenOptions) -> Result<AnalyzeOutcome, ReportError> {
    let corpus = read_corpus(corpus_dir)?;
    let chains = analyze_corpus(&corpus, options)?;
    let chains_key = serde_json::to_string(&chains).expect("mls serializes");
    let digest = run_digest(Mode::Analyze, &[chains_key.as_bytes(), format!("{format:?}").as_bytes()]);
    let mls = MlsFile { run_digest: digest.clone(), flatten: options.clone(), chains };
    let mut artifacts = Artifacts::default();
    artifacts.add("mls.json", json_text(&mls));
    add_tables(&mut artifacts, None, Some(&mls), format, &digest);
    let manifest = RunManifest {
        run_digest: digest,
        tool_version: TOOL_VERSION.to_owned(),
        mode: Mode::Analyze,
        config_digest: None,
        seed: None,
        timestamp: None,
        outputs: Vec::new(),
    };
    let manifest = artifacts.write(out, manifest)?;
    Ok(AnalyzeOutcome { manifest, mls, warnings: corpus.warnings })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ReportError> {
    let input = |message: String| ReportError::Input { path: path.display().to_string(), message };
    let text = fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| input(e.to_string()))
}

/// Re-renders the tables of a previous simulate or analyze run. Writes them
/// under `out` when given; always returns the concatenated rendering.
pub fn report(run_dir: &Path, out: Option<&Path>, format: Format) -> Result<String, ReportError> {
    let summary_path = run_dir.join("summary.json");
    let summary: Option<SummaryFile> = if summary_path.exists() { Some(read_json(&summary_path)?) } else { None };
    let mls: MlsFile = read_json(&run_dir.join("mls.json"))?;
    let digest = mls.run_digest.clone();

    let mut artifacts = Artifacts::default();
    add_tables(&mut artifacts, summary.as_ref(), Some(&mls), format, &digest);
    let rendered: String = artifacts.files.iter().map(|(name, body)| format!("== {name}\n{body}")).collect::<Vec<_>>().join("\n");
    if let Some(out) = out {
        let manifest = RunManifest {
            run_digest: digest,
            tool_version: TOOL_VERSION.to_owned(),
            mode: Mode::Report,
            config_digest: None,
            seed: None,
            timestamp: None,
            outputs: Vec::new(),
        };
        artifacts.write(out, manifest)?;
    }
    Ok(rendered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_summary() -> SummaryFile {
        SummaryFile {
            run_digest: "d".into(),
            std: "population".into(),
            priced_on: "2025-04-15".into(),
            operations: OperationKind::ALL.to_vec(),
            platforms: BTreeMap::new(),
        }
    }

    #[test]
    fn empty_selection_renders_header_only() {
        let csv = latency_table(&empty_summary()).render(Format::Csv, "d");
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, ["Platform,Metric,DID Create,DID Resolve,DID Update,DID Revoke,DID Delete,Full Cycle"]);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("table".parse::<Format>().unwrap(), Format::Table);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn text_table_aligns() {
        let mut t = Table::new("T", &["A", "B", "C"]);
        t.rows.push(vec!["x".into(), "y".into(), "1.000".into()]);
        let text = t.render(Format::Table, "d");
        assert!(text.contains("A  B      C\n"));
        assert!(text.contains("x  y  1.000\n"));
    }
}
