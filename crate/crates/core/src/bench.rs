//! Benchmark runs: per-platform lifecycle iterations, summary statistics,
//! Full Cycle composites and relative latency/cost.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::{BenchConfig, ConfigError};
use crate::did::{OperationKind, Resolution};
use crate::drivers::{driver_for, DriverError, OperationOutcome};
use crate::ledger::{Platform, TxReceipt};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no samples to summarize")]
    EmptySamples,
    #[error("per-operation sample lists differ in length")]
    LengthMismatch,
    #[error("baseline must be positive")]
    ZeroBaseline,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{platform} iteration {iteration}: {source}")]
    Driver { platform: Platform, iteration: usize, source: DriverError },
    #[error("{platform} iteration {iteration}: {message}")]
    Lifecycle { platform: Platform, iteration: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(SummaryStats { n: samples.len(), mean: min, std: 0.0, min, max });
    }
    Ok(SummaryStats { n: samples.len(), mean: mean.clamp(min, max), std: var.sqrt(), min, max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullCycleResult {
    pub latency: Vec<f64>,
    pub cost_usd: Vec<f64>,
    pub latency_summary: SummaryStats,
    pub cost_summary: SummaryStats,
}

/// Element-wise sum of aligned per-operation lists.
pub fn full_cycle_sum(per_op: &[&[f64]]) -> Result<Vec<f64>, BenchError> {
    let n = per_op.first().map_or(0, |l| l.len());
    if per_op.iter().any(|l| l.len() != n) {
        return Err(BenchError::LengthMismatch);
    }
    Ok((0..n).map(|i| per_op.iter().map(|l| l[i]).sum()).collect())
}

pub fn full_cycle(latency: &[&[f64]], cost_usd: &[&[f64]]) -> Result<FullCycleResult, BenchError> {
    let latency = full_cycle_sum(latency)?;
    let cost_usd = full_cycle_sum(cost_usd)?;
    Ok(FullCycleResult {
        latency_summary: summarize(&latency)?,
        cost_summary: summarize(&cost_usd)?,
        latency,
        cost_usd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Latency,
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMetric {
    pub kind: MetricKind,
    /// Percent of the baseline.
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
}

fn relative(kind: MetricKind, numerator: f64, denominator: f64) -> Result<RelativeMetric, BenchError> {
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(BenchError::ZeroBaseline);
    }
    Ok(RelativeMetric { kind, value: numerator / denominator * 100.0, numerator, denominator })
}

/// Mean latency as a percentage of the block/consensus interval.
pub fn relative_latency(mean_s: f64, baseline_interval_s: f64) -> Result<RelativeMetric, BenchError> {
    relative(MetricKind::Latency, mean_s, baseline_interval_s)
}

/// Mean fee as a percentage of the native transfer fee.
pub fn relative_cost(mean_fee_usd: f64, transfer_fee_usd: f64) -> Result<RelativeMetric, BenchError> {
    relative(MetricKind::Cost, mean_fee_usd, transfer_fee_usd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub platform: Platform,
    pub op: OperationKind,
    pub iteration: usize,
    pub latency_s: f64,
    pub fee_usd: f64,
    pub fee_native: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpSummary {
    pub latency: SummaryStats,
    pub fee_usd: SummaryStats,
    pub fee_native: SummaryStats,
    pub relative_latency: RelativeMetric,
    pub relative_cost: RelativeMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformRun {
    pub platform: Platform,
    pub baseline_interval_s: f64,
    pub transfer_fee_usd: f64,
    /// Samples per operation, in iteration order.
    pub samples: BTreeMap<OperationKind, Vec<Sample>>,
    /// Observable records of every write that produced one, per operation.
    pub payloads: BTreeMap<OperationKind, Vec<Value>>,
    /// Writes made once per run (not part of any cycle).
    pub setup: Vec<TxReceipt>,
    pub summary: BTreeMap<OperationKind, OpSummary>,
    pub full_cycle: FullCycleResult,
    pub full_cycle_relative_latency: RelativeMetric,
    pub full_cycle_relative_cost: RelativeMetric,
}

impl PlatformRun {
    pub fn latencies(&self, op: OperationKind) -> Vec<f64> {
        self.samples[&op].iter().map(|s| s.latency_s).collect()
    }

    pub fn fees(&self, op: OperationKind) -> Vec<f64> {
        self.samples[&op].iter().map(|s| s.fee_usd).collect()
    }

    pub fn payload_count(&self) -> usize {
        self.payloads.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub platforms: BTreeMap<Platform, PlatformRun>,
}

impl BenchRun {
    pub fn sample_count(&self) -> usize {
        self.platforms.values().flat_map(|p| p.samples.values()).map(Vec::len).sum()
    }
}

fn record(
    samples: &mut BTreeMap<OperationKind, Vec<Sample>>,
    payloads: &mut BTreeMap<OperationKind, Vec<Value>>,
    iteration: usize,
    outcome: &OperationOutcome,
    platform: Platform,
) {
    samples.entry(outcome.op).or_default().push(Sample {
        platform,
        op: outcome.op,
        iteration,
        latency_s: outcome.latency,
        fee_usd: outcome.fee_usd,
        fee_native: outcome.fee_native,
    });
    if let Some(payload) = outcome.receipt.as_ref().and_then(|r| r.payload.clone()) {
        payloads.entry(outcome.op).or_default().push(payload);
    }
}

/// Runs `iterations` Create→Resolve→Update→Revoke→Delete cycles, each on a
/// fresh DID, on one platform.
pub fn run_platform(config: &BenchConfig, platform: Platform) -> Result<PlatformRun, BenchError> {
    let mut driver = driver_for(platform, config);
    let mut samples = BTreeMap::new();
    let mut payloads = BTreeMap::new();
    for iteration in 0..config.iterations {
        let driver_err = |source| BenchError::Driver { platform, iteration, source };
        let created = driver.create().map_err(driver_err)?;
        let did = created.did.clone();
        record(&mut samples, &mut payloads, iteration, &created, platform);

        let resolved = driver.resolve(&did).map_err(driver_err)?;
        if resolved.resolution.as_ref().and_then(Resolution::document).is_none() {
            return Err(BenchError::Lifecycle { platform, iteration, message: format!("{did} did not resolve") });
        }
        record(&mut samples, &mut payloads, iteration, &resolved, platform);

        let change = driver.generator().workload_change(&did);
        let fragment = change.fragment_id().to_owned();
        let updated = driver.update(&did, &change).map_err(driver_err)?;
        record(&mut samples, &mut payloads, iteration, &updated, platform);
        let revoked = driver.revoke(&did, &fragment).map_err(driver_err)?;
        record(&mut samples, &mut payloads, iteration, &revoked, platform);
        let deleted = driver.delete(&did).map_err(driver_err)?;
        record(&mut samples, &mut payloads, iteration, &deleted, platform);

        // Post-delete check; its latency is not recorded.
        let check = driver.resolve(&did).map_err(driver_err)?;
        if !matches!(check.resolution, Some(Resolution::Deactivated(_))) {
            return Err(BenchError::Lifecycle { platform, iteration, message: format!("{did} still active after delete") });
        }
    }
    summarize_platform(config, platform, samples, payloads, driver.setup_receipts().to_vec())
}

fn summarize_platform(
    config: &BenchConfig,
    platform: Platform,
    samples: BTreeMap<OperationKind, Vec<Sample>>,
    payloads: BTreeMap<OperationKind, Vec<Value>>,
    setup: Vec<TxReceipt>,
) -> Result<PlatformRun, BenchError> {
    let chain = config.chain(platform);
    let baseline = chain.baseline_interval_s;
    let transfer = chain.fees.native_transfer_fee_usd;
    let column = |op: OperationKind, f: fn(&Sample) -> f64| -> Vec<f64> { samples[&op].iter().map(f).collect() };
    let mut summary = BTreeMap::new();
    for op in OperationKind::ALL {
        let latency = summarize(&column(op, |s| s.latency_s))?;
        let fee_usd = summarize(&column(op, |s| s.fee_usd))?;
        summary.insert(
            op,
            OpSummary {
                relative_latency: relative_latency(latency.mean, baseline)?,
                relative_cost: relative_cost(fee_usd.mean, transfer)?,
                latency,
                fee_usd,
                fee_native: summarize(&column(op, |s| s.fee_native))?,
            },
        );
    }
    let latencies: Vec<Vec<f64>> = OperationKind::ALL.iter().map(|op| column(*op, |s| s.latency_s)).collect();
    let fees: Vec<Vec<f64>> = OperationKind::ALL.iter().map(|op| column(*op, |s| s.fee_usd)).collect();
    let full = full_cycle(
        &latencies.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        &fees.iter().map(Vec::as_slice).collect::<Vec<_>>(),
    )?;
    Ok(PlatformRun {
        platform,
        baseline_interval_s: baseline,
        transfer_fee_usd: transfer,
        full_cycle_relative_latency: relative_latency(full.latency_summary.mean, baseline)?,
        full_cycle_relative_cost: relative_cost(full.cost_summary.mean, transfer)?,
        samples,
        payloads,
        setup,
        summary,
        full_cycle: full,
    })
}

/// Runs every selected platform. Platforms share nothing, so the result
/// for one platform does not depend on which others are selected.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let mut platforms = BTreeMap::new();
    for platform in &config.platforms {
        platforms.insert(*platform, run_platform(config, *platform)?);
    }
    Ok(BenchRun { platforms })
}
