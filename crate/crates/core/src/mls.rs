//! Metadata-Leakage Score.
//!
//! A payload is flattened to `(path, value)` tokens. Over a corpus of
//! payloads for one operation, `H` is the Shannon entropy of the empirical
//! token distribution, bits/token is `H / N_total`, and MLS (bits per
//! transaction) is bits/token times the mean token count per payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::did::OperationKind;

#[derive(Debug, Error)]
pub enum MlsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus layout violation at {path}: {reason}")]
    Layout { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ListPaths {
    /// `a[0]`, `a[1]`: list position is part of the path.
    #[default]
    Indexed,
    /// `a[]` for every element.
    IndexFree,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlattenOptions {
    #[serde(default)]
    pub list_paths: ListPaths,
    /// When nonzero, timestamp-like leaves are floored to this many seconds
    /// before tokenizing.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub timestamp_bucket_s: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub path: String,
    pub value: String,
}

impl Token {
    pub fn new(path: impl Into<String>, value: impl Into<String>) -> Self {
        Self { path: path.into(), value: value.into() }
    }
}

fn leaf_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_timestamp_path(path: &str) -> bool {
    let last = path.rsplit('.').next().unwrap_or(path).to_ascii_lowercase();
    last.contains("timestamp") || last.contains("valid_start") || last == "date" || last.ends_with("time_iso")
}

fn bucket(value: &Value, bucket_s: u64) -> Option<String> {
    let floor = |secs: i64| secs - secs.rem_euclid(bucket_s as i64);
    match value {
        Value::Number(n) => n.as_i64().map(|s| floor(s).to_string()),
        Value::String(s) => {
            if let Ok(t) = chrono::DateTime::parse_from_rfc3339(s) {
                let b = chrono::DateTime::from_timestamp(floor(t.timestamp()), 0)?;
                return Some(b.format("%Y-%m-%dT%H:%M:%SZ").to_string());
            }
            let secs: i64 = s.split('.').next()?.parse().ok()?;
            Some(floor(secs).to_string())
        }
        _ => None,
    }
}

/// One token per leaf. Empty maps and lists contribute nothing.
pub fn flatten_payload(payload: &Value, options: &FlattenOptions) -> Vec<Token> {
    fn walk(value: &Value, path: &str, options: &FlattenOptions, out: &mut Vec<Token>) {
        match value {
            Value::Object(map) => {
                for (key, child) in map {
                    let next = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                    walk(child, &next, options, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    let next = match options.list_paths {
                        ListPaths::Indexed => format!("{path}[{i}]"),
                        ListPaths::IndexFree => format!("{path}[]"),
                    };
                    walk(child, &next, options, out);
                }
            }
            leaf => {
                let value = match options.timestamp_bucket_s {
                    b if b > 0 && is_timestamp_path(path) => bucket(leaf, b).unwrap_or_else(|| leaf_string(leaf)),
                    _ => leaf_string(leaf),
                };
                out.push(Token { path: path.to_owned(), value });
            }
        }
    }
    let mut out = Vec::new();
    walk(payload, "", options, &mut out);
    out
}

/// Token counts over a corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenDistribution {
    pub counts: BTreeMap<Token, u64>,
    pub total_tokens: u64,
    pub txn_count: usize,
    pub tokens_per_txn: Vec<usize>,
}

impl TokenDistribution {
    pub fn from_token_lists<I>(lists: I) -> Self
    where
        I: IntoIterator<Item = Vec<Token>>,
    {
        let mut dist = TokenDistribution::default();
        for tokens in lists {
            dist.txn_count += 1;
            dist.tokens_per_txn.push(tokens.len());
            dist.total_tokens += tokens.len() as u64;
            for token in tokens {
                *dist.counts.entry(token).or_insert(0) += 1;
            }
        }
        dist
    }

    pub fn from_payloads<'a, I>(payloads: I, options: &FlattenOptions) -> Self
    where
        I: IntoIterator<Item = &'a Value>,
    {
        Self::from_token_lists(payloads.into_iter().map(|p| flatten_payload(p, options)))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// `-Σ p log2 p` over the empirical distribution.
pub fn shannon_entropy(dist: &TokenDistribution) -> Result<f64, MlsError> {
    if dist.total_tokens == 0 {
        return Err(MlsError::EmptyCorpus);
    }
    let n = dist.total_tokens as f64;
    let h: f64 = dist
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

pub fn bits_per_token(dist: &TokenDistribution) -> Result<f64, MlsError> {
    Ok(shannon_entropy(dist)? / dist.total_tokens as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlsResult {
    pub raw_entropy: f64,
    pub bits_per_token: f64,
    pub avg_tokens_per_txn: f64,
    pub bits_per_txn: f64,
    pub txn_count: usize,
    pub total_tokens: u64,
    pub distinct_tokens: usize,
}

impl MlsResult {
    pub fn from_distribution(dist: &TokenDistribution) -> Result<Self, MlsError> {
        if dist.txn_count == 0 || dist.total_tokens == 0 {
            return Err(MlsError::EmptyCorpus);
        }
        let raw_entropy = shannon_entropy(dist)?;
        let bits_per_token = raw_entropy / dist.total_tokens as f64;
        let avg_tokens_per_txn = dist.total_tokens as f64 / dist.txn_count as f64;
        Ok(Self {
            raw_entropy,
            bits_per_token,
            avg_tokens_per_txn,
            bits_per_txn: bits_per_token * avg_tokens_per_txn,
            txn_count: dist.txn_count,
            total_tokens: dist.total_tokens,
            distinct_tokens: dist.distinct(),
        })
    }
}

pub fn mls_per_operation(corpus: &[Value], options: &FlattenOptions) -> Result<MlsResult, MlsError> {
    MlsResult::from_distribution(&TokenDistribution::from_payloads(corpus, options))
}

/// Cross-operation totals for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMls {
    pub per_op: BTreeMap<OperationKind, MlsResult>,
    /// Mean of the per-operation bits/token.
    pub bits_per_token: f64,
    /// Mean of the per-operation average token counts.
    pub tokens_per_txn: f64,
    /// Σ_op MLS_op.
    pub bits_per_txn_total: f64,
    pub txn_count: usize,
    /// `bits_per_txn_total` times the total transaction count.
    pub bits_total: f64,
    /// Σ_op MLS_op × txn_count_op.
    pub bits_total_weighted: f64,
}

pub fn aggregate_mls(per_op: &BTreeMap<OperationKind, MlsResult>) -> Result<AggregateMls, MlsError> {
    if per_op.is_empty() {
        return Err(MlsError::EmptyCorpus);
    }
    let k = per_op.len() as f64;
    let bits_per_txn_total: f64 = per_op.values().map(|r| r.bits_per_txn).sum();
    let txn_count: usize = per_op.values().map(|r| r.txn_count).sum();
    Ok(AggregateMls {
        per_op: per_op.clone(),
        bits_per_token: per_op.values().map(|r| r.bits_per_token).sum::<f64>() / k,
        tokens_per_txn: per_op.values().map(|r| r.avg_tokens_per_txn).sum::<f64>() / k,
        bits_per_txn_total,
        txn_count,
        bits_total: bits_per_txn_total * txn_count as f64,
        bits_total_weighted: per_op.values().map(|r| r.bits_per_txn * r.txn_count as f64).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnonymityEstimate {
    pub bits: f64,
    pub equivalence_classes: f64,
    /// Always true: the estimate assumes independent bits.
    pub approximate: bool,
}

pub fn anonymity_set(bits: f64) -> AnonymityEstimate {
    let bits = bits.max(0.0);
    AnonymityEstimate { bits, equivalence_classes: bits.exp2(), approximate: true }
}

/// Bits accumulated over `operations` repetitions at `bits_per_op` each.
pub fn accumulated_bits(operations: u64, bits_per_op: f64) -> f64 {
    operations as f64 * bits_per_op
}

/// Payloads grouped as chain → operation → files in name order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub chains: BTreeMap<String, BTreeMap<OperationKind, Vec<Value>>>,
    /// Files skipped because they did not parse.
    pub warnings: Vec<String>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, MlsError> {
    let io = |source| MlsError::Io { path: dir.display().to_string(), source };
    let mut entries: Vec<PathBuf> = fs::read_dir(dir).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
    entries.sort();
    Ok(entries)
}

fn is_hidden(path: &Path) -> bool {
    path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'))
}

/// Reads a `<chain>/<operation>/*.json` tree.
pub fn read_corpus(root: &Path) -> Result<Corpus, MlsError> {
    let layout = |path: &Path, reason: &str| MlsError::Layout { path: path.display().to_string(), reason: reason.to_owned() };
    if !root.is_dir() {
        return Err(layout(root, "not a directory"));
    }
    let mut corpus = Corpus::default();
    for chain_dir in sorted_entries(root)?.into_iter().filter(|p| !is_hidden(p)) {
        if !chain_dir.is_dir() {
            return Err(layout(&chain_dir, "expected a chain directory"));
        }
        let chain = chain_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        let ops = corpus.chains.entry(chain).or_default();
        for op_dir in sorted_entries(&chain_dir)?.into_iter().filter(|p| !is_hidden(p)) {
            let name = op_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let op: OperationKind = name.parse().map_err(|_| layout(&op_dir, "expected an operation directory"))?;
            if !op_dir.is_dir() {
                return Err(layout(&op_dir, "expected an operation directory"));
            }
            let payloads = ops.entry(op).or_default();
            for file in sorted_entries(&op_dir)?.into_iter().filter(|p| !is_hidden(p)) {
                if file.extension().and_then(|e| e.to_str()) != Some("json") || !file.is_file() {
                    corpus.warnings.push(format!("{}: not a .json file, skipped", file.display()));
                    continue;
                }
                let text = fs::read_to_string(&file)
                    .map_err(|source| MlsError::Io { path: file.display().to_string(), source })?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(value) => payloads.push(value),
                    Err(e) => corpus.warnings.push(format!("{}: {e}", file.display())),
                }
            }
        }
    }
    Ok(corpus)
}

/// Per-operation and aggregate MLS for every chain in a corpus. Operations
/// with no readable payloads are left out; a corpus with none at all is
/// an error.
pub fn analyze_corpus(
    corpus: &Corpus,
    options: &FlattenOptions,
) -> Result<BTreeMap<String, AggregateMls>, MlsError> {
    let mut out = BTreeMap::new();
    for (chain, ops) in &corpus.chains {
        let mut per_op = BTreeMap::new();
        for (op, payloads) in ops {
            if !payloads.is_empty() {
                per_op.insert(*op, mls_per_operation(payloads, options)?);
            }
        }
        if !per_op.is_empty() {
            out.insert(chain.clone(), aggregate_mls(&per_op)?);
        }
    }
    if out.is_empty() {
        return Err(MlsError::EmptyCorpus);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn opts() -> FlattenOptions {
        FlattenOptions::default()
    }

    #[test]
    fn flatten_two_leaves() {
        let mut tokens = flatten_payload(&json!({"operation": "update", "did": "X"}), &opts());
        tokens.sort();
        assert_eq!(tokens, vec![Token::new("did", "X"), Token::new("operation", "update")]);
    }

    #[test]
    fn flatten_lists() {
        let tokens = flatten_payload(&json!({"a": [1, 2]}), &opts());
        assert_eq!(tokens, vec![Token::new("a[0]", "1"), Token::new("a[1]", "2")]);
        let free = FlattenOptions { list_paths: ListPaths::IndexFree, ..opts() };
        assert_eq!(flatten_payload(&json!({"a": [1, 2]}), &free), vec![Token::new("a[]", "1"), Token::new("a[]", "2")]);
        assert!(flatten_payload(&json!({}), &opts()).is_empty());
        assert_eq!(flatten_payload(&json!({"e": null, "b": true}), &opts()).len(), 2);
    }

    #[test]
    fn timestamp_bucketing() {
        let o = FlattenOptions { timestamp_bucket_s: 60, ..opts() };
        let a = flatten_payload(&json!({"consensus_timestamp": "1747825198.342924000", "x": "1747825198.1"}), &o);
        assert!(a.contains(&Token::new("consensus_timestamp", "1747825140")));
        assert!(a.contains(&Token::new("x", "1747825198.1")));
        let b = flatten_payload(&json!({"m": {"timestamp": "2025-05-21T10:59:57.905Z"}}), &o);
        assert_eq!(b, vec![Token::new("m.timestamp", "2025-05-21T10:59:00Z")]);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(matches!(shannon_entropy(&TokenDistribution::default()), Err(MlsError::EmptyCorpus)));
        assert!(matches!(mls_per_operation(&[], &opts()), Err(MlsError::EmptyCorpus)));
        assert!(matches!(aggregate_mls(&BTreeMap::new()), Err(MlsError::EmptyCorpus)));
    }

    #[test]
    fn anonymity_trivia() {
        assert_eq!(anonymity_set(0.0).equivalence_classes, 1.0);
        assert_eq!(anonymity_set(1.0).equivalence_classes, 2.0);
        assert!(anonymity_set(3.0).approximate);
    }

    #[test]
    fn single_op_aggregate() {
        let r = mls_per_operation(&[json!({"op": "update", "id": "A"}), json!({"op": "update", "id": "B"})], &opts()).unwrap();
        let agg = aggregate_mls(&BTreeMap::from([(OperationKind::Update, r)])).unwrap();
        assert_eq!(agg.bits_per_txn_total, r.bits_per_txn);
        assert_eq!(agg.bits_per_token, r.bits_per_token);
        assert_eq!(agg.txn_count, 2);
    }
}
