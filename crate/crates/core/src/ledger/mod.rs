//! Deterministic, seeded ledger back-ends.
//!
//! Three architectures are modelled: a contract registry with an event log
//! (Ethereum/ERC-1056 style), a native keyed DID object (XRPL style), and an
//! ordered consensus topic replayed through a mirror node (Hedera style).
//! Time is simulated; every receipt timestamp comes from a [`SimClock`]
//! advanced by the sampled latency.

pub mod contract;
pub mod fees;
pub mod latency;
pub mod native;
pub mod stream;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::did::{Did, OperationKind};
pub use fees::{Fee, FeeSchedule, OpFee};
pub use latency::{LatencyKey, LatencyModel, LatencyShape, LatencySpec, PlatformLatency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Ethereum,
    Xrpl,
    Hedera,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Ethereum, Platform::Xrpl, Platform::Hedera];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Ethereum => "ethereum",
            Platform::Xrpl => "xrpl",
            Platform::Hedera => "hedera",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Platform::Ethereum => "Ethereum",
            Platform::Xrpl => "XRPL",
            Platform::Hedera => "Hedera",
        }
    }

    fn index(self) -> u64 {
        match self {
            Platform::Ethereum => 0,
            Platform::Xrpl => 1,
            Platform::Hedera => 2,
        }
    }

    /// Independent RNG stream for `(seed, platform, purpose)`.
    pub fn rng(self, seed: u64, purpose: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.index() * 64 + purpose);
        rng
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ethereum" | "eth" | "ethr" => Ok(Platform::Ethereum),
            "xrpl" | "xrp" => Ok(Platform::Xrpl),
            "hedera" | "hbar" => Ok(Platform::Hedera),
            other => Err(format!("unknown platform {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("no latency model entry for {platform} {key:?}")]
    MissingModelEntry { platform: Platform, key: LatencyKey },
    #[error("DIDDelete on {0}, which has no ledger entry")]
    DeleteMissingEntry(String),
    #[error("unknown topic {0}")]
    UnknownTopic(String),
    #[error("invalid latency model: {0}")]
    InvalidLatency(String),
    #[error("invalid fee schedule: {0}")]
    InvalidFee(String),
}

/// Simulated time in nanoseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimClock {
    now_ns: u64,
}

impl SimClock {
    pub fn starting_at(unix_seconds: u64) -> Self {
        Self { now_ns: unix_seconds * 1_000_000_000 }
    }

    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    pub fn now_seconds(&self) -> f64 {
        self.now_ns as f64 / 1e9
    }

    /// Moves time forward by `seconds` (at least 1 ns) and returns the new time.
    pub fn advance(&mut self, seconds: f64) -> u64 {
        let step = (seconds * 1e9).round().max(1.0) as u64;
        self.now_ns += step;
        self.now_ns
    }
}

/// Platform-specific ledger metadata of a confirmed transaction.
#[derive(Debug, Clone, PartialEq)]
pub enum ReceiptDetails {
    Contract {
        block_number: u64,
        block_hash: String,
        tx_index: u64,
        gas_used: u64,
        log_index: u64,
        previous_change: u64,
        nonce: u64,
        block_timestamp: u64,
    },
    Native { ledger_index: u64, ledger_hash: String, tx_index: u64, account_sequence: u64 },
    Stream { topic_id: String, sequence_number: u64, running_hash: String, valid_start_ns: u64 },
    TopicCreated { topic_id: String },
}

/// One simulated ledger write.
#[derive(Debug, Clone, PartialEq)]
pub struct TxReceipt {
    pub platform: Platform,
    pub op: OperationKind,
    pub latency: f64,
    pub fee_native: f64,
    pub fee_usd: f64,
    /// Observable record as seen by a chain observer; attached by the method driver.
    pub payload: Option<Value>,
    pub ledger_position: u64,
    pub timestamp_ns: u64,
    pub tx_hash: String,
    pub details: ReceiptDetails,
}

/// Latency and completion time of a read; reads are always free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadReceipt {
    pub latency: f64,
    pub timestamp_ns: u64,
}

/// Clock, samplers and fee schedule shared by one ledger instance.
#[derive(Debug, Clone)]
pub struct LedgerContext {
    pub platform: Platform,
    pub clock: SimClock,
    pub latency: LatencyModel,
    pub fees: FeeSchedule,
    /// Block, ledger-close or consensus interval in seconds.
    pub interval_s: f64,
    pub seed: u64,
    latency_rng: ChaCha8Rng,
    fee_rng: ChaCha8Rng,
    next_position: u64,
}

impl LedgerContext {
    pub fn new(
        platform: Platform,
        seed: u64,
        clock: SimClock,
        latency: LatencyModel,
        fees: FeeSchedule,
        interval_s: f64,
    ) -> Self {
        Self {
            platform,
            clock,
            latency: latency.for_platform(platform),
            fees,
            interval_s,
            seed,
            latency_rng: platform.rng(seed, 1),
            fee_rng: platform.rng(seed, 2),
            next_position: 1,
        }
    }

    /// Context for `platform` using the latency, fee and baseline settings of `config`.
    pub fn from_config(platform: Platform, config: &crate::config::BenchConfig) -> Self {
        let chain = config.chain(platform);
        Self::new(
            platform,
            config.seed,
            SimClock::starting_at(config.sim_epoch_unix_s),
            config.latency_model(),
            chain.fees.clone(),
            chain.baseline_interval_s,
        )
    }

    /// Number of ledger writes so far.
    pub fn writes(&self) -> u64 {
        self.next_position - 1
    }

    pub fn sample(&mut self, key: LatencyKey) -> Result<f64, LedgerError> {
        let dist = self.latency.get(self.platform, key)?;
        Ok(dist.sample(&mut self.latency_rng))
    }

    pub fn quote(&mut self, op: OperationKind, payload_bytes: usize) -> Fee {
        self.fees.quote(op, payload_bytes, &mut self.fee_rng)
    }

    pub fn charge(&mut self, fee: &OpFee, payload_bytes: usize) -> Fee {
        self.fees.charge(fee, payload_bytes, &mut self.fee_rng)
    }

    /// Samples a read latency and advances the clock past it.
    pub fn read(&mut self, op: OperationKind) -> Result<ReadReceipt, LedgerError> {
        let latency = self.sample(LatencyKey::Op(op))?;
        let timestamp_ns = self.clock.advance(latency);
        Ok(ReadReceipt { latency, timestamp_ns })
    }

    fn take_position(&mut self) -> u64 {
        let p = self.next_position;
        self.next_position += 1;
        p
    }

    /// Interval bucket a timestamp falls in, offset by `genesis`.
    fn interval_index(&self, genesis: u64, timestamp_ns: u64) -> u64 {
        genesis + (timestamp_ns as f64 / 1e9 / self.interval_s).floor() as u64
    }

    fn tx_hash(&self, position: u64, parts: &[&[u8]]) -> String {
        let seed = self.seed.to_le_bytes();
        let pos = position.to_le_bytes();
        let mut all: Vec<&[u8]> = vec![self.platform.as_str().as_bytes(), &seed, &pos];
        all.extend_from_slice(parts);
        crate::digest::hex(&crate::digest::digest(&all))
    }
}

pub(crate) fn did_bytes(did: &Did) -> Vec<u8> {
    did.to_string().into_bytes()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_is_monotone() {
        let mut clock = SimClock::starting_at(1_000);
        let a = clock.advance(0.0);
        let b = clock.advance(1.5);
        assert!(b > a && a > 1_000_000_000_000);
        assert_eq!(b - a, 1_500_000_000);
    }

    #[test]
    fn platform_names_round_trip() {
        for p in Platform::ALL {
            assert_eq!(p.as_str().parse::<Platform>().unwrap(), p);
        }
    }

    #[test]
    fn platform_streams_are_independent() {
        use rand::Rng;
        let a: u64 = Platform::Ethereum.rng(1, 1).gen();
        let b: u64 = Platform::Xrpl.rng(1, 1).gen();
        let c: u64 = Platform::Ethereum.rng(1, 2).gen();
        assert!(a != b && a != c);
        assert_eq!(a, Platform::Ethereum.rng(1, 1).gen::<u64>());
    }
}
