//! DID method drivers: map lifecycle operations onto a simulated ledger and
//! resolve documents back from what the ledger stores.

pub mod ethr;
pub mod hedera;
pub mod payload;
pub mod xrpl;

use thiserror::Error;

use crate::config::BenchConfig;
use crate::did::{Change, Did, DidDocument, DidError, OperationKind, Resolution, Transition, VerificationMethod};
use crate::ledger::{LedgerError, Platform, TxReceipt};

pub use ethr::EthrDriver;
pub use hedera::HederaDriver;
pub use payload::{PayloadGenerator, PayloadKnobs, WriteContent};
pub use xrpl::XrplDriver;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Model(#[from] DidError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("DID {0} not found")]
    NotFound(String),
}

/// Result of one lifecycle operation as a client observes it.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationOutcome {
    pub op: OperationKind,
    pub did: Did,
    /// Client-observed latency in seconds.
    pub latency: f64,
    pub fee_usd: f64,
    pub fee_native: f64,
    /// Ledger write, if the operation made one.
    pub receipt: Option<TxReceipt>,
    /// Resolved state, for Resolve.
    pub resolution: Option<Resolution>,
}

impl OperationOutcome {
    fn write(did: &Did, receipt: TxReceipt) -> Self {
        Self {
            op: receipt.op,
            did: did.clone(),
            latency: receipt.latency,
            fee_usd: receipt.fee_usd,
            fee_native: receipt.fee_native,
            receipt: Some(receipt),
            resolution: None,
        }
    }

    fn read(did: &Did, latency: f64, resolution: Resolution) -> Self {
        Self {
            op: OperationKind::Resolve,
            did: did.clone(),
            latency,
            fee_usd: 0.0,
            fee_native: 0.0,
            receipt: None,
            resolution: Some(resolution),
        }
    }
}

pub trait MethodDriver {
    fn platform(&self) -> Platform;

    /// Generates a fresh identifier and key and registers it.
    fn create(&mut self) -> Result<OperationOutcome, DriverError>;

    fn resolve(&mut self, did: &Did) -> Result<OperationOutcome, DriverError>;

    fn update(&mut self, did: &Did, change: &Change) -> Result<OperationOutcome, DriverError>;

    fn revoke(&mut self, did: &Did, fragment: &str) -> Result<OperationOutcome, DriverError>;

    fn delete(&mut self, did: &Did) -> Result<OperationOutcome, DriverError>;

    /// The key a freshly created `did` starts with.
    fn initial_key(&self, did: &Did) -> VerificationMethod;

    fn generator(&mut self) -> &mut PayloadGenerator;

    /// Ledger writes so far, including setup writes.
    fn ledger_writes(&self) -> u64;

    /// Writes made once per run rather than per DID (e.g. topic creation).
    fn setup_receipts(&self) -> &[TxReceipt] {
        &[]
    }
}

pub fn apply(
    driver: &mut dyn MethodDriver,
    did: &Did,
    transition: &Transition,
) -> Result<OperationOutcome, DriverError> {
    match transition {
        Transition::Update(change) => driver.update(did, change),
        Transition::Revoke(fragment) => driver.revoke(did, fragment),
        Transition::Deactivate => driver.delete(did),
    }
}

/// Driver for `platform` wired to the settings in `config`.
pub fn driver_for(platform: Platform, config: &BenchConfig) -> Box<dyn MethodDriver> {
    match platform {
        Platform::Ethereum => Box::new(EthrDriver::new(config)),
        Platform::Xrpl => Box::new(XrplDriver::new(config)),
        Platform::Hedera => Box::new(HederaDriver::new(config)),
    }
}

/// Current live document for a write, or the error the model would raise.
fn writable(current: Option<DidDocument>, did: &Did) -> Result<DidDocument, DriverError> {
    match current {
        None => Err(DriverError::NotFound(did.to_string())),
        Some(doc) if doc.deactivated => Err(DidError::Deactivated(did.to_string()).into()),
        Some(doc) => Ok(doc),
    }
}

fn fresh_key_bytes(rng: &mut rand_chacha::ChaCha8Rng) -> [u8; 32] {
    use rand::RngCore;
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    bytes
}
