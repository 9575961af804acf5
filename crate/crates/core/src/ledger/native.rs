//! Native DID objects keyed by DID, written with DIDSet and removed with
//! DIDDelete, read back with a single keyed lookup.

use std::collections::{BTreeMap, BTreeSet};

use super::{did_bytes, LatencyKey, LedgerContext, LedgerError, ReadReceipt, ReceiptDetails, TxReceipt};
use crate::did::{Did, DidDocument, OperationKind};
use crate::digest;

/// First simulated ledger index.
pub const GENESIS_LEDGER: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum NativeTx {
    DidSet(DidDocument),
    DidDelete(Did),
}

impl NativeTx {
    pub fn did(&self) -> &Did {
        match self {
            NativeTx::DidSet(doc) => &doc.id,
            NativeTx::DidDelete(did) => did,
        }
    }

    pub fn transaction_type(&self) -> &'static str {
        match self {
            NativeTx::DidSet(_) => "DIDSet",
            NativeTx::DidDelete(_) => "DIDDelete",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NativeEntry {
    pub document: DidDocument,
    /// Hex SHA-256 of the canonical document, as carried in the DIDDocument field.
    pub document_digest: String,
    pub sequence: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LookupResult {
    Found(DidDocument),
    Deleted,
    NotFound,
}

#[derive(Debug, Clone, Default)]
pub struct NativeObjectState {
    entries: BTreeMap<Did, NativeEntry>,
    deleted: BTreeSet<Did>,
    account_sequences: BTreeMap<Did, u64>,
    ledger_fill: (u64, u64),
}

impl NativeObjectState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entry(&self, did: &Did) -> Option<&NativeEntry> {
        self.entries.get(did)
    }

    pub fn is_deleted(&self, did: &Did) -> bool {
        self.deleted.contains(did)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn document_digest(doc: &DidDocument) -> String {
    digest::hex_upper(&digest::digest(&[doc.to_canonical_json().as_bytes()]))
}

/// Applies a DIDSet or DIDDelete. `op` selects the latency and fee model.
pub fn native_submit(
    state: &mut NativeObjectState,
    tx: &NativeTx,
    op: OperationKind,
    ctx: &mut LedgerContext,
) -> Result<TxReceipt, LedgerError> {
    let did = tx.did().clone();
    if matches!(tx, NativeTx::DidDelete(_)) && !state.entries.contains_key(&did) {
        return Err(LedgerError::DeleteMissingEntry(did.to_string()));
    }
    let latency = ctx.sample(LatencyKey::Op(op))?;
    let fee = ctx.quote(op, 0);
    let timestamp_ns = ctx.clock.advance(latency);
    let ledger_index = ctx.interval_index(GENESIS_LEDGER, timestamp_ns);
    let tx_index = if state.ledger_fill.0 == ledger_index { state.ledger_fill.1 + 1 } else { 0 };
    state.ledger_fill = (ledger_index, tx_index);

    let account_sequence = {
        let seq = state.account_sequences.entry(did.clone()).or_insert(1);
        let current = *seq;
        *seq += 1;
        current
    };
    let content = match tx {
        NativeTx::DidSet(doc) => {
            let document_digest = document_digest(doc);
            state.deleted.remove(&did);
            state.entries.insert(
                did.clone(),
                NativeEntry { document: doc.clone(), document_digest: document_digest.clone(), sequence: account_sequence },
            );
            document_digest
        }
        NativeTx::DidDelete(_) => {
            state.entries.remove(&did);
            state.deleted.insert(did.clone());
            String::new()
        }
    };

    let position = ctx.take_position();
    let tx_hash = digest::hex_upper(&digest::digest(&[
        ctx.tx_hash(position, &[&did_bytes(&did), tx.transaction_type().as_bytes(), content.as_bytes()]).as_bytes(),
    ]));
    let ledger_hash = digest::hex_upper(&digest::digest(&[&ctx.seed.to_le_bytes(), &ledger_index.to_le_bytes()]));
    Ok(TxReceipt {
        platform: ctx.platform,
        op,
        latency,
        fee_native: fee.native,
        fee_usd: fee.usd,
        payload: None,
        ledger_position: position,
        timestamp_ns,
        tx_hash,
        details: ReceiptDetails::Native { ledger_index, ledger_hash, tx_index, account_sequence },
    })
}

/// Keyed read of the stored DID object. Free; latency from the Resolve model.
pub fn ledger_entry_lookup(
    state: &NativeObjectState,
    did: &Did,
    ctx: &mut LedgerContext,
) -> Result<(LookupResult, ReadReceipt), LedgerError> {
    let read = ctx.read(OperationKind::Resolve)?;
    let result = match state.entries.get(did) {
        Some(entry) => LookupResult::Found(entry.document.clone()),
        None if state.deleted.contains(did) => LookupResult::Deleted,
        None => LookupResult::NotFound,
    };
    Ok((result, read))
}
