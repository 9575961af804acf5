//! Contract registry in the style of ERC-1056: an owner mapping, attribute
//! mapping, a per-identity `changed` pointer and an append-only event log.

use std::collections::BTreeMap;

use super::{LatencyKey, LedgerContext, LedgerError, ReadReceipt, ReceiptDetails, TxReceipt};
use crate::did::OperationKind;

pub const NULL_ADDRESS: &str = "0x0000000000000000000000000000000000000000";
/// First simulated block number.
pub const GENESIS_BLOCK: u64 = 8_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistryCall {
    SetAttribute { identity: String, name: String, value: String, validity: u64 },
    RevokeAttribute { identity: String, name: String, value: String },
    ChangeOwner { identity: String, new_owner: String },
}

impl RegistryCall {
    pub fn identity(&self) -> &str {
        match self {
            RegistryCall::SetAttribute { identity, .. }
            | RegistryCall::RevokeAttribute { identity, .. }
            | RegistryCall::ChangeOwner { identity, .. } => identity,
        }
    }

    pub fn method(&self) -> &'static str {
        match self {
            RegistryCall::SetAttribute { .. } => "setAttribute",
            RegistryCall::RevokeAttribute { .. } => "revokeAttribute",
            RegistryCall::ChangeOwner { .. } => "changeOwner",
        }
    }

    /// Lifecycle operation whose latency/fee model prices this call.
    pub fn operation(&self) -> OperationKind {
        match self {
            RegistryCall::SetAttribute { .. } => OperationKind::Update,
            RegistryCall::RevokeAttribute { .. } => OperationKind::Revoke,
            RegistryCall::ChangeOwner { new_owner, .. } if new_owner == NULL_ADDRESS => OperationKind::Delete,
            RegistryCall::ChangeOwner { .. } => OperationKind::Update,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegistryEventKind {
    AttributeChanged,
    OwnerChanged,
}

impl RegistryEventKind {
    pub fn name(self) -> &'static str {
        match self {
            RegistryEventKind::AttributeChanged => "DIDAttributeChanged",
            RegistryEventKind::OwnerChanged => "DIDOwnerChanged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEvent {
    pub kind: RegistryEventKind,
    pub identity: String,
    /// Attribute name; empty for owner changes.
    pub name: String,
    /// Attribute value, or the new owner for owner changes.
    pub value: String,
    /// Expiry in block time; 0 marks a revoked attribute.
    pub valid_to: u64,
    pub previous_change: u64,
    pub block_number: u64,
    pub log_index: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ContractRegistryState {
    owners: BTreeMap<String, String>,
    attributes: BTreeMap<(String, String), (String, u64)>,
    changed: BTreeMap<String, u64>,
    nonces: BTreeMap<String, u64>,
    event_log: Vec<RegistryEvent>,
    block_fill: (u64, u64),
}

impl ContractRegistryState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current owner; an identity never written to owns itself.
    pub fn identity_owner<'a>(&'a self, identity: &'a str) -> &'a str {
        self.owners.get(identity).map(String::as_str).unwrap_or(identity)
    }

    pub fn attribute(&self, identity: &str, name: &str) -> Option<&(String, u64)> {
        self.attributes.get(&(identity.to_owned(), name.to_owned()))
    }

    pub fn event_log(&self) -> &[RegistryEvent] {
        &self.event_log
    }

    pub fn changed(&self, identity: &str) -> u64 {
        self.changed.get(identity).copied().unwrap_or(0)
    }
}

/// Mines a registry call: mutates state, appends one event, charges gas.
pub fn contract_submit(
    state: &mut ContractRegistryState,
    call: &RegistryCall,
    ctx: &mut LedgerContext,
) -> Result<TxReceipt, LedgerError> {
    let op = call.operation();
    let latency = ctx.sample(LatencyKey::Op(op))?;
    let fee = ctx.quote(op, 0);
    let timestamp_ns = ctx.clock.advance(latency);
    let block_number = ctx.interval_index(GENESIS_BLOCK, timestamp_ns);
    let block_timestamp = timestamp_ns / 1_000_000_000;
    let tx_index = if state.block_fill.0 == block_number { state.block_fill.1 + 1 } else { 0 };
    state.block_fill = (block_number, tx_index);

    let identity = call.identity().to_owned();
    let sender = state.identity_owner(&identity).to_owned();
    let nonce = {
        let n = state.nonces.entry(sender).or_insert(0);
        let current = *n;
        *n += 1;
        current
    };
    let previous_change = state.changed(&identity);
    let (kind, name, value, valid_to) = match call {
        RegistryCall::SetAttribute { name, value, validity, .. } => {
            let valid_to = block_timestamp + validity;
            state.attributes.insert((identity.clone(), name.clone()), (value.clone(), valid_to));
            (RegistryEventKind::AttributeChanged, name.clone(), value.clone(), valid_to)
        }
        RegistryCall::RevokeAttribute { name, value, .. } => {
            state.attributes.remove(&(identity.clone(), name.clone()));
            (RegistryEventKind::AttributeChanged, name.clone(), value.clone(), 0)
        }
        RegistryCall::ChangeOwner { new_owner, .. } => {
            state.owners.insert(identity.clone(), new_owner.clone());
            (RegistryEventKind::OwnerChanged, String::new(), new_owner.clone(), 0)
        }
    };
    state.changed.insert(identity.clone(), block_number);
    let log_index = state.event_log.len() as u64;
    state.event_log.push(RegistryEvent {
        kind,
        identity: identity.clone(),
        name,
        value,
        valid_to,
        previous_change,
        block_number,
        log_index,
    });

    let position = ctx.take_position();
    let tx_hash = ctx.tx_hash(position, &[identity.as_bytes(), call.method().as_bytes()]);
    let block_hash = ctx.tx_hash(block_number, &[b"block"]);
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
        details: ReceiptDetails::Contract {
            block_number,
            block_hash,
            tx_index,
            gas_used: fee.gas_used.unwrap_or(0),
            log_index,
            previous_change,
            nonce,
            block_timestamp,
        },
    })
}

/// Every logged event for `identity`, in log order. Free; latency from the
/// Resolve model.
pub fn registry_read(
    state: &ContractRegistryState,
    identity: &str,
    ctx: &mut LedgerContext,
) -> Result<(Vec<RegistryEvent>, ReadReceipt), LedgerError> {
    let read = ctx.read(OperationKind::Resolve)?;
    let events = state.event_log.iter().filter(|e| e.identity == identity).cloned().collect();
    Ok((events, read))
}
