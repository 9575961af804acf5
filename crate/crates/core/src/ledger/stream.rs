//! Consensus topics carrying signed DID events, replayed in consensus order
//! through a mirror-node style read path.

use std::collections::BTreeMap;

use serde_json::Value;

use super::{did_bytes, LatencyKey, LedgerContext, LedgerError, OpFee, ReadReceipt, ReceiptDetails, TxReceipt};
use crate::did::{Change, Did, OperationKind, VerificationMethod};
use crate::digest;

/// Topic numbers are allocated upwards from here, as `0.0.<n>`.
pub const FIRST_TOPIC_NUMBER: u64 = 5_649_399;

/// The DID event a topic message carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DidEvent {
    Create(VerificationMethod),
    Update(Change),
    Revoke(String),
    Delete,
}

impl DidEvent {
    pub fn operation(&self) -> OperationKind {
        match self {
            DidEvent::Create(_) => OperationKind::Create,
            DidEvent::Update(_) => OperationKind::Update,
            DidEvent::Revoke(_) => OperationKind::Revoke,
            DidEvent::Delete => OperationKind::Delete,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicMessage {
    pub did: Did,
    pub event: DidEvent,
    /// Serialized message as submitted; sized for the byte fee.
    pub body: Value,
    pub valid_start_ns: u64,
    pub consensus_timestamp_ns: u64,
    pub sequence_number: u64,
    pub running_hash: String,
}

#[derive(Debug, Clone, Default)]
struct Topic {
    messages: Vec<TopicMessage>,
    running_hash: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct EventStreamState {
    topics: BTreeMap<String, Topic>,
    next_topic: u64,
}

impl EventStreamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn messages(&self, topic_id: &str) -> Option<&[TopicMessage]> {
        self.topics.get(topic_id).map(|t| t.messages.as_slice())
    }

    pub fn topic_count(&self) -> usize {
        self.topics.len()
    }
}

/// Creates an empty topic. Latency comes from the topic-creation model.
pub fn topic_create(state: &mut EventStreamState, ctx: &mut LedgerContext) -> Result<(String, TxReceipt), LedgerError> {
    let latency = ctx.sample(LatencyKey::TopicCreate)?;
    let fee = match ctx.fees.topic_create.clone() {
        Some(fee) => ctx.charge(&fee, 0),
        None => ctx.charge(&OpFee::OffChain, 0),
    };
    let timestamp_ns = ctx.clock.advance(latency);
    let topic_id = format!("0.0.{}", FIRST_TOPIC_NUMBER + state.next_topic);
    state.next_topic += 1;
    state.topics.insert(topic_id.clone(), Topic::default());
    let position = ctx.take_position();
    let tx_hash = ctx.tx_hash(position, &[topic_id.as_bytes()]);
    let receipt = TxReceipt {
        platform: ctx.platform,
        op: OperationKind::Create,
        latency,
        fee_native: fee.native,
        fee_usd: fee.usd,
        payload: None,
        ledger_position: position,
        timestamp_ns,
        tx_hash,
        details: ReceiptDetails::TopicCreated { topic_id: topic_id.clone() },
    };
    Ok((topic_id, receipt))
}

/// Appends a message. The fee is charged on the serialized body length.
pub fn topic_submit(
    state: &mut EventStreamState,
    topic_id: &str,
    did: &Did,
    event: DidEvent,
    body: Value,
    ctx: &mut LedgerContext,
) -> Result<TxReceipt, LedgerError> {
    if !state.topics.contains_key(topic_id) {
        return Err(LedgerError::UnknownTopic(topic_id.to_owned()));
    }
    let op = event.operation();
    let bytes = serde_json::to_vec(&body).expect("json value serializes");
    let latency = ctx.sample(LatencyKey::Op(op))?;
    let fee = ctx.quote(op, bytes.len());
    let valid_start_ns = ctx.clock.now_ns();
    let confirmed = ctx.clock.advance(latency);

    let topic = state.topics.get_mut(topic_id).expect("checked above");
    let last = topic.messages.last();
    let sequence_number = last.map_or(1, |m| m.sequence_number + 1);
    let consensus_timestamp_ns = last.map_or(confirmed, |m| confirmed.max(m.consensus_timestamp_ns + 1));
    topic.running_hash = digest::expand(
        &[
            &topic.running_hash,
            topic_id.as_bytes(),
            &sequence_number.to_le_bytes(),
            &consensus_timestamp_ns.to_le_bytes(),
            &bytes,
        ],
        48,
    );
    let running_hash = digest::b64(&topic.running_hash);
    topic.messages.push(TopicMessage {
        did: did.clone(),
        event,
        body,
        valid_start_ns,
        consensus_timestamp_ns,
        sequence_number,
        running_hash: running_hash.clone(),
    });

    let position = ctx.take_position();
    let tx_hash = ctx.tx_hash(position, &[topic_id.as_bytes(), &did_bytes(did)]);
    Ok(TxReceipt {
        platform: ctx.platform,
        op,
        latency,
        fee_native: fee.native,
        fee_usd: fee.usd,
        payload: None,
        ledger_position: position,
        timestamp_ns: consensus_timestamp_ns,
        tx_hash,
        details: ReceiptDetails::Stream {
            topic_id: topic_id.to_owned(),
            sequence_number,
            running_hash,
            valid_start_ns,
        },
    })
}

/// Messages about `did` in consensus order. Free; latency from the Resolve model.
pub fn topic_replay(
    state: &EventStreamState,
    topic_id: &str,
    did: &Did,
    ctx: &mut LedgerContext,
) -> Result<(Vec<TopicMessage>, ReadReceipt), LedgerError> {
    let topic = state.topics.get(topic_id).ok_or_else(|| LedgerError::UnknownTopic(topic_id.to_owned()))?;
    let read = ctx.read(OperationKind::Resolve)?;
    let messages = topic.messages.iter().filter(|m| &m.did == did).cloned().collect();
    Ok((messages, read))
}
