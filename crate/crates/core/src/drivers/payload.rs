//! Observable on-chain records for each platform.
//!
//! The Hedera record follows the mirror-node shape of a topic message. The
//! Ethereum and XRPL records are modelled on a decoded registry call plus
//! receipt/block fields and on a validated XRPL transaction with its
//! metadata; their field sets are sized so flattened token counts land in
//! the observed bands (Ethereum 22-24, XRPL 35-40, Hedera 17-19).
//!
//! Every hash and signature in a record is a digest over the other exposed
//! fields, so removing a source of variation through the knobs also removes
//! it from the derived fields.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::did::{Change, Did, OperationKind, ServiceEndpoint};
use crate::digest;
use crate::ledger::contract::{RegistryCall, NULL_ADDRESS};
use crate::ledger::native::NativeTx;
use crate::ledger::stream::DidEvent;
use crate::ledger::{Platform, ReceiptDetails, TxReceipt};

pub const ETHEREUM_CHAIN_ID: u64 = 11_155_111;
pub const REGISTRY_ADDRESS: &str = "0x03d5003bf0e79c5f5223588f347eba39afbc3818";
pub const HEDERA_PAYER: &str = "0.0.5436919";
pub const SERVICE_TYPE: &str = "linkedDomains";
const RIPPLE_EPOCH_OFFSET: u64 = 946_684_800;

/// Sources of variation in generated payloads. Zero removes a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadKnobs {
    /// Number of distinct service endpoints the workload cycles through.
    pub endpoint_diversity: u32,
    /// Number of distinct identifiers visible on chain; identifiers beyond
    /// the pool are aliased onto earlier ones. 0 behaves like 1.
    pub did_pool_size: u32,
    /// Exposed timestamps are floored to this many nanoseconds. 0 freezes
    /// all time- and order-derived fields (timestamps, block and ledger
    /// numbers, sequence numbers).
    pub timestamp_granularity_ns: u64,
    /// Probability that a record carries its optional field.
    pub optional_field_rate: f64,
}

impl Default for PayloadKnobs {
    fn default() -> Self {
        Self { endpoint_diversity: 1, did_pool_size: 1_000_000, timestamp_granularity_ns: 1, optional_field_rate: 0.0 }
    }
}

impl PayloadKnobs {
    pub fn zeroed() -> Self {
        Self { endpoint_diversity: 0, did_pool_size: 0, timestamp_granularity_ns: 0, optional_field_rate: 0.0 }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.optional_field_rate) {
            return Err(format!("optional_field_rate must be in [0, 1], got {}", self.optional_field_rate));
        }
        Ok(())
    }
}

/// What a write submitted, for rendering its record.
#[derive(Debug, Clone, Copy)]
pub enum WriteContent<'a> {
    Contract { call: &'a RegistryCall },
    Native { tx: &'a NativeTx, uri: Option<&'a str> },
    Stream { message: &'a Value },
}

#[derive(Debug, Clone)]
pub struct PayloadGenerator {
    platform: Platform,
    knobs: PayloadKnobs,
    seed: u64,
    rng: ChaCha8Rng,
    alias_slots: BTreeMap<Did, usize>,
    first_seen: Vec<Did>,
    endpoint_counter: u64,
}

fn seconds_nanos(t_ns: u64) -> String {
    format!("{}.{:09}", t_ns / 1_000_000_000, t_ns % 1_000_000_000)
}

fn iso_millis(t_ns: u64) -> String {
    chrono::DateTime::from_timestamp((t_ns / 1_000_000_000) as i64, (t_ns % 1_000_000_000) as u32)
        .expect("simulated time in range")
        .format("%Y-%m-%dT%H:%M:%S%.3fZ")
        .to_string()
}

fn iso_seconds(t_ns: u64) -> String {
    chrono::DateTime::from_timestamp((t_ns / 1_000_000_000) as i64, 0)
        .expect("simulated time in range")
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

fn hex_of(text: &str) -> String {
    digest::hex_upper(text.as_bytes())
}

/// Last `:`-separated segment of the method-specific id (address or account).
pub fn account_of(did: &Did) -> &str {
    did.method_specific_id().rsplit(':').next().unwrap_or_default()
}

fn fragment_of(id: &str) -> &str {
    id.rsplit_once('#').map_or(id, |(_, f)| f)
}

impl PayloadGenerator {
    pub fn new(platform: Platform, knobs: PayloadKnobs, seed: u64) -> Self {
        Self {
            platform,
            knobs,
            seed,
            rng: platform.rng(seed, 4),
            alias_slots: BTreeMap::new(),
            first_seen: Vec::new(),
            endpoint_counter: 0,
        }
    }

    pub fn platform(&self) -> Platform {
        self.platform
    }

    pub fn knobs(&self) -> &PayloadKnobs {
        &self.knobs
    }

    /// The service change a benchmark Update applies.
    pub fn workload_change(&mut self, did: &Did) -> Change {
        let k = self.endpoint_counter % u64::from(self.knobs.endpoint_diversity.max(1));
        self.endpoint_counter += 1;
        Change::Service(ServiceEndpoint {
            id: did.fragment("service-0"),
            service_type: SERVICE_TYPE.to_owned(),
            endpoint: format!("https://example.com/{k}"),
        })
    }

    /// The identifier an observer sees for `did` under the pool-size knob.
    pub fn exposed_did(&mut self, did: &Did) -> Did {
        let pool = self.knobs.did_pool_size.max(1) as usize;
        let slot = match self.alias_slots.get(did) {
            Some(slot) => *slot,
            None => {
                let slot = self.first_seen.len();
                self.alias_slots.insert(did.clone(), slot);
                self.first_seen.push(did.clone());
                slot
            }
        };
        self.first_seen[slot % pool].clone()
    }

    fn time(&self, t_ns: u64) -> u64 {
        match self.knobs.timestamp_granularity_ns {
            0 => 0,
            g => t_ns - t_ns % g,
        }
    }

    fn counter(&self, n: u64) -> u64 {
        if self.knobs.timestamp_granularity_ns == 0 {
            0
        } else {
            n
        }
    }

    fn include_optional(&mut self) -> bool {
        self.knobs.optional_field_rate > 0.0 && self.rng.gen::<f64>() < self.knobs.optional_field_rate
    }

    fn sign(&self, label: &str, content: &Value, len: usize) -> Vec<u8> {
        let body = serde_json::to_vec(content).expect("json value serializes");
        digest::expand(&[&self.seed.to_le_bytes(), self.platform.as_str().as_bytes(), label.as_bytes(), &body], len)
    }

    /// Renders the observable record of a confirmed write.
    pub fn generate_payload(&mut self, did: &Did, content: WriteContent<'_>, receipt: &TxReceipt) -> Value {
        match content {
            WriteContent::Contract { call } => self.ethereum_record(did, call, receipt),
            WriteContent::Native { tx, uri } => self.xrpl_record(did, tx, receipt.op, uri, receipt),
            WriteContent::Stream { message } => self.hedera_record(message, receipt),
        }
    }

    fn ethereum_record(&mut self, did: &Did, call: &RegistryCall, receipt: &TxReceipt) -> Value {
        let ReceiptDetails::Contract { block_number, tx_index, gas_used, previous_change, nonce, block_timestamp, .. } =
            receipt.details
        else {
            panic!("ethereum record needs a contract receipt");
        };
        let exposed = self.exposed_did(did);
        let identity = account_of(&exposed).to_owned();
        let mut call_fields = Map::new();
        call_fields.insert("method".into(), call.method().into());
        call_fields.insert("identity".into(), identity.clone().into());
        let mut event = Map::new();
        event.insert("identity".into(), identity.clone().into());
        event.insert("previousChange".into(), self.counter(previous_change).into());
        match call {
            RegistryCall::SetAttribute { name, value, validity, .. } => {
                call_fields.insert("name".into(), name.clone().into());
                call_fields.insert("value".into(), value.clone().into());
                call_fields.insert("validity".into(), (*validity).into());
                event.insert("name".into(), "DIDAttributeChanged".into());
                let valid_to = self.time(block_timestamp * 1_000_000_000) / 1_000_000_000 + validity;
                event.insert("validTo".into(), valid_to.into());
            }
            RegistryCall::RevokeAttribute { name, value, .. } => {
                call_fields.insert("name".into(), name.clone().into());
                call_fields.insert("value".into(), value.clone().into());
                event.insert("name".into(), "DIDAttributeChanged".into());
                event.insert("validTo".into(), 0.into());
            }
            RegistryCall::ChangeOwner { new_owner, .. } => {
                call_fields.insert("newOwner".into(), new_owner.clone().into());
                event.insert("name".into(), "DIDOwnerChanged".into());
                event.insert("owner".into(), new_owner.clone().into());
            }
        }
        let block = self.counter(block_number);
        let mut record = json!({
            "blockNumber": block,
            "chainId": ETHEREUM_CHAIN_ID,
            "cumulativeGasUsed": gas_used + self.counter(tx_index) * 21_000,
            "effectiveGasPrice": "1200000000",
            "from": identity,
            "gasUsed": gas_used,
            "nonce": nonce,
            "status": 1,
            "to": REGISTRY_ADDRESS,
            "transactionIndex": self.counter(tx_index),
            "type": 2,
            "call": Value::Object(call_fields),
            "event": Value::Object(event),
        });
        if self.include_optional() {
            record["maxPriorityFeePerGas"] = "1000000".into();
        }
        let block_hash = self.sign("block", &json!(block), 32);
        let signature = self.sign("tx", &record, 64);
        record["r"] = format!("0x{}", digest::hex(&signature[..32])).into();
        record["s"] = format!("0x{}", digest::hex(&signature[32..])).into();
        record["hash"] = format!("0x{}", digest::hex(&self.sign("hash", &record, 32))).into();
        record["blockHash"] = format!("0x{}", digest::hex(&block_hash)).into();
        record
    }

    fn xrpl_record(
        &mut self,
        did: &Did,
        tx: &NativeTx,
        op: OperationKind,
        uri: Option<&str>,
        receipt: &TxReceipt,
    ) -> Value {
        let ReceiptDetails::Native { ledger_index, tx_index, account_sequence, .. } = receipt.details else {
            panic!("xrpl record needs a native receipt");
        };
        let exposed = self.exposed_did(did);
        let account = account_of(&exposed).to_owned();
        let ledger = self.counter(ledger_index);
        let close_ns = self.time(receipt.timestamp_ns);
        let signing_key = digest::hex_upper(&self.sign("key", &json!(account), 33));
        let did_object = digest::hex_upper(&self.sign("did-object", &json!(account), 32));
        let account_root = digest::hex_upper(&self.sign("account-root", &json!(account), 32));
        let directory = digest::hex_upper(&self.sign("owner-dir", &json!(account), 32));
        let previous_txn = digest::hex_upper(&self.sign("prev", &json!([account, ledger, "did"]), 32));
        let previous_root_txn = digest::hex_upper(&self.sign("prev", &json!([account, ledger, "root"]), 32));
        let fee_drops = "12";
        let balance_after = 100_000_000 - 12 * account_sequence;

        let mut record = json!({
            "Account": account,
            "Fee": fee_drops,
            "Flags": 0,
            "LastLedgerSequence": ledger + 20,
            "Sequence": account_sequence,
            "SigningPubKey": signing_key,
            "TransactionType": tx.transaction_type(),
            "ledger_index": ledger,
            "date": close_ns / 1_000_000_000 - RIPPLE_EPOCH_OFFSET.min(close_ns / 1_000_000_000),
            "close_time_iso": iso_seconds(close_ns),
            "validated": true,
        });
        let document_hex = match tx {
            NativeTx::DidSet(doc) => {
                let mut exposed_doc = doc.clone();
                exposed_doc.id = exposed.clone();
                Some(crate::ledger::native::document_digest(&exposed_doc))
            }
            NativeTx::DidDelete(_) => None,
        };
        if let Some(hex) = &document_hex {
            record["DIDDocument"] = hex.clone().into();
        }
        if let Some(uri) = uri {
            record["URI"] = hex_of(uri).into();
        }
        let root_node = json!({"ModifiedNode": {
            "LedgerEntryType": "AccountRoot",
            "LedgerIndex": account_root,
            "FinalFields": {
                "Account": account,
                "Balance": balance_after.to_string(),
                "Flags": 0,
                "OwnerCount": if op == OperationKind::Delete { 0 } else { 1 },
                "Sequence": account_sequence + 1,
            },
            "PreviousFields": {
                "Balance": (balance_after + 12).to_string(),
                "Sequence": account_sequence,
            },
            "PreviousTxnID": previous_root_txn,
            "PreviousTxnLgrSeq": ledger.saturating_sub(1),
        }});
        let directory_node = json!({"ModifiedNode": {
            "LedgerEntryType": "DirectoryNode",
            "LedgerIndex": directory,
            "FinalFields": {"Flags": 0, "Owner": account, "RootIndex": directory},
        }});
        let nodes = match (op, tx) {
            (OperationKind::Create, _) => {
                let mut root = root_node;
                root["ModifiedNode"]["PreviousFields"]["OwnerCount"] = 0.into();
                vec![
                    json!({"CreatedNode": {
                        "LedgerEntryType": "DID",
                        "LedgerIndex": did_object,
                        "NewFields": {"Account": account, "DIDDocument": document_hex},
                    }}),
                    root,
                    directory_node,
                ]
            }
            (_, NativeTx::DidDelete(_)) => {
                let mut root = root_node;
                root["ModifiedNode"]["PreviousFields"]["OwnerCount"] = 1.into();
                vec![
                    json!({"DeletedNode": {
                        "LedgerEntryType": "DID",
                        "LedgerIndex": did_object,
                        "FinalFields": {
                            "Account": account,
                            "DIDDocument": digest::hex_upper(&self.sign("last-doc", &json!(account), 32)),
                            "Flags": 0,
                            "OwnerNode": "0",
                            "PreviousTxnID": previous_txn,
                            "PreviousTxnLgrSeq": ledger.saturating_sub(1),
                        },
                    }}),
                    root,
                    directory_node,
                ]
            }
            _ => vec![
                json!({"ModifiedNode": {
                    "LedgerEntryType": "DID",
                    "LedgerIndex": did_object,
                    "FinalFields": {"Account": account, "DIDDocument": document_hex, "Flags": 0, "OwnerNode": "0"},
                    "PreviousTxnID": previous_txn,
                    "PreviousTxnLgrSeq": ledger.saturating_sub(1),
                }}),
                root_node,
            ],
        };
        record["meta"] = json!({
            "AffectedNodes": nodes,
            "TransactionIndex": self.counter(tx_index),
            "TransactionResult": "tesSUCCESS",
        });
        if self.include_optional() {
            record["Memos"] = json!([{"Memo": {"MemoData": hex_of("did-bench")}}]);
        }
        record["TxnSignature"] = digest::hex_upper(&self.sign("sig", &record, 64)).into();
        record["hash"] = digest::hex_upper(&self.sign("hash", &record, 32)).into();
        record
    }

    /// The signed message body submitted to the topic, before consensus.
    pub fn hedera_message(&mut self, did: &Did, event: &DidEvent, revoked_is_service: bool, now_ns: u64) -> Value {
        let exposed = self.exposed_did(did);
        let relabel = |id: &str| exposed.fragment(fragment_of(id));
        let event_json = match event {
            DidEvent::Create(key) => json!({"DIDOwner": {
                "id": relabel(&key.id),
                "type": key.key_type,
                "controller": exposed.to_string(),
                "publicKeyMultibase": format!("z{}", key.public_key),
            }}),
            DidEvent::Update(Change::Service(s)) => json!({"service": {
                "id": relabel(&s.id),
                "type": s.service_type,
                "serviceEndpoint": s.endpoint,
            }}),
            DidEvent::Update(Change::Key { method, authentication, assertion_method }) => {
                let mut relationships = Vec::new();
                if *authentication {
                    relationships.push("authentication");
                }
                if *assertion_method {
                    relationships.push("assertionMethod");
                }
                json!({"verificationMethod": {
                    "id": relabel(&method.id),
                    "type": method.key_type,
                    "controller": exposed.to_string(),
                    "publicKeyBase58": method.public_key,
                    "relationships": relationships,
                }})
            }
            DidEvent::Revoke(fragment) => {
                let key = if revoked_is_service { "service" } else { "verificationMethod" };
                json!({ key: {"id": relabel(fragment)} })
            }
            DidEvent::Delete => Value::Null,
        };
        let inner = json!({
            "timestamp": iso_millis(self.time(now_ns)),
            "operation": event.operation().as_str(),
            "did": exposed.to_string(),
            "event": event_json,
        });
        let signature = digest::b64(&self.sign("message", &inner, 48));
        json!({"message": inner, "signature": signature})
    }

    fn hedera_record(&mut self, message: &Value, receipt: &TxReceipt) -> Value {
        let ReceiptDetails::Stream { topic_id, sequence_number, valid_start_ns, .. } = &receipt.details else {
            panic!("hedera record needs a stream receipt");
        };
        let sequence = self.counter(*sequence_number);
        let consensus = self.time(receipt.timestamp_ns);
        let mut transaction_info = json!({
            "initial_transaction_id": {
                "account_id": HEDERA_PAYER,
                "nonce": 0,
                "scheduled": false,
                "transaction_valid_start": seconds_nanos(self.time(*valid_start_ns)),
            },
            "number": 1,
            "total": 1,
        });
        if self.include_optional() {
            transaction_info["memo"] = "did-sdk".into();
        }
        let mut record = json!({
            "transaction_info": transaction_info,
            "consensus_timestamp": seconds_nanos(consensus),
            "message": message,
            "payer_account_id": HEDERA_PAYER,
            "running_hash_version": 3,
            "sequence_number": sequence,
            "topic_id": topic_id,
        });
        record["running_hash"] = digest::b64(&self.sign("running", &record, 48)).into();
        record
    }
}

/// Deterministic `0x`-prefixed pseudo-address for the `n`-th generated key.
pub fn pseudo_address(seed: u64, platform: Platform, n: u64) -> String {
    let bytes = digest::digest(&[b"address", platform.as_str().as_bytes(), &seed.to_le_bytes(), &n.to_le_bytes()]);
    format!("0x{}", digest::hex(&bytes[..20]))
}

/// Writes whose latency/fee an ethr create skips.
pub fn is_metadata_free(op: OperationKind) -> bool {
    op == OperationKind::Resolve
}

/// Ethereum attribute value encoding: hex of compact JSON.
pub fn encode_attribute_value(value: &Value) -> String {
    format!("0x{}", digest::hex(&serde_json::to_vec(value).expect("json value serializes")))
}

pub fn decode_attribute_value(hex: &str) -> Option<Value> {
    let hex = hex.strip_prefix("0x")?;
    if hex.len() % 2 != 0 {
        return None;
    }
    let bytes: Option<Vec<u8>> =
        (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(&hex[i..i + 2], 16).ok()).collect();
    serde_json::from_slice(&bytes?).ok()
}

/// The null owner used for deactivation.
pub fn null_owner() -> &'static str {
    NULL_ADDRESS
}
