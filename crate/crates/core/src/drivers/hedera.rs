//! `did:hedera` over a consensus topic. All DIDs of a run share one topic,
//! created on first use; documents are rebuilt by replaying the DID's
//! messages in consensus order.

use rand_chacha::ChaCha8Rng;

use super::payload::{PayloadGenerator, WriteContent};
use super::{fresh_key_bytes, writable, DriverError, MethodDriver, OperationOutcome};
use crate::config::BenchConfig;
use crate::did::{
    apply_update, build_initial_document, deactivate, revoke_attribute, Change, Did, DidDocument, Resolution,
    VerificationMethod,
};
use crate::digest;
use crate::ledger::stream::{topic_create, topic_replay, topic_submit, DidEvent, EventStreamState, TopicMessage};
use crate::ledger::{LedgerContext, LedgerError, Platform, TxReceipt};

pub const KEY_TYPE: &str = "Ed25519VerificationKey2018";
pub const NETWORK: &str = "testnet";

pub struct HederaDriver {
    ctx: LedgerContext,
    state: EventStreamState,
    generator: PayloadGenerator,
    key_rng: ChaCha8Rng,
    topic: Option<String>,
    setup: Vec<TxReceipt>,
}

/// Replays a DID's messages; `None` when no create message exists.
pub fn replay(messages: &[TopicMessage]) -> Option<DidDocument> {
    let mut doc: Option<DidDocument> = None;
    for message in messages {
        doc = match (&message.event, doc) {
            (DidEvent::Create(key), None) => build_initial_document(&message.did, key.clone()).ok(),
            (DidEvent::Create(_), Some(doc)) => Some(doc),
            (_, None) => None,
            (DidEvent::Update(change), Some(doc)) => Some(apply_update(&doc, change).unwrap_or(doc)),
            (DidEvent::Revoke(fragment), Some(doc)) => Some(revoke_attribute(&doc, fragment).unwrap_or(doc)),
            (DidEvent::Delete, Some(doc)) => Some(deactivate(&doc)),
        };
    }
    doc
}

fn topic_of(did: &Did) -> Option<&str> {
    did.method_specific_id().rsplit_once('_').map(|(_, topic)| topic)
}

impl HederaDriver {
    pub fn new(config: &BenchConfig) -> Self {
        let platform = Platform::Hedera;
        Self {
            ctx: LedgerContext::from_config(platform, config),
            state: EventStreamState::new(),
            generator: PayloadGenerator::new(platform, config.chain(platform).payload.clone(), config.seed),
            key_rng: platform.rng(config.seed, 3),
            topic: None,
            setup: Vec::new(),
        }
    }

    pub fn stream(&self) -> &EventStreamState {
        &self.state
    }

    fn ensure_topic(&mut self) -> Result<String, DriverError> {
        if let Some(topic) = &self.topic {
            return Ok(topic.clone());
        }
        let (topic, receipt) = topic_create(&mut self.state, &mut self.ctx)?;
        self.setup.push(receipt);
        self.topic = Some(topic.clone());
        Ok(topic)
    }

    fn current(&self, did: &Did) -> Result<Option<DidDocument>, DriverError> {
        let topic = topic_of(did).ok_or_else(|| DriverError::NotFound(did.to_string()))?;
        let messages = self.state.messages(topic).ok_or_else(|| LedgerError::UnknownTopic(topic.to_owned()))?;
        let own: Vec<TopicMessage> = messages.iter().filter(|m| &m.did == did).cloned().collect();
        Ok(replay(&own))
    }

    fn submit(&mut self, did: &Did, event: DidEvent, revoked_is_service: bool) -> Result<OperationOutcome, DriverError> {
        let topic = topic_of(did).ok_or_else(|| DriverError::NotFound(did.to_string()))?.to_owned();
        let now = self.ctx.clock.now_ns();
        let message = self.generator.hedera_message(did, &event, revoked_is_service, now);
        let mut receipt = topic_submit(&mut self.state, &topic, did, event, message.clone(), &mut self.ctx)?;
        receipt.payload = Some(self.generator.generate_payload(did, WriteContent::Stream { message: &message }, &receipt));
        Ok(OperationOutcome::write(did, receipt))
    }
}

impl MethodDriver for HederaDriver {
    fn platform(&self) -> Platform {
        Platform::Hedera
    }

    fn create(&mut self) -> Result<OperationOutcome, DriverError> {
        let topic = self.ensure_topic()?;
        let key = fresh_key_bytes(&mut self.key_rng);
        let did = Did::new("hedera", &format!("{NETWORK}:z{}_{topic}", digest::b58(&key)))?;
        let method = VerificationMethod {
            id: did.fragment("did-root-key"),
            key_type: KEY_TYPE.to_owned(),
            controller: did.clone(),
            public_key: digest::b58(&key),
        };
        build_initial_document(&did, method.clone())?;
        self.submit(&did, DidEvent::Create(method), false)
    }

    fn resolve(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        let topic = topic_of(did).ok_or_else(|| DriverError::NotFound(did.to_string()))?.to_owned();
        let (messages, read) = topic_replay(&self.state, &topic, did, &mut self.ctx)?;
        let resolution = match replay(&messages) {
            Some(doc) => Resolution::of(doc),
            None => Resolution::NotFound(did.clone()),
        };
        Ok(OperationOutcome::read(did, read.latency, resolution))
    }

    fn update(&mut self, did: &Did, change: &Change) -> Result<OperationOutcome, DriverError> {
        apply_update(&writable(self.current(did)?, did)?, change)?;
        self.submit(did, DidEvent::Update(change.clone()), false)
    }

    fn revoke(&mut self, did: &Did, fragment: &str) -> Result<OperationOutcome, DriverError> {
        let doc = writable(self.current(did)?, did)?;
        revoke_attribute(&doc, fragment)?;
        let id = did.absolute_ref(fragment);
        let is_service = doc.services.iter().any(|s| s.id == id);
        self.submit(did, DidEvent::Revoke(fragment.to_owned()), is_service)
    }

    fn delete(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        if self.current(did)?.is_none() {
            return Err(DriverError::NotFound(did.to_string()));
        }
        self.submit(did, DidEvent::Delete, false)
    }

    fn initial_key(&self, did: &Did) -> VerificationMethod {
        let public_key = did
            .method_specific_id()
            .split_once(':')
            .and_then(|(_, rest)| rest.strip_prefix('z'))
            .and_then(|rest| rest.rsplit_once('_'))
            .map_or_else(String::new, |(key, _)| key.to_owned());
        VerificationMethod {
            id: did.fragment("did-root-key"),
            key_type: KEY_TYPE.to_owned(),
            controller: did.clone(),
            public_key,
        }
    }

    fn generator(&mut self) -> &mut PayloadGenerator {
        &mut self.generator
    }

    fn ledger_writes(&self) -> u64 {
        self.ctx.writes()
    }

    fn setup_receipts(&self) -> &[TxReceipt] {
        &self.setup
    }
}
