//! `did:ethr` over the contract registry. Creation is local: an address is
//! its own DID and resolves to an implicit document until the registry says
//! otherwise. Documents are rebuilt by folding the identity's event log.

use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::payload::{decode_attribute_value, encode_attribute_value, PayloadGenerator, WriteContent};
use super::{fresh_key_bytes, writable, DriverError, MethodDriver, OperationOutcome};
use crate::config::BenchConfig;
use crate::did::{
    apply_update, build_initial_document, deactivate, revoke_attribute, Change, Did, DidDocument, OperationKind,
    Resolution, ServiceEndpoint, VerificationMethod,
};
use crate::digest;
use crate::ledger::contract::{
    contract_submit, registry_read, ContractRegistryState, RegistryCall, RegistryEvent, RegistryEventKind, NULL_ADDRESS,
};
use crate::ledger::{LatencyKey, LedgerContext, Platform, TxReceipt};

pub const CONTROLLER_KEY_TYPE: &str = "EcdsaSecp256k1RecoveryMethod2020";
/// Attribute validity in seconds (one year).
pub const ATTRIBUTE_VALIDITY_S: u64 = 31_536_000;

pub struct EthrDriver {
    ctx: LedgerContext,
    state: ContractRegistryState,
    generator: PayloadGenerator,
    key_rng: ChaCha8Rng,
}

fn address_of(did: &Did) -> &str {
    did.method_specific_id()
}

fn controller_key(did: &Did, owner: &str) -> VerificationMethod {
    VerificationMethod {
        id: did.fragment("controller"),
        key_type: CONTROLLER_KEY_TYPE.to_owned(),
        controller: did.clone(),
        public_key: owner.to_owned(),
    }
}

fn fragment_of(id: &str) -> &str {
    id.rsplit_once('#').map_or(id, |(_, f)| f)
}

/// Registry attribute name and value for a change.
fn encode_change(change: &Change) -> (String, String) {
    match change {
        Change::Key { method, authentication, assertion_method } => (
            format!("did/pub/{}", fragment_of(&method.id)),
            encode_attribute_value(&json!({
                "type": method.key_type,
                "publicKeyBase58": method.public_key,
                "authentication": authentication,
                "assertionMethod": assertion_method,
            })),
        ),
        Change::Service(s) => (
            format!("did/svc/{}", fragment_of(&s.id)),
            encode_attribute_value(&json!({"type": s.service_type, "serviceEndpoint": s.endpoint})),
        ),
    }
}

fn decode_change(did: &Did, name: &str, value: &str) -> Option<Change> {
    let (kind, fragment) = name.strip_prefix("did/")?.split_once('/')?;
    let body = decode_attribute_value(value)?;
    let text = |k: &str| body.get(k).and_then(|v| v.as_str()).map(str::to_owned);
    match kind {
        "pub" => Some(Change::Key {
            method: VerificationMethod {
                id: did.fragment(fragment),
                key_type: text("type")?,
                controller: did.clone(),
                public_key: text("publicKeyBase58")?,
            },
            authentication: body.get("authentication")?.as_bool()?,
            assertion_method: body.get("assertionMethod")?.as_bool()?,
        }),
        "svc" => Some(Change::Service(ServiceEndpoint {
            id: did.fragment(fragment),
            service_type: text("type")?,
            endpoint: text("serviceEndpoint")?,
        })),
        _ => None,
    }
}

fn revoked_fragment(name: &str) -> Option<&str> {
    name.strip_prefix("did/")?.split_once('/').map(|(_, f)| f)
}

/// Rebuilds the document from the identity's events. Events that do not
/// apply cleanly are ignored, as a resolver would.
pub fn fold_events(did: &Did, events: &[RegistryEvent]) -> DidDocument {
    let mut doc = build_initial_document(did, controller_key(did, address_of(did))).expect("controller key is valid");
    for event in events {
        let next = match event.kind {
            RegistryEventKind::OwnerChanged if event.value == NULL_ADDRESS => Ok(deactivate(&doc)),
            RegistryEventKind::OwnerChanged => apply_update(
                &doc,
                &Change::Key { method: controller_key(did, &event.value), authentication: true, assertion_method: true },
            ),
            RegistryEventKind::AttributeChanged if event.valid_to == 0 => match revoked_fragment(&event.name) {
                Some(fragment) => revoke_attribute(&doc, &did.fragment(fragment)),
                None => continue,
            },
            RegistryEventKind::AttributeChanged => match decode_change(did, &event.name, &event.value) {
                Some(change) => apply_update(&doc, &change),
                None => continue,
            },
        };
        if let Ok(next) = next {
            doc = next;
        }
    }
    doc
}

impl EthrDriver {
    pub fn new(config: &BenchConfig) -> Self {
        let platform = Platform::Ethereum;
        Self {
            ctx: LedgerContext::from_config(platform, config),
            state: ContractRegistryState::new(),
            generator: PayloadGenerator::new(platform, config.chain(platform).payload.clone(), config.seed),
            key_rng: platform.rng(config.seed, 3),
        }
    }

    pub fn registry(&self) -> &ContractRegistryState {
        &self.state
    }

    fn current(&self, did: &Did) -> DidDocument {
        let events: Vec<RegistryEvent> =
            self.state.event_log().iter().filter(|e| e.identity == address_of(did)).cloned().collect();
        fold_events(did, &events)
    }

    fn submit(&mut self, did: &Did, call: RegistryCall) -> Result<OperationOutcome, DriverError> {
        let mut receipt: TxReceipt = contract_submit(&mut self.state, &call, &mut self.ctx)?;
        receipt.payload = Some(self.generator.generate_payload(did, WriteContent::Contract { call: &call }, &receipt));
        Ok(OperationOutcome::write(did, receipt))
    }

    /// Transfers control of `did` to `new_owner`; priced as an Update.
    pub fn change_owner(&mut self, did: &Did, new_owner: &str) -> Result<OperationOutcome, DriverError> {
        let doc = writable(Some(self.current(did)), did)?;
        apply_update(
            &doc,
            &Change::Key { method: controller_key(did, new_owner), authentication: true, assertion_method: true },
        )?;
        let call = RegistryCall::ChangeOwner { identity: address_of(did).to_owned(), new_owner: new_owner.to_owned() };
        self.submit(did, call)
    }
}

impl MethodDriver for EthrDriver {
    fn platform(&self) -> Platform {
        Platform::Ethereum
    }

    fn create(&mut self) -> Result<OperationOutcome, DriverError> {
        let key = fresh_key_bytes(&mut self.key_rng);
        let address = format!("0x{}", digest::hex(&digest::digest(&[&key])[12..]));
        let did = Did::new("ethr", &address)?;
        let latency = self.ctx.sample(LatencyKey::Op(OperationKind::Create))?;
        let fee = self.ctx.quote(OperationKind::Create, 0);
        self.ctx.clock.advance(latency);
        Ok(OperationOutcome {
            op: OperationKind::Create,
            did,
            latency,
            fee_usd: fee.usd,
            fee_native: fee.native,
            receipt: None,
            resolution: None,
        })
    }

    fn resolve(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        let (events, read) = registry_read(&self.state, address_of(did), &mut self.ctx)?;
        Ok(OperationOutcome::read(did, read.latency, Resolution::of(fold_events(did, &events))))
    }

    fn update(&mut self, did: &Did, change: &Change) -> Result<OperationOutcome, DriverError> {
        apply_update(&writable(Some(self.current(did)), did)?, change)?;
        let (name, value) = encode_change(change);
        let call =
            RegistryCall::SetAttribute { identity: address_of(did).to_owned(), name, value, validity: ATTRIBUTE_VALIDITY_S };
        self.submit(did, call)
    }

    fn revoke(&mut self, did: &Did, fragment: &str) -> Result<OperationOutcome, DriverError> {
        let doc = writable(Some(self.current(did)), did)?;
        revoke_attribute(&doc, fragment)?;
        let id = did.absolute_ref(fragment);
        let identity = address_of(did).to_owned();
        let kind = if doc.services.iter().any(|s| s.id == id) { "svc" } else { "pub" };
        let name = format!("did/{kind}/{}", fragment_of(&id));
        let value = match self.state.attribute(&identity, &name) {
            Some((value, _)) => value.clone(),
            None => encode_attribute_value(&json!({"owner": self.state.identity_owner(&identity)})),
        };
        self.submit(did, RegistryCall::RevokeAttribute { identity, name, value })
    }

    fn delete(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        let call = RegistryCall::ChangeOwner { identity: address_of(did).to_owned(), new_owner: NULL_ADDRESS.to_owned() };
        self.submit(did, call)
    }

    fn initial_key(&self, did: &Did) -> VerificationMethod {
        controller_key(did, address_of(did))
    }

    fn generator(&mut self) -> &mut PayloadGenerator {
        &mut self.generator
    }

    fn ledger_writes(&self) -> u64 {
        self.ctx.writes()
    }
}
