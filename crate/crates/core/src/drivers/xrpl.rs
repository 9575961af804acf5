//! `did:xrpl` over the native DID object. Every change rewrites the whole
//! stored document with DIDSet; Delete removes the object with DIDDelete.

use rand_chacha::ChaCha8Rng;

use super::payload::{PayloadGenerator, WriteContent};
use super::{fresh_key_bytes, writable, DriverError, MethodDriver, OperationOutcome};
use crate::config::BenchConfig;
use crate::did::{
    apply_update, build_initial_document, revoke_attribute, Change, Did, DidDocument, OperationKind, Resolution,
    VerificationMethod,
};
use crate::digest;
use crate::ledger::native::{ledger_entry_lookup, native_submit, LookupResult, NativeObjectState, NativeTx};
use crate::ledger::{LedgerContext, Platform};

pub const KEY_TYPE: &str = "Ed25519VerificationKey2018";
pub const NETWORK_ID: &str = "1";

pub struct XrplDriver {
    ctx: LedgerContext,
    state: NativeObjectState,
    generator: PayloadGenerator,
    key_rng: ChaCha8Rng,
}

/// Classic address for a public key: version byte 0, 20-byte account id and
/// a 4-byte checksum in the ripple base58 alphabet.
pub fn classic_address(public_key: &[u8]) -> String {
    let account = &digest::digest(&[public_key])[..20];
    let mut payload = vec![0u8];
    payload.extend_from_slice(account);
    let check = digest::digest(&[&digest::digest(&[&payload])]);
    payload.extend_from_slice(&check[..4]);
    bs58::encode(payload).with_alphabet(bs58::Alphabet::RIPPLE).into_string()
}

impl XrplDriver {
    pub fn new(config: &BenchConfig) -> Self {
        let platform = Platform::Xrpl;
        Self {
            ctx: LedgerContext::from_config(platform, config),
            state: NativeObjectState::new(),
            generator: PayloadGenerator::new(platform, config.chain(platform).payload.clone(), config.seed),
            key_rng: platform.rng(config.seed, 3),
        }
    }

    pub fn ledger(&self) -> &NativeObjectState {
        &self.state
    }

    fn current(&self, did: &Did) -> Option<DidDocument> {
        match self.state.entry(did) {
            Some(entry) => Some(entry.document.clone()),
            None if self.state.is_deleted(did) => Some(DidDocument { deactivated: true, ..self.placeholder(did) }),
            None => None,
        }
    }

    fn placeholder(&self, did: &Did) -> DidDocument {
        build_initial_document(did, self.initial_key(did)).expect("placeholder key is valid")
    }

    fn submit(
        &mut self,
        did: &Did,
        tx: NativeTx,
        op: OperationKind,
        uri: Option<&str>,
    ) -> Result<OperationOutcome, DriverError> {
        let mut receipt = native_submit(&mut self.state, &tx, op, &mut self.ctx)?;
        receipt.payload = Some(self.generator.generate_payload(did, WriteContent::Native { tx: &tx, uri }, &receipt));
        Ok(OperationOutcome::write(did, receipt))
    }
}

impl MethodDriver for XrplDriver {
    fn platform(&self) -> Platform {
        Platform::Xrpl
    }

    fn create(&mut self) -> Result<OperationOutcome, DriverError> {
        let key = fresh_key_bytes(&mut self.key_rng);
        let did = Did::new("xrpl", &format!("{NETWORK_ID}:{}", classic_address(&key)))?;
        let method = VerificationMethod {
            id: did.fragment("keys-1"),
            key_type: KEY_TYPE.to_owned(),
            controller: did.clone(),
            public_key: digest::b58(&key),
        };
        let doc = build_initial_document(&did, method)?;
        self.submit(&did, NativeTx::DidSet(doc), OperationKind::Create, None)
    }

    fn resolve(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        let (result, read) = ledger_entry_lookup(&self.state, did, &mut self.ctx)?;
        let resolution = match result {
            LookupResult::Found(doc) => Resolution::of(doc),
            LookupResult::Deleted => Resolution::Deactivated(did.clone()),
            LookupResult::NotFound => Resolution::NotFound(did.clone()),
        };
        Ok(OperationOutcome::read(did, read.latency, resolution))
    }

    fn update(&mut self, did: &Did, change: &Change) -> Result<OperationOutcome, DriverError> {
        let next = apply_update(&writable(self.current(did), did)?, change)?;
        let uri = match change {
            Change::Service(s) => Some(s.endpoint.clone()),
            Change::Key { .. } => None,
        };
        self.submit(did, NativeTx::DidSet(next), OperationKind::Update, uri.as_deref())
    }

    fn revoke(&mut self, did: &Did, fragment: &str) -> Result<OperationOutcome, DriverError> {
        let next = revoke_attribute(&writable(self.current(did), did)?, fragment)?;
        self.submit(did, NativeTx::DidSet(next), OperationKind::Revoke, None)
    }

    fn delete(&mut self, did: &Did) -> Result<OperationOutcome, DriverError> {
        self.submit(did, NativeTx::DidDelete(did.clone()), OperationKind::Delete, None)
    }

    fn initial_key(&self, did: &Did) -> VerificationMethod {
        match self.state.entry(did) {
            Some(entry) if !entry.document.verification_methods.is_empty() => {
                entry.document.verification_methods[0].clone()
            }
            _ => VerificationMethod {
                id: did.fragment("keys-1"),
                key_type: KEY_TYPE.to_owned(),
                controller: did.clone(),
                public_key: "unknown".to_owned(),
            },
        }
    }

    fn generator(&mut self) -> &mut PayloadGenerator {
        &mut self.generator
    }

    fn ledger_writes(&self) -> u64 {
        self.ctx.writes()
    }
}
