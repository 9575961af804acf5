//! DID syntax, the DID Document data model, and the pure lifecycle
//! transitions every ledger back-end must agree with.
//!
//! Transitions take a document by reference and return a new one; nothing in
//! this module mutates its input. Resolvers for the simulated ledgers fold
//! their stored events through these same functions, and the property tests
//! use them as the reference fold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// JSON-LD context emitted on every document. No JSON-LD processing is done.
pub const DID_CONTEXT: &str = "https://www.w3.org/ns/did/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DidError {
    #[error("malformed DID {0:?}")]
    MalformedDid(String),
    #[error("key controller {found} does not match DID {expected}")]
    ControllerMismatch { expected: String, found: String },
    #[error("DID {0} is deactivated")]
    Deactivated(String),
    #[error("unknown fragment {0}")]
    UnknownFragment(String),
    #[error("fragment id {id} does not belong to {did}")]
    ForeignFragment { did: String, id: String },
    #[error("fragment id {0} already names a different kind of entry")]
    DuplicateFragment(String),
    #[error("invalid service endpoint {0:?}")]
    InvalidEndpoint(String),
    #[error("verification method {0} has an empty public key")]
    EmptyPublicKey(String),
}

/// A decentralized identifier, `did:<method>:<method-specific-id>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Did {
    method: String,
    method_specific_id: String,
}

impl Did {
    pub fn new(method: &str, method_specific_id: &str) -> Result<Self, DidError> {
        let method = method.to_ascii_lowercase();
        let valid_method =
            !method.is_empty() && method.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
        if !valid_method || method_specific_id.is_empty() {
            return Err(DidError::MalformedDid(format!("did:{method}:{method_specific_id}")));
        }
        Ok(Self { method, method_specific_id: method_specific_id.to_owned() })
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn method_specific_id(&self) -> &str {
        &self.method_specific_id
    }

    /// Full id of a fragment of this DID, e.g. `did:x:y#key-1`.
    pub fn fragment(&self, name: &str) -> String {
        format!("{self}#{}", name.trim_start_matches('#'))
    }

    /// Expands `#frag`, `frag`, or an already absolute `did...#frag` reference.
    pub fn absolute_ref(&self, reference: &str) -> String {
        if reference.starts_with("did:") {
            reference.to_owned()
        } else {
            self.fragment(reference)
        }
    }

    fn owns(&self, id: &str) -> bool {
        id.len() > self.to_string().len() + 1 && id.starts_with(&format!("{self}#"))
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "did:{}:{}", self.method, self.method_specific_id)
    }
}

impl FromStr for Did {
    type Err = DidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_did(s)
    }
}

impl Serialize for Did {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Did {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_did(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses `did:<method>:<id>`. The method is lowercased; everything after
/// the second colon is the method-specific id, colons included.
pub fn parse_did(text: &str) -> Result<Did, DidError> {
    let malformed = || DidError::MalformedDid(text.to_owned());
    let rest = text.strip_prefix("did:").ok_or_else(malformed)?;
    let (method, id) = rest.split_once(':').ok_or_else(malformed)?;
    Did::new(method, id).map_err(|_| malformed())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationMethod {
    pub id: String,
    #[serde(rename = "type")]
    pub key_type: String,
    pub controller: Did,
    #[serde(rename = "publicKeyBase58")]
    pub public_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEndpoint {
    pub id: String,
    #[serde(rename = "type")]
    pub service_type: String,
    #[serde(rename = "serviceEndpoint")]
    pub endpoint: String,
}

/// Field order here is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DidDocument {
    #[serde(rename = "@context")]
    pub context: String,
    pub id: Did,
    #[serde(rename = "verificationMethod")]
    pub verification_methods: Vec<VerificationMethod>,
    pub authentication: Vec<String>,
    #[serde(rename = "assertionMethod")]
    pub assertion_method: Vec<String>,
    #[serde(rename = "service", default, skip_serializing_if = "Vec::is_empty")]
    pub services: Vec<ServiceEndpoint>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub deactivated: bool,
}

impl DidDocument {
    /// Compact JSON with fixed key order, used for hashing and sizing.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization is infallible")
    }

    /// True for documents left without any verification method after revocation.
    pub fn has_no_keys(&self) -> bool {
        self.verification_methods.is_empty()
    }

    pub fn contains_fragment(&self, id: &str) -> bool {
        self.verification_methods.iter().any(|vm| vm.id == id) || self.services.iter().any(|s| s.id == id)
    }

    /// Every authentication/assertionMethod reference names a verification method.
    pub fn references_resolve(&self) -> bool {
        self.authentication
            .iter()
            .chain(&self.assertion_method)
            .all(|r| self.verification_methods.iter().any(|vm| &vm.id == r))
    }
}

/// The five lifecycle operations. A full cycle is a composite, not a variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperationKind {
    Create,
    Resolve,
    Update,
    Revoke,
    Delete,
}

impl OperationKind {
    pub const ALL: [OperationKind; 5] = [Self::Create, Self::Resolve, Self::Update, Self::Revoke, Self::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Create => "create",
            Self::Resolve => "resolve",
            Self::Update => "update",
            Self::Revoke => "revoke",
            Self::Delete => "delete",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Create => "Create",
            Self::Resolve => "Resolve",
            Self::Update => "Update",
            Self::Revoke => "Revoke",
            Self::Delete => "Delete",
        }
    }

    pub fn is_write(self) -> bool {
        !matches!(self, Self::Resolve)
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "create" => Ok(Self::Create),
            "resolve" => Ok(Self::Resolve),
            "update" => Ok(Self::Update),
            "revoke" => Ok(Self::Revoke),
            "delete" | "deactivate" => Ok(Self::Delete),
            other => Err(format!("unknown operation {other:?}")),
        }
    }
}

/// A document change carried by an Update. Entries are replaced by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Key { method: VerificationMethod, authentication: bool, assertion_method: bool },
    Service(ServiceEndpoint),
}

impl Change {
    pub fn fragment_id(&self) -> &str {
        match self {
            Change::Key { method, .. } => &method.id,
            Change::Service(s) => &s.id,
        }
    }
}

/// One step of a lifecycle sequence after creation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Update(Change),
    Revoke(String),
    Deactivate,
}

/// What a resolver hands back for a DID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Found(DidDocument),
    Deactivated(Did),
    NotFound(Did),
}

impl Resolution {
    pub fn of(doc: DidDocument) -> Self {
        if doc.deactivated {
            Resolution::Deactivated(doc.id)
        } else {
            Resolution::Found(doc)
        }
    }

    pub fn document(&self) -> Option<&DidDocument> {
        match self {
            Resolution::Found(doc) => Some(doc),
            _ => None,
        }
    }
}

/// Document with a single key used for both authentication and assertion.
pub fn build_initial_document(did: &Did, key: VerificationMethod) -> Result<DidDocument, DidError> {
    if &key.controller != did {
        return Err(DidError::ControllerMismatch { expected: did.to_string(), found: key.controller.to_string() });
    }
    check_key(did, &key)?;
    Ok(DidDocument {
        context: DID_CONTEXT.to_owned(),
        id: did.clone(),
        authentication: vec![key.id.clone()],
        assertion_method: vec![key.id.clone()],
        verification_methods: vec![key],
        services: Vec::new(),
        deactivated: false,
    })
}

fn check_key(did: &Did, key: &VerificationMethod) -> Result<(), DidError> {
    if !did.owns(&key.id) {
        return Err(DidError::ForeignFragment { did: did.to_string(), id: key.id.clone() });
    }
    if key.public_key.is_empty() {
        return Err(DidError::EmptyPublicKey(key.id.clone()));
    }
    Ok(())
}

fn check_service(did: &Did, service: &ServiceEndpoint) -> Result<(), DidError> {
    if !did.owns(&service.id) {
        return Err(DidError::ForeignFragment { did: did.to_string(), id: service.id.clone() });
    }
    url::Url::parse(&service.endpoint).map_err(|_| DidError::InvalidEndpoint(service.endpoint.clone()))?;
    Ok(())
}

fn set_membership(list: &mut Vec<String>, id: &str, member: bool) {
    let present = list.iter().any(|r| r == id);
    if member && !present {
        list.push(id.to_owned());
    } else if !member && present {
        list.retain(|r| r != id);
    }
}

/// Adds or replaces a key or service. Replacement keeps the entry's position.
pub fn apply_update(doc: &DidDocument, change: &Change) -> Result<DidDocument, DidError> {
    if doc.deactivated {
        return Err(DidError::Deactivated(doc.id.to_string()));
    }
    let mut next = doc.clone();
    match change {
        Change::Key { method, authentication, assertion_method } => {
            check_key(&doc.id, method)?;
            if doc.services.iter().any(|s| s.id == method.id) {
                return Err(DidError::DuplicateFragment(method.id.clone()));
            }
            match next.verification_methods.iter_mut().find(|vm| vm.id == method.id) {
                Some(slot) => *slot = method.clone(),
                None => next.verification_methods.push(method.clone()),
            }
            set_membership(&mut next.authentication, &method.id, *authentication);
            set_membership(&mut next.assertion_method, &method.id, *assertion_method);
        }
        Change::Service(service) => {
            check_service(&doc.id, service)?;
            if doc.verification_methods.iter().any(|vm| vm.id == service.id) {
                return Err(DidError::DuplicateFragment(service.id.clone()));
            }
            match next.services.iter_mut().find(|s| s.id == service.id) {
                Some(slot) => *slot = service.clone(),
                None => next.services.push(service.clone()),
            }
        }
    }
    Ok(next)
}

/// Removes a key or service and every reference to it.
pub fn revoke_attribute(doc: &DidDocument, fragment_id: &str) -> Result<DidDocument, DidError> {
    if doc.deactivated {
        return Err(DidError::Deactivated(doc.id.to_string()));
    }
    let id = doc.id.absolute_ref(fragment_id);
    if !doc.contains_fragment(&id) {
        return Err(DidError::UnknownFragment(fragment_id.to_owned()));
    }
    let mut next = doc.clone();
    next.verification_methods.retain(|vm| vm.id != id);
    next.services.retain(|s| s.id != id);
    next.authentication.retain(|r| r != &id);
    next.assertion_method.retain(|r| r != &id);
    Ok(next)
}

pub fn deactivate(doc: &DidDocument) -> DidDocument {
    DidDocument { deactivated: true, ..doc.clone() }
}

pub fn apply_transition(doc: &DidDocument, transition: &Transition) -> Result<DidDocument, DidError> {
    match transition {
        Transition::Update(change) => apply_update(doc, change),
        Transition::Revoke(fragment) => revoke_attribute(doc, fragment),
        Transition::Deactivate => Ok(deactivate(doc)),
    }
}
