//! Deterministic digests standing in for hashes, addresses and signatures.

use base64::Engine as _;
use sha2::{Digest, Sha256};

/// SHA-256 over length-prefixed parts, so `["ab","c"]` and `["a","bc"]` differ.
pub fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hex_upper(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect()
}

pub fn b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn b58(bytes: &[u8]) -> String {
    bs58::encode(bytes).into_string()
}

/// `n` pseudo-random bytes derived from the given parts.
pub fn expand(parts: &[&[u8]], n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    let mut counter = 0u64;
    while out.len() < n {
        let mut with_counter: Vec<&[u8]> = parts.to_vec();
        let c = counter.to_le_bytes();
        with_counter.push(&c);
        out.extend_from_slice(&digest(&with_counter));
        counter += 1;
    }
    out.truncate(n);
    out
}
