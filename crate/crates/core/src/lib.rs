//! Simulated benchmarking of ledger-based DID methods: latency and fee per
//! lifecycle operation on three ledger architectures, relative metrics, and
//! a metadata-leakage score over the payloads each write exposes.

pub mod config;
pub mod did;
pub mod digest;
pub mod drivers;
pub mod ledger;
pub mod mls;
pub mod bench;
pub mod report;
