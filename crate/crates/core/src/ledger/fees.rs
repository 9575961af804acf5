//! Fee schedules. USD amounts are primary; native amounts are derived
//! through the schedule's token price.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LedgerError, Platform};
use crate::did::OperationKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpFee {
    /// No ledger transaction is submitted.
    OffChain,
    /// Ledger-scheduled flat fee.
    Fixed {
        usd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<String>,
    },
    /// `gas_used * gas_price`, with gas drawn uniformly from `gas_units ± gas_jitter`.
    Gas {
        gas_units: u64,
        #[serde(default)]
        gas_jitter: u64,
        gas_price_gwei: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<String>,
    },
    /// `base_usd + per_byte_usd * payload_bytes`.
    Bytes {
        base_usd: f64,
        per_byte_usd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<String>,
    },
}

impl OpFee {
    fn validate(&self, what: &str) -> Result<(), LedgerError> {
        let ok = match self {
            OpFee::OffChain => true,
            OpFee::Fixed { usd, .. } => usd.is_finite() && *usd >= 0.0,
            OpFee::Gas { gas_units, gas_jitter, gas_price_gwei, .. } => {
                gas_jitter <= gas_units && gas_price_gwei.is_finite() && *gas_price_gwei >= 0.0
            }
            OpFee::Bytes { base_usd, per_byte_usd, .. } => {
                base_usd.is_finite() && per_byte_usd.is_finite() && *base_usd >= 0.0 && *per_byte_usd >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LedgerError::InvalidFee(format!("{what}: {self:?}")))
        }
    }
}

/// A charged fee.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fee {
    pub usd: f64,
    pub native: f64,
    pub gas_used: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeeSchedule {
    pub native_unit: String,
    /// USD per native unit, as of `priced_on` in the config.
    pub token_price_usd: f64,
    /// Mean cost of a plain value transfer; the cost-normalization baseline.
    pub native_transfer_fee_usd: f64,
    pub operations: BTreeMap<OperationKind, OpFee>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_create: Option<OpFee>,
}

impl FeeSchedule {
    pub fn validate(&self, platform: Platform) -> Result<(), LedgerError> {
        if !(self.token_price_usd.is_finite() && self.token_price_usd > 0.0) {
            return Err(LedgerError::InvalidFee(format!("{platform}: token_price_usd must be positive")));
        }
        if !(self.native_transfer_fee_usd.is_finite() && self.native_transfer_fee_usd > 0.0) {
            return Err(LedgerError::InvalidFee(format!("{platform}: native_transfer_fee_usd must be positive")));
        }
        for (op, fee) in &self.operations {
            fee.validate(&format!("{platform}/{op}"))?;
        }
        if let Some(fee) = self.operations.get(&OperationKind::Resolve) {
            if *fee != OpFee::OffChain {
                return Err(LedgerError::InvalidFee(format!("{platform}/resolve must be off_chain")));
            }
        }
        if platform == Platform::Xrpl {
            let variable = self.operations.values().any(|f| matches!(f, OpFee::Gas { .. } | OpFee::Bytes { .. }));
            if variable {
                return Err(LedgerError::InvalidFee("xrpl fees must be fixed or off_chain".into()));
            }
        }
        if let Some(fee) = &self.topic_create {
            fee.validate(&format!("{platform}/topic_create"))?;
        }
        Ok(())
    }

    pub fn op_fee(&self, op: OperationKind) -> &OpFee {
        self.operations.get(&op).unwrap_or(&OpFee::OffChain)
    }

    pub fn quote(&self, op: OperationKind, payload_bytes: usize, rng: &mut ChaCha8Rng) -> Fee {
        if op == OperationKind::Resolve {
            return Fee::default();
        }
        self.charge(self.op_fee(op), payload_bytes, rng)
    }

    pub fn charge(&self, fee: &OpFee, payload_bytes: usize, rng: &mut ChaCha8Rng) -> Fee {
        match fee {
            OpFee::OffChain => Fee::default(),
            OpFee::Fixed { usd, .. } => Fee { usd: *usd, native: usd / self.token_price_usd, gas_used: None },
            OpFee::Gas { gas_units, gas_jitter, gas_price_gwei, .. } => {
                let gas = if *gas_jitter == 0 {
                    *gas_units
                } else {
                    rng.gen_range(gas_units - gas_jitter..=gas_units + gas_jitter)
                };
                let native = gas as f64 * gas_price_gwei * 1e-9;
                Fee { usd: native * self.token_price_usd, native, gas_used: Some(gas) }
            }
            OpFee::Bytes { base_usd, per_byte_usd, .. } => {
                let usd = base_usd + per_byte_usd * payload_bytes as f64;
                Fee { usd, native: usd / self.token_price_usd, gas_used: None }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn xrpl() -> FeeSchedule {
        let mut operations = BTreeMap::new();
        for op in [OperationKind::Create, OperationKind::Update, OperationKind::Revoke, OperationKind::Delete] {
            operations.insert(op, OpFee::Fixed { usd: 0.000026, provenance: None });
        }
        operations.insert(OperationKind::Resolve, OpFee::OffChain);
        FeeSchedule {
            native_unit: "XRP".into(),
            token_price_usd: 2.10,
            native_transfer_fee_usd: 0.000021,
            operations,
            topic_create: None,
        }
    }

    #[test]
    fn fixed_fee_is_exact() {
        let s = xrpl();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(s.quote(OperationKind::Update, 500, &mut rng).usd, 0.000026);
        }
        assert_eq!(s.quote(OperationKind::Resolve, 500, &mut rng), Fee::default());
        s.validate(Platform::Xrpl).unwrap();
    }

    #[test]
    fn gas_fee_derives_usd_from_native() {
        let mut s = xrpl();
        s.native_unit = "ETH".into();
        s.token_price_usd = 1587.3;
        let fee = OpFee::Gas { gas_units: 21_000, gas_jitter: 0, gas_price_gwei: 1.2, provenance: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = s.charge(&fee, 0, &mut rng);
        assert!((f.native - 21_000.0 * 1.2e-9).abs() < 1e-18);
        assert!((f.usd - 0.04).abs() < 1e-5);
        assert_eq!(f.gas_used, Some(21_000));
    }

    #[test]
    fn byte_fee_grows_with_payload() {
        let s = xrpl();
        let fee = OpFee::Bytes { base_usd: 0.0001, per_byte_usd: 1e-7, provenance: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((s.charge(&fee, 100, &mut rng).usd - 0.00011).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let mut s = xrpl();
        s.operations.insert(OperationKind::Resolve, OpFee::Fixed { usd: 1.0, provenance: None });
        assert!(s.validate(Platform::Xrpl).is_err());
        let mut s = xrpl();
        s.operations.insert(OperationKind::Update, OpFee::Fixed { usd: -1.0, provenance: None });
        assert!(s.validate(Platform::Xrpl).is_err());
        let mut s = xrpl();
        s.operations.insert(
            OperationKind::Update,
            OpFee::Bytes { base_usd: 0.0, per_byte_usd: 0.0, provenance: None },
        );
        assert!(s.validate(Platform::Xrpl).is_err());
    }
}
