//! Latency distributions calibrated from mean/std/min/max summaries.
//!
//! The lognormal shape is located at `min` (a three-parameter lognormal),
//! moment-matched to `(mean - min, std)`, and truncated at `max`. Truncation
//! moves the mean, so the log-location is re-solved by bisection until the
//! truncated mean equals the configured mean exactly. Samples are drawn by
//! inverse-CDF on the truncated range, which gives the same law as rejection
//! sampling with one uniform per draw.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{LedgerError, Platform};
use crate::did::OperationKind;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyShape {
    #[default]
    Lognormal,
    TruncatedNormal,
}

/// Summary statistics a latency distribution is fitted to, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencySpec {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub shape: LatencyShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl LatencySpec {
    pub fn new(mean: f64, std: f64, min: f64, max: f64) -> Self {
        Self { mean, std, min, max, shape: LatencyShape::Lognormal, provenance: None }
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        let finite = [self.mean, self.std, self.min, self.max].iter().all(|v| v.is_finite());
        if !finite || self.std < 0.0 || self.min < 0.0 || !(self.min <= self.mean && self.mean <= self.max) {
            return Err(LedgerError::InvalidLatency(format!(
                "need 0 <= min <= mean <= max and std >= 0, got mean={} std={} min={} max={}",
                self.mean, self.std, self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Latency specs for one platform. Hedera additionally carries topic creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformLatency {
    pub operations: BTreeMap<OperationKind, LatencySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_create: Option<LatencySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LatencyKey {
    Op(OperationKind),
    TopicCreate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fitted {
    Constant(f64),
    Lognormal { location: f64, mu: f64, sigma: f64, cdf_hi: f64 },
    Normal { mu: f64, sigma: f64, cdf_lo: f64, cdf_hi: f64 },
}

/// A fitted, truncated latency distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyDistribution {
    spec: LatencySpec,
    fitted: Fitted,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn lognormal_truncated_mean(mu: f64, sigma: f64, upper: f64) -> f64 {
    let n = std_normal();
    let a = (upper.ln() - mu) / sigma;
    let denom = n.cdf(a);
    if denom <= 0.0 {
        return upper;
    }
    (mu + sigma * sigma / 2.0).exp() * n.cdf(a - sigma) / denom
}

fn normal_truncated_mean(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let n = std_normal();
    let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
    let mass = n.cdf(b) - n.cdf(a);
    if mass <= 1e-300 {
        return if mu < lo { lo } else { hi };
    }
    mu + sigma * (n.pdf(a) - n.pdf(b)) / mass
}

/// Finds `x` in `[lo, hi]` with `f(x) == target` for increasing `f`.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

impl LatencyDistribution {
    pub fn fit(spec: &LatencySpec) -> Result<Self, LedgerError> {
        spec.validate()?;
        let degenerate = spec.std == 0.0 || spec.max == spec.min || spec.mean == spec.min || spec.mean == spec.max;
        let fitted = if degenerate {
            Fitted::Constant(spec.mean)
        } else {
            match spec.shape {
                LatencyShape::Lognormal => {
                    let excess = spec.mean - spec.min;
                    let upper = spec.max - spec.min;
                    let sigma = (1.0 + (spec.std / excess).powi(2)).ln().sqrt();
                    let lo = excess.ln() - sigma * sigma - 20.0;
                    let hi = upper.ln() + 30.0 * sigma;
                    let mu = bisect(|mu| lognormal_truncated_mean(mu, sigma, upper), excess, lo, hi);
                    let cdf_hi = std_normal().cdf((upper.ln() - mu) / sigma);
                    Fitted::Lognormal { location: spec.min, mu, sigma, cdf_hi }
                }
                LatencyShape::TruncatedNormal => {
                    let sigma = spec.std;
                    let (lo, hi) = (spec.min - 10.0 * sigma, spec.max + 10.0 * sigma);
                    let mu = bisect(|mu| normal_truncated_mean(mu, sigma, spec.min, spec.max), spec.mean, lo, hi);
                    let n = std_normal();
                    Fitted::Normal {
                        mu,
                        sigma,
                        cdf_lo: n.cdf((spec.min - mu) / sigma),
                        cdf_hi: n.cdf((spec.max - mu) / sigma),
                    }
                }
            }
        };
        Ok(Self { spec: spec.clone(), fitted })
    }

    pub fn spec(&self) -> &LatencySpec {
        &self.spec
    }

    /// Mean of the fitted truncated distribution.
    pub fn fitted_mean(&self) -> f64 {
        match self.fitted {
            Fitted::Constant(v) => v,
            Fitted::Lognormal { location, mu, sigma, .. } => {
                location + lognormal_truncated_mean(mu, sigma, self.spec.max - self.spec.min)
            }
            Fitted::Normal { mu, sigma, .. } => normal_truncated_mean(mu, sigma, self.spec.min, self.spec.max),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let value = match self.fitted {
            Fitted::Constant(v) => return v,
            Fitted::Lognormal { location, mu, sigma, cdf_hi } => {
                let p = rng.gen::<f64>() * cdf_hi;
                let z = std_normal().inverse_cdf(p.max(f64::MIN_POSITIVE));
                location + (mu + sigma * z).exp()
            }
            Fitted::Normal { mu, sigma, cdf_lo, cdf_hi } => {
                let p = cdf_lo + rng.gen::<f64>() * (cdf_hi - cdf_lo);
                mu + sigma * std_normal().inverse_cdf(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
            }
        };
        value.clamp(self.spec.min, self.spec.max)
    }
}

/// Fitted latency distributions for every configured (platform, key) pair.
#[derive(Debug, Clone)]
pub struct LatencyModel {
    entries: BTreeMap<(Platform, LatencyKey), LatencyDistribution>,
}

impl LatencyModel {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, platform: Platform, key: LatencyKey, spec: &LatencySpec) -> Result<(), LedgerError> {
        self.entries.insert((platform, key), LatencyDistribution::fit(spec)?);
        Ok(())
    }

    pub fn add_platform(&mut self, platform: Platform, latency: &PlatformLatency) -> Result<(), LedgerError> {
        for (op, spec) in &latency.operations {
            self.insert(platform, LatencyKey::Op(*op), spec)?;
        }
        if let Some(spec) = &latency.topic_create {
            self.insert(platform, LatencyKey::TopicCreate, spec)?;
        }
        Ok(())
    }

    pub fn get(&self, platform: Platform, key: LatencyKey) -> Result<&LatencyDistribution, LedgerError> {
        self.entries.get(&(platform, key)).ok_or(LedgerError::MissingModelEntry { platform, key })
    }

    /// Restricts the model to one platform, for handing to a single ledger.
    pub fn for_platform(&self, platform: Platform) -> LatencyModel {
        let entries = self.entries.iter().filter(|((p, _), _)| *p == platform).map(|(k, v)| (*k, v.clone())).collect();
        LatencyModel { entries }
    }
}

pub fn sample_latency(
    model: &LatencyModel,
    platform: Platform,
    op: OperationKind,
    rng: &mut ChaCha8Rng,
) -> Result<f64, LedgerError> {
    Ok(model.get(platform, LatencyKey::Op(op))?.sample(rng))
}
