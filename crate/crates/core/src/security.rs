//! Closed-form security analysis: distributions of the number of rounds
//! the eavesdropper profits from before detection, and the certified
//! lower bound on her average dispersion.
//!
//! Rounds split into two detection channels. A detection on a separable
//! preparation can coincide with information gain (other nodes may have
//! applied phases that round); a detection on an entangled preparation
//! requires every node to have fidelity-checked, so that round carries no
//! phase information by construction. Combining both channels gives the
//! special negative trinomial bound on the count of information-gaining
//! rounds before the K-th detection.

use serde::{Deserialize, Serialize};

use crate::adversary::{detection_probability_per_round, AttackStrategy, PrepKind};
use crate::error::{Error, Result};
use crate::protocol::ProtocolParams;

/// Tabulation length of the dispersion curve for multi-node protocols.
pub const MULTI_BOB_CURVE_CAP: usize = 50;
/// Tabulation length for single-node protocols.
pub const SINGLE_BOB_CURVE_CAP: usize = 100;

/// Per-round detection rates split by preparation kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionDistribution {
    pub d_separable: f64,
    pub d_entangled: f64,
}

impl DetectionDistribution {
    pub fn new(d_separable: f64, d_entangled: f64) -> Result<Self> {
        for (name, value) in [("d_separable", d_separable), ("d_entangled", d_entangled)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        if d_separable + d_entangled > 1.0 + 1e-12 {
            return Err(Error::InvalidProbability {
                name: "d_separable + d_entangled",
                value: d_separable + d_entangled,
            });
        }
        Ok(DetectionDistribution {
            d_separable,
            d_entangled,
        })
    }

    /// Probability of surviving a round undetected.
    pub fn undetected(&self) -> f64 {
        (1.0 - self.d_separable - self.d_entangled).max(0.0)
    }

    pub fn total(&self) -> f64 {
        self.d_separable + self.d_entangled
    }
}

/// `P(n_r) = (1−d)^{n_r} · d`: number of undetected rounds before the
/// first detection (support starts at 0).
pub fn geo1_pmf(n_r: u64, d: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::ZeroDetectionRate);
    }
    Ok((1.0 - d).powi(n_r as i32) * d)
}

/// `P(n_r) = (1−d)^{n_r−1} · d`: number of rounds up to and including the
/// first detection (support starts at 1).
pub fn geo2_pmf(n_r: u64, d: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::ZeroDetectionRate);
    }
    if n_r == 0 {
        return Err(Error::GeometricSupport);
    }
    Ok((1.0 - d).powi(n_r as i32 - 1) * d)
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Upper bound on the probability that the eavesdropper obtains exactly
/// `n_r` information-gaining rounds before her `k_detections`-th
/// detection:
///
/// `Σ_{k=0}^{min(n_r, K)} C(K,k) · u^{n_r−k} · d_S^k · d_E^{K−k}`
///
/// where `k` counts detections on separable preparations (which coincide
/// with an information round) and the rest fall on entangled
/// preparations (information-free rounds). For `K = 1` this reduces to
/// `u^{n_r−1}·d_S + u^{n_r}·d_E`, which sums to 1 over `n_r ≥ 0`.
pub fn snt_bound(k_detections: u32, n_r: u64, d: &DetectionDistribution) -> f64 {
    let u = d.undetected();
    let cap = (k_detections as u64).min(n_r) as u32;
    let mut total = 0.0;
    for k in 0..=cap {
        total += binomial(k_detections, k)
            * u.powi((n_r - k as u64) as i32)
            * d.d_separable.powi(k as i32)
            * d.d_entangled.powi((k_detections - k) as i32);
    }
    total
}

/// Per-round detection rates for a strategy at the given protocol
/// parameters: the preparation-kind cells weighted by the preparation
/// mix.
pub fn per_round_rates(strategy: &AttackStrategy, params: &ProtocolParams) -> DetectionDistribution {
    let d_separable = params.p_separable()
        * detection_probability_per_round(strategy, PrepKind::Separable, params);
    let d_entangled = params.p_entangled()
        * detection_probability_per_round(strategy, PrepKind::Entangled, params);
    DetectionDistribution {
        d_separable,
        d_entangled,
    }
}

/// Probability the eavesdropper survives `n_rounds` rounds undetected.
pub fn undetected_probability(
    strategy: &AttackStrategy,
    params: &ProtocolParams,
    n_rounds: usize,
) -> f64 {
    per_round_rates(strategy, params)
        .undetected()
        .powi(n_rounds as i32)
}

/// Mean dispersion of the eavesdropper's posterior after `n` attacked
/// rounds of evidence, tabulated for `n = 0..=cap` with `Λ(0) = 1`.
/// Beyond the cap the curve is treated as 0, which makes every bound
/// built from it conservative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    values: Vec<f64>,
}

impl LambdaCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty()
            || (values[0] - 1.0).abs() > 1e-6
            || values.iter().any(|v| !(0.0..=2.0).contains(v))
        {
            return Err(Error::InvalidLambdaCurve);
        }
        Ok(LambdaCurve { values })
    }

    pub fn n_cap(&self) -> usize {
        self.values.len() - 1
    }

    /// Λ(n), zero beyond the tabulated range.
    pub fn value(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Certified lower bound on the eavesdropper's average dispersion:
/// the curve weighted by the distribution of information-gaining rounds
/// before her first detection. Single-node protocols use the geometric
/// weights on undetected-round counts; multi-node protocols use the
/// two-channel first-detection weights. All mass beyond the curve's cap
/// contributes zero.
pub fn lambda_e_lower_bound(
    strategy: &AttackStrategy,
    params: &ProtocolParams,
    curve: &LambdaCurve,
) -> f64 {
    let rates = per_round_rates(strategy, params);
    if rates.total() <= 0.0 {
        // Never detected: every weight sits beyond the cap.
        return 0.0;
    }
    let mut bound = 0.0;
    if params.n_bobs() == 1 {
        let d = rates.total();
        for n in 0..=curve.n_cap() as u64 {
            bound += geo1_pmf(n, d).expect("d > 0 checked above") * curve.value(n as usize);
        }
    } else {
        let u = rates.undetected();
        for n in 0..=curve.n_cap() as u64 {
            let mut w = u.powi(n as i32) * rates.d_entangled;
            if n >= 1 {
                w += u.powi(n as i32 - 1) * rates.d_separable;
            }
            bound += w * curve.value(n as usize);
        }
    }
    bound
}
