//! Fisher information of the protocol per round and the resulting
//! Cramér–Rao variance floor for the phase sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ProtocolParams;

/// Exact binomial coefficient as f64 (node counts are small).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
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

/// Classical Fisher information carried by one ±1 measurement with
/// outcome law `(1 ± cos x)/2` about its phase argument:
/// `(p')² / (p(1−p)) = sin²x / (1 − cos²x) = 1`, independent of the
/// phase and of the basis. Every measurement in the protocol has this
/// form, so the per-combination information is 1.
pub fn unit_information() -> f64 {
    1.0
}

/// Probability that the sum over one specific size-`m` subset of nodes is
/// measured in a round:
/// `P_S·P_M (only m = 1) + P_E·P_M^m·P_F^{N−m}`.
pub fn p_k(m: usize, params: &ProtocolParams) -> Result<f64> {
    let n = params.n_bobs();
    if m == 0 || m > n {
        return Err(Error::SubsetSizeOutOfRange { m, n_bobs: n });
    }
    let separable = if m == 1 {
        params.p_separable() * params.p_measure()
    } else {
        0.0
    };
    let entangled = params.p_entangled()
        * params.p_measure().powi(m as i32)
        * params.p_fidelity().powi((n - m) as i32);
    Ok(separable + entangled)
}

/// Per-round Fisher information split into its separable term and the
/// entangled terms for each measured-subset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherBreakdown {
    pub separable_term: f64,
    /// Index m−1 holds the entangled contribution of subset size m.
    pub entangled_terms: Vec<f64>,
    pub total: f64,
}

/// Per-round Fisher information about the phase sum:
/// `P_S·P_M·I₁/N + P_E·Σ_m P_M^m·P_F^{N−m}·(m/N)·C(N−1, m−1)·I_m`
/// with every `I_m` equal to [`unit_information`].
pub fn total_information(params: &ProtocolParams) -> FisherBreakdown {
    let n = params.n_bobs();
    let i_m = unit_information();
    let separable_term = params.p_separable() * params.p_measure() * i_m / n as f64;
    let entangled_terms: Vec<f64> = (1..=n)
        .map(|m| {
            params.p_entangled()
                * params.p_measure().powi(m as i32)
                * params.p_fidelity().powi((n - m) as i32)
                * (m as f64 / n as f64)
                * binomial(n - 1, m - 1)
                * i_m
        })
        .collect();
    let total = separable_term + entangled_terms.iter().sum::<f64>();
    FisherBreakdown {
        separable_term,
        entangled_terms,
        total,
    }
}

/// Cramér–Rao variance floor `1/(N_R · I_total)`; an explicit error when
/// the information vanishes.
pub fn crb_variance(params: &ProtocolParams, n_rounds: usize) -> Result<f64> {
    let info = total_information(params).total;
    if info <= 0.0 {
        return Err(Error::ZeroInformation);
    }
    Ok(1.0 / (n_rounds as f64 * info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(n_bobs: usize, p_s: f64, p_f: f64) -> ProtocolParams {
        ProtocolParams::new(n_bobs, 1, p_s, p_f).unwrap()
    }

    #[test]
    fn p_k_values() {
        // All-entangled with balanced choices: every subset is equally
        // likely with probability 2^{-N}.
        for n in 1..=6 {
            let p = params(n, 0.0, 0.5);
            for m in 1..=n {
                assert_abs_diff_eq!(p_k(m, &p).unwrap(), 0.5f64.powi(n as i32), epsilon = 1e-15);
            }
        }
        // Separable-only rounds measure single parameters only.
        assert_eq!(p_k(2, &params(3, 1.0, 0.5)).unwrap(), 0.0);
        // Mixed example.
        assert_abs_diff_eq!(
            p_k(1, &params(2, 0.5, 0.5)).unwrap(),
            0.25 + 0.5 * 0.5 * 0.5,
            epsilon = 1e-15
        );
        assert!(p_k(0, &params(2, 0.5, 0.5)).is_err());
        assert!(p_k(3, &params(2, 0.5, 0.5)).is_err());
    }

    #[test]
    fn unit_information_matches_numeric_curvature() {
        // Fisher information of the Bernoulli cosine law by finite
        // differences of the log-likelihood, at angles away from the
        // deterministic points.
        let h = 1e-5;
        for &x in &[0.3f64, 1.1, 2.0, 4.5, 5.9] {
            for sign in [1.0, -1.0] {
                let p = |x: f64| 0.5 * (1.0 + sign * x.cos());
                let info = {
                    let dp = (p(x + h) - p(x - h)) / (2.0 * h);
                    dp * dp / (p(x) * (1.0 - p(x)))
                };
                assert_abs_diff_eq!(info, unit_information(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn endpoints() {
        // Separable-only with full measurement: 1/N.
        for n in 1..=6 {
            let b = total_information(&params(n, 1.0, 0.0));
            assert_abs_diff_eq!(b.total, 1.0 / n as f64, epsilon = 1e-15);
            assert!(b.entangled_terms.iter().all(|t| *t == 0.0));
        }
        // Entangled-only with no fidelity checking: 1.
        for n in 1..=6 {
            let b = total_information(&params(n, 0.0, 0.0));
            assert_abs_diff_eq!(b.total, 1.0, epsilon = 1e-15);
            assert_eq!(b.separable_term, 0.0);
        }
        // All fidelity checks: no information at all.
        let b = total_information(&params(3, 0.5, 1.0));
        assert_abs_diff_eq!(b.total, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn separable_entangled_ratio() {
        // The entangled endpoint carries N times the separable endpoint.
        for n in 1..=6 {
            let sep = total_information(&params(n, 1.0, 0.0)).total;
            let ent = total_information(&params(n, 0.0, 0.0)).total;
            assert_abs_diff_eq!(sep * n as f64, ent, epsilon = 1e-12);
        }
    }

    #[test]
    fn breakdown_is_consistent() {
        let b = total_information(&params(4, 0.3, 0.6));
        let sum = b.separable_term + b.entangled_terms.iter().sum::<f64>();
        assert_abs_diff_eq!(b.total, sum, epsilon = 1e-15);
        assert!(b.separable_term >= 0.0);
        assert!(b.entangled_terms.iter().all(|t| *t >= 0.0));
        assert_eq!(b.entangled_terms.len(), 4);
    }

    #[test]
    fn crb_values() {
        // Separable-only, N = 3, 300 rounds: 3/300.
        let p = params(3, 1.0, 0.0);
        assert_abs_diff_eq!(crb_variance(&p, 300).unwrap(), 0.01, epsilon = 1e-15);
        // Entangled-only, 100 rounds: 1/100.
        let p = params(4, 0.0, 0.0);
        assert_abs_diff_eq!(crb_variance(&p, 100).unwrap(), 0.01, epsilon = 1e-15);
        // Doubling rounds halves the bound.
        let p = params(2, 0.4, 0.3);
        assert_abs_diff_eq!(
            crb_variance(&p, 200).unwrap(),
            crb_variance(&p, 100).unwrap() / 2.0,
            epsilon = 1e-15
        );
        // Zero information is an explicit error.
        assert_eq!(crb_variance(&params(2, 0.5, 1.0), 100), Err(Error::ZeroInformation));
    }

    #[test]
    fn round_outcome_space_is_complete() {
        // Over the entangled sector, the subset probabilities plus the
        // all-check event exhaust P_E; the separable sector always sums
        // to P_S because each node's choice is binary. Total mass 1.
        for (n, p_s, p_f) in [(1, 0.3, 0.4), (3, 0.5, 0.5), (5, 0.2, 0.7), (6, 0.9, 0.1)] {
            let p = params(n, p_s, p_f);
            let entangled_mass: f64 = (1..=n)
                .map(|m| {
                    binomial(n, m)
                        * p.p_entangled()
                        * p.p_measure().powi(m as i32)
                        * p.p_fidelity().powi((n - m) as i32)
                })
                .sum();
            let all_check = p.p_entangled() * p.p_fidelity().powi(n as i32);
            assert_abs_diff_eq!(
                entangled_mass + all_check + p.p_separable(),
                1.0,
                epsilon = 1e-12
            );
        }
    }
}
