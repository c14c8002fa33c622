//! The eavesdropper: channel attacks, her classical-channel observation,
//! and the closed-form per-round detection model.
//!
//! Four attack strategies are modelled. Replace attacks discard the
//! intercepted probes unmeasured and resend fresh uniformly random states
//! of the strategy's kind. Measure-and-resend attacks measure every
//! intercepted qubit in a random basis, reconstruct the most likely
//! encoding consistent with the result, and resend states of the
//! strategy's kind carrying the guess. Either way the eavesdropper knows
//! her resent states exactly, which is what lets her decode the public
//! announcements.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::EvidenceSet;
use crate::protocol::{evidence_from_round, BobRecord, ProtocolParams};
use crate::qstate::{
    sample_ghz, sample_separable, Basis, EncodingPhase, Outcome, ProbePreparation,
};

/// Per fidelity check: detection probability of an uninformed (replace)
/// substitution.
pub const REPLACE_CHECK_DETECTION: f64 = 0.5;

/// Per fidelity check: detection probability of an informed
/// (measure-and-resend) substitution of the same state kind.
pub const MEASURE_RESEND_CHECK_DETECTION: f64 = 0.25;

/// The four channel attacks: whether the eavesdropper measures before
/// substituting, and what kind of state she resends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    ReplaceSeparable,
    ReplaceEntangled,
    MeasureResendSeparable,
    MeasureResendEntangled,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::ReplaceSeparable,
        AttackKind::ReplaceEntangled,
        AttackKind::MeasureResendSeparable,
        AttackKind::MeasureResendEntangled,
    ];

    pub fn measures(self) -> bool {
        matches!(
            self,
            AttackKind::MeasureResendSeparable | AttackKind::MeasureResendEntangled
        )
    }

    pub fn resends_separable(self) -> bool {
        matches!(
            self,
            AttackKind::ReplaceSeparable | AttackKind::MeasureResendSeparable
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::ReplaceSeparable => "replace-separable",
            AttackKind::ReplaceEntangled => "replace-entangled",
            AttackKind::MeasureResendSeparable => "measure-resend-separable",
            AttackKind::MeasureResendEntangled => "measure-resend-entangled",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown attack kind `{s}`"))
    }
}

/// An attack kind plus the per-round probability of actually attacking
/// (1 throughout the security analysis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    pub attack_probability: f64,
}

impl AttackStrategy {
    pub fn new(kind: AttackKind, attack_probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&attack_probability) || attack_probability.is_nan() {
            return Err(Error::InvalidProbability {
                name: "attack_probability",
                value: attack_probability,
            });
        }
        Ok(AttackStrategy {
            kind,
            attack_probability,
        })
    }

    /// Attack every round.
    pub fn always(kind: AttackKind) -> Self {
        AttackStrategy {
            kind,
            attack_probability: 1.0,
        }
    }
}

/// Which kind of state the sender put on the channel; the conditioning
/// variable of the detection table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrepKind {
    Separable,
    Entangled,
}

impl From<&ProbePreparation> for PrepKind {
    fn from(prep: &ProbePreparation) -> Self {
        match prep {
            ProbePreparation::Separable(_) => PrepKind::Separable,
            ProbePreparation::Entangled(_) => PrepKind::Entangled,
        }
    }
}

/// What the eavesdropper privately knows about one attacked round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveRoundKnowledge {
    /// The states she placed on the channel; exactly known to her.
    pub resent: ProbePreparation,
    /// Her measurement bases on the intercepted probes (measure-resend only).
    pub measured_bases: Option<Vec<Basis>>,
    /// Her measurement outcomes (measure-resend only).
    pub measured_outcomes: Option<Vec<Outcome>>,
}

/// The encoding that would have produced `outcome` deterministically in
/// `basis`: the single-measurement maximum-likelihood guess. When the
/// measurement basis matched the true encoding this recovers it exactly;
/// otherwise the uniform outcome picks one of the two perpendicular
/// encodings.
fn ml_encoding_guess(basis: Basis, outcome: Outcome) -> EncodingPhase {
    let target = if outcome == Outcome::Plus { 0u8 } else { 2u8 };
    EncodingPhase::from_quarters(4 + target - basis.phase_quarters())
}

/// Intercept one round's probes. Returns the preparation placed on the
/// channel (what the nodes will actually measure) and the eavesdropper's
/// private record.
///
/// For measure-resend attacks the per-qubit guesses of a separable resend
/// sum, by construction, to the net maximum-likelihood guess, so an
/// entangled resend over a separable original carries the sum of the
/// per-qubit guesses and a separable resend over an entangled original
/// carries per-qubit phases summing to the net guess.
pub fn intercept<R: Rng + ?Sized>(
    prep: &ProbePreparation,
    strategy: &AttackStrategy,
    n_bobs: usize,
    rng: &mut R,
) -> Result<(ProbePreparation, EveRoundKnowledge)> {
    if let ProbePreparation::Separable(phases) = prep {
        if phases.len() != n_bobs {
            return Err(Error::LengthMismatch {
                expected: n_bobs,
                actual: phases.len(),
            });
        }
    }

    if !strategy.kind.measures() {
        let resent = if strategy.kind.resends_separable() {
            ProbePreparation::Separable((0..n_bobs).map(|_| EncodingPhase::random(rng)).collect())
        } else {
            ProbePreparation::Entangled(EncodingPhase::random(rng))
        };
        return Ok((
            resent.clone(),
            EveRoundKnowledge {
                resent,
                measured_bases: None,
                measured_outcomes: None,
            },
        ));
    }

    let bases: Vec<Basis> = (0..n_bobs).map(|_| Basis::random(rng)).collect();
    let outcomes: Vec<Outcome> = match prep {
        ProbePreparation::Separable(phases) => phases
            .iter()
            .zip(&bases)
            .map(|(chi, basis)| sample_separable(*chi, None, *basis, rng))
            .collect(),
        ProbePreparation::Entangled(chi) => {
            sample_ghz(*chi, &vec![None; n_bobs], &bases, rng)?
        }
    };
    let guesses: Vec<EncodingPhase> = bases
        .iter()
        .zip(&outcomes)
        .map(|(basis, outcome)| ml_encoding_guess(*basis, *outcome))
        .collect();
    let resent = if strategy.kind.resends_separable() {
        ProbePreparation::Separable(guesses)
    } else {
        ProbePreparation::Entangled(guesses.iter().copied().sum())
    };
    Ok((
        resent.clone(),
        EveRoundKnowledge {
            resent,
            measured_bases: Some(bases),
            measured_outcomes: Some(outcomes),
        },
    ))
}

/// Turn one round's public announcements into likelihood-ready evidence
/// for the eavesdropper, keyed by her exactly-known resent states. Nodes
/// that announced no phase application contribute nothing.
pub fn eve_observe(
    records: &[BobRecord],
    knowledge: &EveRoundKnowledge,
    evidence: &mut EvidenceSet,
) {
    evidence_from_round(&knowledge.resent, records, evidence);
}

/// Per-attacked-round detection probability for a given attack and
/// preparation kind.
///
/// For same-kind substitutions these are the standard closed forms built
/// from the per-check constants 1/2 (replace) and 1/4 (measure-resend).
/// The two cross-kind substitutions carry exact finite-size corrections
/// that the leading-order forms omit:
///
/// * an informed entangled resend over a separable preparation evades the
///   all-nodes-checking coincidence with probability `(P_F/8)^N`, so that
///   term is subtracted from the replace-level form;
/// * a separable resend over an entangled preparation cannot reproduce
///   the parity correlation of a true entangled resend, which raises its
///   per-check detection to `(1 − 2^{−N})/2`.
///
/// Both corrections vanish at a single node, where the two resend kinds
/// coincide. Scaled by the strategy's attack probability.
pub fn detection_probability_per_round(
    strategy: &AttackStrategy,
    prep_kind: PrepKind,
    params: &ProtocolParams,
) -> f64 {
    let n = params.n_bobs() as f64;
    let f = params.p_fidelity();
    let sep_cell = |per_check: f64| 1.0 - (1.0 - per_check * f / 2.0).powf(n);
    let ent_cell = |per_check: f64| per_check * f.powf(n) / 2.0;

    let cell = match (strategy.kind, prep_kind) {
        (AttackKind::ReplaceSeparable | AttackKind::ReplaceEntangled, PrepKind::Separable) => {
            sep_cell(REPLACE_CHECK_DETECTION)
        }
        (AttackKind::ReplaceSeparable | AttackKind::ReplaceEntangled, PrepKind::Entangled) => {
            ent_cell(REPLACE_CHECK_DETECTION)
        }
        (AttackKind::MeasureResendSeparable, PrepKind::Separable) => {
            sep_cell(MEASURE_RESEND_CHECK_DETECTION)
        }
        (AttackKind::MeasureResendSeparable, PrepKind::Entangled) => {
            ent_cell((1.0 - 0.5f64.powf(n)) / 2.0)
        }
        (AttackKind::MeasureResendEntangled, PrepKind::Separable) => {
            sep_cell(REPLACE_CHECK_DETECTION) - (f / 8.0).powf(n)
        }
        (AttackKind::MeasureResendEntangled, PrepKind::Entangled) => {
            ent_cell(MEASURE_RESEND_CHECK_DETECTION)
        }
    };
    strategy.attack_probability * cell
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_round, TrueParameters};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ml_guess_inverts_deterministic_measurements() {
        for chi in EncodingPhase::all() {
            let basis = chi.eigenbasis();
            let s = (chi.quarters() + basis.phase_quarters()) & 3;
            let outcome = if s == 0 { Outcome::Plus } else { Outcome::Minus };
            assert_eq!(ml_encoding_guess(basis, outcome), chi);
        }
    }

    #[test]
    fn matched_basis_measure_resend_is_transparent_separable() {
        // With every eavesdropper basis matching the encoding's
        // eigenbasis, her guesses are exact and the resent states equal
        // the originals; subsequent checks can never fire. Force the
        // match by construction.
        let mut r = rng(1);
        for _ in 0..200 {
            let phases: Vec<EncodingPhase> =
                (0..3).map(|_| EncodingPhase::random(&mut r)).collect();
            let bases: Vec<Basis> = phases.iter().map(|c| c.eigenbasis()).collect();
            let outcomes: Vec<Outcome> = phases
                .iter()
                .zip(&bases)
                .map(|(chi, basis)| sample_separable(*chi, None, *basis, &mut r))
                .collect();
            let guesses: Vec<EncodingPhase> = bases
                .iter()
                .zip(&outcomes)
                .map(|(b, o)| ml_encoding_guess(*b, *o))
                .collect();
            assert_eq!(guesses, phases);
        }
    }

    #[test]
    fn per_qubit_guesses_sum_to_net_ml_guess() {
        let mut r = rng(2);
        let strategy = AttackStrategy::always(AttackKind::MeasureResendSeparable);
        for _ in 0..500 {
            let chi = EncodingPhase::random(&mut r);
            let prep = ProbePreparation::Entangled(chi);
            let (resent, knowledge) = intercept(&prep, &strategy, 4, &mut r).unwrap();
            let phases = match &resent {
                ProbePreparation::Separable(p) => p.clone(),
                _ => panic!("expected separable resend"),
            };
            let sum: EncodingPhase = phases.iter().copied().sum();
            // The net maximum-likelihood guess from her parity.
            let e_sum: u8 = knowledge
                .measured_bases
                .as_ref()
                .unwrap()
                .iter()
                .fold(0, |acc, b| (acc + b.phase_quarters()) & 3);
            let parity = crate::qstate::parity(knowledge.measured_outcomes.as_ref().unwrap());
            let target = if parity == Outcome::Plus { 0u8 } else { 2u8 };
            let net = EncodingPhase::from_quarters(8 + target - e_sum);
            assert_eq!(sum, net);
        }
    }

    #[test]
    fn replace_resend_is_uniform_and_unmeasured() {
        let mut r = rng(3);
        let strategy = AttackStrategy::always(AttackKind::ReplaceEntangled);
        let prep = ProbePreparation::Separable(vec![EncodingPhase::ZERO; 2]);
        let mut counts = [0usize; 4];
        let n = 40_000;
        for _ in 0..n {
            let (resent, knowledge) = intercept(&prep, &strategy, 2, &mut r).unwrap();
            assert!(knowledge.measured_bases.is_none());
            assert!(knowledge.measured_outcomes.is_none());
            match resent {
                ProbePreparation::Entangled(chi) => counts[chi.quarters() as usize] += 1,
                _ => panic!("expected entangled resend"),
            }
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.25).abs() < 4.0 * sigma);
        }
    }

    /// Empirical per-round detection frequency for one (strategy, prep
    /// kind) cell.
    fn empirical_detection(
        kind: AttackKind,
        prep: PrepKind,
        n_bobs: usize,
        p_fidelity: f64,
        rounds: usize,
        seed: u64,
    ) -> f64 {
        let p_separable = match prep {
            PrepKind::Separable => 1.0,
            PrepKind::Entangled => 0.0,
        };
        let params = ProtocolParams::new(n_bobs, 1, p_separable, p_fidelity).unwrap();
        let strategy = AttackStrategy::always(kind);
        let mut r = rng(seed);
        let truth = TrueParameters::random(n_bobs, &mut r);
        let mut detected = 0usize;
        for _ in 0..rounds {
            if run_round(&params, &truth, Some(&strategy), &mut r)
                .unwrap()
                .detected
            {
                detected += 1;
            }
        }
        detected as f64 / rounds as f64
    }

    #[test]
    fn cross_resend_cells_match_simulation() {
        // The two cross-kind cells carry finite-size corrections; verify
        // them tightly where the correction is largest.
        let rounds = 200_000;
        for (kind, prep, n_bobs, p_f, seed) in [
            (AttackKind::MeasureResendEntangled, PrepKind::Separable, 1, 1.0, 11),
            (AttackKind::MeasureResendEntangled, PrepKind::Separable, 2, 1.0, 12),
            (AttackKind::MeasureResendSeparable, PrepKind::Entangled, 2, 1.0, 13),
            (AttackKind::MeasureResendSeparable, PrepKind::Entangled, 3, 0.75, 14),
        ] {
            let params = ProtocolParams::new(n_bobs, 1, 1.0, p_f).unwrap();
            let expected = detection_probability_per_round(
                &AttackStrategy::always(kind),
                prep,
                &params,
            );
            let observed = empirical_detection(kind, prep, n_bobs, p_f, rounds, seed);
            let sigma = (expected * (1.0 - expected) / rounds as f64).sqrt();
            assert!(
                (observed - expected).abs() < 4.0 * sigma,
                "{kind:?}/{prep:?} N={n_bobs} F={p_f}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn table_cell_examples() {
        // Replace on an entangled preparation, two nodes, F = 0.5.
        let params = ProtocolParams::new(2, 1, 0.0, 0.5).unwrap();
        let d = detection_probability_per_round(
            &AttackStrategy::always(AttackKind::ReplaceSeparable),
            PrepKind::Entangled,
            &params,
        );
        assert_abs_diff_eq!(d, 0.5 * 0.25 / 2.0, epsilon = 1e-15);

        // Single-node measure-resend: F/8.
        let params = ProtocolParams::new(1, 1, 1.0, 1.0).unwrap();
        let d = detection_probability_per_round(
            &AttackStrategy::always(AttackKind::MeasureResendSeparable),
            PrepKind::Separable,
            &params,
        );
        assert_abs_diff_eq!(d, 0.125, epsilon = 1e-15);

        // No fidelity checks, no detection.
        let params = ProtocolParams::new(3, 1, 0.5, 0.0).unwrap();
        for kind in AttackKind::ALL {
            for prep in [PrepKind::Separable, PrepKind::Entangled] {
                let d = detection_probability_per_round(
                    &AttackStrategy::always(kind),
                    prep,
                    &params,
                );
                assert_abs_diff_eq!(d, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn single_node_cells_collapse() {
        // With one node the resend kinds coincide: every measure-resend
        // cell is F/8 and every replace cell is F/4.
        for f in [0.25, 0.5, 1.0] {
            let params = ProtocolParams::new(1, 1, 0.5, f).unwrap();
            for prep in [PrepKind::Separable, PrepKind::Entangled] {
                for kind in [AttackKind::MeasureResendSeparable, AttackKind::MeasureResendEntangled] {
                    let d = detection_probability_per_round(
                        &AttackStrategy::always(kind),
                        prep,
                        &params,
                    );
                    assert_abs_diff_eq!(d, f / 8.0, epsilon = 1e-12);
                }
                for kind in [AttackKind::ReplaceSeparable, AttackKind::ReplaceEntangled] {
                    let d = detection_probability_per_round(
                        &AttackStrategy::always(kind),
                        prep,
                        &params,
                    );
                    assert_abs_diff_eq!(d, f / 4.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn measure_resend_never_exceeds_replace() {
        for n_bobs in 1..=4 {
            for f in [0.25, 0.5, 0.75, 1.0] {
                let params = ProtocolParams::new(n_bobs, 1, 0.5, f).unwrap();
                for prep in [PrepKind::Separable, PrepKind::Entangled] {
                    for (mr, r) in [
                        (AttackKind::MeasureResendSeparable, AttackKind::ReplaceSeparable),
                        (AttackKind::MeasureResendEntangled, AttackKind::ReplaceEntangled),
                    ] {
                        let d_mr = detection_probability_per_round(
                            &AttackStrategy::always(mr),
                            prep,
                            &params,
                        );
                        let d_r = detection_probability_per_round(
                            &AttackStrategy::always(r),
                            prep,
                            &params,
                        );
                        assert!(
                            d_mr <= d_r + 1e-12,
                            "measure-resend beats replace at N={n_bobs} F={f} {prep:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn attack_probability_scales_detection() {
        let params = ProtocolParams::new(2, 1, 1.0, 0.5).unwrap();
        let full = detection_probability_per_round(
            &AttackStrategy::always(AttackKind::ReplaceSeparable),
            PrepKind::Separable,
            &params,
        );
        let half = detection_probability_per_round(
            &AttackStrategy::new(AttackKind::ReplaceSeparable, 0.5).unwrap(),
            PrepKind::Separable,
            &params,
        );
        assert_abs_diff_eq!(half, full / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn eve_observe_uses_resent_states() {
        let knowledge = EveRoundKnowledge {
            resent: ProbePreparation::Separable(vec![
                EncodingPhase::from_quarters(1),
                EncodingPhase::ZERO,
            ]),
            measured_bases: None,
            measured_outcomes: None,
        };
        let records = [
            BobRecord {
                applied_phase: true,
                basis: Basis::X,
                outcome: Outcome::Plus,
            },
            BobRecord {
                applied_phase: false,
                basis: Basis::Y,
                outcome: Outcome::Minus,
            },
        ];
        let mut evidence = EvidenceSet::new();
        eve_observe(&records, &knowledge, &mut evidence);
        assert_eq!(evidence.len(), 1);
        let key = crate::inference::CombinationKey::single(0);
        let t = evidence.tuples(key)[0];
        // Offset = χ̂ (π/2) + X basis (0).
        assert_eq!(t.offset_quarters(), 1);
    }

    #[test]
    fn eve_observe_entangled_resend_yields_parity_evidence() {
        // Entangled resend with χ̂ = 0; both nodes applied and announced
        // (X, +1) and (X, −1): one parity −1 tuple on the pair key.
        let knowledge = EveRoundKnowledge {
            resent: ProbePreparation::Entangled(EncodingPhase::ZERO),
            measured_bases: None,
            measured_outcomes: None,
        };
        let records = [
            BobRecord {
                applied_phase: true,
                basis: Basis::X,
                outcome: Outcome::Plus,
            },
            BobRecord {
                applied_phase: true,
                basis: Basis::X,
                outcome: Outcome::Minus,
            },
        ];
        let mut evidence = EvidenceSet::new();
        eve_observe(&records, &knowledge, &mut evidence);
        let key = crate::inference::CombinationKey::from_mask(0b11);
        assert_eq!(evidence.count(key), 1);
        let t = evidence.tuples(key)[0];
        assert_eq!(t.outcome, Outcome::Minus);
        // Likelihood factor (1 − cos(φ_1 + φ_2))/2: zero at zero sum.
        approx::assert_abs_diff_eq!(t.probability(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(
            "measure-resend-entangled".parse::<AttackKind>().unwrap(),
            AttackKind::MeasureResendEntangled
        );
        assert!("mr".parse::<AttackKind>().is_err());
        assert!(AttackStrategy::new(AttackKind::ReplaceSeparable, 1.1).is_err());
    }
}
