//! Full protocol rounds: the sender's preparation, the quantum channel
//! (where an attack may substitute states), each node's random choices,
//! the public announcements, and the sender's verification.
//!
//! Detection is decided only by deterministic same-basis contradictions:
//! a node that did not apply its phase and measured in the basis of the
//! encoding it should hold must see the encoded eigenvalue. Cross-basis
//! outcomes are recorded but carry no detection weight, which keeps the
//! closed-form per-round detection rates exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{intercept, AttackStrategy, EveRoundKnowledge};
use crate::error::{Error, Result};
use crate::inference::{CombinationKey, EvidenceSet, EvidenceTuple};
use crate::qstate::{
    parity, sample_ghz, sample_separable, Basis, EncodingPhase, Outcome, PhaseAngle,
    ProbePreparation,
};

/// The protocol's independent variables: node count, round budget and the
/// two mixing probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    n_bobs: usize,
    n_rounds: usize,
    p_separable: f64,
    p_fidelity: f64,
}

impl ProtocolParams {
    pub fn new(n_bobs: usize, n_rounds: usize, p_separable: f64, p_fidelity: f64) -> Result<Self> {
        if n_bobs == 0 {
            return Err(Error::ZeroCount { name: "n_bobs" });
        }
        if n_rounds == 0 {
            return Err(Error::ZeroCount { name: "n_rounds" });
        }
        for (name, value) in [("p_separable", p_separable), ("p_fidelity", p_fidelity)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(ProtocolParams {
            n_bobs,
            n_rounds,
            p_separable,
            p_fidelity,
        })
    }

    pub fn n_bobs(&self) -> usize {
        self.n_bobs
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn p_separable(&self) -> f64 {
        self.p_separable
    }

    pub fn p_entangled(&self) -> f64 {
        1.0 - self.p_separable
    }

    pub fn p_fidelity(&self) -> f64 {
        self.p_fidelity
    }

    pub fn p_measure(&self) -> f64 {
        1.0 - self.p_fidelity
    }

    pub fn with_rounds(mut self, n_rounds: usize) -> Self {
        self.n_rounds = n_rounds.max(1);
        self
    }
}

/// The unknown node phases and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    phis: Vec<PhaseAngle>,
}

impl TrueParameters {
    pub fn new(phis: Vec<PhaseAngle>) -> Self {
        TrueParameters { phis }
    }

    /// Independent uniform phases for each node.
    pub fn random<R: Rng + ?Sized>(n_bobs: usize, rng: &mut R) -> Self {
        TrueParameters {
            phis: (0..n_bobs).map(|_| PhaseAngle::random(rng)).collect(),
        }
    }

    pub fn phis(&self) -> &[PhaseAngle] {
        &self.phis
    }

    pub fn n_bobs(&self) -> usize {
        self.phis.len()
    }

    /// The target function: the sum of all node phases modulo 2π.
    pub fn theta(&self) -> PhaseAngle {
        self.phis.iter().copied().sum()
    }
}

/// One node's public announcement for a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobRecord {
    pub applied_phase: bool,
    pub basis: Basis,
    pub outcome: Outcome,
}

/// Everything recorded about one round. `preparation` is the sender's
/// secret; eavesdropper-facing consumers must go through [`RoundTranscript::eve_view`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub preparation: ProbePreparation,
    pub bob_records: Vec<BobRecord>,
    pub attack_record: Option<EveRoundKnowledge>,
    pub detected: bool,
}

/// The eavesdropper's view of a round: public announcements plus her own
/// attack bookkeeping, never the sender's secret preparation.
#[derive(Debug, Clone, Copy)]
pub struct EveView<'a> {
    pub bob_records: &'a [BobRecord],
    pub attack_record: Option<&'a EveRoundKnowledge>,
}

impl RoundTranscript {
    pub fn eve_view(&self) -> EveView<'_> {
        EveView {
            bob_records: &self.bob_records,
            attack_record: self.attack_record.as_ref(),
        }
    }
}

/// Draw the sender's secret preparation: separable with probability
/// `p_separable`, each encoding phase uniform over the four-element set.
pub fn prepare_round<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> ProbePreparation {
    if rng.random_bool(params.p_separable) {
        ProbePreparation::Separable(
            (0..params.n_bobs)
                .map(|_| EncodingPhase::random(rng))
                .collect(),
        )
    } else {
        ProbePreparation::Entangled(EncodingPhase::random(rng))
    }
}

/// Detection test against the announcements, given the sender's own
/// preparation. Exactly the deterministic same-basis checks:
///
/// * separable rounds: any non-applying node whose basis matches its
///   encoding must announce the encoded eigenvalue;
/// * entangled rounds: when no node applied a phase and the net basis
///   matches the net encoding, the outcome parity must match it.
pub fn verify_records(preparation: &ProbePreparation, records: &[BobRecord]) -> bool {
    match preparation {
        ProbePreparation::Separable(phases) => {
            records.iter().zip(phases).any(|(rec, chi)| {
                if rec.applied_phase {
                    return false;
                }
                let s = (chi.quarters() + rec.basis.phase_quarters()) & 3;
                if s % 2 != 0 {
                    return false;
                }
                let expected = if s == 0 { Outcome::Plus } else { Outcome::Minus };
                rec.outcome != expected
            })
        }
        ProbePreparation::Entangled(chi) => {
            if records.iter().any(|r| r.applied_phase) {
                return false;
            }
            let s = records
                .iter()
                .fold(chi.quarters(), |acc, r| (acc + r.basis.phase_quarters()) & 3);
            if s % 2 != 0 {
                return false;
            }
            let expected = if s == 0 { Outcome::Plus } else { Outcome::Minus };
            let outcomes: Vec<Outcome> = records.iter().map(|r| r.outcome).collect();
            parity(&outcomes) != expected
        }
    }
}

/// [`verify_records`] on a complete transcript.
pub fn alice_verify(transcript: &RoundTranscript) -> bool {
    verify_records(&transcript.preparation, &transcript.bob_records)
}

/// Simulate one round. The transcript stores the sender's original
/// preparation; when an attack intercepts, the outcomes are sampled from
/// the substituted states instead.
pub fn run_round<R: Rng + ?Sized>(
    params: &ProtocolParams,
    truth: &TrueParameters,
    attack: Option<&AttackStrategy>,
    rng: &mut R,
) -> Result<RoundTranscript> {
    if truth.n_bobs() != params.n_bobs {
        return Err(Error::LengthMismatch {
            expected: params.n_bobs,
            actual: truth.n_bobs(),
        });
    }
    let preparation = prepare_round(params, rng);

    let (channel_prep, attack_record) = match attack {
        Some(strategy) if rng.random_bool(strategy.attack_probability) => {
            let (resent, knowledge) = intercept(&preparation, strategy, params.n_bobs, rng)?;
            (resent, Some(knowledge))
        }
        _ => (preparation.clone(), None),
    };

    let applied: Vec<bool> = (0..params.n_bobs)
        .map(|_| rng.random_bool(params.p_measure()))
        .collect();
    let bases: Vec<Basis> = (0..params.n_bobs).map(|_| Basis::random(rng)).collect();

    let outcomes: Vec<Outcome> = match &channel_prep {
        ProbePreparation::Separable(phases) => {
            if phases.len() != params.n_bobs {
                return Err(Error::LengthMismatch {
                    expected: params.n_bobs,
                    actual: phases.len(),
                });
            }
            (0..params.n_bobs)
                .map(|b| {
                    let phi = applied[b].then(|| truth.phis()[b]);
                    sample_separable(phases[b], phi, bases[b], rng)
                })
                .collect()
        }
        ProbePreparation::Entangled(chi) => {
            let phis: Vec<Option<PhaseAngle>> = (0..params.n_bobs)
                .map(|b| applied[b].then(|| truth.phis()[b]))
                .collect();
            sample_ghz(*chi, &phis, &bases, rng)?
        }
    };

    let bob_records: Vec<BobRecord> = (0..params.n_bobs)
        .map(|b| BobRecord {
            applied_phase: applied[b],
            basis: bases[b],
            outcome: outcomes[b],
        })
        .collect();

    let detected = verify_records(&preparation, &bob_records);
    Ok(RoundTranscript {
        preparation,
        bob_records,
        attack_record,
        detected,
    })
}

/// Run up to `n_rounds` rounds. With `stop_on_detection`, the first round
/// flagged by verification is the final one.
pub fn run_protocol<R: Rng + ?Sized>(
    params: &ProtocolParams,
    truth: &TrueParameters,
    attack: Option<&AttackStrategy>,
    stop_on_detection: bool,
    rng: &mut R,
) -> Result<Vec<RoundTranscript>> {
    let mut transcripts = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let t = run_round(params, truth, attack, rng)?;
        let stop = stop_on_detection && t.detected;
        transcripts.push(t);
        if stop {
            break;
        }
    }
    Ok(transcripts)
}

/// Append the phase evidence one round contributes, interpreting the
/// announcements against `prep` (which must be the state the nodes
/// actually measured for the evidence to be calibrated).
pub fn evidence_from_round(
    prep: &ProbePreparation,
    records: &[BobRecord],
    evidence: &mut EvidenceSet,
) {
    match prep {
        ProbePreparation::Separable(phases) => {
            for (b, (rec, chi)) in records.iter().zip(phases).enumerate() {
                if rec.applied_phase {
                    evidence.push(
                        CombinationKey::single(b),
                        EvidenceTuple::single(*chi, rec.basis, rec.outcome),
                    );
                }
            }
        }
        ProbePreparation::Entangled(chi) => {
            let mask = records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.applied_phase)
                .fold(0u32, |m, (b, _)| m | (1 << b));
            if mask != 0 {
                let bases: Vec<Basis> = records.iter().map(|r| r.basis).collect();
                let outcomes: Vec<Outcome> = records.iter().map(|r| r.outcome).collect();
                evidence.push(
                    CombinationKey::from_mask(mask),
                    EvidenceTuple::parity_evidence(*chi, &bases, &outcomes),
                );
            }
        }
    }
}

/// The sender's estimation evidence from an execution. The round on which
/// detection fired contributes nothing: its measurements are excluded
/// from inference.
pub fn alice_evidence(transcripts: &[RoundTranscript]) -> EvidenceSet {
    let mut evidence = EvidenceSet::new();
    for t in transcripts {
        if t.detected {
            break;
        }
        evidence_from_round(&t.preparation, &t.bob_records, &mut evidence);
    }
    evidence
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AttackKind, AttackStrategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::new(0, 10, 0.5, 0.5).is_err());
        assert!(ProtocolParams::new(2, 0, 0.5, 0.5).is_err());
        assert!(ProtocolParams::new(2, 10, 1.5, 0.5).is_err());
        assert!(ProtocolParams::new(2, 10, 0.5, -0.1).is_err());
        let p = ProtocolParams::new(2, 10, 0.3, 0.4).unwrap();
        assert_eq!(p.p_entangled(), 0.7);
        assert_eq!(p.p_measure(), 0.6);
    }

    #[test]
    fn prepare_round_degenerate_probabilities() {
        let mut r = rng(1);
        let sep = ProtocolParams::new(3, 10, 1.0, 0.5).unwrap();
        for _ in 0..50 {
            match prepare_round(&sep, &mut r) {
                ProbePreparation::Separable(p) => assert_eq!(p.len(), 3),
                _ => panic!("expected separable"),
            }
        }
        let ent = ProtocolParams::new(3, 10, 0.0, 0.5).unwrap();
        for _ in 0..50 {
            assert!(matches!(
                prepare_round(&ent, &mut r),
                ProbePreparation::Entangled(_)
            ));
        }
    }

    #[test]
    fn prepare_round_frequencies() {
        let mut r = rng(2);
        let params = ProtocolParams::new(2, 10, 0.5, 0.5).unwrap();
        let n = 100_000;
        let mut sep = 0usize;
        let mut chi_counts = [0usize; 4];
        for _ in 0..n {
            match prepare_round(&params, &mut r) {
                ProbePreparation::Separable(phases) => {
                    sep += 1;
                    for chi in phases {
                        chi_counts[chi.quarters() as usize] += 1;
                    }
                }
                ProbePreparation::Entangled(chi) => {
                    chi_counts[chi.quarters() as usize] += 1;
                }
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((sep as f64 - n as f64 * 0.5).abs() < 3.0 * sigma);
        let total: usize = chi_counts.iter().sum();
        let sigma_chi = (total as f64 * 0.25 * 0.75).sqrt();
        for c in chi_counts {
            assert!((c as f64 - total as f64 * 0.25).abs() < 3.0 * sigma_chi);
        }
    }

    #[test]
    fn honest_rounds_never_detected() {
        let mut r = rng(3);
        for &(ps, pf) in &[(0.0, 0.3), (1.0, 0.9), (0.5, 0.5), (0.7, 0.0)] {
            let params = ProtocolParams::new(3, 10, ps, pf).unwrap();
            let truth = TrueParameters::random(3, &mut r);
            for _ in 0..2000 {
                let t = run_round(&params, &truth, None, &mut r).unwrap();
                assert!(!t.detected, "honest round flagged: {t:?}");
                assert!(!alice_verify(&t));
            }
        }
    }

    #[test]
    fn single_bob_fidelity_check_passes() {
        let mut r = rng(4);
        let params = ProtocolParams::new(1, 10, 1.0, 1.0).unwrap();
        let truth = TrueParameters::new(vec![PhaseAngle::ZERO]);
        for _ in 0..500 {
            let t = run_round(&params, &truth, None, &mut r).unwrap();
            assert!(!t.detected);
            assert!(!t.bob_records[0].applied_phase);
        }
    }

    #[test]
    fn entangled_full_check_rate() {
        let mut r = rng(5);
        let params = ProtocolParams::new(3, 10, 0.0, 0.4).unwrap();
        let truth = TrueParameters::random(3, &mut r);
        let n = 100_000;
        let mut full_checks = 0usize;
        for _ in 0..n {
            let t = run_round(&params, &truth, None, &mut r).unwrap();
            if t.bob_records.iter().all(|rec| !rec.applied_phase) {
                full_checks += 1;
            }
        }
        let p = 0.4f64.powi(3);
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((full_checks as f64 - n as f64 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn ghz_round_parity_deterministic_case() {
        let mut r = rng(6);
        // All nodes always apply, truth phases sum to zero, so any
        // matched-net-basis round has deterministic parity.
        let params = ProtocolParams::new(2, 10, 0.0, 0.0).unwrap();
        let truth = TrueParameters::new(vec![PhaseAngle::ZERO, PhaseAngle::ZERO]);
        for _ in 0..500 {
            let t = run_round(&params, &truth, None, &mut r).unwrap();
            let chi = match &t.preparation {
                ProbePreparation::Entangled(chi) => *chi,
                _ => panic!("expected entangled"),
            };
            let s: u8 = t
                .bob_records
                .iter()
                .fold(chi.quarters(), |acc, rec| (acc + rec.basis.phase_quarters()) & 3);
            let outcomes: Vec<Outcome> = t.bob_records.iter().map(|rec| rec.outcome).collect();
            if s == 0 {
                assert_eq!(parity(&outcomes), Outcome::Plus);
            } else if s == 2 {
                assert_eq!(parity(&outcomes), Outcome::Minus);
            }
        }
    }

    #[test]
    fn replaced_encoding_contradiction_detected() {
        // A round where the adversary flipped χ from 0 to π and the node
        // checks in X must always be flagged.
        let prep = ProbePreparation::Separable(vec![EncodingPhase::ZERO]);
        let records = [BobRecord {
            applied_phase: false,
            basis: Basis::X,
            outcome: Outcome::Minus,
        }];
        assert!(verify_records(&prep, &records));
        let ok = [BobRecord {
            applied_phase: false,
            basis: Basis::X,
            outcome: Outcome::Plus,
        }];
        assert!(!verify_records(&prep, &ok));
    }

    #[test]
    fn honest_protocol_runs_full_length() {
        let mut r = rng(7);
        let params = ProtocolParams::new(2, 50, 0.5, 0.5).unwrap();
        let truth = TrueParameters::random(2, &mut r);
        let ts = run_protocol(&params, &truth, None, true, &mut r).unwrap();
        assert_eq!(ts.len(), 50);
        assert!(ts.iter().all(|t| !t.detected));
    }

    #[test]
    fn replace_attack_rounds_until_detection_geometric_mean() {
        let mut r = rng(8);
        let params = ProtocolParams::new(1, 10_000, 1.0, 1.0).unwrap();
        let strategy = AttackStrategy::always(AttackKind::ReplaceSeparable);
        let trials = 10_000;
        let mut total_rounds = 0usize;
        for _ in 0..trials {
            let truth = TrueParameters::random(1, &mut r);
            let ts = run_protocol(&params, &truth, Some(&strategy), true, &mut r).unwrap();
            assert!(ts.last().unwrap().detected, "attack must be caught with P_F=1");
            total_rounds += ts.len();
        }
        // Rounds-to-detection is geometric with d = 1/4 counting the
        // detection round: mean 4, sd sqrt(12).
        let mean = total_rounds as f64 / trials as f64;
        let sigma_mean = (12.0f64).sqrt() / (trials as f64).sqrt();
        assert!(
            (mean - 4.0).abs() < 3.0 * sigma_mean,
            "mean {mean} not within 3σ of 4"
        );
    }

    #[test]
    fn attacked_entangled_marginals_stay_balanced() {
        let mut r = rng(9);
        let params = ProtocolParams::new(3, 10, 0.0, 0.5).unwrap();
        let truth = TrueParameters::random(3, &mut r);
        for kind in AttackKind::ALL {
            let strategy = AttackStrategy::always(kind);
            let n = 20_000;
            let mut plus = [0usize; 3];
            for _ in 0..n {
                let t = run_round(&params, &truth, Some(&strategy), &mut r).unwrap();
                for (b, rec) in t.bob_records.iter().enumerate() {
                    if rec.outcome == Outcome::Plus {
                        plus[b] += 1;
                    }
                }
            }
            let sigma = (n as f64 * 0.25).sqrt();
            for p in plus {
                assert!(
                    (p as f64 - n as f64 * 0.5).abs() < 4.0 * sigma,
                    "{kind:?} marginal imbalance"
                );
            }
        }
    }

    #[test]
    fn transcript_serde_round_trips() {
        let mut r = rng(10);
        let params = ProtocolParams::new(3, 5, 0.5, 0.5).unwrap();
        let truth = TrueParameters::random(3, &mut r);
        let strategy = AttackStrategy::always(AttackKind::MeasureResendEntangled);
        let ts = run_protocol(&params, &truth, Some(&strategy), false, &mut r).unwrap();
        let json = serde_json::to_string(&ts).unwrap();
        let back: Vec<RoundTranscript> = serde_json::from_str(&json).unwrap();
        assert_eq!(ts, back);
    }

    #[test]
    fn evidence_extraction_by_round_kind() {
        let mut ev = EvidenceSet::new();
        let sep = ProbePreparation::Separable(vec![EncodingPhase::ZERO, EncodingPhase::ZERO]);
        let recs = [
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
        evidence_from_round(&sep, &recs, &mut ev);
        assert_eq!(ev.count(CombinationKey::single(0)), 1);
        assert_eq!(ev.count(CombinationKey::single(1)), 0);

        let ent = ProbePreparation::Entangled(EncodingPhase::ZERO);
        evidence_from_round(&ent, &recs, &mut ev);
        assert_eq!(ev.count(CombinationKey::from_mask(0b01)), 2);

        // Full fidelity check contributes nothing.
        let all_check = [
            BobRecord {
                applied_phase: false,
                basis: Basis::X,
                outcome: Outcome::Plus,
            },
            BobRecord {
                applied_phase: false,
                basis: Basis::X,
                outcome: Outcome::Plus,
            },
        ];
        let before = ev.len();
        evidence_from_round(&ent, &all_check, &mut ev);
        assert_eq!(ev.len(), before);
    }

    #[test]
    fn alice_evidence_skips_detected_round() {
        let good = RoundTranscript {
            preparation: ProbePreparation::Separable(vec![EncodingPhase::ZERO]),
            bob_records: vec![BobRecord {
                applied_phase: true,
                basis: Basis::X,
                outcome: Outcome::Plus,
            }],
            attack_record: None,
            detected: false,
        };
        let mut bad = good.clone();
        bad.detected = true;
        let ev = alice_evidence(&[good.clone(), bad, good]);
        // Only the first round contributes: the detected round and
        // everything after it are excluded.
        assert_eq!(ev.len(), 1);
    }

    #[test]
    fn reproducible_with_fixed_seed() {
        let params = ProtocolParams::new(2, 20, 0.5, 0.5).unwrap();
        let strategy = AttackStrategy::always(AttackKind::MeasureResendSeparable);
        let run = |seed| {
            let mut r = rng(seed);
            let truth = TrueParameters::random(2, &mut r);
            run_protocol(&params, &truth, Some(&strategy), false, &mut r).unwrap()
        };
        assert_eq!(run(77), run(77));
    }
}
