//! Analytic measurement statistics for the probe states used by the protocol.
//!
//! Two families of probes appear: separable qubits `(|0⟩ + e^{iχ}|1⟩)/√2`
//! sent to each node, and generalised GHZ states
//! `(|0…0⟩ + e^{iχ}|1…1⟩)/√2` distributed over all nodes. Measurements are
//! made in the Pauli-X or Pauli-Y basis and produce ±1 outcomes. The closed
//! forms here drive the round sampler; [`state_vector_oracle`] is a
//! brute-force amplitude-level cross-check used only for verification.
//!
//! Encoding phases and basis phases are multiples of π/2, so they are kept
//! as integer quarter turns. That makes the deterministic fidelity-check
//! branches exact: no comparison of accumulated irrational floats ever
//! decides a detection.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count accepted by the state-vector oracle.
pub const ORACLE_MAX_QUBITS: usize = 12;

/// A phase in radians, canonicalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub const ZERO: PhaseAngle = PhaseAngle(0.0);

    pub fn new(radians: f64) -> Self {
        let r = radians.rem_euclid(TAU);
        // rem_euclid of a tiny negative can round up to exactly TAU.
        PhaseAngle(if r >= TAU { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Uniform sample over the full circle.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        PhaseAngle::new(rng.random_range(0.0..TAU))
    }
}

impl std::ops::Add for PhaseAngle {
    type Output = PhaseAngle;
    fn add(self, other: PhaseAngle) -> PhaseAngle {
        PhaseAngle::new(self.0 + other.0)
    }
}

impl std::ops::Sub for PhaseAngle {
    type Output = PhaseAngle;
    fn sub(self, other: PhaseAngle) -> PhaseAngle {
        PhaseAngle::new(self.0 - other.0)
    }
}

impl std::iter::Sum for PhaseAngle {
    fn sum<I: Iterator<Item = PhaseAngle>>(iter: I) -> PhaseAngle {
        iter.fold(PhaseAngle::ZERO, |a, b| a + b)
    }
}

/// `cos(phi + q·π/2)` with the quarter-turn shift applied symbolically.
///
/// For `phi = 0` the aligned shifts give exactly ±1 and the perpendicular
/// shifts give exactly 0, which keeps fidelity checks deterministic.
pub(crate) fn cos_quarter_shifted(phi: f64, quarters: u8) -> f64 {
    match quarters & 3 {
        0 => phi.cos(),
        1 => -phi.sin(),
        2 => -phi.cos(),
        _ => phi.sin(),
    }
}

/// One of the four encoding phases `{0, π/2, π, 3π/2}`, stored in quarter
/// turns of π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodingPhase {
    quarters: u8,
}

impl EncodingPhase {
    pub const ZERO: EncodingPhase = EncodingPhase { quarters: 0 };

    pub fn from_quarters(quarters: u8) -> Self {
        EncodingPhase { quarters: quarters & 3 }
    }

    pub fn quarters(self) -> u8 {
        self.quarters
    }

    pub fn angle(self) -> PhaseAngle {
        const TABLE: [f64; 4] = [0.0, FRAC_PI_2, PI, PI + FRAC_PI_2];
        PhaseAngle(TABLE[self.quarters as usize])
    }

    /// The measurement basis in which this encoding is an eigenstate.
    pub fn eigenbasis(self) -> Basis {
        if self.quarters % 2 == 0 {
            Basis::X
        } else {
            Basis::Y
        }
    }

    pub fn all() -> [EncodingPhase; 4] {
        [0, 1, 2, 3].map(EncodingPhase::from_quarters)
    }

    /// Uniform over the four encodings.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        EncodingPhase::from_quarters(rng.random_range(0..4u8))
    }
}

impl std::ops::Add for EncodingPhase {
    type Output = EncodingPhase;
    fn add(self, other: EncodingPhase) -> EncodingPhase {
        EncodingPhase::from_quarters(self.quarters + other.quarters)
    }
}

impl std::ops::Sub for EncodingPhase {
    type Output = EncodingPhase;
    fn sub(self, other: EncodingPhase) -> EncodingPhase {
        EncodingPhase::from_quarters(4 + self.quarters - other.quarters)
    }
}

impl std::iter::Sum for EncodingPhase {
    fn sum<I: Iterator<Item = EncodingPhase>>(iter: I) -> EncodingPhase {
        iter.fold(EncodingPhase::ZERO, |a, b| a + b)
    }
}

/// Pauli measurement basis. X contributes no phase to the outcome law,
/// Y contributes π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
}

impl Basis {
    pub fn phase_quarters(self) -> u8 {
        match self {
            Basis::X => 0,
            Basis::Y => 1,
        }
    }

    pub fn phase(self) -> PhaseAngle {
        PhaseAngle(match self {
            Basis::X => 0.0,
            Basis::Y => FRAC_PI_2,
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Basis::X
        } else {
            Basis::Y
        }
    }
}

/// A ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_plus(plus: bool) -> Self {
        if plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// Product of all outcomes; `Plus` for an empty list.
pub fn parity(outcomes: &[Outcome]) -> Outcome {
    let minus = outcomes.iter().filter(|o| **o == Outcome::Minus).count();
    Outcome::from_plus(minus % 2 == 0)
}

/// The sender's secret choice of probe states for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbePreparation {
    /// One encoded qubit per node.
    Separable(Vec<EncodingPhase>),
    /// A single GHZ state with one net encoding phase, shared by all nodes.
    Entangled(EncodingPhase),
}

impl ProbePreparation {
    pub fn is_separable(&self) -> bool {
        matches!(self, ProbePreparation::Separable(_))
    }
}

/// Probability of outcome +1 for a separable qubit with encoding phase
/// `chi`, an applied phase `phi`, measured in `basis`:
/// `(1 + cos(phi + chi + basis_phase)) / 2`.
///
/// For the X basis this is `(1 ± cos(φ + χ))/2` and for the Y basis
/// `(1 ∓ sin(φ + χ))/2`, matching the conventions fixed by the oracle.
pub fn separable_outcome_prob(chi: PhaseAngle, phi: PhaseAngle, basis: Basis) -> f64 {
    0.5 * (1.0 + (phi.radians() + chi.radians() + basis.phase().radians()).cos())
}

/// Probability that the outcome parity over all nodes is +1 for a GHZ
/// probe: `(1 + cos(chi + Σ applied + Σ basis_phase)) / 2`.
pub fn ghz_parity_prob(
    chi: PhaseAngle,
    applied_phase_sum: PhaseAngle,
    bases: &[Basis],
) -> Result<f64> {
    if bases.is_empty() {
        return Err(Error::EmptyBases);
    }
    let basis_sum: f64 = bases.iter().map(|b| b.phase().radians()).sum();
    Ok(0.5 * (1.0 + (chi.radians() + applied_phase_sum.radians() + basis_sum).cos()))
}

/// Exact +1 probability used by the samplers: the discrete part of the
/// phase argument stays in quarter turns.
fn plus_probability(phi: f64, offset_quarters: u8) -> f64 {
    (0.5 * (1.0 + cos_quarter_shifted(phi, offset_quarters))).clamp(0.0, 1.0)
}

/// Sample a single separable-qubit measurement. `phi` is absent on
/// fidelity-check rounds.
pub fn sample_separable<R: Rng + ?Sized>(
    chi: EncodingPhase,
    phi: Option<PhaseAngle>,
    basis: Basis,
    rng: &mut R,
) -> Outcome {
    let p = plus_probability(
        phi.map_or(0.0, |p| p.radians()),
        chi.quarters() + basis.phase_quarters(),
    );
    Outcome::from_plus(rng.random_bool(p))
}

/// Sample all node outcomes for a GHZ probe.
///
/// The parity is drawn from the closed-form law; the individual outcomes
/// are then a uniform choice among the `2^{N-1}` sign assignments with
/// that parity, which reproduces the maximally mixed single-node
/// marginals without simulating amplitudes.
pub fn sample_ghz<R: Rng + ?Sized>(
    chi: EncodingPhase,
    applied_phases: &[Option<PhaseAngle>],
    bases: &[Basis],
    rng: &mut R,
) -> Result<Vec<Outcome>> {
    if applied_phases.len() != bases.len() {
        return Err(Error::LengthMismatch {
            expected: bases.len(),
            actual: applied_phases.len(),
        });
    }
    if bases.is_empty() {
        return Err(Error::EmptyBases);
    }
    let offset = bases
        .iter()
        .fold(chi.quarters(), |acc, b| (acc + b.phase_quarters()) & 3);
    let phi_sum: f64 = applied_phases
        .iter()
        .map(|p| p.map_or(0.0, |p| p.radians()))
        .sum();
    let target = Outcome::from_plus(rng.random_bool(plus_probability(phi_sum, offset)));

    let n = bases.len();
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n - 1 {
        outcomes.push(Outcome::from_plus(rng.random_bool(0.5)));
    }
    let free_parity = parity(&outcomes);
    outcomes.push(if free_parity == target {
        Outcome::Plus
    } else {
        Outcome::Minus
    });
    Ok(outcomes)
}

/// Exact joint outcome distribution over `{±1}^N`, by explicit amplitude
/// simulation. Index bit `b` (least significant = node 0) is 0 for
/// outcome +1 and 1 for outcome −1.
///
/// This is the verification oracle: O(2^N) memory, never used by the
/// round sampler.
pub fn state_vector_oracle(
    prep: &ProbePreparation,
    applied_phases: &[Option<PhaseAngle>],
    bases: &[Basis],
) -> Result<Vec<f64>> {
    let n = bases.len();
    if n == 0 {
        return Err(Error::EmptyBases);
    }
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            max: ORACLE_MAX_QUBITS,
            actual: n,
        });
    }
    if applied_phases.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: applied_phases.len(),
        });
    }

    let dim = 1usize << n;
    let mut amp = vec![Complex64::new(0.0, 0.0); dim];
    match prep {
        ProbePreparation::Separable(phases) => {
            if phases.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: phases.len(),
                });
            }
            // Tensor product of (|0⟩ + e^{iχ_b}|1⟩)/√2.
            amp[0] = Complex64::new(1.0, 0.0);
            let mut filled = 1usize;
            for (b, chi) in phases.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, chi.angle().radians());
                let norm = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                for i in (0..filled).rev() {
                    let low = amp[i] * norm;
                    amp[i | (1 << b)] = low * phase;
                    amp[i] = low;
                }
                filled <<= 1;
            }
        }
        ProbePreparation::Entangled(chi) => {
            let norm = std::f64::consts::FRAC_1_SQRT_2;
            amp[0] = Complex64::new(norm, 0.0);
            amp[dim - 1] = Complex64::from_polar(norm, chi.angle().radians());
        }
    }

    // Phase gates diag(1, e^{iφ_b}) on each node that applied its phase.
    for (b, phi) in applied_phases.iter().enumerate() {
        if let Some(phi) = phi {
            let phase = Complex64::from_polar(1.0, phi.radians());
            for i in 0..dim {
                if i & (1 << b) != 0 {
                    amp[i] *= phase;
                }
            }
        }
    }

    // Basis change per node. Row 0 of each 2×2 block maps to outcome +1.
    // X: ⟨±| = (⟨0| ± ⟨1|)/√2.
    // Y: ⟨+1| = (⟨0| + i⟨1|)/√2, ⟨−1| = (⟨0| − i⟨1|)/√2, matching the
    // (1 ∓ sin) outcome law.
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (b, basis) in bases.iter().enumerate() {
        let coeff = match basis {
            Basis::X => Complex64::new(1.0, 0.0),
            Basis::Y => Complex64::new(0.0, 1.0),
        };
        let bit = 1usize << b;
        for i in 0..dim {
            if i & bit == 0 {
                let a0 = amp[i];
                let a1 = amp[i | bit];
                amp[i] = (a0 + coeff * a1) * inv_sqrt2;
                amp[i | bit] = (a0 - coeff * a1) * inv_sqrt2;
            }
        }
    }

    Ok(amp.iter().map(|a| a.norm_sqr()).collect())
}

/// Marginal +1 probability for one node from an oracle distribution.
pub fn oracle_marginal_plus(dist: &[f64], node: usize) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(i, _)| i & (1 << node) == 0)
        .map(|(_, p)| p)
        .sum()
}

/// Probability that the product of all outcomes is +1.
pub fn oracle_parity_plus(dist: &[f64]) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(i, _)| (i.count_ones() % 2) == 0)
        .map(|(_, p)| p)
        .sum()
}
