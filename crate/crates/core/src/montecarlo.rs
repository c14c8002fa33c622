//! Seeded Monte Carlo harness tying the protocol, the adversary and the
//! inference engine together.
//!
//! Every execution draws from its own counter-derived stream, so results
//! are bit-reproducible under a fixed master seed regardless of thread
//! count: work items are indexed, rayon collects them in order, and all
//! reductions run sequentially afterwards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adversary::{eve_observe, AttackStrategy};
use crate::error::Result;
use crate::inference::{lambda_dispersion, theta_posterior, EvidenceSet};
use crate::protocol::{alice_evidence, run_protocol, run_round, ProtocolParams, TrueParameters};
use crate::security::LambdaCurve;

/// splitmix64 step, used to fold tags into stream identifiers.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible stream for one work item: the master seed keys the
/// cipher, the folded tags select the stream.
pub fn derive_rng(master_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = 0xc0de_f00d_u64;
    let mut stream = 0u64;
    for &t in tags {
        state ^= t;
        stream ^= splitmix64(&mut state);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Tag namespaces so different simulation roles never share a stream.
pub mod tags {
    pub const TRUTHS: u64 = 0x7275_7468;
    pub const ALICE: u64 = 0xa11c_e000;
    pub const EVE: u64 = 0xe7e0_0000;
    pub const CURVE: u64 = 0xc02b_e000;
}

/// The shared truth sets of one experiment.
pub fn random_truths(n_sets: usize, n_bobs: usize, master_seed: u64) -> Vec<TrueParameters> {
    (0..n_sets)
        .map(|i| {
            let mut rng = derive_rng(master_seed, &[tags::TRUTHS, i as u64]);
            TrueParameters::random(n_bobs, &mut rng)
        })
        .collect()
}

/// Mean and standard error of the mean.
pub fn mean_and_sem(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One honest execution: run the full round budget, estimate, and return
/// the dispersion around the true phase sum.
pub fn alice_execution_lambda(
    params: &ProtocolParams,
    truth: &TrueParameters,
    master_seed: u64,
    tags_: &[u64],
) -> Result<f64> {
    let mut rng = derive_rng(master_seed, tags_);
    let transcripts = run_protocol(params, truth, None, false, &mut rng)?;
    let evidence = alice_evidence(&transcripts);
    let posterior = theta_posterior(&evidence, params)?;
    lambda_dispersion(&posterior, truth.theta())
}

/// Per-execution dispersion samples for the honest scenario, one per
/// (truth, repetition) pair, in deterministic order.
pub fn alice_lambda_samples(
    params: &ProtocolParams,
    truths: &[TrueParameters],
    repetitions: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let jobs: Vec<(usize, usize)> = (0..truths.len())
        .flat_map(|t| (0..repetitions).map(move |r| (t, r)))
        .collect();
    jobs.par_iter()
        .map(|&(t, r)| {
            alice_execution_lambda(
                params,
                &truths[t],
                master_seed,
                &[tags::ALICE, t as u64, r as u64],
            )
        })
        .collect()
}

/// Result of one attacked, stop-on-detection execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveExecution {
    /// Dispersion of the eavesdropper's posterior around the true sum.
    pub lambda: f64,
    /// Rounds played, including the detection round if any.
    pub rounds: usize,
    pub detected: bool,
}

/// One attacked execution: the eavesdropper attacks until detected or the
/// round budget runs out, decoding the announcements against her resent
/// states as she goes.
pub fn eve_execution(
    params: &ProtocolParams,
    strategy: &AttackStrategy,
    truth: &TrueParameters,
    master_seed: u64,
    tags_: &[u64],
) -> Result<EveExecution> {
    let mut rng = derive_rng(master_seed, tags_);
    let transcripts = run_protocol(params, truth, Some(strategy), true, &mut rng)?;
    let mut evidence = EvidenceSet::new();
    for t in &transcripts {
        if let Some(knowledge) = &t.attack_record {
            eve_observe(&t.bob_records, knowledge, &mut evidence);
        }
    }
    let posterior = theta_posterior(&evidence, params)?;
    let lambda = lambda_dispersion(&posterior, truth.theta())?;
    let detected = transcripts.last().is_some_and(|t| t.detected);
    Ok(EveExecution {
        lambda,
        rounds: transcripts.len(),
        detected,
    })
}

/// Aggregate statistics of the attacked scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveStatistics {
    pub lambda_mean: f64,
    pub lambda_sem: f64,
    pub undetected_fraction: f64,
    pub mean_rounds_to_detection: f64,
}

/// Attacked executions over all (truth, repetition) pairs.
pub fn eve_statistics(
    params: &ProtocolParams,
    strategy: &AttackStrategy,
    truths: &[TrueParameters],
    repetitions: usize,
    master_seed: u64,
) -> Result<EveStatistics> {
    let jobs: Vec<(usize, usize)> = (0..truths.len())
        .flat_map(|t| (0..repetitions).map(move |r| (t, r)))
        .collect();
    let executions: Vec<EveExecution> = jobs
        .par_iter()
        .map(|&(t, r)| {
            eve_execution(
                params,
                strategy,
                &truths[t],
                master_seed,
                &[tags::EVE, t as u64, r as u64],
            )
        })
        .collect::<Result<_>>()?;
    let lambdas: Vec<f64> = executions.iter().map(|e| e.lambda).collect();
    let (lambda_mean, lambda_sem) = mean_and_sem(&lambdas);
    let undetected = executions.iter().filter(|e| !e.detected).count();
    let total_rounds: usize = executions.iter().map(|e| e.rounds).sum();
    Ok(EveStatistics {
        lambda_mean,
        lambda_sem,
        undetected_fraction: undetected as f64 / executions.len() as f64,
        mean_rounds_to_detection: total_rounds as f64 / executions.len() as f64,
    })
}

/// The eavesdropper's mean dispersion after exactly `n` attacked rounds,
/// tabulated for `n = 0..=cap`: each repetition plays `cap` rounds with
/// no stopping rule and is re-estimated at every prefix.
///
/// Individual executions can disperse above 1, but a calibrated
/// posterior never exceeds the no-information value on average, so the
/// tabulated means are capped at 1. That removes small-sample noise
/// above the ceiling while keeping every bound built from the curve
/// conservative.
pub fn eve_lambda_curve(
    params: &ProtocolParams,
    strategy: &AttackStrategy,
    truths: &[TrueParameters],
    repetitions: usize,
    cap: usize,
    master_seed: u64,
) -> Result<LambdaCurve> {
    let jobs: Vec<(usize, usize)> = (0..truths.len())
        .flat_map(|t| (0..repetitions).map(move |r| (t, r)))
        .collect();
    let per_execution: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(t, r)| -> Result<Vec<f64>> {
            let truth = &truths[t];
            let mut rng = derive_rng(master_seed, &[tags::CURVE, t as u64, r as u64]);
            let mut evidence = EvidenceSet::new();
            let mut lambdas = Vec::with_capacity(cap + 1);
            lambdas.push(1.0);
            for _ in 0..cap {
                let round = run_round(params, truth, Some(strategy), &mut rng)?;
                if let Some(knowledge) = &round.attack_record {
                    eve_observe(&round.bob_records, knowledge, &mut evidence);
                }
                let posterior = theta_posterior(&evidence, params)?;
                lambdas.push(lambda_dispersion(&posterior, truth.theta())?);
            }
            Ok(lambdas)
        })
        .collect::<Result<_>>()?;
    let n_exec = per_execution.len() as f64;
    let values: Vec<f64> = (0..=cap)
        .map(|n| (per_execution.iter().map(|l| l[n]).sum::<f64>() / n_exec).min(1.0))
        .collect();
    LambdaCurve::new(values)
}
