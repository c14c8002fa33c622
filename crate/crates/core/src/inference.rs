//! Circular-Bayesian estimation of the phase sum from protocol evidence.
//!
//! Likelihoods live on a K-bin grid over `[0, 2π)`. Evidence about the sum
//! of a subset of node phases attaches to a [`CombinationKey`] (the subset
//! bitmask). Subset likelihoods are combined by circular convolution
//! (distribution of a modular sum), pulled back from `qθ` to `θ`, and
//! multiplied across groups to form the posterior under a uniform prior.
//!
//! Which subsets to convolve together is decided by [`plan_combinations`]:
//! groups of same-size subsets whose node multisets cover every node
//! equally, ranked by the harmonic figure of merit
//! `n_eff = (Σ 1/n_j)^{-1}`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ProtocolParams;
use crate::qstate::{cos_quarter_shifted, parity, Basis, EncodingPhase, Outcome, PhaseAngle};

/// Default grid resolution.
pub const DEFAULT_GRID_BINS: usize = 1024;

/// Floor applied before taking logs so a deterministic zero factor cannot
/// annihilate an entire grid through one inconsistent bin.
const LOG_FLOOR: f64 = 1e-300;

/// Tolerance on the normalization sum.
const NORMALIZATION_TOL: f64 = 1e-9;

/// A discretized circular likelihood over `[0, 2π)` with bins centered at
/// `θ_j = 2πj/K` and origin fixed at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodGrid {
    bins: Vec<f64>,
    normalized: bool,
}

impl LikelihoodGrid {
    /// Uniform (no-information) grid, already normalized.
    pub fn uniform(k: usize) -> Self {
        debug_assert!(k.is_power_of_two(), "grid size must be a power of two");
        LikelihoodGrid {
            bins: vec![1.0 / TAU; k],
            normalized: true,
        }
    }

    /// Build from raw non-negative bin values.
    pub fn from_bins(bins: Vec<f64>) -> Self {
        debug_assert!(bins.len().is_power_of_two(), "grid size must be a power of two");
        LikelihoodGrid {
            bins,
            normalized: false,
        }
    }

    /// Build from log-domain values with max-shift exponentiation.
    pub fn from_log_bins(log_bins: &[f64]) -> Self {
        let max = log_bins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bins = if max.is_finite() {
            log_bins.iter().map(|l| (l - max).exp()).collect()
        } else {
            vec![0.0; log_bins.len()]
        };
        LikelihoodGrid {
            bins,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Angle at the center of bin `j`.
    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.bins.len() as f64
    }

    /// Scale so that `Σ bins · (2π/K) = 1`. A grid of all zeros becomes
    /// uniform.
    pub fn normalize(&mut self) {
        let k = self.bins.len() as f64;
        let mass: f64 = self.bins.iter().sum::<f64>() * TAU / k;
        if mass > 0.0 {
            for b in &mut self.bins {
                *b /= mass;
            }
        } else {
            self.bins.fill(1.0 / TAU);
        }
        self.normalized = true;
    }

    pub fn into_normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Total mass `Σ bins · (2π/K)`.
    pub fn mass(&self) -> f64 {
        self.bins.iter().sum::<f64>() * TAU / self.bins.len() as f64
    }

    /// Circular mean of the distribution (diagnostic).
    pub fn circular_mean(&self) -> PhaseAngle {
        let (mut s, mut c) = (0.0, 0.0);
        for (j, b) in self.bins.iter().enumerate() {
            let theta = self.theta(j);
            s += b * theta.sin();
            c += b * theta.cos();
        }
        PhaseAngle::new(s.atan2(c))
    }

    /// Index of the largest bin.
    pub fn peak_bin(&self) -> usize {
        self.bins
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    fn check_same_size(&self, other: &LikelihoodGrid) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GridSizeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Write the grid as CSV rows `theta,density`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "theta,density")?;
        for (j, b) in self.bins.iter().enumerate() {
            writeln!(w, "{},{}", self.theta(j), b)?;
        }
        Ok(())
    }
}

/// A subset of nodes identified by bitmask; the estimable quantity of a
/// round in which exactly that subset applied phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CombinationKey(u32);

impl CombinationKey {
    pub fn from_mask(mask: u32) -> Self {
        CombinationKey(mask)
    }

    pub fn single(node: usize) -> Self {
        CombinationKey(1 << node)
    }

    pub fn full(n_bobs: usize) -> Self {
        CombinationKey(((1u64 << n_bobs) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    /// Number of nodes in the subset.
    pub fn m(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, node: usize) -> bool {
        self.0 & (1 << node) != 0
    }

    pub fn nodes(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |b| mask & (1 << b) != 0)
    }
}

impl std::fmt::Display for CombinationKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nodes: Vec<String> = self.nodes().map(|n| n.to_string()).collect();
        write!(f, "{{{}}}", nodes.join(","))
    }
}

/// One recorded measurement tied to a combination: the ±1 outcome together
/// with the known discrete part of the phase argument (encoding phase plus
/// all announced basis phases), kept exact in quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceTuple {
    offset_quarters: u8,
    pub outcome: Outcome,
}

impl EvidenceTuple {
    /// Evidence from a single-node measurement with known encoding `chi`.
    pub fn single(chi: EncodingPhase, basis: Basis, outcome: Outcome) -> Self {
        EvidenceTuple {
            offset_quarters: (chi.quarters() + basis.phase_quarters()) & 3,
            outcome,
        }
    }

    /// Parity evidence from an entangled round: `chi` plus every announced
    /// basis phase.
    pub fn parity_evidence(chi: EncodingPhase, bases: &[Basis], outcomes: &[Outcome]) -> Self {
        let offset = bases
            .iter()
            .fold(chi.quarters(), |acc, b| (acc + b.phase_quarters()) & 3);
        EvidenceTuple {
            offset_quarters: offset,
            outcome: parity(outcomes),
        }
    }

    pub fn offset_quarters(self) -> u8 {
        self.offset_quarters
    }

    /// Outcome probability at candidate phase `phi`.
    pub fn probability(self, phi: f64) -> f64 {
        let c = cos_quarter_shifted(phi, self.offset_quarters);
        0.5 * (1.0 + f64::from(self.outcome.value()) * c)
    }
}

/// All evidence of one execution, grouped by combination.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    by_key: BTreeMap<CombinationKey, Vec<EvidenceTuple>>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        EvidenceSet::default()
    }

    pub fn push(&mut self, key: CombinationKey, tuple: EvidenceTuple) {
        self.by_key.entry(key).or_default().push(tuple);
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.values().all(|v| v.is_empty())
    }

    pub fn len(&self) -> usize {
        self.by_key.values().map(|v| v.len()).sum()
    }

    pub fn count(&self, key: CombinationKey) -> usize {
        self.by_key.get(&key).map_or(0, |v| v.len())
    }

    pub fn tuples(&self, key: CombinationKey) -> &[EvidenceTuple] {
        self.by_key.get(&key).map_or(&[], |v| v.as_slice())
    }

    pub fn keys(&self) -> impl Iterator<Item = CombinationKey> + '_ {
        self.by_key
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, _)| *k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CombinationKey, &[EvidenceTuple])> {
        self.by_key.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

/// Likelihood grid for one combination from its evidence tuples.
///
/// Bin `j` holds the product over tuples of the outcome probability at
/// candidate phase `θ_j`; empty evidence yields the uniform grid. Products
/// run in log space. Tuples fall into at most eight `(offset, outcome)`
/// classes, so the per-bin work is a class-count weighted sum rather than
/// a pass over every tuple.
pub fn likelihood_from_evidence(tuples: &[EvidenceTuple], k: usize) -> LikelihoodGrid {
    if tuples.is_empty() {
        return LikelihoodGrid::uniform(k);
    }
    let mut class_counts = [[0usize; 2]; 4];
    for t in tuples {
        let o = usize::from(t.outcome == Outcome::Minus);
        class_counts[t.offset_quarters as usize][o] += 1;
    }
    let mut log_bins = vec![0.0f64; k];
    for (j, log_bin) in log_bins.iter_mut().enumerate() {
        let theta = TAU * j as f64 / k as f64;
        let (sin, cos) = theta.sin_cos();
        let shifted = [cos, -sin, -cos, sin];
        let mut acc = 0.0;
        for (q, &c) in shifted.iter().enumerate() {
            for (o, sign) in [(0usize, 1.0f64), (1, -1.0)] {
                let count = class_counts[q][o];
                if count > 0 {
                    let p = 0.5 * (1.0 + sign * c);
                    acc += count as f64 * p.max(LOG_FLOOR).ln();
                }
            }
        }
        *log_bin = acc;
    }
    LikelihoodGrid::from_log_bins(&log_bins)
}

/// Circular convolution of all input grids via FFT: the distribution of
/// the modular sum of the underlying variables. Output is normalized.
pub fn circular_convolve(grids: &[LikelihoodGrid]) -> Result<LikelihoodGrid> {
    let first = grids.first().ok_or(Error::EmptyConvolution)?;
    let k = first.len();
    for g in grids.iter().skip(1) {
        first.check_same_size(g)?;
    }
    if grids.len() == 1 {
        return Ok(first.clone().into_normalized());
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(k);
    let ifft = planner.plan_fft_inverse(k);

    let mut product = vec![Complex64::new(1.0, 0.0); k];
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for g in grids {
        // Normalize each factor first to keep magnitudes near 1.
        let mass = g.mass();
        let scale = if mass > 0.0 { TAU / (g.len() as f64 * mass) } else { 1.0 };
        for (b, src) in buf.iter_mut().zip(g.bins()) {
            *b = Complex64::new(src * scale, 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in product.iter_mut().zip(&buf) {
            *p *= b;
        }
    }
    ifft.process(&mut product);
    let bins: Vec<f64> = product.iter().map(|c| c.re.max(0.0)).collect();
    Ok(LikelihoodGrid::from_bins(bins).into_normalized())
}

/// Pull a likelihood of `qθ` back to a likelihood of `θ`: bin `j` receives
/// the input value at `(q·j) mod K`. The output is `2π/q`-periodic by
/// construction; `q = 1` is the identity.
pub fn rescale_sum_to_theta(grid: &LikelihoodGrid, q: usize) -> Result<LikelihoodGrid> {
    if q == 0 {
        return Err(Error::ZeroRescale);
    }
    let k = grid.len();
    let bins: Vec<f64> = (0..k).map(|j| grid.bins()[(q * j) % k]).collect();
    Ok(LikelihoodGrid::from_bins(bins).into_normalized())
}

/// Harmonic figure of merit `(Σ 1/n_j)^{-1}`; zero when any count is zero.
pub fn n_effective(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    if counts.contains(&0) {
        return Ok(0.0);
    }
    Ok(1.0 / counts.iter().map(|&n| 1.0 / n as f64).sum::<f64>())
}

/// A set of same-size combinations whose node multiset covers every node
/// exactly `q` times, so their phase sum equals `q·θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationGroup {
    pub keys: Vec<CombinationKey>,
    pub q: usize,
    pub n_effective: f64,
}

/// The selected disjoint groups for one evidence set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CombinationPlan {
    pub groups: Vec<CombinationGroup>,
}

/// Node budget for the exhaustive group enumeration / packing searches.
const SEARCH_BUDGET: usize = 10_000;

struct GroupEnumerator<'a> {
    keys: &'a [CombinationKey],
    n_bobs: usize,
    group_size: usize,
    q: usize,
    nodes_visited: usize,
    out: Vec<Vec<usize>>,
    exhausted_budget: bool,
}

impl<'a> GroupEnumerator<'a> {
    /// DFS over key indices, pruning when any node's coverage exceeds `q`.
    fn run(&mut self, start: usize, chosen: &mut Vec<usize>, coverage: &mut [usize]) {
        if self.nodes_visited > SEARCH_BUDGET {
            self.exhausted_budget = true;
            return;
        }
        self.nodes_visited += 1;
        if chosen.len() == self.group_size {
            if coverage.iter().all(|&c| c == self.q) {
                self.out.push(chosen.clone());
            }
            return;
        }
        let remaining = self.group_size - chosen.len();
        if self.keys.len() - start < remaining {
            return;
        }
        for i in start..self.keys.len() {
            let mut ok = true;
            for node in self.keys[i].nodes() {
                if node < self.n_bobs && coverage[node] + 1 > self.q {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for node in self.keys[i].nodes() {
                coverage[node] += 1;
            }
            chosen.push(i);
            self.run(i + 1, chosen, coverage);
            chosen.pop();
            for node in self.keys[i].nodes() {
                coverage[node] -= 1;
            }
            if self.exhausted_budget {
                return;
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All minimal balanced groups formable from `keys` (same `m`), as index
/// sets. Returns `None` when the enumeration exceeds the search budget.
fn enumerate_groups(
    keys: &[CombinationKey],
    m: usize,
    n_bobs: usize,
) -> Option<Vec<Vec<usize>>> {
    let g = gcd(m, n_bobs);
    let group_size = n_bobs / g;
    let q = m / g;
    if keys.len() < group_size {
        return Some(Vec::new());
    }
    let mut en = GroupEnumerator {
        keys,
        n_bobs,
        group_size,
        q,
        nodes_visited: 0,
        out: Vec::new(),
        exhausted_budget: false,
    };
    let mut coverage = vec![0usize; n_bobs];
    en.run(0, &mut Vec::new(), &mut coverage);
    if en.exhausted_budget {
        None
    } else {
        Some(en.out)
    }
}

/// Exhaustive max-weight disjoint packing over candidate groups; falls
/// back to a greedy sweep when the search budget runs out.
fn pack_groups(candidates: &[(Vec<usize>, f64)], n_keys: usize) -> Vec<usize> {
    // Candidates sorted by weight descending before calling.
    fn dfs(
        candidates: &[(Vec<usize>, f64)],
        idx: usize,
        used: &mut Vec<bool>,
        weight: f64,
        chosen: &mut Vec<usize>,
        best_weight: &mut f64,
        best: &mut Vec<usize>,
        nodes: &mut usize,
    ) {
        if *nodes > SEARCH_BUDGET {
            return;
        }
        *nodes += 1;
        if weight > *best_weight {
            *best_weight = weight;
            *best = chosen.clone();
        }
        for i in idx..candidates.len() {
            let (keys, w) = &candidates[i];
            if keys.iter().any(|&k| used[k]) {
                continue;
            }
            for &k in keys {
                used[k] = true;
            }
            chosen.push(i);
            dfs(candidates, i + 1, used, weight + w, chosen, best_weight, best, nodes);
            chosen.pop();
            for &k in keys {
                used[k] = false;
            }
        }
    }

    let mut best = Vec::new();
    let mut best_weight = 0.0;
    let mut nodes = 0usize;
    dfs(
        candidates,
        0,
        &mut vec![false; n_keys],
        0.0,
        &mut Vec::new(),
        &mut best_weight,
        &mut best,
        &mut nodes,
    );
    if nodes > SEARCH_BUDGET {
        // Greedy: best-weight first, skip overlaps.
        let mut used = vec![false; n_keys];
        let mut chosen = Vec::new();
        for (i, (keys, _)) in candidates.iter().enumerate() {
            if keys.iter().any(|&k| used[k]) {
                continue;
            }
            for &k in keys {
                used[k] = true;
            }
            chosen.push(i);
        }
        chosen
    } else {
        best
    }
}

/// Greedy plan for one `m` when exhaustive enumeration is infeasible:
/// grow a pool from the highest-count keys and commit the first balanced
/// group each extension completes.
fn greedy_groups(
    keys_sorted: &[CombinationKey],
    counts: &[usize],
    m: usize,
    n_bobs: usize,
) -> Vec<Vec<usize>> {
    let g = gcd(m, n_bobs);
    let group_size = n_bobs / g;
    let q = m / g;
    let mut available: Vec<usize> = (0..keys_sorted.len()).collect();
    let mut groups = Vec::new();
    'outer: loop {
        // Try to build one balanced group from the available pool,
        // preferring large counts (pool is count-sorted).
        let pool: Vec<usize> = available.clone();
        if pool.len() < group_size {
            break;
        }
        let pool_keys: Vec<CombinationKey> = pool.iter().map(|&i| keys_sorted[i]).collect();
        let mut en = GroupEnumerator {
            keys: &pool_keys,
            n_bobs,
            group_size,
            q,
            nodes_visited: 0,
            out: Vec::new(),
            exhausted_budget: false,
        };
        let mut coverage = vec![0usize; n_bobs];
        en.run(0, &mut Vec::new(), &mut coverage);
        // Commit the found group with the best n_eff, if any.
        let mut best: Option<(Vec<usize>, f64)> = None;
        for local in en.out {
            let group_counts: Vec<usize> =
                local.iter().map(|&li| counts[pool[li]]).collect();
            let w = n_effective(&group_counts).unwrap_or(0.0);
            if best.as_ref().is_none_or(|(_, bw)| w > *bw) {
                best = Some((local, w));
            }
        }
        match best {
            Some((local, w)) if w > 0.0 => {
                let global: Vec<usize> = local.iter().map(|&li| pool[li]).collect();
                available.retain(|i| !global.contains(i));
                groups.push(global);
            }
            _ => break 'outer,
        }
    }
    groups
}

/// Select disjoint balanced groups per subset size `m`, maximizing the
/// summed `n_eff`; groups whose `n_eff` would be zero are dropped.
pub fn plan_combinations(evidence: &EvidenceSet, n_bobs: usize) -> CombinationPlan {
    let mut plan = CombinationPlan::default();
    for m in 1..=n_bobs {
        let mut keys: Vec<CombinationKey> = evidence
            .keys()
            .filter(|k| k.m() == m && k.mask() < (1u64 << n_bobs) as u32)
            .collect();
        if keys.is_empty() {
            continue;
        }
        // Deterministic order: count descending, then key.
        keys.sort_by(|a, b| {
            evidence
                .count(*b)
                .cmp(&evidence.count(*a))
                .then(a.cmp(b))
        });
        let counts: Vec<usize> = keys.iter().map(|k| evidence.count(*k)).collect();
        let q = m / gcd(m, n_bobs);

        let chosen_groups: Vec<Vec<usize>> = match enumerate_groups(&keys, m, n_bobs) {
            Some(candidates) => {
                let mut weighted: Vec<(Vec<usize>, f64)> = candidates
                    .into_iter()
                    .map(|idx| {
                        let group_counts: Vec<usize> = idx.iter().map(|&i| counts[i]).collect();
                        let w = n_effective(&group_counts).unwrap_or(0.0);
                        (idx, w)
                    })
                    .filter(|(_, w)| *w > 0.0)
                    .collect();
                weighted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                let picked = pack_groups(&weighted, keys.len());
                picked.into_iter().map(|i| weighted[i].0.clone()).collect()
            }
            None => greedy_groups(&keys, &counts, m, n_bobs),
        };

        for idx in chosen_groups {
            let group_keys: Vec<CombinationKey> = idx.iter().map(|&i| keys[i]).collect();
            let group_counts: Vec<usize> = idx.iter().map(|&i| counts[i]).collect();
            let w = n_effective(&group_counts).unwrap_or(0.0);
            if w > 0.0 {
                plan.groups.push(CombinationGroup {
                    keys: group_keys,
                    q,
                    n_effective: w,
                });
            }
        }
    }
    plan
}

/// Posterior over θ with a uniform prior: per group, convolve the member
/// likelihoods and pull back by the group's q; multiply all group results
/// pointwise and normalize. No usable groups yields the uniform grid.
pub fn theta_posterior_with_bins(
    evidence: &EvidenceSet,
    n_bobs: usize,
    k: usize,
) -> Result<LikelihoodGrid> {
    let plan = plan_combinations(evidence, n_bobs);
    if plan.groups.is_empty() {
        return Ok(LikelihoodGrid::uniform(k));
    }
    let mut log_acc = vec![0.0f64; k];
    for group in &plan.groups {
        let members: Vec<LikelihoodGrid> = group
            .keys
            .iter()
            .map(|key| likelihood_from_evidence(evidence.tuples(*key), k))
            .collect();
        let convolved = circular_convolve(&members)?;
        let pulled = rescale_sum_to_theta(&convolved, group.q)?;
        for (acc, b) in log_acc.iter_mut().zip(pulled.bins()) {
            *acc += b.max(LOG_FLOOR).ln();
        }
    }
    Ok(LikelihoodGrid::from_log_bins(&log_acc).into_normalized())
}

/// [`theta_posterior_with_bins`] at the default resolution.
pub fn theta_posterior(evidence: &EvidenceSet, params: &ProtocolParams) -> Result<LikelihoodGrid> {
    theta_posterior_with_bins(evidence, params.n_bobs(), DEFAULT_GRID_BINS)
}

/// Circular dispersion of a normalized grid around the true value:
/// `Σ (1 − cos(θ_j − θ)) · bins_j · (2π/K)`, in `[0, 2]`.
///
/// 0 is a delta at the truth, 1 the uniform distribution, 2 a delta at
/// the antipode.
pub fn lambda_dispersion(grid: &LikelihoodGrid, theta_true: PhaseAngle) -> Result<f64> {
    if !grid.is_normalized() || (grid.mass() - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::UnnormalizedGrid);
    }
    let k = grid.len() as f64;
    let t = theta_true.radians();
    let sum: f64 = grid
        .bins()
        .iter()
        .enumerate()
        .map(|(j, b)| (1.0 - (TAU * j as f64 / k - t).cos()) * b)
        .sum();
    Ok(sum * TAU / k)
}

/// Mean dispersion over many executions: the Monte Carlo average of
/// `lambda_dispersion(posterior, θ_true)`.
pub fn capital_lambda(
    executions: &[(EvidenceSet, PhaseAngle)],
    params: &ProtocolParams,
) -> Result<f64> {
    if executions.is_empty() {
        return Err(Error::EmptyExecutions);
    }
    let mut total = 0.0;
    for (evidence, truth) in executions {
        let posterior = theta_posterior(evidence, params)?;
        total += lambda_dispersion(&posterior, *truth)?;
    }
    Ok(total / executions.len() as f64)
}
