//! Security-constrained search over the protocol probabilities: minimize
//! the sender's mean dispersion subject to a floor on the eavesdropper's,
//! on an evenly spaced grid refined by halving its spacing around the
//! per-column feasible minimizers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackStrategy;
use crate::error::Result;
use crate::montecarlo::{
    alice_lambda_samples, eve_statistics, mean_and_sem, random_truths,
};
use crate::protocol::ProtocolParams;

/// Which slice of the preparation mix the search covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Full two-dimensional grid over (P_S, P_F).
    Hybrid,
    /// P_S pinned to 1.
    SeparableOnly,
    /// P_S pinned to 0.
    EntangledOnly,
}

/// Configuration of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_bobs: usize,
    pub n_rounds: usize,
    pub strategy: AttackStrategy,
    pub lambda_e_threshold: f64,
    /// Points per axis of the initial evenly spaced grid over [0, 1].
    pub grid_points_per_axis: usize,
    /// Number of half-spacing refinement passes after the initial grid.
    pub refinements: usize,
    pub repetitions_per_point: usize,
    pub truth_sets: usize,
    pub mode: SearchMode,
    pub seed: u64,
}

impl SearchConfig {
    /// The defaults used for the full-scale optimization: an 11×11 grid,
    /// 3 refinements, 16 repetitions over 64 truth sets.
    pub fn standard(
        n_bobs: usize,
        n_rounds: usize,
        strategy: AttackStrategy,
        seed: u64,
    ) -> Self {
        SearchConfig {
            n_bobs,
            n_rounds,
            strategy,
            lambda_e_threshold: 0.5,
            grid_points_per_axis: 11,
            refinements: 3,
            repetitions_per_point: 16,
            truth_sets: 64,
            mode: SearchMode::Hybrid,
            seed,
        }
    }
}

/// Everything measured at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub p_s: f64,
    pub p_f: f64,
    pub lambda_a: f64,
    pub lambda_a_sem: f64,
    pub lambda_e: f64,
    pub lambda_e_sem: f64,
    pub undetected_fraction: f64,
    pub mean_rounds_to_detection: f64,
}

impl GridPointResult {
    pub fn feasible(&self, threshold: f64) -> bool {
        self.lambda_e >= threshold
    }
}

/// Outcome of a search: the full evaluation log plus the best feasible
/// point, if one exists. When the constraint is infeasible everywhere,
/// `frontier` reports the best-security point of each preparation-mix
/// column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best: Option<GridPointResult>,
    pub evaluations: Vec<GridPointResult>,
    pub feasible_count: usize,
    pub frontier: Vec<(f64, f64)>,
}

/// Evaluate one (p_s, p_f) point: the honest scenario over the full round
/// budget, and the attacked stop-on-detection scenario. Truth sets are
/// shared across points; streams are keyed by the point coordinates so a
/// revisited point reproduces its result bit for bit.
pub fn evaluate_point(
    p_s: f64,
    p_f: f64,
    config: &SearchConfig,
    truths: &[crate::protocol::TrueParameters],
) -> Result<GridPointResult> {
    let params = ProtocolParams::new(config.n_bobs, config.n_rounds, p_s, p_f)?;
    let point_seed = config
        .seed
        .wrapping_add(p_s.to_bits().rotate_left(17))
        .wrapping_add(p_f.to_bits().rotate_left(43));
    let lambdas = alice_lambda_samples(&params, truths, config.repetitions_per_point, point_seed)?;
    let (lambda_a, lambda_a_sem) = mean_and_sem(&lambdas);
    let eve = eve_statistics(
        &params,
        &config.strategy,
        truths,
        config.repetitions_per_point,
        point_seed,
    )?;
    Ok(GridPointResult {
        p_s,
        p_f,
        lambda_a,
        lambda_a_sem,
        lambda_e: eve.lambda_mean,
        lambda_e_sem: eve.lambda_sem,
        undetected_fraction: eve.undetected_fraction,
        mean_rounds_to_detection: eve.mean_rounds_to_detection,
    })
}

fn axis(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    let n = ((hi - lo) / spacing).round() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * spacing).min(1.0)).collect();
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

fn point_key(p_s: f64, p_f: f64) -> (u64, u64) {
    (p_s.to_bits(), p_f.to_bits())
}

/// Ordering for "better point": smaller Λ_A, ties broken by larger Λ_E,
/// then larger P_F.
fn better(a: &GridPointResult, b: &GridPointResult) -> std::cmp::Ordering {
    a.lambda_a
        .total_cmp(&b.lambda_a)
        .then(b.lambda_e.total_cmp(&a.lambda_e))
        .then(b.p_f.total_cmp(&a.p_f))
}

/// Run the refinement search.
///
/// Each pass evaluates the current grid, keeps the feasible minimizer of
/// each preparation-mix column, and rebuilds an evenly spaced grid at
/// half the spacing spanning the retained points plus one old spacing of
/// margin on every side. Previously evaluated points are reused, so the
/// whole search is deterministic under its seed.
pub fn refine_search(config: &SearchConfig) -> Result<SearchReport> {
    let truths = random_truths(config.truth_sets, config.n_bobs, config.seed);
    let mut cache: BTreeMap<(u64, u64), GridPointResult> = BTreeMap::new();
    let mut order: Vec<(u64, u64)> = Vec::new();

    let points_per_axis = config.grid_points_per_axis.max(2);
    let mut spacing = 1.0 / (points_per_axis - 1) as f64;
    let mut ps_axis = match config.mode {
        SearchMode::Hybrid => axis(0.0, 1.0, spacing),
        SearchMode::SeparableOnly => vec![1.0],
        SearchMode::EntangledOnly => vec![0.0],
    };
    let mut pf_axis = axis(0.0, 1.0, spacing);

    for pass in 0..=config.refinements {
        let mut todo: Vec<(f64, f64)> = Vec::new();
        for &p_s in &ps_axis {
            for &p_f in &pf_axis {
                if !cache.contains_key(&point_key(p_s, p_f)) {
                    todo.push((p_s, p_f));
                }
            }
        }
        let results: Vec<GridPointResult> = todo
            .par_iter()
            .map(|&(p_s, p_f)| evaluate_point(p_s, p_f, config, &truths))
            .collect::<Result<_>>()?;
        for r in results {
            let key = point_key(r.p_s, r.p_f);
            cache.insert(key, r);
            order.push(key);
        }

        if pass == config.refinements {
            break;
        }

        // Per-column feasible minimizers on the current grid.
        let mut retained: Vec<GridPointResult> = Vec::new();
        for &p_s in &ps_axis {
            let column: Vec<&GridPointResult> = pf_axis
                .iter()
                .filter_map(|&p_f| cache.get(&point_key(p_s, p_f)))
                .filter(|r| r.feasible(config.lambda_e_threshold))
                .collect();
            if let Some(best) = column.into_iter().min_by(|a, b| better(a, b)) {
                retained.push(*best);
            }
        }
        if retained.is_empty() {
            // Nothing feasible yet: keep the full span at half spacing so
            // later passes can still find a pocket of feasibility.
            spacing /= 2.0;
            if matches!(config.mode, SearchMode::Hybrid) {
                ps_axis = axis(0.0, 1.0, spacing);
            }
            pf_axis = axis(0.0, 1.0, spacing);
            continue;
        }

        let ps_lo = retained.iter().map(|r| r.p_s).fold(f64::INFINITY, f64::min) - spacing;
        let ps_hi = retained.iter().map(|r| r.p_s).fold(f64::NEG_INFINITY, f64::max) + spacing;
        let pf_lo = retained.iter().map(|r| r.p_f).fold(f64::INFINITY, f64::min) - spacing;
        let pf_hi = retained.iter().map(|r| r.p_f).fold(f64::NEG_INFINITY, f64::max) + spacing;
        spacing /= 2.0;
        if matches!(config.mode, SearchMode::Hybrid) {
            ps_axis = axis(ps_lo, ps_hi, spacing);
        }
        pf_axis = axis(pf_lo, pf_hi, spacing);
    }

    let evaluations: Vec<GridPointResult> = order.iter().map(|k| cache[k]).collect();
    let feasible: Vec<&GridPointResult> = evaluations
        .iter()
        .filter(|r| r.feasible(config.lambda_e_threshold))
        .collect();
    let feasible_count = feasible.len();
    let best = feasible.into_iter().min_by(|a, b| better(a, b)).copied();

    // Infeasibility frontier: per p_s value, the largest Λ_E seen.
    let mut frontier_map: BTreeMap<u64, f64> = BTreeMap::new();
    for r in &evaluations {
        let e = frontier_map.entry(r.p_s.to_bits()).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.lambda_e);
    }
    let frontier: Vec<(f64, f64)> = frontier_map
        .into_iter()
        .map(|(bits, v)| (f64::from_bits(bits), v))
        .collect();

    Ok(SearchReport {
        best,
        evaluations,
        feasible_count,
        frontier,
    })
}
