//! Implementations of the experiment subcommands. All output files are
//! written in a deterministic order with deterministic number formatting,
//! so a repeated run with the same configuration and seed is
//! byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use sqrs_core::adversary::{eve_observe, AttackKind, AttackStrategy};
use sqrs_core::fisher::{crb_variance, total_information};
use sqrs_core::inference::{lambda_dispersion, theta_posterior, EvidenceSet, LikelihoodGrid};
use sqrs_core::montecarlo::{
    alice_lambda_samples, derive_rng, eve_lambda_curve, mean_and_sem, random_truths,
};
use sqrs_core::optimizer::{refine_search, GridPointResult, SearchConfig, SearchMode};
use sqrs_core::protocol::{alice_evidence, run_protocol, ProtocolParams, RoundTranscript};
use sqrs_core::qstate::ProbePreparation;
use sqrs_core::security::{
    lambda_e_lower_bound, per_round_rates, MULTI_BOB_CURVE_CAP, SINGLE_BOB_CURVE_CAP,
};

use crate::config::{require_field, require_list, ExperimentConfig};
use crate::CliError;

fn internal(e: sqrs_core::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn write_out(out_dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Flat per-round record of the transcript export.
#[derive(Serialize)]
struct TranscriptRecord {
    execution: usize,
    round_index: usize,
    prep_kind: &'static str,
    prep_phases: Vec<f64>,
    bobs: Vec<BobRecordOut>,
    detected: bool,
}

#[derive(Serialize)]
struct BobRecordOut {
    applied: bool,
    basis: String,
    outcome: i8,
}

fn transcript_record(execution: usize, round_index: usize, t: &RoundTranscript) -> TranscriptRecord {
    let (prep_kind, prep_phases) = match &t.preparation {
        ProbePreparation::Separable(phases) => (
            "separable",
            phases.iter().map(|p| p.angle().radians()).collect(),
        ),
        ProbePreparation::Entangled(chi) => ("entangled", vec![chi.angle().radians()]),
    };
    TranscriptRecord {
        execution,
        round_index,
        prep_kind,
        prep_phases,
        bobs: t
            .bob_records
            .iter()
            .map(|r| BobRecordOut {
                applied: r.applied_phase,
                basis: match r.basis {
                    sqrs_core::qstate::Basis::X => "X".into(),
                    sqrs_core::qstate::Basis::Y => "Y".into(),
                },
                outcome: r.outcome.value(),
            })
            .collect(),
        detected: t.detected,
    }
}

const SIM_TAG: u64 = 0x51u64 << 32;

/// Run protocol executions, export transcripts, the first execution's
/// posterior, and a summary of the dispersion and detection statistics.
pub fn simulate(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let protocol = cfg.protocol()?;
    let params = protocol.params()?;
    let sim = ExperimentConfig::require(&cfg.simulate, "simulate")?;
    let attack = match &cfg.attack {
        Some(a) => Some(a.strategy()?),
        None => None,
    };

    let truths = random_truths(sim.truth_sets, params.n_bobs(), seed);
    let jobs: Vec<(usize, usize)> = (0..sim.truth_sets)
        .flat_map(|t| (0..sim.executions).map(move |r| (t, r)))
        .collect();
    let stop = sim.stop_on_detection;
    let executions: Vec<(Vec<RoundTranscript>, f64)> = jobs
        .par_iter()
        .map(|&(t, r)| -> Result<_, CliError> {
            let mut rng = derive_rng(seed, &[SIM_TAG, t as u64, r as u64]);
            let transcripts =
                run_protocol(&params, &truths[t], attack.as_ref(), stop, &mut rng)
                    .map_err(internal)?;
            // Dispersion of the relevant party: the eavesdropper's when an
            // attack is configured, the sender's otherwise.
            let evidence = match attack {
                Some(_) => {
                    let mut ev = EvidenceSet::new();
                    for tr in &transcripts {
                        if let Some(knowledge) = &tr.attack_record {
                            eve_observe(&tr.bob_records, knowledge, &mut ev);
                        }
                    }
                    ev
                }
                None => alice_evidence(&transcripts),
            };
            let posterior = theta_posterior(&evidence, &params).map_err(internal)?;
            let lambda =
                lambda_dispersion(&posterior, truths[t].theta()).map_err(internal)?;
            Ok((transcripts, lambda))
        })
        .collect::<Result<_, CliError>>()?;

    let mut jsonl = String::new();
    for (exec_idx, (transcripts, _)) in executions.iter().enumerate() {
        for (round_idx, t) in transcripts.iter().enumerate() {
            let record = transcript_record(exec_idx, round_idx, t);
            jsonl.push_str(&serde_json::to_string(&record).expect("serializable record"));
            jsonl.push('\n');
        }
    }
    write_out(out_dir, "transcripts.jsonl", &jsonl)?;

    // Posterior of the first execution, for plotting.
    let first_evidence = match attack {
        Some(_) => {
            let mut ev = EvidenceSet::new();
            for tr in &executions[0].0 {
                if let Some(knowledge) = &tr.attack_record {
                    eve_observe(&tr.bob_records, knowledge, &mut ev);
                }
            }
            ev
        }
        None => alice_evidence(&executions[0].0),
    };
    let posterior = theta_posterior(&first_evidence, &params).map_err(internal)?;
    write_out(out_dir, "posterior.csv", &grid_csv(&posterior))?;

    let lambdas: Vec<f64> = executions.iter().map(|(_, l)| *l).collect();
    let (lambda_mean, lambda_sem) = mean_and_sem(&lambdas);
    let detected_count = executions
        .iter()
        .filter(|(ts, _)| ts.iter().any(|t| t.detected))
        .count();
    let total_rounds: usize = executions.iter().map(|(ts, _)| ts.len()).sum();

    let mut summary = String::new();
    let scenario = if attack.is_some() { "attacked" } else { "honest" };
    let lambda_name = if attack.is_some() { "lambda_e" } else { "lambda_a" };
    writeln!(summary, "scenario = {scenario}").unwrap();
    writeln!(summary, "executions = {}", executions.len()).unwrap();
    writeln!(summary, "n_bobs = {}", params.n_bobs()).unwrap();
    writeln!(summary, "n_rounds = {}", params.n_rounds()).unwrap();
    writeln!(summary, "p_separable = {}", params.p_separable()).unwrap();
    writeln!(summary, "p_fidelity = {}", params.p_fidelity()).unwrap();
    if let Some(a) = attack {
        writeln!(summary, "attack = {}", a.kind).unwrap();
        writeln!(summary, "attack_probability = {}", a.attack_probability).unwrap();
    }
    writeln!(summary, "{lambda_name}_mean = {lambda_mean}").unwrap();
    writeln!(summary, "{lambda_name}_sem = {lambda_sem}").unwrap();
    writeln!(summary, "detected_count = {detected_count}").unwrap();
    writeln!(
        summary,
        "mean_rounds_per_execution = {}",
        total_rounds as f64 / executions.len() as f64
    )
    .unwrap();
    write_out(out_dir, "summary.txt", &summary)
}

fn grid_csv(grid: &LikelihoodGrid) -> String {
    let mut out = String::from("theta,density\n");
    for (j, b) in grid.bins().iter().enumerate() {
        writeln!(out, "{},{}", grid.theta(j), b).unwrap();
    }
    out
}

fn grid_axis(points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

/// One security map: the certified dispersion lower bound per grid point.
fn security_map_csv(
    strategy: AttackStrategy,
    n_bobs: usize,
    grid_points: usize,
    curve_repetitions: usize,
    truth_sets: usize,
    seed: u64,
) -> Result<String, CliError> {
    let cap = if n_bobs == 1 {
        SINGLE_BOB_CURVE_CAP
    } else {
        MULTI_BOB_CURVE_CAP
    };
    let truths = random_truths(truth_sets, n_bobs, seed);
    let axis = grid_axis(grid_points);
    let points: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&p_s| axis.iter().map(move |&p_f| (p_s, p_f)))
        .collect();
    let rows: Vec<String> = points
        .par_iter()
        .map(|&(p_s, p_f)| -> Result<String, CliError> {
            let params = ProtocolParams::new(n_bobs, cap.max(1), p_s, p_f).map_err(internal)?;
            let rates = per_round_rates(&strategy, &params);
            let bound = if rates.total() > 0.0 {
                let point_seed = seed
                    .wrapping_add(p_s.to_bits().rotate_left(11))
                    .wrapping_add(p_f.to_bits().rotate_left(29))
                    .wrapping_add((n_bobs as u64) << 7)
                    .wrapping_add(strategy.kind as u64);
                let curve = eve_lambda_curve(
                    &params,
                    &strategy,
                    &truths,
                    curve_repetitions,
                    cap,
                    point_seed,
                )
                .map_err(internal)?;
                lambda_e_lower_bound(&strategy, &params, &curve)
            } else {
                0.0
            };
            Ok(format!(
                "{p_s},{p_f},{bound},{},{}",
                rates.d_separable, rates.d_entangled
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let mut csv = String::from("p_s,p_f,lambda_e_bound,d_separable,d_entangled\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

/// Export Λ_E lower-bound maps per (strategy, node count).
pub fn security_map(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let section = ExperimentConfig::require(&cfg.security_map, "security_map")?;
    for &strategy_kind in &section.strategies {
        let strategy = AttackStrategy::always(strategy_kind);
        for &n_bobs in &section.n_bobs_list {
            let csv = security_map_csv(
                strategy,
                n_bobs,
                section.grid_points,
                section.curve_repetitions,
                section.truth_sets,
                seed,
            )?;
            let name = format!("security_map_{}_nb{}.csv", strategy_kind, n_bobs);
            write_out(out_dir, &name, &csv)?;
        }
    }
    Ok(())
}

fn point_csv_row(r: &GridPointResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.p_s,
        r.p_f,
        r.lambda_a,
        r.lambda_a_sem,
        r.lambda_e,
        r.lambda_e_sem,
        r.undetected_fraction,
        r.mean_rounds_to_detection
    )
}

const POINT_CSV_HEADER: &str =
    "p_s,p_f,lambda_a,lambda_a_sem,lambda_e,lambda_e_sem,undetected_fraction,mean_rounds_to_detection\n";

/// Run the constrained search and export the evaluation log plus either
/// the best point or an infeasibility report.
pub fn optimize(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let section = ExperimentConfig::require(&cfg.optimize, "optimize")?;
    let attack = ExperimentConfig::require(&cfg.attack, "attack")?;
    let search = SearchConfig {
        n_bobs: section.n_bobs,
        n_rounds: section.n_rounds,
        strategy: attack.strategy()?,
        lambda_e_threshold: section.lambda_e_threshold,
        grid_points_per_axis: section.grid_points_per_axis,
        refinements: section.refinements,
        repetitions_per_point: section.repetitions_per_point,
        truth_sets: section.truth_sets,
        mode: section.mode,
        seed,
    };
    let report = refine_search(&search).map_err(internal)?;

    let mut log = String::from(POINT_CSV_HEADER);
    for r in &report.evaluations {
        log.push_str(&point_csv_row(r));
        log.push('\n');
    }
    write_out(out_dir, "optimize_log.csv", &log)?;

    match report.best {
        Some(best) => {
            let mut txt = String::new();
            writeln!(txt, "p_s = {}", best.p_s).unwrap();
            writeln!(txt, "p_f = {}", best.p_f).unwrap();
            writeln!(txt, "lambda_a = {}", best.lambda_a).unwrap();
            writeln!(txt, "lambda_a_sem = {}", best.lambda_a_sem).unwrap();
            writeln!(txt, "lambda_e = {}", best.lambda_e).unwrap();
            writeln!(txt, "lambda_e_sem = {}", best.lambda_e_sem).unwrap();
            writeln!(txt, "undetected_fraction = {}", best.undetected_fraction).unwrap();
            writeln!(
                txt,
                "mean_rounds_to_detection = {}",
                best.mean_rounds_to_detection
            )
            .unwrap();
            writeln!(txt, "feasible_points = {}", report.feasible_count).unwrap();
            writeln!(txt, "evaluated_points = {}", report.evaluations.len()).unwrap();
            write_out(out_dir, "best_point.txt", &txt)
        }
        None => {
            let mut txt = String::new();
            writeln!(txt, "infeasible = true").unwrap();
            writeln!(txt, "lambda_e_threshold = {}", section.lambda_e_threshold).unwrap();
            writeln!(txt, "evaluated_points = {}", report.evaluations.len()).unwrap();
            writeln!(txt, "# best achievable lambda_e per p_s column").unwrap();
            for (p_s, best_lambda_e) in &report.frontier {
                writeln!(txt, "frontier {p_s} {best_lambda_e}").unwrap();
            }
            write_out(out_dir, "infeasibility_report.txt", &txt)?;
            Err(CliError::Infeasible(format!(
                "no grid point satisfies lambda_e >= {}",
                section.lambda_e_threshold
            )))
        }
    }
}

/// Export the per-round information and the Cramér–Rao floor over a
/// probability sweep.
pub fn fisher(cfg: &ExperimentConfig, _seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let section = ExperimentConfig::require(&cfg.fisher, "fisher")?;
    let axis = grid_axis(section.grid_points);
    let mut csv = String::from("p_s,p_f,i_total,i_separable_term,crb_variance\n");
    for &p_s in &axis {
        for &p_f in &axis {
            let params = ProtocolParams::new(section.n_bobs, section.n_rounds, p_s, p_f)
                .map_err(internal)?;
            let info = total_information(&params);
            let crb = match crb_variance(&params, section.n_rounds) {
                Ok(v) => v,
                Err(sqrs_core::Error::ZeroInformation) => f64::INFINITY,
                Err(e) => return Err(internal(e)),
            };
            writeln!(
                csv,
                "{p_s},{p_f},{},{},{crb}",
                info.total, info.separable_term
            )
            .unwrap();
        }
    }
    write_out(out_dir, "fisher.csv", &csv)
}

/// Optimizer sweep shared by the comparison figures: per node count, the
/// best secure point of each preparation approach.
fn optimizer_sweep(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<(usize, SearchMode, Option<GridPointResult>)>, CliError> {
    let fig = ExperimentConfig::require(&cfg.figure, "figure")?;
    let attack = ExperimentConfig::require(&cfg.attack, "attack")?;
    let n_bobs_list = require_list(&fig.n_bobs_list, "n_bobs_list")?;
    let n_rounds = require_field(&fig.n_rounds, "n_rounds")?;
    let threshold = require_field(&fig.lambda_e_threshold, "lambda_e_threshold")?;
    let grid_points = require_field(&fig.grid_points_per_axis, "grid_points_per_axis")?;
    let refinements = require_field(&fig.refinements, "refinements")?;
    let repetitions = require_field(&fig.repetitions_per_point, "repetitions_per_point")?;
    let truth_sets = require_field(&fig.truth_sets, "truth_sets")?;

    let modes = [
        SearchMode::SeparableOnly,
        SearchMode::EntangledOnly,
        SearchMode::Hybrid,
    ];
    let mut out = Vec::new();
    for &n_bobs in n_bobs_list {
        for mode in modes {
            let search = SearchConfig {
                n_bobs,
                n_rounds,
                strategy: attack.strategy()?,
                lambda_e_threshold: threshold,
                grid_points_per_axis: grid_points,
                refinements,
                repetitions_per_point: repetitions,
                truth_sets,
                mode,
                seed,
            };
            let report = refine_search(&search).map_err(internal)?;
            out.push((n_bobs, mode, report.best));
        }
    }
    Ok(out)
}

fn mode_name(mode: SearchMode) -> &'static str {
    match mode {
        SearchMode::Hybrid => "hybrid",
        SearchMode::SeparableOnly => "separable-only",
        SearchMode::EntangledOnly => "entangled-only",
    }
}

/// Emit the data series of one of the comparison figures.
pub fn figure(cfg: &ExperimentConfig, seed: u64, out_dir: &Path, id: u8) -> Result<(), CliError> {
    match id {
        2 | 3 => {
            let sweep = optimizer_sweep(cfg, seed)?;
            if id == 2 {
                let mut csv = String::from(
                    "n_bobs,approach,feasible,p_s,p_f,lambda_a,lambda_a_sem,lambda_e\n",
                );
                for (n_bobs, mode, best) in &sweep {
                    match best {
                        Some(b) => writeln!(
                            csv,
                            "{n_bobs},{},true,{},{},{},{},{}",
                            mode_name(*mode),
                            b.p_s,
                            b.p_f,
                            b.lambda_a,
                            b.lambda_a_sem,
                            b.lambda_e
                        )
                        .unwrap(),
                        None => {
                            writeln!(csv, "{n_bobs},{},false,,,,,", mode_name(*mode)).unwrap()
                        }
                    }
                }
                write_out(out_dir, "figure2.csv", &csv)
            } else {
                let mut csv = String::from(
                    "n_bobs,approach,feasible,undetected_fraction,mean_rounds_to_detection,p_f,p_s\n",
                );
                for (n_bobs, mode, best) in &sweep {
                    match best {
                        Some(b) => writeln!(
                            csv,
                            "{n_bobs},{},true,{},{},{},{}",
                            mode_name(*mode),
                            b.undetected_fraction,
                            b.mean_rounds_to_detection,
                            b.p_f,
                            b.p_s
                        )
                        .unwrap(),
                        None => {
                            writeln!(csv, "{n_bobs},{},false,,,,", mode_name(*mode)).unwrap()
                        }
                    }
                }
                write_out(out_dir, "figure3.csv", &csv)
            }
        }
        4 => {
            let fig = ExperimentConfig::require(&cfg.figure, "figure")?;
            let n_bobs_list = require_list(&fig.n_bobs_list, "n_bobs_list")?;
            let rounds_list = require_list(&fig.n_rounds_list, "n_rounds_list")?;
            let hybrid_p_s = require_field(&fig.hybrid_p_separable, "hybrid_p_separable")?;
            let hybrid_p_f = require_field(&fig.hybrid_p_fidelity, "hybrid_p_fidelity")?;
            let repetitions = require_field(&fig.repetitions, "repetitions")?;
            let truth_sets = require_field(&fig.truth_sets, "truth_sets")?;

            let series: [(&str, f64, f64); 3] = [
                ("separable-ideal", 1.0, 0.0),
                ("entangled-ideal", 0.0, 0.0),
                ("hybrid-secure", hybrid_p_s, hybrid_p_f),
            ];
            let mut csv = String::from("series,n_bobs,n_rounds,lambda_a,lambda_a_sem\n");
            for &n_bobs in n_bobs_list {
                let truths = random_truths(truth_sets, n_bobs, seed);
                for (name, p_s, p_f) in series {
                    for &n_rounds in rounds_list {
                        let params = ProtocolParams::new(n_bobs, n_rounds, p_s, p_f)
                            .map_err(internal)?;
                        let run_seed = seed
                            .wrapping_add((n_bobs as u64) << 24)
                            .wrapping_add((n_rounds as u64) << 2)
                            .wrapping_add(p_s.to_bits() >> 13);
                        let samples =
                            alice_lambda_samples(&params, &truths, repetitions, run_seed)
                                .map_err(internal)?;
                        let (mean, sem) = mean_and_sem(&samples);
                        writeln!(csv, "{name},{n_bobs},{n_rounds},{mean},{sem}").unwrap();
                    }
                }
            }
            write_out(out_dir, "figure4.csv", &csv)
        }
        5 => {
            let fig = ExperimentConfig::require(&cfg.figure, "figure")?;
            let grid_points = require_field(&fig.grid_points, "grid_points")?;
            let curve_repetitions = require_field(&fig.curve_repetitions, "curve_repetitions")?;
            let truth_sets = require_field(&fig.truth_sets, "truth_sets")?;
            let axis = grid_axis(grid_points);
            let truths = random_truths(truth_sets, 1, seed);
            let mut csv = String::from("attack,p_f,lambda_e_bound\n");
            for kind in [AttackKind::MeasureResendSeparable, AttackKind::ReplaceSeparable] {
                let strategy = AttackStrategy::always(kind);
                let rows: Vec<String> = axis
                    .par_iter()
                    .map(|&p_f| -> Result<String, CliError> {
                        let params =
                            ProtocolParams::new(1, SINGLE_BOB_CURVE_CAP, 1.0, p_f)
                                .map_err(internal)?;
                        let rates = per_round_rates(&strategy, &params);
                        let bound = if rates.total() > 0.0 {
                            let point_seed = seed
                                .wrapping_add(p_f.to_bits().rotate_left(19))
                                .wrapping_add(kind as u64);
                            let curve = eve_lambda_curve(
                                &params,
                                &strategy,
                                &truths,
                                curve_repetitions,
                                SINGLE_BOB_CURVE_CAP,
                                point_seed,
                            )
                            .map_err(internal)?;
                            lambda_e_lower_bound(&strategy, &params, &curve)
                        } else {
                            0.0
                        };
                        Ok(format!("{},{p_f},{bound}", kind))
                    })
                    .collect::<Result<_, CliError>>()?;
                for row in rows {
                    csv.push_str(&row);
                    csv.push('\n');
                }
            }
            write_out(out_dir, "figure5.csv", &csv)
        }
        6 => {
            let fig = ExperimentConfig::require(&cfg.figure, "figure")?;
            let n_bobs_list = require_list(&fig.n_bobs_list, "n_bobs_list")?;
            let grid_points = require_field(&fig.grid_points, "grid_points")?;
            let curve_repetitions = require_field(&fig.curve_repetitions, "curve_repetitions")?;
            let truth_sets = require_field(&fig.truth_sets, "truth_sets")?;
            for kind in [
                AttackKind::MeasureResendEntangled,
                AttackKind::MeasureResendSeparable,
            ] {
                for &n_bobs in n_bobs_list {
                    let csv = security_map_csv(
                        AttackStrategy::always(kind),
                        n_bobs,
                        grid_points,
                        curve_repetitions,
                        truth_sets,
                        seed,
                    )?;
                    let name = format!("figure6_{}_nb{}.csv", kind, n_bobs);
                    write_out(out_dir, &name, &csv)?;
                }
            }
            Ok(())
        }
        other => Err(CliError::Config(format!(
            "unknown figure id {other}; supported ids are 2-6"
        ))),
    }
}
