//! TOML experiment configuration. Every section is strict: unknown keys
//! and missing fields are rejected with the offending field path, since a
//! silently misread probability would invalidate every security number
//! downstream.

use serde::Deserialize;
use sqrs_core::adversary::{AttackKind, AttackStrategy};
use sqrs_core::optimizer::SearchMode;
use sqrs_core::protocol::ProtocolParams;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stream in a run derives from it.
    pub seed: u64,
    pub protocol: Option<ProtocolSection>,
    pub attack: Option<AttackSection>,
    pub simulate: Option<SimulateSection>,
    pub security_map: Option<SecurityMapSection>,
    pub optimize: Option<OptimizeSection>,
    pub fisher: Option<FisherSection>,
    pub figure: Option<FigureSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub n_bobs: usize,
    pub n_rounds: usize,
    pub p_separable: f64,
    pub p_fidelity: f64,
}

impl ProtocolSection {
    pub fn params(&self) -> Result<ProtocolParams, CliError> {
        ProtocolParams::new(self.n_bobs, self.n_rounds, self.p_separable, self.p_fidelity)
            .map_err(|e| CliError::Config(format!("[protocol] {e}")))
    }
}

fn default_attack_probability() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    #[serde(default = "default_attack_probability")]
    pub attack_probability: f64,
}

impl AttackSection {
    pub fn strategy(&self) -> Result<AttackStrategy, CliError> {
        AttackStrategy::new(self.kind, self.attack_probability)
            .map_err(|e| CliError::Config(format!("[attack] {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Repetitions per truth set.
    pub executions: usize,
    pub truth_sets: usize,
    pub stop_on_detection: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityMapSection {
    /// Grid points per axis over [0, 1].
    pub grid_points: usize,
    pub n_bobs_list: Vec<usize>,
    pub strategies: Vec<AttackKind>,
    /// Repetitions per truth set when tabulating the dispersion curve.
    pub curve_repetitions: usize,
    pub truth_sets: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub n_bobs: usize,
    pub n_rounds: usize,
    pub lambda_e_threshold: f64,
    pub grid_points_per_axis: usize,
    pub refinements: usize,
    pub repetitions_per_point: usize,
    pub truth_sets: usize,
    pub mode: SearchMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherSection {
    pub n_bobs: usize,
    pub n_rounds: usize,
    /// Grid points per axis of the (p_separable, p_fidelity) sweep.
    pub grid_points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSection {
    // Figures 2 and 3: optimizer sweep over node counts.
    pub n_bobs_list: Option<Vec<usize>>,
    pub n_rounds: Option<usize>,
    pub lambda_e_threshold: Option<f64>,
    pub grid_points_per_axis: Option<usize>,
    pub refinements: Option<usize>,
    pub repetitions_per_point: Option<usize>,
    pub truth_sets: Option<usize>,
    // Figure 4: dispersion versus round count.
    pub n_rounds_list: Option<Vec<usize>>,
    pub hybrid_p_separable: Option<f64>,
    pub hybrid_p_fidelity: Option<f64>,
    pub repetitions: Option<usize>,
    // Figures 5 and 6: security maps.
    pub grid_points: Option<usize>,
    pub curve_repetitions: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn protocol(&self) -> Result<&ProtocolSection, CliError> {
        self.protocol
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [protocol] section".into()))
    }

    pub fn require<'a, T>(
        section: &'a Option<T>,
        name: &str,
    ) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}

/// Required figure-section field with a path-style diagnostic.
pub fn require_field<T: Copy>(value: &Option<T>, name: &str) -> Result<T, CliError> {
    value
        .ok_or_else(|| CliError::Config(format!("missing field figure.{name}")))
}

pub fn require_list<'a, T>(value: &'a Option<Vec<T>>, name: &str) -> Result<&'a [T], CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("missing field figure.{name}")))
}
