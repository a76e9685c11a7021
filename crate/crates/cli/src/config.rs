use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use qrc_core::circuit::{LocalsFamily, MAX_QUBITS};
use qrc_core::ergodicity::MAX_TRANSFER_QUBITS;
use qrc_core::gates::MAX_ENTANGLING_POWER;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    NarmaSweep,
    MgSweep,
    KrylovSaturation,
    CoeffDeviation,
    OverlapSaturation,
    MixingValidation,
    DesignGap,
    SolvablePerformance,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::NarmaSweep => "narma_sweep",
            Experiment::MgSweep => "mg_sweep",
            Experiment::KrylovSaturation => "krylov_saturation",
            Experiment::CoeffDeviation => "coeff_deviation",
            Experiment::OverlapSaturation => "overlap_saturation",
            Experiment::MixingValidation => "mixing_validation",
            Experiment::DesignGap => "design_gap",
            Experiment::SolvablePerformance => "solvable_performance",
        }
    }

    fn default_family(self) -> GateFamily {
        match self {
            Experiment::NarmaSweep => GateFamily::HaarTwoQubit,
            Experiment::DesignGap | Experiment::SolvablePerformance => GateFamily::Solvable(30),
            Experiment::OverlapSaturation => GateFamily::DualUnitary(vec![MAX_ENTANGLING_POWER]),
            _ => GateFamily::DualUnitary(default_ep_grid()),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `0.01, 0.06, ..., 0.61, 0.66`.
pub fn default_ep_grid() -> Vec<f64> {
    (0..14).map(|k| ((0.01 + 0.05 * k as f64) * 1e6).round() / 1e6).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFamily {
    HaarTwoQubit,
    DualUnitary(Vec<f64>),
    Solvable(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Multiplexing {
    One(usize),
    Grid(Vec<usize>),
}

impl Multiplexing {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Multiplexing::One(v) => vec![*v],
            Multiplexing::Grid(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    #[serde(default)]
    pub gate_family: Option<GateFamily>,
    #[serde(default = "default_multiplexing")]
    pub multiplexing: Multiplexing,
    #[serde(default = "default_orders")]
    pub narma_orders: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default = "default_locals")]
    pub locals: LocalsFamily,
    #[serde(default)]
    pub series_length: Option<usize>,
    #[serde(default = "default_tau")]
    pub mg_tau: f64,
    #[serde(default = "default_washout")]
    pub reservoir_washout: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub arnoldi_steps: Option<usize>,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_onset")]
    pub onset_threshold: f64,
}

fn default_qubits() -> usize {
    6
}
fn default_multiplexing() -> Multiplexing {
    Multiplexing::One(5)
}
fn default_orders() -> Vec<usize> {
    vec![2, 4, 8, 12, 16]
}
fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}
fn default_locals() -> LocalsFamily {
    LocalsFamily::W
}
fn default_tau() -> f64 {
    17.0
}
fn default_washout() -> usize {
    100
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_ensemble() -> usize {
    1000
}
fn default_samples() -> usize {
    200
}
fn default_onset() -> f64 {
    1e-2
}

/// Validated configuration with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_qubits: usize,
    pub gate_family: GateFamily,
    pub multiplexing: Vec<usize>,
    pub narma_orders: Vec<usize>,
    pub seeds: Vec<u64>,
    pub output_path: Option<String>,
    pub locals: LocalsFamily,
    pub series_length: usize,
    pub mg_tau: f64,
    pub reservoir_washout: usize,
    pub train_fraction: f64,
    pub arnoldi_steps: usize,
    pub ensemble_size: usize,
    pub samples: usize,
    pub onset_threshold: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}:{line}: {field}: {message}")]
    Invalid { path: String, line: usize, field: &'static str, message: String },
}

struct Invalid(&'static str, String);

/// Read, parse and validate a config file for `experiment`.
pub fn load(path: &Path, experiment: Experiment, seed_base: u64) -> Result<ExperimentConfig, ConfigError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: display.clone(), source })?;
    parse(&text, &display, experiment, seed_base)
}

pub fn parse(text: &str, path: &str, experiment: Experiment, seed_base: u64) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    resolve(raw, experiment, seed_base).map_err(|Invalid(field, message)| ConfigError::Invalid {
        path: path.to_string(),
        line: line_of_key(text, field),
        field,
        message,
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// First line mentioning `"key"`, or line 1 when the key is absent.
fn line_of_key(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn resolve(raw: RawConfig, experiment: Experiment, seed_base: u64) -> Result<ExperimentConfig, Invalid> {
    if let Some(named) = raw.experiment {
        if named != experiment {
            return Err(Invalid("experiment", format!("config is for {named}, but {experiment} was requested")));
        }
    }
    let max_qubits = if experiment == Experiment::DesignGap { MAX_TRANSFER_QUBITS } else { MAX_QUBITS };
    if raw.n_qubits < 2 || raw.n_qubits % 2 != 0 || raw.n_qubits > max_qubits {
        return Err(Invalid("n_qubits", format!("must be even and in 2..={max_qubits}, got {}", raw.n_qubits)));
    }
    let gate_family = raw.gate_family.unwrap_or_else(|| experiment.default_family());
    match &gate_family {
        GateFamily::DualUnitary(grid) => {
            if grid.is_empty() {
                return Err(Invalid("gate_family", "e_p grid is empty".into()));
            }
            if let Some(bad) = grid.iter().find(|e| !(0.0..=MAX_ENTANGLING_POWER + 1e-12).contains(*e)) {
                return Err(Invalid("gate_family", format!("e_p {bad} outside [0, 2/3]")));
            }
        }
        GateFamily::Solvable(0) => return Err(Invalid("gate_family", "solvable gate count is zero".into())),
        _ => {}
    }
    let needs_du = matches!(
        experiment,
        Experiment::KrylovSaturation | Experiment::CoeffDeviation | Experiment::MixingValidation
    );
    if needs_du && !matches!(gate_family, GateFamily::DualUnitary(_)) {
        return Err(Invalid("gate_family", format!("{experiment} needs a dual_unitary e_p grid")));
    }
    if experiment == Experiment::SolvablePerformance && !matches!(gate_family, GateFamily::Solvable(_)) {
        return Err(Invalid("gate_family", "solvable_performance needs a solvable gate count".into()));
    }
    let multiplexing = raw.multiplexing.values();
    if multiplexing.is_empty() || multiplexing.contains(&0) {
        return Err(Invalid("multiplexing", "need at least one positive value".into()));
    }
    if raw.narma_orders.is_empty() || raw.narma_orders.contains(&0) {
        return Err(Invalid("narma_orders", "need at least one positive order".into()));
    }
    if raw.seeds.is_empty() {
        return Err(Invalid("seeds", "seed list is empty".into()));
    }
    if raw.seeds.iter().collect::<BTreeSet<_>>().len() != raw.seeds.len() {
        return Err(Invalid("seeds", "seeds must be distinct".into()));
    }
    let seeds = raw
        .seeds
        .iter()
        .map(|s| s.checked_add(seed_base))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Invalid("seeds", format!("seed + seed base {seed_base} overflows")))?;
    if !(raw.train_fraction > 0.0 && raw.train_fraction < 1.0) {
        return Err(Invalid("train_fraction", "must lie strictly between 0 and 1".into()));
    }
    if !(raw.mg_tau > 0.0) {
        return Err(Invalid("mg_tau", "delay must be positive".into()));
    }
    if raw.ensemble_size == 0 {
        return Err(Invalid("ensemble_size", "must be positive".into()));
    }
    if raw.samples < 2 {
        return Err(Invalid("samples", "need at least two samples".into()));
    }
    if !(raw.onset_threshold > 0.0) {
        return Err(Invalid("onset_threshold", "must be positive".into()));
    }
    let series_length = raw.series_length.unwrap_or(match experiment {
        Experiment::NarmaSweep => 5000,
        _ => 3000,
    });
    if series_length <= raw.reservoir_washout + 10 {
        return Err(Invalid("series_length", "too short for the reservoir washout".into()));
    }
    let arnoldi_steps = raw.arnoldi_steps.unwrap_or(match experiment {
        Experiment::KrylovSaturation => 1500,
        _ => 100,
    });
    if arnoldi_steps == 0 {
        return Err(Invalid("arnoldi_steps", "must be positive".into()));
    }
    Ok(ExperimentConfig {
        experiment,
        n_qubits: raw.n_qubits,
        gate_family,
        multiplexing,
        narma_orders: raw.narma_orders,
        seeds,
        output_path: raw.output_path,
        locals: raw.locals,
        series_length,
        mg_tau: raw.mg_tau,
        reservoir_washout: raw.reservoir_washout,
        train_fraction: raw.train_fraction,
        arnoldi_steps,
        ensemble_size: raw.ensemble_size,
        samples: raw.samples,
        onset_threshold: raw.onset_threshold,
    })
}
