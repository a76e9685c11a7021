//! Reservoir protocol: inject each input on qubit 0, run the brickwall `V`
//! times reading `(⟨Z_i⟩ + 1) / 2` after every step, then fit a linear
//! readout with the Moore–Penrose pseudoinverse.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::circuit::{BrickwallSpec, DensityMatrix};
use crate::datasets::TimeSeries;
use crate::error::{QrcError, Result};
use crate::linalg::{CMatrix, SeededRng, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    AllZeros,
    MaximallyMixed,
}

impl InitialState {
    pub fn build(self, n_qubits: usize) -> DensityMatrix {
        match self {
            InitialState::AllZeros => DensityMatrix::all_zeros(n_qubits),
            InitialState::MaximallyMixed => DensityMatrix::maximally_mixed(n_qubits),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirConfig {
    pub circuit: BrickwallSpec,
    pub multiplexing: usize,
    pub initial_state: InitialState,
    pub reservoir_washout: usize,
    pub bias_feature: bool,
    pub train_fraction: f64,
}

impl ReservoirConfig {
    pub fn new(circuit: BrickwallSpec, multiplexing: usize) -> Self {
        Self {
            circuit,
            multiplexing,
            initial_state: InitialState::AllZeros,
            reservoir_washout: 0,
            bias_feature: false,
            train_fraction: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.multiplexing == 0 {
            return Err(QrcError::Parameter {
                name: "multiplexing",
                value: 0.0,
                reason: "at least one circuit step per input is required",
            });
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(QrcError::Parameter {
                name: "train_fraction",
                value: self.train_fraction,
                reason: "must lie strictly between 0 and 1",
            });
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.circuit.n_qubits() * self.multiplexing + self.bias_feature as usize
    }
}

/// Replace qubit 0 by `√(1-s)|0⟩ + √s|1⟩`, keeping the reduced state of the rest.
pub fn inject(rho: &DensityMatrix, s: f64) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    inject_in_place(&mut out, s)?;
    Ok(out)
}

pub(crate) fn inject_in_place(rho: &mut DensityMatrix, s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(QrcError::InputOutOfRange(s));
    }
    let amp = [(1.0 - s).sqrt(), s.sqrt()];
    let h = rho.dim() / 2;
    let m = rho.matrix_mut();
    let rest = CMatrix::from_fn(h, h, |r, c| m[(r, c)] + m[(r + h, c + h)]);
    for (bi, ai) in amp.iter().enumerate() {
        for (bj, aj) in amp.iter().enumerate() {
            let w = C64::new(ai * aj, 0.0);
            m.view_mut((bi * h, bj * h), (h, h)).copy_from(&(&rest * w));
        }
    }
    Ok(())
}

/// Rescaled single-qubit `Z` expectations, `1` for `|0⟩` and `0` for `|1⟩`.
pub fn read_features(rho: &DensityMatrix) -> Vec<f64> {
    let n = rho.n_qubits();
    let mut z = vec![0.0; n];
    for r in 0..rho.dim() {
        let p = rho.matrix()[(r, r)].re;
        for (q, zq) in z.iter_mut().enumerate() {
            if r >> (n - 1 - q) & 1 == 0 {
                *zq += p;
            } else {
                *zq -= p;
            }
        }
    }
    z.into_iter().map(|v| ((v + 1.0) / 2.0).clamp(0.0, 1.0)).collect()
}

/// Readout features, one column per input and one row per (step, qubit) node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    n_qubits: usize,
    multiplexing: usize,
    bias: bool,
}

impl FeatureMatrix {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn multiplexing(&self) -> usize {
        self.multiplexing
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    pub fn n_features(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Row of qubit `q` (0-based) after multiplexing step `v` (1-based).
    pub fn row_index(&self, q: usize, v: usize) -> usize {
        (v - 1) * self.n_qubits + q
    }

    /// Column range `[start, end)` as a standalone matrix.
    pub fn columns(&self, start: usize, end: usize) -> DMatrix<f64> {
        self.data.columns(start, end - start).into_owned()
    }

    /// Rows `qubit,v,<time...>`; the bias row is labelled `bias,0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "qubit,v")?;
        for t in 0..self.n_samples() {
            write!(w, ",{t}")?;
        }
        writeln!(w)?;
        for r in 0..self.n_features() {
            if self.bias && r + 1 == self.n_features() {
                write!(w, "bias,0")?;
            } else {
                write!(w, "{},{}", r % self.n_qubits + 1, r / self.n_qubits + 1)?;
            }
            for t in 0..self.n_samples() {
                write!(w, ",{:e}", self.data[(r, t)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Features for `inputs`, before any reservoir washout.
pub fn features_for_inputs(inputs: &[f64], cfg: &ReservoirConfig, seed: u64) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let n = cfg.circuit.n_qubits();
    let v_count = cfg.multiplexing;
    let mut data = DMatrix::<f64>::zeros(cfg.n_features(), inputs.len());
    let mut circuit = cfg.circuit.with_seed(seed).circuit();
    let fixed = match cfg.circuit.policy() {
        crate::circuit::LocalsPolicy::ResamplePerApplication { .. } => None,
        _ => Some(circuit.next_layer()),
    };
    let mut rho = cfg.initial_state.build(n);
    for (k, &s) in inputs.iter().enumerate() {
        inject_in_place(&mut rho, s)?;
        for v in 0..v_count {
            match &fixed {
                Some(layer) => rho.evolve_with(layer),
                None => rho.evolve_with(&circuit.next_layer()),
            }
            for (q, z) in read_features(&rho).into_iter().enumerate() {
                data[(v * n + q, k)] = z;
            }
        }
        if cfg.bias_feature {
            data[(n * v_count, k)] = 1.0;
        }
    }
    Ok(FeatureMatrix {
        data,
        n_qubits: n,
        multiplexing: v_count,
        bias: cfg.bias_feature,
    })
}

/// Features and aligned targets after dropping the reservoir washout.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirRun {
    pub features: FeatureMatrix,
    pub targets: Vec<f64>,
}

pub fn run_reservoir(series: &TimeSeries, cfg: &ReservoirConfig, seed: u64) -> Result<ReservoirRun> {
    if series.is_empty() {
        return Err(QrcError::EmptyTrainingSet);
    }
    let full = features_for_inputs(&series.inputs, cfg, seed)?;
    Ok(drop_washout(full, &series.targets, cfg.reservoir_washout))
}

/// Drop the first `washout` columns and targets.
pub fn drop_washout(full: FeatureMatrix, targets: &[f64], washout: usize) -> ReservoirRun {
    let w = washout.min(full.n_samples());
    let data = full.data.columns(w, full.n_samples() - w).into_owned();
    ReservoirRun {
        features: FeatureMatrix { data, ..full },
        targets: targets[w..].to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
}

impl ReadoutModel {
    pub fn predict(&self, z: &DMatrix<f64>) -> Vec<f64> {
        (z.transpose() * DVector::from_column_slice(&self.weights)).iter().cloned().collect()
    }

    /// Weights as a bare JSON array.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.weights).expect("finite weights serialise")
    }
}

/// Minimum-norm least-squares weights for `z_train^T w ≈ y_train`, columns of
/// `z_train` being samples.
pub fn train_readout(z_train: &DMatrix<f64>, y_train: &[f64]) -> Result<ReadoutModel> {
    if z_train.ncols() == 0 || y_train.is_empty() {
        return Err(QrcError::EmptyTrainingSet);
    }
    if z_train.ncols() != y_train.len() {
        return Err(QrcError::DimensionMismatch {
            expected: z_train.ncols(),
            found: y_train.len(),
        });
    }
    let a = z_train.transpose();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * smax;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let y = DVector::from_column_slice(y_train);
    let mut w = DVector::<f64>::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(k).dot(&y) / s;
            w.axpy(coef, &vt.row(k).transpose(), 1.0);
        }
    }
    let weights: Vec<f64> = w.iter().cloned().collect();
    if weights.iter().any(|x| !x.is_finite()) {
        return Err(QrcError::NonFinite { step: 0 });
    }
    Ok(ReadoutModel { weights })
}

/// Mean squared prediction error.
pub fn evaluate(model: &ReadoutModel, z_eval: &DMatrix<f64>, y_eval: &[f64]) -> Result<f64> {
    if z_eval.ncols() == 0 || y_eval.is_empty() {
        return Err(QrcError::EmptyEvaluationSet);
    }
    if z_eval.ncols() != y_eval.len() {
        return Err(QrcError::DimensionMismatch {
            expected: z_eval.ncols(),
            found: y_eval.len(),
        });
    }
    if z_eval.nrows() != model.weights.len() {
        return Err(QrcError::DimensionMismatch {
            expected: model.weights.len(),
            found: z_eval.nrows(),
        });
    }
    let pred = model.predict(z_eval);
    Ok(mse(&pred, y_eval))
}

pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / target.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub train_mse: f64,
    pub test_mse: f64,
    pub model: ReadoutModel,
}

/// Chronological split, pseudoinverse fit on the head, MSE on the tail.
pub fn fit_and_score(run: &ReservoirRun, train_fraction: f64) -> Result<Score> {
    let n = run.features.n_samples();
    let split = ((n as f64) * train_fraction).round() as usize;
    let split = split.min(n);
    let z_train = run.features.columns(0, split);
    let z_test = run.features.columns(split, n);
    let model = train_readout(&z_train, &run.targets[..split])?;
    Ok(Score {
        train_mse: evaluate(&model, &z_train, &run.targets[..split])?,
        test_mse: evaluate(&model, &z_test, &run.targets[split..])?,
        model,
    })
}

/// Convenience wrapper: run the reservoir on `series` and score it.
pub fn run_task(series: &TimeSeries, cfg: &ReservoirConfig, seed: u64) -> Result<Score> {
    let run = run_reservoir(series, cfg, seed)?;
    fit_and_score(&run, cfg.train_fraction)
}

/// Mean pairwise `tr(ρ_i ρ_j)` over an ensemble of single-input runs, after
/// each multiplexing step `v = 1..=v_max`.
///
/// Each sample starts from the configured initial state, receives one uniform
/// random input and then evolves with its own circuit stream.
pub fn overlap_statistics(cfg: &ReservoirConfig, n_samples: usize, v_max: usize, seed: u64) -> Result<Vec<f64>> {
    if n_samples < 2 {
        return Err(QrcError::Parameter {
            name: "n_samples",
            value: n_samples as f64,
            reason: "pairwise statistics need at least two samples",
        });
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = cfg.circuit.n_qubits();
    let mut states = Vec::with_capacity(n_samples);
    let mut circuits = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let s: f64 = rng.random_range(0.0..1.0);
        let mut rho = cfg.initial_state.build(n);
        inject_in_place(&mut rho, s)?;
        states.push(rho);
        circuits.push(cfg.circuit.with_seed(rng.random()).circuit());
    }
    let mut out = Vec::with_capacity(v_max);
    for _ in 0..v_max {
        for (rho, c) in states.iter_mut().zip(circuits.iter_mut()) {
            rho.evolve_with(&c.next_layer());
        }
        out.push(mean_pairwise_overlap(&states));
    }
    Ok(out)
}

pub fn mean_pairwise_overlap(states: &[DensityMatrix]) -> f64 {
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            acc += states[i].overlap(&states[j]);
            pairs += 1;
        }
    }
    acc / pairs as f64
}
