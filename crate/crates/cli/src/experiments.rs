use std::collections::BTreeMap;

use anyhow::Result;
use qrc_core::circuit::{pauli_z, BrickwallSpec, LocalsPolicy};
use qrc_core::datasets::{mackey_glass, narma_series, DEFAULT_WASHOUT};
use qrc_core::ergodicity::{design_transfer, max_mixing_gate, mean_lambda1, min_lambda1};
use qrc_core::gates::{dual_unitary_kernel, solvable_gates, Gate, GateOrigin};
use qrc_core::krylov::{arnoldi_iterate, complexity_curve, deviation_onset, superop_coeffs, ArnoldiConfig};
use qrc_core::linalg::rng_from_seed;
use qrc_core::reservoir::{
    drop_washout, features_for_inputs, fit_and_score, overlap_statistics, run_task, ReservoirConfig,
};
use qrc_core::stats::{mean, std_dev};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, GateFamily};
use crate::output::{col, Cell, Column, Table};

/// Main table plus an optional per-point summary over seeds.
pub struct Outcome {
    pub table: Table,
    pub summary: Option<Table>,
}

pub fn run(cfg: &ExperimentConfig) -> Outcome {
    match cfg.experiment {
        Experiment::NarmaSweep => narma_sweep(cfg),
        Experiment::MgSweep => mg_sweep(cfg),
        Experiment::SolvablePerformance => mg_sweep(cfg),
        Experiment::KrylovSaturation => single(krylov_saturation(cfg)),
        Experiment::CoeffDeviation => single(coeff_deviation(cfg)),
        Experiment::OverlapSaturation => single(overlap_saturation(cfg)),
        Experiment::MixingValidation => single(mixing_validation(cfg)),
        Experiment::DesignGap => single(design_gap(cfg)),
    }
}

fn single(table: Table) -> Outcome {
    Outcome { table, summary: None }
}

/// Evaluate `f` over `tasks` on the worker pool, keeping task order.
fn gather<T: Sync, F>(tasks: &[T], f: F) -> Vec<Vec<Cell>>
where
    F: Fn(&T) -> Vec<Vec<Cell>> + Sync + Send,
{
    tasks.par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

/// Key cells, blanks up to `width - 1`, then the error as status.
fn error_row(mut keys: Vec<Cell>, width: usize, err: &anyhow::Error) -> Vec<Cell> {
    keys.resize(width - 1, Cell::Empty);
    keys.push(format!("error: {err}").into());
    keys
}

fn ok() -> Cell {
    "ok".into()
}

const STATUS: Column = col("status", "", "ok, or error: <message> for a failed grid point");
const SEED: Column = col("seed", "", "seed that produced the row");

#[derive(Debug, Clone)]
enum Point {
    Haar,
    DualUnitary(f64),
    Solvable(Gate),
}

impl Point {
    fn family(&self) -> &'static str {
        match self {
            Point::Haar => "haar_two_qubit",
            Point::DualUnitary(_) => "dual_unitary",
            Point::Solvable(_) => "solvable",
        }
    }

    /// Brickwall for `seed`: a seeded Haar gate, or the point's gate dressed with seeded locals.
    fn circuit(&self, cfg: &ExperimentConfig, seed: u64) -> Result<(BrickwallSpec, Gate)> {
        let (gate, policy) = match self {
            Point::Haar => (Gate::haar(seed), LocalsPolicy::None),
            Point::DualUnitary(e_p) => {
                (dual_unitary_kernel(*e_p)?, LocalsPolicy::FloquetFixed(cfg.locals.draw(&mut rng_from_seed(seed))))
            }
            Point::Solvable(g) => (g.clone(), LocalsPolicy::FloquetFixed(cfg.locals.draw(&mut rng_from_seed(seed)))),
        };
        let shown = match &policy {
            LocalsPolicy::FloquetFixed(l) => gate.dressed(l.clone()),
            _ => gate.clone(),
        };
        Ok((BrickwallSpec::new(cfg.n_qubits, gate, policy)?, shown))
    }
}

/// Grid points; solvable gate sets are drawn from the first seed.
fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    match &cfg.gate_family {
        GateFamily::HaarTwoQubit => vec![Point::Haar],
        GateFamily::DualUnitary(grid) => grid.iter().map(|&e| Point::DualUnitary(e)).collect(),
        GateFamily::Solvable(count) => {
            solvable_gates(*count, &mut rng_from_seed(cfg.seeds[0])).into_iter().map(Point::Solvable).collect()
        }
    }
}

fn grid(cfg: &ExperimentConfig) -> Vec<f64> {
    match &cfg.gate_family {
        GateFamily::DualUnitary(grid) => grid.clone(),
        _ => Vec::new(),
    }
}

const POINT_COLUMNS: [Column; 4] = [
    col("family", "", "gate family"),
    col("point", "", "index into the gate grid"),
    col("e_p", "", "entangling power of the gate used"),
    col("g_t", "", "gate typicality of the gate used"),
];

fn point_cells(p: &Point, index: usize, gate: Option<&Gate>) -> Vec<Cell> {
    let inv = gate.map(|g| g.invariants());
    let e_p = match (p, inv) {
        (_, Some(i)) => Some(i.e_p),
        (Point::DualUnitary(e), None) => Some(*e),
        _ => None,
    };
    vec![p.family().into(), index.into(), e_p.into(), inv.map(|i| i.g_t).into()]
}

fn reservoir_config(spec: BrickwallSpec, v: usize, cfg: &ExperimentConfig) -> ReservoirConfig {
    let mut rc = ReservoirConfig::new(spec, v);
    rc.reservoir_washout = cfg.reservoir_washout;
    rc.train_fraction = cfg.train_fraction;
    rc
}

fn summarize(table: &Table, keys: &[&'static str], value: &'static str) -> Table {
    let idx = |name: &str| table.columns.iter().position(|c| c.name == name).expect("known column");
    let key_idx: Vec<usize> = keys.iter().map(|k| idx(k)).collect();
    let (vi, si, st) = (idx(value), idx("seed"), idx("status"));
    let mut groups: BTreeMap<Vec<String>, (Vec<f64>, Vec<String>)> = BTreeMap::new();
    let mut order = Vec::new();
    for row in &table.rows {
        let key: Vec<String> = key_idx.iter().map(|&i| row[i].render()).collect();
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        if let (Cell::Float(v), Cell::Text(s)) = (&row[vi], &row[st]) {
            if s == "ok" {
                entry.0.push(*v);
                entry.1.push(row[si].render());
            }
        }
    }
    let mut columns: Vec<Column> = key_idx.iter().map(|&i| table.columns[i].clone()).collect();
    columns.extend([
        col("mean_test_mse", "target units squared", "mean test MSE over successful seeds"),
        col("std_test_mse", "target units squared", "sample standard deviation over seeds"),
        col("n_seeds", "", "number of successful seeds"),
        col("seeds", "", "semicolon-separated seeds behind the mean"),
    ]);
    let mut out = Table::new(columns);
    for key in order {
        let (vals, seeds) = &groups[&key];
        let mut row: Vec<Cell> = key.into_iter().map(Cell::Text).collect();
        let (m, s) = match vals.len() {
            0 => (None, None),
            1 => (Some(vals[0]), None),
            _ => (Some(mean(vals)), Some(std_dev(vals))),
        };
        row.extend([m.into(), s.into(), vals.len().into(), seeds.join(";").into()]);
        out.push(row);
    }
    out
}

fn narma_sweep(cfg: &ExperimentConfig) -> Outcome {
    let mut columns = POINT_COLUMNS.to_vec();
    columns.extend([
        col("v", "", "multiplexing: circuit steps per input"),
        col("order", "", "NARMA order"),
        SEED,
        col("train_mse", "target units squared", "training MSE"),
        col("test_mse", "target units squared", "held-out MSE on the final 20%"),
        STATUS,
    ]);
    let width = columns.len();
    let pts = points(cfg);
    let tasks: Vec<(usize, usize, u64)> = (0..pts.len())
        .flat_map(|p| cfg.multiplexing.iter().flat_map(move |&v| cfg.seeds.iter().map(move |&s| (p, v, s))))
        .collect();
    let rows = gather(&tasks, |&(p, v, seed)| {
        let point = &pts[p];
        let key = |gate: Option<&Gate>, order: Option<usize>| {
            let mut k = point_cells(point, p, gate);
            k.extend([v.into(), order.into(), seed.into()]);
            k
        };
        let setup = || -> Result<_> {
            let (spec, gate) = point.circuit(cfg, seed)?;
            let rc = reservoir_config(spec, v, cfg);
            let drive = narma_series(cfg.narma_orders[0], cfg.series_length + DEFAULT_WASHOUT, DEFAULT_WASHOUT)?;
            Ok((features_for_inputs(&drive.inputs, &rc, seed)?, gate))
        };
        let (features, gate) = match setup() {
            Ok(x) => x,
            Err(e) => return vec![error_row(key(None, None), width, &e)],
        };
        cfg.narma_orders
            .iter()
            .map(|&order| {
                let score = narma_series(order, cfg.series_length + DEFAULT_WASHOUT, DEFAULT_WASHOUT)
                    .map_err(anyhow::Error::from)
                    .and_then(|s| {
                        let run = drop_washout(features.clone(), &s.targets, cfg.reservoir_washout);
                        Ok(fit_and_score(&run, cfg.train_fraction)?)
                    });
                let mut row = key(Some(&gate), Some(order));
                match score {
                    Ok(s) => {
                        row.extend([s.train_mse.into(), s.test_mse.into(), ok()]);
                        row
                    }
                    Err(e) => error_row(row, width, &e),
                }
            })
            .collect()
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    let summary = summarize(&table, &["family", "point", "v", "order"], "test_mse");
    Outcome { table, summary: Some(summary) }
}

/// Mackey-Glass sweep; with a solvable family this is the solvable-gate experiment.
fn mg_sweep(cfg: &ExperimentConfig) -> Outcome {
    let mut columns = POINT_COLUMNS.to_vec();
    columns.extend([
        col("alpha", "rad", "Cartan angle (solvable gates only)"),
        col("beta", "rad", "Cartan angle (solvable gates only)"),
        col("gamma", "rad", "Cartan angle (solvable gates only)"),
        col("v", "", "multiplexing: circuit steps per input"),
        SEED,
        col("train_mse", "target units squared", "training MSE"),
        col("test_mse", "target units squared", "held-out MSE on the final 20%"),
        STATUS,
    ]);
    let width = columns.len();
    let pts = points(cfg);
    let tasks: Vec<(usize, usize, u64)> = (0..pts.len())
        .flat_map(|p| cfg.multiplexing.iter().flat_map(move |&v| cfg.seeds.iter().map(move |&s| (p, v, s))))
        .collect();
    let rows = gather(&tasks, |&(p, v, seed)| {
        let point = &pts[p];
        let angles: [Option<f64>; 3] = match point {
            Point::Solvable(g) => match g.origin() {
                GateOrigin::Cartan(c) => c.as_array().map(Some),
                _ => [None; 3],
            },
            _ => [None; 3],
        };
        let key = |gate: Option<&Gate>| {
            let mut k = point_cells(point, p, gate);
            k.extend(angles.map(Cell::from));
            k.extend([v.into(), seed.into()]);
            k
        };
        let result = (|| -> Result<_> {
            let (spec, gate) = point.circuit(cfg, seed)?;
            let rc = reservoir_config(spec, v, cfg);
            let series = mackey_glass(cfg.series_length, cfg.mg_tau, seed)?;
            Ok((run_task(&series, &rc, seed)?, gate))
        })();
        vec![match result {
            Ok((s, gate)) => {
                let mut row = key(Some(&gate));
                row.extend([s.train_mse.into(), s.test_mse.into(), ok()]);
                row
            }
            Err(e) => error_row(key(None), width, &e),
        }]
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    let summary = summarize(&table, &["family", "point", "v"], "test_mse");
    Outcome { table, summary: Some(summary) }
}

fn krylov_saturation(cfg: &ExperimentConfig) -> Table {
    let columns = vec![
        col("e_p", "", "target entangling power"),
        SEED,
        col("mu1", "", "mixing rate of the chosen dressing"),
        col("steps", "", "Arnoldi steps taken"),
        col("terminated_at", "", "step at which the Krylov space closed, if it did"),
        col("saturation", "basis index", "mean Krylov complexity over the final 20% of steps"),
        col("final_complexity", "basis index", "Krylov complexity at the last step"),
        STATUS,
    ];
    let width = columns.len();
    let tasks = grid_seed_tasks(cfg);
    let rows = gather(&tasks, |&(e_p, seed)| {
        let result = (|| -> Result<_> {
            let mm = max_mixing_gate(e_p, cfg.ensemble_size, seed)?;
            let layer = BrickwallSpec::new(cfg.n_qubits, mm.gate, LocalsPolicy::None)?.circuit().next_layer();
            let rec = arnoldi_iterate(&layer, &pauli_z(cfg.n_qubits, 0), &ArnoldiConfig::with_steps(cfg.arnoldi_steps))?;
            let (curve, sat) = complexity_curve(&rec);
            Ok((mm.mu1_max, rec.steps(), rec.terminated_at, sat, curve.last().copied()))
        })();
        vec![match result {
            Ok((mu, steps, term, sat, last)) => vec![
                e_p.into(),
                seed.into(),
                mu.into(),
                steps.into(),
                term.into(),
                sat.into(),
                last.into(),
                ok(),
            ],
            Err(e) => error_row(vec![e_p.into(), seed.into()], width, &e),
        }]
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    table
}

fn grid_seed_tasks(cfg: &ExperimentConfig) -> Vec<(f64, u64)> {
    grid(cfg).into_iter().flat_map(|e| cfg.seeds.iter().map(move |&s| (e, s))).collect()
}

fn coeff_deviation(cfg: &ExperimentConfig) -> Table {
    let columns = vec![
        col("e_p", "", "target entangling power"),
        SEED,
        col("step", "", "Krylov index n"),
        col("arnoldi_b", "", "Arnoldi residual norm at step n"),
        col("b_abs", "", "|<O_n|U O_(n-1)>|"),
        col("a_abs", "", "|<O_n|U O_n>|"),
        col("c_abs", "", "|<O_(n-1)|U O_n>|"),
        col("onset", "", "first step with |arnoldi_b - 1| above onset_threshold"),
        STATUS,
    ];
    let width = columns.len();
    let tasks = grid_seed_tasks(cfg);
    let rows = gather(&tasks, |&(e_p, seed)| {
        let result = (|| -> Result<_> {
            let mm = max_mixing_gate(e_p, cfg.ensemble_size, seed)?;
            let layer = BrickwallSpec::new(cfg.n_qubits, mm.gate, LocalsPolicy::None)?.circuit().next_layer();
            let rec = arnoldi_iterate(&layer, &pauli_z(cfg.n_qubits, 0), &ArnoldiConfig::with_steps(cfg.arnoldi_steps))?;
            let co = superop_coeffs(&rec, &layer);
            Ok((rec, co))
        })();
        match result {
            Ok((rec, co)) => {
                let onset = deviation_onset(&rec.arnoldi_b, cfg.onset_threshold);
                (1..rec.arnoldi_b.len())
                    .map(|n| {
                        let get = |v: &[qrc_core::C64]| v.get(n).map(|z| z.norm());
                        vec![
                            e_p.into(),
                            seed.into(),
                            n.into(),
                            rec.arnoldi_b[n].into(),
                            get(&co.b).into(),
                            get(&co.a).into(),
                            get(&co.c).into(),
                            onset.into(),
                            ok(),
                        ]
                    })
                    .collect()
            }
            Err(e) => vec![error_row(vec![e_p.into(), seed.into()], width, &e)],
        }
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    table
}

fn overlap_saturation(cfg: &ExperimentConfig) -> Table {
    let columns = vec![
        col("e_p", "", "target entangling power"),
        SEED,
        col("v", "", "circuit steps after the single injection"),
        col("mean_overlap", "", "mean pairwise tr(rho_i rho_j)"),
        col("haar_value", "", "1/2^N"),
        STATUS,
    ];
    let width = columns.len();
    let v_max = *cfg.multiplexing.iter().max().expect("validated nonempty");
    let haar = 1.0 / (1u64 << cfg.n_qubits) as f64;
    let tasks = grid_seed_tasks(cfg);
    let rows = gather(&tasks, |&(e_p, seed)| {
        let result = (|| -> Result<_> {
            let policy = LocalsPolicy::ResamplePerApplication { family: cfg.locals, seed };
            let spec = BrickwallSpec::new(cfg.n_qubits, dual_unitary_kernel(e_p)?, policy)?;
            Ok(overlap_statistics(&ReservoirConfig::new(spec, 1), cfg.samples, v_max, seed)?)
        })();
        match result {
            Ok(curve) => curve
                .into_iter()
                .enumerate()
                .map(|(k, o)| vec![e_p.into(), seed.into(), (k + 1).into(), o.into(), haar.into(), ok()])
                .collect(),
            Err(e) => vec![error_row(vec![e_p.into(), seed.into()], width, &e)],
        }
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    table
}

fn mixing_validation(cfg: &ExperimentConfig) -> Table {
    let columns = vec![
        col("e_p", "", "target entangling power"),
        SEED,
        col("mu1_max", "", "largest mixing rate in the dressing ensemble"),
        col("mu1_formula", "", "-(1/3) ln(1 - 3 e_p / 2)"),
        col("relative_gap", "", "|mu1_max - mu1_formula| / mu1_formula"),
        col("mean_lambda1", "", "mean |lambda_1| over `samples` random dressings"),
        col("min_lambda1", "", "smallest attainable |lambda_1| at this e_p"),
        STATUS,
    ];
    let width = columns.len();
    let tasks = grid_seed_tasks(cfg);
    let rows = gather(&tasks, |&(e_p, seed)| {
        let result = (|| -> Result<_> {
            let mm = max_mixing_gate(e_p, cfg.ensemble_size, seed)?;
            let mean = mean_lambda1(e_p, cfg.samples, &mut rng_from_seed(seed))?;
            Ok((mm, mean))
        })();
        vec![match result {
            Ok((mm, mean)) => vec![
                e_p.into(),
                seed.into(),
                mm.mu1_max.into(),
                mm.mu1_formula.into(),
                ((mm.mu1_max - mm.mu1_formula).abs() / mm.mu1_formula).into(),
                mean.into(),
                min_lambda1(e_p).into(),
                ok(),
            ],
            Err(e) => error_row(vec![e_p.into(), seed.into()], width, &e),
        }]
    });
    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    table
}

fn design_gap(cfg: &ExperimentConfig) -> Table {
    let columns = vec![
        col("family", "", "gate family"),
        SEED,
        col("gate_index", "", "index within the seed's gate set"),
        col("e_p", "", "entangling power"),
        col("g_t", "", "gate typicality"),
        col("lambda3", "", "third-largest transfer-matrix eigenvalue magnitude"),
        STATUS,
    ];
    let width = columns.len();
    let n = cfg.n_qubits;
    let rows = gather(&cfg.seeds, |&seed| {
        let mut rng = rng_from_seed(seed);
        let gates: Vec<(f64, f64)> = match &cfg.gate_family {
            GateFamily::Solvable(count) => {
                solvable_gates(*count, &mut rng).iter().map(|g| g.invariants()).map(|i| (i.e_p, i.g_t)).collect()
            }
            GateFamily::DualUnitary(grid) => grid
                .iter()
                .map(|&e| dual_unitary_kernel(e).map(|g| g.invariants()).map(|i| (i.e_p, i.g_t)).unwrap_or((e, f64::NAN)))
                .collect(),
            GateFamily::HaarTwoQubit => (0..cfg.samples)
                .map(|k| Gate::haar(seed.wrapping_mul(1_000_003).wrapping_add(k as u64)).invariants())
                .map(|i| (i.e_p, i.g_t))
                .collect(),
        };
        let family = match &cfg.gate_family {
            GateFamily::Solvable(_) => "solvable",
            GateFamily::DualUnitary(_) => "dual_unitary",
            GateFamily::HaarTwoQubit => "haar_two_qubit",
        };
        gates
            .into_iter()
            .enumerate()
            .map(|(k, (e_p, g_t))| {
                let keys = vec![family.into(), seed.into(), k.into(), e_p.into(), g_t.into()];
                match design_transfer(n, e_p, g_t) {
                    Ok(r) => {
                        let mut row = keys;
                        row.extend([r.lambda3_abs.into(), ok()]);
                        row
                    }
                    Err(e) => error_row(keys, width, &anyhow::Error::from(e)),
                }
            })
            .collect()
    });
    let mut table = Table::new(columns);
    if let Ok(h) = design_transfer(n, 0.6, 0.5) {
        table.notes.push(("haar_lambda3".into(), h.lambda3_abs.to_string()));
    }
    rows.into_iter().for_each(|r| table.push(r));
    table
}
