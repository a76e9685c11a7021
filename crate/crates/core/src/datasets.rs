//! Benchmark series: NARMA with a three-sine input and the Mackey–Glass delay
//! equation integrated with forward Euler.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QrcError, Result};
use crate::linalg::rng_from_seed;

/// Default number of leading samples discarded by the generators.
pub const DEFAULT_WASHOUT: usize = 1000;

const NARMA_BOUND: f64 = 10.0;
const HEADROOM: f64 = 1.0 - 1e-6;

/// Paired inputs and targets, with the generator settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub meta: SeriesMeta,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// `k,s_k,y_k` rows preceded by a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "# generator={}", self.meta.generator)?;
        for (k, v) in &self.meta.params {
            write!(w, " {k}={v}")?;
        }
        if let Some(s) = self.meta.seed {
            write!(w, " seed={s}")?;
        }
        writeln!(w)?;
        writeln!(w, "k,s_k,y_k")?;
        for (k, (s, y)) in self.inputs.iter().zip(&self.targets).enumerate() {
            writeln!(w, "{k},{s:e},{y:e}")?;
        }
        Ok(())
    }
}

/// Three-sine NARMA drive, bounded in `[0, 0.2]`.
pub fn narma_input(k: usize) -> f64 {
    let t = k as f64 / 100.0;
    let s = (2.0 * PI * 2.11 * t).sin() * (2.0 * PI * 3.73 * t).sin() * (2.0 * PI * 4.11 * t).sin();
    0.1 * (s + 1.0)
}

/// NARMA-`order` response to an arbitrary drive. The first `order` outputs are zero.
pub fn narma_targets(inputs: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(QrcError::Parameter {
            name: "order",
            value: 0.0,
            reason: "NARMA order must be at least 1",
        });
    }
    let mut y = vec![0.0; inputs.len()];
    for n in order.saturating_sub(1)..inputs.len().saturating_sub(1) {
        let window: f64 = y[n + 1 - order..=n].iter().sum();
        let next = 0.3 * y[n] + 0.05 * y[n] * window + 1.5 * inputs[n + 1 - order] * inputs[n] + 0.1;
        if !next.is_finite() || next.abs() > NARMA_BOUND {
            return Err(QrcError::Divergence {
                step: n + 1,
                value: next.abs(),
            });
        }
        y[n + 1] = next;
    }
    Ok(y)
}

/// `length` samples of NARMA-`order`, of which the first `washout` are dropped.
pub fn narma_series(order: usize, length: usize, washout: usize) -> Result<TimeSeries> {
    if length <= washout {
        return Err(QrcError::Parameter {
            name: "length",
            value: length as f64,
            reason: "series length must exceed the washout",
        });
    }
    let u: Vec<f64> = (0..length).map(narma_input).collect();
    let y = narma_targets(&u, order)?;
    let mut params = BTreeMap::new();
    params.insert("order".into(), order as f64);
    params.insert("length".into(), length as f64);
    params.insert("washout".into(), washout as f64);
    Ok(TimeSeries {
        inputs: u[washout..].to_vec(),
        targets: y[washout..].to_vec(),
        meta: SeriesMeta {
            generator: "narma".into(),
            params,
            seed: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub beta: f64,
    pub gamma: f64,
    pub power: f64,
    pub dt: f64,
    pub tau: f64,
    pub washout: usize,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            power: 10.0,
            dt: 0.1,
            tau: 17.0,
            washout: DEFAULT_WASHOUT,
        }
    }
}

impl MackeyGlassParams {
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn delay_steps(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(QrcError::Parameter {
                name: "tau",
                value: self.tau,
                reason: "delay must be positive",
            });
        }
        if !(self.dt > 0.0) {
            return Err(QrcError::Parameter {
                name: "dt",
                value: self.dt,
                reason: "step must be positive",
            });
        }
        Ok(())
    }
}

/// Euler trajectory continuing `history` (whose last element is the present)
/// for `steps` further updates.
pub fn mackey_glass_trajectory(p: &MackeyGlassParams, history: &[f64], steps: usize) -> Result<Vec<f64>> {
    p.validate()?;
    let delay = p.delay_steps();
    if history.len() < delay + 1 {
        return Err(QrcError::Parameter {
            name: "history",
            value: history.len() as f64,
            reason: "history must cover the delay window",
        });
    }
    let mut x = Vec::with_capacity(history.len() + steps);
    x.extend_from_slice(history);
    for step in 0..steps {
        let t = x.len() - 1;
        let lag = x[t - delay];
        let next = x[t] + p.dt * (p.beta * lag / (1.0 + lag.powf(p.power)) - p.gamma * x[t]);
        if !next.is_finite() {
            return Err(QrcError::NonFinite { step });
        }
        x.push(next);
    }
    Ok(x)
}

/// One-step-ahead Mackey–Glass task of `length` pairs, min-max normalised.
pub fn mackey_glass(length: usize, tau: f64, seed: u64) -> Result<TimeSeries> {
    mackey_glass_with(&MackeyGlassParams::with_tau(tau), length, seed)
}

pub fn mackey_glass_with(p: &MackeyGlassParams, length: usize, seed: u64) -> Result<TimeSeries> {
    p.validate()?;
    if length == 0 {
        return Err(QrcError::Parameter {
            name: "length",
            value: 0.0,
            reason: "series must be nonempty",
        });
    }
    let delay = p.delay_steps();
    let mut rng = rng_from_seed(seed);
    let history: Vec<f64> = (0..=delay).map(|_| rng.random_range(1.2..=1.4)).collect();
    let x = mackey_glass_trajectory(p, &history, p.washout + length)?;
    let kept = &x[p.washout + delay..];
    debug_assert_eq!(kept.len(), length + 1);
    let (inputs, targets) = normalise_pairs(kept);
    let mut params = BTreeMap::new();
    params.insert("tau".into(), p.tau);
    params.insert("beta".into(), p.beta);
    params.insert("gamma".into(), p.gamma);
    params.insert("power".into(), p.power);
    params.insert("dt".into(), p.dt);
    params.insert("washout".into(), p.washout as f64);
    params.insert("length".into(), length as f64);
    Ok(TimeSeries {
        inputs,
        targets,
        meta: SeriesMeta {
            generator: "mackey_glass".into(),
            params,
            seed: Some(seed),
        },
    })
}

/// Map `x_t ↦ x_{t+1}` pairs into `[0, 1)` using the range of the inputs.
fn normalise_pairs(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() - 1;
    let (lo, hi) = x[..n]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = hi - lo;
    let scale = |v: f64| if span > 0.0 { (v - lo) / span * HEADROOM } else { 0.0 };
    (x[..n].iter().map(|&v| scale(v)).collect(), x[1..].iter().map(|&v| scale(v)).collect())
}
