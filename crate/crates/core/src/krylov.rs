//! Arnoldi iteration in operator space under the Heisenberg map
//! `O ↦ U† O U`, with Krylov complexity, the superoperator coefficients and
//! Krylov observability.
//!
//! Operators are `2^N × 2^N` matrices compared with the Hilbert–Schmidt inner
//! product `⟨A, B⟩ = tr(A† B)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::circuit::Propagator;
use crate::error::{QrcError, Result};
use crate::linalg::{hs_inner, hs_norm, sub_scaled, CMatrix, C64};

/// Largest Krylov dimension reachable from a traceless operator on `n` qubits.
pub fn krylov_dimension(n_qubits: usize) -> usize {
    let d2 = 1usize << (2 * n_qubits);
    d2 - (1 << n_qubits) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArnoldiConfig {
    /// Number of evolution steps after the seed operator.
    pub max_steps: usize,
    /// Stop once the residual norm `b_t` falls below this.
    pub tolerance: f64,
    /// Log a warning when the second orthogonalisation pass removes more than
    /// this fraction of the residual.
    pub warn_correction: f64,
}

impl ArnoldiConfig {
    pub fn with_steps(max_steps: usize) -> Self {
        Self {
            max_steps,
            ..Self::default()
        }
    }
}

impl Default for ArnoldiConfig {
    fn default() -> Self {
        Self {
            max_steps: 200,
            tolerance: 1e-8,
            warn_correction: 1e-3,
        }
    }
}

/// Output of one Arnoldi run.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovRecord {
    /// Orthonormal basis operators, `basis[0]` being the normalised seed.
    pub basis: Vec<CMatrix>,
    /// Residual norms of the normalised evolved operators; `arnoldi_b[0] = 1`.
    pub arnoldi_b: Vec<f64>,
    /// `K_C^t` for `t = 0..=steps`.
    pub complexity: Vec<f64>,
    /// Size of the second orthogonalisation pass at each step (0 when skipped).
    pub reorth_correction: Vec<f64>,
    /// Step at which the residual vanished, if it did.
    pub terminated_at: Option<usize>,
}

impl KrylovRecord {
    pub fn steps(&self) -> usize {
        self.complexity.len() - 1
    }
}

fn project_out(basis: &[CMatrix], v: &mut [C64], coeffs: &mut [C64]) {
    for (b, c) in basis.iter().zip(coeffs.iter_mut()) {
        *c = hs_inner(b.as_slice(), v);
    }
    for (b, &c) in basis.iter().zip(coeffs.iter()) {
        sub_scaled(v, c, b.as_slice());
    }
}

/// Arnoldi basis of the sequence `O_0, U†O_0U, U†²O_0U², …`.
pub fn arnoldi_iterate<P: Propagator + ?Sized>(
    prop: &P,
    o0: &CMatrix,
    cfg: &ArnoldiConfig,
) -> Result<KrylovRecord> {
    if o0.nrows() != prop.dim() || o0.ncols() != prop.dim() {
        return Err(QrcError::DimensionMismatch {
            expected: prop.dim(),
            found: o0.nrows(),
        });
    }
    let norm0 = hs_norm(o0.as_slice());
    if norm0 == 0.0 || !norm0.is_finite() {
        return Err(QrcError::ZeroOperator);
    }
    let seed = o0 / C64::new(norm0, 0.0);
    let mut evolved = seed.clone();
    let mut basis = vec![seed];
    let mut arnoldi_b = vec![1.0];
    let mut complexity = vec![0.0];
    let mut reorth = vec![0.0];
    let mut terminated_at = None;
    let mut coeffs = Vec::with_capacity(cfg.max_steps + 1);
    let mut extra = Vec::with_capacity(cfg.max_steps + 1);

    for t in 1..=cfg.max_steps {
        prop.heisenberg(&mut evolved);
        let before = hs_norm(evolved.as_slice());
        let mut resid = evolved.clone();
        coeffs.clear();
        coeffs.resize(basis.len(), C64::new(0.0, 0.0));
        project_out(&basis, resid.as_mut_slice(), &mut coeffs);
        let mut b = hs_norm(resid.as_slice());
        let mut correction = 0.0;
        if b < before * std::f64::consts::FRAC_1_SQRT_2 {
            extra.clear();
            extra.resize(basis.len(), C64::new(0.0, 0.0));
            project_out(&basis, resid.as_mut_slice(), &mut extra);
            for (c, e) in coeffs.iter_mut().zip(&extra) {
                *c += e;
            }
            correction = extra.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
            b = hs_norm(resid.as_slice());
            if correction > cfg.warn_correction * b.max(cfg.tolerance) {
                warn!("step {t}: reorthogonalisation removed {correction:.3e} against a residual of {b:.3e}");
            }
        }
        let mut kc: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum();
        arnoldi_b.push(b);
        reorth.push(correction);
        if b < cfg.tolerance {
            complexity.push(kc / before.powi(2));
            terminated_at = Some(t);
            break;
        }
        kc += basis.len() as f64 * b * b;
        complexity.push(kc / before.powi(2));
        resid /= C64::new(b, 0.0);
        basis.push(resid);
    }
    Ok(KrylovRecord {
        basis,
        arnoldi_b,
        complexity,
        reorth_correction: reorth,
        terminated_at,
    })
}

/// `(a_n, b_n, c_n)` of the superoperator in the Krylov basis; `b_0` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperopCoeffs {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub c: Vec<C64>,
}

pub fn superop_coeffs<P: Propagator + ?Sized>(record: &KrylovRecord, prop: &P) -> SuperopCoeffs {
    let k = record.basis.len();
    let zero = C64::new(0.0, 0.0);
    let mut out = SuperopCoeffs {
        a: vec![zero; k],
        b: vec![zero; k],
        c: vec![zero; k],
    };
    let o0 = record.basis[0].as_slice();
    for (n, on) in record.basis.iter().enumerate() {
        let mut image = on.clone();
        prop.heisenberg(&mut image);
        out.a[n] = hs_inner(on.as_slice(), image.as_slice());
        out.c[n] = hs_inner(o0, image.as_slice());
        if let Some(next) = record.basis.get(n + 1) {
            out.b[n + 1] = hs_inner(next.as_slice(), image.as_slice());
        }
    }
    out
}

/// First step `t >= 1` with `|b_t - 1| > threshold`.
pub fn deviation_onset(arnoldi_b: &[f64], threshold: f64) -> Option<usize> {
    arnoldi_b
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, b)| (*b - 1.0).abs() > threshold)
        .map(|(t, _)| t)
}

/// Complexity curve and its mean over the final 20% of steps.
pub fn complexity_curve(record: &KrylovRecord) -> (Vec<f64>, f64) {
    let k = record.complexity.clone();
    let steps = k.len() - 1;
    let window = (steps as f64 * 0.2).ceil().max(1.0) as usize;
    let tail = &k[k.len() - window.min(k.len())..];
    let sat = tail.iter().sum::<f64>() / tail.len() as f64;
    (k, sat)
}

/// `O, U†OU, …` for `steps` steps (so `steps + 1` operators).
pub fn evolved_sequence<P: Propagator + ?Sized>(prop: &P, o0: &CMatrix, steps: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut cur = o0.clone();
    out.push(cur.clone());
    for _ in 0..steps {
        prop.heisenberg(&mut cur);
        out.push(cur.clone());
    }
    out
}

/// Dimension of the span of `ops`, by pivoted Gram–Schmidt with relative
/// threshold `tol`.
pub fn operator_rank(ops: &[CMatrix], tol: f64) -> usize {
    let scale = ops.iter().map(|o| hs_norm(o.as_slice())).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut q: Vec<Vec<C64>> = Vec::new();
    let mut rest: Vec<Vec<C64>> = ops.iter().map(|o| o.as_slice().to_vec()).collect();
    loop {
        let (best, norm) = rest
            .iter()
            .enumerate()
            .map(|(i, v)| (i, hs_norm(v)))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || norm <= tol * scale {
            return q.len();
        }
        let mut pivot = rest.swap_remove(best);
        pivot.iter_mut().for_each(|z| *z /= norm);
        for v in rest.iter_mut() {
            let c = hs_inner(&pivot, v);
            sub_scaled(v, c, &pivot);
        }
        q.push(pivot);
    }
}

/// Normalised overlap `|⟨A, B⟩| / (‖A‖ ‖B‖)`.
pub fn operator_fidelity(a: &CMatrix, b: &CMatrix) -> f64 {
    let na = hs_norm(a.as_slice());
    let nb = hs_norm(b.as_slice());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    hs_inner(a.as_slice(), b.as_slice()).norm() / (na * nb)
}

/// `p_i` for one observable's time sequence.
pub fn observability_term(sequence: &[CMatrix], v: usize) -> f64 {
    if sequence.len() < 2 {
        return 0.0;
    }
    let r = v.min(operator_rank(sequence, 1e-10)).min(sequence.len() - 1);
    (1..=r)
        .map(|k| 1.0 - operator_fidelity(&sequence[k], &sequence[k - 1]))
        .sum()
}

/// Total observability `Σ_i p_i` over per-observable sequences.
pub fn krylov_observability(evolved_ops: &[Vec<CMatrix>], v: usize) -> f64 {
    evolved_ops.iter().map(|s| observability_term(s, v)).sum()
}
