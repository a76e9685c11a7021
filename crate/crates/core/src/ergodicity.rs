//! Closed-form ergodicity diagnostics for dual-unitary and solvable circuits:
//! the single-bond correlation map, its mixing rate, and the second-moment
//! transfer matrix restricted to the `{I, S}^{⊗N}` subspace.

use nalgebra::{DMatrix, Matrix4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QrcError, Result};
use crate::gates::{
    dual_unitarity_residual, dual_unitary_kernel, reshuffle, Gate, Locals, Reshuffle, MAX_ENTANGLING_POWER,
};
use crate::linalg::{eigenvalues, real_eigenvalues, rng_from_seed, to_dynamic, Mat4, C64};

/// Largest register accepted by the dense transfer-matrix eigensolve.
pub const MAX_TRANSFER_QUBITS: usize = 12;

/// Dual-unitarity tolerance applied before building the correlation map.
pub const DUAL_UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    /// Eigenvalues in descending magnitude.
    pub eigenvalues: Vec<C64>,
    pub lambda1_abs: f64,
    /// `-ln |λ_1|`.
    pub mu1: f64,
    /// Squared Frobenius norm of the map.
    pub norm_sq: f64,
    /// `Σ |λ_i|²`, equal to `norm_sq` only when the map is normal.
    pub eig_norm_sq: f64,
}

/// Correlation map `½ [U^{T2} (U^{T2})†]^{R2}` of a dual-unitary gate.
pub fn correlation_map(u: &Mat4) -> Mat4 {
    let t = reshuffle(u, Reshuffle::T2);
    reshuffle(&(t * t.adjoint()), Reshuffle::R2) * C64::new(0.5, 0.0)
}

pub fn m_plus(gate: &Gate) -> Result<MixingReport> {
    let u = gate.matrix();
    let residual = dual_unitarity_residual(u);
    if residual > DUAL_UNITARY_TOL {
        return Err(QrcError::NotDualUnitary { residual });
    }
    let m = correlation_map(u);
    let eig = eigenvalues(&to_dynamic(&m))?;
    let lambda1_abs = eig[1].norm();
    Ok(MixingReport {
        lambda1_abs,
        mu1: -lambda1_abs.ln(),
        norm_sq: m.iter().map(|z| z.norm_sqr()).sum(),
        eig_norm_sq: eig.iter().map(|z| z.norm_sqr()).sum(),
        eigenvalues: eig,
    })
}

/// `-(1/3) ln(1 - e_p / e_p^max)`, the largest mixing rate at fixed entangling power.
pub fn max_mixing_rate(e_p: f64) -> f64 {
    -(1.0 - e_p / MAX_ENTANGLING_POWER).ln() / 3.0
}

/// `[1 - e_p / e_p^max]^{1/3}`, the smallest `|λ_1|` at fixed entangling power.
pub fn min_lambda1(e_p: f64) -> f64 {
    (1.0 - e_p / MAX_ENTANGLING_POWER).cbrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMixing {
    pub gate: Gate,
    pub mu1_max: f64,
    pub mu1_formula: f64,
    pub e_p: f64,
}

/// Best-mixing `w`-dressing of the dual-unitary kernel at `e_p`, from
/// `ensemble_size` random dressings.
pub fn max_mixing_gate(e_p: f64, ensemble_size: usize, seed: u64) -> Result<MaxMixing> {
    if !(e_p > 0.0 && e_p <= MAX_ENTANGLING_POWER + 1e-12) {
        return Err(QrcError::Parameter {
            name: "e_p",
            value: e_p,
            reason: "target entangling power must lie in (0, 2/3]",
        });
    }
    if ensemble_size == 0 {
        return Err(QrcError::Parameter {
            name: "ensemble_size",
            value: 0.0,
            reason: "need at least one dressing",
        });
    }
    let kernel = dual_unitary_kernel(e_p)?;
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(Gate, f64)> = None;
    for _ in 0..ensemble_size {
        let g = kernel.dressed(Locals::random_w(&mut rng));
        let mu = m_plus(&g)?.mu1;
        if best.as_ref().is_none_or(|(_, b)| mu > *b) {
            best = Some((g, mu));
        }
    }
    let (gate, mu1_max) = best.expect("nonempty ensemble");
    Ok(MaxMixing {
        gate,
        mu1_max,
        mu1_formula: max_mixing_rate(e_p),
        e_p,
    })
}

/// Mean `|λ_1|` over `samples` random `w`-dressings of the kernel at `e_p`.
pub fn mean_lambda1<R: Rng + ?Sized>(e_p: f64, samples: usize, rng: &mut R) -> Result<f64> {
    let kernel = dual_unitary_kernel(e_p)?;
    let mut acc = 0.0;
    for _ in 0..samples {
        acc += m_plus(&kernel.dressed(Locals::random_w(rng)))?.lambda1_abs;
    }
    Ok(acc / samples as f64)
}

/// Least-squares `f` in `y ≈ f √(1 - e_p / e_p^max)` and the RMS residual.
pub fn fit_sqrt_law(points: &[(f64, f64)]) -> (f64, f64) {
    let xs: Vec<f64> = points.iter().map(|(e, _)| (1.0 - e / MAX_ENTANGLING_POWER).max(0.0).sqrt()).collect();
    let num: f64 = xs.iter().zip(points).map(|(x, (_, y))| x * y).sum();
    let den: f64 = xs.iter().map(|x| x * x).sum();
    let f = num / den;
    let rms = (xs.iter().zip(points).map(|(x, (_, y))| (y - f * x).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
    (f, rms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignGapReport {
    pub w: Matrix4<f64>,
    pub transfer_eigs: Vec<C64>,
    pub lambda3_abs: f64,
}

/// Averaged two-site operator in the `II, IS, SI, SS` basis.
pub fn design_w(e_p: f64, g_t: f64) -> Matrix4<f64> {
    let a = 2.0 / 3.0 * e_p;
    let b = 1.0 - 5.0 / 6.0 * e_p - g_t;
    let c = g_t - 5.0 / 6.0 * e_p;
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        a, b, c, a, //
        a, c, b, a, //
        0.0, 0.0, 0.0, 1.0,
    )
}

fn apply_left_real(m: &mut DMatrix<f64>, g: &Matrix4<f64>, n: usize, a: usize, b: usize) {
    let d = m.nrows();
    let (ma, mb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    let ncols = m.ncols();
    let data = m.as_mut_slice();
    for col in 0..ncols {
        let column = &mut data[col * d..(col + 1) * d];
        for base in (0..d).filter(|r| r & (ma | mb) == 0) {
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let x = idx.map(|i| column[i]);
            for (r, &i) in idx.iter().enumerate() {
                column[i] = (0..4).map(|k| g[(r, k)] * x[k]).sum();
            }
        }
    }
}

/// Brickwall transfer matrix `even · odd` built from `W` on every bond.
pub fn transfer_matrix(n_qubits: usize, w: &Matrix4<f64>) -> DMatrix<f64> {
    let d = 1 << n_qubits;
    let mut t = DMatrix::<f64>::identity(d, d);
    for (a, b) in crate::circuit::bonds(n_qubits) {
        apply_left_real(&mut t, w, n_qubits, a, b);
    }
    t
}

pub fn design_transfer(n_qubits: usize, e_p: f64, g_t: f64) -> Result<DesignGapReport> {
    if n_qubits < 2 || n_qubits % 2 != 0 {
        return Err(QrcError::OddQubitCount(n_qubits));
    }
    if n_qubits > MAX_TRANSFER_QUBITS {
        return Err(QrcError::DimensionOverflow {
            n_qubits,
            max: MAX_TRANSFER_QUBITS,
        });
    }
    if !(-1e-9..=MAX_ENTANGLING_POWER + 1e-9).contains(&e_p) {
        return Err(QrcError::Parameter {
            name: "e_p",
            value: e_p,
            reason: "entangling power must lie in [0, 2/3]",
        });
    }
    if !(-1e-9..=1.0 + 1e-9).contains(&g_t) {
        return Err(QrcError::Parameter {
            name: "g_t",
            value: g_t,
            reason: "gate typicality must lie in [0, 1]",
        });
    }
    let w = design_w(e_p, g_t);
    let eig = real_eigenvalues(&transfer_matrix(n_qubits, &w))?;
    Ok(DesignGapReport {
        w,
        lambda3_abs: eig[2].norm(),
        transfer_eigs: eig,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub e_p: f64,
    pub g_t: f64,
    pub lambda3: f64,
}

/// `|λ_3|` for each gate's invariants, sorted by entangling power.
pub fn solvable_gap_sweep(n_qubits: usize, gates: &[Gate]) -> Result<Vec<GapRow>> {
    let mut rows = gates
        .iter()
        .map(|g| {
            let inv = g.invariants();
            let e_p = inv.e_p.clamp(0.0, MAX_ENTANGLING_POWER);
            let g_t = inv.g_t.clamp(0.0, 1.0);
            design_transfer(n_qubits, e_p, g_t).map(|r| GapRow {
                e_p,
                g_t,
                lambda3: r.lambda3_abs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.e_p.total_cmp(&b.e_p));
    Ok(rows)
}
