//! Brickwall circuits on a ring of qubits and density-matrix evolution.
//!
//! Qubits are numbered `0..n` in code (site `q + 1` in the usual 1-based
//! labelling); qubit 0 is the most significant bit of a basis index. One
//! timestep applies the odd-bond sublayer `(0,1), (2,3), …` followed by the
//! even-bond sublayer `(1,2), …, (n-1, 0)`, the last being the wrap bond.

use nalgebra::Matrix2;
use rand::Rng;

use crate::error::{QrcError, Result};
use crate::gates::{Gate, Locals};
use crate::linalg::{rng_from_seed, unitarity_residual, CMatrix, Mat2, Mat4, SeededRng, C64, ZERO};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 10;

/// Distribution of freshly drawn local unitaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalsFamily {
    /// `w_local` with uniform angles.
    W,
    /// Single-qubit Haar unitaries.
    Haar,
}

impl LocalsFamily {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Locals {
        match self {
            LocalsFamily::W => Locals::random_w(rng),
            LocalsFamily::Haar => Locals::haar(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalsPolicy {
    /// Every bond carries the bare template.
    None,
    /// Every bond carries the template dressed with the same locals.
    FloquetFixed(Locals),
    /// Every gate application gets independent locals from a seeded stream.
    ResamplePerApplication { family: LocalsFamily, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrickwallSpec {
    n_qubits: usize,
    template: Gate,
    policy: LocalsPolicy,
}

impl BrickwallSpec {
    pub fn new(n_qubits: usize, template: Gate, policy: LocalsPolicy) -> Result<Self> {
        if n_qubits < 2 || n_qubits % 2 != 0 {
            return Err(QrcError::OddQubitCount(n_qubits));
        }
        if n_qubits > MAX_QUBITS {
            return Err(QrcError::DimensionOverflow {
                n_qubits,
                max: MAX_QUBITS,
            });
        }
        Ok(Self {
            n_qubits,
            template,
            policy,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn template(&self) -> &Gate {
        &self.template
    }

    pub fn policy(&self) -> &LocalsPolicy {
        &self.policy
    }

    /// A stateful source of timestep layers.
    pub fn circuit(&self) -> Brickwall {
        let rng = match self.policy {
            LocalsPolicy::ResamplePerApplication { seed, .. } => Some(rng_from_seed(seed)),
            _ => None,
        };
        Brickwall {
            spec: self.clone(),
            rng,
        }
    }

    /// Same spec with the resampling stream reseeded; other policies are unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        if let LocalsPolicy::ResamplePerApplication { family, .. } = self.policy {
            out.policy = LocalsPolicy::ResamplePerApplication { family, seed };
        }
        out
    }
}

/// Bonds in application order: odd sublayer, then even sublayer with the wrap bond.
pub fn bonds(n_qubits: usize) -> Vec<(usize, usize)> {
    let odd = (0..n_qubits).step_by(2).map(|q| (q, q + 1));
    let even = (1..n_qubits).step_by(2).map(|q| (q, (q + 1) % n_qubits));
    odd.chain(even).collect()
}

/// Produces one timestep layer per call.
#[derive(Debug, Clone)]
pub struct Brickwall {
    spec: BrickwallSpec,
    rng: Option<SeededRng>,
}

impl Brickwall {
    pub fn spec(&self) -> &BrickwallSpec {
        &self.spec
    }

    pub fn next_layer(&mut self) -> Layer {
        let n = self.spec.n_qubits;
        let kernel = self.spec.template.matrix();
        let gates = bonds(n)
            .into_iter()
            .map(|(a, b)| {
                let m = match (&self.spec.policy, self.rng.as_mut()) {
                    (LocalsPolicy::None, _) => *kernel,
                    (LocalsPolicy::FloquetFixed(l), _) => l.apply(kernel),
                    (LocalsPolicy::ResamplePerApplication { family, .. }, Some(rng)) => {
                        family.draw(rng).apply(kernel)
                    }
                    (LocalsPolicy::ResamplePerApplication { .. }, None) => unreachable!(),
                };
                BondGate {
                    matrix: m,
                    first: a,
                    second: b,
                }
            })
            .collect();
        Layer { n_qubits: n, gates }
    }
}

/// Dense single-timestep unitary for the spec, drawing locals from `rng` when
/// the policy resamples.
pub fn build_layer<R: Rng + ?Sized>(spec: &BrickwallSpec, rng: &mut R) -> CMatrix {
    let kernel = spec.template.matrix();
    let gates = bonds(spec.n_qubits)
        .into_iter()
        .map(|(a, b)| BondGate {
            matrix: match &spec.policy {
                LocalsPolicy::None => *kernel,
                LocalsPolicy::FloquetFixed(l) => l.apply(kernel),
                LocalsPolicy::ResamplePerApplication { family, .. } => family.draw(rng).apply(kernel),
            },
            first: a,
            second: b,
        })
        .collect();
    Layer {
        n_qubits: spec.n_qubits,
        gates,
    }
    .dense()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondGate {
    pub matrix: Mat4,
    /// Qubit carrying the first tensor factor.
    pub first: usize,
    pub second: usize,
}

/// One timestep as a list of two-qubit gates in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    n_qubits: usize,
    gates: Vec<BondGate>,
}

impl Layer {
    pub fn new(n_qubits: usize, gates: Vec<BondGate>) -> Self {
        Self { n_qubits, gates }
    }

    pub fn gates(&self) -> &[BondGate] {
        &self.gates
    }

    pub fn dense(&self) -> CMatrix {
        let mut u = CMatrix::identity(1 << self.n_qubits, 1 << self.n_qubits);
        for g in &self.gates {
            apply_left(&mut u, &g.matrix, self.n_qubits, g.first, g.second);
        }
        u
    }
}

/// Conjugation by a fixed unitary in either picture.
pub trait Propagator {
    fn dim(&self) -> usize;
    /// `m ← U m U†`
    fn schrodinger(&self, m: &mut CMatrix);
    /// `m ← U† m U`
    fn heisenberg(&self, m: &mut CMatrix);
}

impl Propagator for Layer {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn schrodinger(&self, m: &mut CMatrix) {
        for g in &self.gates {
            apply_left(m, &g.matrix, self.n_qubits, g.first, g.second);
            apply_right(m, &g.matrix.adjoint(), self.n_qubits, g.first, g.second);
        }
    }

    fn heisenberg(&self, m: &mut CMatrix) {
        for g in self.gates.iter().rev() {
            apply_left(m, &g.matrix.adjoint(), self.n_qubits, g.first, g.second);
            apply_right(m, &g.matrix, self.n_qubits, g.first, g.second);
        }
    }
}

/// A dense unitary used as a propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary(pub CMatrix);

impl Propagator for DenseUnitary {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn schrodinger(&self, m: &mut CMatrix) {
        *m = &self.0 * &*m * self.0.adjoint();
    }

    fn heisenberg(&self, m: &mut CMatrix) {
        *m = self.0.adjoint() * &*m * &self.0;
    }
}

fn masks(n: usize, a: usize, b: usize) -> (usize, usize) {
    (1 << (n - 1 - a), 1 << (n - 1 - b))
}

fn quad(base: usize, ma: usize, mb: usize) -> [usize; 4] {
    [base, base | mb, base | ma, base | ma | mb]
}

/// `m ← G m` with `G` acting on qubits `(a, b)`, `a` the first factor.
pub fn apply_left(m: &mut CMatrix, g: &Mat4, n: usize, a: usize, b: usize) {
    let d = m.nrows();
    let (ma, mb) = masks(n, a, b);
    let ncols = m.ncols();
    let data = m.as_mut_slice();
    for col in 0..ncols {
        let column = &mut data[col * d..(col + 1) * d];
        for base in (0..d).filter(|r| r & (ma | mb) == 0) {
            let idx = quad(base, ma, mb);
            let x = [column[idx[0]], column[idx[1]], column[idx[2]], column[idx[3]]];
            for (r, &i) in idx.iter().enumerate() {
                column[i] = g[(r, 0)] * x[0] + g[(r, 1)] * x[1] + g[(r, 2)] * x[2] + g[(r, 3)] * x[3];
            }
        }
    }
}

/// `m ← m H` with `H` acting on qubits `(a, b)` of the column index.
pub fn apply_right(m: &mut CMatrix, h: &Mat4, n: usize, a: usize, b: usize) {
    let d = m.nrows();
    let (ma, mb) = masks(n, a, b);
    let ncols = m.ncols();
    let data = m.as_mut_slice();
    for base in (0..ncols).filter(|c| c & (ma | mb) == 0) {
        let cols = quad(base, ma, mb).map(|c| c * d);
        for r in 0..d {
            let x = [data[cols[0] + r], data[cols[1] + r], data[cols[2] + r], data[cols[3] + r]];
            for (k, &c0) in cols.iter().enumerate() {
                data[c0 + r] = x[0] * h[(0, k)] + x[1] * h[(1, k)] + x[2] * h[(2, k)] + x[3] * h[(3, k)];
            }
        }
    }
}

/// Dense embedding of a single-qubit operator acting on qubit `q`.
pub fn single_qubit_matrix(n: usize, q: usize, op: &Mat2) -> CMatrix {
    let d = 1 << n;
    let mask = 1 << (n - 1 - q);
    CMatrix::from_fn(d, d, |r, c| {
        if r & !mask != c & !mask {
            return ZERO;
        }
        op[((r & mask != 0) as usize, (c & mask != 0) as usize)]
    })
}

/// Pauli Z on one qubit as a dense operator.
pub fn pauli_z(n: usize, q: usize) -> CMatrix {
    single_qubit_matrix(n, q, &Matrix2::new(C64::new(1.0, 0.0), ZERO, ZERO, C64::new(-1.0, 0.0)))
}

/// A positive, unit-trace state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn all_zeros(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        let mut data = CMatrix::zeros(d, d);
        data[(0, 0)] = C64::new(1.0, 0.0);
        Self { n_qubits, data }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            data: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    /// Wraps `data` after checking shape, Hermiticity, trace and positivity.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let d = data.nrows();
        if d != data.ncols() || !d.is_power_of_two() || d < 2 {
            return Err(QrcError::Shape {
                expected: "square 2^n".into(),
                found: format!("{}x{}", data.nrows(), data.ncols()),
            });
        }
        let rho = Self {
            n_qubits: d.trailing_zeros() as usize,
            data,
        };
        rho.validate(1e-9)?;
        Ok(rho)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = (&self.data - self.data.adjoint()).camax();
        if herm > tol {
            return Err(QrcError::Parameter {
                name: "hermiticity",
                value: herm,
                reason: "density matrix is not Hermitian",
            });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(QrcError::Parameter {
                name: "trace",
                value: tr,
                reason: "density matrix must have unit trace",
            });
        }
        let min = self
            .data
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(QrcError::Parameter {
                name: "eigenvalue",
                value: min,
                reason: "density matrix must be positive semidefinite",
            });
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.data
    }

    #[cfg(test)]
    pub(crate) fn from_raw(n_qubits: usize, data: CMatrix) -> Self {
        Self { n_qubits, data }
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.overlap(self)
    }

    /// `tr(ρ σ)` for Hermitian arguments.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        crate::linalg::hs_inner(self.data.as_slice(), other.data.as_slice()).re
    }

    /// Trace over qubit 0.
    pub fn trace_out_first(&self) -> CMatrix {
        let h = self.dim() / 2;
        CMatrix::from_fn(h, h, |r, c| self.data[(r, c)] + self.data[(r + h, c + h)])
    }

    /// Reduced state of a single qubit.
    pub fn marginal(&self, q: usize) -> Mat2 {
        let n = self.n_qubits;
        let mask = 1 << (n - 1 - q);
        let mut out = Mat2::zeros();
        for r in 0..self.dim() {
            let rest = r & !mask;
            let br = (r & mask != 0) as usize;
            for bc in 0..2 {
                let c = rest | if bc == 1 { mask } else { 0 };
                out[(br, bc)] += self.data[(r, c)];
            }
        }
        out
    }

    /// `tr(Z_q ρ)` with `Z|0⟩ = |0⟩`.
    pub fn z_expectation(&self, q: usize) -> f64 {
        let mask = 1 << (self.n_qubits - 1 - q);
        (0..self.dim())
            .map(|r| {
                let p = self.data[(r, r)].re;
                if r & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    pub fn evolve_with<P: Propagator + ?Sized>(&mut self, p: &P) {
        p.schrodinger(&mut self.data);
    }
}

/// `ρ → U ρ U†` with a dense unitary.
pub fn evolve(rho: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if u.nrows() != rho.dim() || u.ncols() != rho.dim() {
        return Err(QrcError::DimensionMismatch {
            expected: rho.dim(),
            found: u.nrows(),
        });
    }
    Ok(DensityMatrix {
        n_qubits: rho.n_qubits,
        data: u * &rho.data * u.adjoint(),
    })
}

/// Layer unitarity check used by callers that build layers from raw gates.
pub fn layer_residual(layer: &Layer) -> f64 {
    unitarity_residual(&layer.dense())
}
