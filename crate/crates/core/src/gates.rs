//! Two-qubit gates: Cartan kernels, local dressings, Haar and solvable
//! sampling, and the local-unitary invariants built from operator
//! entanglement.
//!
//! Matrices act on `C^2 ⊗ C^2` with basis index `2 * i + j` for `|ij⟩`, the
//! first tensor factor being the most significant bit.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QrcError, Result};
use crate::linalg::{
    c, haar2, haar4, kron2, paulis, rng_from_seed, swap_gate, unitarity_residual4, Mat2, Mat4,
    C64, I, ZERO,
};

/// Operator entanglement of SWAP.
pub const SWAP_OPERATOR_ENTANGLEMENT: f64 = 0.75;

/// Largest entangling power reachable by a two-qubit gate.
pub const MAX_ENTANGLING_POWER: f64 = 2.0 / 3.0;

/// Angles of the non-local part `exp(i(a XX + b YY + c ZZ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartanParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CartanParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Dual-unitary family `(π/4, π/4, gamma)`.
    pub fn dual_unitary(gamma: f64) -> Self {
        Self::new(FRAC_PI_4, FRAC_PI_4, gamma)
    }

    /// Whether the angles lie in the Weyl chamber `π/4 >= alpha >= beta >= |gamma|`.
    pub fn is_canonical(&self) -> bool {
        const EPS: f64 = 1e-12;
        FRAC_PI_4 + EPS >= self.alpha
            && self.alpha + EPS >= self.beta
            && self.beta + EPS >= self.gamma.abs()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateOrigin {
    Cartan(CartanParams),
    HaarTwoQubit { seed: u64 },
    Composite,
}

/// Single-qubit unitaries attached around a kernel: `(u1 ⊗ u2) K (v1 ⊗ v2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Locals {
    pub u1: Mat2,
    pub u2: Mat2,
    pub v1: Mat2,
    pub v2: Mat2,
}

impl Locals {
    pub fn identity() -> Self {
        let id = Mat2::identity();
        Self {
            u1: id,
            u2: id,
            v1: id,
            v2: id,
        }
    }

    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            u1: haar2(rng),
            u2: haar2(rng),
            v1: haar2(rng),
            v2: haar2(rng),
        }
    }

    /// Four `w_local` factors with both angles uniform in `[0, 4π)`.
    pub fn random_w<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || w_local(rng.random_range(0.0..4.0 * PI), rng.random_range(0.0..4.0 * PI));
        Self {
            u1: draw(),
            u2: draw(),
            v1: draw(),
            v2: draw(),
        }
    }

    pub fn apply(&self, kernel: &Mat4) -> Mat4 {
        kron2(&self.u1, &self.u2) * kernel * kron2(&self.v1, &self.v2)
    }

    pub fn as_array(&self) -> [Mat2; 4] {
        [self.u1, self.u2, self.v1, self.v2]
    }
}

/// A two-qubit unitary with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    matrix: Mat4,
    kernel: Mat4,
    origin: GateOrigin,
    locals: Option<Locals>,
}

impl Gate {
    /// Wrap an arbitrary 4×4 unitary.
    pub fn from_matrix(matrix: Mat4) -> Result<Self> {
        let residual = unitarity_residual4(&matrix);
        if residual > 1e-10 {
            return Err(QrcError::Parameter {
                name: "matrix",
                value: residual,
                reason: "gate matrix is not unitary",
            });
        }
        Ok(Self {
            matrix,
            kernel: matrix,
            origin: GateOrigin::Composite,
            locals: None,
        })
    }

    pub fn identity() -> Self {
        cartan_gate(CartanParams::new(0.0, 0.0, 0.0))
    }

    pub fn swap() -> Self {
        Self {
            matrix: swap_gate(),
            kernel: swap_gate(),
            origin: GateOrigin::Composite,
            locals: None,
        }
    }

    /// Haar-random two-qubit gate drawn from the given seed.
    pub fn haar(seed: u64) -> Self {
        let m = haar4(&mut rng_from_seed(seed));
        Self {
            matrix: m,
            kernel: m,
            origin: GateOrigin::HaarTwoQubit { seed },
            locals: None,
        }
    }

    /// The same kernel with new local unitaries attached.
    pub fn dressed(&self, locals: Locals) -> Self {
        Self {
            matrix: locals.apply(&self.kernel),
            kernel: self.kernel,
            origin: self.origin,
            locals: Some(locals),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    /// The gate without its locals.
    pub fn kernel(&self) -> &Mat4 {
        &self.kernel
    }

    pub fn origin(&self) -> GateOrigin {
        self.origin
    }

    pub fn locals(&self) -> Option<&Locals> {
        self.locals.as_ref()
    }

    pub fn invariants(&self) -> GateInvariants {
        gate_invariants(&self.matrix)
    }

    pub fn is_dual_unitary(&self, tol: f64) -> bool {
        is_dual_unitary(&self.matrix, tol)
    }

    pub fn record(&self, seed: Option<u64>) -> GateRecord {
        let (origin, cartan, seed) = match self.origin {
            GateOrigin::Cartan(p) => ("cartan", Some(p.as_array()), seed),
            GateOrigin::HaarTwoQubit { seed: s } => ("haar_two_qubit", None, Some(s)),
            GateOrigin::Composite => ("composite", None, seed),
        };
        GateRecord {
            origin: origin.to_string(),
            cartan,
            locals: self
                .locals
                .map(|l| l.as_array().iter().map(flatten_row_major).collect()),
            seed,
            matrix: flatten_row_major(&self.matrix),
        }
    }
}

/// Serialisable gate description. Complex arrays are row-major with real and
/// imaginary parts interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub origin: String,
    pub cartan: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locals: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
    pub matrix: Vec<f64>,
}

fn flatten_row_major<R: nalgebra::Dim, Cc: nalgebra::Dim, S>(m: &nalgebra::Matrix<C64, R, Cc, S>) -> Vec<f64>
where
    S: nalgebra::RawStorage<C64, R, Cc>,
{
    let mut out = Vec::with_capacity(2 * m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// `exp(i θ P⊗P)` for a Pauli `P`, using `(P⊗P)^2 = 1`.
fn pauli_pair_exp(theta: f64, p: &Mat2) -> Mat4 {
    let pp = kron2(p, p);
    Mat4::identity() * c(theta.cos(), 0.0) + pp * (I * theta.sin())
}

/// `exp(i(alpha XX + beta YY + gamma ZZ))`.
pub fn cartan_gate(p: CartanParams) -> Gate {
    let [_, x, y, z] = paulis();
    // the three generators commute, so the exponential factorises
    let m = pauli_pair_exp(p.alpha, &x) * pauli_pair_exp(p.beta, &y) * pauli_pair_exp(p.gamma, &z);
    Gate {
        matrix: m,
        kernel: m,
        origin: GateOrigin::Cartan(p),
        locals: None,
    }
}

/// Coefficients of `A` in the normalised Pauli basis `σ_a ⊗ σ_b / 2`.
fn pauli_coefficients(a: &Mat4) -> Mat4 {
    let p = paulis();
    let mut out = Mat4::zeros();
    for (ia, pa) in p.iter().enumerate() {
        for (ib, pb) in p.iter().enumerate() {
            let basis = kron2(pa, pb);
            // tr(B† A) with B Hermitian
            let mut tr = ZERO;
            for r in 0..4 {
                for k in 0..4 {
                    tr += basis[(k, r)].conj() * a[(k, r)];
                }
            }
            out[(ia, ib)] = tr * 0.5;
        }
    }
    out
}

/// Operator-Schmidt coefficients of a 4×4 operator, in descending order.
pub fn operator_schmidt(a: &Mat4) -> [f64; 4] {
    let sv = pauli_coefficients(a).svd(false, false).singular_values;
    let mut g = [sv[0] * sv[0], sv[1] * sv[1], sv[2] * sv[2], sv[3] * sv[3]];
    g.sort_by(|x, y| y.total_cmp(x));
    g
}

fn op_ent(a: &Mat4) -> f64 {
    1.0 - operator_schmidt(a).iter().map(|g| g * g).sum::<f64>() / 16.0
}

/// Operator entanglement `1 - Σ γ_i² / 16` of a 4×4 matrix.
pub fn operator_entanglement(a: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != (4, 4) {
        return Err(QrcError::Shape {
            expected: "4x4".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(op_ent(&Mat4::from_fn(|i, j| a[(i, j)])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateInvariants {
    pub e_p: f64,
    pub g_t: f64,
    pub op_ent: f64,
    pub op_ent_times_swap: f64,
}

/// Entangling power and gate typicality of a two-qubit unitary.
pub fn gate_invariants(u: &Mat4) -> GateInvariants {
    let e = op_ent(u);
    let es = op_ent(&(u * swap_gate()));
    let s = SWAP_OPERATOR_ENTANGLEMENT;
    GateInvariants {
        e_p: (e + es - s) / s,
        g_t: (e - es + s) / (2.0 * s),
        op_ent: e,
        op_ent_times_swap: es,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reshuffle {
    R1,
    R2,
    T1,
    T2,
}

/// Index reshuffling of `A_{(ij),(kl)}` viewed as a rank-4 tensor.
///
/// * `R1`: `out[(l,j),(k,i)] = A[(i,j),(k,l)]`
/// * `R2`: `out[(i,k),(j,l)] = A[(i,j),(k,l)]` (realignment)
/// * `T1`: `out[(k,j),(i,l)] = A[(i,j),(k,l)]`
/// * `T2`: `out[(i,l),(k,j)] = A[(i,j),(k,l)]` (partial transpose on qubit 2)
pub fn reshuffle(a: &Mat4, kind: Reshuffle) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let (r, col) = match kind {
                        Reshuffle::R1 => (2 * l + j, 2 * k + i),
                        Reshuffle::R2 => (2 * i + k, 2 * j + l),
                        Reshuffle::T1 => (2 * k + j, 2 * i + l),
                        Reshuffle::T2 => (2 * i + l, 2 * k + j),
                    };
                    out[(r, col)] = a[(2 * i + j, 2 * k + l)];
                }
            }
        }
    }
    out
}

/// Unitarity residual of the realigned gate.
pub fn dual_unitarity_residual(u: &Mat4) -> f64 {
    unitarity_residual4(&reshuffle(u, Reshuffle::R2))
}

pub fn is_dual_unitary(u: &Mat4, tol: f64) -> bool {
    dual_unitarity_residual(u) < tol
}

/// The `θ = π/2` member of the Euler parametrisation of SU(2).
pub fn w_local(phi: f64, psi: f64) -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = |t: f64| C64::from_polar(h, t);
    Mat2::new(e(phi / 2.0), e(-psi / 2.0), -e(psi / 2.0), e(-phi / 2.0))
}

fn f_term(x: f64, y: f64) -> f64 {
    (2.0 * x).sin().powi(2) * ((2.0 * y).cos().powi(2) - 0.6)
}

/// `f(a,b) + f(b,c) + f(c,a)`, zero on the solvable class.
pub fn solvable_residual(p: &CartanParams) -> f64 {
    f_term(p.alpha, p.beta) + f_term(p.beta, p.gamma) + f_term(p.gamma, p.alpha)
}

/// Draw `(alpha, beta)` uniformly from `[0, π/4]²` and solve for `gamma`.
///
/// The constraint is linear in `cos²(2γ)`; draws without a root in `[0, 1]`
/// come back as [`QrcError::Rejected`].
pub fn sample_solvable<R: Rng + ?Sized>(rng: &mut R) -> Result<Gate> {
    let alpha = rng.random_range(0.0..=FRAC_PI_4);
    let beta = rng.random_range(0.0..=FRAC_PI_4);
    let sb = (2.0 * beta).sin().powi(2);
    let ca = (2.0 * alpha).cos().powi(2) - 0.6;
    let c0 = f_term(alpha, beta) - 0.6 * sb + ca;
    let c1 = sb - ca;
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    if c1.abs() < 1e-14 {
        return Err(QrcError::Rejected { alpha, beta });
    }
    let x = -c0 / c1;
    if !(0.0..=1.0).contains(&x) {
        return Err(QrcError::Rejected { alpha, beta });
    }
    let gamma = 0.5 * (sign * x.sqrt()).acos();
    Ok(cartan_gate(CartanParams::new(alpha, beta, gamma)))
}

/// Keep drawing until `count` solvable gates are accepted.
pub fn solvable_gates<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Gate> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Ok(g) = sample_solvable(rng) {
            out.push(g);
        }
    }
    out
}

/// Dual-unitary Cartan kernel with entangling power `e_p`.
pub fn dual_unitary_kernel(e_p: f64) -> Result<Gate> {
    if !(0.0..=MAX_ENTANGLING_POWER + 1e-12).contains(&e_p) {
        return Err(QrcError::Parameter {
            name: "e_p",
            value: e_p,
            reason: "entangling power must lie in [0, 2/3]",
        });
    }
    let x = (1.5 * e_p).min(1.0).sqrt();
    Ok(cartan_gate(CartanParams::dual_unitary(0.5 * x.acos())))
}
