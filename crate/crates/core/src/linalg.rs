//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Deterministic random stream used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrices in the order I, X, Y, Z.
pub fn paulis() -> [Mat2; 4] {
    [
        Mat2::new(ONE, ZERO, ZERO, ONE),
        Mat2::new(ZERO, ONE, ONE, ZERO),
        Mat2::new(ZERO, -I, I, ZERO),
        Mat2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn swap_gate() -> Mat4 {
    let mut s = Mat4::zeros();
    s[(0, 0)] = ONE;
    s[(1, 2)] = ONE;
    s[(2, 1)] = ONE;
    s[(3, 3)] = ONE;
    s
}

pub fn cnot_gate() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn to_dynamic(m: &Mat4) -> CMatrix {
    CMatrix::from_column_slice(4, 4, m.as_slice())
}

/// `max |U†U - I|` entrywise.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn unitarity_residual4(u: &Mat4) -> f64 {
    let prod = u.adjoint() * u;
    (prod - Mat4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hilbert–Schmidt inner product `tr(A†B)` of two operators stored as
/// flat slices with identical layout. Summation runs in index order.
pub fn hs_inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
    let mut chunks_a = a.chunks_exact(2);
    let mut chunks_b = b.chunks_exact(2);
    for (x, y) in (&mut chunks_a).zip(&mut chunks_b) {
        re0 += x[0].re * y[0].re + x[0].im * y[0].im;
        im0 += x[0].re * y[0].im - x[0].im * y[0].re;
        re1 += x[1].re * y[1].re + x[1].im * y[1].im;
        im1 += x[1].re * y[1].im - x[1].im * y[1].re;
    }
    for (x, y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        re0 += x.re * y.re + x.im * y.im;
        im0 += x.re * y.im - x.im * y.re;
    }
    C64::new(re0 + re1, im0 + im1)
}

pub fn hs_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y -= alpha * x`
pub fn sub_scaled(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

/// Haar-random unitary of dimension `dim` from the QR decomposition of a
/// complex Ginibre matrix, with the diagonal phases of `R` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary_seeded(dim: usize, seed: u64) -> CMatrix {
    haar_unitary(dim, &mut rng_from_seed(seed))
}

pub fn haar2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let u = haar_unitary(2, rng);
    Mat2::from_column_slice(u.as_slice())
}

pub fn haar4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let u = haar_unitary(4, rng);
    Mat4::from_column_slice(u.as_slice())
}

/// Sorts by descending magnitude; ties (within 1e-12) by descending real part.
pub fn sort_by_magnitude(values: &mut [C64]) {
    values.sort_by(|a, b| {
        let (na, nb) = (a.norm(), b.norm());
        if (na - nb).abs() > 1e-12 {
            nb.partial_cmp(&na).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
}

/// Eigenvalues of a general complex square matrix, sorted with [`sort_by_magnitude`].
pub fn eigenvalues(m: &CMatrix) -> crate::Result<Vec<C64>> {
    let f = faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut out = f.eigenvalues().map_err(|_| crate::QrcError::NoConvergence(m.nrows()))?;
    sort_by_magnitude(&mut out);
    Ok(out)
}

/// Eigenvalues of a general real square matrix, sorted with [`sort_by_magnitude`].
pub fn real_eigenvalues(m: &DMatrix<f64>) -> crate::Result<Vec<C64>> {
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut out = f.eigenvalues().map_err(|_| crate::QrcError::NoConvergence(m.nrows()))?;
    sort_by_magnitude(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_samples_are_unitary_and_deterministic() {
        for dim in [2, 4, 8] {
            let u = haar_unitary_seeded(dim, 11);
            assert!(unitarity_residual(&u) < 1e-12);
            assert_eq!(u, haar_unitary_seeded(dim, 11));
        }
    }

    #[test]
    fn hs_inner_matches_naive_sum() {
        let a: Vec<C64> = (0..7).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let b: Vec<C64> = (0..7).map(|k| c(0.5 * k as f64, 2.0)).collect();
        let naive: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!((hs_inner(&a, &b) - naive).norm() < 1e-12);
    }

    #[test]
    fn schur_eigenvalues_of_triangular_matrix() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, 3.0), ZERO, c(-2.0, 0.0), ONE, ZERO, ZERO, c(0.5, 0.0)],
        );
        let mut ev = eigenvalues(&m).unwrap();
        sort_by_magnitude(&mut ev);
        assert!((ev[0] - c(-2.0, 0.0)).norm() < 1e-10);
        assert!((ev[1] - c(1.0, 1.0)).norm() < 1e-10);
        assert!((ev[2] - c(0.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn magnitude_sort_breaks_ties_by_real_part() {
        let mut v = vec![c(-1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.1, 0.0)];
        sort_by_magnitude(&mut v);
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(0.0, 1.0));
        assert_eq!(v[2], c(-1.0, 0.0));
    }
}
