//! Small dense linear-algebra helpers shared by the model builders and the
//! spectral engine.
//!
//! Density matrices are vectorized row-major: `vec(rho)[m*d + n] = rho[m, n]`,
//! so the superoperator of the sandwich `A rho B` is `kron(A, B^T)`. This
//! convention is fixed once here and verified by the vectorization-identity
//! tests in the generator module.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64 as C64;

/// Complex number from a real value.
#[inline]
pub fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The imaginary unit.
pub const IM: C64 = C64::new(0.0, 1.0);

/// Complex identity matrix of size `d`.
pub fn identity(d: usize) -> Array2<C64> {
    Array2::from_diag_elem(d, cr(1.0))
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

/// Row-major vectorization of a `d x d` matrix.
pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    Array1::from_iter(rho.iter().cloned())
}

/// Inverse of [`vectorize`]: reshape a length `d^2` vector into a `d x d` matrix.
pub fn unvectorize(v: &ArrayView1<C64>, d: usize) -> Array2<C64> {
    assert_eq!(v.len(), d * d, "vector length does not match d^2");
    Array2::from_shape_vec((d, d), v.to_vec()).expect("shape checked above")
}

/// Frobenius norm.
pub fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `<a, b>` with conjugation on the first argument.
pub fn inner(a: &ArrayView1<C64>, b: &ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Trace of a square matrix.
pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().iter().sum()
}

/// Hilbert-Schmidt expectation `Tr[op * rho]`.
pub fn expectation(op: &ArrayView2<C64>, rho: &ArrayView2<C64>) -> C64 {
    // Tr[A B] = sum_{mn} A[m,n] B[n,m]
    let mut acc = C64::default();
    for (m, row) in op.rows().into_iter().enumerate() {
        for (n, a) in row.iter().enumerate() {
            acc += a * rho[[n, m]];
        }
    }
    acc
}

/// Symmetrize to the nearest Hermitian matrix, `(a + a^dagger) / 2`.
pub fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    let adag = dagger(a);
    (a + &adag).mapv(|z| z * 0.5)
}

/// Upper bound on the spectral norm via `sqrt(norm_1 * norm_inf)`.
pub fn spectral_norm_bound(a: &Array2<C64>) -> f64 {
    let mut col_sums = vec![0.0f64; a.ncols()];
    let mut row_max = 0.0f64;
    for row in a.rows() {
        let mut row_sum = 0.0;
        for (j, z) in row.iter().enumerate() {
            let v = z.norm();
            row_sum += v;
            col_sums[j] += v;
        }
        row_max = row_max.max(row_sum);
    }
    let col_max = col_sums.iter().cloned().fold(0.0, f64::max);
    (row_max * col_max).sqrt()
}

/// Largest absolute deviation between two matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_roundtrip() {
        let a = Array2::from_shape_fn((3, 3), |(i, j)| C64::new(i as f64, j as f64));
        let v = vectorize(&a);
        assert_eq!(v[1], C64::new(0.0, 1.0)); // row-major: element (0, 1)
        let back = unvectorize(&v.view(), 3);
        assert_eq!(a, back);
    }

    #[test]
    fn spectral_bound_dominates_diagonal() {
        let a = Array2::from_diag(&ndarray::arr1(&[cr(3.0), cr(-7.0), cr(0.5)]));
        assert!(spectral_norm_bound(&a) >= 7.0);
    }
}
