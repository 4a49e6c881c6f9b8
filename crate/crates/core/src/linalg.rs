//! Dense complex linear algebra helpers shared by the whole crate.
//!
//! Everything here operates on small matrices (dimension at most a few
//! dozen), so the pure-Rust `nalgebra` decompositions are used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization of a matrix.
pub fn vec_col(m: &CMatrix) -> CVector {
    let (rows, cols) = m.shape();
    CVector::from_fn(rows * cols, |i, _| m[(i % rows, i / rows)])
}

/// Largest absolute entry of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-entry deviation between two matrices of equal shape.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value of `m` (0 for an empty matrix).
pub fn largest_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Orthonormal basis of `span{columns}` via modified Gram-Schmidt.
///
/// Columns whose residual drops below `rel_tol` times the largest input
/// column norm are treated as linearly dependent and dropped.
pub fn orthonormal_span(columns: &[CVector], rel_tol: f64) -> Vec<CVector> {
    let max_norm = columns.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Vec::new();
    }
    let cut = rel_tol * max_norm;
    let mut basis: Vec<CVector> = Vec::with_capacity(columns.len());
    for col in columns {
        let mut v = col.clone();
        for q in &basis {
            let overlap = q.dotc(&v);
            v.axpy(-overlap, q, ONE);
        }
        // second pass for numerical orthogonality
        for q in &basis {
            let overlap = q.dotc(&v);
            v.axpy(-overlap, q, ONE);
        }
        let norm = v.norm();
        if norm > cut {
            basis.push(v.unscale(norm));
        }
    }
    basis
}

/// Norm of the projection of `v` onto the span of the orthonormal `basis`.
pub fn projection_norm(basis: &[CVector], v: &CVector) -> f64 {
    basis
        .iter()
        .map(|q| q.dotc(v).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Component of `v` orthogonal to the span of the orthonormal `basis`.
pub fn orthogonal_residual(basis: &[CVector], v: &CVector) -> CVector {
    let mut r = v.clone();
    for q in basis {
        let overlap = q.dotc(&r);
        r.axpy(-overlap, q, ONE);
    }
    r
}

/// Projector matrix `Σ q qᴴ` onto the span of orthonormal columns.
pub fn projector_from_basis(dim: usize, basis: &[CVector]) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    for q in basis {
        p += q * q.adjoint();
    }
    p
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Haar-random unit vector in `C^dim`.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-6 {
            return v.unscale(norm);
        }
    }
}

/// Clamp a fidelity-like value into [0, 1], rejecting excess beyond tolerance.
pub fn clamp_unit(value: f64) -> crate::Result<f64> {
    if value > 1.0 + 1e-9 {
        return Err(crate::Error::Numerical(format!(
            "value {value} exceeds 1 beyond tolerance"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Ceiling with a small tolerance against values sitting a hair above an integer.
pub fn fuzzy_ceil(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identity_z() {
        let id = CMatrix::identity(2, 2);
        let z = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, -ONE]));
        let k = kron(&id, &z);
        for (i, expected) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert_eq!(k[(i, i)], c(*expected, 0.0));
        }
    }

    #[test]
    fn vec_col_stacks_columns() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vec_col(&m);
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(v[2], c(2.0, 0.0));
        assert_eq!(v[3], c(4.0, 0.0));
    }

    #[test]
    fn hermitian_eigen_orders_ascending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.3, 0.0)]));
        let (values, vectors) = hermitian_eigen(&m);
        assert!((values[0] - 0.3).abs() < 1e-12);
        assert!((values[1] - 0.7).abs() < 1e-12);
        assert!((vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_span_drops_dependent_columns() {
        let v1 = CVector::from_vec(vec![ONE, ZERO]);
        let v2 = CVector::from_vec(vec![c(2.0, 0.0), ZERO]);
        let v3 = CVector::from_vec(vec![ONE, ONE]);
        let basis = orthonormal_span(&[v1, v2, v3], 1e-10);
        assert_eq!(basis.len(), 2);
        assert!(basis[0].dotc(&basis[1]).norm() < 1e-12);
    }

    #[test]
    fn fuzzy_ceil_handles_boundary_noise() {
        assert_eq!(fuzzy_ceil(3.0000000000000004), 3.0);
        assert_eq!(fuzzy_ceil(2.9999999996), 3.0);
        assert_eq!(fuzzy_ceil(3.2), 4.0);
    }
}
