//! Quantum state types: pure states, density operators, and support projectors.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use num_complex::Complex64;

/// Tolerance on the unit norm of a pure state.
pub const NORM_TOL: f64 = 1e-12;
/// Amplitudes below this modulus are ignored when fixing the global phase.
pub const GAUGE_TOL: f64 = 1e-12;
/// Hermiticity / trace tolerances for density operators.
pub const DENSITY_TOL: f64 = 1e-10;
/// Default relative eigenvalue cut defining the support of a density operator.
pub const SUPPORT_REL_TOL: f64 = 1e-10;
/// Idempotency and trace-vs-rank tolerance for projectors.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// A normalized pure state with a canonical global phase.
///
/// The first amplitude with modulus above [`GAUGE_TOL`] is made real and
/// nonnegative, so equal rays compare equal entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim: usize,
    amplitudes: CVector,
}

impl PureState {
    /// Wraps an already-normalized amplitude vector, fixing the gauge.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!(
                "pure state norm {norm} deviates from 1 beyond {NORM_TOL:.0e}"
            )));
        }
        Ok(Self::gauge_fixed(amplitudes))
    }

    /// Normalizes an arbitrary nonzero vector into a pure state.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-14 {
            return Err(Error::Domain(
                "cannot normalize a (near-)zero vector".into(),
            ));
        }
        Ok(Self::gauge_fixed(v.unscale(norm)))
    }

    fn gauge_fixed(mut v: CVector) -> Self {
        if let Some(idx) = v.iter().position(|a| a.norm() > GAUGE_TOL) {
            let lead_norm = v[idx].norm();
            let phase = v[idx].conj().unscale(lead_norm);
            v *= phase;
            // pin the leading amplitude exactly, so re-gauging is a bitwise no-op
            v[idx] = Complex64::new(lead_norm, 0.0);
        }
        let dim = v.len();
        Self { dim, amplitudes: v }
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = linalg::ONE;
        Self { dim, amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Inner product `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn abs_overlap(&self, other: &PureState) -> f64 {
        self.overlap(other).norm()
    }

    /// Density-operator form `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator {
            dim: self.dim,
            matrix: m,
        }
    }
}

/// A positive-semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim: usize,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity within [`DENSITY_TOL`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Shape(format!(
                "density operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_dev = linalg::max_abs_diff(&matrix, &matrix.adjoint());
        if herm_dev > DENSITY_TOL {
            return Err(Error::Domain(format!(
                "density operator not Hermitian: deviation {herm_dev:.3e}"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::Domain(format!(
                "density operator trace {trace} deviates from 1"
            )));
        }
        let min_eig = linalg::hermitian_min_eigenvalue(&matrix);
        if min_eig < -DENSITY_TOL {
            return Err(Error::Domain(format!(
                "density operator has negative eigenvalue {min_eig:.3e}"
            )));
        }
        let dim = matrix.nrows();
        Ok(Self { dim, matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        psi.to_density()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Projector onto the eigenvectors with eigenvalue above `rel_tol · λ_max`.
    pub fn support_projector_with_tol(&self, rel_tol: f64) -> Projector {
        let (values, vectors) = linalg::hermitian_eigen(&self.matrix);
        let max = values.iter().copied().fold(0.0, f64::max);
        let cut = rel_tol * max;
        let mut basis = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v > cut {
                basis.push(CVector::from(vectors.column(i)));
            }
        }
        Projector::from_orthonormal_basis(self.dim, &basis)
    }

    /// Support projector at the default relative cut [`SUPPORT_REL_TOL`].
    pub fn support_projector(&self) -> Projector {
        self.support_projector_with_tol(SUPPORT_REL_TOL)
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn top_eigenvector(&self) -> PureState {
        let (_, vectors) = linalg::hermitian_eigen(&self.matrix);
        PureState::normalized(CVector::from(vectors.column(self.dim - 1)))
            .expect("eigenvector of a unit-trace operator is nonzero")
    }

    /// `⟨ψ|ρ|ψ⟩`, clamped to [0, 1].
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        (v.dotc(&(&self.matrix * v))).re.clamp(0.0, 1.0)
    }
}

/// An orthogonal projector of known rank.
#[derive(Debug, Clone)]
pub struct Projector {
    dim: usize,
    matrix: CMatrix,
    rank: usize,
    basis: Vec<CVector>,
}

impl Projector {
    /// Builds `Σ q qᴴ` from orthonormal columns.
    pub fn from_orthonormal_basis(dim: usize, basis: &[CVector]) -> Self {
        let matrix = linalg::projector_from_basis(dim, basis);
        Self {
            dim,
            matrix,
            rank: basis.len(),
            basis: basis.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis of the range.
    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    /// Norm of `P|v⟩`.
    pub fn projection_norm(&self, v: &CVector) -> f64 {
        linalg::projection_norm(&self.basis, v)
    }

    /// `(I − P)|v⟩`.
    pub fn residual(&self, v: &CVector) -> CVector {
        linalg::orthogonal_residual(&self.basis, v)
    }

    /// Max-entry norm of `P² − P`.
    pub fn idempotency_residual(&self) -> f64 {
        linalg::max_abs_diff(&(&self.matrix * &self.matrix), &self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauge_makes_leading_amplitude_real() {
        let v = CVector::from_vec(vec![c(0.0, 0.6), c(0.8, 0.0)]);
        let psi = PureState::new(v).unwrap();
        let a = psi.amplitudes();
        assert!(a[0].im.abs() < 1e-15);
        assert!(a[0].re > 0.0);
        assert!((a[0].re - 0.6).abs() < 1e-12);
        // relative phase preserved: second amplitude picked up the conjugate phase
        assert!((a[1] - c(0.0, -0.8)).norm() < 1e-12);
    }

    #[test]
    fn gauge_skips_negligible_leading_amplitudes() {
        let v = CVector::from_vec(vec![c(0.0, 1e-15), c(0.0, 1.0)]);
        let psi = PureState::new(v).unwrap();
        assert!(psi.amplitudes()[1].re > 0.999_999);
    }

    #[test]
    fn unnormalized_pure_state_rejected() {
        let v = CVector::from_vec(vec![c(0.5, 0.0), ZERO]);
        assert!(PureState::new(v).is_err());
    }

    #[test]
    fn density_from_pure_is_valid() {
        let psi = PureState::normalized(CVector::from_vec(vec![ONE, ONE])).unwrap();
        let rho = DensityOperator::new(psi.to_density().matrix().clone()).unwrap();
        assert_eq!(rho.dim(), 2);
        assert!((rho.expectation(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_density_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.3, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(DensityOperator::new(m).is_err());
    }

    #[test]
    fn support_of_pure_state_is_rank_one() {
        let rho = PureState::basis(2, 0).to_density();
        let p = rho.support_projector();
        assert_eq!(p.rank(), 1);
        assert!((p.matrix()[(0, 0)] - ONE).norm() < 1e-12);
        assert!(p.matrix()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn support_of_maximally_mixed_is_full() {
        let m = CMatrix::identity(2, 2).unscale(2.0);
        let rho = DensityOperator::new(m).unwrap();
        let p = rho.support_projector();
        assert_eq!(p.rank(), 2);
        assert!(p.idempotency_residual() < 1e-12);
    }
}
