//! Trace-preserving completely positive maps in Kraus form, plus the
//! validity checks and test-channel factories used across the crate.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::state::{DensityOperator, PureState};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Max-entry tolerance on `Σ Eᵢᴴ Eᵢ = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Tolerance on the smallest Choi eigenvalue.
pub const CHOI_TOL: f64 = 1e-9;
/// Max-entry tolerance on `Uᴴ U = I` for adjoined unitaries.
pub const UNITARY_TOL: f64 = 1e-9;

/// Outcome of the completeness / complete-positivity check of a Kraus list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelValidity {
    /// Max-entry deviation of `Σ Eᵢᴴ Eᵢ` from the identity.
    pub completeness_residual: f64,
    /// Smallest eigenvalue of the Choi matrix.
    pub choi_min_eigenvalue: f64,
    pub is_valid: bool,
}

impl ChannelValidity {
    fn from_measurements(completeness_residual: f64, choi_min_eigenvalue: f64) -> Self {
        Self {
            completeness_residual,
            choi_min_eigenvalue,
            is_valid: completeness_residual <= COMPLETENESS_TOL && choi_min_eigenvalue >= -CHOI_TOL,
        }
    }
}

/// A quantum operation `ρ ↦ Σ Eᵢ ρ Eᵢᴴ` on a `dim`-dimensional space.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
    name: Option<String>,
}

impl KrausChannel {
    /// Builds a channel, enforcing square equal-shape operators, the Kraus
    /// count bound `1 ≤ m ≤ dim²`, and completeness within
    /// [`COMPLETENESS_TOL`].
    pub fn new(kraus: Vec<CMatrix>, name: Option<String>) -> Result<Self> {
        let dim = check_shapes(&kraus)?;
        if kraus.len() > dim * dim {
            return Err(Error::Shape(format!(
                "{} Kraus operators exceed dim² = {}",
                kraus.len(),
                dim * dim
            )));
        }
        let residual = completeness_residual(&kraus);
        if residual > COMPLETENESS_TOL {
            return Err(Error::InvalidChannel {
                residual,
                choi_min_eigenvalue: linalg::hermitian_min_eigenvalue(&choi_of(&kraus)),
            });
        }
        Ok(Self { dim, kraus, name })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Images `{Eᵢ|ψ⟩}` of a state vector under every Kraus operator.
    pub fn images(&self, psi: &CVector) -> Vec<CVector> {
        self.kraus.iter().map(|e| e * psi).collect()
    }

    /// Applies the channel to a density operator.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "channel dim {} vs state dim {}",
                self.dim,
                rho.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for e in &self.kraus {
            out += e * rho.matrix() * e.adjoint();
        }
        DensityOperator::new(out)
    }

    /// Applies the channel to a pure state.
    pub fn apply_pure(&self, psi: &PureState) -> Result<DensityOperator> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "channel dim {} vs state dim {}",
                self.dim,
                psi.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for image in self.images(psi.amplitudes()) {
            out += &image * image.adjoint();
        }
        DensityOperator::new(out)
    }

    /// Completeness and Choi checks for this channel's Kraus list.
    pub fn validity(&self) -> ChannelValidity {
        ChannelValidity::from_measurements(
            completeness_residual(&self.kraus),
            linalg::hermitian_min_eigenvalue(&self.choi_matrix()),
        )
    }

    /// Choi matrix `Σ vec(Eᵢ) vec(Eᵢ)ᴴ` (column-stacking vec).
    pub fn choi_matrix(&self) -> CMatrix {
        choi_of(&self.kraus)
    }
}

fn check_shapes(kraus: &[CMatrix]) -> Result<usize> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Shape("empty Kraus list".into()))?;
    if first.nrows() != first.ncols() {
        return Err(Error::Shape(format!(
            "Kraus operators must be square, got {}x{}",
            first.nrows(),
            first.ncols()
        )));
    }
    let dim = first.nrows();
    for (i, e) in kraus.iter().enumerate() {
        if e.shape() != (dim, dim) {
            return Err(Error::Shape(format!(
                "Kraus operator {i} has shape {}x{}, expected {dim}x{dim}",
                e.nrows(),
                e.ncols()
            )));
        }
    }
    Ok(dim)
}

fn completeness_residual(kraus: &[CMatrix]) -> f64 {
    let dim = kraus[0].ncols();
    let mut sum = CMatrix::zeros(dim, dim);
    for e in kraus {
        sum += e.adjoint() * e;
    }
    linalg::max_abs_diff(&sum, &CMatrix::identity(dim, dim))
}

fn choi_of(kraus: &[CMatrix]) -> CMatrix {
    let dim = kraus[0].nrows();
    let d2 = dim * dim;
    let mut choi = CMatrix::zeros(d2, d2);
    for e in kraus {
        let v = linalg::vec_col(e);
        choi += &v * v.adjoint();
    }
    choi
}

/// Shape-checks an arbitrary Kraus list and reports completeness residual
/// and smallest Choi eigenvalue without requiring validity.
pub fn validate_channel(kraus: &[CMatrix]) -> Result<ChannelValidity> {
    check_shapes(kraus)?;
    Ok(ChannelValidity::from_measurements(
        completeness_residual(kraus),
        linalg::hermitian_min_eigenvalue(&choi_of(kraus)),
    ))
}

/// Extends a channel with an identity ancilla: Kraus list `{I_R ⊗ Eᵢ}`
/// (ancilla before system, system index fastest).
pub fn extend_with_ancilla(channel: &KrausChannel, ancilla_dim: usize) -> Result<KrausChannel> {
    if ancilla_dim == 0 {
        return Err(Error::Domain("ancilla dimension must be at least 1".into()));
    }
    if ancilla_dim == 1 {
        return Ok(channel.clone());
    }
    let id = CMatrix::identity(ancilla_dim, ancilla_dim);
    let kraus = channel
        .kraus()
        .iter()
        .map(|e| linalg::kron(&id, e))
        .collect();
    let name = channel.name().map(|n| format!("{n}(x){ancilla_dim}"));
    KrausChannel::new(kraus, name)
}

/// Prepends `Uᴴ` to every Kraus operator, reducing U-vs-channel
/// discrimination to identity-vs-channel.
pub fn adjoin_unitary(u: &CMatrix, channel: &KrausChannel) -> Result<KrausChannel> {
    if u.shape() != (channel.dim(), channel.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, channel dim {}",
            u.nrows(),
            u.ncols(),
            channel.dim()
        )));
    }
    let deviation =
        linalg::max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(u.nrows(), u.ncols()));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let udag = u.adjoint();
    let kraus = channel.kraus().iter().map(|e| &udag * e).collect();
    KrausChannel::new(kraus, None)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Identity channel on a `dim`-dimensional space.
pub fn identity_channel(dim: usize) -> KrausChannel {
    KrausChannel::new(vec![CMatrix::identity(dim, dim)], Some("identity".into()))
        .expect("identity channel is valid")
}

/// Single-Kraus channel from a unitary matrix.
pub fn unitary_channel(u: CMatrix, name: Option<String>) -> Result<KrausChannel> {
    let dim = u.nrows();
    let deviation = linalg::max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(dim, dim));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    KrausChannel::new(vec![u], name)
}

/// Pauli-Z as a channel.
pub fn pauli_z_channel() -> KrausChannel {
    let z = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(-1.0)]));
    unitary_channel(z, Some("pauli_z".into())).expect("Z is unitary")
}

/// Real rotation by `theta` as a channel, named `rotation:<theta>`.
pub fn make_rotation_channel(theta: f64) -> Result<KrausChannel> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "rotation angle {theta} outside [0, pi]"
        )));
    }
    let (s, c) = theta.sin_cos();
    let u = CMatrix::from_row_slice(2, 2, &[re(c), re(-s), re(s), re(c)]);
    unitary_channel(u, Some(format!("rotation:{theta:.10}")))
}

/// Replace-family qubit channel with Kraus `{|c_θ⟩⟨0|, |1⟩⟨1|}` where
/// `|c_θ⟩ = cosθ|0⟩ + sinθ|1⟩`; its maximal fidelity against the identity
/// is `cosθ`, attained at `|0⟩`.
pub fn make_replace_channel(theta: f64) -> Result<KrausChannel> {
    if theta <= 0.0 || theta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "replace-channel angle {theta} outside (0, pi/2)"
        )));
    }
    let (s, c) = theta.sin_cos();
    let k1 = CMatrix::from_row_slice(2, 2, &[re(c), linalg::ZERO, re(s), linalg::ZERO]);
    let k2 = CMatrix::from_row_slice(2, 2, &[linalg::ZERO, linalg::ZERO, linalg::ZERO, re(1.0)]);
    KrausChannel::new(vec![k1, k2], Some(format!("replace:{theta:.10}")))
}

/// Amplitude-damping qubit channel with decay probability `gamma`.
pub fn make_amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!(
            "damping rate {gamma} outside [0, 1]"
        )));
    }
    let e0 = CMatrix::from_row_slice(
        2,
        2,
        &[
            re(1.0),
            linalg::ZERO,
            linalg::ZERO,
            re((1.0 - gamma).sqrt()),
        ],
    );
    let e1 = CMatrix::from_row_slice(
        2,
        2,
        &[linalg::ZERO, re(gamma.sqrt()), linalg::ZERO, linalg::ZERO],
    );
    KrausChannel::new(vec![e0, e1], Some(format!("amp_damp:{gamma:.10}")))
}

/// Qubit depolarizing channel with error probability `p`.
pub fn make_depolarizing(p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "depolarizing rate {p} outside [0, 1]"
        )));
    }
    let i = CMatrix::identity(2, 2);
    let x = CMatrix::from_row_slice(2, 2, &[linalg::ZERO, re(1.0), re(1.0), linalg::ZERO]);
    let y = CMatrix::from_row_slice(
        2,
        2,
        &[
            linalg::ZERO,
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            linalg::ZERO,
        ],
    );
    let z = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(-1.0)]));
    let kraus = vec![
        i.scale((1.0 - 3.0 * p / 4.0).sqrt()),
        x.scale((p / 4.0).sqrt()),
        y.scale((p / 4.0).sqrt()),
        z.scale((p / 4.0).sqrt()),
    ];
    KrausChannel::new(kraus, Some(format!("depolarizing:{p:.10}")))
}

/// Random CPTP channel with `m` Kraus operators: Gaussian matrices
/// whitened by `S^{-1/2}` where `S = Σ Gᵢᴴ Gᵢ`.
pub fn random_channel(dim: usize, m: usize, rng: &mut impl Rng) -> KrausChannel {
    assert!(m >= 1 && m <= dim * dim, "Kraus count out of range");
    let gaussians: Vec<CMatrix> = (0..m)
        .map(|_| {
            CMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    let mut s = CMatrix::zeros(dim, dim);
    for g in &gaussians {
        s += g.adjoint() * g;
    }
    let (values, vectors) = linalg::hermitian_eigen(&s);
    let inv_sqrt = CMatrix::from_fn(dim, dim, |r, c| {
        let mut sum = linalg::ZERO;
        for k in 0..dim {
            sum += vectors[(r, k)] * vectors[(c, k)].conj() * re(1.0 / values[k].sqrt());
        }
        sum
    });
    let kraus = gaussians.into_iter().map(|g| g * &inv_sqrt).collect();
    KrausChannel::new(kraus, None).expect("whitened Kraus list is complete")
}
