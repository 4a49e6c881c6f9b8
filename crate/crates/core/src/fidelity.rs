//! Maximal fidelity between states and the (q-)maximal fidelities between
//! a channel and the identity, with witness states.
//!
//! The searches are nonconvex, so every computed minimum is a certified
//! upper estimate of the true minimum: the witness states reproduce the
//! reported value exactly, but a lower minimum elsewhere can never be
//! excluded by local search.

use crate::channel::{extend_with_ancilla, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::optimize::{self, MultiStartOutcome, OptimizerConfig};
use crate::state::{DensityOperator, PureState, SUPPORT_REL_TOL};

/// Channels with `f1` at or above this are treated as indistinguishable
/// from the identity.
pub const DISTINGUISHABLE_TOL: f64 = 1e-6;
/// Starts within this of the best value count as minimizers for alpha0.
pub const MINIMIZER_VALUE_TOL: f64 = 1e-6;
/// Ray (phase-free chordal) distance separating minimizer clusters.
pub const CLUSTER_RAY_TOL: f64 = 1e-4;

/// Input state(s) attaining an optimized fidelity value.
#[derive(Debug, Clone)]
pub enum WitnessInput {
    Single(PureState),
    Pair(PureState, PureState),
}

impl WitnessInput {
    /// The first (or only) witness state.
    pub fn primary(&self) -> &PureState {
        match self {
            WitnessInput::Single(s) => s,
            WitnessInput::Pair(a, _) => a,
        }
    }
}

/// An optimized fidelity value plus witnesses and solver diagnostics.
#[derive(Debug, Clone)]
pub struct FidelityResult {
    /// The fidelity value in [0, 1].
    pub value: f64,
    /// `arccos(value)`.
    pub theta: f64,
    /// State (or state pair) attaining `value`.
    pub witness_input: WitnessInput,
    /// Unit vector in the first output support realizing the overlap.
    pub witness_output_overlap_state: PureState,
    /// Total starts evaluated (0 for closed-form results).
    pub starts: usize,
    /// Starts that reached the step tolerance.
    pub converged_starts: usize,
    /// Finite-difference gradient norm at the best point (diagnostic).
    pub best_gradient_norm: f64,
}

impl FidelityResult {
    fn closed_form(value: f64, witness_input: WitnessInput, overlap_state: PureState) -> Self {
        Self {
            value,
            theta: value.clamp(0.0, 1.0).acos(),
            witness_input,
            witness_output_overlap_state: overlap_state,
            starts: 0,
            converged_starts: 0,
            best_gradient_norm: 0.0,
        }
    }
}

/// The Lemma-2 geometry of a channel: the largest overlap between an
/// `f1` minimizer `b` and a state `b'` orthogonal to `supp(E(b))`.
#[derive(Debug, Clone)]
pub struct Alpha0Result {
    pub cos_alpha0: f64,
    pub alpha0: f64,
    pub witness_b: PureState,
    pub witness_b_prime: PureState,
    pub minimizer_cluster_count: usize,
}

/// Orthonormal basis of `span{Eᵢ|ψ⟩}` (the support of `E(ψ)` for pure `ψ`).
fn output_span(channel: &KrausChannel, psi: &CVector) -> Vec<CVector> {
    linalg::orthonormal_span(&channel.images(psi), SUPPORT_REL_TOL)
}

/// The `f1` objective `‖Π_supp(E(ψ)) |ψ⟩‖` evaluated at a pure state.
pub fn f1_objective(channel: &KrausChannel, psi: &PureState) -> f64 {
    let span = output_span(channel, psi.amplitudes());
    linalg::projection_norm(&span, psi.amplitudes()).min(1.0)
}

/// Maximal fidelity between the spans of two image families: the largest
/// singular value of `Q0ᴴ Q1` for orthonormal bases `Q0`, `Q1`.
fn span_fidelity(span0: &[CVector], span1: &[CVector]) -> f64 {
    if span0.is_empty() || span1.is_empty() {
        return 0.0;
    }
    let m = CMatrix::from_fn(span0.len(), span1.len(), |i, j| span0[i].dotc(&span1[j]));
    linalg::largest_singular_value(&m).min(1.0)
}

/// Maximal fidelity `F̃(ρ0, ρ1)`: the largest singular value of `P0·P1`
/// over the support projectors, with the attaining support vectors.
pub fn max_fidelity_states(
    rho0: &DensityOperator,
    rho1: &DensityOperator,
) -> Result<FidelityResult> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {} vs {}",
            rho0.dim(),
            rho1.dim()
        )));
    }
    let p0 = rho0.support_projector();
    let p1 = rho1.support_projector();
    let product = p0.matrix() * p1.matrix();
    let svd = product.clone().svd(true, true);
    let mut top = 0usize;
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[top] {
            top = i;
        }
    }
    let sigma = linalg::clamp_unit(svd.singular_values[top])?;
    let (w0, w1) = if sigma > 1e-12 {
        let u = svd.u.as_ref().expect("svd computed with u");
        let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
        let u1 = CVector::from(u.column(top));
        let v1 = CVector::from(v_t.row(top).adjoint());
        // the top right-singular vector already lies in supp(rho1)
        (PureState::normalized(u1)?, PureState::normalized(v1)?)
    } else {
        // orthogonal supports: any support vectors witness the zero
        (rho0.top_eigenvector(), rho1.top_eigenvector())
    };
    Ok(FidelityResult::closed_form(
        sigma,
        WitnessInput::Pair(w0.clone(), w1),
        w0,
    ))
}

/// Convenience wrapper returning only the value of `F̃(ρ0, ρ1)`.
pub fn max_fidelity_value(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    Ok(max_fidelity_states(rho0, rho1)?.value)
}

fn basis_starts(dim: usize) -> Vec<Vec<CVector>> {
    (0..dim)
        .map(|k| vec![PureState::basis(dim, k).amplitudes().clone()])
        .collect()
}

fn f1_multistart(
    channel: &KrausChannel,
    config: &OptimizerConfig,
    extra_starts: &[Vec<CVector>],
) -> MultiStartOutcome {
    let dim = channel.dim();
    let mut starts = basis_starts(dim);
    starts.extend_from_slice(extra_starts);
    let objective = move |p: &[CVector]| {
        let span = output_span(channel, &p[0]);
        linalg::projection_norm(&span, &p[0]).min(1.0)
    };
    optimize::minimize_on_spheres(&[dim], &starts, &objective, config)
}

fn f1_from_outcome(
    channel: &KrausChannel,
    outcome: &MultiStartOutcome,
    config: &OptimizerConfig,
) -> Result<FidelityResult> {
    if outcome.converged_starts == 0 {
        return Err(Error::OptimizerStall {
            best: outcome.best().value,
        });
    }
    let best = outcome.best();
    let value = linalg::clamp_unit(best.value)?;
    let witness = PureState::normalized(best.point[0].clone())?;
    let span = output_span(channel, witness.amplitudes());
    let projected = {
        let residual = linalg::orthogonal_residual(&span, witness.amplitudes());
        let p = witness.amplitudes() - residual;
        if p.norm() > 1e-9 {
            PureState::normalized(p)?
        } else {
            // value ~ 0: any support vector realizes the (zero) overlap
            PureState::normalized(span[0].clone())?
        }
    };
    let objective = move |p: &[CVector]| {
        let span = output_span(channel, &p[0]);
        linalg::projection_norm(&span, &p[0]).min(1.0)
    };
    let gradient = optimize::gradient_norm(&best.point, &objective);
    let _ = config;
    Ok(FidelityResult {
        value,
        theta: value.acos(),
        witness_input: WitnessInput::Single(witness),
        witness_output_overlap_state: projected,
        starts: outcome.all.len(),
        converged_starts: outcome.converged_starts,
        best_gradient_norm: gradient,
    })
}

/// `F̃₁(E, I) = min_ψ ‖Π_supp(E(ψ)) |ψ⟩‖` by multi-start local descent.
///
/// The computational basis states are always included among the starts;
/// isolated minimizers of rank-dropping channels sit there in the test
/// families.
pub fn f1_identity(channel: &KrausChannel, config: &OptimizerConfig) -> Result<FidelityResult> {
    config.validate()?;
    let outcome = f1_multistart(channel, config, &[]);
    f1_from_outcome(channel, &outcome, config)
}

/// Entanglement-assisted `F̃₁`: `f1_identity` of the channel extended by an
/// equal-dimension identity ancilla. Product embeddings of the unassisted
/// witness are seeded as extra starts, so the result never exceeds the
/// unassisted value.
pub fn f1_ea(channel: &KrausChannel, config: &OptimizerConfig) -> Result<FidelityResult> {
    config.validate()?;
    let dim = channel.dim();
    let extended = extend_with_ancilla(channel, dim)?;
    let unassisted = f1_identity(channel, config)?;
    let embeds: Vec<Vec<CVector>> = (0..dim)
        .map(|r| {
            let mut v = CVector::zeros(dim * dim);
            for q in 0..dim {
                v[r * dim + q] = unassisted.witness_input.primary().amplitudes()[q];
            }
            vec![v]
        })
        .collect();
    let outcome = f1_multistart(&extended, config, &embeds);
    f1_from_outcome(&extended, &outcome, config)
}

fn ray_distance(a: &CVector, b: &CVector) -> f64 {
    (2.0 - 2.0 * a.dotc(b).norm()).max(0.0).sqrt()
}

/// Lemma-2 geometry: over every located minimizer cluster of `f1`, the
/// largest residual norm `‖(I − Π_supp(E(b)))|b⟩‖` and its directions.
pub fn alpha0(
    channel: &KrausChannel,
    f1: &FidelityResult,
    config: &OptimizerConfig,
) -> Result<Alpha0Result> {
    if f1.value >= 1.0 - DISTINGUISHABLE_TOL {
        return Err(Error::UndefinedAlpha0 { f1: f1.value });
    }
    // rerun the same multi-start (same seed) to recover all minimizers
    let outcome = f1_multistart(channel, config, &[]);
    let best_value = outcome.best().value.min(f1.value);
    let mut indexed: Vec<usize> = (0..outcome.all.len())
        .filter(|&i| outcome.all[i].value <= best_value + MINIMIZER_VALUE_TOL)
        .collect();
    indexed.sort_by(|&a, &b| outcome.all[a].value.total_cmp(&outcome.all[b].value));
    let mut reps: Vec<&CVector> = Vec::new();
    for i in indexed {
        let candidate = &outcome.all[i].point[0];
        if reps
            .iter()
            .all(|r| ray_distance(r, candidate) >= CLUSTER_RAY_TOL)
        {
            reps.push(candidate);
        }
    }
    let mut best: Option<(f64, CVector, CVector)> = None;
    for b in reps.iter() {
        let span = output_span(channel, b);
        let residual = linalg::orthogonal_residual(&span, b);
        let norm = residual.norm();
        if norm < 1e-12 {
            continue;
        }
        if best.as_ref().is_none_or(|(n, _, _)| norm > *n) {
            best = Some((norm, (*b).clone(), residual.unscale(norm)));
        }
    }
    let (cos_alpha0, b, b_prime) = best.ok_or_else(|| {
        Error::DegenerateGeometry(
            "no minimizer has a nonzero residual against its output support".into(),
        )
    })?;
    let cos_alpha0 = cos_alpha0.min(1.0);
    Ok(Alpha0Result {
        cos_alpha0,
        alpha0: cos_alpha0.acos(),
        witness_b: PureState::normalized(b)?,
        witness_b_prime: PureState::normalized(b_prime)?,
        minimizer_cluster_count: reps.len(),
    })
}

/// `F̃_q(E0, E1)`: minimizes `F̃(E0(ψ0), E1(ψ1))` over pure pairs with
/// `|⟨ψ0|ψ1⟩| = q`, parameterized as `ψ1 = q·ψ0 + √(1−q²)·χ` with `χ ⊥ ψ0`.
pub fn q_max_fidelity(
    ch0: &KrausChannel,
    ch1: &KrausChannel,
    q: f64,
    config: &OptimizerConfig,
) -> Result<FidelityResult> {
    config.validate()?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
    }
    if ch0.dim() != ch1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel dims {} vs {}",
            ch0.dim(),
            ch1.dim()
        )));
    }
    let dim = ch0.dim();
    let mut starts: Vec<Vec<CVector>> = Vec::new();
    for i in 0..dim {
        let psi0 = PureState::basis(dim, i).amplitudes().clone();
        let chi = PureState::basis(dim, (i + 1) % dim).amplitudes().clone();
        starts.push(vec![psi0, chi]);
    }
    let objective = move |p: &[CVector]| {
        let psi0 = &p[0];
        let (_, psi1) = constrained_pair(psi0, &p[1], q);
        let span0 = output_span(ch0, psi0);
        let span1 = output_span(ch1, &psi1);
        span_fidelity(&span0, &span1)
    };
    let outcome = optimize::minimize_on_spheres(&[dim, dim], &starts, &objective, config);
    if outcome.converged_starts == 0 {
        return Err(Error::OptimizerStall {
            best: outcome.best().value,
        });
    }
    let best = outcome.best();
    let value = linalg::clamp_unit(best.value)?;
    let (psi0_raw, psi1_raw) = constrained_pair(&best.point[0], &best.point[1], q);
    let psi0 = PureState::normalized(psi0_raw)?;
    let psi1 = PureState::normalized(psi1_raw)?;
    let overlap_state = top_overlap_vector(ch0, &psi0, ch1, &psi1)?;
    let gradient = optimize::gradient_norm(&best.point, &objective);
    Ok(FidelityResult {
        value,
        theta: value.acos(),
        witness_input: WitnessInput::Pair(psi0, psi1),
        witness_output_overlap_state: overlap_state,
        starts: outcome.all.len(),
        converged_starts: outcome.converged_starts,
        best_gradient_norm: gradient,
    })
}

/// Builds `(ψ0, ψ1)` with `⟨ψ0|ψ1⟩ = q` from a free vector `raw_chi`.
fn constrained_pair(psi0: &CVector, raw_chi: &CVector, q: f64) -> (CVector, CVector) {
    let dim = psi0.len();
    let orthogonalize = |raw: &CVector| {
        let mut v = raw.clone();
        // two passes keep the residual overlap at machine scale even when
        // the raw direction is nearly parallel to psi0
        for _ in 0..2 {
            let overlap = psi0.dotc(&v);
            v.axpy(-overlap, psi0, linalg::ONE);
        }
        v
    };
    let mut chi = orthogonalize(raw_chi);
    let mut norm = chi.norm();
    if norm < 1e-6 {
        // raw direction collapsed onto psi0: fall back to a deterministic
        // orthogonal direction
        for k in 0..dim {
            let mut candidate = CVector::zeros(dim);
            candidate[k] = linalg::ONE;
            let candidate = orthogonalize(&candidate);
            if candidate.norm() > 1e-6 {
                norm = candidate.norm();
                chi = candidate;
                break;
            }
        }
    }
    let chi = chi.unscale(norm);
    let psi1 = psi0.scale(q) + chi.scale((1.0 - q * q).max(0.0).sqrt());
    (psi0.clone(), psi1)
}

fn top_overlap_vector(
    ch0: &KrausChannel,
    psi0: &PureState,
    ch1: &KrausChannel,
    psi1: &PureState,
) -> Result<PureState> {
    let span0 = output_span(ch0, psi0.amplitudes());
    let span1 = output_span(ch1, psi1.amplitudes());
    if span0.is_empty() {
        return Err(Error::Numerical("empty output support".into()));
    }
    if span1.is_empty() {
        return PureState::normalized(span0[0].clone());
    }
    let m = CMatrix::from_fn(span0.len(), span1.len(), |i, j| span0[i].dotc(&span1[j]));
    let svd = m.clone().svd(true, false);
    let mut top = 0usize;
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[top] {
            top = i;
        }
    }
    let u = svd.u.as_ref().expect("svd computed with u");
    let mut vec = CVector::zeros(psi0.dim());
    for (i, q_i) in span0.iter().enumerate() {
        vec.axpy(u[(i, top)], q_i, linalg::ONE);
    }
    PureState::normalized(vec)
}

/// Lemma-2 witness `|c⟩ = x|b⟩ + y|b'⟩` with `y = sinα/sinα₀` and
/// `x = sin(α₀−α)/sinα₀`, giving `|⟨b|c⟩| = cosα` and
/// `F̃(E(b), c) ≤ |sin(α₀−α)|/sinα₀ · cosθ`.
pub fn lemma2_witness(
    _channel: &KrausChannel,
    b: &PureState,
    b_prime: &PureState,
    alpha: f64,
) -> Result<PureState> {
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, pi/2]")));
    }
    let raw_overlap = b.overlap(b_prime);
    let cos_alpha0 = raw_overlap.norm();
    if cos_alpha0 >= 1.0 - 1e-9 {
        return Err(Error::DegenerateGeometry(
            "cos(alpha0) = 1 leaves no independent b' direction".into(),
        ));
    }
    // align the relative phase so <b|b'> is real nonnegative
    let aligned = if cos_alpha0 > 1e-12 {
        b_prime.amplitudes().scale(1.0) * (raw_overlap.conj() / cos_alpha0)
    } else {
        b_prime.amplitudes().clone()
    };
    let alpha0 = cos_alpha0.clamp(0.0, 1.0).acos();
    let sin_alpha0 = alpha0.sin();
    let y = alpha.sin() / sin_alpha0;
    let x = (alpha0 - alpha).sin() / sin_alpha0;
    let c_raw = b.amplitudes().scale(x) + aligned.scale(y);
    let c = PureState::normalized(c_raw)?;
    let achieved = c.abs_overlap(b);
    if (achieved - alpha.cos()).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "witness overlap {achieved} deviates from cos(alpha) = {}",
            alpha.cos()
        )));
    }
    Ok(c)
}
