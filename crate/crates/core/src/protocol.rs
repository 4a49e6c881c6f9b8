//! Synthesis of executable discrimination protocols: the explicit CPTP
//! state-pair transformer and the adaptive 2-dimensional and general
//! schemes built from it.

use crate::bounds;
use crate::channel::{self, KrausChannel};
use crate::error::{Error, Result};
use crate::fidelity::{self, Alpha0Result, FidelityResult, DISTINGUISHABLE_TOL};
use crate::linalg::{self, CMatrix, CVector};
use crate::optimize::{self, OptimizerConfig};
use crate::state::{DensityOperator, PureState};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Slack allowed on the transform feasibility inequality.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Action accuracy (trace distance) required of a synthesized transform.
pub const ACTION_TOL: f64 = 1e-8;
/// Angular slack when comparing accumulated round angles against π/2.
const ANGLE_FUZZ: f64 = 2e-9;
/// Source fidelities above this take the in-support (constant map) path.
const IN_SUPPORT_TOL: f64 = 1e-7;

/// A CPTP map constructed to send a given (mixed, pure) state pair to a
/// given pure target pair.
#[derive(Debug, Clone)]
pub struct StatePairTransform {
    kraus: Vec<CMatrix>,
    source_a: DensityOperator,
    source_b: PureState,
    target_a: PureState,
    target_b: PureState,
}

impl StatePairTransform {
    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn source_a(&self) -> &DensityOperator {
        &self.source_a
    }

    pub fn source_b(&self) -> &PureState {
        &self.source_b
    }

    pub fn target_a(&self) -> &PureState {
        &self.target_a
    }

    pub fn target_b(&self) -> &PureState {
        &self.target_b
    }

    /// Applies the transform to a density operator.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let dim = rho.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        DensityOperator::new(out)
    }

    /// Completeness / Choi measurements of the Kraus list.
    pub fn validity(&self) -> channel::ChannelValidity {
        channel::validate_channel(&self.kraus).expect("kraus list is shape-consistent")
    }

    /// Rebuilds a transform from parts (used by plan deserialization) and
    /// re-verifies every type invariant.
    pub fn from_parts(
        kraus: Vec<CMatrix>,
        source_a: DensityOperator,
        source_b: PureState,
        target_a: PureState,
        target_b: PureState,
    ) -> Result<Self> {
        let t = Self {
            kraus,
            source_a,
            source_b,
            target_a,
            target_b,
        };
        t.verify()?;
        Ok(t)
    }

    fn verify(&self) -> Result<()> {
        let validity = channel::validate_channel(&self.kraus)?;
        if !validity.is_valid {
            return Err(Error::Synthesis(format!(
                "transform fails channel validity: residual {:.3e}, choi min {:.3e}",
                validity.completeness_residual, validity.choi_min_eigenvalue
            )));
        }
        let got_a = self.apply(&self.source_a)?;
        let err_a = linalg::trace_distance(got_a.matrix(), self.target_a.to_density().matrix());
        let got_b = self.apply(&self.source_b.to_density())?;
        let err_b = linalg::trace_distance(got_b.matrix(), self.target_b.to_density().matrix());
        if err_a > ACTION_TOL || err_b > ACTION_TOL {
            return Err(Error::Synthesis(format!(
                "transform action errors {err_a:.3e} / {err_b:.3e} exceed {ACTION_TOL:.0e}"
            )));
        }
        Ok(())
    }
}

/// Builds the CPTP map sending `source_a ↦ |target_a⟩⟨target_a|` and
/// `|source_b⟩⟨source_b| ↦ |target_b⟩⟨target_b|`.
///
/// Exists iff `F̃(source_a, source_b) ≤ |⟨target_a|target_b⟩|`. The
/// construction is the dual-basis one: an orthonormal basis `{u_i}` of
/// `supp(source_a)` extended by `source_b`, with biorthogonal duals
/// `{ũ_i, b̃}`; Kraus operators `|target_a⟩⟨ũ_j| + c_j|target_b⟩⟨b̃|`
/// (`c_j = ⟨u_j|source_b⟩ / ⟨target_a|target_b⟩`), a closing
/// `√(1−Σ|c|²)·|target_b⟩⟨b̃|`, and a funnel `|target_a⟩⟨e_k|` over the
/// complement of the joint span.
pub fn pair_transform(
    source_a: &DensityOperator,
    source_b: &PureState,
    target_a: &PureState,
    target_b: &PureState,
) -> Result<StatePairTransform> {
    let dim = source_a.dim();
    if source_b.dim() != dim || target_a.dim() != dim || target_b.dim() != dim {
        return Err(Error::DimensionMismatch(
            "all transform states must share one dimension".into(),
        ));
    }
    let support = source_a.support_projector();
    let source_fidelity = support.projection_norm(source_b.amplitudes()).min(1.0);
    let t = target_a.overlap(target_b);
    let target_overlap = t.norm().min(1.0);
    if source_fidelity > target_overlap + FEASIBILITY_TOL {
        return Err(Error::InfeasibleTransform {
            source_fidelity,
            target_overlap,
        });
    }

    let a_vec = target_a.amplitudes();
    let b_vec = target_b.amplitudes();
    let mut kraus: Vec<CMatrix> = Vec::new();

    if source_fidelity >= 1.0 - IN_SUPPORT_TOL {
        // source_b sits inside supp(source_a): only the constant map to
        // target_a can work, and the targets must share a ray
        for u in support.basis() {
            kraus.push(a_vec * u.adjoint());
        }
        for e in complement_basis(dim, support.basis()) {
            kraus.push(a_vec * e.adjoint());
        }
    } else {
        let r = support.rank();
        let residual = support.residual(source_b.amplitudes());
        let b_perp = residual.clone().unscale(residual.norm());
        // biorthogonal duals of {u_1..u_r, source_b} inside the joint span
        let mut basis_b = CMatrix::zeros(dim, r + 1);
        for (i, u) in support.basis().iter().enumerate() {
            basis_b.set_column(i, u);
        }
        basis_b.set_column(r, source_b.amplitudes());
        let gram = basis_b.adjoint() * &basis_b;
        let gram_inv = gram.try_inverse().ok_or_else(|| {
            Error::Synthesis("joint-span Gram matrix is numerically singular".into())
        })?;
        let duals = &basis_b * gram_inv;

        let mut coeffs: Vec<Complex64> = Vec::with_capacity(r);
        if target_overlap > 1e-12 {
            for u in support.basis() {
                coeffs.push(u.dotc(source_b.amplitudes()) / t);
            }
        } else {
            // zero target overlap forces all c_i = 0; the precondition
            // already bounds the dropped components by the slack
            coeffs.resize(r, linalg::ZERO);
        }
        let mut sum_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if sum_sq > 1.0 {
            let scale = 1.0 / sum_sq.sqrt();
            for c in &mut coeffs {
                *c *= Complex64::new(scale, 0.0);
            }
            sum_sq = 1.0;
        }
        let b_dual = CVector::from(duals.column(r));
        for (j, c_j) in coeffs.iter().enumerate() {
            let u_dual = CVector::from(duals.column(j));
            let mut k = a_vec * u_dual.adjoint();
            k += (b_vec * b_dual.adjoint()).scale(1.0) * *c_j;
            kraus.push(k);
        }
        let beta = (1.0 - sum_sq).max(0.0).sqrt();
        if beta > 1e-15 {
            kraus.push((b_vec * b_dual.adjoint()).scale(beta));
        }
        // funnel the complement of the joint span to target_a
        let mut joint = support.basis().to_vec();
        joint.push(b_perp);
        for e in complement_basis(dim, &joint) {
            kraus.push(a_vec * e.adjoint());
        }
    }

    let transform = StatePairTransform {
        kraus,
        source_a: source_a.clone(),
        source_b: source_b.clone(),
        target_a: target_a.clone(),
        target_b: target_b.clone(),
    };
    transform.verify()?;
    Ok(transform)
}

/// Orthonormal basis of the orthogonal complement of `span(joint)`.
///
/// Residuals are cut at an absolute norm of `1e-8`: when the joint span
/// already covers the space, every residual is numerical noise and the
/// complement is empty.
fn complement_basis(dim: usize, joint: &[CVector]) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for k in 0..dim {
        let mut e = CVector::zeros(dim);
        e[k] = linalg::ONE;
        for _ in 0..2 {
            e = linalg::orthogonal_residual(joint, &e);
            e = linalg::orthogonal_residual(&basis, &e);
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e.unscale(norm));
        }
    }
    basis
}

/// One adaptive round: the state fed to the unknown operation under each
/// hypothesis, plus the known intermediate transform applied beforehand.
#[derive(Debug, Clone)]
pub struct Round {
    /// 1-based round number.
    pub index: usize,
    /// Intermediate transform applied before this round's query (absent in
    /// round 1).
    pub pre_transform: Option<StatePairTransform>,
    /// Input to the unknown operation if it is the channel.
    pub input_if_e: PureState,
    /// Input to the unknown operation if it is the identity.
    pub input_if_i: PureState,
    /// Predicted maximal fidelity between the branch outputs after this
    /// round's query.
    pub predicted_overlap_after: f64,
}

/// A complete adaptive discrimination protocol against the identity.
#[derive(Debug, Clone)]
pub struct ProtocolPlan {
    pub channel: KrausChannel,
    pub rounds: Vec<Round>,
    /// Measuring `{|b'⟩⟨b'|, I − |b'⟩⟨b'|}` at the end separates the
    /// hypotheses: the identity branch lands on `b'`, the channel branch
    /// is orthogonal to it.
    pub final_measurement_vector: PureState,
    pub claimed_queries: usize,
}

impl ProtocolPlan {
    /// Re-checks the structural invariants (round count, transform
    /// validity, terminal orthogonality).
    pub fn verify(&self) -> Result<()> {
        if self.rounds.is_empty() {
            return Err(Error::Synthesis("plan has no rounds".into()));
        }
        if self.claimed_queries != self.rounds.len() {
            return Err(Error::Synthesis(format!(
                "claimed {} queries but plan has {} rounds",
                self.claimed_queries,
                self.rounds.len()
            )));
        }
        for round in &self.rounds {
            if let Some(t) = &round.pre_transform {
                t.verify()?;
            }
        }
        let terminal = self
            .channel
            .apply_pure(&self.rounds.last().expect("nonempty").input_if_e)?;
        let leak = terminal
            .support_projector()
            .projection_norm(self.final_measurement_vector.amplitudes());
        if leak > 1e-7 {
            return Err(Error::Synthesis(format!(
                "final measurement vector leaks {leak:.3e} into the channel-branch support"
            )));
        }
        Ok(())
    }
}

/// Searches for an input `b` whose Kraus images are all collinear
/// (`Eᵢ|b⟩ = λᵢ|c⟩`): minimizes the second singular value of the stacked
/// image matrix, preferring feasible points with the smallest overlap
/// `|⟨c|b⟩|`. Returns `(b, c, overlap)` when the second singular value
/// stays below `1e-8`.
pub fn collinear_input_search(
    channel: &KrausChannel,
    config: &OptimizerConfig,
) -> Option<(PureState, PureState, f64)> {
    let dim = channel.dim();
    let starts: Vec<Vec<CVector>> = (0..dim)
        .map(|k| vec![PureState::basis(dim, k).amplitudes().clone()])
        .collect();
    let decompose = |psi: &CVector| -> (f64, CVector, f64) {
        let images = channel.images(psi);
        let mut m = CMatrix::zeros(dim, images.len());
        for (j, img) in images.iter().enumerate() {
            m.set_column(j, img);
        }
        let svd = m.svd(true, false);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sigma2 = if order.len() > 1 {
            svd.singular_values[order[1]]
        } else {
            0.0
        };
        let u = svd.u.as_ref().expect("svd with u");
        let c = CVector::from(u.column(order[0]));
        let overlap = c.dotc(psi).norm();
        (sigma2, c, overlap)
    };
    // lexicographic objective: feasibility first, then minimal overlap
    let objective = move |p: &[CVector]| {
        let (sigma2, _, overlap) = decompose(&p[0]);
        1e6 * sigma2 + overlap
    };
    let outcome = optimize::minimize_on_spheres(&[dim], &starts, &objective, config);
    let best = outcome.best();
    let (sigma2, c, overlap) = decompose(&best.point[0]);
    if sigma2 > 1e-8 {
        return None;
    }
    let b = PureState::normalized(best.point[0].clone()).ok()?;
    let c = PureState::normalized(c).ok()?;
    Some((b, c, overlap))
}

/// Phase-aligns `target` so `⟨reference|target⟩` is real nonnegative.
fn phase_align(reference: &CVector, target: &CVector) -> CVector {
    let overlap = reference.dotc(target);
    if overlap.norm() > 1e-12 {
        target * (overlap.conj() / overlap.norm())
    } else {
        target.clone()
    }
}

/// Exact 2-dimensional scheme: `N = ⌈π/2θ⌉` rounds alternating the
/// intermediate transforms that walk the identity branch around the Bloch
/// circle while the channel branch is reset to the minimizer each round.
pub fn plan_2d(
    channel: &KrausChannel,
    f1: &FidelityResult,
    _config: &OptimizerConfig,
) -> Result<ProtocolPlan> {
    if channel.dim() != 2 {
        return Err(Error::Domain(format!(
            "plan_2d requires dimension 2, got {}",
            channel.dim()
        )));
    }
    if f1.value >= 1.0 - DISTINGUISHABLE_TOL {
        return Err(Error::NotDistinguishable { f1: f1.value });
    }
    let b = f1.witness_input.primary().clone();
    let out = channel.apply_pure(&b)?;
    let support = out.support_projector();

    if f1.value <= DISTINGUISHABLE_TOL {
        // theta = pi/2: one query, measure along the residual direction
        let residual = support.residual(b.amplitudes());
        let b_prime = PureState::normalized(residual)
            .map_err(|_| Error::Synthesis("minimizer sits inside its output support".into()))?;
        let rounds = vec![Round {
            index: 1,
            pre_transform: None,
            input_if_e: b.clone(),
            input_if_i: b.clone(),
            predicted_overlap_after: 0.0,
        }];
        let plan = ProtocolPlan {
            channel: channel.clone(),
            rounds,
            final_measurement_vector: b_prime,
            claimed_queries: 1,
        };
        plan.verify()?;
        return Ok(plan);
    }

    if support.rank() != 1 {
        return Err(Error::Synthesis(
            "channel output on the minimizer is not pure; f1 witness is inaccurate".into(),
        ));
    }
    // c with <b|c> real nonnegative, and the coplanar unit vector b_perp
    let c_vec = phase_align(b.amplitudes(), &support.basis()[0]);
    let cos_t = b.amplitudes().dotc(&c_vec).re.clamp(0.0, 1.0);
    let theta = f1.value.acos();
    let n_rounds = bounds::nmin_exact_2d(f1.value)?;
    let b_perp_raw = &c_vec - b.amplitudes().scale(cos_t);
    let b_perp = b_perp_raw.clone().unscale(b_perp_raw.norm());

    let target_state = |k: usize| -> Result<PureState> {
        // identity-branch target before round k+1
        let (x, y) = if (k as f64 + 1.0) * theta >= FRAC_PI_2 - ANGLE_FUZZ {
            (theta.sin(), theta.cos())
        } else {
            ((k as f64 * theta).cos(), (k as f64 * theta).sin())
        };
        PureState::normalized(b.amplitudes().scale(x) - b_perp.scale(y))
    };

    let predicted = |k: usize| -> f64 {
        if k as f64 * theta >= FRAC_PI_2 - ANGLE_FUZZ {
            0.0
        } else {
            (k as f64 * theta).cos()
        }
    };

    let mut rounds = Vec::with_capacity(n_rounds as usize);
    let mut identity_state = b.clone();
    for k in 1..=n_rounds as usize {
        let pre_transform = if k == 1 {
            None
        } else {
            let target_b = target_state(k - 1)?;
            let t = pair_transform(&out, &identity_state, &b, &target_b)
                .map_err(|e| Error::Synthesis(format!("round {k} transform infeasible: {e}")))?;
            identity_state = target_b;
            Some(t)
        };
        rounds.push(Round {
            index: k,
            pre_transform,
            input_if_e: b.clone(),
            input_if_i: identity_state.clone(),
            predicted_overlap_after: predicted(k),
        });
    }
    let plan = ProtocolPlan {
        channel: channel.clone(),
        rounds,
        final_measurement_vector: identity_state,
        claimed_queries: n_rounds as usize,
    };
    plan.verify()?;
    Ok(plan)
}

/// General-dimension scheme from the q-reduction argument: each query
/// multiplies the branch fidelity by at most `cosθ` (via Lemma-2
/// witnesses) until it drops to `cosα₀`, then one final query lands the
/// identity branch on `b'` orthogonal to the channel-branch support.
pub fn plan_general(
    channel: &KrausChannel,
    f1: &FidelityResult,
    a0: &Alpha0Result,
    _config: &OptimizerConfig,
) -> Result<ProtocolPlan> {
    if f1.value >= 1.0 - DISTINGUISHABLE_TOL {
        return Err(Error::NotDistinguishable { f1: f1.value });
    }
    let b = a0.witness_b.clone();
    let b_prime = a0.witness_b_prime.clone();

    if f1.value <= DISTINGUISHABLE_TOL {
        let rounds = vec![Round {
            index: 1,
            pre_transform: None,
            input_if_e: b.clone(),
            input_if_i: b.clone(),
            predicted_overlap_after: 0.0,
        }];
        let plan = ProtocolPlan {
            channel: channel.clone(),
            rounds,
            final_measurement_vector: b_prime,
            claimed_queries: 1,
        };
        plan.verify()?;
        return Ok(plan);
    }

    let out = channel.apply_pure(&b)?;
    let theta = f1.value.acos();
    let round_cap = bounds::nmin_upper(theta, a0.cos_alpha0.min(1.0 - 1e-15))? as usize + 4;

    let mut q = fidelity::max_fidelity_value(&out, &b.to_density())?;
    let mut rounds = vec![Round {
        index: 1,
        pre_transform: None,
        input_if_e: b.clone(),
        input_if_i: b.clone(),
        predicted_overlap_after: q,
    }];
    let mut identity_state = b.clone();

    while q > a0.cos_alpha0 + FEASIBILITY_TOL {
        if rounds.len() > round_cap {
            return Err(Error::NumericalStall(format!(
                "fidelity reduction exceeded {round_cap} rounds (q = {q})"
            )));
        }
        let alpha = q.clamp(0.0, 1.0).acos();
        let witness = fidelity::lemma2_witness(channel, &b, &b_prime, alpha)?;
        let transform = pair_transform(&out, &identity_state, &b, &witness).map_err(|e| {
            Error::Synthesis(format!(
                "round {} transform infeasible: {e}",
                rounds.len() + 1
            ))
        })?;
        let q_next = fidelity::max_fidelity_value(&out, &witness.to_density())?;
        if q_next >= q - 1e-12 {
            return Err(Error::NumericalStall(format!(
                "fidelity failed to decrease: {q} -> {q_next}"
            )));
        }
        rounds.push(Round {
            index: rounds.len() + 1,
            pre_transform: Some(transform),
            input_if_e: b.clone(),
            input_if_i: witness.clone(),
            predicted_overlap_after: q_next,
        });
        identity_state = witness;
        q = q_next;
    }

    // final orthogonalization round: map the pair onto (b, b')
    let transform = pair_transform(&out, &identity_state, &b, &b_prime)
        .map_err(|e| Error::Synthesis(format!("final transform infeasible: {e}")))?;
    rounds.push(Round {
        index: rounds.len() + 1,
        pre_transform: Some(transform),
        input_if_e: b.clone(),
        input_if_i: b_prime.clone(),
        predicted_overlap_after: 0.0,
    });

    let claimed_queries = rounds.len();
    let plan = ProtocolPlan {
        channel: channel.clone(),
        rounds,
        final_measurement_vector: b_prime,
        claimed_queries,
    };
    plan.verify()?;
    Ok(plan)
}
