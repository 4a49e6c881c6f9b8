//! Executes protocol plans against both hypotheses: exact density-operator
//! evolution, seeded Monte Carlo discrimination, and the Lemma-2 /
//! Theorem-4 bound-verification sweeps.

use crate::bounds;
use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::fidelity;
use crate::linalg::{self, CVector};
use crate::protocol::ProtocolPlan;
use crate::state::{DensityOperator, PureState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Which operation the unknown box actually is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Identity,
    Channel,
}

/// Exact evolution record of one plan under one hypothesis.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Maximal fidelity between the two branch outputs after each round.
    pub round_overlaps: Vec<f64>,
    /// Probability of the measurement outcome that leads to a wrong guess.
    pub terminal_error_probability: f64,
    pub hypothesis: Hypothesis,
}

/// Aggregate of a seeded Monte Carlo discrimination experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationReport {
    pub shots: u64,
    pub wrong_guesses: u64,
    pub empirical_error: f64,
    /// Largest forbidden-outcome probability observed at the final
    /// measurement across all shots.
    pub max_terminal_leak: f64,
    pub seed: u64,
}

/// One row of a Theorem-4 verification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm4Row {
    pub q: f64,
    pub bound: f64,
    pub min_sampled: f64,
    pub violated: bool,
}

/// One row of a Lemma-2 constructive verification.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Row {
    pub alpha: f64,
    pub bound: f64,
    pub achieved: f64,
    pub violated: bool,
}

fn apply_hypothesis(
    plan: &ProtocolPlan,
    hypothesis: Hypothesis,
    rho: &DensityOperator,
) -> Result<DensityOperator> {
    match hypothesis {
        Hypothesis::Identity => Ok(rho.clone()),
        Hypothesis::Channel => plan.channel.apply(rho),
    }
}

/// Evolves the plan exactly (no sampling) under `hypothesis`.
///
/// `round_overlaps` tracks both branches regardless of the hypothesis; the
/// terminal error probability is the chance of the outcome that would make
/// the guess rule answer wrongly.
pub fn run_once(plan: &ProtocolPlan, hypothesis: Hypothesis) -> Result<TraceRecord> {
    plan.verify()?;
    let initial = plan.rounds[0].input_if_i.to_density();
    let mut rho = initial.clone();
    let mut branch_e = initial.clone();
    let mut branch_i = initial;
    let mut round_overlaps = Vec::with_capacity(plan.rounds.len());
    for round in &plan.rounds {
        if let Some(t) = &round.pre_transform {
            rho = t.apply(&rho)?;
            branch_e = t.apply(&branch_e)?;
            branch_i = t.apply(&branch_i)?;
        }
        rho = apply_hypothesis(plan, hypothesis, &rho)?;
        branch_e = plan.channel.apply(&branch_e)?;
        round_overlaps.push(fidelity::max_fidelity_value(&branch_e, &branch_i)?);
    }
    let on_target = rho.expectation(&plan.final_measurement_vector);
    let terminal_error_probability = match hypothesis {
        Hypothesis::Channel => on_target,
        Hypothesis::Identity => 1.0 - on_target,
    };
    Ok(TraceRecord {
        round_overlaps,
        terminal_error_probability,
        hypothesis,
    })
}

fn sample_kraus(kraus: &[crate::linalg::CMatrix], psi: &CVector, rng: &mut impl Rng) -> CVector {
    let images: Vec<CVector> = kraus.iter().map(|k| k * psi).collect();
    let weights: Vec<f64> = images.iter().map(|v| v.norm_squared()).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (image, w) in images.iter().zip(&weights) {
        if draw < *w {
            return image.clone().unscale(w.sqrt());
        }
        draw -= w;
    }
    let last = images.len() - 1;
    images[last].clone().unscale(weights[last].sqrt())
}

fn run_shot(plan: &ProtocolPlan, rng: &mut impl Rng) -> (bool, f64) {
    let hypothesis = if rng.gen::<bool>() {
        Hypothesis::Channel
    } else {
        Hypothesis::Identity
    };
    let mut psi = plan.rounds[0].input_if_i.amplitudes().clone();
    for round in &plan.rounds {
        if let Some(t) = &round.pre_transform {
            psi = sample_kraus(t.kraus(), &psi, rng);
        }
        if hypothesis == Hypothesis::Channel {
            psi = sample_kraus(plan.channel.kraus(), &psi, rng);
        }
    }
    let p_on_target = plan
        .final_measurement_vector
        .amplitudes()
        .dotc(&psi)
        .norm_sqr()
        .clamp(0.0, 1.0);
    let outcome_on_target = rng.gen::<f64>() < p_on_target;
    let guess = if outcome_on_target {
        Hypothesis::Identity
    } else {
        Hypothesis::Channel
    };
    let leak = match hypothesis {
        Hypothesis::Channel => p_on_target,
        Hypothesis::Identity => 1.0 - p_on_target,
    };
    (guess != hypothesis, leak)
}

/// Samples `shots` discrimination rounds with per-shot random streams
/// derived from `(seed, shot index)`; byte-identical across runs and
/// thread schedules.
pub fn monte_carlo(plan: &ProtocolPlan, shots: u64, seed: u64) -> Result<SimulationReport> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    plan.verify()?;
    let outcomes: Vec<(bool, f64)> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(shot);
            run_shot(plan, &mut rng)
        })
        .collect();
    let wrong_guesses = outcomes.iter().filter(|(wrong, _)| *wrong).count() as u64;
    let max_terminal_leak = outcomes.iter().map(|(_, leak)| *leak).fold(0.0, f64::max);
    Ok(SimulationReport {
        shots,
        wrong_guesses,
        empirical_error: wrong_guesses as f64 / shots as f64,
        max_terminal_leak,
        seed,
    })
}

/// Samples a pure pair with `|⟨ψ0|ψ1⟩| = q`: `ψ0` Haar, `ψ1 = q·ψ0 +
/// √(1−q²)·χ` with `χ` Haar on the orthogonal complement.
fn sample_pair(dim: usize, q: f64, rng: &mut impl Rng) -> (CVector, CVector) {
    let psi0 = linalg::haar_state(dim, rng);
    let chi = loop {
        let raw = linalg::haar_state(dim, rng);
        let mut v = raw;
        for _ in 0..2 {
            let overlap = psi0.dotc(&v);
            v.axpy(-overlap, &psi0, linalg::ONE);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            break v.unscale(norm);
        }
    };
    let psi1 = psi0.scale(q) + chi.scale((1.0 - q * q).max(0.0).sqrt());
    (psi0, psi1)
}

/// Sweeps random fixed-overlap input pairs against the Theorem-4 lower
/// bound `cos(α+θ₀+θ₁)`.
///
/// Sampling can only falsify the bound, never prove it; `theta0` and
/// `theta1` must be analytically exact or the check is unsound (computed
/// fidelity minima are upper estimates, which would spuriously strengthen
/// the bound).
pub fn verify_thm4(
    ch0: &KrausChannel,
    ch1: &KrausChannel,
    theta0: f64,
    theta1: f64,
    q_grid: &[f64],
    samples_per_q: usize,
    seed: u64,
) -> Result<Vec<Thm4Row>> {
    if ch0.dim() != ch1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel dims {} vs {}",
            ch0.dim(),
            ch1.dim()
        )));
    }
    let dim = ch0.dim();
    let mut rows = Vec::with_capacity(q_grid.len());
    for (qi, &q) in q_grid.iter().enumerate() {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
        }
        let bound = bounds::thm4_lower(q, theta0, theta1)?;
        let min_sampled = (0..samples_per_q)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream((qi as u64) << 32 | s as u64);
                let (psi0, psi1) = sample_pair(dim, q, &mut rng);
                let rho0 = ch0
                    .apply_pure(&PureState::new(psi0).expect("haar state is unit"))
                    .expect("dims agree");
                let rho1 = ch1
                    .apply_pure(&PureState::normalized(psi1).expect("pair state is nonzero"))
                    .expect("dims agree");
                fidelity::max_fidelity_value(&rho0, &rho1).expect("states are valid")
            })
            .reduce(|| f64::INFINITY, f64::min);
        rows.push(Thm4Row {
            q,
            bound,
            min_sampled,
            violated: min_sampled < bound - 1e-6,
        });
    }
    Ok(rows)
}

/// Constructive Lemma-2 check: for each `α` the witness state must satisfy
/// `F̃(E(b), c) ≤ |sin(α₀−α)|/sinα₀ · cosθ` within `1e-9`. Exact, no
/// sampling.
pub fn verify_lemma2(
    channel: &KrausChannel,
    f1: &fidelity::FidelityResult,
    a0: &fidelity::Alpha0Result,
    alpha_grid: &[f64],
) -> Result<Vec<Lemma2Row>> {
    if f1.value >= 1.0 - fidelity::DISTINGUISHABLE_TOL {
        return Err(Error::NotDistinguishable { f1: f1.value });
    }
    let theta = f1.value.acos();
    let out = channel.apply_pure(&a0.witness_b)?;
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let witness = fidelity::lemma2_witness(channel, &a0.witness_b, &a0.witness_b_prime, alpha)?;
        let achieved = fidelity::max_fidelity_value(&out, &witness.to_density())?;
        let bound = bounds::lemma2_bound(theta, a0.alpha0, alpha)?;
        rows.push(Lemma2Row {
            alpha,
            bound,
            achieved,
            violated: achieved > bound + 1e-9,
        });
    }
    Ok(rows)
}
