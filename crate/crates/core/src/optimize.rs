//! Multi-start derivative-free minimization over products of unit spheres.
//!
//! Candidate points are tuples of unit vectors in `C^d`, searched through
//! their real embedding with a coordinate-wise compass pattern: each move
//! perturbs one real or imaginary component and renormalizes. The step
//! halves whenever a full sweep yields no improvement. Per-start random
//! streams are derived from `(seed, start index)`, so the outcome is
//! identical regardless of evaluation order.

use crate::linalg::{self, CVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Knobs for the multi-start sphere searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Number of starts (structured starts count toward this budget).
    pub starts: usize,
    /// Maximum sweeps per start.
    pub max_iters: usize,
    /// A start converges once the compass step shrinks below this.
    pub step_tol: f64,
    /// Sweep improvements below this allow early termination at small steps.
    pub value_tol: f64,
    /// Seed for the per-start random streams.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iters: 500,
            step_tol: 1e-10,
            value_tol: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.starts == 0 {
            return Err(crate::Error::Domain("starts must be at least 1".into()));
        }
        if self.step_tol <= 0.0 || self.value_tol <= 0.0 {
            return Err(crate::Error::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one local descent.
#[derive(Debug, Clone)]
pub struct StartOutcome {
    pub value: f64,
    pub point: Vec<CVector>,
    pub converged: bool,
}

/// Aggregate over all starts; `all` preserves start order.
#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub all: Vec<StartOutcome>,
    pub best_index: usize,
    pub converged_starts: usize,
}

impl MultiStartOutcome {
    pub fn best(&self) -> &StartOutcome {
        &self.all[self.best_index]
    }
}

const INITIAL_STEP: f64 = 0.5;
const EARLY_STOP_STEP: f64 = 1e-7;
// sufficient-decrease forcing: a move at step s must improve by c·s²,
// and a whole sweep must improve by C·s² to keep the step alive
const FORCING: f64 = 1e-4;
const SWEEP_FORCING: f64 = 1e-2;

fn perturbed(point: &[CVector], vec_idx: usize, coord: usize, delta: f64) -> Option<Vec<CVector>> {
    let dim = point[vec_idx].len();
    let mut v = point[vec_idx].clone();
    if coord < dim {
        v[coord].re += delta;
    } else {
        v[coord - dim].im += delta;
    }
    let norm = v.norm();
    if norm < 1e-12 {
        return None;
    }
    let mut out = point.to_vec();
    out[vec_idx] = v.unscale(norm);
    Some(out)
}

fn local_descent<F>(
    mut point: Vec<CVector>,
    objective: &F,
    config: &OptimizerConfig,
) -> StartOutcome
where
    F: Fn(&[CVector]) -> f64 + Sync + ?Sized,
{
    let mut value = objective(&point);
    let mut step = INITIAL_STEP;
    for _ in 0..config.max_iters {
        let sweep_start = value;
        let mut improved = false;
        for vec_idx in 0..point.len() {
            let dim = point[vec_idx].len();
            for coord in 0..2 * dim {
                for sign in [1.0, -1.0] {
                    if let Some(candidate) = perturbed(&point, vec_idx, coord, sign * step) {
                        let cv = objective(&candidate);
                        if cv < value - FORCING * step * step {
                            value = cv;
                            point = candidate;
                            improved = true;
                        }
                    }
                }
            }
        }
        let stalled = !improved || sweep_start - value < SWEEP_FORCING * step * step;
        if stalled {
            step *= 0.5;
            if step < config.step_tol {
                return StartOutcome {
                    value,
                    point,
                    converged: true,
                };
            }
        } else if step < EARLY_STOP_STEP && sweep_start - value < config.value_tol {
            return StartOutcome {
                value,
                point,
                converged: true,
            };
        }
    }
    StartOutcome {
        value,
        point,
        converged: false,
    }
}

fn random_point(dims: &[usize], seed: u64, stream: u64) -> Vec<CVector> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    dims.iter()
        .map(|&d| linalg::haar_state(d, &mut rng))
        .collect()
}

/// Runs `config.starts` local descents (structured starts first, the rest
/// Haar-random) and returns every outcome; ties on the best value break
/// toward the lower start index.
pub fn minimize_on_spheres<F>(
    dims: &[usize],
    structured_starts: &[Vec<CVector>],
    objective: &F,
    config: &OptimizerConfig,
) -> MultiStartOutcome
where
    F: Fn(&[CVector]) -> f64 + Sync + ?Sized,
{
    let total = config.starts.max(structured_starts.len()).max(1);
    let all: Vec<StartOutcome> = (0..total)
        .into_par_iter()
        .map(|i| {
            let start = if i < structured_starts.len() {
                structured_starts[i].clone()
            } else {
                random_point(dims, config.seed, i as u64)
            };
            local_descent(start, objective, config)
        })
        .collect();
    let mut best_index = 0;
    for (i, outcome) in all.iter().enumerate() {
        if outcome.value < all[best_index].value {
            best_index = i;
        }
    }
    let converged_starts = all.iter().filter(|o| o.converged).count();
    MultiStartOutcome {
        all,
        best_index,
        converged_starts,
    }
}

/// Central-difference gradient norm of the objective at `point`, projected
/// through the renormalization (diagnostic only).
pub fn gradient_norm<F>(point: &[CVector], objective: &F) -> f64
where
    F: Fn(&[CVector]) -> f64 + Sync + ?Sized,
{
    let h = 1e-6;
    let mut sum = 0.0;
    for vec_idx in 0..point.len() {
        let dim = point[vec_idx].len();
        for coord in 0..2 * dim {
            let plus = perturbed(point, vec_idx, coord, h);
            let minus = perturbed(point, vec_idx, coord, -h);
            if let (Some(p), Some(m)) = (plus, minus) {
                let g = (objective(&p) - objective(&m)) / (2.0 * h);
                sum += g * g;
            }
        }
    }
    sum.sqrt()
}
