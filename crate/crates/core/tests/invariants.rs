//! Sampling-based invariants across the state/channel/fidelity layers.

mod common;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use qpdist::channel::{
    self, adjoin_unitary, extend_with_ancilla, make_amplitude_damping, make_depolarizing,
    pauli_z_channel, random_channel, validate_channel,
};
use qpdist::fidelity::{self, WitnessInput};
use qpdist::linalg::{self, CMatrix, CVector};
use qpdist::state::PureState;
use qpdist::{DensityOperator, KrausChannel, OptimizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    qr.q()
}

fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityOperator {
    let mut m = CMatrix::zeros(dim, dim);
    let mut weights: Vec<f64> = (0..rank).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let u = random_unitary(dim, rng);
    for (k, w) in weights.iter().enumerate() {
        let col = CVector::from(u.column(k));
        m += (&col * col.adjoint()).scale(*w);
    }
    DensityOperator::new(m).expect("convex mixture of projectors")
}

#[test]
fn apply_channel_preserves_trace() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for case in 0..1000 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let m = rng.gen_range(1..=dim * dim);
        let ch = random_channel(dim, m, &mut rng);
        let rho = random_density(dim, rng.gen_range(1..=dim), &mut rng);
        let out = ch.apply(&rho).expect("valid channel and state");
        assert!((out.matrix().trace().re - 1.0).abs() <= 1e-9);
        assert!(out.matrix().trace().im.abs() <= 1e-9);
    }
}

#[test]
fn support_projector_range_spans_kraus_images() {
    let mut rng = ChaCha12Rng::seed_from_u64(202);
    for case in 0..200 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let m = rng.gen_range(1..=dim * dim);
        let ch = random_channel(dim, m, &mut rng);
        let psi = PureState::new(linalg::haar_state(dim, &mut rng)).unwrap();
        let out = ch.apply_pure(&psi).unwrap();
        let projector = out.support_projector();
        for image in ch.images(psi.amplitudes()) {
            let residual = projector.residual(&image);
            assert!(
                residual.norm() <= 1e-8,
                "image escapes support: {}",
                residual.norm()
            );
        }
    }
}

#[test]
fn choi_of_arbitrary_kraus_lists_is_psd() {
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    for case in 0..200 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let m = rng.gen_range(1..=dim * dim);
        // arbitrary (not trace-preserving) matrix lists
        let list: Vec<CMatrix> = (0..m)
            .map(|_| {
                CMatrix::from_fn(dim, dim, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
            })
            .collect();
        let validity = validate_channel(&list).unwrap();
        assert!(validity.choi_min_eigenvalue >= -1e-10);
    }
}

#[test]
fn adjoin_unitary_round_trips() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for case in 0..50 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let ch = random_channel(dim, rng.gen_range(1..=dim), &mut rng);
        let u = random_unitary(dim, &mut rng);
        let back = adjoin_unitary(&u, &adjoin_unitary(&u.adjoint(), &ch).unwrap()).unwrap();
        for (a, b) in back.kraus().iter().zip(ch.kraus()) {
            assert!(linalg::max_abs_diff(a, b) <= 1e-12);
        }
    }
}

#[test]
fn ancilla_extension_controls_completeness_residual() {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    for _ in 0..50 {
        let ch = random_channel(2, rng.gen_range(1..=4), &mut rng);
        let base = ch.validity().completeness_residual;
        for ancilla in [2usize, 3] {
            let ext = extend_with_ancilla(&ch, ancilla).unwrap();
            assert!(ext.validity().completeness_residual <= 2.0 * base + 1e-15);
        }
    }
}

#[test]
fn state_fidelity_symmetric_and_unitarily_invariant() {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    for case in 0..100 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let rho0 = random_density(dim, rng.gen_range(1..=dim), &mut rng);
        let rho1 = random_density(dim, rng.gen_range(1..=dim), &mut rng);
        let ab = fidelity::max_fidelity_value(&rho0, &rho1).unwrap();
        let ba = fidelity::max_fidelity_value(&rho1, &rho0).unwrap();
        assert!((ab - ba).abs() <= 1e-10);
        assert!((0.0..=1.0).contains(&ab));
        let u = random_unitary(dim, &mut rng);
        let conj =
            |rho: &DensityOperator| DensityOperator::new(&u * rho.matrix() * u.adjoint()).unwrap();
        let rotated = fidelity::max_fidelity_value(&conj(&rho0), &conj(&rho1)).unwrap();
        assert!((ab - rotated).abs() <= 1e-10);
    }
}

#[test]
fn f1_never_exceeds_probe_objective() {
    let config = OptimizerConfig::default();
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    let mut channels: Vec<KrausChannel> = common::analytic_families()
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    channels.push(make_amplitude_damping(0.5).unwrap());
    channels.push(make_depolarizing(0.5).unwrap());
    for ch in &channels {
        let f1 = fidelity::f1_identity(ch, &config).unwrap();
        for _ in 0..100 {
            let probe = PureState::new(linalg::haar_state(2, &mut rng)).unwrap();
            assert!(f1.value <= fidelity::f1_objective(ch, &probe) + 1e-12);
        }
    }
}

#[test]
fn alpha0_identity_holds_on_test_channels() {
    let config = OptimizerConfig::default();
    let mut channels: Vec<KrausChannel> = common::analytic_families()
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    channels.push(pauli_z_channel());
    for ch in &channels {
        let f1 = fidelity::f1_identity(ch, &config).unwrap();
        let a0 = fidelity::alpha0(ch, &f1, &config).unwrap();
        let expected = (1.0 - f1.value * f1.value).max(0.0).sqrt();
        assert!(
            (a0.cos_alpha0 - expected).abs() <= 1e-6,
            "{:?}: cos_alpha0 {} vs sqrt(1-f1^2) {expected}",
            ch.name(),
            a0.cos_alpha0
        );
    }
}

#[test]
fn ea_fidelity_never_exceeds_unassisted() {
    let config = OptimizerConfig::default();
    for (ch, _) in common::analytic_families() {
        let f1 = fidelity::f1_identity(&ch, &config).unwrap();
        let ea = fidelity::f1_ea(&ch, &config).unwrap();
        assert!(
            ea.value <= f1.value + 1e-6,
            "{:?}: ea {} vs f1 {}",
            ch.name(),
            ea.value,
            f1.value
        );
    }
}

#[test]
fn q_fidelity_at_one_matches_f1_on_families() {
    let config = OptimizerConfig::default();
    let id = channel::identity_channel(2);
    for (ch, _) in common::analytic_families() {
        let f1 = fidelity::f1_identity(&ch, &config).unwrap();
        let q1 = fidelity::q_max_fidelity(&ch, &id, 1.0, &config).unwrap();
        assert!(
            (q1.value - f1.value).abs() <= 2e-4,
            "{:?}: q=1 {} vs f1 {}",
            ch.name(),
            q1.value,
            f1.value
        );
        if let WitnessInput::Pair(psi0, psi1) = &q1.witness_input {
            assert!(psi0.abs_overlap(psi1) > 1.0 - 1e-9);
        } else {
            panic!("q fidelity must report a pair witness");
        }
    }
}

#[test]
fn lemma2_witness_bound_on_20_point_grid() {
    let config = OptimizerConfig::default();
    for (ch, theta) in common::analytic_families() {
        if theta >= std::f64::consts::FRAC_PI_2 {
            continue;
        }
        let f1 = fidelity::f1_identity(&ch, &config).unwrap();
        let a0 = fidelity::alpha0(&ch, &f1, &config).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| a0.alpha0 * i as f64 / 19.0).collect();
        let rows = qpdist::simulator::verify_lemma2(&ch, &f1, &a0, &grid).unwrap();
        for row in rows {
            assert!(
                row.achieved <= row.bound + 1e-9,
                "{:?}: alpha {} achieved {} bound {}",
                ch.name(),
                row.alpha,
                row.achieved,
                row.bound
            );
        }
    }
}

fn unit_amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..=4)
        .prop_filter("nonzero vector", |v| {
            v.iter().map(|(re, im)| re * re + im * im).sum::<f64>() > 1e-3
        })
}

proptest! {
    #[test]
    fn gauge_fixing_is_idempotent(raw in unit_amplitudes()) {
        let v = DVector::from_vec(
            raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect::<Vec<_>>(),
        );
        let psi = PureState::normalized(v).unwrap();
        let again = PureState::new(psi.amplitudes().clone()).unwrap();
        prop_assert_eq!(psi.amplitudes(), again.amplitudes());
    }

    #[test]
    fn overlap_modulus_ignores_global_phase(raw in unit_amplitudes(), phase in 0.0f64..std::f64::consts::TAU) {
        let v = DVector::from_vec(
            raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect::<Vec<_>>(),
        );
        let psi = PureState::normalized(v.clone()).unwrap();
        let rotated = PureState::normalized(v * Complex64::from_polar(1.0, phase)).unwrap();
        prop_assert!((psi.abs_overlap(&rotated) - 1.0).abs() < 1e-9);
        prop_assert_eq!(psi.amplitudes().len(), rotated.amplitudes().len());
    }
}

#[test]
fn choi_trace_equals_dimension_for_valid_channels() {
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    for dim in [2usize, 3] {
        for m in 1..=dim * dim {
            let ch = random_channel(dim, m, &mut rng);
            let _ = DMatrix::<Complex64>::identity(dim, dim);
            assert!((ch.choi_matrix().trace().re - dim as f64).abs() < 1e-10);
        }
    }
}
