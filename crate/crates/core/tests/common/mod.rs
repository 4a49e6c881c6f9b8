//! Shared test fixtures: the analytic channel families and a brute-force
//! Bloch-sphere oracle for qubit `F̃₁` values.
//!
//! The oracle is written against the mathematical definition only — it
//! builds its own support bases via SVD and never touches the library's
//! optimizer — so agreement with `f1_identity` is evidence, not
//! tautology.
#![allow(dead_code)] // each integration test uses its own subset

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qpdist::channel::{make_replace_channel, make_rotation_channel, KrausChannel};
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

pub const TEST_THETAS: [f64; 5] = [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 0.4, 1.2];

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

/// Rotation and replace channels over the standard angle grid, with their
/// exact `theta = arccos(f1)` values.
pub fn analytic_families() -> Vec<(KrausChannel, f64)> {
    let mut out = Vec::new();
    for theta in TEST_THETAS {
        out.push((make_rotation_channel(theta).unwrap(), theta));
        out.push((make_replace_channel(theta).unwrap(), theta));
    }
    out
}

pub fn bloch_state(t: f64, phi: f64) -> CVec {
    CVec::from_vec(vec![
        Complex64::new((t / 2.0).cos(), 0.0),
        Complex64::from_polar((t / 2.0).sin(), phi),
    ])
}

/// `‖Π_supp(E(ψ)) ψ‖` with the support basis taken from an SVD of the
/// stacked image matrix (singular values below 1e-10 relative are rank
/// noise).
pub fn oracle_objective(channel: &KrausChannel, psi: &CVec) -> f64 {
    let m = channel.kraus().len();
    let mut stacked = CMat::zeros(2, m);
    for (j, e) in channel.kraus().iter().enumerate() {
        stacked.set_column(j, &(e * psi));
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let mut norm_sq = 0.0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > 1e-10 * sigma_max {
            let q = u.column(i);
            norm_sq += q.dotc(psi).norm_sqr();
        }
    }
    norm_sq.sqrt().min(1.0)
}

/// Golden-section minimization of `f` on `[lo, hi]`; returns the best of
/// everything it evaluated (endpoints included), so isolated boundary
/// minima survive.
pub fn golden_section(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = (lo, f(lo));
    let hi_val = f(hi);
    if hi_val < best.1 {
        best = (hi, hi_val);
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    best
}

/// 400x800 Bloch-grid scan plus alternating golden-section refinement.
pub fn bloch_grid_f1(channel: &KrausChannel) -> f64 {
    let t_steps = 400;
    let phi_steps = 800;
    let mut best = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..=t_steps {
        let t = PI * i as f64 / t_steps as f64;
        for j in 0..phi_steps {
            let phi = 2.0 * PI * j as f64 / phi_steps as f64;
            let v = oracle_objective(channel, &bloch_state(t, phi));
            if v < best.2 {
                best = (t, phi, v);
            }
        }
    }
    let (mut t, mut phi, mut value) = best;
    let dt = PI / t_steps as f64;
    let dphi = 2.0 * PI / phi_steps as f64;
    for _ in 0..3 {
        let f_t = |x: f64| oracle_objective(channel, &bloch_state(x, phi));
        let (t_new, v_t) = golden_section(&f_t, (t - dt).max(0.0), (t + dt).min(PI));
        if v_t < value {
            t = t_new;
            value = v_t;
        }
        let f_phi = |x: f64| oracle_objective(channel, &bloch_state(t, x));
        let (phi_new, v_phi) = golden_section(&f_phi, phi - dphi, phi + dphi);
        if v_phi < value {
            phi = phi_new;
            value = v_phi;
        }
    }
    value
}
