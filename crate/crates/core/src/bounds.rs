//! Closed-form query-count formulas and fidelity bounds, plus the
//! aggregate distinguishability report for a channel.

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::fidelity::{self, DISTINGUISHABLE_TOL};
use crate::linalg::fuzzy_ceil;
use crate::optimize::OptimizerConfig;
use std::f64::consts::FRAC_PI_2;

/// Angle slack when comparing against π/2 boundaries.
const ANGLE_TOL: f64 = 1e-12;

/// Everything the bounds know about one channel versus the identity.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistinguishabilityReport {
    pub f1: f64,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cos_alpha0: Option<f64>,
    pub distinguishable: bool,
    /// Exact minimum query count (2-dimensional channels only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmin_exact_2d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmin_lower: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmin_upper: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ea_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ea_nmin_lower: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ea_nmin_upper: Option<u32>,
}

/// Exact optimal query count in dimension 2: `⌈π / (2·arccos f1)⌉`.
pub fn nmin_exact_2d(f1_value: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&f1_value) {
        return Err(Error::NotDistinguishable { f1: f1_value });
    }
    let theta = f1_value.acos();
    Ok(fuzzy_ceil(std::f64::consts::PI / (2.0 * theta)) as u32)
}

/// Lower bound `⌈π / (2·theta_sum)⌉` on the optimal query count.
///
/// `theta_sum` is `θ` for a single channel versus the identity, or
/// `θ₀ + θ₁` for a channel pair (sequential or entanglement-assisted,
/// depending on which fidelities produced the angles).
pub fn nmin_lower(theta_sum: f64) -> Result<u32> {
    if theta_sum <= 0.0 {
        return Err(Error::NotDistinguishable {
            f1: theta_sum.cos(),
        });
    }
    Ok(fuzzy_ceil(std::f64::consts::PI / (2.0 * theta_sum)) as u32)
}

/// Upper bound `⌈ln cosα₀ / ln cosθ⌉ + 1` on the optimal query count.
///
/// `cos_alpha0 = 0` can only occur together with `θ = π/2`, which a caller
/// handles on the single-query path; the explicit `1` here keeps the
/// function total on its domain.
pub fn nmin_upper(theta: f64, cos_alpha0: f64) -> Result<u32> {
    if theta <= 0.0 || theta >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "theta = {theta} outside (0, pi/2); use the single-query path at theta = pi/2"
        )));
    }
    if !(0.0..1.0).contains(&cos_alpha0) {
        return Err(Error::Domain(format!(
            "cos_alpha0 = {cos_alpha0} outside [0, 1)"
        )));
    }
    if cos_alpha0 == 0.0 {
        return Ok(1);
    }
    let ratio = (cos_alpha0.ln() / theta.cos().ln()).max(0.0);
    Ok(fuzzy_ceil(ratio) as u32 + 1)
}

/// Lemma-2 bound `|sin(α₀−α)|/sin(α₀) · cosθ` on `F̃_q` at `q = cosα`.
pub fn lemma2_bound(theta: f64, alpha0: f64, alpha: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&theta) || theta == 0.0 {
        return Err(Error::Domain(format!("theta = {theta} outside (0, pi/2)")));
    }
    if alpha0 <= 0.0 || alpha0 >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "alpha0 = {alpha0} outside (0, pi/2)"
        )));
    }
    if !(0.0..=FRAC_PI_2 + ANGLE_TOL).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, pi/2]")));
    }
    Ok((alpha0 - alpha).sin().abs() / alpha0.sin() * theta.cos())
}

/// Lower bound on `F̃_q(E0, E1)`: zero when any of `α+θ₀`, `α+θ₁`,
/// `α+θ₀+θ₁` reaches π/2, else `cos(α+θ₀+θ₁)`.
pub fn thm4_lower(q: f64, theta0: f64, theta1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
    }
    for (name, t) in [("theta0", theta0), ("theta1", theta1)] {
        if !(0.0..=FRAC_PI_2 + ANGLE_TOL).contains(&t) {
            return Err(Error::Domain(format!("{name} = {t} outside [0, pi/2]")));
        }
    }
    let alpha = q.acos();
    let guard = FRAC_PI_2 - ANGLE_TOL;
    if alpha + theta0 >= guard || alpha + theta1 >= guard || alpha + theta0 + theta1 >= guard {
        return Ok(0.0);
    }
    Ok((alpha + theta0 + theta1).cos())
}

/// Computes `f1` (and the entanglement-assisted variant on request), the
/// Lemma-2 geometry, and every applicable query-count bound.
pub fn build_report(
    channel: &KrausChannel,
    config: &OptimizerConfig,
    with_ea: bool,
) -> Result<DistinguishabilityReport> {
    let f1 = fidelity::f1_identity(channel, config)?;
    let distinguishable = f1.value < 1.0 - DISTINGUISHABLE_TOL;
    let mut report = DistinguishabilityReport {
        f1: f1.value,
        theta: f1.theta,
        cos_alpha0: None,
        distinguishable,
        nmin_exact_2d: None,
        nmin_lower: None,
        nmin_upper: None,
        ea_f1: None,
        ea_nmin_lower: None,
        ea_nmin_upper: None,
    };
    if distinguishable {
        report.nmin_lower = Some(nmin_lower(f1.theta)?);
        if channel.dim() == 2 {
            report.nmin_exact_2d = Some(nmin_exact_2d(f1.value)?);
        }
        if f1.value <= DISTINGUISHABLE_TOL {
            // theta = pi/2: a single query distinguishes
            report.nmin_upper = Some(1);
            report.cos_alpha0 = Some(1.0);
        } else {
            let a0 = fidelity::alpha0(channel, &f1, config)?;
            report.cos_alpha0 = Some(a0.cos_alpha0);
            report.nmin_upper = Some(nmin_upper(f1.theta, a0.cos_alpha0.min(1.0 - 1e-15))?);
        }
    }
    if with_ea {
        let ea = fidelity::f1_ea(channel, config)?;
        report.ea_f1 = Some(ea.value);
        if ea.value < 1.0 - DISTINGUISHABLE_TOL {
            report.ea_nmin_lower = Some(nmin_lower(ea.theta)?);
            if ea.value <= DISTINGUISHABLE_TOL {
                report.ea_nmin_upper = Some(1);
            } else {
                let extended = crate::channel::extend_with_ancilla(channel, channel.dim())?;
                let a0 = fidelity::alpha0(&extended, &ea, config)?;
                report.ea_nmin_upper = Some(nmin_upper(ea.theta, a0.cos_alpha0.min(1.0 - 1e-15))?);
            }
        }
    }
    Ok(report)
}
