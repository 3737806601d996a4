//! Integrals over the natural domain Θ of functions supplied in log form.
//!
//! Half-line families are integrated in u = ln(−θ), which turns the
//! polynomial behaviour near θ = 0 and θ = −∞ into exponential tails. The
//! range is covered by a core window around the peak plus geometrically
//! growing side windows, added until a new window no longer contributes.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::family::FamilyDescriptor;
use crate::numerics::quadrature::{integrate_box, integrate_with, Domain, QuadConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LogIntegral {
    pub log_value: f64,
    /// Estimated relative error of exp(log_value).
    pub rel_error: f64,
    pub evaluations: usize,
}

const CORE_HALF_WIDTH: f64 = 8.0;
const MAX_WINDOWS: usize = 60;
// beyond this the half-line map e^u leaves the floating-point range
const MAX_ABS_COORDINATE: f64 = 700.0;
const MAX_LOG_WIDTH: f64 = 2.0;

/// ln ∫_Θ exp(log_f(θ)) dθ for a one-dimensional family. `center` should sit
/// near the peak of the integrand and `spread` approximate its width in θ.
pub(crate) fn log_integral_1d<F>(fam: &FamilyDescriptor, center: f64, spread: f64, log_f: F, tol: f64) -> Result<LogIntegral>
where
    F: Fn(f64) -> Result<f64>,
{
    if fam.dimension() != 1 {
        return Err(Error::invalid("one-dimensional Θ integral requested for a multivariate family"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let half_line = fam.is_half_line();
    let (u0, width) = if half_line {
        // the local curvature can badly overstate the width on the log scale
        let w = spread / -center;
        ((-center).ln(), if w > 0.0 && w < MAX_LOG_WIDTH { w } else { MAX_LOG_WIDTH })
    } else {
        (center, spread)
    };
    if !u0.is_finite() || !(width > 0.0) || !width.is_finite() {
        return Err(Error::invalid(format!("bad integration window: center {center}, spread {spread}")));
    }
    let to_theta = |u: f64| if half_line { -u.exp() } else { u };
    let log_g = |u: f64| -> Result<f64> {
        let theta = to_theta(u);
        if half_line && (theta == 0.0 || !theta.is_finite()) {
            return Ok(f64::NEG_INFINITY);
        }
        let jac = if half_line { u } else { 0.0 };
        Ok(log_f(theta)? + jac)
    };
    let shift = log_g(u0)?;
    if !shift.is_finite() {
        return Err(Error::invalid(format!("integrand vanishes or diverges at the window center θ = {center}")));
    }
    let g = |u: f64| -> Result<f64> { Ok((log_g(u)? - shift).exp()) };

    let core_cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 0.1 * tol,
        ..QuadConfig::default()
    };
    let half = CORE_HALF_WIDTH * width;
    let core = integrate_with(g, Domain::finite(u0 - half, u0 + half), &core_cfg)?;
    let mut total = core.value;
    let mut error = core.error_estimate;
    let mut evaluations = core.evaluations;

    for direction in [1.0, -1.0] {
        let mut edge = u0 + direction * half;
        let mut w = half;
        let mut converged = false;
        for _ in 0..MAX_WINDOWS {
            if edge.abs() >= MAX_ABS_COORDINATE {
                break;
            }
            let next = (edge + direction * w).clamp(-MAX_ABS_COORDINATE, MAX_ABS_COORDINATE);
            let cfg = QuadConfig {
                abs_tol: 1e-3 * tol * total,
                rel_tol: 0.1 * tol,
                ..QuadConfig::default()
            };
            let piece = integrate_with(g, Domain::finite(edge.min(next), edge.max(next)), &cfg)?;
            total += piece.value;
            error += piece.error_estimate;
            evaluations += piece.evaluations;
            edge = next;
            w *= 2.0;
            // the piece must be negligible and the integrand must have died out at its far edge
            let edge_mass = g(edge)? * w;
            if piece.value.abs() < 1e-3 * tol * total && edge_mass < 1e-3 * tol * total {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonIntegrable(format!(
                "{} integrand has not decayed before the edge of the representable domain",
                fam.name()
            )));
        }
    }
    if !(total > 0.0) {
        return Err(Error::NonIntegrable("integral over Θ is not positive".into()));
    }
    Ok(LogIntegral {
        log_value: shift + total.ln(),
        rel_error: error / total,
        evaluations,
    })
}

/// ln ∫_{ℝ^d} exp(log_f(θ)) dθ in whitened coordinates θ = center + L z,
/// with L a Cholesky factor describing the integrand's spread. Meant for d ≤ 3.
pub(crate) fn log_integral_gaussian<F>(center: &DVector<f64>, chol: &nalgebra::DMatrix<f64>, log_f: F, tol: f64) -> Result<LogIntegral>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let d = center.len();
    if d > 3 {
        return Err(Error::invalid(format!("product quadrature over Θ supports d ≤ 3, got d = {d}")));
    }
    let log_jac: f64 = chol.diagonal().iter().map(|v| v.abs().ln()).sum();
    let shift = log_f(center)?;
    if !shift.is_finite() {
        return Err(Error::invalid("integrand vanishes or diverges at the window center"));
    }
    let domains = vec![Domain::Real { center: 0.0, scale: 2.0 }; d];
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: tol,
        ..QuadConfig::default()
    };
    let r = integrate_box(
        |z: &[f64]| {
            let theta = center + chol * DVector::from_column_slice(z);
            Ok((log_f(&theta)? - shift).exp())
        },
        &domains,
        &cfg,
    )?;
    if !(r.value > 0.0) {
        return Err(Error::NonIntegrable("integral over Θ is not positive".into()));
    }
    Ok(LogIntegral {
        log_value: shift + log_jac + r.value.ln(),
        rel_error: r.error_estimate / r.value,
        evaluations: r.evaluations,
    })
}
