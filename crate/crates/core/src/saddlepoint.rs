//! Saddle-point approximation on Θ and its renormalization.
//!
//! The approximation exp(−n D_A(θ, θ̂)) |Cov(μ_θ)|^{1/2} / τ^{d/2} is, as a
//! function of θ, the Jeffreys posterior kernel. Renormalizing it over Θ and
//! comparing against the closed-form posterior measures how exact it is.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{GammaPosterior, GaussianPosterior, InverseGaussianDist};
use crate::family::{FamilyDescriptor, FamilyKind, NaturalParam, TAU};
use crate::theta_quad::{log_integral_1d, log_integral_gaussian};

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be at least 1"));
    }
    Ok(n as f64)
}

pub fn ln_saddlepoint_unnormalized(fam: &FamilyDescriptor, n: usize, theta_hat: &NaturalParam, theta: &NaturalParam) -> Result<f64> {
    let n = check_n(n)?;
    let d = fam.dimension() as f64;
    Ok(-n * fam.bregman(theta, theta_hat)? + fam.ln_jeffreys(theta)? - 0.5 * d * TAU.ln())
}

pub fn saddlepoint_unnormalized(fam: &FamilyDescriptor, n: usize, theta_hat: &NaturalParam, theta: &NaturalParam) -> Result<f64> {
    ln_saddlepoint_unnormalized(fam, n, theta_hat, theta).map(f64::exp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddlepointProfile {
    pub fam: FamilyDescriptor,
    pub n: usize,
    pub theta_hat: NaturalParam,
    /// ∫_Θ of the unnormalized approximation.
    pub normalizer: f64,
    /// Estimated relative error of `normalizer`.
    pub normalizer_error: f64,
    pub ln_normalizer: f64,
}

impl SaddlepointProfile {
    pub fn ln_density(&self, theta: &NaturalParam) -> Result<f64> {
        Ok(ln_saddlepoint_unnormalized(&self.fam, self.n, &self.theta_hat, theta)? - self.ln_normalizer)
    }

    pub fn density(&self, theta: &NaturalParam) -> Result<f64> {
        self.ln_density(theta).map(f64::exp)
    }
}

/// Integrates the approximation over Θ to relative accuracy `tol`.
pub fn renormalize(fam: &FamilyDescriptor, n: usize, theta_hat: &NaturalParam, tol: f64) -> Result<SaddlepointProfile> {
    let nf = check_n(n)?;
    fam.check_natural(theta_hat)?;
    let integral = match fam.kind() {
        FamilyKind::GaussianLocation(c) => {
            // whiten with the Cholesky factor of the posterior covariance (nB)⁻¹
            let spread = c.inverse().clone().cholesky().map(|ch| ch.l() / nf.sqrt()).ok_or_else(|| Error::invalid("covariance lost definiteness"))?;
            log_integral_gaussian(
                &theta_hat.theta,
                &spread,
                |t: &DVector<f64>| ln_saddlepoint_unnormalized(fam, n, theta_hat, &NaturalParam::new(t.clone())),
                tol,
            )?
        }
        _ => {
            let t0 = theta_hat.value();
            let sd = 1.0 / (nf * fam.covariance(theta_hat)?[(0, 0)]).sqrt();
            log_integral_1d(fam, t0, sd, |t| ln_saddlepoint_unnormalized(fam, n, theta_hat, &NaturalParam::scalar(t)), tol)?
        }
    };
    if integral.rel_error > tol {
        return Err(Error::NonConvergence {
            what: "saddle-point renormalization".into(),
            estimate: integral.log_value.exp(),
            error: integral.rel_error,
            evaluations: integral.evaluations,
        });
    }
    Ok(SaddlepointProfile {
        fam: fam.clone(),
        n,
        theta_hat: theta_hat.clone(),
        normalizer: integral.log_value.exp(),
        normalizer_error: integral.rel_error,
        ln_normalizer: integral.log_value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    /// Family whose posterior was checked; the inverse Gaussian family is
    /// checked through its conjugate Poisson-exponential family.
    pub family: &'static str,
    pub n: usize,
    pub theta_hat: Vec<f64>,
    pub max_relative_deviation: f64,
    pub worst_theta: Vec<f64>,
    pub normalizer: f64,
    pub normalizer_error: f64,
    pub grid_points: usize,
}

/// Closed-form Jeffreys posterior of θ given n observations with MLE θ̂.
enum ExactPosterior {
    /// Gamma over β = −θ.
    Gamma(GammaPosterior),
    Normal(GaussianPosterior),
    /// Inverse Gaussian over β = −θ.
    InverseGaussian(InverseGaussianDist),
}

impl ExactPosterior {
    fn ln_density(&self, theta: &NaturalParam) -> Result<f64> {
        match self {
            ExactPosterior::Gamma(g) => g.ln_density(-theta.value()),
            ExactPosterior::Normal(g) => Ok(g.ln_density(&theta.theta)),
            ExactPosterior::InverseGaussian(ig) => ig.ln_density(-theta.value()),
        }
    }
}

/// Maximum relative deviation between the renormalized approximation and the
/// exact conjugated-family posterior on `grid`.
///
/// For the inverse Gaussian family the comparison runs on the conjugate
/// Poisson-exponential family with θ̂ mapped to −∇A(θ̂); grid points are then
/// read as Poisson-exponential natural parameters and the exact posterior is
/// the inverse Gaussian law IG(∇A(θ̂), nκ).
pub fn exactness_report(fam: &FamilyDescriptor, n: usize, theta_hat: &NaturalParam, grid: &[NaturalParam], tol: f64) -> Result<ExactnessReport> {
    let nf = check_n(n)?;
    fam.check_natural(theta_hat)?;
    let (checked, hat) = match fam.kind() {
        FamilyKind::InverseGaussianShape { kappa } => {
            let mean = fam.mean_from_natural(theta_hat)?.value();
            (FamilyDescriptor::poisson_exponential(*kappa)?, NaturalParam::scalar(-mean))
        }
        _ => (fam.clone(), theta_hat.clone()),
    };
    let exact = match checked.kind() {
        FamilyKind::GammaShape { alpha } => {
            let xbar = checked.mean_from_natural(&hat)?.value();
            ExactPosterior::Gamma(GammaPosterior::new(nf * alpha, nf * xbar)?)
        }
        FamilyKind::GaussianLocation(c) => ExactPosterior::Normal(GaussianPosterior::new(hat.theta.clone(), c.inverse() / nf)?),
        FamilyKind::PoissonExponentialShape { kappa } => ExactPosterior::InverseGaussian(InverseGaussianDist::new(-hat.value(), nf * kappa)?),
        FamilyKind::InverseGaussianShape { .. } => unreachable!("mapped to the conjugate family above"),
    };
    let profile = renormalize(&checked, n, &hat, tol)?;
    let mut worst = 0.0;
    let mut worst_theta = Vec::new();
    for theta in grid {
        let dev = (profile.ln_density(theta)? - exact.ln_density(theta)?).exp_m1().abs();
        if dev > worst || worst_theta.is_empty() {
            worst = dev;
            worst_theta = theta.theta.as_slice().to_vec();
        }
    }
    Ok(ExactnessReport {
        family: checked.name(),
        n,
        theta_hat: hat.theta.as_slice().to_vec(),
        max_relative_deviation: worst,
        worst_theta,
        normalizer: profile.normalizer,
        normalizer_error: profile.normalizer_error,
        grid_points: grid.len(),
    })
}
