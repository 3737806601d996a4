//! One-sided credible and confidence bounds for the rate of the Gamma and
//! Poisson-exponential families, divergence balls for the Gaussian location
//! family, and Monte Carlo coverage of all of them.
//!
//! Every interval is one-sided: rates get `[0, q]`, the Gaussian family gets
//! a ball `{θ : D_A(θ, θ̂) ≤ r}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{gamma_posterior, poisson_exponential_posterior, PoissonExponentialDist};
use crate::family::{FamilyDescriptor, FamilyKind, NaturalParam, ObservationBatch};
use crate::numerics::quadrature::{integrate_with, Domain, QuadConfig};
use crate::numerics::roots::{bracket_positive, find_root_with};
use crate::numerics::special::{inv_reg_gamma_lower, reg_gamma_lower, std_normal_pdf};
use crate::numerics::rng_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMethod {
    CredibleOneSided,
    ConfidencePivot,
    ConfidenceCdfInversion,
    DivergenceBall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalDiagnostics {
    /// |stated mass at the endpoint − level|, from the relevant cdf.
    pub mass_residual: f64,
    /// Root-finding or quadrature tolerance used for the endpoint (0 for closed forms).
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
    pub diagnostics: IntervalDiagnostics,
}

fn check_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(Error::invalid(format!("level must lie in (0, 1), got {level}")))
    }
}

fn one_sided(upper: f64, level: f64, method: IntervalMethod, mass: f64, tolerance: f64) -> IntervalResult {
    IntervalResult {
        lower: 0.0,
        upper,
        level,
        method,
        diagnostics: IntervalDiagnostics {
            mass_residual: (mass - level).abs(),
            tolerance,
        },
    }
}

/// F⁻¹(level)/x̄ with F the Γ(mα, m) law: the posterior quantile of Γ(mα, m x̄)
/// and the pivot bound from βX̄ ∼ Γ(mα, m) are this same expression.
fn gamma_upper(alpha: f64, batch: &ObservationBatch, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    let post = gamma_posterior(alpha, batch)?;
    let m = batch.n() as f64;
    let pivot_quantile = inv_reg_gamma_lower(m * alpha, level)? / m;
    let upper = pivot_quantile / batch.xbar_scalar();
    Ok((upper, post.cdf(upper)?))
}

pub fn gamma_credible(alpha: f64, batch: &ObservationBatch, level: f64) -> Result<IntervalResult> {
    let (upper, mass) = gamma_upper(alpha, batch, level)?;
    Ok(one_sided(upper, level, IntervalMethod::CredibleOneSided, mass, 0.0))
}

pub fn gamma_confidence(alpha: f64, batch: &ObservationBatch, level: f64) -> Result<IntervalResult> {
    let (upper, mass) = gamma_upper(alpha, batch, level)?;
    Ok(one_sided(upper, level, IntervalMethod::ConfidencePivot, mass, 0.0))
}

/// `{θ : D_A(θ, center) ≤ radius}` for the Gaussian location family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub level: f64,
    pub n: usize,
}

impl DivergenceBall {
    pub fn contains(&self, fam: &FamilyDescriptor, theta: &NaturalParam) -> Result<bool> {
        let c = NaturalParam::from_slice(&self.center);
        Ok(fam.bregman(theta, &c)? <= self.radius)
    }

    /// The ball as the range `[0, radius]` of admissible divergences.
    pub fn as_interval(&self, mass: f64) -> IntervalResult {
        one_sided(self.radius, self.level, IntervalMethod::DivergenceBall, mass, 0.0)
    }
}

/// Under the posterior N(θ̂, (nB)⁻¹), 2n·D_A(θ, θ̂) is χ² with d degrees of
/// freedom, so r = P⁻¹(d/2, level)/n.
pub fn gaussian_divergence_ball(fam: &FamilyDescriptor, batch: &ObservationBatch, level: f64) -> Result<DivergenceBall> {
    check_level(level)?;
    batch.check_against(fam)?;
    let c = fam
        .gaussian_cov()
        .ok_or_else(|| Error::invalid(format!("divergence balls are built for the Gaussian family, not {}", fam.name())))?;
    let d = c.dim() as f64;
    let n = batch.n() as f64;
    let center = c.inverse() * batch.xbar();
    Ok(DivergenceBall {
        center: center.as_slice().to_vec(),
        radius: inv_reg_gamma_lower(0.5 * d, level)? / n,
        level,
        n: batch.n(),
    })
}

/// Posterior mass of the ball from the χ² law of 2n·D_A.
pub fn ball_posterior_mass(fam: &FamilyDescriptor, ball: &DivergenceBall) -> Result<f64> {
    let d = fam.dimension() as f64;
    reg_gamma_lower(0.5 * d, ball.n as f64 * ball.radius)
}

/// Posterior mass of the ball by nested quadrature of the whitened posterior
/// density over the ball's cross-sections. Independent of the χ² argument.
pub fn ball_posterior_mass_by_quadrature(fam: &FamilyDescriptor, ball: &DivergenceBall, tol: f64) -> Result<f64> {
    let d = fam.dimension();
    if d > 3 {
        return Err(Error::invalid(format!("ball quadrature supports d ≤ 3, got {d}")));
    }
    // whitened by the posterior covariance, the posterior is standard normal
    // and the ball is |z|² ≤ 2n r
    let rho2 = 2.0 * ball.n as f64 * ball.radius;
    section_mass(d, rho2, tol)
}

fn section_mass(k: usize, rho2: f64, tol: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    if !(rho2 > 0.0) {
        return Ok(0.0);
    }
    let rho = rho2.sqrt();
    let cfg = QuadConfig {
        abs_tol: tol / (k as f64),
        rel_tol: 0.0,
        ..QuadConfig::default()
    };
    let r = integrate_with(|z| Ok(std_normal_pdf(z) * section_mass(k - 1, rho2 - z * z, tol)?), Domain::finite(-rho, rho), &cfg)?;
    Ok(r.value)
}

fn degenerate_mean(batch: &ObservationBatch) -> Result<f64> {
    let x = batch.xbar_scalar();
    if x == 0.0 {
        return Err(Error::DegenerateData(format!(
            "all {} Poisson-exponential observations sit on the atom at zero",
            batch.n()
        )));
    }
    Ok(x)
}

fn check_pe(kappa: f64, batch: &ObservationBatch) -> Result<f64> {
    let fam = FamilyDescriptor::poisson_exponential(kappa)?;
    batch.check_against(&fam)?;
    degenerate_mean(batch)
}

/// `[0, q]` with q the level-quantile of the inverse Gaussian posterior.
pub fn poisson_exp_credible(kappa: f64, batch: &ObservationBatch, level: f64) -> Result<IntervalResult> {
    check_level(level)?;
    check_pe(kappa, batch)?;
    let post = poisson_exponential_posterior(kappa, batch)?;
    let q = post.quantile(level)?;
    Ok(one_sided(q, level, IntervalMethod::CredibleOneSided, post.cdf(q), 1e-15))
}

const CDF_INVERSION_TOL: f64 = 1e-13;

/// Upper bound U with P_U(X̄ ≤ x̄_obs) = level. The sum of m observations is
/// Poisson-exponential(mκ, β), whose cdf at a fixed point increases with β.
pub fn poisson_exp_confidence(kappa: f64, batch: &ObservationBatch, level: f64) -> Result<IntervalResult> {
    check_level(level)?;
    let xbar = check_pe(kappa, batch)?;
    let m = batch.n() as f64;
    let total = m * xbar;
    let excess = |beta: f64| -> Result<f64> { Ok(PoissonExponentialDist::new(m * kappa, beta)?.cdf(total)? - level) };
    // start near the rate that matches the observed mean
    let guess = (m * kappa / (2.0 * total)).sqrt();
    let bracket = bracket_positive(excess, 0.5 * guess, 2.0 * guess)?;
    let upper = find_root_with(excess, bracket, CDF_INVERSION_TOL * bracket.hi)?;
    let mass = excess(upper)? + level;
    Ok(one_sided(upper, level, IntervalMethod::ConfidenceCdfInversion, mass, CDF_INVERSION_TOL))
}

/// Confidence bound when all m observations are zero: e^{−mκ/(2U)} = level.
pub fn poisson_exp_zero_data_confidence(kappa: f64, m: usize, level: f64) -> Result<f64> {
    check_level(level)?;
    FamilyDescriptor::poisson_exponential(kappa)?;
    if m == 0 {
        return Err(Error::invalid("need at least one observation"));
    }
    Ok(m as f64 * kappa / (2.0 * (1.0 / level).ln()))
}

/// Credible bound when all m observations are zero. The Jeffreys posterior is
/// then ∝ β^{−3/2} e^{−mκ/(2β)}, so mκ/(2β) ∼ Γ(1/2, 1).
pub fn poisson_exp_zero_data_credible(kappa: f64, m: usize, level: f64) -> Result<f64> {
    check_level(level)?;
    FamilyDescriptor::poisson_exponential(kappa)?;
    if m == 0 {
        return Err(Error::invalid("need at least one observation"));
    }
    Ok(m as f64 * kappa / (2.0 * inv_reg_gamma_lower(0.5, 1.0 - level)?))
}

/// The interval constructions that coverage can be simulated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalOp {
    GammaCredible,
    GammaConfidence,
    GaussianBall,
    PoissonExpCredible,
    PoissonExpConfidence,
}

impl IntervalOp {
    pub fn name(self) -> &'static str {
        match self {
            IntervalOp::GammaCredible => "gamma-credible",
            IntervalOp::GammaConfidence => "gamma-confidence",
            IntervalOp::GaussianBall => "gaussian-ball",
            IntervalOp::PoissonExpCredible => "poisson-exp-credible",
            IntervalOp::PoissonExpConfidence => "poisson-exp-confidence",
        }
    }

    /// The construction of kind `credible` (or confidence) suited to `fam`.
    pub fn for_family(fam: &FamilyDescriptor, credible: bool) -> Result<Self> {
        Ok(match (fam.kind(), credible) {
            (FamilyKind::GammaShape { .. }, true) => IntervalOp::GammaCredible,
            (FamilyKind::GammaShape { .. }, false) => IntervalOp::GammaConfidence,
            (FamilyKind::GaussianLocation(_), _) => IntervalOp::GaussianBall,
            (FamilyKind::PoissonExponentialShape { .. }, true) => IntervalOp::PoissonExpCredible,
            (FamilyKind::PoissonExponentialShape { .. }, false) => IntervalOp::PoissonExpConfidence,
            (FamilyKind::InverseGaussianShape { .. }, _) => {
                return Err(Error::invalid("no interval construction is provided for the inverse Gaussian family"))
            }
        })
    }

    fn check_family(self, fam: &FamilyDescriptor) -> Result<()> {
        let ok = matches!(
            (self, fam.kind()),
            (IntervalOp::GammaCredible | IntervalOp::GammaConfidence, FamilyKind::GammaShape { .. })
                | (IntervalOp::GaussianBall, FamilyKind::GaussianLocation(_))
                | (
                    IntervalOp::PoissonExpCredible | IntervalOp::PoissonExpConfidence,
                    FamilyKind::PoissonExponentialShape { .. }
                )
        );
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{} does not apply to the {} family", self.name(), fam.name())))
        }
    }
}

impl fmt::Display for IntervalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntervalOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma-credible" => IntervalOp::GammaCredible,
            "gamma-confidence" => IntervalOp::GammaConfidence,
            "gaussian-ball" => IntervalOp::GaussianBall,
            "poisson-exp-credible" => IntervalOp::PoissonExpCredible,
            "poisson-exp-confidence" => IntervalOp::PoissonExpConfidence,
            other => return Err(Error::invalid(format!("unknown interval construction '{other}'"))),
        })
    }
}

/// Computes the interval `op` for one data set. Rate intervals come back as
/// `[0, q]`; the Gaussian ball comes back as its divergence range `[0, r]`.
pub fn compute_interval(fam: &FamilyDescriptor, op: IntervalOp, batch: &ObservationBatch, level: f64) -> Result<IntervalResult> {
    op.check_family(fam)?;
    match (op, fam.kind()) {
        (IntervalOp::GammaCredible, FamilyKind::GammaShape { alpha }) => gamma_credible(*alpha, batch, level),
        (IntervalOp::GammaConfidence, FamilyKind::GammaShape { alpha }) => gamma_confidence(*alpha, batch, level),
        (IntervalOp::PoissonExpCredible, FamilyKind::PoissonExponentialShape { kappa }) => poisson_exp_credible(*kappa, batch, level),
        (IntervalOp::PoissonExpConfidence, FamilyKind::PoissonExponentialShape { kappa }) => poisson_exp_confidence(*kappa, batch, level),
        (IntervalOp::GaussianBall, _) => {
            let ball = gaussian_divergence_ball(fam, batch, level)?;
            Ok(ball.as_interval(ball_posterior_mass(fam, &ball)?))
        }
        _ => unreachable!("family checked above"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub op: IntervalOp,
    pub level: f64,
    pub m: usize,
    pub trials: u64,
    pub hits: u64,
    /// Trials whose data were degenerate (all Poisson-exponential
    /// observations at zero); they are scored with the zero-data bounds.
    pub degenerate: u64,
    pub empirical_coverage: f64,
    /// level ± 3 binomial standard deviations at this number of trials.
    pub three_sigma_band: (f64, f64),
}

impl CoverageReport {
    pub fn within_band(&self) -> bool {
        self.empirical_coverage >= self.three_sigma_band.0 && self.empirical_coverage <= self.three_sigma_band.1
    }

    /// One binomial standard deviation at the nominal level.
    pub fn sigma(&self) -> f64 {
        (self.level * (1.0 - self.level) / self.trials as f64).sqrt()
    }
}

/// Draws `trials` data sets of size `m` at `truth` and counts how often the
/// interval covers it. Trial t uses random stream t of `seed`.
pub fn coverage_simulation(
    fam: &FamilyDescriptor,
    op: IntervalOp,
    truth: &NaturalParam,
    m: usize,
    level: f64,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    op.check_family(fam)?;
    fam.check_natural(truth)?;
    check_level(level)?;
    if trials == 0 || m == 0 {
        return Err(Error::invalid("coverage needs at least one trial and one observation per trial"));
    }
    let rate = -truth.value();
    let mut hits = 0u64;
    let mut degenerate = 0u64;
    let mut points: Vec<DVector<f64>> = Vec::with_capacity(m);
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        points.clear();
        for _ in 0..m {
            points.push(fam.sample(truth, &mut rng)?);
        }
        let batch = ObservationBatch::from_points(&points)?;
        let covered = match op {
            IntervalOp::GaussianBall => gaussian_divergence_ball(fam, &batch, level)?.contains(fam, truth)?,
            IntervalOp::PoissonExpCredible | IntervalOp::PoissonExpConfidence if batch.xbar_scalar() == 0.0 => {
                degenerate += 1;
                let kappa = fam.shape().expect("one-dimensional family");
                let upper = if op == IntervalOp::PoissonExpCredible {
                    poisson_exp_zero_data_credible(kappa, m, level)?
                } else {
                    poisson_exp_zero_data_confidence(kappa, m, level)?
                };
                rate <= upper
            }
            _ => {
                let iv = compute_interval(fam, op, &batch, level).map_err(|e| annotate(e, t))?;
                rate <= iv.upper
            }
        };
        if covered {
            hits += 1;
        }
    }
    let n = trials as f64;
    let sd = (level * (1.0 - level) / n).sqrt();
    Ok(CoverageReport {
        op,
        level,
        m,
        trials,
        hits,
        degenerate,
        empirical_coverage: hits as f64 / n,
        three_sigma_band: (level - 3.0 * sd, level + 3.0 * sd),
    })
}

fn annotate(e: Error, trial: u64) -> Error {
    match e {
        Error::NonConvergence {
            what,
            estimate,
            error,
            evaluations,
        } => Error::NonConvergence {
            what: format!("{what} (coverage trial {trial})"),
            estimate,
            error,
            evaluations,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::InverseGaussianDist;
    use crate::numerics::quadrature::integrate;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn batch(xs: &[f64]) -> ObservationBatch {
        ObservationBatch::from_scalars(xs).unwrap()
    }

    #[test]
    fn gamma_exponential_quantiles() {
        let r = gamma_credible(1.0, &batch(&[1.0]), 0.9).unwrap();
        assert_relative_eq!(r.upper, 10f64.ln(), max_relative = 1e-12);
        assert_eq!(r.lower, 0.0);
        let r2 = gamma_credible(1.0, &batch(&[2.0]), 0.9).unwrap();
        assert_relative_eq!(r2.upper, 0.5 * 10f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn gamma_posterior_mass_by_quadrature() {
        for &(alpha, ref xs, level) in &[(1.0, vec![1.0], 0.9), (2.5, vec![0.3, 1.7, 0.9], 0.75), (0.5, vec![4.0, 2.0], 0.95)] {
            let b = batch(xs);
            let r = gamma_credible(alpha, &b, level).unwrap();
            let (a, rate) = (b.n() as f64 * alpha, b.n() as f64 * b.xbar_scalar());
            let lg = crate::numerics::special::log_gamma(a).unwrap();
            let dens = |x: f64| if x > 0.0 { (a * rate.ln() + (a - 1.0) * x.ln() - rate * x - lg).exp() } else { 0.0 };
            let mass = integrate(dens, Domain::finite(0.0, r.upper), 1e-12).unwrap().value;
            assert!((mass - level).abs() < 1e-9, "{mass}");
        }
    }

    #[test]
    fn gamma_credible_equals_confidence() {
        let mut rng = rng_stream(11, 0);
        for _ in 0..20 {
            let alpha = 0.2 + 4.0 * rng.uniform();
            let m = 1 + (rng.uniform() * 9.0) as usize;
            let xs: Vec<f64> = (0..m).map(|_| 0.1 + 5.0 * rng.uniform()).collect();
            let level = 0.05 + 0.9 * rng.uniform();
            let b = batch(&xs);
            let c = gamma_credible(alpha, &b, level).unwrap();
            let f = gamma_confidence(alpha, &b, level).unwrap();
            assert_eq!(c.upper.to_bits(), f.upper.to_bits());
            assert_eq!(c.method, IntervalMethod::CredibleOneSided);
            assert_eq!(f.method, IntervalMethod::ConfidencePivot);
        }
    }

    #[test]
    fn gamma_pivot_probability() {
        // P(βX̄ ≤ F⁻¹(level)) = level with βX̄ ∼ Γ(mα, m)
        let (alpha, m, level) = (1.7, 4usize, 0.8);
        let b = batch(&[1.0, 2.0, 0.5, 0.5]);
        let r = gamma_confidence(alpha, &b, level).unwrap();
        let pivot = r.upper * b.xbar_scalar();
        assert_relative_eq!(reg_gamma_lower(m as f64 * alpha, m as f64 * pivot).unwrap(), level, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_ball_radius_and_boundary() {
        let g = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
        let b = batch(&[0.1, -0.4, 1.2, 0.3]);
        let ball = gaussian_divergence_ball(&g, &b, 0.95).unwrap();
        assert_relative_eq!(ball.radius, 3.841458820694124 / 8.0, max_relative = 1e-9);
        // a boundary point along any direction gives 2n D_A = χ² quantile
        let g2 = FamilyDescriptor::gaussian(DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0])).unwrap();
        let pts: Vec<DVector<f64>> = [[0.3, 1.0], [1.1, -0.2], [0.0, 0.5]].iter().map(|p| DVector::from_column_slice(p)).collect();
        let b2 = ObservationBatch::from_points(&pts).unwrap();
        let ball2 = gaussian_divergence_ball(&g2, &b2, 0.9).unwrap();
        let c = DVector::from_column_slice(&ball2.center);
        let dir = DVector::from_column_slice(&[0.6, -0.8]);
        let quad = dir.dot(&(g2.gaussian_cov().unwrap().matrix() * &dir));
        let t = (2.0 * ball2.radius / quad).sqrt();
        let edge = NaturalParam::new(&c + &dir * t);
        let chi2 = 2.0 * 3.0 * g2.bregman(&edge, &NaturalParam::new(c)).unwrap();
        // χ²₂ quantile at 0.9 is −2 ln 0.1
        assert_relative_eq!(chi2, -2.0 * 0.1f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn ball_mass_quadrature_matches_level() {
        let g1 = FamilyDescriptor::gaussian_scalar(3.0).unwrap();
        let ball = gaussian_divergence_ball(&g1, &batch(&[0.2, 0.9]), 0.9).unwrap();
        let mass = ball_posterior_mass_by_quadrature(&g1, &ball, 1e-12).unwrap();
        assert!((mass - 0.9).abs() < 1e-8, "{mass}");
        let g2 = FamilyDescriptor::gaussian(DMatrix::identity(2, 2)).unwrap();
        let pts = vec![DVector::from_column_slice(&[0.1, 0.2])];
        let ball = gaussian_divergence_ball(&g2, &ObservationBatch::from_points(&pts).unwrap(), 0.8).unwrap();
        let mass = ball_posterior_mass_by_quadrature(&g2, &ball, 1e-12).unwrap();
        assert!((mass - 0.8).abs() < 1e-8, "{mass}");
        // polar oracle in two dimensions: 1 − e^{−ρ²/2}
        assert_relative_eq!(mass, -(-(ball.n as f64) * ball.radius).exp_m1(), max_relative = 1e-9);
    }

    #[test]
    fn poisson_exp_credible_quantile() {
        let b = batch(&[2.0]);
        let r = poisson_exp_credible(2.0, &b, 0.9).unwrap();
        let post = InverseGaussianDist::new(0.5f64.sqrt(), 2.0).unwrap();
        let dens = |x: f64| if x > 0.0 { post.density(x).unwrap() } else { 0.0 };
        let mass = integrate(dens, Domain::finite(0.0, r.upper), 1e-13).unwrap().value;
        assert!((mass - 0.9).abs() < 1e-8, "{mass}");
        // bisection on the quadrature cdf
        let (mut lo, mut hi) = (0.0, 20.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let cdf = integrate(dens, Domain::finite(0.0, mid), 1e-13).unwrap().value;
            if cdf < 0.9 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((r.upper - 0.5 * (lo + hi)).abs() < 1e-6);
        let mut last = 0.0;
        for level in [0.1, 0.5, 0.9, 0.99] {
            let q = poisson_exp_credible(2.0, &b, level).unwrap().upper;
            assert!(q > last);
            last = q;
        }
    }

    #[test]
    fn poisson_exp_confidence_inverts_the_cdf() {
        let (kappa, level) = (2.0, 0.9);
        let b = batch(&[2.0]);
        let r = poisson_exp_confidence(kappa, &b, level).unwrap();
        // independent cdf: atom plus quadrature of the series density
        let law = PoissonExponentialDist::new(kappa, r.upper).unwrap();
        let cont = integrate(|x| if x > 0.0 { law.density(x).unwrap().1 } else { 0.0 }, Domain::finite(0.0, 2.0), 1e-13).unwrap().value;
        assert!((law.atom_weight() + cont - level).abs() < 1e-9);
        let cred = poisson_exp_credible(kappa, &b, level).unwrap();
        assert!((r.upper - cred.upper).abs() > 100.0 * CDF_INVERSION_TOL);
        let mut last = f64::INFINITY;
        for x in [0.2, 0.5, 1.0, 2.0, 5.0] {
            let u = poisson_exp_confidence(kappa, &batch(&[x, 0.0, x]), level).unwrap().upper;
            assert!(u < last);
            last = u;
        }
    }

    #[test]
    fn zero_data_is_degenerate_with_explicit_bounds() {
        let b = batch(&[0.0, 0.0]);
        assert!(matches!(poisson_exp_credible(2.0, &b, 0.9), Err(Error::DegenerateData(_))));
        assert!(matches!(poisson_exp_confidence(2.0, &b, 0.9), Err(Error::DegenerateData(_))));
        let u = poisson_exp_zero_data_confidence(2.0, 2, 0.9).unwrap();
        assert_relative_eq!((-2.0 * 2.0 / (2.0 * u)).exp(), 0.9, max_relative = 1e-14);
        // the posterior β^{−3/2} e^{−c/β} normalized by quadrature
        let c = 2.0;
        let q = poisson_exp_zero_data_credible(2.0, 2, 0.9).unwrap();
        let kernel = |b: f64| if b > 0.0 { b.powf(-1.5) * (-c / b).exp() } else { 0.0 };
        // β = e^v; the tail beyond e^60 carries mass below 1e-12
        let total = integrate(|v: f64| kernel(v.exp()) * v.exp(), Domain::finite(-60.0, 60.0), 1e-13).unwrap().value;
        let below = integrate(kernel, Domain::finite(0.0, q), 1e-12).unwrap().value;
        assert!((below / total - 0.9).abs() < 1e-8);
    }

    #[test]
    fn coverage_is_reproducible_and_near_level() {
        let g = FamilyDescriptor::gamma(1.0).unwrap();
        let truth = NaturalParam::scalar(-2.0);
        let a = coverage_simulation(&g, IntervalOp::GammaCredible, &truth, 5, 0.5, 4000, 9).unwrap();
        let b = coverage_simulation(&g, IntervalOp::GammaCredible, &truth, 5, 0.5, 4000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.within_band(), "{a:?}");
        let gauss = FamilyDescriptor::gaussian_scalar(2.0).unwrap();
        let c = coverage_simulation(&gauss, IntervalOp::GaussianBall, &NaturalParam::scalar(0.3), 3, 0.9, 4000, 1).unwrap();
        assert!(c.within_band(), "{c:?}");
        let pe = FamilyDescriptor::poisson_exponential(2.0).unwrap();
        let d = coverage_simulation(&pe, IntervalOp::PoissonExpConfidence, &NaturalParam::scalar(-1.0), 3, 0.9, 500, 4).unwrap();
        assert!(d.degenerate > 0 && d.hits <= d.trials);
    }

    #[test]
    fn mismatched_family_is_rejected() {
        let g = FamilyDescriptor::gamma(1.0).unwrap();
        let r = coverage_simulation(&g, IntervalOp::GaussianBall, &NaturalParam::scalar(-1.0), 2, 0.9, 10, 0);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        assert!(IntervalOp::for_family(&FamilyDescriptor::inverse_gaussian(1.0).unwrap(), true).is_err());
        assert_eq!("gaussian-ball".parse::<IntervalOp>().unwrap(), IntervalOp::GaussianBall);
        assert!(gamma_credible(1.0, &batch(&[1.0]), 1.0).is_err());
    }
}
