//! Natural exponential families `dP_θ/dλ(x) = exp(θ·x − A(θ)) h(x)`.
//!
//! A [`FamilyDescriptor`] fixes one of the four concrete families together
//! with its hyperparameters. All densities are with respect to Lebesgue
//! measure, except the Poisson-exponential atom at zero which is a mass
//! with respect to a Dirac measure (its carrier is 1 there).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::roots::{bracket_positive, find_root_with};
use crate::numerics::special::{ln_gamma_unchecked, log_gamma};
use crate::numerics::RngStream;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct NaturalParam {
    pub theta: DVector<f64>,
}

impl NaturalParam {
    pub fn new(theta: DVector<f64>) -> Self {
        NaturalParam { theta }
    }

    pub fn scalar(theta: f64) -> Self {
        NaturalParam {
            theta: DVector::from_element(1, theta),
        }
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        NaturalParam {
            theta: DVector::from_column_slice(theta),
        }
    }

    /// First coordinate; the whole parameter for one-dimensional families.
    pub fn value(&self) -> f64 {
        self.theta[0]
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanParam {
    pub mu: DVector<f64>,
}

impl MeanParam {
    pub fn new(mu: DVector<f64>) -> Self {
        MeanParam { mu }
    }

    pub fn scalar(mu: f64) -> Self {
        MeanParam {
            mu: DVector::from_element(1, mu),
        }
    }

    pub fn from_slice(mu: &[f64]) -> Self {
        MeanParam {
            mu: DVector::from_column_slice(mu),
        }
    }

    pub fn value(&self) -> f64 {
        self.mu[0]
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Covariance `B` of the Gaussian location family with its inverse,
/// Cholesky factor and log-determinant cached at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCov {
    b: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl GaussianCov {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.nrows() != b.ncols() {
            return Err(Error::invalid(format!("covariance must be square and non-empty, got {}x{}", b.nrows(), b.ncols())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance has non-finite entries"));
        }
        let scale = b.amax().max(f64::MIN_POSITIVE);
        if (&b - b.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        let chol = b
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("covariance must be positive definite"))?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let b_inv = chol.inverse();
        Ok(GaussianCov {
            b,
            b_inv,
            chol: l,
            log_det,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.b_inv
    }

    /// Lower-triangular `L` with `L Lᵀ = B`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// Gamma with fixed shape α; θ = −β for rate β.
    GammaShape { alpha: f64 },
    /// Gaussian location with covariance B; θ = B⁻¹μ.
    GaussianLocation(GaussianCov),
    /// Inverse Gaussian with fixed shape κ; θ = −κ/(2β₀²) for mean β₀.
    InverseGaussianShape { kappa: f64 },
    /// Compound Poisson sum of exponentials with shape κ; θ = −β.
    PoissonExponentialShape { kappa: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDescriptor {
    kind: FamilyKind,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl fmt::Display for FamilyDescriptor {
    /// `gamma(alpha=1)`, `poisson-exp(kappa=2)`, `gaussian(B=1)` or
    /// `gaussian(B=[2,0.5;0.5,1])`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FamilyKind::GammaShape { alpha } => write!(f, "gamma(alpha={alpha})"),
            FamilyKind::InverseGaussianShape { kappa } => write!(f, "inverse-gaussian(kappa={kappa})"),
            FamilyKind::PoissonExponentialShape { kappa } => write!(f, "poisson-exp(kappa={kappa})"),
            FamilyKind::GaussianLocation(c) if c.dim() == 1 => write!(f, "gaussian(B={})", c.matrix()[(0, 0)]),
            FamilyKind::GaussianLocation(c) => {
                let m = c.matrix();
                let rows: Vec<String> = (0..c.dim())
                    .map(|i| (0..c.dim()).map(|j| m[(i, j)].to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "gaussian(B=[{}])", rows.join(";"))
            }
        }
    }
}

impl FamilyDescriptor {
    pub fn gamma(alpha: f64) -> Result<Self> {
        Ok(FamilyDescriptor {
            kind: FamilyKind::GammaShape {
                alpha: positive("shape α", alpha)?,
            },
        })
    }

    pub fn gaussian(b: DMatrix<f64>) -> Result<Self> {
        Ok(FamilyDescriptor {
            kind: FamilyKind::GaussianLocation(GaussianCov::new(b)?),
        })
    }

    /// One-dimensional Gaussian location family with variance `b`.
    pub fn gaussian_scalar(b: f64) -> Result<Self> {
        Self::gaussian(DMatrix::from_element(1, 1, positive("variance B", b)?))
    }

    pub fn inverse_gaussian(kappa: f64) -> Result<Self> {
        Ok(FamilyDescriptor {
            kind: FamilyKind::InverseGaussianShape {
                kappa: positive("shape κ", kappa)?,
            },
        })
    }

    pub fn poisson_exponential(kappa: f64) -> Result<Self> {
        Ok(FamilyDescriptor {
            kind: FamilyKind::PoissonExponentialShape {
                kappa: positive("shape κ", kappa)?,
            },
        })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            FamilyKind::GaussianLocation(c) => c.dim(),
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::GammaShape { .. } => "gamma",
            FamilyKind::GaussianLocation(_) => "gaussian",
            FamilyKind::InverseGaussianShape { .. } => "inverse-gaussian",
            FamilyKind::PoissonExponentialShape { .. } => "poisson-exp",
        }
    }

    /// The natural domain is the negative half-line (every family but the Gaussian).
    pub fn is_half_line(&self) -> bool {
        !matches!(self.kind, FamilyKind::GaussianLocation(_))
    }

    pub fn gaussian_cov(&self) -> Option<&GaussianCov> {
        match &self.kind {
            FamilyKind::GaussianLocation(c) => Some(c),
            _ => None,
        }
    }

    /// The scalar hyperparameter (α or κ) of a one-dimensional family.
    pub fn shape(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::GammaShape { alpha } => Some(alpha),
            FamilyKind::InverseGaussianShape { kappa } | FamilyKind::PoissonExponentialShape { kappa } => Some(kappa),
            FamilyKind::GaussianLocation(_) => None,
        }
    }

    fn check_dim(&self, what: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::invalid(format!(
                "{what} has dimension {} but the {} family has dimension {}",
                v.len(),
                self.name(),
                self.dimension()
            )));
        }
        Ok(())
    }

    /// Validates θ ∈ Θ and returns its first coordinate.
    pub fn check_natural(&self, theta: &NaturalParam) -> Result<f64> {
        self.check_dim("natural parameter", &theta.theta)?;
        if theta.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("natural parameter must be finite, got {:?}", theta.theta.as_slice())));
        }
        let t = theta.value();
        if self.is_half_line() && !(t < 0.0) {
            return Err(Error::domain(format!("{} natural parameter must be negative, got {t}", self.name())));
        }
        Ok(t)
    }

    /// Validates that `x` lies in the open mean domain and returns its first coordinate.
    pub fn check_mean(&self, x: &MeanParam) -> Result<f64> {
        self.check_dim("mean parameter", &x.mu)?;
        if x.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("mean parameter must be finite, got {:?}", x.mu.as_slice())));
        }
        let m = x.value();
        if self.is_half_line() && !(m > 0.0) {
            return Err(Error::domain(format!("{} mean must be positive, got {m}", self.name())));
        }
        Ok(m)
    }

    /// Validates that `x` is a possible observation.
    pub fn check_support(&self, x: &DVector<f64>) -> Result<()> {
        self.check_dim("observation", x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::support(format!("observation must be finite, got {:?}", x.as_slice())));
        }
        let v = x[0];
        let ok = match self.kind {
            FamilyKind::GammaShape { .. } | FamilyKind::InverseGaussianShape { .. } => v > 0.0,
            FamilyKind::PoissonExponentialShape { .. } => v >= 0.0,
            FamilyKind::GaussianLocation(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::support(format!("{v} is outside the support of the {} family", self.name())))
        }
    }

    pub fn cumulant(&self, theta: &NaturalParam) -> Result<f64> {
        let t = self.check_natural(theta)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => -alpha * (-t).ln(),
            FamilyKind::GaussianLocation(c) => 0.5 * theta.theta.dot(&(c.matrix() * &theta.theta)),
            FamilyKind::InverseGaussianShape { kappa } => -(-2.0 * kappa * t).sqrt(),
            FamilyKind::PoissonExponentialShape { kappa } => kappa / (-2.0 * t),
        })
    }

    /// The mean map ∇A.
    pub fn mean_from_natural(&self, theta: &NaturalParam) -> Result<MeanParam> {
        let t = self.check_natural(theta)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => MeanParam::scalar(-alpha / t),
            FamilyKind::GaussianLocation(c) => MeanParam::new(c.matrix() * &theta.theta),
            FamilyKind::InverseGaussianShape { kappa } => MeanParam::scalar((kappa / (-2.0 * t)).sqrt()),
            FamilyKind::PoissonExponentialShape { kappa } => MeanParam::scalar(kappa / (2.0 * t * t)),
        })
    }

    /// The Hessian of A, i.e. the covariance of the sufficient statistic.
    pub fn covariance(&self, theta: &NaturalParam) -> Result<DMatrix<f64>> {
        let t = self.check_natural(theta)?;
        let v = match &self.kind {
            FamilyKind::GammaShape { alpha } => alpha / (t * t),
            FamilyKind::GaussianLocation(c) => return Ok(c.matrix().clone()),
            FamilyKind::InverseGaussianShape { kappa } => kappa * kappa * (-2.0 * kappa * t).powf(-1.5),
            FamilyKind::PoissonExponentialShape { kappa } => -kappa / (t * t * t),
        };
        Ok(DMatrix::from_element(1, 1, v))
    }

    /// Maximum likelihood estimate θ̂ solving ∇A(θ) = x̄, in closed form.
    pub fn mle(&self, xbar: &MeanParam) -> Result<NaturalParam> {
        let x = self.check_mean(xbar)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => NaturalParam::scalar(-alpha / x),
            FamilyKind::GaussianLocation(c) => NaturalParam::new(c.inverse() * &xbar.mu),
            FamilyKind::InverseGaussianShape { kappa } => NaturalParam::scalar(-kappa / (2.0 * x * x)),
            FamilyKind::PoissonExponentialShape { kappa } => NaturalParam::scalar(-(kappa / (2.0 * x)).sqrt()),
        })
    }

    /// θ̂ by root finding on the mean map; the Gaussian case is a linear solve.
    pub fn mle_numeric(&self, xbar: &MeanParam, tol: f64) -> Result<NaturalParam> {
        let x = self.check_mean(xbar)?;
        if let FamilyKind::GaussianLocation(c) = &self.kind {
            let chol = c.matrix().clone().cholesky().ok_or_else(|| Error::invalid("covariance lost definiteness"))?;
            return Ok(NaturalParam::new(chol.solve(&xbar.mu)));
        }
        // the mean map is decreasing in β = −θ for all half-line families
        let g = |beta: f64| -> Result<f64> { Ok(self.mean_from_natural(&NaturalParam::scalar(-beta))?.value() - x) };
        let bracket = bracket_positive(g, 0.5, 2.0)?;
        let beta = find_root_with(g, bracket, tol * bracket.lo.max(f64::MIN_POSITIVE))?;
        Ok(NaturalParam::scalar(-beta))
    }

    /// D_A(θ2, θ1) = A(θ2) − A(θ1) − (θ2 − θ1)·∇A(θ1), in cancellation-free form.
    pub fn bregman(&self, theta2: &NaturalParam, theta1: &NaturalParam) -> Result<f64> {
        let t2 = self.check_natural(theta2)?;
        let t1 = self.check_natural(theta1)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => alpha * u_minus_ln1p(t2 / t1 - 1.0),
            FamilyKind::GaussianLocation(c) => {
                let d = &theta2.theta - &theta1.theta;
                0.5 * d.dot(&(c.matrix() * &d))
            }
            FamilyKind::InverseGaussianShape { kappa } => {
                let s1 = (-2.0 * kappa * t1).sqrt();
                let s2 = (-2.0 * kappa * t2).sqrt();
                (s2 - s1).powi(2) / (2.0 * s1)
            }
            FamilyKind::PoissonExponentialShape { kappa } => {
                let (b1, b2) = (-t1, -t2);
                kappa * (b2 - b1).powi(2) / (2.0 * b1 * b1 * b2)
            }
        })
    }

    /// D(P_θ1 ‖ P_θ2), which equals the Bregman divergence with swapped arguments.
    pub fn kl_divergence(&self, theta1: &NaturalParam, theta2: &NaturalParam) -> Result<f64> {
        self.bregman(theta2, theta1)
    }

    /// A*(x) = θ̂(x)·x − A(θ̂(x)).
    pub fn convex_conjugate(&self, x: &MeanParam) -> Result<f64> {
        self.check_mean(x)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => -alpha + alpha * alpha.ln() - alpha * x.value().ln(),
            FamilyKind::GaussianLocation(c) => 0.5 * x.mu.dot(&(c.inverse() * &x.mu)),
            FamilyKind::InverseGaussianShape { kappa } => kappa / (2.0 * x.value()),
            FamilyKind::PoissonExponentialShape { kappa } => -(2.0 * kappa * x.value()).sqrt(),
        })
    }

    /// |Cov(μ_θ)|^{1/2}.
    pub fn jeffreys_unnormalized(&self, theta: &NaturalParam) -> Result<f64> {
        let t = self.check_natural(theta)?;
        Ok(match &self.kind {
            FamilyKind::GaussianLocation(c) => (0.5 * c.log_det()).exp(),
            _ => self.covariance(&NaturalParam::scalar(t))?[(0, 0)].sqrt(),
        })
    }

    /// ln |Cov(μ_θ)|^{1/2}, finite where the unlogged form would overflow.
    pub fn ln_jeffreys(&self, theta: &NaturalParam) -> Result<f64> {
        let t = self.check_natural(theta)?;
        Ok(match &self.kind {
            FamilyKind::GaussianLocation(c) => 0.5 * c.log_det(),
            FamilyKind::GammaShape { alpha } => 0.5 * alpha.ln() - (-t).ln(),
            FamilyKind::InverseGaussianShape { kappa } => kappa.ln() - 0.75 * (-2.0 * kappa * t).ln(),
            FamilyKind::PoissonExponentialShape { kappa } => 0.5 * kappa.ln() - 1.5 * (-t).ln(),
        })
    }

    /// ln h(x), the carrier of the density with respect to Lebesgue measure.
    pub fn log_carrier(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_support(x)?;
        let v = x[0];
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => (alpha - 1.0) * v.ln() - log_gamma(*alpha)?,
            FamilyKind::GaussianLocation(c) => {
                -0.5 * x.dot(&(c.inverse() * x)) - 0.5 * (c.dim() as f64) * TAU.ln() - 0.5 * c.log_det()
            }
            FamilyKind::InverseGaussianShape { kappa } => 0.5 * (kappa.ln() - TAU.ln()) - 1.5 * v.ln() - kappa / (2.0 * v),
            FamilyKind::PoissonExponentialShape { kappa } => {
                if v == 0.0 {
                    0.0
                } else {
                    ln_compound_series(*kappa, v)
                }
            }
        })
    }

    /// ln of θ·x − A(θ) + ln h(x). For the Poisson-exponential family at x = 0
    /// this is the log of the atom's mass.
    pub fn log_density(&self, theta: &NaturalParam, x: &DVector<f64>) -> Result<f64> {
        let a = self.cumulant(theta)?;
        let h = self.log_carrier(x)?;
        Ok(theta.theta.dot(x) - a + h)
    }

    /// exp(−D_A(θ, θ̂(x))), the likelihood of θ relative to the best fit at x.
    pub fn robustness_ratio(&self, theta: &NaturalParam, x: &MeanParam) -> Result<f64> {
        let hat = self.mle(x)?;
        Ok((-self.bregman(theta, &hat)?).exp())
    }

    /// One observation drawn from P_θ.
    pub fn sample(&self, theta: &NaturalParam, rng: &mut RngStream) -> Result<DVector<f64>> {
        let t = self.check_natural(theta)?;
        Ok(match &self.kind {
            FamilyKind::GammaShape { alpha } => DVector::from_element(1, rng.gamma(*alpha, -t)?),
            FamilyKind::GaussianLocation(c) => {
                let mean = c.matrix() * &theta.theta;
                let mut z = DVector::zeros(c.dim());
                for v in z.iter_mut() {
                    *v = rng.normal(0.0, 1.0)?;
                }
                mean + c.cholesky_factor() * z
            }
            FamilyKind::InverseGaussianShape { kappa } => {
                let mean = (kappa / (-2.0 * t)).sqrt();
                DVector::from_element(1, rng.inverse_gaussian(mean, *kappa)?)
            }
            FamilyKind::PoissonExponentialShape { kappa } => {
                let beta = -t;
                let k = rng.poisson(kappa / (2.0 * beta))?;
                let y = if k == 0 { 0.0 } else { rng.gamma(k as f64, beta)? };
                DVector::from_element(1, y)
            }
        })
    }
}

/// u − ln(1 + u) without cancellation near u = 0.
pub(crate) fn u_minus_ln1p(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        // u²/2 − u³/3 + u⁴/4 − u⁵/5 + …
        let mut term = u * u;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term / k as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= u;
        }
        sum
    } else {
        u - u.ln_1p()
    }
}

const ASYMPTOTIC_SERIES_THRESHOLD: f64 = 1e8;

/// ln Σ_{k≥1} (κ/2)^k x^{k−1} / (k! (k−1)!) for x > 0, summed in log space
/// outward from the largest term.
pub(crate) fn ln_compound_series(kappa: f64, x: f64) -> f64 {
    let c = 0.5 * kappa;
    let lcx = (c * x).ln();
    if c * x > ASYMPTOTIC_SERIES_THRESHOLD {
        // the sum is √(cx) I₁(2√(cx)) / x; use the large-argument expansion of I₁
        let w = 2.0 * (c * x).sqrt();
        let r = 1.0 / (8.0 * w);
        let correction = 1.0 - 3.0 * r - 7.5 * r * r - 52.5 * r * r * r;
        return 0.5 * lcx + w - 0.5 * (TAU * w).ln() + correction.ln() - x.ln();
    }
    ln_compound_direct(c, x)
}

fn ln_compound_direct(c: f64, x: f64) -> f64 {
    let lcx = (c * x).ln();
    let ln_term = |k: f64| k * c.ln() + (k - 1.0) * x.ln() - ln_gamma_unchecked(k + 1.0) - ln_gamma_unchecked(k);
    let k0 = (c * x).sqrt().round().max(1.0);
    let peak = ln_term(k0);
    let mut sum = 1.0;
    // upward: t_{k+1}/t_k = cx / (k (k+1))
    let mut lt = peak;
    let mut k = k0;
    loop {
        lt += lcx - k.ln() - (k + 1.0).ln();
        k += 1.0;
        let r = (lt - peak).exp();
        sum += r;
        if r < 1e-17 * sum && k > k0 + 4.0 {
            break;
        }
    }
    lt = peak;
    k = k0;
    while k > 1.0 {
        lt -= lcx - (k - 1.0).ln() - k.ln();
        k -= 1.0;
        let r = (lt - peak).exp();
        sum += r;
        if r < 1e-17 * sum {
            break;
        }
    }
    peak + sum.ln()
}

/// A sufficient summary of iid observations: count, mean statistic, and
/// optionally the raw points (needed when carrier terms enter).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationBatch {
    n: usize,
    xbar: DVector<f64>,
    raw: Option<Vec<DVector<f64>>>,
}

/// Component-wise mean with each coordinate summed in sorted order, so the
/// result does not depend on the order of the observations.
fn sorted_mean(points: &[DVector<f64>]) -> DVector<f64> {
    let d = points[0].len();
    let mut out = DVector::zeros(d);
    let mut col = Vec::with_capacity(points.len());
    for j in 0..d {
        col.clear();
        col.extend(points.iter().map(|p| p[j]));
        col.sort_by(f64::total_cmp);
        out[j] = col.iter().sum::<f64>() / points.len() as f64;
    }
    out
}

impl ObservationBatch {
    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("an observation batch needs at least one observation"));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("observations must share a positive dimension"));
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("observations must be finite"));
        }
        Ok(ObservationBatch {
            n: points.len(),
            xbar: sorted_mean(points),
            raw: Some(points.to_vec()),
        })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let points: Vec<DVector<f64>> = values.iter().map(|&v| DVector::from_element(1, v)).collect();
        Self::from_points(&points)
    }

    pub fn from_summary(n: usize, xbar: DVector<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("an observation batch needs n ≥ 1"));
        }
        if xbar.is_empty() || xbar.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mean statistic must be finite and non-empty"));
        }
        Ok(ObservationBatch { n, xbar, raw: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xbar(&self) -> &DVector<f64> {
        &self.xbar
    }

    pub fn xbar_scalar(&self) -> f64 {
        self.xbar[0]
    }

    pub fn mean_param(&self) -> MeanParam {
        MeanParam::new(self.xbar.clone())
    }

    pub fn raw(&self) -> Option<&[DVector<f64>]> {
        self.raw.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.xbar.len()
    }

    /// Mean statistic of this batch followed by `future`.
    pub fn extended_mean(&self, future: &[DVector<f64>]) -> DVector<f64> {
        let mut total = &self.xbar * self.n as f64;
        for y in future {
            total += y;
        }
        total / (self.n + future.len()) as f64
    }

    /// Validates every raw observation (if kept) against the family's support.
    pub fn check_against(&self, fam: &FamilyDescriptor) -> Result<()> {
        if self.dim() != fam.dimension() {
            return Err(Error::invalid(format!(
                "data has dimension {} but the {} family has dimension {}",
                self.dim(),
                fam.name(),
                fam.dimension()
            )));
        }
        if let Some(raw) = &self.raw {
            for x in raw {
                fam.check_support(x)?;
            }
        }
        Ok(())
    }
}

/// Plain-data summary of a family for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: &'static str,
    pub dimension: usize,
    pub shape: Option<f64>,
    pub covariance: Option<Vec<f64>>,
}

impl From<&FamilyDescriptor> for FamilySummary {
    fn from(f: &FamilyDescriptor) -> Self {
        FamilySummary {
            family: f.name(),
            dimension: f.dimension(),
            shape: f.shape(),
            covariance: f.gaussian_cov().map(|c| c.matrix().as_slice().to_vec()),
        }
    }
}
