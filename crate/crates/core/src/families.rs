//! Closed forms for the four concrete families: conjugation map, Gamma,
//! inverse Gaussian and Poisson-exponential distributions, and the Jeffreys
//! posteriors they produce.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{ln_compound_series, FamilyDescriptor, FamilyKind, MeanParam, NaturalParam, ObservationBatch, TAU};
use crate::numerics::roots::{bracket_positive, find_root_with};
use crate::numerics::special::{
    inv_reg_gamma_lower, ln_gamma_unchecked, ln_std_normal_cdf, log_gamma, reg_gamma_lower, std_normal_cdf,
};

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugatePair {
    pub primal: FamilyDescriptor,
    pub dual: FamilyDescriptor,
    pub self_conjugate: bool,
    /// Natural parameter of the dual expressed as `sign · x` for a primal mean `x`.
    pub sign: f64,
}

/// The exponential family whose sufficient statistic is θ and whose cumulant is A*.
pub fn conjugate_family(fam: &FamilyDescriptor) -> ConjugatePair {
    let (dual, self_conjugate, sign) = match fam.kind() {
        FamilyKind::GammaShape { alpha } => (FamilyDescriptor::gamma(*alpha), true, -1.0),
        FamilyKind::GaussianLocation(c) => (FamilyDescriptor::gaussian(c.inverse().clone()), true, 1.0),
        FamilyKind::InverseGaussianShape { kappa } => (FamilyDescriptor::poisson_exponential(*kappa), false, -1.0),
        FamilyKind::PoissonExponentialShape { kappa } => (FamilyDescriptor::inverse_gaussian(*kappa), false, -1.0),
    };
    ConjugatePair {
        primal: fam.clone(),
        // hyperparameters were validated when `fam` was built
        dual: dual.expect("conjugate of a valid family is valid"),
        self_conjugate,
        sign,
    }
}

pub fn ln_gamma_density(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    positive("shape α", alpha)?;
    positive("rate β", beta)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::support(format!("Gamma density needs x > 0, got {x}")));
    }
    Ok(alpha * beta.ln() + (alpha - 1.0) * x.ln() - beta * x - log_gamma(alpha)?)
}

/// β^α x^{α−1} e^{−βx} / Γ(α).
pub fn gamma_density(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    ln_gamma_density(alpha, beta, x).map(f64::exp)
}

/// Gamma distribution over the rate β, as produced by the Jeffreys prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaPosterior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPosterior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        Ok(GammaPosterior {
            shape: positive("posterior shape", shape)?,
            rate: positive("posterior rate", rate)?,
        })
    }

    pub fn ln_density(&self, beta: f64) -> Result<f64> {
        ln_gamma_density(self.shape, self.rate, beta)
    }

    pub fn density(&self, beta: f64) -> Result<f64> {
        self.ln_density(beta).map(f64::exp)
    }

    pub fn cdf(&self, beta: f64) -> Result<f64> {
        reg_gamma_lower(self.shape, self.rate * beta.max(0.0))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(inv_reg_gamma_lower(self.shape, p)? / self.rate)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Inverse Gaussian with mean β₀ and shape κ:
/// (κ/(τβ³))^{1/2} exp(−κ(β − β₀)²/(2β₀²β)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InverseGaussianDist {
    pub mean: f64,
    pub shape: f64,
}

impl InverseGaussianDist {
    pub fn new(mean: f64, shape: f64) -> Result<Self> {
        Ok(InverseGaussianDist {
            mean: positive("inverse Gaussian mean", mean)?,
            shape: positive("inverse Gaussian shape", shape)?,
        })
    }

    pub fn ln_density(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::support(format!("inverse Gaussian density needs β > 0, got {beta}")));
        }
        let (m, k) = (self.mean, self.shape);
        Ok(0.5 * (k.ln() - TAU.ln()) - 1.5 * beta.ln() - k * (beta - m).powi(2) / (2.0 * m * m * beta))
    }

    pub fn density(&self, beta: f64) -> Result<f64> {
        self.ln_density(beta).map(f64::exp)
    }

    /// Φ(√(κ/β)(β/β₀ − 1)) + e^{2κ/β₀} Φ(−√(κ/β)(β/β₀ + 1)), the second
    /// term assembled in log space.
    pub fn cdf(&self, beta: f64) -> f64 {
        if !(beta > 0.0) {
            return 0.0;
        }
        if beta == f64::INFINITY {
            return 1.0;
        }
        let (m, k) = (self.mean, self.shape);
        let r = (k / beta).sqrt();
        let first = std_normal_cdf(r * (beta / m - 1.0));
        let second = (2.0 * k / m + ln_std_normal_cdf(-r * (beta / m + 1.0))).exp();
        (first + second).min(1.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        let g = |b: f64| Ok(self.cdf(b) - p);
        let bracket = bracket_positive(g, 0.5 * self.mean, 2.0 * self.mean)?;
        let mut b = find_root_with(g, bracket, 1e-15 * bracket.hi)?;
        // a Newton step with the exact density removes the bracketing residual
        if let Ok(f) = self.density(b) {
            if f > 0.0 {
                let step = b - (self.cdf(b) - p) / f;
                if step > bracket.lo && step < bracket.hi && (self.cdf(step) - p).abs() < (self.cdf(b) - p).abs() {
                    b = step;
                }
            }
        }
        Ok(b)
    }
}

/// Compound Poisson sum of Exp(β) variables with Poisson rate λ = κ/(2β).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoissonExponentialDist {
    pub kappa: f64,
    pub rate: f64,
}

impl PoissonExponentialDist {
    pub fn new(kappa: f64, rate: f64) -> Result<Self> {
        Ok(PoissonExponentialDist {
            kappa: positive("shape κ", kappa)?,
            rate: positive("rate β", rate)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.kappa / (2.0 * self.rate)
    }

    pub fn atom_weight(&self) -> f64 {
        (-self.lambda()).exp()
    }

    /// ln of the continuous density at x > 0.
    pub fn ln_continuous_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::support(format!("continuous part needs x > 0, got {x}")));
        }
        Ok(-self.rate * x - self.lambda() + ln_compound_series(self.kappa, x))
    }

    /// `(atom, density_at_x)`; at x = 0 the density is its right limit.
    pub fn density(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::support(format!("Poisson-exponential support is x ≥ 0, got {x}")));
        }
        let atom = self.atom_weight();
        let dens = if x == 0.0 { atom * 0.5 * self.kappa } else { self.ln_continuous_density(x)?.exp() };
        Ok((atom, dens))
    }

    /// P(X > x) = Σ_k Pois(λ; k) Q(k, βx), with Q the regularized upper incomplete gamma.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || x.is_nan() {
            return Err(Error::support(format!("Poisson-exponential support is x ≥ 0, got {x}")));
        }
        let lam = self.lambda();
        if x == 0.0 {
            return Ok(-(-lam).exp_m1());
        }
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        let y = self.rate * x;
        let (ll, ly) = (lam.ln(), y.ln());
        let mut q = 0.0; // Q(k, y) = Σ_{j<k} e^{−y} y^j / j!
        let mut total = 0.0;
        let mut k = 1.0;
        loop {
            q += (-y + (k - 1.0) * ly - ln_gamma_unchecked(k)).exp();
            let w = (-lam + k * ll - ln_gamma_unchecked(k + 1.0)).exp();
            total += w * q.min(1.0);
            if k > lam && (w < 1e-18 || q >= 1.0 && w < 1e-18 * total.max(1e-300)) {
                break;
            }
            k += 1.0;
            if k > 1e7 {
                return Err(Error::NonConvergence {
                    what: "Poisson-exponential cdf series".into(),
                    estimate: total,
                    error: w,
                    evaluations: k as usize,
                });
            }
        }
        Ok(total.min(1.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.sf(x)?)
    }

    pub fn mean(&self) -> f64 {
        self.lambda() / self.rate
    }
}

/// Variance of the Poisson-exponential family at mean μ: φ μ^{3/2} with φ = 2^{3/2} κ^{−1/2}.
pub fn tweedie_variance_function(kappa: f64, mu: f64) -> Result<f64> {
    positive("shape κ", kappa)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain(format!("Tweedie variance needs μ > 0, got {mu}")));
    }
    Ok(2f64.powf(1.5) / kappa.sqrt() * mu.powf(1.5))
}

/// The same variance indexed by the natural parameter θ = −β.
pub fn tweedie_variance_natural(kappa: f64, theta: f64) -> Result<f64> {
    if !(theta < 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("natural parameter must be negative, got {theta}")));
    }
    tweedie_variance_function(kappa, kappa / (2.0 * theta * theta))
}

fn interior_mean(batch: &ObservationBatch) -> Result<f64> {
    if batch.dim() != 1 {
        return Err(Error::invalid("posterior needs one-dimensional data"));
    }
    let x = batch.xbar_scalar();
    if !(x > 0.0) {
        return Err(Error::domain(format!("posterior needs x̄ > 0, got {x}")));
    }
    Ok(x)
}

/// Jeffreys posterior of the Gamma rate: Γ(mα, m x̄).
pub fn gamma_posterior(alpha: f64, batch: &ObservationBatch) -> Result<GammaPosterior> {
    let x = interior_mean(batch)?;
    let m = batch.n() as f64;
    GammaPosterior::new(m * positive("shape α", alpha)?, m * x)
}

/// Jeffreys posterior of the Poisson-exponential rate: IG((κ/(2x̄))^{1/2}, mκ).
pub fn poisson_exponential_posterior(kappa: f64, batch: &ObservationBatch) -> Result<InverseGaussianDist> {
    let x = interior_mean(batch)?;
    positive("shape κ", kappa)?;
    InverseGaussianDist::new((kappa / (2.0 * x)).sqrt(), batch.n() as f64 * kappa)
}

/// Multivariate normal over θ: the Jeffreys posterior N(B⁻¹x̄, (nB)⁻¹) of the
/// Gaussian location family.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl GaussianPosterior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid("posterior mean and covariance dimensions differ"));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("posterior covariance must be positive definite"))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(GaussianPosterior {
            precision: chol.inverse(),
            mean,
            cov,
            log_det,
        })
    }

    pub fn ln_density(&self, theta: &DVector<f64>) -> f64 {
        let d = theta - &self.mean;
        -0.5 * d.dot(&(&self.precision * &d)) - 0.5 * self.mean.len() as f64 * TAU.ln() - 0.5 * self.log_det
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn gaussian_posterior(fam: &FamilyDescriptor, batch: &ObservationBatch) -> Result<GaussianPosterior> {
    let c = fam
        .gaussian_cov()
        .ok_or_else(|| Error::invalid(format!("Gaussian posterior requested for the {} family", fam.name())))?;
    if batch.dim() != c.dim() {
        return Err(Error::invalid("data dimension does not match the covariance"));
    }
    let n = batch.n() as f64;
    GaussianPosterior::new(c.inverse() * batch.xbar(), c.inverse() / n)
}

/// max over `grid` of |A*(x) − A(M⁻¹x)|, with A* from the generic conjugate.
/// Zero certifies A* = A ∘ M⁻¹ on the grid; points where M⁻¹x leaves Θ give
/// an infinite defect.
pub fn self_conjugacy_defect(fam: &FamilyDescriptor, map: &DMatrix<f64>, grid: &[DVector<f64>]) -> Result<f64> {
    let d = fam.dimension();
    if map.nrows() != d || map.ncols() != d {
        return Err(Error::invalid(format!("map must be {d}x{d}")));
    }
    let inv = map
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("map must be symmetric positive definite"))?
        .inverse();
    let mut worst: f64 = 0.0;
    for x in grid {
        let conj = fam.convex_conjugate(&MeanParam::new(x.clone()))?;
        let pulled = NaturalParam::new(&inv * x);
        let defect = match fam.cumulant(&pulled) {
            Ok(a) => (conj - a).abs(),
            Err(Error::Domain(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst = worst.max(defect);
    }
    Ok(worst)
}
