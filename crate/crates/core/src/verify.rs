//! Verification suites: fixed grids of checks, each reduced to one statistic
//! compared against a threshold.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{InverseGaussianDist, PoissonExponentialDist};
use crate::family::{FamilyDescriptor, FamilyKind, MeanParam, NaturalParam, ObservationBatch};
use crate::intervals::{
    ball_posterior_mass_by_quadrature, coverage_simulation, gamma_confidence, gamma_credible, gaussian_divergence_ball,
    poisson_exp_confidence, poisson_exp_credible, IntervalOp,
};
use crate::numerics::quadrature::{integrate_box, integrate_with, Domain, QuadConfig};
use crate::numerics::special::{inv_reg_gamma_lower, log_gamma, reg_gamma_lower, std_normal_cdf, std_normal_quantile};
use crate::numerics::{rng_stream, RngStream};
use crate::prediction::{cnml_predictive, equivalence_check, lemma1_constancy, PredictionConfig, PredictiveQuery};
use crate::saddlepoint::exactness_report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// Passes when the statistic is at most the threshold.
    #[serde(rename = "<=")]
    AtMost,
    /// Passes when the statistic exceeds the threshold.
    #[serde(rename = ">")]
    Exceeds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub statistic: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub runtime_seconds: f64,
    /// Grid and settings the check ran on, or the error that stopped it.
    pub detail: String,
    /// Set when the check could not be evaluated because a numerical method failed.
    pub numerical_failure: bool,
}

impl VerificationReport {
    fn evaluated(check: String, statistic: f64, comparison: Comparison, threshold: f64, runtime: f64, detail: String) -> Self {
        let passed = match comparison {
            Comparison::AtMost => statistic <= threshold,
            Comparison::Exceeds => statistic > threshold,
        };
        VerificationReport {
            check,
            passed,
            statistic,
            comparison,
            threshold,
            runtime_seconds: runtime,
            detail,
            numerical_failure: false,
        }
    }

    fn failed(check: String, error: &Error, threshold: f64, comparison: Comparison, runtime: f64) -> Self {
        VerificationReport {
            check,
            passed: false,
            statistic: f64::NAN,
            comparison,
            threshold,
            runtime_seconds: runtime,
            detail: error.to_string(),
            numerical_failure: error.is_numerical(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemma1,
    Equivalence,
    Saddlepoint,
    Normalization,
    Coverage,
    /// KL divergence against the Bregman divergence, and the density-ratio identity.
    Identities,
    /// Derivative, conjugacy and quantile round-trip checks.
    Hygiene,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Identities,
        Suite::Lemma1,
        Suite::Equivalence,
        Suite::Saddlepoint,
        Suite::Normalization,
        Suite::Coverage,
        Suite::Hygiene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Equivalence => "equivalence",
            Suite::Saddlepoint => "saddlepoint",
            Suite::Normalization => "normalization",
            Suite::Coverage => "coverage",
            Suite::Identities => "identities",
            Suite::Hygiene => "hygiene",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|suite| suite.name() == s)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown verification suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    /// Numeric tolerance handed to quadratures and root finders.
    pub tol: f64,
    pub seed: u64,
    /// Monte Carlo trials per coverage check.
    pub trials: u64,
    /// Draws for the compound-Poisson histogram check.
    pub mc_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            tol: 1e-10,
            seed: 20_240_601,
            trials: 100_000,
            mc_samples: 1_000_000,
        }
    }
}

/// Runs `suite`. With `family` set, the suite runs its checks on that family
/// only, instead of on its built-in list.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig, family: Option<&FamilyDescriptor>) -> Result<Vec<VerificationReport>> {
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid("verification tolerance must be positive"));
    }
    let mut out = Vec::new();
    match suite {
        Suite::All => {
            for s in Suite::EACH {
                out.extend(run_suite(s, cfg, family)?);
            }
        }
        Suite::Lemma1 => lemma1_suite(cfg, family, &mut out),
        Suite::Equivalence => equivalence_suite(cfg, family, &mut out),
        Suite::Saddlepoint => saddlepoint_suite(cfg, family, &mut out),
        Suite::Normalization => normalization_suite(cfg, family, &mut out),
        Suite::Coverage => coverage_suite(cfg, family, &mut out),
        Suite::Identities => identities_suite(cfg, family, &mut out),
        Suite::Hygiene => hygiene_suite(cfg, family, &mut out),
    }
    Ok(out)
}

/// Times `f` and turns its (statistic, detail) or error into a report.
fn check<F>(out: &mut Vec<VerificationReport>, name: String, comparison: Comparison, threshold: f64, f: F)
where
    F: FnOnce() -> Result<(f64, String)>,
{
    let start = Instant::now();
    let r = f();
    let runtime = start.elapsed().as_secs_f64();
    out.push(match r {
        Ok((statistic, detail)) => VerificationReport::evaluated(name, statistic, comparison, threshold, runtime, detail),
        Err(e) => VerificationReport::failed(name, &e, threshold, comparison, runtime),
    });
}

fn label(fam: &FamilyDescriptor) -> String {
    fam.to_string()
}

fn families_or(family: Option<&FamilyDescriptor>, defaults: Vec<FamilyDescriptor>) -> Vec<FamilyDescriptor> {
    match family {
        Some(f) => vec![f.clone()],
        None => defaults,
    }
}

fn gamma(a: f64) -> FamilyDescriptor {
    FamilyDescriptor::gamma(a).expect("valid built-in hyperparameter")
}

fn gaussian(b: f64) -> FamilyDescriptor {
    FamilyDescriptor::gaussian_scalar(b).expect("valid built-in hyperparameter")
}

fn inverse_gaussian(k: f64) -> FamilyDescriptor {
    FamilyDescriptor::inverse_gaussian(k).expect("valid built-in hyperparameter")
}

fn poisson_exp(k: f64) -> FamilyDescriptor {
    FamilyDescriptor::poisson_exponential(k).expect("valid built-in hyperparameter")
}

/// Ten observations spanning the family's support: log-spaced on (0, ∞),
/// evenly spaced on ℝ^d (coordinates shifted against each other).
fn observation_grid(fam: &FamilyDescriptor, k: usize) -> Vec<DVector<f64>> {
    let d = fam.dimension();
    (0..k)
        .map(|i| {
            if fam.is_half_line() {
                let t = i as f64 / (k - 1) as f64;
                DVector::from_element(1, 10f64.powf(-1.0 + 2.0 * t))
            } else {
                DVector::from_fn(d, |c, _| -3.0 + 6.0 * ((i + 3 * c) % k) as f64 / (k - 1) as f64)
            }
        })
        .collect()
}

fn random_natural(fam: &FamilyDescriptor, rng: &mut RngStream) -> NaturalParam {
    if fam.is_half_line() {
        NaturalParam::scalar(-(3.0 * rng.uniform() - 1.5).exp())
    } else {
        NaturalParam::new(DVector::from_fn(fam.dimension(), |_, _| 4.0 * rng.uniform() - 2.0))
    }
}

// ---------------------------------------------------------------- identities

/// KL(P_θ1 ‖ P_θ2) by integrating p_θ1 ln(p_θ1/p_θ2) over the support.
pub fn kl_by_quadrature(fam: &FamilyDescriptor, theta1: &NaturalParam, theta2: &NaturalParam, tol: f64) -> Result<f64> {
    let term = |x: &DVector<f64>| -> Result<f64> {
        let l1 = fam.log_density(theta1, x)?;
        let l2 = fam.log_density(theta2, x)?;
        let p = l1.exp();
        Ok(if p == 0.0 { 0.0 } else { p * (l1 - l2) })
    };
    let cfg = QuadConfig {
        abs_tol: tol,
        rel_tol: 0.0,
        ..QuadConfig::default()
    };
    match fam.kind() {
        FamilyKind::GaussianLocation(c) => {
            let mean = fam.mean_from_natural(theta1)?.mu;
            let domains: Vec<Domain> = (0..c.dim())
                .map(|j| Domain::Real {
                    center: mean[j],
                    scale: c.matrix()[(j, j)].sqrt(),
                })
                .collect();
            Ok(integrate_box(|z| term(&DVector::from_column_slice(z)), &domains, &cfg)?.value)
        }
        _ => {
            let mean = fam.mean_from_natural(theta1)?.value();
            let positive = |x: f64| if x > 0.0 { term(&DVector::from_element(1, x)) } else { Ok(0.0) };
            let cont = integrate_with(positive, Domain::UpperHalf { lo: 0.0, scale: mean }, &cfg)?.value;
            let atom = if matches!(fam.kind(), FamilyKind::PoissonExponentialShape { .. }) {
                term(&DVector::zeros(1))?
            } else {
                0.0
            };
            Ok(cont + atom)
        }
    }
}

fn identities_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let fams = families_or(family, vec![gamma(1.5), gaussian(2.0), inverse_gaussian(2.0), poisson_exp(2.0)]);
    for (fi, fam) in fams.iter().enumerate() {
        check(out, format!("identities/kl-bregman/{}", label(fam)), Comparison::AtMost, 1e-8, || {
            let mut rng = rng_stream(cfg.seed, 100 + fi as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let t1 = random_natural(fam, &mut rng);
                let t2 = random_natural(fam, &mut rng);
                let kl = kl_by_quadrature(fam, &t1, &t2, 1e-12)?;
                worst = worst.max((kl - fam.bregman(&t2, &t1)?).abs());
            }
            Ok((worst, "10 random parameter pairs; |quadrature KL − D_A| absolute".into()))
        });
        check(out, format!("identities/robustness/{}", label(fam)), Comparison::AtMost, 1e-10, || {
            let mut rng = rng_stream(cfg.seed, 200 + fi as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let theta = random_natural(fam, &mut rng);
                let x = fam.sample(&random_natural(fam, &mut rng), &mut rng)?;
                if fam.is_half_line() && x[0] == 0.0 {
                    continue;
                }
                let hat = fam.mle(&MeanParam::new(x.clone()))?;
                let ratio = (fam.log_density(&theta, &x)? - fam.log_density(&hat, &x)?).exp();
                worst = worst.max((ratio - fam.robustness_ratio(&theta, &MeanParam::new(x))?).abs());
            }
            Ok((worst, "50 random (θ, x); |p_θ(x)/p_θ̂(x)(x) − exp(−D_A(θ, θ̂))| absolute".into()))
        });
    }
}

// ---------------------------------------------------------------- lemma 1

/// The Lemma 1 integral in closed form for the Gamma family:
/// √α e^{nα} Γ(nα) / (nα)^{nα}, which is Γ(n)eⁿ/nⁿ at α = 1.
pub fn gamma_lemma1_constant(alpha: f64, n: usize) -> Result<f64> {
    let a = n as f64 * alpha;
    Ok((0.5 * alpha.ln() + a + log_gamma(a)? - a * a.ln()).exp())
}

fn lemma1_sequences(fam: &FamilyDescriptor, n: usize) -> Result<Vec<ObservationBatch>> {
    let grid = observation_grid(fam, 10);
    let is_pe = matches!(fam.kind(), FamilyKind::PoissonExponentialShape { .. });
    (0..10)
        .map(|k| {
            let pts: Vec<DVector<f64>> = (0..n)
                .map(|i| {
                    // odd Poisson-exponential sequences start on the atom
                    if is_pe && k % 2 == 1 && i == 0 {
                        DVector::zeros(1)
                    } else {
                        grid[(k + 3 * i) % 10].clone()
                    }
                })
                .collect();
            ObservationBatch::from_points(&pts)
        })
        .collect()
}

fn lemma1_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let fams = families_or(family, vec![gamma(1.0), gamma(2.0), gaussian(1.0), poisson_exp(2.0)]);
    for fam in &fams {
        for n in [2usize, 3] {
            let mut median = f64::NAN;
            check(out, format!("lemma1/spread/{}/n={n}", label(fam)), Comparison::AtMost, 1e-6, || {
                let seqs = lemma1_sequences(fam, n)?;
                let r = lemma1_constancy(fam, n, &seqs, 1.0, cfg.tol)?;
                median = r.median;
                Ok((r.relative_spread, format!("10 sequences; relative spread of the integral, median {:.10}", r.median)))
            });
            if let FamilyKind::GammaShape { alpha } = fam.kind() {
                check(out, format!("lemma1/closed-form/{}/n={n}", label(fam)), Comparison::AtMost, 1e-7, || {
                    let exact = gamma_lemma1_constant(*alpha, n)?;
                    Ok(((median - exact).abs(), format!("median {median:.10} vs closed form {exact:.10}")))
                });
            }
        }
    }
}

// ---------------------------------------------------------------- equivalence

fn equivalence_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let pcfg = PredictionConfig {
        tol: cfg.tol,
        seed: cfg.seed,
        ..PredictionConfig::default()
    };
    if family.is_none() {
        check(out, "equivalence/spot/gamma(alpha=1)/x1=x2=1".into(), Comparison::AtMost, 1e-9, || {
            let q = PredictiveQuery::scalar(&[1.0], &[1.0])?;
            let v = cnml_predictive(&gamma(1.0), &q, &pcfg)?.log_density.exp();
            Ok(((v - 0.25).abs(), format!("CNML density {v:.12} vs 0.25")))
        });
    }
    let fams = families_or(family, vec![gamma(1.0), gaussian(1.0), poisson_exp(2.0)]);
    for fam in &fams {
        for m in [1usize, 2] {
            check(out, format!("equivalence/{}/m={m}", label(fam)), Comparison::AtMost, 1e-6, || {
                let grid = observation_grid(fam, 10);
                let is_pe = matches!(fam.kind(), FamilyKind::PoissonExponentialShape { .. });
                let prefixes: Vec<ObservationBatch> = (0..10)
                    .map(|k| {
                        let pts: Vec<DVector<f64>> = (0..m)
                            .map(|i| if is_pe && i == 1 && k % 2 == 0 { DVector::zeros(1) } else { grid[(k + 7 * i) % 10].clone() })
                            .collect();
                        ObservationBatch::from_points(&pts)
                    })
                    .collect::<Result<_>>()?;
                let futures: Vec<Vec<DVector<f64>>> = (0..10)
                    .map(|k| {
                        let y = if is_pe && k == 0 { DVector::zeros(1) } else { grid[(k * 3 + 1) % 10].clone() * 1.3 };
                        vec![y]
                    })
                    .collect();
                let r = equivalence_check(fam, m, m + 1, &prefixes, &futures, &pcfg)?;
                if let Some(first) = r.failures.first() {
                    return Err(Error::NonConvergence {
                        what: format!("{} of {} grid points ({first})", r.failures.len(), r.failures.len() + r.evaluated),
                        estimate: f64::NAN,
                        error: f64::NAN,
                        evaluations: r.evaluated,
                    });
                }
                Ok((r.max_abs_log_diff, format!("10×10 (prefix, future) grid, n = m + 1; worst at {:?}", r.worst)))
            });
        }
    }
}

// ---------------------------------------------------------------- saddle point

fn saddlepoint_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let fams = families_or(family, vec![gamma(1.0), gaussian(1.0), poisson_exp(2.0), inverse_gaussian(2.0)]);
    for fam in &fams {
        check(out, format!("saddlepoint/{}", label(fam)), Comparison::AtMost, 1e-6, || {
            let means: Vec<DVector<f64>> = if fam.is_half_line() {
                [0.5, 1.0, 4.0].iter().map(|&x| DVector::from_element(1, x)).collect()
            } else {
                [-1.0, 0.5, 3.0].iter().map(|&x| DVector::from_element(fam.dimension(), x)).collect()
            };
            let mut worst: f64 = 0.0;
            let mut points = 0;
            for n in [1usize, 3, 10] {
                for xbar in &means {
                    let hat = fam.mle(&MeanParam::new(xbar.clone()))?;
                    let grid = theta_grid(fam, n, &hat)?;
                    let r = exactness_report(fam, n, &hat, &grid, cfg.tol)?;
                    worst = worst.max(r.max_relative_deviation);
                    points += r.grid_points;
                }
            }
            Ok((worst, format!("3×3 (n ∈ {{1, 3, 10}}, x̄) grid, {points} θ points; max relative deviation from the exact posterior")))
        });
    }
}

/// Points around θ̂ at up to three posterior standard deviations, in the
/// parametrization the exactness report compares on.
fn theta_grid(fam: &FamilyDescriptor, n: usize, hat: &NaturalParam) -> Result<Vec<NaturalParam>> {
    let (checked, center) = match fam.kind() {
        FamilyKind::InverseGaussianShape { kappa } => {
            let mean = fam.mean_from_natural(hat)?.value();
            (poisson_exp(*kappa), NaturalParam::scalar(-mean))
        }
        _ => (fam.clone(), hat.clone()),
    };
    let cov = checked.covariance(&center)?;
    let mut grid = Vec::new();
    for k in -3..=3 {
        let step = k as f64 / (n as f64).sqrt();
        let theta = if checked.is_half_line() {
            // multiplicative steps stay inside Θ
            let sd = 1.0 / (n as f64 * cov[(0, 0)]).sqrt();
            NaturalParam::scalar(center.value() * (step * sd / -center.value()).exp())
        } else {
            let sd = DVector::from_fn(checked.dimension(), |j, _| 1.0 / cov[(j, j)].sqrt());
            NaturalParam::new(&center.theta + sd * step)
        };
        grid.push(theta);
    }
    Ok(grid)
}

// ---------------------------------------------------------------- normalization

fn total_mass(fam: &FamilyDescriptor, theta: &NaturalParam) -> Result<f64> {
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 0.0,
        ..QuadConfig::default()
    };
    let mean = fam.mean_from_natural(theta)?.mu;
    match fam.kind() {
        FamilyKind::GaussianLocation(c) => {
            let domains: Vec<Domain> = (0..c.dim())
                .map(|j| Domain::Real {
                    center: mean[j],
                    scale: c.matrix()[(j, j)].sqrt(),
                })
                .collect();
            Ok(integrate_box(|z| Ok(fam.log_density(theta, &DVector::from_column_slice(z))?.exp()), &domains, &cfg)?.value)
        }
        _ => {
            let dens = |x: f64| if x > 0.0 { Ok(fam.log_density(theta, &DVector::from_element(1, x))?.exp()) } else { Ok(0.0) };
            let cont = integrate_with(dens, Domain::UpperHalf { lo: 0.0, scale: mean[0] }, &cfg)?.value;
            let atom = match fam.kind() {
                FamilyKind::PoissonExponentialShape { .. } => fam.log_density(theta, &DVector::zeros(1))?.exp(),
                _ => 0.0,
            };
            Ok(cont + atom)
        }
    }
}

/// Histogram of compound-Poisson draws against bin masses of the series
/// density. Returns (max |z| over bins, |empirical P(Y=0) − e^{−κ/(2β)}|).
pub fn poisson_exp_monte_carlo(kappa: f64, rate: f64, samples: usize, bins: usize, seed: u64) -> Result<(f64, f64)> {
    let law = PoissonExponentialDist::new(kappa, rate)?;
    let fam = FamilyDescriptor::poisson_exponential(kappa)?;
    let theta = NaturalParam::scalar(-rate);
    let mean = law.mean();
    let sd = (kappa / rate.powi(3)).sqrt();
    let top = mean + 4.0 * sd;
    let width = top / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut zeros = 0u64;
    let mut rng = rng_stream(seed, 0);
    for _ in 0..samples {
        let y = fam.sample(&theta, &mut rng)?[0];
        if y == 0.0 {
            zeros += 1;
        } else if y < top {
            counts[((y / width) as usize).min(bins - 1)] += 1;
        }
    }
    let cfg = QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        ..QuadConfig::default()
    };
    let nf = samples as f64;
    let mut worst: f64 = 0.0;
    for (b, &count) in counts.iter().enumerate() {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let p = integrate_with(|x| if x > 0.0 { Ok(law.ln_continuous_density(x)?.exp()) } else { Ok(0.0) }, Domain::finite(lo, hi), &cfg)?.value;
        let se = (nf * p * (1.0 - p)).sqrt();
        worst = worst.max((count as f64 - nf * p).abs() / se);
    }
    Ok((worst, (zeros as f64 / nf - law.atom_weight()).abs()))
}

fn normalization_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let fams: Vec<(FamilyDescriptor, Vec<NaturalParam>)> = match family {
        None => {
            let rates: Vec<NaturalParam> = [0.25, 1.0, 4.0, 16.0].iter().map(|&b| NaturalParam::scalar(-b)).collect();
            [0.25, 1.0, 4.0, 16.0].iter().map(|&k| (poisson_exp(k), rates.clone())).collect()
        }
        Some(f) => {
            let thetas = if f.is_half_line() {
                [0.25, 1.0, 4.0, 16.0].iter().map(|&b| NaturalParam::scalar(-b)).collect()
            } else {
                [-2.0, -0.5, 0.5, 2.0].iter().map(|&t| NaturalParam::new(DVector::from_element(f.dimension(), t))).collect()
            };
            vec![(f.clone(), thetas)]
        }
    };
    for (fam, thetas) in &fams {
        check(out, format!("normalization/total-mass/{}", label(fam)), Comparison::AtMost, 1e-9, || {
            let mut worst: f64 = 0.0;
            for theta in thetas {
                worst = worst.max((total_mass(fam, theta)? - 1.0).abs());
            }
            Ok((worst, format!("θ ∈ {:?}; |atom + ∫ density − 1|", thetas.iter().map(|t| t.value()).collect::<Vec<_>>())))
        });
    }
    let pe_kappa = match family.map(|f| f.kind()) {
        None => Some(2.0),
        Some(FamilyKind::PoissonExponentialShape { kappa }) => Some(*kappa),
        Some(_) => None,
    };
    if let Some(kappa) = pe_kappa {
        let mut atom_gap = f64::NAN;
        let samples = cfg.mc_samples;
        check(out, format!("normalization/monte-carlo-bins/poisson-exp(kappa={kappa})"), Comparison::AtMost, 3.0, || {
            let (z, gap) = poisson_exp_monte_carlo(kappa, 1.0, samples, 20, cfg.seed)?;
            atom_gap = gap;
            Ok((z, format!("β = 1, {samples} draws, 20 equal bins on (0, mean + 4 sd); max |count − expected| / standard error")))
        });
        check(out, format!("normalization/monte-carlo-atom/poisson-exp(kappa={kappa})"), Comparison::AtMost, 0.002, || {
            Ok((atom_gap, format!("β = 1, {samples} draws; |fraction of zeros − e^(−κ/(2β))|")))
        });
    }
}

// ---------------------------------------------------------------- coverage

fn coverage_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let want = |kind: fn(&FamilyKind) -> bool| family.is_none_or(|f| kind(f.kind()));
    let trials = cfg.trials;
    let level = 0.9;

    if want(|k| matches!(k, FamilyKind::GammaShape { .. })) {
        let alpha = family.and_then(|f| f.shape()).unwrap_or(1.0);
        let fam = gamma(alpha);
        check(out, format!("coverage/credible-equals-confidence/{}", label(&fam)), Comparison::AtMost, 0.0, || {
            let mut rng = rng_stream(cfg.seed, 300);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let m = 1 + (9.0 * rng.uniform()) as usize;
                let xs: Vec<f64> = (0..m).map(|_| 0.1 + 5.0 * rng.uniform()).collect();
                let lv = 0.05 + 0.9 * rng.uniform();
                let b = ObservationBatch::from_scalars(&xs)?;
                let c = gamma_credible(alpha, &b, lv)?;
                let f = gamma_confidence(alpha, &b, lv)?;
                worst = worst.max((c.upper - f.upper).abs());
            }
            Ok((worst, "20 random (m, data, level); |credible − confidence| upper endpoints".into()))
        });
        check(out, format!("coverage/credible/{}/beta=2/m=5", label(&fam)), Comparison::AtMost, 0.003, || {
            let r = coverage_simulation(&fam, IntervalOp::GammaCredible, &NaturalParam::scalar(-2.0), 5, level, trials, cfg.seed)?;
            Ok(((r.empirical_coverage - level).abs(), format!("{trials} trials, level {level}, coverage {}", r.empirical_coverage)))
        });
    }

    if want(|k| matches!(k, FamilyKind::GaussianLocation(_))) {
        let fams = match family {
            Some(f) => vec![f.clone()],
            None => vec![gaussian(1.0), FamilyDescriptor::gaussian(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5])).expect("valid")],
        };
        for fam in &fams {
            let d = fam.dimension();
            check(out, format!("coverage/ball-mass/{}", label(fam)), Comparison::AtMost, 1e-8, || {
                let pts: Vec<DVector<f64>> = (0..3).map(|i| DVector::from_fn(d, |j, _| 0.4 * i as f64 - 0.3 * j as f64)).collect();
                let ball = gaussian_divergence_ball(fam, &ObservationBatch::from_points(&pts)?, level)?;
                let mass = ball_posterior_mass_by_quadrature(fam, &ball, 1e-12)?;
                Ok(((mass - level).abs(), format!("n = 3, level {level}; |posterior mass by quadrature − level|")))
            });
            check(out, format!("coverage/ball/{}/m=4", label(fam)), Comparison::AtMost, 0.004, || {
                let truth = NaturalParam::new(DVector::from_element(d, 0.5));
                let r = coverage_simulation(fam, IntervalOp::GaussianBall, &truth, 4, level, trials, cfg.seed)?;
                Ok(((r.empirical_coverage - level).abs(), format!("{trials} trials, level {level}, coverage {}", r.empirical_coverage)))
            });
        }
    }

    if want(|k| matches!(k, FamilyKind::PoissonExponentialShape { .. })) {
        let kappa = family.and_then(|f| f.shape()).unwrap_or(2.0);
        let fam = poisson_exp(kappa);
        check(out, format!("coverage/endpoints-differ/{}/m=1/xbar=2", label(&fam)), Comparison::Exceeds, 100.0 * cfg.tol, || {
            let b = ObservationBatch::from_scalars(&[2.0])?;
            let cred = poisson_exp_credible(kappa, &b, level)?.upper;
            let conf = poisson_exp_confidence(kappa, &b, level)?.upper;
            Ok(((cred - conf).abs(), format!("credible upper {cred:.10}, confidence upper {conf:.10}")))
        });
        let sigma = (level * (1.0 - level) / trials as f64).sqrt();
        check(out, format!("coverage/credible-miscoverage/{}/beta=3/m=1", label(&fam)), Comparison::Exceeds, 3.0 * sigma, || {
            let r = coverage_simulation(&fam, IntervalOp::PoissonExpCredible, &NaturalParam::scalar(-3.0), 1, level, trials, cfg.seed)?;
            Ok((
                (r.empirical_coverage - level).abs(),
                format!("{trials} trials ({} all-zero), level {level}, coverage {}; threshold is 3σ", r.degenerate, r.empirical_coverage),
            ))
        });
        check(out, format!("coverage/confidence/{}/beta=1/m=3", label(&fam)), Comparison::AtMost, 0.01, || {
            let r = coverage_simulation(&fam, IntervalOp::PoissonExpConfidence, &NaturalParam::scalar(-1.0), 3, level, trials, cfg.seed)?;
            Ok((
                (r.empirical_coverage - level).abs(),
                format!("{trials} trials ({} all-zero), level {level}, coverage {}", r.degenerate, r.empirical_coverage),
            ))
        });
    }
}

// ---------------------------------------------------------------- hygiene

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn hygiene_suite(cfg: &VerifyConfig, family: Option<&FamilyDescriptor>, out: &mut Vec<VerificationReport>) {
    let fams = families_or(family, vec![gamma(1.5), gaussian(2.0), inverse_gaussian(2.0), poisson_exp(2.0)]);
    for (fi, fam) in fams.iter().enumerate() {
        let thetas: Vec<NaturalParam> = {
            let mut rng = rng_stream(cfg.seed, 400 + fi as u64);
            (0..10).map(|_| random_natural(fam, &mut rng)).collect()
        };
        check(out, format!("hygiene/gradient/{}", label(fam)), Comparison::AtMost, 1e-6, || {
            let mut worst: f64 = 0.0;
            for theta in &thetas {
                let g = fam.mean_from_natural(theta)?.mu;
                for j in 0..fam.dimension() {
                    let h = 1e-5 * theta.theta[j].abs().max(1.0);
                    let (mut up, mut dn) = (theta.clone(), theta.clone());
                    up.theta[j] += h;
                    dn.theta[j] -= h;
                    let fd = (fam.cumulant(&up)? - fam.cumulant(&dn)?) / (2.0 * h);
                    worst = worst.max(relative_gap(fd, g[j]));
                }
            }
            Ok((worst, "10 random θ; central differences of A against ∇A, relative".into()))
        });
        check(out, format!("hygiene/hessian/{}", label(fam)), Comparison::AtMost, 1e-5, || {
            let mut worst: f64 = 0.0;
            for theta in &thetas {
                let hess = fam.covariance(theta)?;
                for j in 0..fam.dimension() {
                    let h = 1e-5 * theta.theta[j].abs().max(1.0);
                    let (mut up, mut dn) = (theta.clone(), theta.clone());
                    up.theta[j] += h;
                    dn.theta[j] -= h;
                    let col = (fam.mean_from_natural(&up)?.mu - fam.mean_from_natural(&dn)?.mu) / (2.0 * h);
                    for i in 0..fam.dimension() {
                        worst = worst.max(relative_gap(col[i], hess[(i, j)]));
                    }
                }
            }
            Ok((worst, "10 random θ; central differences of ∇A against the Hessian, relative".into()))
        });
        check(out, format!("hygiene/fenchel-young/{}", label(fam)), Comparison::AtMost, 1e-10, || {
            let mut worst: f64 = 0.0;
            for theta in &thetas {
                let mu = fam.mean_from_natural(theta)?;
                let lhs = fam.cumulant(theta)? + fam.convex_conjugate(&mu)?;
                let rhs = theta.theta.dot(&mu.mu);
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
            Ok((worst, "10 random θ; |A(θ) + A*(∇A(θ)) − θ·∇A(θ)|, relative to max(1, |θ·∇A|)".into()))
        });
    }
    if family.is_none() {
        check(out, "hygiene/quantile-round-trips".into(), Comparison::AtMost, 1e-9, || {
            let mut worst: f64 = 0.0;
            for &p in &[1e-6, 0.01, 0.1, 0.5, 0.9, 0.99, 1.0 - 1e-6] {
                for &a in &[0.5, 1.0, 3.0, 25.0] {
                    worst = worst.max((reg_gamma_lower(a, inv_reg_gamma_lower(a, p)?)? - p).abs() / p);
                }
                worst = worst.max((std_normal_cdf(std_normal_quantile(p)?) - p).abs() / p);
                for &(m, k) in &[(0.7, 2.0), (1.0, 0.3), (3.0, 40.0)] {
                    let ig = InverseGaussianDist::new(m, k)?;
                    worst = worst.max((ig.cdf(ig.quantile(p)?) - p).abs() / p);
                }
            }
            Ok((worst, "levels 1e-6 … 1 − 1e-6; incomplete gamma, normal and inverse Gaussian; |F(F⁻¹(p)) − p| / p".into()))
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> VerifyConfig {
        VerifyConfig {
            trials: 2_000,
            mc_samples: 20_000,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn gamma_lemma1_closed_form() {
        assert!((gamma_lemma1_constant(1.0, 2).unwrap() - 1.8472640247326626).abs() < 1e-12);
        // Γ(3)e³/27
        assert!((gamma_lemma1_constant(1.0, 3).unwrap() - 2.0 * 3f64.exp() / 27.0).abs() < 1e-12);
    }

    #[test]
    fn kl_quadrature_matches_exponential_closed_form() {
        // KL(Exp(1) ‖ Exp(2)) = ln(1/2) + 2 − 1
        let g = FamilyDescriptor::gamma(1.0).unwrap();
        let kl = kl_by_quadrature(&g, &NaturalParam::scalar(-1.0), &NaturalParam::scalar(-2.0), 1e-13).unwrap();
        assert!((kl - (1.0 - 2f64.ln())).abs() < 1e-11);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn fast_suites_pass() {
        for suite in [Suite::Identities, Suite::Lemma1, Suite::Saddlepoint, Suite::Hygiene] {
            for r in run_suite(suite, &fast(), None).unwrap() {
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn family_filter_restricts_checks() {
        let ig = FamilyDescriptor::inverse_gaussian(2.0).unwrap();
        let reports = run_suite(Suite::Saddlepoint, &fast(), Some(&ig)).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].passed, "{:?}", reports[0]);
        let cov = run_suite(Suite::Coverage, &fast(), Some(&ig)).unwrap();
        assert!(cov.is_empty());
    }

    #[test]
    fn failed_check_records_error() {
        let mut out = Vec::new();
        check(&mut out, "x".into(), Comparison::AtMost, 1.0, || Err(Error::NonIntegrable("diverges".into())));
        assert!(!out[0].passed && out[0].numerical_failure && out[0].statistic.is_nan());
        let mut out = Vec::new();
        check(&mut out, "y".into(), Comparison::Exceeds, 1.0, || Ok((2.0, String::new())));
        assert!(out[0].passed);
    }
}
