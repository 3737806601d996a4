//! Predictive densities for a future block x_{m+1}^n given a prefix x^m:
//! the Jeffreys posterior predictive, the conditional normalized maximum
//! likelihood (CNML) predictor, and the plug-in baseline. Also regret
//! accounting and the two numerical checks built on them.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{gamma_posterior, gaussian_posterior, poisson_exponential_posterior, GammaPosterior, GaussianPosterior, InverseGaussianDist};
use crate::family::{FamilyDescriptor, FamilyKind, MeanParam, NaturalParam, ObservationBatch};
use crate::numerics::quadrature::{integrate_box, Domain, QuadConfig};
use crate::numerics::rng_stream;
use crate::theta_quad::{log_integral_1d, log_integral_gaussian, LogIntegral};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictor {
    Jeffreys,
    Cnml,
    PlugIn,
}

impl Predictor {
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Jeffreys => "jeffreys",
            Predictor::Cnml => "cnml",
            Predictor::PlugIn => "plug-in",
        }
    }
}

impl std::str::FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jeffreys" | "bayes" => Ok(Predictor::Jeffreys),
            "cnml" => Ok(Predictor::Cnml),
            "plugin" | "plug-in" => Ok(Predictor::PlugIn),
            other => Err(Error::invalid(format!("unknown predictor '{other}' (expected jeffreys, cnml or plugin)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveQuery {
    pub prefix: ObservationBatch,
    pub future: Vec<DVector<f64>>,
}

impl PredictiveQuery {
    pub fn new(prefix: ObservationBatch, future: Vec<DVector<f64>>) -> Result<Self> {
        if future.is_empty() {
            return Err(Error::invalid("prediction needs at least one future observation"));
        }
        if future.iter().any(|y| y.len() != prefix.dim()) {
            return Err(Error::invalid("future observations must match the prefix dimension"));
        }
        Ok(PredictiveQuery { prefix, future })
    }

    pub fn scalar(prefix: &[f64], future: &[f64]) -> Result<Self> {
        Self::new(
            ObservationBatch::from_scalars(prefix)?,
            future.iter().map(|&v| DVector::from_element(1, v)).collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.prefix.n()
    }

    pub fn n(&self) -> usize {
        self.prefix.n() + self.future.len()
    }

    fn validate(&self, fam: &FamilyDescriptor) -> Result<()> {
        self.prefix.check_against(fam)?;
        fam.check_mean(&self.prefix.mean_param())?;
        for y in &self.future {
            fam.check_support(y)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictiveValue {
    pub log_density: f64,
    pub method: Predictor,
    /// Estimated relative error of the numerically computed normalizer
    /// (a Monte Carlo standard error for long CNML horizons).
    pub normalizer_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionConfig {
    /// Relative quadrature tolerance.
    pub tol: f64,
    /// Future dimension (horizon × d) above which the CNML denominator is
    /// estimated by importance sampling instead of product quadrature.
    pub max_quadrature_dim: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            tol: 1e-10,
            max_quadrature_dim: 3,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

pub fn predict(fam: &FamilyDescriptor, method: Predictor, query: &PredictiveQuery, cfg: &PredictionConfig) -> Result<PredictiveValue> {
    match method {
        Predictor::Jeffreys => jeffreys_predictive(fam, query, cfg),
        Predictor::Cnml => cnml_predictive(fam, query, cfg),
        Predictor::PlugIn => plug_in_predictive(fam, query),
    }
}

/// Sum statistic and total log-carrier of a block of observations.
fn block_summary(fam: &FamilyDescriptor, block: &[DVector<f64>]) -> Result<(DVector<f64>, f64)> {
    let mut sum = DVector::zeros(fam.dimension());
    let mut carrier = 0.0;
    for y in block {
        sum += y;
        carrier += fam.log_carrier(y)?;
    }
    Ok((sum, carrier))
}

enum Posterior {
    Gamma(GammaPosterior),
    InverseGaussian(InverseGaussianDist),
    Normal(GaussianPosterior),
    /// Jeffreys kernel m(θ·x̄ − A(θ)) + ln J(θ) with its numerical log-normalizer.
    Numeric { m: f64, xbar: DVector<f64>, log_z: f64 },
}

impl Posterior {
    fn build(fam: &FamilyDescriptor, prefix: &ObservationBatch, tol: f64) -> Result<(Self, f64)> {
        Ok(match fam.kind() {
            FamilyKind::GammaShape { alpha } => (Posterior::Gamma(gamma_posterior(*alpha, prefix)?), 0.0),
            FamilyKind::PoissonExponentialShape { kappa } => (Posterior::InverseGaussian(poisson_exponential_posterior(*kappa, prefix)?), 0.0),
            FamilyKind::GaussianLocation(_) => (Posterior::Normal(gaussian_posterior(fam, prefix)?), 0.0),
            FamilyKind::InverseGaussianShape { .. } => {
                let m = prefix.n() as f64;
                let xbar = prefix.xbar().clone();
                let hat = fam.mle(&prefix.mean_param())?;
                let sd = 1.0 / (m * fam.covariance(&hat)?[(0, 0)]).sqrt();
                let kernel = |t: f64| -> Result<f64> {
                    let th = NaturalParam::scalar(t);
                    Ok(m * (t * xbar[0] - fam.cumulant(&th)?) + fam.ln_jeffreys(&th)?)
                };
                let z = log_integral_1d(fam, hat.value(), sd, kernel, tol).map_err(improper)?;
                (Posterior::Numeric { m, xbar, log_z: z.log_value }, z.rel_error)
            }
        })
    }

    fn ln_density(&self, fam: &FamilyDescriptor, theta: &NaturalParam) -> Result<f64> {
        match self {
            Posterior::Gamma(g) => g.ln_density(-theta.value()),
            Posterior::InverseGaussian(ig) => ig.ln_density(-theta.value()),
            Posterior::Normal(g) => Ok(g.ln_density(&theta.theta)),
            Posterior::Numeric { m, xbar, log_z } => Ok(m * (theta.theta.dot(xbar) - fam.cumulant(theta)?) + fam.ln_jeffreys(theta)? - log_z),
        }
    }
}

fn improper(e: Error) -> Error {
    match e {
        Error::NonIntegrable(msg) => Error::ImproperPosterior(msg),
        other => other,
    }
}

/// ln ∫ exp(log_f(θ)) dθ over Θ, with the window placed at the MLE of `xbar`
/// for `n` observations.
fn integrate_over_theta<F>(fam: &FamilyDescriptor, xbar: &DVector<f64>, n: f64, log_f: F, tol: f64) -> Result<LogIntegral>
where
    F: Fn(&NaturalParam) -> Result<f64>,
{
    let hat = fam.mle(&MeanParam::new(xbar.clone()))?;
    match fam.kind() {
        FamilyKind::GaussianLocation(c) => {
            let spread = c
                .inverse()
                .clone()
                .cholesky()
                .map(|ch| ch.l() / n.sqrt())
                .ok_or_else(|| Error::invalid("covariance lost definiteness"))?;
            log_integral_gaussian(&hat.theta, &spread, |t: &DVector<f64>| log_f(&NaturalParam::new(t.clone())), tol)
        }
        _ => {
            let sd = 1.0 / (n * fam.covariance(&hat)?[(0, 0)]).sqrt();
            log_integral_1d(fam, hat.value(), sd, |t| log_f(&NaturalParam::scalar(t)), tol)
        }
    }
}

/// ∫ p_θ(future) π(θ | prefix) dθ with the Jeffreys posterior.
pub fn jeffreys_predictive(fam: &FamilyDescriptor, query: &PredictiveQuery, cfg: &PredictionConfig) -> Result<PredictiveValue> {
    query.validate(fam)?;
    let (posterior, post_err) = Posterior::build(fam, &query.prefix, cfg.tol)?;
    let (sum, carrier) = block_summary(fam, &query.future)?;
    let h = query.future.len() as f64;
    let log_f = |th: &NaturalParam| -> Result<f64> { Ok(th.theta.dot(&sum) - h * fam.cumulant(th)? + posterior.ln_density(fam, th)?) };
    let center = query.prefix.extended_mean(&query.future);
    let r = integrate_over_theta(fam, &center, query.n() as f64, log_f, cfg.tol)?;
    Ok(PredictiveValue {
        log_density: r.log_value + carrier,
        method: Predictor::Jeffreys,
        normalizer_error: r.rel_error + post_err,
    })
}

/// ln p_{θ̂(x^n)}(x^n) with the prefix carriers dropped (they cancel in CNML):
/// n A*(x̄_n) plus the carriers of the future block.
fn cnml_log_numerator(fam: &FamilyDescriptor, prefix: &ObservationBatch, future: &[DVector<f64>]) -> Result<f64> {
    let n = (prefix.n() + future.len()) as f64;
    let xbar = prefix.extended_mean(future);
    let mut carrier = 0.0;
    for y in future {
        carrier += fam.log_carrier(y)?;
    }
    Ok(n * fam.convex_conjugate(&MeanParam::new(xbar))? + carrier)
}

fn coordinate_domain(fam: &FamilyDescriptor, prefix: &ObservationBatch, j: usize) -> Domain {
    match fam.gaussian_cov() {
        Some(c) => Domain::Real {
            center: prefix.xbar()[j],
            scale: (2.0 * c.matrix()[(j, j)]).sqrt(),
        },
        // half-line coordinates are integrated in v = ln y
        None => Domain::Real {
            center: prefix.xbar_scalar().ln(),
            scale: 1.0,
        },
    }
}

fn log_sum_exp(terms: &[(f64, f64)]) -> (f64, f64) {
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut err = 0.0;
    for &(lv, rel) in terms {
        let w = (lv - top).exp();
        sum += w;
        err += w * rel;
    }
    (top + sum.ln(), err / sum)
}

/// ln ∫ p_{θ̂(x^m y)}(x^m y) dλ(y) over the future block, prefix carriers dropped.
/// Returns the log-denominator and its relative error.
pub fn cnml_log_denominator(fam: &FamilyDescriptor, prefix: &ObservationBatch, horizon: usize, cfg: &PredictionConfig) -> Result<(f64, f64)> {
    if horizon == 0 {
        return Err(Error::invalid("CNML horizon must be at least 1"));
    }
    fam.check_mean(&prefix.mean_param())?;
    let d = fam.dimension();
    if horizon * d > cfg.max_quadrature_dim {
        return cnml_log_denominator_mc(fam, prefix, horizon, cfg);
    }
    let has_atom = matches!(fam.kind(), FamilyKind::PoissonExponentialShape { .. });
    let masks: Vec<u32> = if has_atom { (0..(1u32 << horizon)).collect() } else { vec![(1u32 << horizon) - 1] };
    let mut terms = Vec::with_capacity(masks.len());
    for mask in masks {
        // bit j set: future point j is continuous; clear: it sits on the atom at 0
        let free: Vec<usize> = (0..horizon).filter(|j| mask & (1 << j) != 0).collect();
        let half_line = fam.is_half_line();
        let assemble = |z: &[f64]| -> Vec<DVector<f64>> {
            let mut pts = vec![DVector::zeros(d); horizon];
            for (slot, &j) in free.iter().enumerate() {
                for c in 0..d {
                    let v = z[slot * d + c];
                    pts[j][c] = if half_line { v.exp() } else { v };
                }
            }
            pts
        };
        let log_jacobian = |z: &[f64]| -> f64 { if half_line { z.iter().sum() } else { 0.0 } };
        if free.is_empty() {
            terms.push((cnml_log_numerator(fam, prefix, &assemble(&[]))?, 0.0));
            continue;
        }
        let reference: Vec<f64> = (0..free.len() * d)
            .map(|k| if half_line { prefix.xbar()[k % d].ln() } else { prefix.xbar()[k % d] })
            .collect();
        let shift = cnml_log_numerator(fam, prefix, &assemble(&reference))? + log_jacobian(&reference);
        let domains: Vec<Domain> = (0..free.len() * d).map(|k| coordinate_domain(fam, prefix, k % d)).collect();
        let qcfg = QuadConfig {
            abs_tol: 0.0,
            rel_tol: cfg.tol,
            ..QuadConfig::default()
        };
        let integrand = |z: &[f64]| -> Result<f64> {
            if half_line && z.iter().any(|v| !v.exp().is_normal()) {
                // the exponential map under- or overflowed; the mass out there is negligible
                return Ok(0.0);
            }
            Ok((cnml_log_numerator(fam, prefix, &assemble(z))? + log_jacobian(z) - shift).exp())
        };
        let r = integrate_box(integrand, &domains, &qcfg)
            .map_err(|e| match e {
                Error::NonIntegrable(msg) => Error::NonNormalizable(msg),
                other => other,
            })?;
        if !(r.value > 0.0) || !r.value.is_finite() {
            return Err(Error::NonNormalizable(format!("CNML denominator evaluated to {}", r.value)));
        }
        terms.push((shift + r.value.ln(), r.error_estimate / r.value));
    }
    Ok(log_sum_exp(&terms))
}

/// Importance sampling of the CNML denominator with the prefix plug-in law as proposal.
fn cnml_log_denominator_mc(fam: &FamilyDescriptor, prefix: &ObservationBatch, horizon: usize, cfg: &PredictionConfig) -> Result<(f64, f64)> {
    if cfg.mc_samples < 2 {
        return Err(Error::invalid("Monte Carlo CNML needs at least two samples"));
    }
    let hat = fam.mle(&prefix.mean_param())?;
    let mut rng = rng_stream(cfg.seed, 0);
    let mut logs = Vec::with_capacity(cfg.mc_samples);
    for _ in 0..cfg.mc_samples {
        let mut pts = Vec::with_capacity(horizon);
        let mut log_q = 0.0;
        for _ in 0..horizon {
            let y = fam.sample(&hat, &mut rng)?;
            log_q += fam.log_density(&hat, &y)?;
            pts.push(y);
        }
        logs.push(cnml_log_numerator(fam, prefix, &pts)? - log_q);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = logs.len() as f64;
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::NonNormalizable("Monte Carlo CNML denominator is not positive".into()));
    }
    Ok((top + mean.ln(), (var / n).sqrt() / mean))
}

pub fn cnml_predictive(fam: &FamilyDescriptor, query: &PredictiveQuery, cfg: &PredictionConfig) -> Result<PredictiveValue> {
    query.validate(fam)?;
    let num = cnml_log_numerator(fam, &query.prefix, &query.future)?;
    let (den, err) = cnml_log_denominator(fam, &query.prefix, query.future.len(), cfg)?;
    Ok(PredictiveValue {
        log_density: num - den,
        method: Predictor::Cnml,
        normalizer_error: err,
    })
}

/// p_{θ̂(prefix)}(future).
pub fn plug_in_predictive(fam: &FamilyDescriptor, query: &PredictiveQuery) -> Result<PredictiveValue> {
    query.validate(fam)?;
    let hat = fam.mle(&query.prefix.mean_param())?;
    let mut total = 0.0;
    for y in &query.future {
        total += fam.log_density(&hat, y)?;
    }
    Ok(PredictiveValue {
        log_density: total,
        method: Predictor::PlugIn,
        normalizer_error: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegretRecord {
    pub sequence_id: usize,
    pub method: Predictor,
    pub regret: f64,
}

/// −ln p(x_{m+1}^n | x^m) − (−ln p_{θ̂(x^n)}(x^n)) for the full sequence `xs`.
pub fn regret(fam: &FamilyDescriptor, method: Predictor, xs: &[DVector<f64>], m: usize, cfg: &PredictionConfig) -> Result<f64> {
    if m == 0 || m >= xs.len() {
        return Err(Error::invalid(format!("need 1 ≤ m < n, got m = {m}, n = {}", xs.len())));
    }
    let query = PredictiveQuery::new(ObservationBatch::from_points(&xs[..m])?, xs[m..].to_vec())?;
    let pred = predict(fam, method, &query, cfg)?;
    let full = ObservationBatch::from_points(xs)?;
    let hat = fam.mle(&full.mean_param())?;
    let mut best = 0.0;
    for x in xs {
        best += fam.log_density(&hat, x)?;
    }
    Ok(-pred.log_density + best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub n: usize,
    pub values: Vec<f64>,
    pub median: f64,
    /// (max − min) / median over the sequences.
    pub relative_spread: f64,
    pub max_quadrature_error: f64,
}

/// ∫ p_θ(x^n)/p_{θ̂(x^n)}(x^n) · c·J(θ) dθ for each sequence, with J the
/// unnormalized Jeffreys density and c = `prior_scale`.
pub fn lemma1_constancy(fam: &FamilyDescriptor, n: usize, sequences: &[ObservationBatch], prior_scale: f64, tol: f64) -> Result<Lemma1Report> {
    if sequences.is_empty() {
        return Err(Error::invalid("need at least one sequence"));
    }
    if !(prior_scale > 0.0) || !prior_scale.is_finite() {
        return Err(Error::invalid(format!("prior scale must be positive, got {prior_scale}")));
    }
    let mut values = Vec::with_capacity(sequences.len());
    let mut max_err: f64 = 0.0;
    let nf = n as f64;
    for seq in sequences {
        if seq.n() != n {
            return Err(Error::invalid(format!("sequence has {} observations, expected {n}", seq.n())));
        }
        seq.check_against(fam)?;
        let xbar = seq.mean_param();
        let hat = fam.mle(&xbar)?;
        let a_hat = fam.cumulant(&hat)?;
        // likelihood ratio through the sufficient statistic; carriers cancel
        let log_f = |th: &NaturalParam| -> Result<f64> {
            Ok(nf * ((&th.theta - &hat.theta).dot(&xbar.mu) - fam.cumulant(th)? + a_hat) + fam.ln_jeffreys(th)?)
        };
        let r = integrate_over_theta(fam, &xbar.mu, nf, log_f, tol)?;
        max_err = max_err.max(r.rel_error);
        values.push(prior_scale * r.log_value.exp());
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    Ok(Lemma1Report {
        n,
        relative_spread: (sorted[k - 1] - sorted[0]) / median,
        median,
        values,
        max_quadrature_error: max_err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub m: usize,
    pub n: usize,
    pub max_abs_log_diff: f64,
    /// (prefix index, future index) of the largest difference.
    pub worst: Option<(usize, usize)>,
    pub evaluated: usize,
    /// Grid points where one of the predictors failed, with the reason.
    pub failures: Vec<String>,
}

/// max |ln CNML − ln Jeffreys| over every (prefix, future) pair.
pub fn equivalence_check(
    fam: &FamilyDescriptor,
    m: usize,
    n: usize,
    prefixes: &[ObservationBatch],
    futures: &[Vec<DVector<f64>>],
    cfg: &PredictionConfig,
) -> Result<EquivalenceReport> {
    if m == 0 || n <= m {
        return Err(Error::invalid(format!("need 1 ≤ m < n, got m = {m}, n = {n}")));
    }
    if prefixes.iter().any(|p| p.n() != m) || futures.iter().any(|f| f.len() != n - m) {
        return Err(Error::invalid("grid entries do not match the requested m and n"));
    }
    let mut report = EquivalenceReport {
        m,
        n,
        max_abs_log_diff: 0.0,
        worst: None,
        evaluated: 0,
        failures: Vec::new(),
    };
    for (i, prefix) in prefixes.iter().enumerate() {
        for (j, future) in futures.iter().enumerate() {
            let query = PredictiveQuery::new(prefix.clone(), future.clone())?;
            let c = cnml_predictive(fam, &query, cfg);
            let b = jeffreys_predictive(fam, &query, cfg);
            match (c, b) {
                (Ok(c), Ok(b)) => {
                    let diff = (c.log_density - b.log_density).abs();
                    report.evaluated += 1;
                    if diff > report.max_abs_log_diff || report.worst.is_none() {
                        report.max_abs_log_diff = diff;
                        report.worst = Some((i, j));
                    }
                }
                (c, b) => {
                    if let Err(e) = c {
                        report.failures.push(format!("cnml at prefix {i}, future {j}: {e}"));
                    }
                    if let Err(e) = b {
                        report.failures.push(format!("jeffreys at prefix {i}, future {j}: {e}"));
                    }
                }
            }
        }
    }
    Ok(report)
}
