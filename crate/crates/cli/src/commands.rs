use expfam_core::intervals::{
    compute_interval, coverage_simulation, gaussian_divergence_ball, IntervalMethod, IntervalOp, IntervalResult,
};
use expfam_core::prediction::{predict, PredictionConfig, PredictiveQuery, Predictor};
use expfam_core::verify::{run_suite, Suite, VerificationReport, VerifyConfig};
use expfam_core::{FamilyDescriptor, FamilyKind, MeanParam, NaturalParam, ObservationBatch};
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{ConfigFile, RunConfig, SharedFlags};
use crate::data::{parse_future, parse_point, read_observations};
use crate::error::{CliError, CliResult};
use crate::output::render;
use crate::{Cli, Command, ParamFlags};

pub struct Outcome {
    pub text: String,
    pub code: u8,
}

fn ok(text: String) -> CliResult<Outcome> {
    Ok(Outcome { text, code: 0 })
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let file = match &cli.shared.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let s = cli.shared;
    let equivalence_tol = match &cli.command {
        Command::Predict { equivalence_tol, .. } => *equivalence_tol,
        _ => None,
    };
    let cfg = RunConfig::resolve(
        SharedFlags {
            family: crate::config::FamilySpec {
                family: s.family,
                shape: s.shape,
                kappa: s.kappa,
                cov: s.cov,
            },
            tol: s.tol,
            equivalence_tol,
            seed: s.seed,
            format: s.format,
            data: s.data,
        },
        &file,
    )?;
    let level = file.pick(s.level, "level")?.unwrap_or(0.9);
    let trials = file.pick(s.trials, "trials")?;
    let m = file.pick(s.m, "m")?;

    match cli.command {
        Command::Density { param, x } => {
            let x = file.pick(x, "x")?.ok_or_else(|| CliError::input("--x is required"))?;
            density(&cfg, &resolve_param(param, &file)?, &x)
        }
        Command::Predict {
            future, method, compare, ..
        } => {
            let future = file.pick(future, "future")?.ok_or_else(|| CliError::input("--future is required"))?;
            let method = file.pick(method, "method")?.unwrap_or_else(|| "cnml".into());
            let compare = file.switch(compare, "compare")?;
            predict_cmd(&cfg, &future, &method, compare)
        }
        Command::Interval { method } => {
            let method = file.pick(method, "method")?.unwrap_or_else(|| "credible".into());
            interval(&cfg, &method, level)
        }
        Command::Coverage { param, method } => {
            let method = file.pick(method, "method")?.unwrap_or_else(|| "credible".into());
            let m = m.ok_or_else(|| CliError::input("--m is required"))?;
            coverage(&cfg, &resolve_param(param, &file)?, &method, m, level, trials.unwrap_or(100_000))
        }
        Command::Verify {
            suite,
            mc_samples,
            no_timing,
        } => {
            let suite: Suite = file.pick(suite, "suite")?.unwrap_or_else(|| "all".into()).parse()?;
            let defaults = VerifyConfig::default();
            let vcfg = VerifyConfig {
                tol: cfg.tol,
                seed: file.pick(s.seed, "seed")?.unwrap_or(defaults.seed),
                trials: trials.unwrap_or(defaults.trials),
                mc_samples: file.pick(mc_samples, "mc-samples")?.unwrap_or(defaults.mc_samples),
            };
            verify(&cfg, suite, &vcfg, file.switch(no_timing, "no-timing")?)
        }
    }
}

// ---------------------------------------------------------------- parameters

/// The distribution parameter as given: a rate, a mean or θ itself.
enum ParamChoice {
    Rate(f64),
    Mean(String),
    Theta(String),
}

fn resolve_param(p: ParamFlags, file: &ConfigFile) -> CliResult<ParamChoice> {
    let rate = file.pick(p.rate, "rate")?;
    let mean = file.pick(p.mean, "mean")?;
    let theta = file.pick(p.theta, "theta")?;
    match (rate, mean, theta) {
        (Some(r), None, None) => Ok(ParamChoice::Rate(r)),
        (None, Some(m), None) => Ok(ParamChoice::Mean(m)),
        (None, None, Some(t)) => Ok(ParamChoice::Theta(t)),
        (None, None, None) => Err(CliError::input("give the parameter with one of --rate, --mean or --theta")),
        _ => Err(CliError::input("--rate, --mean and --theta are mutually exclusive")),
    }
}

fn natural(fam: &FamilyDescriptor, p: &ParamChoice) -> CliResult<NaturalParam> {
    let theta = match p {
        ParamChoice::Rate(r) => {
            if !fam.is_half_line() {
                return Err(CliError::input("--rate applies to half-line families; use --mean or --theta"));
            }
            NaturalParam::scalar(-r)
        }
        ParamChoice::Mean(text) => fam.mle(&MeanParam::new(parse_point(text)?))?,
        ParamChoice::Theta(text) => NaturalParam::new(parse_point(text)?),
    };
    fam.check_natural(&theta)?;
    Ok(theta)
}

// ---------------------------------------------------------------- density

#[derive(Serialize)]
struct DensityRecord {
    family: String,
    theta: Vec<f64>,
    x: Vec<f64>,
    /// "atom" for the Poisson-exponential point mass at zero, else "density".
    kind: &'static str,
    log_value: f64,
    value: f64,
}

fn density(cfg: &RunConfig, p: &ParamChoice, x: &str) -> CliResult<Outcome> {
    let fam = cfg.family()?;
    let theta = natural(fam, p)?;
    let x = parse_point(x)?;
    let log_value = fam.log_density(&theta, &x)?;
    let atom = matches!(fam.kind(), FamilyKind::PoissonExponentialShape { .. }) && x[0] == 0.0;
    let rec = DensityRecord {
        family: fam.to_string(),
        theta: theta.theta.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        kind: if atom { "atom" } else { "density" },
        log_value,
        value: log_value.exp(),
    };
    ok(render(&[rec], cfg.format)?)
}

// ---------------------------------------------------------------- predict

#[derive(Serialize)]
struct PredictRecord {
    family: String,
    method: Predictor,
    m: usize,
    horizon: usize,
    log_density: f64,
    normalizer_error: f64,
}

#[derive(Serialize)]
struct CompareRecord {
    family: String,
    m: usize,
    horizon: usize,
    cnml_log_density: f64,
    jeffreys_log_density: f64,
    abs_log_diff: f64,
    equivalence_tol: f64,
    agree: bool,
}

fn parse_predictor(name: &str) -> CliResult<Predictor> {
    match name {
        "cnml" => Ok(Predictor::Cnml),
        "jeffreys" => Ok(Predictor::Jeffreys),
        "plugin" | "plug-in" => Ok(Predictor::PlugIn),
        other => Err(CliError::input(format!("unknown prediction method '{other}' (expected cnml, jeffreys or plugin)"))),
    }
}

fn load_batch(cfg: &RunConfig, fam: &FamilyDescriptor) -> CliResult<ObservationBatch> {
    let batch = ObservationBatch::from_points(&read_observations(cfg.data_path()?)?)?;
    batch.check_against(fam)?;
    Ok(batch)
}

fn predict_cmd(cfg: &RunConfig, future: &str, method: &str, compare: bool) -> CliResult<Outcome> {
    let fam = cfg.family()?;
    let batch = load_batch(cfg, fam)?;
    let future: Vec<DVector<f64>> = parse_future(future, fam.dimension())?;
    let query = PredictiveQuery::new(batch, future)?;
    let pcfg = PredictionConfig {
        tol: cfg.tol,
        seed: cfg.seed,
        ..PredictionConfig::default()
    };
    if compare {
        let c = predict(fam, Predictor::Cnml, &query, &pcfg)?.log_density;
        let j = predict(fam, Predictor::Jeffreys, &query, &pcfg)?.log_density;
        let diff = (c - j).abs();
        let rec = CompareRecord {
            family: fam.to_string(),
            m: query.m(),
            horizon: query.n() - query.m(),
            cnml_log_density: c,
            jeffreys_log_density: j,
            abs_log_diff: diff,
            equivalence_tol: cfg.equivalence_tol,
            agree: diff <= cfg.equivalence_tol,
        };
        return ok(render(&[rec], cfg.format)?);
    }
    let method = parse_predictor(method)?;
    let v = predict(fam, method, &query, &pcfg)?;
    let rec = PredictRecord {
        family: fam.to_string(),
        method,
        m: query.m(),
        horizon: query.n() - query.m(),
        log_density: v.log_density,
        normalizer_error: v.normalizer_error,
    };
    ok(render(&[rec], cfg.format)?)
}

// ---------------------------------------------------------------- interval

#[derive(Serialize)]
struct IntervalRecord {
    family: String,
    construction: IntervalOp,
    method: IntervalMethod,
    level: f64,
    m: usize,
    xbar: Vec<f64>,
    lower: f64,
    upper: f64,
    mass_residual: f64,
    tolerance: f64,
    /// Centre of the Gaussian divergence ball (θ coordinates); absent otherwise.
    ball_center: Option<Vec<f64>>,
    /// With `--method both`: whether the credible and confidence upper
    /// endpoints agree to 100 × the numeric tolerance.
    coincides: Option<bool>,
    endpoint_gap: Option<f64>,
}

fn interval_record(fam: &FamilyDescriptor, op: IntervalOp, batch: &ObservationBatch, r: IntervalResult) -> CliResult<IntervalRecord> {
    let ball_center = match op {
        IntervalOp::GaussianBall => Some(gaussian_divergence_ball(fam, batch, r.level)?.center),
        _ => None,
    };
    Ok(IntervalRecord {
        family: fam.to_string(),
        construction: op,
        method: r.method,
        level: r.level,
        m: batch.n(),
        xbar: batch.xbar().as_slice().to_vec(),
        lower: r.lower,
        upper: r.upper,
        mass_residual: r.diagnostics.mass_residual,
        tolerance: r.diagnostics.tolerance,
        ball_center,
        coincides: None,
        endpoint_gap: None,
    })
}

fn interval(cfg: &RunConfig, method: &str, level: f64) -> CliResult<Outcome> {
    let fam = cfg.family()?;
    let batch = load_batch(cfg, fam)?;
    let kinds: &[bool] = match method {
        "credible" => &[true],
        "confidence" => &[false],
        "both" => &[true, false],
        other => return Err(CliError::input(format!("unknown interval method '{other}' (expected credible, confidence or both)"))),
    };
    let mut records = Vec::new();
    for &credible in kinds {
        let op = IntervalOp::for_family(fam, credible)?;
        let r = compute_interval(fam, op, &batch, level)?;
        records.push(interval_record(fam, op, &batch, r)?);
    }
    if records.len() == 2 {
        let gap = (records[0].upper - records[1].upper).abs();
        for r in &mut records {
            r.coincides = Some(gap <= 100.0 * cfg.tol);
            r.endpoint_gap = Some(gap);
        }
    }
    ok(render(&records, cfg.format)?)
}

// ---------------------------------------------------------------- coverage

#[derive(Serialize)]
struct CoverageRecord {
    family: String,
    construction: IntervalOp,
    truth_theta: Vec<f64>,
    level: f64,
    m: usize,
    trials: u64,
    seed: u64,
    hits: u64,
    degenerate: u64,
    empirical_coverage: f64,
    sigma: f64,
    band_lower: f64,
    band_upper: f64,
    within_band: bool,
}

fn coverage(cfg: &RunConfig, p: &ParamChoice, method: &str, m: usize, level: f64, trials: u64) -> CliResult<Outcome> {
    let fam = cfg.family()?;
    let truth = natural(fam, p)?;
    let credible = match method {
        "credible" => true,
        "confidence" => false,
        other => return Err(CliError::input(format!("unknown interval method '{other}' (expected credible or confidence)"))),
    };
    let op = IntervalOp::for_family(fam, credible)?;
    let r = coverage_simulation(fam, op, &truth, m, level, trials, cfg.seed)?;
    let rec = CoverageRecord {
        family: fam.to_string(),
        construction: op,
        truth_theta: truth.theta.as_slice().to_vec(),
        level,
        m,
        trials,
        seed: cfg.seed,
        hits: r.hits,
        degenerate: r.degenerate,
        empirical_coverage: r.empirical_coverage,
        sigma: r.sigma(),
        band_lower: r.three_sigma_band.0,
        band_upper: r.three_sigma_band.1,
        within_band: r.within_band(),
    };
    ok(render(&[rec], cfg.format)?)
}

// ---------------------------------------------------------------- verify

fn verify(cfg: &RunConfig, suite: Suite, vcfg: &VerifyConfig, no_timing: bool) -> CliResult<Outcome> {
    let mut reports: Vec<VerificationReport> = run_suite(suite, vcfg, cfg.family.as_ref())?;
    if no_timing {
        for r in &mut reports {
            r.runtime_seconds = 0.0;
        }
    }
    let code = if reports.iter().any(|r| r.numerical_failure) {
        3
    } else if reports.iter().any(|r| !r.passed) {
        1
    } else {
        0
    };
    Ok(Outcome {
        text: render(&reports, cfg.format)?,
        code,
    })
}
