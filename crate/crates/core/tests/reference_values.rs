mod common;

use approx::assert_relative_eq;
use common::{bisect, ln_gamma_oracle, rel, simpson, simpson_log};
use expfam_core::families::{
    conjugate_family, gamma_posterior, poisson_exponential_posterior, tweedie_variance_natural, InverseGaussianDist,
    PoissonExponentialDist,
};
use expfam_core::intervals::{
    ball_posterior_mass, gamma_confidence, gamma_credible, gaussian_divergence_ball, poisson_exp_confidence,
    poisson_exp_credible,
};
use expfam_core::numerics::special::{inv_reg_gamma_lower, log_gamma, reg_gamma_lower, std_normal_cdf};
use expfam_core::prediction::{
    cnml_predictive, jeffreys_predictive, plug_in_predictive, PredictionConfig, PredictiveQuery,
};
use expfam_core::saddlepoint::{renormalize, saddlepoint_unnormalized};
use expfam_core::{Error, FamilyDescriptor, MeanParam, NaturalParam, ObservationBatch, TAU};
use nalgebra::DVector;

fn th(v: f64) -> NaturalParam {
    NaturalParam::scalar(v)
}

fn x1(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

// ---------------------------------------------------------------- special functions

#[test]
fn incomplete_gamma_against_simpson() {
    for &(a, x) in &[(2.5f64, 2.5f64), (1.0, 0.3), (4.0, 7.0), (0.5 + 1e-9, 1.2)] {
        let norm = ln_gamma_oracle(a).exp();
        // t = u² removes the t^{a−1} singularity at the origin
        let oracle = simpson(|u: f64| 2.0 * u.powf(2.0 * a - 1.0) * (-u * u).exp(), 1e-12, x.sqrt(), 200_000) / norm;
        let v = reg_gamma_lower(a, x).unwrap();
        assert!((v - oracle).abs() < 1e-10, "a={a} x={x}: {v} vs {oracle}");
    }
    assert_relative_eq!(reg_gamma_lower(1.0, 10f64.ln()).unwrap(), 0.9, epsilon = 1e-14);
}

#[test]
fn log_gamma_against_stirling() {
    for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 40.0, 1e4] {
        let (v, o) = (log_gamma(x).unwrap(), ln_gamma_oracle(x));
        // the oracle itself is good to about 1e-12
        assert!(rel(v, o) < 1e-11 || (v - o).abs() < 1e-11, "x={x}: {v} vs {o}");
    }
}

#[test]
fn gamma_quantile_matches_bisection() {
    assert_relative_eq!(inv_reg_gamma_lower(1.0, 0.9).unwrap(), 10f64.ln(), epsilon = 1e-9);
    for &(a, p) in &[(0.7, 0.2), (3.0, 0.95), (12.0, 0.5)] {
        let oracle = bisect(|x| reg_gamma_lower(a, x).unwrap() - p, 1e-12, 100.0);
        assert!(rel(inv_reg_gamma_lower(a, p).unwrap(), oracle) < 1e-10);
    }
}

#[test]
fn normal_cdf_against_density_quadrature() {
    let pdf = |z: f64| (-0.5 * z * z).exp() / TAU.sqrt();
    let oracle = 0.5 + simpson(pdf, 0.0, 1.959963985, 10_000);
    assert!((std_normal_cdf(1.959963985) - oracle).abs() < 1e-10);
    assert!((oracle - 0.975).abs() < 1e-9);
}

// ---------------------------------------------------------------- family operations

#[test]
fn cumulants_and_moments() {
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    let g2 = FamilyDescriptor::gamma(2.0).unwrap();
    let ig = FamilyDescriptor::inverse_gaussian(2.0).unwrap();
    let pe = FamilyDescriptor::poisson_exponential(2.0).unwrap();
    assert_eq!(g1.cumulant(&th(-1.0)).unwrap(), 0.0);
    assert_relative_eq!(ig.cumulant(&th(-2.0)).unwrap(), -2.828427125, epsilon = 1e-9);
    assert_relative_eq!(g1.mean_from_natural(&th(-0.5)).unwrap().value(), 2.0, epsilon = 1e-14);
    assert_relative_eq!(pe.mean_from_natural(&th(-1.0)).unwrap().value(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(g2.covariance(&th(-1.0)).unwrap()[(0, 0)], 2.0, epsilon = 1e-14);
    assert_relative_eq!(g1.mle(&MeanParam::scalar(2.0)).unwrap().value(), -0.5, epsilon = 1e-14);
    assert_relative_eq!(pe.mle(&MeanParam::scalar(1.0)).unwrap().value(), -1.0, epsilon = 1e-14);
    // inverse Gaussian variance function μ³/κ
    for &t in &[-0.1, -1.0, -3.0] {
        let mu = ig.mean_from_natural(&th(t)).unwrap().value();
        assert!(rel(ig.covariance(&th(t)).unwrap()[(0, 0)], mu.powi(3) / 2.0) < 1e-12);
    }
}

#[test]
fn divergences() {
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    let d = g1.bregman(&th(-2.0), &th(-1.0)).unwrap();
    assert_relative_eq!(d, 2.0 - 1.0 - 2f64.ln(), epsilon = 1e-14);
    // KL(Exp(1) ‖ Exp(2)) = ∫ e^{−x}(x − ln 2) dx
    let oracle = simpson(|x| (-x).exp() * (x - 2f64.ln()), 0.0, 50.0, 100_000);
    assert!((g1.kl_divergence(&th(-1.0), &th(-2.0)).unwrap() - oracle).abs() < 1e-10);
    let gauss = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
    assert_relative_eq!(gauss.kl_divergence(&th(0.0), &th(1.0)).unwrap(), 0.5, epsilon = 1e-15);
    assert_relative_eq!(g1.robustness_ratio(&th(-2.0), &MeanParam::scalar(1.0)).unwrap(), 0.7357589, epsilon = 1e-7);
}

#[test]
fn conjugates_and_jeffreys() {
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    let ig = FamilyDescriptor::inverse_gaussian(2.0).unwrap();
    let pe = FamilyDescriptor::poisson_exponential(2.0).unwrap();
    assert_relative_eq!(g1.convex_conjugate(&MeanParam::scalar(1.0)).unwrap(), -1.0, epsilon = 1e-14);
    assert_relative_eq!(ig.convex_conjugate(&MeanParam::scalar(1.0)).unwrap(), 1.0, epsilon = 1e-14);
    let g3 = FamilyDescriptor::gamma(3.0).unwrap();
    assert_relative_eq!(g3.jeffreys_unnormalized(&th(-2.0)).unwrap(), 3f64.sqrt() / 2.0, epsilon = 1e-14);
    assert_relative_eq!(pe.jeffreys_unnormalized(&th(-1.5)).unwrap(), (2.0 / 1.5f64.powi(3)).sqrt(), epsilon = 1e-14);

    let pair = conjugate_family(&FamilyDescriptor::gamma(2.0).unwrap());
    assert!(pair.self_conjugate);
    assert_eq!(pair.dual, FamilyDescriptor::gamma(2.0).unwrap());
    let pair = conjugate_family(&ig);
    assert!(!pair.self_conjugate);
    assert_eq!(pair.dual, pe);
}

#[test]
fn densities_at_reference_points() {
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    assert_relative_eq!(g1.log_density(&th(-2.0), &x1(1e-12)).unwrap().exp(), 2.0, epsilon = 1e-10);
    let gauss = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
    assert_relative_eq!(gauss.log_density(&th(0.0), &x1(0.0)).unwrap(), -0.5 * TAU.ln(), epsilon = 1e-14);
    assert!(matches!(g1.log_density(&th(-1.0), &x1(-1.0)), Err(Error::Support(_))));
}

#[test]
fn densities_integrate_to_one() {
    for fam in [
        FamilyDescriptor::gamma(0.5).unwrap(),
        FamilyDescriptor::gamma(3.0).unwrap(),
        FamilyDescriptor::inverse_gaussian(0.5).unwrap(),
        FamilyDescriptor::inverse_gaussian(4.0).unwrap(),
    ] {
        for &t in &[-0.5, -2.0] {
            let f = |x: f64| fam.log_density(&th(t), &x1(x)).unwrap().exp();
            let total = simpson_log(f, 1e-40, 400.0, 400_000);
            assert!((total - 1.0).abs() < 1e-8, "{fam:?} θ={t}: {total}");
        }
    }
    for &(k, b) in &[(0.5, 0.5), (1.0, 2.0), (2.0, 1.0), (4.0, 4.0)] {
        let law = PoissonExponentialDist::new(k, b).unwrap();
        let cont = simpson_log(|x| law.ln_continuous_density(x).unwrap().exp(), 1e-14, 400.0 / b, 400_000);
        assert!((law.atom_weight() + cont - 1.0).abs() < 1e-9, "κ={k} β={b}: {}", law.atom_weight() + cont);
    }
}

// ---------------------------------------------------------------- conjugate laws

#[test]
fn inverse_gaussian_law() {
    let ig = InverseGaussianDist::new(1.0, 1.0).unwrap();
    assert_relative_eq!(ig.density(1.0).unwrap(), (1.0 / TAU).sqrt(), epsilon = 1e-12);
    let total = simpson_log(|b| ig.density(b).unwrap(), 1e-8, 1e4, 200_000);
    let mean = simpson_log(|b| b * ig.density(b).unwrap(), 1e-8, 1e4, 200_000);
    assert!((total - 1.0).abs() < 1e-9 && (mean - 1.0).abs() < 1e-8);
    let oracle_median = bisect(|q| simpson_log(|b| ig.density(b).unwrap(), 1e-8, q, 20_000) - 0.5, 0.1, 5.0);
    assert!((ig.quantile(0.5).unwrap() - oracle_median).abs() < 1e-8);
    assert!((InverseGaussianDist::new(1.0, 1e4).unwrap().cdf(1.0) - 0.5).abs() < 1e-3 * 10.0);
}

#[test]
fn poisson_exponential_law() {
    let law = PoissonExponentialDist::new(2.0, 1.0).unwrap();
    assert_relative_eq!(law.atom_weight(), (-1f64).exp(), epsilon = 1e-15);
    assert_eq!(law.cdf(0.0).unwrap(), law.atom_weight());
    for &x in &[0.1, 0.5, 1.0, 2.0, 5.0] {
        let oracle = law.atom_weight() + simpson(|y| law.ln_continuous_density(y).unwrap().exp(), 1e-300, x, 40_000);
        let v = law.cdf(x).unwrap();
        assert!((v - oracle).abs() < 1e-9, "x={x}: {v} vs {oracle}");
    }
    assert_relative_eq!(tweedie_variance_natural(2.0, -1.0).unwrap(), 2.0, epsilon = 1e-14);
}

#[test]
fn posteriors() {
    let b = ObservationBatch::from_scalars(&[0.2, 0.5, 0.8]).unwrap();
    let post = gamma_posterior(2.0, &b).unwrap();
    assert_eq!((post.shape, post.rate), (6.0, 1.5));
    // κ = 2, x̄ = 2: β^{−3/2} e^{−2β − 1/β} normalized by quadrature
    let b = ObservationBatch::from_scalars(&[2.0]).unwrap();
    let post = poisson_exponential_posterior(2.0, &b).unwrap();
    let kernel = |beta: f64| beta.powf(-1.5) * (-2.0 * beta - 1.0 / beta).exp();
    let z = simpson_log(kernel, 1e-6, 100.0, 100_000);
    for &beta in &[0.2, 0.5f64.sqrt(), 1.5] {
        assert!(rel(post.density(beta).unwrap(), kernel(beta) / z) < 1e-9);
    }
    let mean = simpson_log(|b| b * kernel(b) / z, 1e-6, 100.0, 100_000);
    assert!((mean - 0.5f64.sqrt()).abs() < 1e-8);
}

// ---------------------------------------------------------------- saddle point

#[test]
fn saddlepoint_reference_values() {
    let gauss = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
    assert_relative_eq!(saddlepoint_unnormalized(&gauss, 1, &th(0.3), &th(1.3)).unwrap(), (-0.5f64).exp() / TAU.sqrt(), epsilon = 1e-14);
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    let expected = (-2.0 * (2.0 - 1.0 - 2f64.ln())).exp() * 0.5 / TAU.sqrt();
    assert_relative_eq!(saddlepoint_unnormalized(&g1, 2, &th(-1.0), &th(-2.0)).unwrap(), expected, epsilon = 1e-14);
    for n in [1, 4, 9] {
        let p = renormalize(&gauss, n, &th(0.0), 1e-12).unwrap();
        assert!(rel(p.normalizer, 1.0 / (n as f64).sqrt()) < 1e-10);
    }
    // Gamma α = 1, n = 2, β̂ = 1: the profile is the Γ(2, 2) density in β
    let p = renormalize(&g1, 2, &th(-1.0), 1e-12).unwrap();
    for &beta in &[0.1, 0.5, 1.0, 3.0] {
        assert!(rel(p.density(&th(-beta)).unwrap(), 4.0 * beta * (-2.0 * beta).exp()) < 1e-9);
    }
}

// ---------------------------------------------------------------- prediction

#[test]
fn gamma_one_step_predictions() {
    let g1 = FamilyDescriptor::gamma(1.0).unwrap();
    let cfg = PredictionConfig::default();
    for &(a, b) in &[(1.0, 1.0), (0.3, 2.0), (4.0, 0.5)] {
        let q = PredictiveQuery::scalar(&[a], &[b]).unwrap();
        let exact = a / (a + b).powi(2);
        assert!(rel(cnml_predictive(&g1, &q, &cfg).unwrap().log_density.exp(), exact) < 1e-9);
        assert!(rel(jeffreys_predictive(&g1, &q, &cfg).unwrap().log_density.exp(), exact) < 1e-9);
    }
    let q = PredictiveQuery::scalar(&[1.0], &[1.0]).unwrap();
    assert_relative_eq!(plug_in_predictive(&g1, &q).unwrap().log_density, -1.0, epsilon = 1e-14);
}

#[test]
fn gaussian_one_step_is_normal_with_variance_two() {
    let g = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
    let cfg = PredictionConfig::default();
    for &(xbar, y) in &[(0.0, 0.0), (1.0, -2.0), (-0.4, 3.1)] {
        let q = PredictiveQuery::scalar(&[xbar], &[y]).unwrap();
        let exact = (-(y - xbar) * (y - xbar) / 4.0).exp() / (2.0 * TAU).sqrt();
        assert!(rel(cnml_predictive(&g, &q, &cfg).unwrap().log_density.exp(), exact) < 1e-9);
        assert!(rel(jeffreys_predictive(&g, &q, &cfg).unwrap().log_density.exp(), exact) < 1e-9);
    }
}

// ---------------------------------------------------------------- intervals

#[test]
fn interval_reference_values() {
    let one = ObservationBatch::from_scalars(&[1.0]).unwrap();
    let two = ObservationBatch::from_scalars(&[2.0]).unwrap();
    assert_relative_eq!(gamma_credible(1.0, &one, 0.9).unwrap().upper, 10f64.ln(), epsilon = 1e-6);
    assert_relative_eq!(gamma_credible(1.0, &two, 0.9).unwrap().upper, 1.151293, epsilon = 1e-6);
    assert_eq!(gamma_credible(1.0, &two, 0.9).unwrap().upper, gamma_confidence(1.0, &two, 0.9).unwrap().upper);

    let g = FamilyDescriptor::gaussian_scalar(1.0).unwrap();
    let batch = ObservationBatch::from_scalars(&[0.1, 0.4, -0.2, 0.9]).unwrap();
    let ball = gaussian_divergence_ball(&g, &batch, 0.95).unwrap();
    assert!((ball.radius - 3.841459 / 8.0).abs() < 1e-6);
    assert!((ball_posterior_mass(&g, &ball).unwrap() - 0.95).abs() < 1e-12);

    // IG(√½, 2) 0.9-quantile by bisection on a Simpson cdf
    let cred = poisson_exp_credible(2.0, &two, 0.9).unwrap().upper;
    let ig = |b: f64| (2.0 / (TAU * b.powi(3))).sqrt() * (-2.0 * (b - 0.5f64.sqrt()).powi(2) / (2.0 * 0.5 * b)).exp();
    let oracle = bisect(|q| simpson_log(ig, 1e-6, q, 20_000) - 0.9, 0.1, 10.0);
    assert!((cred - oracle).abs() < 1e-6);
    let conf = poisson_exp_confidence(2.0, &two, 0.9).unwrap().upper;
    assert!((cred - conf).abs() > 1e-8);
    // the confidence bound solves P_β(S ≤ x̄) = level for S ~ PE(κ, β)
    let law = PoissonExponentialDist::new(2.0, conf).unwrap();
    assert!((law.cdf(2.0).unwrap() - 0.9).abs() < 1e-10);
}
