use expfam_core::families::{InverseGaussianDist, PoissonExponentialDist};
use expfam_core::intervals::{
    coverage_simulation, gamma_confidence, gamma_credible, poisson_exp_confidence, poisson_exp_credible, IntervalOp,
};
use expfam_core::numerics::special::{inv_reg_gamma_lower, reg_gamma_lower};
use expfam_core::prediction::{cnml_predictive, jeffreys_predictive, PredictionConfig, PredictiveQuery};
use expfam_core::{FamilyDescriptor, MeanParam, NaturalParam, ObservationBatch};
use proptest::prelude::*;

fn scalar_family() -> impl Strategy<Value = FamilyDescriptor> {
    prop_oneof![
        (0.2f64..6.0).prop_map(|a| FamilyDescriptor::gamma(a).unwrap()),
        (0.2f64..6.0).prop_map(|b| FamilyDescriptor::gaussian_scalar(b).unwrap()),
        (0.2f64..6.0).prop_map(|k| FamilyDescriptor::inverse_gaussian(k).unwrap()),
        (0.2f64..6.0).prop_map(|k| FamilyDescriptor::poisson_exponential(k).unwrap()),
    ]
}

/// A natural parameter valid for `fam`, from a raw draw in (−3, 3).
fn natural_for(fam: &FamilyDescriptor, raw: f64) -> NaturalParam {
    if fam.is_half_line() {
        NaturalParam::scalar(-raw.exp())
    } else {
        NaturalParam::scalar(raw)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bregman_is_nonnegative_and_vanishes_on_the_diagonal(fam in scalar_family(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (t1, t2) = (natural_for(&fam, a), natural_for(&fam, b));
        let d = fam.bregman(&t1, &t2).unwrap();
        prop_assert!(d >= -1e-12 * (1.0 + fam.cumulant(&t1).unwrap().abs()));
        prop_assert_eq!(fam.bregman(&t1, &t1).unwrap(), 0.0);
    }

    #[test]
    fn fenchel_young(fam in scalar_family(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let theta = natural_for(&fam, a);
        let mu = fam.mean_from_natural(&natural_for(&fam, b)).unwrap();
        let lhs = fam.cumulant(&theta).unwrap() + fam.convex_conjugate(&mu).unwrap();
        let rhs = theta.value() * mu.value();
        prop_assert!(lhs >= rhs - 1e-10 * (1.0 + rhs.abs()));
        let own = fam.mean_from_natural(&theta).unwrap();
        let tight = fam.cumulant(&theta).unwrap() + fam.convex_conjugate(&own).unwrap() - theta.value() * own.value();
        prop_assert!(tight.abs() < 1e-10 * (1.0 + (theta.value() * own.value()).abs()));
    }

    #[test]
    fn mle_inverts_the_mean_map(fam in scalar_family(), a in -3.0f64..3.0) {
        let theta = natural_for(&fam, a);
        let back = fam.mle(&fam.mean_from_natural(&theta).unwrap()).unwrap();
        prop_assert!((back.value() - theta.value()).abs() <= 1e-12 * theta.value().abs().max(1.0));
    }

    #[test]
    fn robustness_ratio_is_a_density_ratio(fam in scalar_family(), a in -3.0f64..3.0, x in 0.05f64..20.0) {
        let theta = natural_for(&fam, a);
        let xv = nalgebra::DVector::from_element(1, x);
        let hat = fam.mle(&MeanParam::scalar(x)).unwrap();
        let direct = (fam.log_density(&theta, &xv).unwrap() - fam.log_density(&hat, &xv).unwrap()).exp();
        prop_assert!((direct - fam.robustness_ratio(&theta, &MeanParam::scalar(x)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn gamma_quantile_round_trip(a in 0.05f64..200.0, p in 1e-8f64..0.99999999) {
        let x = inv_reg_gamma_lower(a, p).unwrap();
        prop_assert!((reg_gamma_lower(a, x).unwrap() - p).abs() <= 1e-9 * p.max(1e-3));
    }

    #[test]
    fn inverse_gaussian_quantile_round_trip(mean in 0.05f64..20.0, shape in 0.05f64..200.0, p in 1e-6f64..0.999999) {
        let law = InverseGaussianDist::new(mean, shape).unwrap();
        prop_assert!((law.cdf(law.quantile(p).unwrap()) - p).abs() < 1e-9);
    }

    #[test]
    fn poisson_exponential_cdf_is_monotone(k in 0.1f64..8.0, b in 0.1f64..8.0, x in 0.0f64..10.0, dx in 0.0f64..3.0) {
        let law = PoissonExponentialDist::new(k, b).unwrap();
        let (lo, hi) = (law.cdf(x).unwrap(), law.cdf(x + dx).unwrap());
        prop_assert!(law.atom_weight() - 1e-15 <= lo && lo <= hi + 1e-15 && hi <= 1.0 + 1e-15);
    }

    #[test]
    fn gamma_credible_and_confidence_coincide(alpha in 0.2f64..5.0, xs in prop::collection::vec(0.01f64..10.0, 1..8), level in 0.05f64..0.99) {
        let b = ObservationBatch::from_scalars(&xs).unwrap();
        prop_assert_eq!(gamma_credible(alpha, &b, level).unwrap().upper, gamma_confidence(alpha, &b, level).unwrap().upper);
    }

    #[test]
    fn poisson_exp_bounds_grow_with_level(k in 0.3f64..5.0, xs in prop::collection::vec(0.0f64..5.0, 1..5), l1 in 0.1f64..0.9, dl in 0.01f64..0.09) {
        prop_assume!(xs.iter().sum::<f64>() > 1e-3);
        let b = ObservationBatch::from_scalars(&xs).unwrap();
        let cred = |l| poisson_exp_credible(k, &b, l).unwrap().upper;
        let conf = |l| poisson_exp_confidence(k, &b, l).unwrap().upper;
        prop_assert!(cred(l1) < cred(l1 + dl));
        prop_assert!(conf(l1) < conf(l1 + dl));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cnml_equals_jeffreys_for_exact_families(
        which in 0usize..3,
        prefix in prop::collection::vec(0.05f64..8.0, 1..3),
        y in 0.05f64..8.0,
    ) {
        let fam = match which {
            0 => FamilyDescriptor::gamma(1.3).unwrap(),
            1 => FamilyDescriptor::gaussian_scalar(0.7).unwrap(),
            _ => FamilyDescriptor::poisson_exponential(2.0).unwrap(),
        };
        let cfg = PredictionConfig::default();
        let q = PredictiveQuery::scalar(&prefix, &[y]).unwrap();
        let c = cnml_predictive(&fam, &q, &cfg).unwrap().log_density;
        let j = jeffreys_predictive(&fam, &q, &cfg).unwrap().log_density;
        prop_assert!((c - j).abs() < 1e-6, "cnml {c} jeffreys {j}");
    }

    #[test]
    fn coverage_is_reproducible(seed in any::<u64>()) {
        let fam = FamilyDescriptor::gamma(1.0).unwrap();
        let truth = NaturalParam::scalar(-2.0);
        let a = coverage_simulation(&fam, IntervalOp::GammaCredible, &truth, 3, 0.9, 300, seed).unwrap();
        let b = coverage_simulation(&fam, IntervalOp::GammaCredible, &truth, 3, 0.9, 300, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
