//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! Half-lines and the real line are mapped onto finite intervals with
//! `x = a + s·t/(1 − t)`, so every rule is applied on a bounded interval and
//! never evaluates the integrand at an endpoint. Power-type endpoint
//! singularities are resolved by the adaptive bisection, which refines
//! geometrically toward the offending endpoint.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Finite { lo: f64, hi: f64 },
    /// `[lo, ∞)`; `scale` sets where the bulk of the mass is expected.
    UpperHalf { lo: f64, scale: f64 },
    /// `(−∞, hi]`.
    LowerHalf { hi: f64, scale: f64 },
    Real { center: f64, scale: f64 },
}

impl Domain {
    pub fn finite(lo: f64, hi: f64) -> Self {
        Domain::Finite { lo, hi }
    }

    pub fn upper_half(lo: f64) -> Self {
        Domain::UpperHalf { lo, scale: 1.0 }
    }

    pub fn lower_half(hi: f64) -> Self {
        Domain::LowerHalf { hi, scale: 1.0 }
    }

    pub fn real() -> Self {
        Domain::Real { center: 0.0, scale: 1.0 }
    }

    pub fn with_scale(self, s: f64) -> Self {
        match self {
            Domain::UpperHalf { lo, .. } => Domain::UpperHalf { lo, scale: s },
            Domain::LowerHalf { hi, .. } => Domain::LowerHalf { hi, scale: s },
            Domain::Real { center, .. } => Domain::Real { center, scale: s },
            d => d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_evaluations: 1_000_000,
        }
    }
}

impl QuadConfig {
    pub fn absolute(tol: f64) -> Self {
        QuadConfig {
            abs_tol: tol,
            ..Default::default()
        }
    }

    pub fn relative(tol: f64) -> Self {
        QuadConfig {
            abs_tol: 0.0,
            rel_tol: tol,
            ..Default::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integrates `f` over `domain` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, domain: Domain, tol: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("quadrature tolerance must be positive, got {tol}")));
    }
    integrate_with(|x| Ok(f(x)), domain, &QuadConfig::absolute(tol))
}

/// Integrates a fallible integrand; the first error aborts the integration.
pub fn integrate_with<F>(mut f: F, domain: Domain, cfg: &QuadConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    one_dim(&mut f, domain, cfg)
}

fn one_dim(f: &mut dyn FnMut(f64) -> Result<f64>, domain: Domain, cfg: &QuadConfig) -> Result<QuadratureResult> {
    if !(cfg.abs_tol >= 0.0 && cfg.rel_tol >= 0.0) || cfg.abs_tol + cfg.rel_tol <= 0.0 {
        return Err(Error::invalid("quadrature needs a positive absolute or relative tolerance"));
    }
    match domain {
        Domain::Finite { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::invalid("finite domain with non-finite endpoint"));
            }
            if lo == hi {
                return Ok(QuadratureResult {
                    value: 0.0,
                    error_estimate: 0.0,
                    evaluations: 0,
                });
            }
            if lo > hi {
                let r = adaptive(f, hi, lo, cfg)?;
                return Ok(QuadratureResult { value: -r.value, ..r });
            }
            adaptive(f, lo, hi, cfg)
        }
        Domain::UpperHalf { lo, scale } => {
            check_scale(scale)?;
            adaptive(
                &mut |t: f64| {
                    let u = 1.0 - t;
                    let x = lo + scale * t / u;
                    if !x.is_finite() {
                        return Ok(0.0);
                    }
                    f(x).map(|v| if v == 0.0 { 0.0 } else { v * scale / (u * u) })
                },
                0.0,
                1.0,
                cfg,
            )
        }
        Domain::LowerHalf { hi, scale } => {
            check_scale(scale)?;
            adaptive(
                &mut |t: f64| {
                    let u = 1.0 - t;
                    let x = hi - scale * t / u;
                    if !x.is_finite() {
                        return Ok(0.0);
                    }
                    f(x).map(|v| if v == 0.0 { 0.0 } else { v * scale / (u * u) })
                },
                0.0,
                1.0,
                cfg,
            )
        }
        Domain::Real { center, scale } => {
            check_scale(scale)?;
            let half = QuadConfig {
                abs_tol: 0.5 * cfg.abs_tol,
                max_evaluations: cfg.max_evaluations / 2,
                ..*cfg
            };
            let right = one_dim(f, Domain::UpperHalf { lo: center, scale }, &half)?;
            let left = one_dim(f, Domain::LowerHalf { hi: center, scale }, &half)?;
            Ok(QuadratureResult {
                value: left.value + right.value,
                error_estimate: left.error_estimate + right.error_estimate,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("domain scale must be positive and finite, got {scale}")))
    }
}

/// Product-rule integration over an axis-aligned (possibly unbounded) box,
/// by nesting one-dimensional adaptive rules. Meant for d ≤ 3.
pub fn integrate_box<F>(f: F, domains: &[Domain], cfg: &QuadConfig) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if domains.is_empty() {
        return Err(Error::invalid("integrate_box needs at least one axis"));
    }
    let mut point = vec![0.0; domains.len()];
    nested(&f, domains, 0, &mut point, cfg)
}

fn nested<F>(f: &F, domains: &[Domain], axis: usize, point: &mut [f64], cfg: &QuadConfig) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if axis + 1 == domains.len() {
        return integrate_with(
            |x| {
                point[axis] = x;
                f(point)
            },
            domains[axis],
            cfg,
        );
    }
    let inner_cfg = QuadConfig {
        abs_tol: 0.25 * cfg.abs_tol,
        rel_tol: 0.25 * cfg.rel_tol,
        ..*cfg
    };
    let inner_evals = RefCell::new(0usize);
    let worst_inner_ratio = RefCell::new(0.0f64);
    let abs_inner_err = RefCell::new(0.0f64);
    let base = point.to_vec();
    let outer = integrate_with(
        |x| {
            let mut p = base.clone();
            p[axis] = x;
            let r = nested(f, domains, axis + 1, &mut p, &inner_cfg)?;
            *inner_evals.borrow_mut() += r.evaluations;
            if r.value != 0.0 {
                let ratio = r.error_estimate / r.value.abs();
                let mut w = worst_inner_ratio.borrow_mut();
                *w = w.max(ratio);
            } else {
                let mut a = abs_inner_err.borrow_mut();
                *a = a.max(r.error_estimate);
            }
            Ok(r.value)
        },
        domains[axis],
        cfg,
    )?;
    let inner_err = worst_inner_ratio.into_inner() * outer.value.abs() + abs_inner_err.into_inner();
    Ok(QuadratureResult {
        value: outer.value,
        error_estimate: outer.error_estimate + inner_err,
        evaluations: outer.evaluations + inner_evals.into_inner(),
    })
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const INITIAL_PIECES: usize = 4;

fn adaptive<F>(f: &mut F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64> + ?Sized,
{
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut evaluations = 0usize;
    let width = (hi - lo) / INITIAL_PIECES as f64;
    for i in 0..INITIAL_PIECES {
        let a = lo + width * i as f64;
        let b = if i + 1 == INITIAL_PIECES { hi } else { a + width };
        let (value, error) = kronrod21(f, a, b)?;
        evaluations += 21;
        heap.push(Segment { lo: a, hi: b, value, error });
    }

    loop {
        let (value, error) = totals(&heap, &frozen);
        if error <= cfg.target(value) {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        if evaluations >= cfg.max_evaluations {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature (evaluation budget exhausted)".into(),
                estimate: value,
                error,
                evaluations,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature (intervals at round-off resolution)".into(),
                estimate: value,
                error,
                evaluations,
            });
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi || (worst.hi - worst.lo) < 1e-15 * worst.lo.abs().max(worst.hi.abs()) {
            frozen.push(worst);
            continue;
        }
        let (v1, e1) = kronrod21(f, worst.lo, mid)?;
        let (v2, e2) = kronrod21(f, mid, worst.hi)?;
        evaluations += 42;
        heap.push(Segment { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Segment { lo: mid, hi: worst.hi, value: v2, error: e2 });
    }
}

fn totals(heap: &BinaryHeap<Segment>, frozen: &[Segment]) -> (f64, f64) {
    heap.iter()
        .chain(frozen.iter())
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

fn eval<F: FnMut(f64) -> Result<f64> + ?Sized>(f: &mut F, x: f64) -> Result<f64> {
    let v = f(x)?;
    if v.is_nan() || v.is_infinite() {
        return Err(Error::NonIntegrable(format!("integrand is {v} at x = {x}")));
    }
    Ok(v)
}

// QUADPACK qk21 with its error rescaling
fn kronrod21<F: FnMut(f64) -> Result<f64> + ?Sized>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for (j, wg) in WG.iter().enumerate() {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += wg * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        // K21 integrates degree ≤ 31 exactly, the embedded G10 degree ≤ 19
        for k in 0..=31 {
            let (v, _) = kronrod21(&mut |x: f64| Ok(x.powi(k)), -1.0, 1.0).unwrap();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-15, "degree {k}: {v} vs {exact}");
        }
        let gauss: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_relative_eq!(gauss, 2.0, max_relative = 1e-15);
        let kronrod: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert_relative_eq!(kronrod, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn exponential_on_half_line() {
        let r = integrate(|x| (-x).exp(), Domain::upper_half(0.0), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-12);
        assert!(r.evaluations > 0);
        let r = integrate(|b| b * (-2.0 * b).exp(), Domain::upper_half(0.0), 1e-12).unwrap();
        assert!((r.value - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn inverse_square_root_singularity() {
        let r = integrate(|x| (-x).exp() / x.sqrt(), Domain::upper_half(0.0), 1e-10).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() <= 1e-10, "{r:?}");
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let r = integrate(|x| x, Domain::finite(1.0, 0.0), 1e-12).unwrap();
        assert_relative_eq!(r.value, -0.5, max_relative = 1e-14);
        assert_eq!(integrate(|x| x, Domain::finite(2.0, 2.0), 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn nan_integrand_is_reported() {
        let r = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, Domain::finite(0.0, 1.0), 1e-10);
        assert!(matches!(r, Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn budget_exhaustion_is_non_convergence() {
        let cfg = QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_evaluations: 200,
        };
        let r = integrate_with(|x: f64| Ok((1.0 / x).sin() / x.sqrt()), Domain::finite(0.0, 1.0), &cfg);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn two_dimensional_gaussian_box() {
        let f = |p: &[f64]| Ok((-0.5 * (p[0] * p[0] + p[1] * p[1])).exp());
        let r = integrate_box(f, &[Domain::real(), Domain::real()], &QuadConfig::relative(1e-11)).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::TAU, max_relative = 1e-10);
    }
}
