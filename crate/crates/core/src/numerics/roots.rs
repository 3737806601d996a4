//! Bracketed scalar root finding (Brent's safeguarded bisection/secant/inverse
//! quadratic interpolation).

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("bracket needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Bracket { lo, hi })
    }
}

const MAX_ITERATIONS: usize = 500;

/// Root of `f` inside `bracket`, located to within `tol` (absolute, in x).
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    find_root_with(|x| Ok(f(x)), bracket, tol)
}

pub fn find_root_with<F>(mut f: F, bracket: Bracket, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("root tolerance must be positive, got {tol}")));
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::NonConvergence {
                what: "root finder (function returned NaN)".into(),
                estimate: b,
                error: (c - b).abs(),
                evaluations: 0,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "root finder".into(),
        estimate: b,
        error: (c - b).abs(),
        evaluations: MAX_ITERATIONS,
    })
}

/// Grows `[lo, hi]` geometrically on the positive half-line until `f` changes
/// sign, for functions that are monotone in x > 0.
pub fn bracket_positive<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("positive bracket needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for _ in 0..400 {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Bracket::new(lo, hi);
        }
        // expand toward the side whose value is closer to zero
        if flo.abs() < fhi.abs() {
            hi = lo;
            fhi = flo;
            lo *= 0.5;
            flo = f(lo)?;
        } else {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = f(hi)?;
        }
        if lo < f64::MIN_POSITIVE || !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoSignChange { lo, hi })
}
