//! Bracketing root finders shared by the quantile, inverse and calibration
//! routines.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method on `[a, b]`; `f(a)` and `f(b)` must differ in sign.
///
/// Terminates when the bracket is narrower than `xtol` (absolute) plus a
/// few ulps of the current iterate.
pub(crate) fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Solver(format!(
            "root not bracketed on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Solver(format!("function returned NaN at {b}")));
        }
    }
    Err(Error::Solver("Brent iteration limit reached".into()))
}

/// Move `hi` outward (`hi <- lo + 2 (hi - lo)`) until `f(hi)` has the opposite
/// sign of `f(lo)`. Returns the final bracket.
pub(crate) fn expand_upper<F>(mut f: F, lo: f64, mut hi: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let flo = f(lo);
    for _ in 0..max_steps {
        let fhi = f(hi);
        if fhi.signum() != flo.signum() || fhi == 0.0 {
            return Ok((lo, hi));
        }
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Solver(format!(
        "could not bracket a root above {lo} after {max_steps} expansions"
    )))
}

/// Expand a bracket symmetrically in both directions around `[lo, hi]` until
/// the signs at its ends differ. Suitable for monotone functions on the
/// whole real line.
pub(crate) fn expand_both<F>(mut f: F, mut lo: f64, mut hi: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..max_steps {
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if flo.abs() < fhi.abs() {
            lo -= width;
        } else {
            hi += width;
        }
    }
    Err(Error::Solver(format!(
        "could not bracket a root after {max_steps} expansions"
    )))
}
