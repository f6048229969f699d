//! Regularized incomplete gamma functions, with a log-space upper tail.

use libm::lgamma as ln_gamma;

const EPS: f64 = 1e-17;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 1000;

fn ln_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

/// Series for P(a, x); converges quickly for x < a + 1.
fn series_p(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (ln_prefactor(a, x) + sum.ln()).exp()
}

/// Modified Lentz continued fraction for ln Q(a, x); used for x >= a + 1.
fn ln_cf_q(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    ln_prefactor(a, x) + h.ln()
}

/// Upper regularized incomplete gamma Q(a, x) for a > 0, x >= 0.
pub(crate) fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - series_p(a, x)
    } else {
        ln_cf_q(a, x).exp()
    }
}

/// ln Q(a, x), finite far below the smallest representable Q.
pub(crate) fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        (-series_p(a, x)).ln_1p()
    } else {
        ln_cf_q(a, x)
    }
}
